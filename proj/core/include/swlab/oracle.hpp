#pragma once

#include "swlab/fiber.hpp"
#include "swlab/potential.hpp"

namespace swlab {

/// Brute-force reference propagator: one exact unitary exponential of the
/// midpoint Hamiltonian per fixed step. Intentionally slow and simple.
struct DenseConfig {
  int half_width = 64;  // N <= 128
  double step = 1e-3;   // h > 0; last step shortened
};

FiberState dense_propagate(const FiberState& state, double t1,
                           const FourierPotential& pot, const DenseConfig& dc);

}  // namespace swlab
