#pragma once

#include <cmath>
#include <vector>

#include "swlab/fiber.hpp"
#include "swlab/potential.hpp"

namespace swlab {

/// Instantaneous band energy (n + k + t)^2.
inline double band_energy(int n, double k, double t) {
  double a = n + k + t;
  return a * a;
}

/// Free phase int_s^t (n+k+tau)^2 dtau evaluated in the cancellation-safe
/// expanded form d*(a^2 + a*d + d^2/3) with a = n+k+s, d = t-s.
inline double free_phase(int n, double k, double s, double t) {
  // extended precision: the phase reaches ~1e4 for |n| ~ 64 and callers
  // compare phases at the 1e-12 level
  long double a = n + static_cast<long double>(k) + s;
  long double d = static_cast<long double>(t) - s;
  return static_cast<double>(d * (a * a + a * d + d * d / 3.0L));
}

/// Free phase reduced mod 2pi in extended precision. A raw double phase of
/// magnitude ~1e4 carries ~2e-12 quantization; reducing before the complex
/// exponential keeps the unitary accurate to rounding.
inline double free_phase_mod2pi(int n, double k, double s, double t) {
  long double a = n + static_cast<long double>(k) + s;
  long double d = static_cast<long double>(t) - s;
  long double phi = d * (a * a + a * d + d * d / 3.0L);
  constexpr long double two_pi = 6.283185307179586476925286766559L;
  return static_cast<double>(std::fmod(phi, two_pi));
}

/// Phase difference Phi_n - Phi_m over [t0, t], expanded analytically:
/// (n-m) * (t-t0) * (n+m+2k+t+t0).
inline double free_phase_diff(int n, int m, double k, double t0, double t) {
  return static_cast<double>(n - m) * (t - t0) * (n + m + 2.0 * k + t + t0);
}

/// Evolve `state` from its own time to t1 (either direction) by the
/// two-parameter propagator of H(t) = (n+k+t)^2 + convolution(V).
/// Zero potential is special-cased to the exact diagonal phases.
/// Throws LeakageError / StepUnderflowError.
FiberState propagate(const FiberState& state, double t1,
                     const FourierPotential& pot, const PropagatorConfig& cfg,
                     PropagationStats* stats = nullptr);

/// Row n of the matrix of U(t, 0) on the truncated fiber at quasimomentum k,
/// computed as conj(U(0, t) e_n) through a time-shifted k=0 propagation
/// (fiber covariance U^k(t,s) = U^0(t+k, s+k)). Indexed by source site
/// m + N. Requires |n| <= N - B.
std::vector<cplx> propagator_row(int n, double t, const FourierPotential& pot,
                                 const PropagatorConfig& cfg, double k,
                                 PropagationStats* stats = nullptr);

/// l2 distance of `row` from the free row (single phase at m = n).
double deviation_from_free_row(const std::vector<cplx>& row, int n, double k,
                               double t);

/// Time reversal T psi(n) = conj(psi(-n)); maps fiber k to 1-k (k=0 fixed).
FiberState time_reverse(const FiberState& state);

}  // namespace swlab
