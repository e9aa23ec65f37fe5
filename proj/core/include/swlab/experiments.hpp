#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "swlab/fiber.hpp"
#include "swlab/potential.hpp"

namespace swlab {

struct ExperimentSpec {
  std::string name;
  FourierPotential potential;  // already scaled by lambda
  double lambda = 1.0;
  double alpha = 0.0;
  std::vector<int> n_list;
  double t_max = 8.0;  // negative value scans t in [t_max, 0)
  PropagatorConfig cfg;
  int k_grid = 17;
  double epsilon = 0.2;
  bool auto_truncation = true;  // derive N per site from the spec default
};

/// Measured sup over sampled (t, k) of the fiber row norm
/// ||P_n (U(t) - U_0(t))|| for one site n.
struct DeviationReport {
  int n = 0;
  double t = 0.0;        // argmax over the sample grid
  double dev_norm = 0.0;
  double err = 0.0;      // integrator + truncation budget at the sup cell
  int k_samples = 0;
  bool valid = true;
  bool converged = true;  // k-grid refinement moved the sup by < 5%
};

/// One (n, k, t) propagation cell; rows of the CSV contract.
struct CellRecord {
  std::string experiment;
  int n = 0;
  double k = 0.0;
  double t = 0.0;
  double window_prob = 0.0;
  double dev_norm = 0.0;
  double err = 0.0;
  double leak = 0.0;
  bool valid = true;
};

struct ScanResult {
  std::vector<DeviationReport> reports;
  std::vector<CellRecord> cells;
};

/// Sample grid for sup over t: multiples of 1/4 aligned with crossing
/// midpoints and edges, optionally refined.
std::vector<double> sup_time_grid(double t_max, int refine = 1);

ScanResult deviation_scan(const ExperimentSpec& spec, int threads = 1);

struct FitResult {
  double exponent = 0.0;
  double ci = 0.0;  // bootstrap confidence half-width
};

struct DegenerateFitError : ToleranceError {
  using ToleranceError::ToleranceError;
};

/// Least-squares slope of log(dev_norm) vs log(n) with a bootstrap
/// confidence half-width. Needs >= 5 distinct valid n.
FitResult decay_exponent_fit(const std::vector<DeviationReport>& reports,
                             std::uint64_t seed = 1);

inline constexpr int kNoSiteFound = std::numeric_limits<int>::min();

struct PersistenceResult {
  int n = kNoSiteFound;
  std::vector<CellRecord> cells;
};

/// Smallest n in n_list whose window mass min over sampled (t, k) stays
/// >= 1 - epsilon when started as the unit vector at n.
PersistenceResult acceleration_persistence(const ExperimentSpec& spec,
                                           double epsilon, int threads = 1);

struct ProbeReport {
  int n = 0;
  bool decaying = false;
  bool inconclusive = false;
  std::vector<double> masses;  // ||P_n U(t) psi||^2 on the t grid, k-averaged
};

/// Tracks window masses of a fiber ensemble (one state per k-grid point) on
/// a geometric time grid; "decaying" is the finite-horizon heuristic: last
/// value below half the max and decreasing envelope over the final three
/// samples.
std::vector<ProbeReport> bound_state_probe(const std::vector<FiberState>& psi0,
                                           const ExperimentSpec& spec,
                                           std::vector<double>* t_grid_out =
                                               nullptr);

}  // namespace swlab
