#pragma once

#include <Eigen/Dense>
#include <vector>

#include "swlab/fiber.hpp"
#include "swlab/potential.hpp"

namespace swlab {

/// One degeneracy E_n(l/2) = E_{-n-l}(l/2) inside the interval
/// I_l = l/2 + [-1/4, 1/4).
struct CrossingEvent {
  int l = 0;
  double t_star = 0.0;       // l/2
  int n = 0;
  int partner = 0;           // -n-l
  cplx coupling;             // c(2n+l)/sqrt(2pi)
  double curvature = 0.0;    // 2*(2n+l), second derivative of the phase
};

/// Events for l = 0..floor(2*t_max) with 2n+l > 0 (self-crossings skipped),
/// sorted by t_star. Requires n >= 0; negative n is handled upstream by
/// time reversal.
std::vector<CrossingEvent> crossing_schedule(int n, double t_max,
                                             const FourierPotential& pot);

struct PhaseInfo {
  double value;  // (2n+l)(t^2 - l t)
  double d1;     // (2n+l)(2t - l)
  double d2;     // 2(2n+l)
};

/// phi(t) = int_0^t (E_n - E_{-n-l}); stationary at t = l/2.
PhaseInfo phase_function(int n, int l, double t);

/// Leading-order (single Dyson term) transition magnitude at the crossing:
/// |coupling| * sqrt(2pi/|curvature|) = |c(2n+l)| / sqrt(2(2n+l)).
double stationary_phase_amplitude(const CrossingEvent& event);

/// Two-level reduction of the crossing: integrates
/// i x' = [[E_n(t), v], [conj v, E_partner(t)]] x, x(t_a) = (1, 0),
/// and returns the off-level amplitude x2(t_b) (free phases referenced to
/// t_a). |x1|^2 + |x2|^2 is conserved within tol.
cplx two_level_oracle(const CrossingEvent& event, double t_a, double t_b,
                      double tol);

/// Reduced resolvent diagonal 1/((m-n)(m+n+2t)) off the crossing pair,
/// zero on it. Throws if any admissible denominator is below 1e-9 in
/// magnitude (cannot happen for t in I_l).
Eigen::VectorXcd reduced_resolvent_diagonal(int n, int l, double t,
                                            int half_width);

/// Twiddle operation A~_l = P_n A R^_l(t); the result has a single nonzero
/// row (row n). A is indexed by site + N on the truncated fiber.
Eigen::MatrixXcd twiddle_apply(const Eigen::MatrixXcd& A, int n, int l,
                               double t);

/// Evaluates both sides of the double-integration-by-parts identity on a
/// seeded random state over [l/2 - 1/4, l/2 + 1/4] and returns the norm of
/// the difference. All propagators evaluated densely at quadrature nodes.
/// `panels` = 0 picks refinement automatically from quad_tol.
double ibp_residual(int n, int l, const FourierPotential& pot,
                    const PropagatorConfig& cfg, double quad_tol,
                    int panels = 0, unsigned seed = 12345);

struct BackscatterSum {
  double raw = 0.0;        // sum_p |c(p)|^2 / (p (p + 2n + 2t))
  double symmetric = 0.0;  // via the even-in-p part |c(p)|^2 / (p^2 - s^2)
};

/// Second-order return sum P_n V R^_l V P_n with p in supp c, excluding
/// {0, +-(2n+l)}. The two routes agree to rounding because the support is
/// Hermitian-symmetric.
BackscatterSum backscatter_symmetric_part(int n, int l, double t,
                                          const FourierPotential& pot);

/// Dense convolution matrix c(i-j)/sqrt(2pi) on sites [-N, N].
Eigen::MatrixXcd convolution_matrix(const FourierPotential& pot,
                                    int half_width);

}  // namespace swlab
