#pragma once

#include <map>
#include <vector>

#include "swlab/common.hpp"

namespace swlab {

class FiberState;

/// 2pi-periodic real potential represented by finitely many Fourier
/// coefficients, convention V(x) = (1/sqrt(2pi)) sum_m c(m) e^{imx}.
/// Invariants: c(-m) == conj(c(m)), c(0) == 0.
class FourierPotential {
 public:
  FourierPotential() = default;

  /// Build from coefficients for m > 0; negative frequencies are filled by
  /// Hermitian symmetry. A constant term (m == 0) is rejected here.
  static FourierPotential from_positive_coeffs(const std::map<int, cplx>& pos);

  /// Build from a full coefficient map. Validates Hermitian symmetry; a
  /// nonzero mean coefficient is subtracted and remembered as offset.
  static FourierPotential from_full_coeffs(const std::map<int, cplx>& all);

  /// Test hook: bypasses all invariant checks.
  static FourierPotential unchecked(const std::map<int, cplx>& all);

  const std::map<int, cplx>& coeffs() const { return coeffs_; }
  cplx coeff(int m) const;
  int bandwidth() const { return bandwidth_; }
  bool empty() const { return coeffs_.empty(); }
  /// Constant subtracted when the input had a nonzero mean.
  double removed_offset() const { return removed_offset_; }

  FourierPotential scaled(double lambda) const;

  /// Throws PotentialError naming the violated invariant.
  void validate() const;

 private:
  std::map<int, cplx> coeffs_;  // only nonzero entries, never m == 0
  int bandwidth_ = 0;
  double removed_offset_ = 0.0;
};

struct PotentialError : ConfigError {
  using ConfigError::ConfigError;
};

/// sqrt(sum_m |c(m)|^2 (1+m^2)^alpha); monotone nondecreasing in alpha.
double sobolev_norm(const FourierPotential& pot, double alpha);

/// V(x) = (1/sqrt(2pi)) sum_m c(m) e^{imx}, real by symmetry.
double sample_real_space(const FourierPotential& pot, double x);

/// Discrete Fourier coefficients of real samples on a uniform grid over
/// [0, 2pi), scaled to the convention above. c(0) is forced to zero; the
/// subtracted constant is available via removed_offset(). Throws on
/// aliasing (bandwidth beyond the grid Nyquist limit).
FourierPotential coefficients_from_samples(const std::vector<double>& samples,
                                           int bandwidth);

/// (Vpsi)(n) = (1/sqrt(2pi)) sum_m c(n-m) psi(m), truncated to the site
/// range of `state`; mass pushed outside the range is reported in
/// *leakage_out when given. Throws TruncationError if the potential
/// bandwidth exceeds the state's buffer width.
FiberState apply_convolution(const FourierPotential& pot,
                             const FiberState& state, int buffer,
                             double* leakage_out = nullptr);

}  // namespace swlab
