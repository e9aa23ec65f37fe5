#include "swlab/potential.hpp"

#include <cmath>
#include <cstdlib>

#include "swlab/fiber.hpp"

namespace swlab {

namespace {

constexpr double kSymTol = 1e-12;

void insert_nonzero(std::map<int, cplx>& dst, int m, cplx v) {
  if (v != cplx(0.0, 0.0)) dst[m] = v;
}

}  // namespace

FourierPotential FourierPotential::from_positive_coeffs(
    const std::map<int, cplx>& pos) {
  std::map<int, cplx> full;
  for (const auto& [m, v] : pos) {
    if (m == 0) {
      throw PotentialError(
          "potential: constant coefficient (m=0) is not allowed; the model "
          "normalizes c(0) = 0");
    }
    if (m < 0) {
      throw PotentialError(
          "potential: from_positive_coeffs expects frequencies m > 0");
    }
    insert_nonzero(full, m, v);
    insert_nonzero(full, -m, std::conj(v));
  }
  return unchecked(full);
}

FourierPotential FourierPotential::from_full_coeffs(
    const std::map<int, cplx>& all) {
  FourierPotential p;
  double offset = 0.0;
  for (const auto& [m, v] : all) {
    if (m == 0) {
      if (std::abs(v.imag()) > kSymTol) {
        throw PotentialError(
            "potential: mean coefficient c(0) must be real for a real "
            "potential");
      }
      offset = v.real() / kSqrt2Pi;  // constant in real space
      continue;
    }
    insert_nonzero(p.coeffs_, m, v);
  }
  p.removed_offset_ = offset;
  for (const auto& [m, v] : p.coeffs_) {
    p.bandwidth_ = std::max(p.bandwidth_, std::abs(m));
    auto it = p.coeffs_.find(-m);
    cplx mirror = (it == p.coeffs_.end()) ? cplx(0.0, 0.0) : it->second;
    if (std::abs(mirror - std::conj(v)) >
        kSymTol * std::max(1.0, std::abs(v))) {
      throw PotentialError(
          "potential: Hermitian symmetry violated, c(-m) != conj(c(m)) at m=" +
          std::to_string(m));
    }
  }
  return p;
}

FourierPotential FourierPotential::unchecked(const std::map<int, cplx>& all) {
  FourierPotential p;
  for (const auto& [m, v] : all) {
    insert_nonzero(p.coeffs_, m, v);
    if (v != cplx(0.0, 0.0)) p.bandwidth_ = std::max(p.bandwidth_, std::abs(m));
  }
  return p;
}

cplx FourierPotential::coeff(int m) const {
  auto it = coeffs_.find(m);
  return it == coeffs_.end() ? cplx(0.0, 0.0) : it->second;
}

FourierPotential FourierPotential::scaled(double lambda) const {
  FourierPotential p;
  for (const auto& [m, v] : coeffs_) insert_nonzero(p.coeffs_, m, lambda * v);
  p.bandwidth_ = p.coeffs_.empty() ? 0 : bandwidth_;
  p.removed_offset_ = lambda * removed_offset_;
  return p;
}

void FourierPotential::validate() const {
  for (const auto& [m, v] : coeffs_) {
    if (m == 0 && std::abs(v) > kSymTol) {
      throw PotentialError("potential: c(0) must vanish after normalization");
    }
    auto it = coeffs_.find(-m);
    cplx mirror = (it == coeffs_.end()) ? cplx(0.0, 0.0) : it->second;
    if (std::abs(mirror - std::conj(v)) >
        kSymTol * std::max(1.0, std::abs(v))) {
      throw PotentialError(
          "potential: Hermitian symmetry violated, c(-m) != conj(c(m)) at m=" +
          std::to_string(m));
    }
  }
}

double sobolev_norm(const FourierPotential& pot, double alpha) {
  if (alpha < 0.0) throw PotentialError("sobolev_norm: alpha must be >= 0");
  KahanSum s;
  for (const auto& [m, v] : pot.coeffs()) {
    double m2 = static_cast<double>(m) * m;
    s.add(std::norm(v) * std::pow(1.0 + m2, alpha));
  }
  return std::sqrt(s.value());
}

double sample_real_space(const FourierPotential& pot, double x) {
  KahanSum s;
  for (const auto& [m, v] : pot.coeffs()) {
    // conj-symmetric pairs combine to a real value; keep the real part
    s.add((v * std::polar(1.0, m * x)).real());
  }
  return s.value() / kSqrt2Pi;
}

FourierPotential coefficients_from_samples(const std::vector<double>& samples,
                                           int bandwidth) {
  const int g = static_cast<int>(samples.size());
  if (bandwidth < 0) throw PotentialError("samples: bandwidth must be >= 0");
  if (g < 2 * bandwidth + 1) {
    throw PotentialError(
        "samples: requested bandwidth " + std::to_string(bandwidth) +
        " exceeds the Nyquist limit of a " + std::to_string(g) +
        "-point grid (aliasing)");
  }
  std::map<int, cplx> raw;
  double offset = 0.0;
  double cmax = 0.0;
  for (int m = -bandwidth; m <= bandwidth; ++m) {
    KahanSum re, im;
    for (int j = 0; j < g; ++j) {
      double ang = -kTwoPi * m * j / g;
      re.add(samples[static_cast<std::size_t>(j)] * std::cos(ang));
      im.add(samples[static_cast<std::size_t>(j)] * std::sin(ang));
    }
    cplx c = kSqrt2Pi / g * cplx(re.value(), im.value());
    if (m == 0) {
      offset = c.real() / kSqrt2Pi;
    } else {
      raw[m] = c;
      cmax = std::max(cmax, std::abs(c));
    }
  }
  // prune rounding noise so pure harmonics keep an exact finite bandwidth
  std::map<int, cplx> full;
  const double prune = std::max(1e-14, 1e-12 * cmax);
  for (const auto& [m, v] : raw) {
    if (std::abs(v) > prune) full[m] = v;
  }
  // symmetrize exactly (real input guarantees it to rounding)
  std::map<int, cplx> sym;
  for (const auto& [m, v] : full) {
    if (m < 0) continue;
    cplx avg = 0.5 * (v + std::conj(full.count(-m) ? full[-m] : cplx(0, 0)));
    sym[m] = avg;
    sym[-m] = std::conj(avg);
  }
  std::map<int, cplx> with_mean = sym;
  with_mean[0] = cplx(offset * kSqrt2Pi, 0.0);
  return FourierPotential::from_full_coeffs(with_mean);
}

FiberState apply_convolution(const FourierPotential& pot,
                             const FiberState& state, int buffer,
                             double* leakage_out) {
  const int bw = pot.bandwidth();
  if (bw > buffer) {
    throw TruncationError(
        "apply_convolution: potential bandwidth " + std::to_string(bw) +
        " exceeds buffer width " + std::to_string(buffer));
  }
  const int N = state.half_width();
  FiberState out(state.k(), N, state.t());
  KahanSum leak;
  for (int m = -N; m <= N; ++m) {
    const cplx psi = state.at(m);
    if (psi == cplx(0.0, 0.0)) continue;
    for (const auto& [d, v] : pot.coeffs()) {
      const int n = m + d;
      const cplx contrib = v * psi / kSqrt2Pi;
      if (n >= -N && n <= N) {
        out.at(n) += contrib;
      } else {
        leak.add(std::norm(contrib));
      }
    }
  }
  if (leakage_out) *leakage_out = leak.value();
  return out;
}

double FiberState::norm() const { return std::sqrt(norm_sq()); }

double FiberState::buffer_mass(int buffer) const {
  KahanSum s;
  for (int n = half_width_ - buffer + 1; n <= half_width_; ++n) {
    s.add(std::norm(at(n)));
    s.add(std::norm(at(-n)));
  }
  return s.value();
}

}  // namespace swlab
