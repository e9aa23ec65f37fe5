#include <doctest.h>

#include <cmath>
#include <random>

#include "swlab/potential.hpp"
#include "swlab/fiber.hpp"

using namespace swlab;

namespace {

FourierPotential two_cos() {
  // V = 2 cos x
  return FourierPotential::from_positive_coeffs({{1, cplx(kSqrt2Pi, 0.0)}});
}

}  // namespace

TEST_CASE("sobolev norm closed forms") {
  const FourierPotential p = two_cos();
  CHECK(sobolev_norm(p, 0.0) == doctest::Approx(std::sqrt(4.0 * M_PI)).epsilon(1e-14));
  CHECK(sobolev_norm(p, 1.0) == doctest::Approx(std::sqrt(8.0 * M_PI)).epsilon(1e-14));
  CHECK(sobolev_norm(FourierPotential(), 3.0) == 0.0);
}

TEST_CASE("sobolev norm monotone in alpha") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::map<int, cplx> pos;
  for (int m = 1; m <= 5; ++m) pos[m] = cplx(g(rng), g(rng));
  const FourierPotential p = FourierPotential::from_positive_coeffs(pos);
  double prev = sobolev_norm(p, 0.0);
  for (double a : {0.5, 1.0, 2.0, 3.5}) {
    const double cur = sobolev_norm(p, a);
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("hermitian symmetry is enforced") {
  std::map<int, cplx> bad;
  bad[1] = cplx(1.0, 0.5);
  bad[-1] = cplx(1.0, 0.5);  // should be the conjugate
  CHECK_THROWS_AS(FourierPotential::from_full_coeffs(bad), PotentialError);
  CHECK_THROWS_AS(FourierPotential::unchecked(bad).validate(), PotentialError);
  two_cos().validate();  // no throw
}

TEST_CASE("constant term is subtracted and remembered") {
  std::map<int, cplx> all;
  all[0] = cplx(1.75, 0.0);
  all[1] = cplx(0.5, 0.25);
  all[-1] = cplx(0.5, -0.25);
  const FourierPotential p = FourierPotential::from_full_coeffs(all);
  CHECK(p.coeff(0) == cplx(0.0, 0.0));
  // offset reported in real-space units: c(0)/sqrt(2pi)
  CHECK(p.removed_offset() == doctest::Approx(1.75 / kSqrt2Pi));
  CHECK(p.bandwidth() == 1);
  CHECK_THROWS_AS(FourierPotential::from_positive_coeffs({{0, cplx(1.0, 0.0)}}),
                  PotentialError);
}

TEST_CASE("sample_real_space basics") {
  const FourierPotential p = two_cos();
  CHECK(sample_real_space(p, 0.0) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(std::abs(sample_real_space(p, M_PI / 2)) < 1e-12);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  for (int i = 0; i < 10; ++i) {
    const double x = u(rng);
    CHECK(sample_real_space(p, x) ==
          doctest::Approx(sample_real_space(p, x + kTwoPi)).epsilon(1e-12));
  }
}

TEST_CASE("coefficients_from_samples on pure harmonics") {
  const int M = 64;
  std::vector<double> samples(M);
  for (int i = 0; i < M; ++i) samples[i] = 2.0 * std::cos(kTwoPi * i / M);
  const FourierPotential p = coefficients_from_samples(samples, 4);
  CHECK(std::abs(p.coeff(1) - cplx(kSqrt2Pi, 0.0)) < 1e-10);
  CHECK(std::abs(p.coeff(-1) - cplx(kSqrt2Pi, 0.0)) < 1e-10);
  for (int m : {2, 3, 4}) CHECK(std::abs(p.coeff(m)) < 1e-10);
}

TEST_CASE("coefficients_from_samples constant input") {
  std::vector<double> samples(32, 3.25);
  const FourierPotential p = coefficients_from_samples(samples, 2);
  CHECK(p.empty());
  CHECK(p.removed_offset() == doctest::Approx(3.25));
}

TEST_CASE("coefficients_from_samples mixed harmonics and linearity") {
  const int M = 64;
  std::vector<double> samples(M);
  for (int i = 0; i < M; ++i) {
    const double x = kTwoPi * i / M;
    samples[i] = 2.0 * std::cos(x) + std::cos(2.0 * x);
  }
  const FourierPotential p = coefficients_from_samples(samples, 3);
  CHECK(std::abs(p.coeff(1) - cplx(kSqrt2Pi, 0.0)) < 1e-10);
  CHECK(std::abs(p.coeff(2) - cplx(0.5 * kSqrt2Pi, 0.0)) < 1e-10);
}

TEST_CASE("coefficients_from_samples round trip") {
  const int M = 48;
  std::vector<double> samples(M);
  for (int i = 0; i < M; ++i) {
    const double x = kTwoPi * i / M;
    samples[i] = 0.7 * std::cos(x) - 0.3 * std::sin(2.0 * x) + 0.1 * std::cos(3.0 * x);
  }
  const FourierPotential p = coefficients_from_samples(samples, 4);
  for (int i = 0; i < M; ++i) {
    CHECK(sample_real_space(p, kTwoPi * i / M) ==
          doctest::Approx(samples[i]).epsilon(1e-10));
  }
}

TEST_CASE("coefficients_from_samples aliasing guard") {
  std::vector<double> samples(8, 0.0);
  CHECK_THROWS(coefficients_from_samples(samples, 5));
}

TEST_CASE("apply_convolution shifts by the kernel") {
  const FourierPotential p = two_cos();
  FiberState psi = FiberState::unit(0.0, 8, 0);
  const FiberState out = apply_convolution(p, psi, 2);
  CHECK(std::abs(out.at(1) - cplx(1.0, 0.0)) < 1e-14);
  CHECK(std::abs(out.at(-1) - cplx(1.0, 0.0)) < 1e-14);
  for (int m = -8; m <= 8; ++m) {
    if (m == 1 || m == -1) continue;
    CHECK(std::abs(out.at(m)) == 0.0);
  }

  // shifted kernel for a two-band potential
  std::map<int, cplx> pos{{1, cplx(0.4, 0.1)}, {2, cplx(-0.2, 0.3)}};
  const FourierPotential q = FourierPotential::from_positive_coeffs(pos);
  FiberState phi = FiberState::unit(0.0, 10, 3);
  const FiberState o2 = apply_convolution(q, phi, 3);
  for (int m : {-2, -1, 1, 2}) {
    CHECK(std::abs(o2.at(3 + m) - q.coeff(m) / kSqrt2Pi) < 1e-14);
  }
}

TEST_CASE("apply_convolution zero potential and truncation guard") {
  FiberState psi = FiberState::unit(0.0, 6, 1);
  const FiberState out = apply_convolution(FourierPotential(), psi, 2);
  CHECK(out.norm() == 0.0);

  std::map<int, cplx> pos{{3, cplx(1.0, 0.0)}};
  const FourierPotential wide = FourierPotential::from_positive_coeffs(pos);
  CHECK_THROWS_AS(apply_convolution(wide, psi, 2), TruncationError);
}

TEST_CASE("apply_convolution reports leakage") {
  const FourierPotential p = two_cos();
  FiberState edge = FiberState::unit(0.0, 4, 4);
  double leak = 0.0;
  apply_convolution(p, edge, 4, &leak);
  CHECK(leak == doctest::Approx(1.0).epsilon(1e-13));  // mass pushed to site 5
}

TEST_CASE("convolution row norm equals ||V||_0 / sqrt(2pi)") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    std::map<int, cplx> pos;
    for (int m = 1; m <= 3; ++m) pos[m] = cplx(g(rng), g(rng));
    const FourierPotential p = FourierPotential::from_positive_coeffs(pos);
    const double expect = sobolev_norm(p, 0.0) / kSqrt2Pi;
    FiberState psi = FiberState::unit(0.0, 16, 0);
    const FiberState out = apply_convolution(p, psi, 4);
    CHECK(out.norm() == doctest::Approx(expect).epsilon(1e-12));
    CHECK(out.norm() <= sobolev_norm(p, 0.0));
  }
}

TEST_CASE("apply_convolution is linear and Hermitian") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g;
  std::map<int, cplx> pos{{1, cplx(g(rng), g(rng))}, {2, cplx(g(rng), g(rng))}};
  const FourierPotential p = FourierPotential::from_positive_coeffs(pos);

  const int N = 20, B = 4;
  FiberState a(0.0, N), b(0.0, N);
  for (int m = -N + 2 * B; m <= N - 2 * B; ++m) {
    a.at(m) = cplx(g(rng), g(rng));
    b.at(m) = cplx(g(rng), g(rng));
  }
  const FiberState va = apply_convolution(p, a, B);
  const FiberState vb = apply_convolution(p, b, B);

  cplx lhs(0, 0), rhs(0, 0);
  for (int m = -N; m <= N; ++m) {
    lhs += std::conj(a.at(m)) * vb.at(m);
    rhs += std::conj(va.at(m)) * b.at(m);
  }
  CHECK(std::abs(lhs - rhs) < 1e-12);

  // linearity
  FiberState sum(0.0, N);
  for (int m = -N; m <= N; ++m) sum.at(m) = 2.0 * a.at(m) + cplx(0, 1) * b.at(m);
  const FiberState vs = apply_convolution(p, sum, B);
  for (int m = -N; m <= N; ++m) {
    CHECK(std::abs(vs.at(m) - (2.0 * va.at(m) + cplx(0, 1) * vb.at(m))) < 1e-13);
  }
}

TEST_CASE("scaled potential") {
  const FourierPotential p = two_cos().scaled(0.25);
  CHECK(std::abs(p.coeff(1) - cplx(0.25 * kSqrt2Pi, 0.0)) < 1e-14);
  CHECK(sobolev_norm(p, 0.0) == doctest::Approx(0.25 * std::sqrt(4.0 * M_PI)));
}
