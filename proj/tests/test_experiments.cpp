#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "swlab/experiments.hpp"
#include "swlab/propagate.hpp"

using namespace swlab;

namespace {

FourierPotential cos_pot(double lambda) {
  return FourierPotential::from_positive_coeffs(
      {{1, cplx(lambda * kSqrt2Pi, 0.0)}});
}

ExperimentSpec base_spec(double lambda) {
  ExperimentSpec spec;
  spec.name = "test";
  spec.potential = cos_pot(lambda);
  spec.lambda = lambda;
  spec.t_max = 4.0;
  spec.k_grid = 5;
  spec.cfg.tol = 1e-8;
  spec.cfg.buffer = 4;
  return spec;
}

}  // namespace

TEST_CASE("sup time grid aligns with crossing midpoints and edges") {
  const auto g = sup_time_grid(2.0);
  CHECK(!g.empty());
  CHECK(g.front() > 0.0);
  CHECK(g.back() == doctest::Approx(2.0));
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(std::abs(g[i] * 4.0 - std::round(g[i] * 4.0)) < 1e-12);
    if (i > 0) CHECK(g[i] > g[i - 1]);
  }
  const auto neg = sup_time_grid(-2.0);
  CHECK(neg.back() == doctest::Approx(-2.0));
  for (double t : neg) CHECK(t < 0.0);
}

TEST_CASE("deviation scan: zero potential stays at the error floor") {
  ExperimentSpec spec = base_spec(0.0);
  spec.potential = FourierPotential();
  spec.n_list = {2, 4};
  const ScanResult r = deviation_scan(spec);
  REQUIRE(r.reports.size() == 2);
  for (const auto& rep : r.reports) {
    CHECK(rep.valid);
    CHECK(rep.dev_norm <= rep.err + 1e-12);
  }
  for (const auto& c : r.cells) CHECK(c.dev_norm <= c.err + 1e-12);
}

TEST_CASE("deviation scan: monotone trend and report invariants") {
  ExperimentSpec spec = base_spec(0.25);
  spec.n_list = {4, 32};
  const ScanResult r = deviation_scan(spec);
  REQUIRE(r.reports.size() == 2);
  const auto& lo = r.reports[0];
  const auto& hi = r.reports[1];
  CHECK(lo.n == 4);
  CHECK(hi.n == 32);
  CHECK(lo.valid);
  CHECK(hi.valid);
  // theorem-style decay: dev at n=32 strictly below dev at n=4, beyond budgets
  CHECK(hi.dev_norm + hi.err + lo.err < lo.dev_norm);
  for (const auto& rep : r.reports) {
    CHECK(rep.dev_norm >= 0.0);
    CHECK(rep.dev_norm <= 2.0 + rep.err);
    CHECK(rep.k_samples >= spec.k_grid);
  }
}

TEST_CASE("deviation scan: first-order linearity in lambda") {
  ExperimentSpec a = base_spec(0.05);
  ExperimentSpec b = base_spec(0.1);
  a.n_list = b.n_list = {8};
  a.k_grid = b.k_grid = 3;
  const double da = deviation_scan(a).reports[0].dev_norm;
  const double db = deviation_scan(b).reports[0].dev_norm;
  CHECK(da == doctest::Approx(0.5 * db).epsilon(0.2));
}

TEST_CASE("deviation scan is thread-count invariant") {
  ExperimentSpec spec = base_spec(0.2);
  spec.n_list = {3, 5, 7};
  spec.k_grid = 3;
  const ScanResult r1 = deviation_scan(spec, 1);
  const ScanResult r2 = deviation_scan(spec, 3);
  REQUIRE(r1.reports.size() == r2.reports.size());
  for (std::size_t i = 0; i < r1.reports.size(); ++i) {
    CHECK(r1.reports[i].dev_norm == r2.reports[i].dev_norm);
    CHECK(r1.reports[i].t == r2.reports[i].t);
  }
}

TEST_CASE("decay fit: exact power laws") {
  std::vector<DeviationReport> reports;
  for (int n : {4, 6, 8, 12, 16}) {
    DeviationReport r;
    r.n = n;
    r.dev_norm = 3.0 / n;
    r.err = 1e-12;
    reports.push_back(r);
  }
  const FitResult f = decay_exponent_fit(reports);
  CHECK(f.exponent == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(f.ci < 1e-6);

  for (auto& r : reports) r.dev_norm = 0.7;
  const FitResult c = decay_exponent_fit(reports);
  CHECK(c.exponent == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("decay fit: degenerate inputs are rejected") {
  std::vector<DeviationReport> few(3);
  for (int i = 0; i < 3; ++i) {
    few[i].n = 2 + i;
    few[i].dev_norm = 0.1;
    few[i].err = 1e-10;
  }
  CHECK_THROWS_AS(decay_exponent_fit(few), ToleranceError);

  std::vector<DeviationReport> floor(6);
  for (int i = 0; i < 6; ++i) {
    floor[i].n = 2 + i;
    floor[i].dev_norm = 1e-11;  // at the error floor
    floor[i].err = 1e-9;
  }
  CHECK_THROWS_AS(decay_exponent_fit(floor), DegenerateFitError);
}

TEST_CASE("decay fit bootstrap is seed-deterministic") {
  std::vector<DeviationReport> reports;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int n : {4, 6, 8, 12, 16, 24}) {
    DeviationReport r;
    r.n = n;
    r.dev_norm = 2.0 / n * std::exp(0.05 * g(rng));
    r.err = 1e-12;
    reports.push_back(r);
  }
  const FitResult a = decay_exponent_fit(reports, 42);
  const FitResult b = decay_exponent_fit(reports, 42);
  CHECK(a.exponent == b.exponent);
  CHECK(a.ci == b.ci);
  const FitResult c = decay_exponent_fit(reports, 43);
  CHECK(c.exponent == a.exponent);  // point estimate is seed-free
  CHECK(c.ci != a.ci);              // resamples differ
}

TEST_CASE("acceleration persistence: zero potential picks the smallest n") {
  ExperimentSpec spec = base_spec(0.0);
  spec.potential = FourierPotential();
  spec.n_list = {6, 10};
  spec.k_grid = 3;
  const PersistenceResult r = acceleration_persistence(spec, 0.2);
  CHECK(r.n == 6);
}

TEST_CASE("acceleration persistence: epsilon = 0 finds nothing") {
  ExperimentSpec spec = base_spec(0.25);
  spec.n_list = {8, 16};
  spec.k_grid = 3;
  spec.t_max = 2.0;
  const PersistenceResult r = acceleration_persistence(spec, 0.0);
  CHECK(r.n == kNoSiteFound);
}

TEST_CASE("acceleration persistence finds a site at moderate coupling") {
  ExperimentSpec spec = base_spec(0.25);
  spec.n_list = {4, 8};
  spec.k_grid = 3;
  spec.t_max = 3.0;
  const PersistenceResult r = acceleration_persistence(spec, 0.2);
  CHECK(r.n == 4);  // frozen from the recorded scan
}

TEST_CASE("bound state probe: zero potential window masses are constant") {
  ExperimentSpec spec = base_spec(0.0);
  spec.potential = FourierPotential();
  spec.n_list = {5};
  spec.t_max = 4.0;
  std::vector<FiberState> ensemble;
  for (int i = 0; i < 3; ++i) {
    ensemble.push_back(FiberState::unit(i / 3.0, spec.cfg.half_width, 5));
  }
  std::vector<double> ts;
  const auto reports = bound_state_probe(ensemble, spec, &ts);
  REQUIRE(reports.size() == 1);
  CHECK(!reports[0].decaying);
  CHECK(!reports[0].inconclusive);
  REQUIRE(reports[0].masses.size() == ts.size());
  for (double m : reports[0].masses) CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bound state probe: persistent window state is not decaying") {
  ExperimentSpec spec = base_spec(0.1);
  spec.n_list = {12};
  spec.t_max = 4.0;
  spec.cfg.half_width = 48;
  std::vector<FiberState> ensemble;
  for (int i = 0; i < 3; ++i) {
    ensemble.push_back(FiberState::unit(i / 3.0, 48, 12));
  }
  const auto reports = bound_state_probe(ensemble, spec);
  REQUIRE(reports.size() == 1);
  CHECK(!reports[0].decaying);
}

TEST_CASE("window Parseval on the truncated fiber") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> g;
  FiberState s(0.0, 30, 0.0);
  for (int m = -30; m <= 30; ++m) s.at(m) = cplx(g(rng), g(rng));
  KahanSum sum;
  for (int m = -30; m <= 30; ++m) sum.add(std::norm(s.at(m)));
  CHECK(std::abs(sum.value() - s.norm_sq()) < 1e-12 * s.norm_sq());
}

TEST_CASE("tail sum bound sum_l <2n+l>^-beta <= cte <n>^(1-beta)") {
  for (double beta : {1.5, 2.0, 3.0}) {
    double cte = 0.0;
    for (int n = 1; n <= 100; ++n) {
      KahanSum s;
      for (int l = 0; l <= 20000; ++l) {
        s.add(std::pow(1.0 + (2.0 * n + l) * (2.0 * n + l), -0.5 * beta));
      }
      const double weight = std::pow(1.0 + n * n, 0.5 * (1.0 - beta));
      cte = std::max(cte, s.value() / weight);
    }
    CHECK(cte < 10.0);  // a uniform constant exists
  }
}
