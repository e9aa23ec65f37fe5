#include "swlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "swlab/propagate.hpp"

namespace swlab {

namespace {

PropagatorConfig config_for_site(const ExperimentSpec& spec, int n) {
  if (!spec.auto_truncation) return spec.cfg;
  PropagatorConfig cfg = spec.cfg;
  const PropagatorConfig d =
      default_config(n, spec.t_max, spec.potential.bandwidth());
  cfg.half_width = std::max(cfg.half_width, d.half_width);
  cfg.buffer = std::max(cfg.buffer, d.buffer);
  return cfg;
}

std::vector<double> k_points(int k_grid) {
  std::vector<double> ks;
  ks.reserve(static_cast<std::size_t>(k_grid));
  for (int i = 0; i < k_grid; ++i) ks.push_back(static_cast<double>(i) / k_grid);
  return ks;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace

std::vector<double> sup_time_grid(double t_max, int refine) {
  // multiples of 1/4 hit every crossing midpoint l/2 and edge l/2 +- 1/4
  const double sign = t_max >= 0 ? 1.0 : -1.0;
  const double step = 0.25 / refine;
  std::vector<double> ts;
  for (double u = step; u <= std::abs(t_max) + 1e-12; u += step) {
    ts.push_back(sign * u);
  }
  return ts;
}

ScanResult deviation_scan(const ExperimentSpec& spec, int threads) {
  spec.cfg.validate(spec.potential.bandwidth());
  const std::vector<double> ks = k_points(spec.k_grid);
  const std::vector<double> ts = sup_time_grid(spec.t_max);

  ScanResult result;
  const int n_count = static_cast<int>(spec.n_list.size());
  std::vector<std::vector<CellRecord>> cells_by_n(
      static_cast<std::size_t>(n_count));
  std::vector<DeviationReport> reports(static_cast<std::size_t>(n_count));

  parallel_for(n_count, threads, [&](int ni) {
    const int n = spec.n_list[static_cast<std::size_t>(ni)];
    const PropagatorConfig cfg = config_for_site(spec, n);
    DeviationReport rep;
    rep.n = n;
    rep.k_samples = spec.k_grid;
    double sup_half = 0.0;  // sup over the even-index k subgrid
    auto& cells = cells_by_n[static_cast<std::size_t>(ni)];
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      const double k = ks[ki];
      for (double t : ts) {
        CellRecord cell;
        cell.experiment = spec.name;
        cell.n = n;
        cell.k = k;
        cell.t = t;
        PropagationStats stats;
        try {
          const std::vector<cplx> row =
              propagator_row(n, t, spec.potential, cfg, k, &stats);
          cell.dev_norm = deviation_from_free_row(row, n, k, t);
          cell.window_prob =
              std::norm(row[static_cast<std::size_t>(n + cfg.half_width)]);
          cell.err = stats.err_budget;
          cell.leak = stats.leakage;
          cell.valid = true;
        } catch (const ToleranceError&) {
          cell.valid = false;
          cell.err = stats.err_budget;
          cell.leak = stats.leakage;
          rep.valid = false;
        }
        cells.push_back(cell);
        if (cell.valid && cell.dev_norm > rep.dev_norm) {
          rep.dev_norm = cell.dev_norm;
          rep.t = t;
          rep.err = cell.err;
        }
        if (cell.valid && ki % 2 == 0) {
          sup_half = std::max(sup_half, cell.dev_norm);
        }
      }
    }
    rep.converged =
        rep.dev_norm == 0.0 ||
        std::abs(rep.dev_norm - sup_half) < 0.05 * rep.dev_norm;
    reports[static_cast<std::size_t>(ni)] = rep;
  });

  result.reports = std::move(reports);
  for (auto& cs : cells_by_n) {
    result.cells.insert(result.cells.end(), cs.begin(), cs.end());
  }
  return result;
}

FitResult decay_exponent_fit(const std::vector<DeviationReport>& reports,
                             std::uint64_t seed) {
  std::vector<double> xs, ys;
  int distinct = 0;
  int last_n = std::numeric_limits<int>::min();
  double max_dev = 0.0, max_err = 0.0;
  for (const DeviationReport& r : reports) {
    if (!r.valid) {
      throw DegenerateFitError("decay_exponent_fit: invalid report for n=" +
                               std::to_string(r.n));
    }
    max_dev = std::max(max_dev, r.dev_norm);
    max_err = std::max(max_err, r.err);
    if (r.n != last_n) {
      ++distinct;
      last_n = r.n;
    }
    if (r.dev_norm <= 0.0) continue;
    xs.push_back(std::log(static_cast<double>(r.n)));
    ys.push_back(std::log(r.dev_norm));
  }
  if (distinct < 5) {
    throw DegenerateFitError("decay_exponent_fit: need >= 5 distinct n");
  }
  if (max_dev <= 2.0 * max_err) {
    throw DegenerateFitError(
        "decay_exponent_fit: deviations sit at the error floor");
  }

  auto slope = [](const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t m = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < m; ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < m; ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
  };

  FitResult fit;
  fit.exponent = -slope(xs, ys);

  // pairs bootstrap for the confidence half-width
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  const int reps = 500;
  std::vector<double> bs;
  bs.reserve(reps);
  std::vector<double> bx(xs.size()), by(xs.size());
  for (int r = 0; r < reps; ++r) {
    bool degenerate = true;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const std::size_t j = pick(rng);
      bx[i] = xs[j];
      by[i] = ys[j];
      if (bx[i] != bx[0]) degenerate = false;
    }
    if (degenerate) continue;
    bs.push_back(-slope(bx, by));
  }
  double mean = 0;
  for (double b : bs) mean += b;
  mean /= static_cast<double>(bs.size());
  double var = 0;
  for (double b : bs) var += (b - mean) * (b - mean);
  var /= static_cast<double>(bs.size() > 1 ? bs.size() - 1 : 1);
  fit.ci = 1.96 * std::sqrt(var);
  return fit;
}

PersistenceResult acceleration_persistence(const ExperimentSpec& spec,
                                           double epsilon, int threads) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    if (epsilon == 0.0) {
      // exact persistence is impossible with any nonzero potential
      PersistenceResult r;
      if (spec.potential.empty() && !spec.n_list.empty()) {
        r.n = *std::min_element(spec.n_list.begin(), spec.n_list.end());
      }
      return r;
    }
    throw ConfigError("acceleration_persistence: epsilon must be in [0, 1)");
  }
  const std::vector<double> ks = k_points(spec.k_grid);
  const std::vector<double> ts = sup_time_grid(spec.t_max);

  std::vector<int> order = spec.n_list;
  std::sort(order.begin(), order.end());

  PersistenceResult result;
  std::vector<char> qualifies(order.size(), 0);
  std::vector<std::vector<CellRecord>> cells_by_n(order.size());

  parallel_for(static_cast<int>(order.size()), threads, [&](int ni) {
    const int n = order[static_cast<std::size_t>(ni)];
    const PropagatorConfig cfg = config_for_site(spec, n);
    double min_mass = 1.0;
    auto& cells = cells_by_n[static_cast<std::size_t>(ni)];
    for (double k : ks) {
      // fiber covariance: start the unit vector at time k on the k=0 fiber
      FiberState state = FiberState::unit(0.0, cfg.half_width, n, k);
      PropagationStats stats;
      for (double t : ts) {
        state = propagate(state, t + k, spec.potential, cfg, &stats);
        const double mass = std::norm(state.at(n));
        min_mass = std::min(min_mass, mass);
        CellRecord cell;
        cell.experiment = spec.name;
        cell.n = n;
        cell.k = k;
        cell.t = t;
        cell.window_prob = mass;
        cell.dev_norm = 0.0;
        cell.err = stats.err_budget;
        cell.leak = stats.leakage;
        cells.push_back(cell);
      }
    }
    qualifies[static_cast<std::size_t>(ni)] = min_mass >= 1.0 - epsilon;
  });

  for (std::size_t i = 0; i < order.size(); ++i) {
    result.cells.insert(result.cells.end(), cells_by_n[i].begin(),
                        cells_by_n[i].end());
    if (result.n == kNoSiteFound && qualifies[i]) result.n = order[i];
  }
  return result;
}

std::vector<ProbeReport> bound_state_probe(const std::vector<FiberState>& psi0,
                                           const ExperimentSpec& spec,
                                           std::vector<double>* t_grid_out) {
  // geometric time grid t_max / 2^j, ascending
  std::vector<double> ts;
  for (int j = 6; j >= 0; --j) ts.push_back(spec.t_max / std::pow(2.0, j));
  if (t_grid_out) *t_grid_out = ts;

  std::vector<std::vector<double>> masses(
      spec.n_list.size(), std::vector<double>(ts.size(), 0.0));
  double err_floor = 0.0;

  for (const FiberState& s0 : psi0) {
    const PropagatorConfig cfg = spec.cfg;
    FiberState state = s0;
    PropagationStats stats;
    for (std::size_t ti = 0; ti < ts.size(); ++ti) {
      state = propagate(state, ts[ti], spec.potential, cfg, &stats);
      for (std::size_t ni = 0; ni < spec.n_list.size(); ++ni) {
        const int n = spec.n_list[ni];
        if (state.contains(n)) {
          masses[ni][ti] += std::norm(state.at(n)) /
                            static_cast<double>(psi0.size());
        }
      }
    }
    err_floor = std::max(err_floor, stats.err_budget);
  }

  std::vector<ProbeReport> reports;
  for (std::size_t ni = 0; ni < spec.n_list.size(); ++ni) {
    ProbeReport rep;
    rep.n = spec.n_list[ni];
    rep.masses = masses[ni];
    const double maxv = *std::max_element(rep.masses.begin(), rep.masses.end());
    const std::size_t m = rep.masses.size();
    const bool tail_decreasing = rep.masses[m - 1] <= rep.masses[m - 2] &&
                                 rep.masses[m - 2] <= rep.masses[m - 3];
    rep.decaying = rep.masses[m - 1] < 0.5 * maxv && tail_decreasing;
    rep.inconclusive = maxv <= 4.0 * err_floor;
    reports.push_back(rep);
  }
  return reports;
}

namespace {

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

}  // namespace swlab
