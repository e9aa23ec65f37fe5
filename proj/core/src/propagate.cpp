#include "swlab/propagate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace swlab {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB5[7] = {35.0 / 384,    0.0,        500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double kB4[7] = {5179.0 / 57600,   0.0,         7571.0 / 16695,
                           393.0 / 640,      -92097.0 / 339200,
                           187.0 / 2100,     1.0 / 40};

constexpr double kActivationFrac = 1e-16;  // window growth trigger
constexpr double kOscCap = 2.0;            // max radians per step cap
// Embedded error estimates bottom out at rounding noise that no longer
// shrinks with the step; below this the controller accepts the step instead
// of spiralling into an underflow.
constexpr double kErrFloorRk = 4e-16;
constexpr double kErrFloorMagnus = 2e-14;  // dense exponentials are noisier

struct Band {
  std::vector<std::pair<int, cplx>> terms;  // (d, c(d)/sqrt(2pi)), d != 0
  int bw = 0;
};

Band make_band(const FourierPotential& pot) {
  Band b;
  b.bw = pot.bandwidth();
  for (const auto& [d, v] : pot.coeffs()) b.terms.emplace_back(d, v / kSqrt2Pi);
  return b;
}

// Integrator state over the active window [lo, hi] of sites.
struct Window {
  int lo, hi;
  int size() const { return hi - lo + 1; }
};

class IpIntegrator {
 public:
  IpIntegrator(const FiberState& s0, const FourierPotential& pot,
               const PropagatorConfig& cfg)
      : N_(s0.half_width()), k_(s0.k()), t0_(s0.t()), band_(make_band(pot)),
        cfg_(cfg) {
    c_.assign(2 * static_cast<std::size_t>(N_) + 1, cplx(0, 0));
    for (int n = -N_; n <= N_; ++n) c_[idx(n)] = s0.at(n);
    KahanSum ns;
    for (const cplx& a : c_) ns.add(std::norm(a));
    norm0_ = std::sqrt(ns.value());
    win_ = initial_window();
  }

  FiberState run(double t1, PropagationStats* stats);

 private:
  std::size_t idx(int n) const { return static_cast<std::size_t>(n + N_); }

  Window initial_window() const {
    int lo = N_, hi = -N_;
    const double thr = kActivationFrac * std::max(norm0_, 1e-300);
    for (int n = -N_; n <= N_; ++n) {
      if (std::abs(c_[idx(n)]) > thr) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
      }
    }
    if (lo > hi) { lo = 0; hi = 0; }
    return {std::max(lo - band_.bw, -N_), std::min(hi + band_.bw, N_)};
  }

  // dc/dt in the interaction picture referenced to t0_.
  void deriv(double tau, const std::vector<cplx>& c, std::vector<cplx>& dc) {
    const int lo = win_.lo, hi = win_.hi;
    phases_.resize(static_cast<std::size_t>(win_.size()));
    for (int n = lo; n <= hi; ++n) {
      phases_[static_cast<std::size_t>(n - lo)] =
          std::polar(1.0, free_phase(n, k_, t0_, tau));
    }
    for (int n = lo; n <= hi; ++n) {
      cplx acc(0, 0);
      for (const auto& [d, v] : band_.terms) {
        const int m = n - d;
        if (m < lo || m > hi) continue;
        acc += v * std::conj(phases_[static_cast<std::size_t>(m - lo)]) *
               c[idx(m)];
      }
      dc[idx(n)] = cplx(0, -1) * phases_[static_cast<std::size_t>(n - lo)] * acc;
    }
  }

  double norm_sq(const std::vector<cplx>& v) const {
    KahanSum s;
    for (int n = win_.lo; n <= win_.hi; ++n) s.add(std::norm(v[idx(n)]));
    return s.value();
  }

  void maybe_grow_window() {
    const double thr = kActivationFrac * std::max(norm0_, 1e-300);
    bool grow_lo = false, grow_hi = false;
    for (int n = win_.lo; n < std::min(win_.lo + band_.bw, win_.hi + 1); ++n) {
      if (std::abs(c_[idx(n)]) > thr) { grow_lo = true; break; }
    }
    for (int n = std::max(win_.hi - band_.bw + 1, win_.lo); n <= win_.hi; ++n) {
      if (std::abs(c_[idx(n)]) > thr) { grow_hi = true; break; }
    }
    if (grow_lo) win_.lo = std::max(win_.lo - band_.bw, -N_);
    if (grow_hi) win_.hi = std::min(win_.hi + band_.bw, N_);
  }

  double osc_cap_step(double t_far) const {
    // fastest phase difference across the coupling band in the window
    double reach = 2.0 * std::max(std::abs(win_.lo), std::abs(win_.hi)) +
                   2.0 * std::abs(k_) + 2.0 * std::abs(t_far) + band_.bw;
    double omega = band_.bw * reach;
    return omega > 0 ? kOscCap / omega : 0.25;
  }

  const int N_;
  const double k_, t0_;
  const Band band_;
  const PropagatorConfig cfg_;
  std::vector<cplx> c_;
  std::vector<cplx> phases_;
  Window win_{0, 0};
  double norm0_ = 0.0;
};

FiberState IpIntegrator::run(double t1, PropagationStats* stats) {
  const double span = t1 - t0_;
  const double dir = span >= 0 ? 1.0 : -1.0;
  const std::size_t total = c_.size();
  std::vector<cplx> k1(total), k2(total), k3(total), k4(total), k5(total),
      k6(total), k7(total), ytmp(total), y5(total), y4(total);
  std::vector<cplx>* ks[7] = {&k1, &k2, &k3, &k4, &k5, &k6, &k7};

  PropagationStats st;
  double t = t0_;
  double max_buffer_mass = 0.0;
  const double scale = std::max(norm0_, 1e-300);

  double h = dir * std::min({0.25, std::abs(span),
                             osc_cap_step(std::max(std::abs(t0_),
                                                   std::abs(t1)))});
  bool have_k1 = false;
  while (dir * (t1 - t) > 0) {
    if (std::abs(h) > std::abs(t1 - t)) h = t1 - t;
    if (std::abs(h) < 1e-13 * std::max(1.0, std::abs(t))) {
      throw StepUnderflowError(
          "propagate: step controller cannot meet tol (step underflow at t=" +
          std::to_string(t) + ")");
    }
    if (!have_k1) { deriv(t, c_, k1); have_k1 = true; }
    for (int s = 1; s < 7; ++s) {
      for (int n = win_.lo; n <= win_.hi; ++n) {
        cplx acc = c_[idx(n)];
        for (int j = 0; j < s; ++j) {
          if (kA[s][j] != 0.0) acc += h * kA[s][j] * (*ks[j])[idx(n)];
        }
        ytmp[idx(n)] = acc;
      }
      deriv(t + kC[s] * h, ytmp, *ks[s]);
    }
    // embedded estimates
    KahanSum esum;
    for (int n = win_.lo; n <= win_.hi; ++n) {
      cplx a5 = c_[idx(n)], a4 = c_[idx(n)];
      for (int s = 0; s < 7; ++s) {
        if (kB5[s] != 0.0) a5 += h * kB5[s] * (*ks[s])[idx(n)];
        if (kB4[s] != 0.0) a4 += h * kB4[s] * (*ks[s])[idx(n)];
      }
      y5[idx(n)] = a5;
      esum.add(std::norm(a5 - a4));
    }
    const double err = std::sqrt(esum.value());
    const double tol_step =
        std::max(cfg_.tol * std::abs(h), kErrFloorRk) * scale;
    if (err <= tol_step || std::abs(h) <= 1e-12) {
      t += h;
      for (int n = win_.lo; n <= win_.hi; ++n) c_[idx(n)] = y5[idx(n)];
      ++st.steps;
      const Window before = win_;
      maybe_grow_window();
      if (win_.lo == before.lo && win_.hi == before.hi) {
        // FSAL: stage 7 equals the first stage of the next step
        std::swap(k1, k7);
        have_k1 = true;
      } else {
        have_k1 = false;
      }
      if (win_.lo <= -N_ + cfg_.buffer || win_.hi >= N_ - cfg_.buffer) {
        KahanSum bm;
        for (int n = N_ - cfg_.buffer + 1; n <= N_; ++n) {
          bm.add(std::norm(c_[idx(n)]));
          bm.add(std::norm(c_[idx(-n)]));
        }
        max_buffer_mass = std::max(max_buffer_mass, bm.value());
      }
    } else {
      ++st.rejected;
      have_k1 = true;  // k1 unchanged, state not advanced
    }
    double fac = 0.9 * std::pow(tol_step / std::max(err, 1e-300), 0.2);
    fac = std::clamp(fac, 0.2, 5.0);
    const double cap =
        std::min(0.25, osc_cap_step(std::max(std::abs(t), std::abs(t1))));
    h = dir * std::min(std::abs(h) * fac, cap);
  }

  FiberState out(k_, N_, t1);
  for (int n = win_.lo; n <= win_.hi; ++n) {
    out.at(n) = std::polar(1.0, -free_phase(n, k_, t0_, t1)) * c_[idx(n)];
  }
  st.leakage = max_buffer_mass;
  st.norm_drift = std::abs(std::sqrt(norm_sq(c_)) - norm0_);
  st.err_budget = cfg_.tol * std::abs(span) * std::max(1.0, norm0_) +
                  st.leakage;
  if (st.leakage > cfg_.leak_max) {
    if (stats) stats->merge(st);
    throw LeakageError("propagate: buffer mass " + std::to_string(st.leakage) +
                       " exceeds leak_max " + std::to_string(cfg_.leak_max));
  }
  if (stats) stats->merge(st);
  return out;
}

// Midpoint-Magnus cross-check path: exact exponential of H(t_mid) on the
// active window, adaptive by step doubling (order 2).
class MagnusIntegrator {
 public:
  MagnusIntegrator(const FiberState& s0, const FourierPotential& pot,
                   const PropagatorConfig& cfg)
      : N_(s0.half_width()), k_(s0.k()), band_(make_band(pot)), cfg_(cfg) {
    c_.assign(2 * static_cast<std::size_t>(N_) + 1, cplx(0, 0));
    for (int n = -N_; n <= N_; ++n) c_[idx(n)] = s0.at(n);
    norm0_ = 0.0;
    for (const cplx& a : c_) norm0_ += std::norm(a);
    norm0_ = std::sqrt(norm0_);
    init_window();
    t_ = s0.t();
  }

  FiberState run(double t1, PropagationStats* stats);

 private:
  std::size_t idx(int n) const { return static_cast<std::size_t>(n + N_); }

  void init_window() {
    const double thr = kActivationFrac * std::max(norm0_, 1e-300);
    int lo = N_, hi = -N_;
    for (int n = -N_; n <= N_; ++n) {
      if (std::abs(c_[idx(n)]) > thr) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
      }
    }
    if (lo > hi) { lo = 0; hi = 0; }
    win_ = {std::max(lo - band_.bw, -N_), std::min(hi + band_.bw, N_)};
  }

  Eigen::VectorXcd window_vec(const std::vector<cplx>& c) const {
    Eigen::VectorXcd v(win_.size());
    for (int n = win_.lo; n <= win_.hi; ++n) v[n - win_.lo] = c[idx(n)];
    return v;
  }

  Eigen::VectorXcd exp_step(double t_mid, double h,
                            const Eigen::VectorXcd& y) const {
    const int w = win_.size();
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(w, w);
    for (int n = win_.lo; n <= win_.hi; ++n) {
      H(n - win_.lo, n - win_.lo) = band_energy(n, k_, t_mid);
      for (const auto& [d, v] : band_.terms) {
        const int m = n - d;
        if (m >= win_.lo && m <= win_.hi) H(n - win_.lo, m - win_.lo) = v;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    Eigen::VectorXcd phases(w);
    for (int i = 0; i < w; ++i) {
      phases[i] = std::polar(1.0, -h * es.eigenvalues()[i]);
    }
    return es.eigenvectors() *
           (phases.asDiagonal() * (es.eigenvectors().adjoint() * y));
  }

  void maybe_grow_window() {
    const double thr = kActivationFrac * std::max(norm0_, 1e-300);
    bool grow_lo = false, grow_hi = false;
    for (int n = win_.lo; n < std::min(win_.lo + band_.bw, win_.hi + 1); ++n) {
      if (std::abs(c_[idx(n)]) > thr) { grow_lo = true; break; }
    }
    for (int n = std::max(win_.hi - band_.bw + 1, win_.lo); n <= win_.hi; ++n) {
      if (std::abs(c_[idx(n)]) > thr) { grow_hi = true; break; }
    }
    if (grow_lo) win_.lo = std::max(win_.lo - band_.bw, -N_);
    if (grow_hi) win_.hi = std::min(win_.hi + band_.bw, N_);
  }

  const int N_;
  const double k_;
  const Band band_;
  const PropagatorConfig cfg_;
  std::vector<cplx> c_;
  Window win_{0, 0};
  double t_ = 0.0;
  double norm0_ = 0.0;
};

FiberState MagnusIntegrator::run(double t1, PropagationStats* stats) {
  PropagationStats st;
  const double t0 = t_;
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  double h = dir * std::min(0.05, std::abs(t1 - t0));
  double max_buffer_mass = 0.0;
  const double scale = std::max(norm0_, 1e-300);
  while (dir * (t1 - t_) > 0) {
    if (std::abs(h) > std::abs(t1 - t_)) h = t1 - t_;
    if (std::abs(h) < 1e-13 * std::max(1.0, std::abs(t_))) {
      throw StepUnderflowError(
          "propagate(magnus): step underflow at t=" + std::to_string(t_));
    }
    Eigen::VectorXcd y = window_vec(c_);
    Eigen::VectorXcd full = exp_step(t_ + 0.5 * h, h, y);
    Eigen::VectorXcd half =
        exp_step(t_ + 0.75 * h, 0.5 * h,
                 exp_step(t_ + 0.25 * h, 0.5 * h, y));
    const double err = (full - half).norm();
    const double tol_step =
        std::max(cfg_.tol * std::abs(h), kErrFloorMagnus) * scale;
    if (err <= tol_step || std::abs(h) <= 1e-12) {
      t_ += h;
      for (int n = win_.lo; n <= win_.hi; ++n) {
        c_[idx(n)] = half[n - win_.lo];
      }
      ++st.steps;
      maybe_grow_window();
      if (win_.lo <= -N_ + cfg_.buffer || win_.hi >= N_ - cfg_.buffer) {
        KahanSum bm;
        for (int n = N_ - cfg_.buffer + 1; n <= N_; ++n) {
          bm.add(std::norm(c_[idx(n)]));
          bm.add(std::norm(c_[idx(-n)]));
        }
        max_buffer_mass = std::max(max_buffer_mass, bm.value());
      }
    } else {
      ++st.rejected;
    }
    double fac = 0.9 * std::cbrt(tol_step / std::max(err, 1e-300));
    fac = std::clamp(fac, 0.2, 4.0);
    h = dir * std::min(std::abs(h) * fac, 0.25);
  }
  FiberState out(k_, N_, t1);
  KahanSum ns;
  for (int n = -N_; n <= N_; ++n) {
    out.at(n) = c_[idx(n)];
    ns.add(std::norm(c_[idx(n)]));
  }
  st.leakage = max_buffer_mass;
  st.norm_drift = std::abs(std::sqrt(ns.value()) - norm0_);
  st.err_budget =
      cfg_.tol * std::abs(t1 - t0) * std::max(1.0, norm0_) + st.leakage;
  if (st.leakage > cfg_.leak_max) {
    if (stats) stats->merge(st);
    throw LeakageError("propagate(magnus): buffer mass " +
                       std::to_string(st.leakage) + " exceeds leak_max " +
                       std::to_string(cfg_.leak_max));
  }
  if (stats) stats->merge(st);
  return out;
}

}  // namespace

Scheme scheme_from_string(const std::string& s) {
  if (s == "interaction_picture_rk") return Scheme::interaction_picture_rk;
  if (s == "magnus_midpoint") return Scheme::magnus_midpoint;
  throw ConfigError("unknown scheme '" + s + "'");
}

std::string to_string(Scheme s) {
  return s == Scheme::interaction_picture_rk ? "interaction_picture_rk"
                                             : "magnus_midpoint";
}

void PropagatorConfig::validate(int bandwidth) const {
  if (buffer < bandwidth) {
    throw ConfigError("config: invariant N > B >= bandwidth violated (buffer " +
                      std::to_string(buffer) + " < bandwidth " +
                      std::to_string(bandwidth) + ")");
  }
  if (half_width <= buffer) {
    throw ConfigError("config: invariant N > B >= bandwidth violated (N " +
                      std::to_string(half_width) + " <= buffer " +
                      std::to_string(buffer) + ")");
  }
  if (!(tol > 0.0)) throw ConfigError("config: tol must be > 0");
  if (!(leak_max > 0.0 && leak_max < 1.0)) {
    throw ConfigError("config: leak_max must lie in (0, 1)");
  }
}

PropagatorConfig default_config(int n, double t_max, int bandwidth) {
  PropagatorConfig cfg;
  const int bw = std::max(bandwidth, 1);
  cfg.half_width =
      4 * (std::abs(n) + static_cast<int>(std::ceil(std::abs(t_max)))) +
      16 * bw;
  cfg.buffer = 4 * bw;
  return cfg;
}

FiberState propagate(const FiberState& state, double t1,
                     const FourierPotential& pot, const PropagatorConfig& cfg,
                     PropagationStats* stats) {
  cfg.validate(pot.bandwidth());
  if (state.half_width() <= cfg.buffer) {
    throw ConfigError("propagate: state range too small for buffer");
  }
  if (pot.empty()) {
    // exact free evolution: diagonal phases
    FiberState out(state.k(), state.half_width(), t1);
    for (int n = -state.half_width(); n <= state.half_width(); ++n) {
      out.at(n) =
          std::polar(1.0, -free_phase_mod2pi(n, state.k(), state.t(), t1)) *
          state.at(n);
    }
    if (stats) {
      PropagationStats st;
      st.steps = 0;
      stats->merge(st);
    }
    return out;
  }
  if (t1 == state.t()) return state;
  if (cfg.scheme == Scheme::magnus_midpoint) {
    return MagnusIntegrator(state, pot, cfg).run(t1, stats);
  }
  return IpIntegrator(state, pot, cfg).run(t1, stats);
}

std::vector<cplx> propagator_row(int n, double t, const FourierPotential& pot,
                                 const PropagatorConfig& cfg, double k,
                                 PropagationStats* stats) {
  const int N = cfg.half_width;
  if (std::abs(n) > N - cfg.buffer) {
    throw TruncationError("propagator_row: |n| must be <= N - B");
  }
  // fiber covariance: U^k(t,0) = U^0(t+k, k); row n of U = conj(U* e_n)
  FiberState unit = FiberState::unit(0.0, N, n, t + k);
  FiberState back = propagate(unit, k, pot, cfg, stats);
  std::vector<cplx> row(back.amps().size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    row[i] = std::conj(back.amps()[i]);
  }
  return row;
}

double deviation_from_free_row(const std::vector<cplx>& row, int n, double k,
                               double t) {
  const int N = static_cast<int>(row.size() / 2);
  const cplx free_entry = std::polar(1.0, -free_phase(n, k, 0.0, t));
  KahanSum s;
  for (int m = -N; m <= N; ++m) {
    cplx d = row[static_cast<std::size_t>(m + N)];
    if (m == n) d -= free_entry;
    s.add(std::norm(d));
  }
  return std::sqrt(s.value());
}

FiberState time_reverse(const FiberState& state) {
  const int N = state.half_width();
  const double k = state.k();
  FiberState out(k == 0.0 ? 0.0 : 1.0 - k, N, state.t());
  for (int n = -N; n <= N; ++n) out.at(n) = std::conj(state.at(-n));
  return out;
}

}  // namespace swlab
