#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "swlab/common.hpp"

namespace swlab {

/// Complex amplitudes on the truncated site range [-N, N] of one
/// quasimomentum fiber.
class FiberState {
 public:
  FiberState() = default;
  FiberState(double k, int half_width, double t = 0.0)
      : k_(k), t_(t), half_width_(half_width),
        amps_(2 * static_cast<std::size_t>(half_width) + 1) {}

  static FiberState unit(double k, int half_width, int site, double t = 0.0) {
    FiberState s(k, half_width, t);
    s.at(site) = cplx(1.0, 0.0);
    return s;
  }

  double k() const { return k_; }
  double t() const { return t_; }
  void set_t(double t) { t_ = t; }
  void set_k(double k) { k_ = k; }
  int half_width() const { return half_width_; }
  bool contains(int n) const { return n >= -half_width_ && n <= half_width_; }

  cplx& at(int n) { return amps_[static_cast<std::size_t>(n + half_width_)]; }
  const cplx& at(int n) const {
    return amps_[static_cast<std::size_t>(n + half_width_)];
  }
  const std::vector<cplx>& amps() const { return amps_; }
  std::vector<cplx>& amps() { return amps_; }

  double norm_sq() const {
    KahanSum s;
    for (const cplx& a : amps_) s.add(std::norm(a));
    return s.value();
  }
  double norm() const;

  /// Mass currently sitting in the outer `buffer` sites on each side.
  double buffer_mass(int buffer) const;

 private:
  double k_ = 0.0;
  double t_ = 0.0;
  int half_width_ = 0;
  std::vector<cplx> amps_;
};

enum class Scheme { interaction_picture_rk, magnus_midpoint };

Scheme scheme_from_string(const std::string& s);
std::string to_string(Scheme s);

struct PropagatorConfig {
  int half_width = 64;  // N
  int buffer = 4;       // B
  double tol = 1e-8;    // local error per unit time
  double leak_max = 1e-6;
  Scheme scheme = Scheme::interaction_picture_rk;

  /// Throws ConfigError naming the violated invariant.
  void validate(int bandwidth) const;
};

/// Spec default truncation for a scan touching site n up to |t| = t_max.
PropagatorConfig default_config(int n, double t_max, int bandwidth);

struct PropagationStats {
  double err_budget = 0.0;  // tol * |span| + leakage
  double leakage = 0.0;
  double norm_drift = 0.0;
  long long steps = 0;
  long long rejected = 0;

  void merge(const PropagationStats& o) {
    err_budget += o.err_budget;
    leakage += o.leakage;
    norm_drift += o.norm_drift;
    steps += o.steps;
    rejected += o.rejected;
  }
};

}  // namespace swlab
