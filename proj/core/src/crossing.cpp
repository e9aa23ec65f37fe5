#include "swlab/crossing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "swlab/oracle.hpp"
#include "swlab/propagate.hpp"

namespace swlab {

std::vector<CrossingEvent> crossing_schedule(int n, double t_max,
                                             const FourierPotential& pot) {
  if (n < 0) {
    throw ConfigError(
        "crossing_schedule: n must be >= 0 (negative n via time reversal)");
  }
  std::vector<CrossingEvent> events;
  const int l_max = static_cast<int>(std::floor(2.0 * t_max));
  for (int l = 0; l <= l_max; ++l) {
    const int q = 2 * n + l;
    if (q <= 0) continue;  // self-crossing (l = -2n) excluded
    CrossingEvent e;
    e.l = l;
    e.t_star = 0.5 * l;
    e.n = n;
    e.partner = -n - l;
    e.coupling = pot.coeff(q) / kSqrt2Pi;
    e.curvature = 2.0 * q;
    events.push_back(e);
  }
  return events;  // already sorted by t_star
}

PhaseInfo phase_function(int n, int l, double t) {
  const double q = 2.0 * n + l;
  return {q * (t * t - l * t), q * (2.0 * t - l), 2.0 * q};
}

double stationary_phase_amplitude(const CrossingEvent& event) {
  const int q = 2 * event.n + event.l;
  if (q <= 0) throw ConfigError("stationary_phase_amplitude: need 2n+l > 0");
  return std::abs(event.coupling) * std::sqrt(kTwoPi / std::abs(event.curvature));
}

cplx two_level_oracle(const CrossingEvent& event, double t_a, double t_b,
                      double tol) {
  if (!(t_a < t_b)) throw ConfigError("two_level_oracle: need t_a < t_b");
  const cplx v = event.coupling;
  if (v == cplx(0, 0)) return cplx(0, 0);  // decoupled levels
  const int n = event.n, p = event.partner;

  // interaction picture: x_j = e^{-i int_{t_a} E_j} y_j, so
  // i y1' = v e^{i phi} y2, i y2' = conj(v) e^{-i phi} y1 with
  // phi(t) = int_{t_a}^t (E_n - E_p).
  auto phi = [&](double t) {
    return free_phase(n, 0.0, t_a, t) - free_phase(p, 0.0, t_a, t);
  };
  auto deriv = [&](double t, const cplx y[2], cplx dy[2]) {
    const cplx e = std::polar(1.0, phi(t));
    dy[0] = cplx(0, -1) * v * e * y[1];
    dy[1] = cplx(0, -1) * std::conj(v) * std::conj(e) * y[0];
  };

  // classic RKF-style embedded pair via Dormand-Prince on 2 components
  static const double c[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1, 1};
  static const double a[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
       -5103.0 / 18656},
      {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
  };
  static const double b5[7] = {35.0 / 384,     0, 500.0 / 1113, 125.0 / 192,
                               -2187.0 / 6784, 11.0 / 84, 0};
  static const double b4[7] = {5179.0 / 57600, 0, 7571.0 / 16695, 393.0 / 640,
                               -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

  cplx y[2] = {cplx(1, 0), cplx(0, 0)};
  double t = t_a;
  const double d2 = std::abs(phase_function(n, event.l, 0).d2);
  double h = std::min(0.05, (t_b - t_a) / 4.0);
  if (d2 > 0) h = std::min(h, 1.0 / d2);
  while (t < t_b) {
    h = std::min(h, t_b - t);
    if (h < 1e-15 * std::max(1.0, std::abs(t))) {
      throw StepUnderflowError("two_level_oracle: step underflow");
    }
    cplx k[7][2], yt[2];
    deriv(t, y, k[0]);
    for (int s = 1; s < 7; ++s) {
      for (int i = 0; i < 2; ++i) {
        cplx acc = y[i];
        for (int j = 0; j < s; ++j) acc += h * a[s][j] * k[j][i];
        yt[i] = acc;
      }
      deriv(t + c[s] * h, yt, k[s]);
    }
    cplx y5[2], y4[2];
    for (int i = 0; i < 2; ++i) {
      y5[i] = y[i];
      y4[i] = y[i];
      for (int s = 0; s < 7; ++s) {
        y5[i] += h * b5[s] * k[s][i];
        y4[i] += h * b4[s] * k[s][i];
      }
    }
    const double err = std::sqrt(std::norm(y5[0] - y4[0]) +
                                 std::norm(y5[1] - y4[1]));
    // absolute floor: the embedded estimate bottoms out at rounding noise
    const double tol_step = std::max(tol * h, 4e-16);
    if (err <= tol_step) {
      t += h;
      y[0] = y5[0];
      y[1] = y5[1];
    }
    double fac = 0.9 * std::pow(tol_step / std::max(err, 1e-300), 0.2);
    h *= std::clamp(fac, 0.2, 5.0);
  }
  // back to the Schroedinger picture (free phase of the partner level)
  return std::polar(1.0, -free_phase(p, 0.0, t_a, t_b)) * y[1];
}

Eigen::VectorXcd reduced_resolvent_diagonal(int n, int l, double t,
                                            int half_width) {
  const int dim = 2 * half_width + 1;
  Eigen::VectorXcd r = Eigen::VectorXcd::Zero(dim);
  for (int m = -half_width; m <= half_width; ++m) {
    if (m == n || m == -n - l) continue;
    const double den =
        static_cast<double>(m - n) * (m + n + 2.0 * t);
    if (std::abs(den) < 1e-9) {
      throw ConfigError(
          "reduced_resolvent: near-singular denominator at m=" +
          std::to_string(m) + " (t outside I_l?)");
    }
    r[m + half_width] = 1.0 / den;
  }
  return r;
}

Eigen::MatrixXcd twiddle_apply(const Eigen::MatrixXcd& A, int n, int l,
                               double t) {
  const int dim = static_cast<int>(A.rows());
  const int N = (dim - 1) / 2;
  if (A.cols() != dim || 2 * N + 1 != dim) {
    throw ConfigError("twiddle_apply: A must be square with odd dimension");
  }
  if (n < -N || n > N) throw ConfigError("twiddle_apply: n outside range");
  const Eigen::VectorXcd r = reduced_resolvent_diagonal(n, l, t, N);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  out.row(n + N) = A.row(n + N).cwiseProduct(r.transpose());
  return out;
}

Eigen::MatrixXcd convolution_matrix(const FourierPotential& pot,
                                    int half_width) {
  const int dim = 2 * half_width + 1;
  Eigen::MatrixXcd V = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (const auto& [d, v] : pot.coeffs()) {
      const int j = i - d;
      if (j >= 0 && j < dim) V(i, j) = v / kSqrt2Pi;
    }
  }
  return V;
}

namespace {

// time derivative of the reduced resolvent diagonal
Eigen::VectorXcd resolvent_dot_diagonal(int n, int l, double t, int N) {
  const int dim = 2 * N + 1;
  Eigen::VectorXcd r = Eigen::VectorXcd::Zero(dim);
  for (int m = -N; m <= N; ++m) {
    if (m == n || m == -n - l) continue;
    const double den = static_cast<double>(m - n) * (m + n + 2.0 * t);
    r[m + N] = -2.0 * static_cast<double>(m - n) / (den * den);
  }
  return r;
}

struct GaussRule {
  std::array<double, 7> x;  // nodes on [-1, 1]
  std::array<double, 7> w;
};

// 7-point Gauss-Legendre
const GaussRule kGauss7 = {
    {-0.9491079123427585, -0.7415311855993945, -0.4058451513773972, 0.0,
     0.4058451513773972, 0.7415311855993945, 0.9491079123427585},
    {0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
     0.4179591836734694, 0.3818300505051189, 0.2797053914892767,
     0.1294849661688697}};

}  // namespace

double ibp_residual(int n, int l, const FourierPotential& pot,
                    const PropagatorConfig& cfg, double quad_tol, int panels,
                    unsigned seed) {
  const int N = cfg.half_width;
  if (N > 128) throw ConfigError("ibp_residual: N must be <= 128 (dense)");
  const int dim = 2 * N + 1;
  const double alpha = 0.5 * l - 0.25;
  const double beta = 0.5 * l + 0.25;
  const int pair_site = -n - l;
  if (n > N - cfg.buffer || pair_site < -N + cfg.buffer) {
    throw ConfigError("ibp_residual: crossing pair outside safe truncation");
  }

  const Eigen::MatrixXcd V = convolution_matrix(pot, N);

  // random initial state on the middle half of the range
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  FiberState psi0(0.0, N, 0.0);
  for (int m = -N / 2; m <= N / 2; ++m) {
    psi0.at(m) = cplx(gauss(rng), gauss(rng));
  }
  const double nrm = psi0.norm();
  for (auto& a : psi0.amps()) a /= nrm;

  // phi(t) = U(t,0) psi, cached at the sorted node list by incremental
  // dense midpoint-exponential propagation
  DenseConfig dc;
  dc.half_width = N;
  dc.step = std::min(1e-3, std::sqrt(cfg.tol));

  // scalar integrand of row n for a row-vector matrix M(t) (single row n):
  // e^{+i Phi_n(t)} * (M row . phi(t))
  auto row_n_phase = [&](double t) {
    return std::polar(1.0, free_phase(n, 0.0, 0.0, t));
  };

  const Eigen::RowVectorXcd vrow = V.row(n + N);

  auto integrand = [&](double t, const Eigen::VectorXcd& phi) -> cplx {
    const Eigen::VectorXcd r = reduced_resolvent_diagonal(n, l, t, N);
    const Eigen::VectorXcd rd = resolvent_dot_diagonal(n, l, t, N);

    // V~_l row: (V row) .* r
    Eigen::RowVectorXcd vt = vrow.cwiseProduct(r.transpose());
    // V~~_l = P_n V R V R row
    Eigen::RowVectorXcd vt2 = (vt * V).cwiseProduct(r.transpose());
    // d/dt V~~ = P_n V R' V R + P_n V R V R'
    Eigen::RowVectorXcd vtd = vrow.cwiseProduct(rd.transpose());
    Eigen::RowVectorXcd vt2d = (vtd * V).cwiseProduct(r.transpose()) +
                               (vt * V).cwiseProduct(rd.transpose());
    // LHS row: P_n V Pperp
    Eigen::RowVectorXcd lhs = vrow;
    lhs[n + N] = cplx(0, 0);
    lhs[pair_site + N] = cplx(0, 0);
    // V~_l V P_{n,l} row
    Eigen::RowVectorXcd vtv = vt * V;
    Eigen::RowVectorXcd vtv_pair = Eigen::RowVectorXcd::Zero(dim);
    vtv_pair[n + N] = vtv[n + N];
    vtv_pair[pair_site + N] = vtv[pair_site + N];
    // RHS integrand row: V~~ V + i V~~' - V~ V P_{n,l} - i V~'
    Eigen::RowVectorXcd rhs = vt2 * V + cplx(0, 1) * vt2d - vtv_pair -
                              cplx(0, 1) * vtd;
    return row_n_phase(t) * ((lhs - rhs) * phi).value();
  };

  auto boundary_term = [&](double t, const Eigen::VectorXcd& phi) -> cplx {
    const Eigen::VectorXcd r = reduced_resolvent_diagonal(n, l, t, N);
    Eigen::RowVectorXcd vt = vrow.cwiseProduct(r.transpose());
    Eigen::RowVectorXcd vt2 = (vt * V).cwiseProduct(r.transpose());
    Eigen::RowVectorXcd m = cplx(0, 1) * (vt - vt2);
    return row_n_phase(t) * (m * phi).value();
  };

  auto evaluate = [&](int npanels) -> double {
    std::vector<double> nodes;
    nodes.push_back(alpha);
    const double width = (beta - alpha) / npanels;
    for (int p = 0; p < npanels; ++p) {
      const double a = alpha + p * width;
      for (int q = 0; q < 7; ++q) {
        nodes.push_back(a + 0.5 * width * (1.0 + kGauss7.x[static_cast<std::size_t>(q)]));
      }
    }
    nodes.push_back(beta);

    // incremental propagation through sorted nodes
    std::vector<Eigen::VectorXcd> phi_at(nodes.size());
    FiberState cur = psi0;
    std::vector<std::size_t> order(nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return nodes[a] < nodes[b];
    });
    for (std::size_t oi : order) {
      cur = dense_propagate(cur, nodes[oi], pot, dc);
      Eigen::VectorXcd v(dim);
      for (int i = 0; i < dim; ++i) v[i] = cur.amps()[static_cast<std::size_t>(i)];
      phi_at[oi] = v;
    }

    cplx integral(0, 0);
    std::size_t node_idx = 1;
    for (int p = 0; p < npanels; ++p) {
      const double a = alpha + p * width;
      for (int q = 0; q < 7; ++q, ++node_idx) {
        const double t = a + 0.5 * width * (1.0 + kGauss7.x[static_cast<std::size_t>(q)]);
        integral += 0.5 * width * kGauss7.w[static_cast<std::size_t>(q)] *
                    integrand(t, phi_at[node_idx]);
      }
    }
    const cplx bnd =
        boundary_term(beta, phi_at.back()) - boundary_term(alpha, phi_at.front());
    // integral already carries (LHS - RHS); residual = |integral - boundary|
    return std::abs(integral - bnd);
  };

  if (panels > 0) return evaluate(panels);

  double prev = evaluate(4);
  for (int p = 8; p <= 64; p *= 2) {
    const double cur = evaluate(p);
    if (std::abs(cur - prev) < quad_tol) return cur;
    prev = cur;
  }
  return prev;
}

BackscatterSum backscatter_symmetric_part(int n, int l, double t,
                                          const FourierPotential& pot) {
  const double s = 2.0 * n + 2.0 * t;
  const int q = 2 * n + l;
  BackscatterSum out;
  KahanSum raw, sym;
  for (const auto& [p, v] : pot.coeffs()) {
    if (p == 0 || p == q || p == -q) continue;
    const double den = p * (p + s);
    if (std::abs(den) < 1e-12) {
      throw ConfigError("backscatter: summand pole hit (guard violated)");
    }
    raw.add(std::norm(v) / den);
    // even-in-p part of 1/(p(p+s)) is 1/(p^2 - s^2)
    sym.add(std::norm(v) / (static_cast<double>(p) * p - s * s));
  }
  out.raw = raw.value();
  out.symmetric = sym.value();
  return out;
}

}  // namespace swlab
