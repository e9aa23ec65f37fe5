#include "swlab/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "swlab/propagate.hpp"

namespace swlab {

FiberState dense_propagate(const FiberState& state, double t1,
                           const FourierPotential& pot, const DenseConfig& dc) {
  if (dc.half_width > 128) {
    throw ConfigError("dense_propagate: N must be <= 128");
  }
  if (!(dc.step > 0.0)) throw ConfigError("dense_propagate: h must be > 0");
  const int N = state.half_width();
  if (N != dc.half_width) {
    throw ConfigError("dense_propagate: state range does not match config");
  }
  const int dim = 2 * N + 1;
  const double k = state.k();

  Eigen::MatrixXcd V = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (const auto& [d, v] : pot.coeffs()) {
      const int j = i - d;
      if (j >= 0 && j < dim) V(i, j) = v / kSqrt2Pi;
    }
  }

  Eigen::VectorXcd y(dim);
  for (int i = 0; i < dim; ++i) y[i] = state.amps()[static_cast<std::size_t>(i)];

  const double span = t1 - state.t();
  const double dir = span >= 0 ? 1.0 : -1.0;
  const long long steps =
      std::max<long long>(1, static_cast<long long>(std::ceil(
                                 std::abs(span) / dc.step)));
  double t = state.t();
  for (long long s = 0; s < steps; ++s) {
    const double t_next =
        (s + 1 == steps) ? t1 : state.t() + dir * dc.step * (s + 1);
    const double h = t_next - t;
    const double t_mid = t + 0.5 * h;
    Eigen::MatrixXcd H = V;
    for (int i = 0; i < dim; ++i) {
      H(i, i) += band_energy(i - N, k, t_mid);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    Eigen::VectorXcd phases(dim);
    for (int i = 0; i < dim; ++i) {
      phases[i] = std::polar(1.0, -h * es.eigenvalues()[i]);
    }
    y = es.eigenvectors() *
        (phases.asDiagonal() * (es.eigenvectors().adjoint() * y));
    t = t_next;
  }

  FiberState out(k, N, t1);
  for (int i = 0; i < dim; ++i) out.amps()[static_cast<std::size_t>(i)] = y[i];
  return out;
}

}  // namespace swlab
