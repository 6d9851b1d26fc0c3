#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace mlmask {

struct SpectralOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 20000;
};

struct SpectralResult {
  double radius = 0.0;
  std::size_t iterations = 0;
  /// True when power iteration did not settle and the dense eigensolver was
  /// used instead.
  bool used_fallback = false;
};

/// Spectral radius of a nonnegative square matrix.
///
/// Power iteration runs on J + sI with s = ||J||_inf. For nonnegative J the
/// Perron root rho is an eigenvalue, and rho + s is then the only eigenvalue
/// of the shifted matrix of maximal modulus, so the iteration converges even
/// when J itself is periodic (e.g. a permutation). Convergence is certified
/// by the Collatz-Wielandt bracket min_i (Jx)_i / x_i <= rho <= max_i
/// (Jx)_i / x_i while the iterate is strictly positive; reducible matrices
/// whose Perron vector has zeros fall back to a stationarity test.
inline SpectralResult spectral_radius_detailed(const Eigen::MatrixXd& J, SpectralOptions opts = {}) {
  if (J.rows() != J.cols()) throw std::invalid_argument("spectral_radius: matrix is not square");
  if (J.size() == 0) return {};
  if ((J.array() < 0.0).any() || !J.allFinite()) {
    throw std::invalid_argument("spectral_radius: matrix must be finite and nonnegative");
  }
  const double shift = J.rowwise().sum().maxCoeff();
  if (shift == 0.0) return {};

  const Eigen::Index n = J.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    const Eigen::VectorXd jx = J * x;
    if ((x.array() > 0.0).all()) {
      const Eigen::ArrayXd ratio = jx.array() / x.array();
      const double lo = ratio.minCoeff();
      const double hi = ratio.maxCoeff();
      if (hi - lo <= opts.tolerance * hi) return {0.5 * (lo + hi), it, false};
    }
    Eigen::VectorXd next = jx + shift * x;
    next /= next.sum();
    const double change = (next - x).lpNorm<1>();
    x = std::move(next);
    if (change < 1e-15) return {(J * x).sum() / x.sum(), it, false};
  }

  Eigen::EigenSolver<Eigen::MatrixXd> solver(J, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("spectral_radius: eigenvalue computation failed");
  }
  return {solver.eigenvalues().cwiseAbs().maxCoeff(), opts.max_iterations, true};
}

inline double spectral_radius(const Eigen::MatrixXd& J, SpectralOptions opts = {}) {
  return spectral_radius_detailed(J, opts).radius;
}

}  // namespace mlmask
