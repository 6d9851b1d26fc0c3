#pragma once

// Colored-degree generating functions evaluated at a pair of layer
// arguments (x for community edges, y for school edges):
//
//   root(x, y)     = sum_d p_d x^{k_c} y^{k_s}
//   excess_c(x, y) = sum_d p_d k_c / <k_c> x^{k_c - 1} y^{k_s}
//   excess_s(x, y) = sum_d p_d k_s / <k_s> x^{k_c} y^{k_s - 1}
//
// Both the extinction recursion and the epidemic-size recursion are built
// from these three sums. Two interchangeable evaluators are provided: a
// closed form for Poisson layers and a literal sum over the truncated grid.

#include <cmath>
#include <concepts>
#include <variant>
#include <vector>

#include "mlmask/scenario.hpp"

namespace mlmask {

template <class P>
concept ColoredPgf = requires(const P& pgf, double x, double y) {
  { pgf.root(x, y) } -> std::convertible_to<double>;
  { pgf.root_complement(x, y) } -> std::convertible_to<double>;
  { pgf.excess_c(x, y) } -> std::convertible_to<double>;
  { pgf.excess_s(x, y) } -> std::convertible_to<double>;
  { pgf.moments() } -> std::convertible_to<DegreeMoments>;
};

/// Poisson(lambda_c) community layer and zero-inflated Poisson(lambda_s)
/// school layer, using G(z) = exp(lambda (z - 1)).
class PoissonPgf {
 public:
  PoissonPgf(double lambda_c, double lambda_s, double alpha)
      : lambda_c_(lambda_c), lambda_s_(lambda_s), alpha_(alpha) {}

  double root(double x, double y) const { return std::exp(lambda_c_ * (x - 1.0)) * school_root(y); }

  double root_complement(double x, double y) const {
    const double a = lambda_c_ * (x - 1.0);
    return -std::expm1(a) + std::exp(a) * alpha_ * -std::expm1(lambda_s_ * (y - 1.0));
  }

  double excess_c(double x, double y) const { return std::exp(lambda_c_ * (x - 1.0)) * school_root(y); }

  double excess_s(double x, double y) const {
    return std::exp(lambda_c_ * (x - 1.0) + lambda_s_ * (y - 1.0));
  }

  DegreeMoments moments() const {
    DegreeMoments mo;
    mo.mean_kc = lambda_c_;
    mo.mean_kc2 = lambda_c_ + lambda_c_ * lambda_c_;
    mo.mean_ks = alpha_ * lambda_s_;
    mo.mean_ks2 = alpha_ * (lambda_s_ + lambda_s_ * lambda_s_);
    mo.mean_kcks = mo.mean_kc * mo.mean_ks;
    return mo;
  }

 private:
  double school_root(double y) const { return 1.0 - alpha_ * -std::expm1(lambda_s_ * (y - 1.0)); }

  double lambda_c_;
  double lambda_s_;
  double alpha_;
};

/// Direct summation over the (k_c, k_s) grid of a truncated colored degree
/// distribution.
class GridPgf {
 public:
  explicit GridPgf(ColoredDegreePmf pmf) : pmf_(std::move(pmf)) {
    // Normalizers come from the very same sums evaluated at (1, 1), so the
    // excess-degree functions return exactly one there.
    norm_c_ = excess_c_raw(1.0, 1.0);
    norm_s_ = excess_s_raw(1.0, 1.0);
    moments_ = compute_moments();
  }

  double root(double x, double y) const {
    fill_powers(x, y);
    double s = 0.0;
    for (std::size_t kc = 0; kc <= pmf_.max_kc(); ++kc) {
      for (std::size_t ks = 0; ks <= pmf_.max_ks(); ++ks) s += pmf_(kc, ks) * xp_[kc] * yp_[ks];
    }
    return s;
  }

  double root_complement(double x, double y) const {
    fill_powers(x, y);
    double s = 0.0;
    for (std::size_t kc = 0; kc <= pmf_.max_kc(); ++kc) {
      for (std::size_t ks = 0; ks <= pmf_.max_ks(); ++ks) {
        s += pmf_(kc, ks) * (1.0 - xp_[kc] * yp_[ks]);
      }
    }
    return s;
  }

  double excess_c(double x, double y) const { return norm_c_ > 0.0 ? excess_c_raw(x, y) / norm_c_ : 1.0; }
  double excess_s(double x, double y) const { return norm_s_ > 0.0 ? excess_s_raw(x, y) / norm_s_ : 1.0; }

  DegreeMoments moments() const { return moments_; }

  const ColoredDegreePmf& pmf() const noexcept { return pmf_; }

 private:
  void fill_powers(double x, double y) const {
    xp_.assign(pmf_.max_kc() + 1, 1.0);
    yp_.assign(pmf_.max_ks() + 1, 1.0);
    for (std::size_t k = 1; k < xp_.size(); ++k) xp_[k] = xp_[k - 1] * x;
    for (std::size_t k = 1; k < yp_.size(); ++k) yp_[k] = yp_[k - 1] * y;
  }

  double excess_c_raw(double x, double y) const {
    fill_powers(x, y);
    double s = 0.0;
    for (std::size_t kc = 1; kc <= pmf_.max_kc(); ++kc) {
      for (std::size_t ks = 0; ks <= pmf_.max_ks(); ++ks) {
        s += pmf_(kc, ks) * static_cast<double>(kc) * xp_[kc - 1] * yp_[ks];
      }
    }
    return s;
  }

  double excess_s_raw(double x, double y) const {
    fill_powers(x, y);
    double s = 0.0;
    for (std::size_t kc = 0; kc <= pmf_.max_kc(); ++kc) {
      for (std::size_t ks = 1; ks <= pmf_.max_ks(); ++ks) {
        s += pmf_(kc, ks) * static_cast<double>(ks) * xp_[kc] * yp_[ks - 1];
      }
    }
    return s;
  }

  DegreeMoments compute_moments() const {
    DegreeMoments mo;
    for (std::size_t kc = 0; kc <= pmf_.max_kc(); ++kc) {
      for (std::size_t ks = 0; ks <= pmf_.max_ks(); ++ks) {
        const double p = pmf_(kc, ks);
        const auto c = static_cast<double>(kc);
        const auto s = static_cast<double>(ks);
        mo.mean_kc += p * c;
        mo.mean_ks += p * s;
        mo.mean_kc2 += p * c * c;
        mo.mean_ks2 += p * s * s;
        mo.mean_kcks += p * c * s;
      }
    }
    return mo;
  }

  ColoredDegreePmf pmf_;
  double norm_c_ = 0.0;
  double norm_s_ = 0.0;
  DegreeMoments moments_;
  // Scratch buffers; a GridPgf is not meant to be shared across threads.
  mutable std::vector<double> xp_;
  mutable std::vector<double> yp_;
};

using AnyPgf = std::variant<PoissonPgf, GridPgf>;

/// Closed form when both layers are Poisson and the scenario allows it,
/// otherwise the truncated grid.
inline AnyPgf make_pgf(const ScenarioConfig& cfg) {
  if (cfg.solver.closed_form_poisson && cfg.dist_c.is_poisson() && cfg.dist_s.is_poisson()) {
    return PoissonPgf(cfg.dist_c.poisson_mean(), cfg.dist_s.poisson_mean(), cfg.alpha);
  }
  return GridPgf(colored_degree_pmf(cfg));
}

}  // namespace mlmask
