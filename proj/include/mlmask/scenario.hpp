#pragma once

// Scenario definition for the two-layer (community + school) mask model and
// the quantities derived from it that both the analytic solver and the
// simulator consume.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mlmask/errors.hpp"

namespace mlmask {

/// The M mask types: population fractions and filtration efficiencies.
/// "No mask" is just a type with both efficiencies zero.
struct MaskSet {
  std::vector<double> fraction;
  std::vector<double> eps_in;
  std::vector<double> eps_out;

  std::size_t size() const noexcept { return fraction.size(); }

  static MaskSet unmasked() { return MaskSet{{1.0}, {0.0}, {0.0}}; }
};

/// Degree distribution of one layer, either Poisson (truncated once the
/// discarded tail drops below `tail_tolerance`) or an explicit table.
class DegreePmf {
 public:
  enum class Kind { poisson, explicit_table };

  static constexpr double kDefaultTailTolerance = 1e-10;

  /// Point mass at degree zero.
  DegreePmf() = default;

  static DegreePmf poisson(double mean, double tail_tolerance = kDefaultTailTolerance) {
    DegreePmf pmf;
    pmf.kind_ = Kind::poisson;
    pmf.mean_param_ = mean;
    pmf.tail_tolerance_ = tail_tolerance;
    pmf.build_poisson_table();
    return pmf;
  }

  static DegreePmf explicit_table(std::vector<double> p,
                                  double tail_tolerance = kDefaultTailTolerance) {
    DegreePmf pmf;
    pmf.kind_ = Kind::explicit_table;
    pmf.table_ = std::move(p);
    pmf.tail_tolerance_ = tail_tolerance;
    return pmf;
  }

  /// Accepts "poisson:<mean>" or "explicit:<p0,p1,...>".
  static DegreePmf parse(std::string_view text, double tail_tolerance = kDefaultTailTolerance);

  Kind kind() const noexcept { return kind_; }
  bool is_poisson() const noexcept { return kind_ == Kind::poisson; }
  /// Poisson rate; only meaningful when is_poisson().
  double poisson_mean() const noexcept { return mean_param_; }
  double tail_tolerance() const noexcept { return tail_tolerance_; }

  /// Truncated table p[0..max_degree()]. Poisson tables are renormalized to
  /// sum to one after truncation.
  std::span<const double> probabilities() const noexcept { return table_; }
  std::size_t max_degree() const noexcept { return table_.empty() ? 0 : table_.size() - 1; }
  double operator[](std::size_t k) const noexcept { return k < table_.size() ? table_[k] : 0.0; }

  double mean() const noexcept { return moment(1); }
  double second_moment() const noexcept { return moment(2); }

  /// True when the support contains both odd and even degrees, i.e. redrawing
  /// one node's degree can change the parity of a stub sum.
  bool mixes_parity() const noexcept {
    bool odd = false, even = false;
    for (std::size_t k = 0; k < table_.size(); ++k) {
      if (table_[k] > 0.0) (k % 2 ? odd : even) = true;
    }
    return odd && even;
  }

  std::vector<std::string> problems(std::string_view label) const;

  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    if (is_poisson()) {
      os << "poisson:" << mean_param_;
    } else {
      os << "explicit:";
      for (std::size_t k = 0; k < table_.size(); ++k) os << (k ? "," : "") << table_[k];
    }
    return os.str();
  }

 private:
  double moment(int order) const noexcept {
    double s = 0.0;
    for (std::size_t k = 0; k < table_.size(); ++k) {
      s += table_[k] * std::pow(static_cast<double>(k), order);
    }
    return s;
  }

  void build_poisson_table();

  Kind kind_ = Kind::poisson;
  double mean_param_ = 0.0;
  double tail_tolerance_ = kDefaultTailTolerance;
  std::vector<double> table_{1.0};
};

inline void DegreePmf::build_poisson_table() {
  table_.clear();
  const double lambda = mean_param_;
  if (!(lambda >= 0.0) || !std::isfinite(lambda) || !(tail_tolerance_ > 0.0)) return;
  if (lambda == 0.0) {
    table_ = {1.0};
    return;
  }
  const double log_lambda = std::log(lambda);
  auto log_p = [&](std::size_t k) {
    return static_cast<double>(k) * log_lambda - lambda - std::lgamma(static_cast<double>(k) + 1.0);
  };
  for (std::size_t k = 0;; ++k) {
    table_.push_back(std::exp(log_p(k)));
    // For k + 2 > lambda the tail past k is bounded by a geometric series
    // with ratio lambda / (k + 2).
    const double ratio = lambda / static_cast<double>(k + 2);
    if (ratio < 1.0) {
      const double tail_bound = std::exp(log_p(k + 1)) / (1.0 - ratio);
      if (tail_bound < tail_tolerance_) break;
    }
  }
  const double total = std::accumulate(table_.begin(), table_.end(), 0.0);
  for (double& p : table_) p /= total;
}

inline std::vector<std::string> DegreePmf::problems(std::string_view label) const {
  std::vector<std::string> out;
  const std::string name(label);
  if (!(tail_tolerance_ > 0.0 && tail_tolerance_ < 1.0)) {
    out.push_back(name + ": tail tolerance must lie in (0,1)");
  }
  if (is_poisson()) {
    if (!(mean_param_ >= 0.0) || !std::isfinite(mean_param_)) {
      out.push_back(name + ": poisson mean must be finite and >= 0");
    }
    return out;
  }
  if (table_.empty()) {
    out.push_back(name + ": explicit distribution is empty");
    return out;
  }
  double sum = 0.0;
  bool negative = false;
  for (double p : table_) {
    if (!(p >= 0.0) || !std::isfinite(p)) negative = true;
    sum += p;
  }
  if (negative) out.push_back(name + ": explicit probabilities must be finite and >= 0");
  if (!(std::abs(sum - 1.0) <= 1e-9)) out.push_back(name + ": explicit probabilities do not sum to 1");
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline double parse_double(std::string_view text, std::string_view what) {
  const std::string token(trim(text));
  if (token.empty()) throw ValidationError({std::string(what) + ": empty number"});
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size()) {
    throw ValidationError({std::string(what) + ": cannot parse number '" + token + "'"});
  }
  return value;
}

inline std::vector<double> parse_double_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    out.push_back(parse_double(piece, what));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline DegreePmf DegreePmf::parse(std::string_view text, double tail_tolerance) {
  text = detail::trim(text);
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ValidationError({"degree distribution '" + std::string(text) +
                           "' must be poisson:<mean> or explicit:<p0,p1,...>"});
  }
  const auto kind = detail::trim(text.substr(0, colon));
  const auto body = text.substr(colon + 1);
  if (kind == "poisson") return poisson(detail::parse_double(body, "poisson mean"), tail_tolerance);
  if (kind == "explicit") {
    return explicit_table(detail::parse_double_list(body, "explicit distribution"), tail_tolerance);
  }
  throw ValidationError({"unknown degree distribution kind '" + std::string(kind) + "'"});
}

/// Fixed-point and eigenvalue iteration controls for the analytic solver.
struct SolverOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 100000;
  /// Use e^{lambda(z-1)} identities when both layers are Poisson.
  bool closed_form_poisson = true;
};

/// A full model instance.
struct ScenarioConfig {
  std::size_t n = 10000;
  /// Probability that a node belongs to the school layer. Zero models a
  /// closed school.
  double alpha = 1.0;
  DegreePmf dist_c = DegreePmf::poisson(0.0);
  DegreePmf dist_s = DegreePmf::poisson(0.0);
  double tc_base = 0.0;
  double ts_base = 0.0;
  MaskSet masks = MaskSet::unmasked();
  double emergence_threshold = 0.05;
  SolverOptions solver;
};

/// Every invariant violation in `cfg`; empty when the scenario is valid.
inline std::vector<std::string> validation_errors(const ScenarioConfig& cfg) {
  std::vector<std::string> out;
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };

  if (cfg.n == 0) out.push_back("n must be positive");
  if (!in_unit(cfg.alpha)) out.push_back("alpha must lie in [0,1]");
  if (!in_unit(cfg.tc_base)) out.push_back("tc out of range [0,1]");
  if (!in_unit(cfg.ts_base)) out.push_back("ts out of range [0,1]");
  if (!(cfg.emergence_threshold > 0.0 && cfg.emergence_threshold < 1.0)) {
    out.push_back("emergence_threshold must lie in (0,1)");
  }
  for (auto& p : cfg.dist_c.problems("dist_c")) out.push_back(std::move(p));
  for (auto& p : cfg.dist_s.problems("dist_s")) out.push_back(std::move(p));

  const MaskSet& masks = cfg.masks;
  const std::size_t m = masks.size();
  if (m == 0) {
    out.push_back("at least one mask type is required");
  } else if (m > 255) {
    out.push_back("at most 255 mask types are supported");
  }
  if (masks.eps_in.size() != m || masks.eps_out.size() != m) {
    out.push_back("m, eps_in and eps_out must have the same length");
  }
  double sum = 0.0;
  bool negative = false;
  for (double f : masks.fraction) {
    if (!(f >= 0.0) || !std::isfinite(f)) negative = true;
    sum += f;
  }
  if (negative) out.push_back("m entries must be >= 0");
  if (m > 0 && !(std::abs(sum - 1.0) <= 1e-12)) out.push_back("m does not sum to 1");
  const bool eps_ok = std::all_of(masks.eps_in.begin(), masks.eps_in.end(), in_unit) &&
                      std::all_of(masks.eps_out.begin(), masks.eps_out.end(), in_unit);
  if (!eps_ok) out.push_back("efficiency out of range [0,1]");

  if (!(cfg.solver.tolerance > 0.0)) out.push_back("solver tolerance must be positive");
  if (cfg.solver.max_iterations == 0) out.push_back("solver max_iterations must be positive");
  return out;
}

/// Returns `cfg` unchanged when valid; otherwise throws a ValidationError
/// listing every violation.
inline const ScenarioConfig& validate_scenario(const ScenarioConfig& cfg) {
  auto problems = validation_errors(cfg);
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return cfg;
}

/// Per-layer M x M matrices; entry (i, j) is the probability that an
/// infected type-i node transmits to a susceptible type-j neighbour.
struct TransmissibilityMatrices {
  Eigen::MatrixXd community;
  Eigen::MatrixXd school;
};

inline TransmissibilityMatrices build_transmissibility(const ScenarioConfig& cfg) {
  const MaskSet& masks = cfg.masks;
  const auto m = static_cast<Eigen::Index>(masks.size());
  Eigen::MatrixXd shape(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      shape(i, j) = (1.0 - masks.eps_out[i]) * (1.0 - masks.eps_in[j]);
    }
  }
  return {shape * cfg.tc_base, shape * cfg.ts_base};
}

/// Community and school degree of one node.
struct ColoredDegree {
  std::size_t k_c = 0;
  std::size_t k_s = 0;
};

/// Joint distribution of colored degrees. Layers are independent, so the
/// joint is stored as a product of the community marginal and the
/// zero-inflated school marginal (non-members have no school edges).
class ColoredDegreePmf {
 public:
  ColoredDegreePmf(std::vector<double> community, std::vector<double> school)
      : community_(std::move(community)), school_(std::move(school)) {}

  double operator()(std::size_t k_c, std::size_t k_s) const noexcept {
    if (k_c >= community_.size() || k_s >= school_.size()) return 0.0;
    return community_[k_c] * school_[k_s];
  }
  double operator()(ColoredDegree d) const noexcept { return (*this)(d.k_c, d.k_s); }

  std::size_t max_kc() const noexcept { return community_.size() - 1; }
  std::size_t max_ks() const noexcept { return school_.size() - 1; }
  std::span<const double> community_marginal() const noexcept { return community_; }
  std::span<const double> school_marginal() const noexcept { return school_; }

 private:
  std::vector<double> community_;
  std::vector<double> school_;
};

/// P[(k_c, k_s)] = p_c(k_c) * (alpha p_s(k_s) + (1 - alpha) 1[k_s = 0]).
inline ColoredDegreePmf colored_degree_pmf(const ScenarioConfig& cfg) {
  const auto pc = cfg.dist_c.probabilities();
  const auto ps = cfg.dist_s.probabilities();
  std::vector<double> community(pc.begin(), pc.end());
  if (community.empty()) community = {1.0};
  std::vector<double> school(std::max<std::size_t>(ps.size(), 1), 0.0);
  for (std::size_t k = 0; k < ps.size(); ++k) school[k] = cfg.alpha * ps[k];
  school[0] += 1.0 - cfg.alpha;
  return ColoredDegreePmf(std::move(community), std::move(school));
}

/// Population-level moments of the colored degree. `mean_ks` includes the
/// zero school degree of non-members.
struct DegreeMoments {
  double mean_kc = 0.0;
  double mean_ks = 0.0;
  double mean_kc2 = 0.0;
  double mean_ks2 = 0.0;
  double mean_kcks = 0.0;

  bool has_community_edges() const noexcept { return mean_kc > 0.0; }
  bool has_school_edges() const noexcept { return mean_ks > 0.0; }
};

inline DegreeMoments degree_moments(const ScenarioConfig& cfg) {
  DegreeMoments mo;
  mo.mean_kc = cfg.dist_c.mean();
  mo.mean_kc2 = cfg.dist_c.second_moment();
  mo.mean_ks = cfg.alpha * cfg.dist_s.mean();
  mo.mean_ks2 = cfg.alpha * cfg.dist_s.second_moment();
  mo.mean_kcks = mo.mean_kc * mo.mean_ks;
  return mo;
}

}  // namespace mlmask
