#pragma once

// Branching-process analysis of the two-layer mask model: probability of
// emergence (extinction fixed point), epidemic threshold (spectral radius of
// the linearized extinction map) and expected epidemic size (level
// recursion on non-infection probabilities).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <variant>

#include <Eigen/Dense>

#include "mlmask/errors.hpp"
#include "mlmask/pgf.hpp"
#include "mlmask/scenario.hpp"
#include "mlmask/spectral.hpp"

namespace mlmask {

struct FixedPointStats {
  std::size_t iterations = 0;
  double residual = 0.0;
};

/// Probabilities that the infection reached through a community (school)
/// edge out of a type-i infector stays finite.
struct ExtinctionState {
  Eigen::VectorXd community;
  Eigen::VectorXd school;
  FixedPointStats stats;

  static ExtinctionState filled(std::size_t types, double value) {
    const auto m = static_cast<Eigen::Index>(types);
    return {Eigen::VectorXd::Constant(m, value), Eigen::VectorXd::Constant(m, value), {}};
  }
};

/// Non-infection probabilities of a type-i node reached over a community
/// (school) edge, and of a type-i root.
struct SizeState {
  Eigen::VectorXd community;
  Eigen::VectorXd school;
  Eigen::VectorXd root;
  FixedPointStats stats;

  static SizeState filled(std::size_t types, double value) {
    const auto m = static_cast<Eigen::Index>(types);
    return {Eigen::VectorXd::Constant(m, value), Eigen::VectorXd::Constant(m, value),
            Eigen::VectorXd::Constant(m, value), {}};
  }
};

struct EmergenceProbability {
  Eigen::VectorXd by_type;
  double average = 0.0;
};

struct EpidemicSize {
  Eigen::VectorXd by_type;
  double total = 0.0;
  SizeState state;
};

struct AnalyticReport {
  Eigen::VectorXd pe_by_type;
  double pe_avg = 0.0;
  double rho = 0.0;
  Eigen::VectorXd es_by_type;
  double es_total = 0.0;
  FixedPointStats extinction;
  FixedPointStats size;
  Eigen::MatrixXd jacobian;
};

namespace detail {

inline Eigen::VectorXd mask_weights(const MaskSet& masks) {
  return Eigen::Map<const Eigen::VectorXd>(masks.fraction.data(),
                                          static_cast<Eigen::Index>(masks.fraction.size()));
}

inline double sup_change(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

template <class F>
decltype(auto) with_pgf(const ScenarioConfig& cfg, F&& f) {
  const AnyPgf pgf = make_pgf(cfg);
  return std::visit(std::forward<F>(f), pgf);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Extinction recursion

/// One synchronous update of the extinction probabilities at x = 1:
///   h_c[i] <- sum_j m_j (1 - Tc[i,j] + Tc[i,j] excess_c(h_c[j], h_s[j]))
/// and likewise for h_s. A layer without edges keeps its entries at one.
template <ColoredPgf Pgf>
ExtinctionState extinction_step(const ExtinctionState& state, const Eigen::VectorXd& m,
                                const TransmissibilityMatrices& T, const Pgf& pgf) {
  const DegreeMoments mo = pgf.moments();
  const Eigen::Index types = m.size();
  // Written as 1 - sum_j m_j T (1 - phi) so that phi == 1 maps to exactly 1.
  Eigen::VectorXd gap_c = Eigen::VectorXd::Zero(types);
  Eigen::VectorXd gap_s = Eigen::VectorXd::Zero(types);
  for (Eigen::Index j = 0; j < types; ++j) {
    if (mo.has_community_edges()) gap_c[j] = m[j] * (1.0 - pgf.excess_c(state.community[j], state.school[j]));
    if (mo.has_school_edges()) gap_s[j] = m[j] * (1.0 - pgf.excess_s(state.community[j], state.school[j]));
  }
  ExtinctionState next;
  next.community = Eigen::VectorXd::Ones(types) - T.community * gap_c;
  next.school = Eigen::VectorXd::Ones(types) - T.school * gap_s;
  return next;
}

inline ExtinctionState extinction_step(const ExtinctionState& state, const ScenarioConfig& cfg,
                                       const TransmissibilityMatrices& T) {
  const Eigen::VectorXd m = detail::mask_weights(cfg.masks);
  return detail::with_pgf(cfg, [&](const auto& pgf) { return extinction_step(state, m, T, pgf); });
}

/// Smallest fixed point of the extinction recursion, reached by monotone
/// iteration from all zeros.
template <ColoredPgf Pgf>
ExtinctionState solve_extinction(const Eigen::VectorXd& m, const TransmissibilityMatrices& T,
                                 const Pgf& pgf, const SolverOptions& opts) {
  ExtinctionState state = ExtinctionState::filled(static_cast<std::size_t>(m.size()), 0.0);
  double residual = 0.0;
  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    ExtinctionState next = extinction_step(state, m, T, pgf);
    residual = std::max(detail::sup_change(next.community, state.community),
                        detail::sup_change(next.school, state.school));
    state = std::move(next);
    if (residual < opts.tolerance) {
      state.stats = {it, residual};
      return state;
    }
  }
  throw ConvergenceError("extinction recursion did not converge", residual, opts.max_iterations);
}

inline ExtinctionState solve_extinction(const ScenarioConfig& cfg, const TransmissibilityMatrices& T) {
  const Eigen::VectorXd m = detail::mask_weights(cfg.masks);
  return detail::with_pgf(cfg, [&](const auto& pgf) { return solve_extinction(m, T, pgf, cfg.solver); });
}

/// pe_by_type[i] = 1 - H_i(1), with H_i(1) = sum_d p_d h_c[i]^{k_c} h_s[i]^{k_s}.
template <ColoredPgf Pgf>
EmergenceProbability emergence_probability(const Eigen::VectorXd& m, const ExtinctionState& state,
                                           const Pgf& pgf) {
  EmergenceProbability pe;
  pe.by_type.resize(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    pe.by_type[i] = pgf.root_complement(state.community[i], state.school[i]);
  }
  pe.average = m.dot(pe.by_type);
  return pe;
}

inline EmergenceProbability emergence_probability(const ScenarioConfig& cfg, const ExtinctionState& state) {
  const Eigen::VectorXd m = detail::mask_weights(cfg.masks);
  return detail::with_pgf(cfg, [&](const auto& pgf) { return emergence_probability(m, state, pgf); });
}

// ---------------------------------------------------------------------------
// Threshold

/// Jacobian of the extinction map at the all-ones fixed point, in block form
/// [[J_cc, J_cs], [J_sc, J_ss]] with the community equations first. When the
/// school layer has no edges only the M x M block J_cc is returned.
///
///   J_cc[i,j] = m_j Tc[i,j] (<k_c^2> - <k_c>) / <k_c>
///   J_cs[i,j] = m_j Tc[i,j] <k_c k_s> / <k_c>
///   J_sc[i,j] = m_j Ts[i,j] <k_c k_s> / <k_s>
///   J_ss[i,j] = m_j Ts[i,j] (<k_s^2> - <k_s>) / <k_s>
inline Eigen::MatrixXd build_jacobian(const Eigen::VectorXd& m, const TransmissibilityMatrices& T,
                                      const DegreeMoments& mo) {
  const Eigen::Index types = m.size();
  const Eigen::MatrixXd tc_weighted = T.community * m.asDiagonal();
  const Eigen::MatrixXd ts_weighted = T.school * m.asDiagonal();
  const double cc = mo.has_community_edges() ? (mo.mean_kc2 - mo.mean_kc) / mo.mean_kc : 0.0;
  if (!mo.has_school_edges()) return cc * tc_weighted;

  const double cs = mo.has_community_edges() ? mo.mean_kcks / mo.mean_kc : 0.0;
  const double sc = mo.mean_kcks / mo.mean_ks;
  const double ss = (mo.mean_ks2 - mo.mean_ks) / mo.mean_ks;
  Eigen::MatrixXd J(2 * types, 2 * types);
  J.topLeftCorner(types, types) = cc * tc_weighted;
  J.topRightCorner(types, types) = cs * tc_weighted;
  J.bottomLeftCorner(types, types) = sc * ts_weighted;
  J.bottomRightCorner(types, types) = ss * ts_weighted;
  return J;
}

inline Eigen::MatrixXd build_jacobian(const ScenarioConfig& cfg, const TransmissibilityMatrices& T) {
  const Eigen::VectorXd m = detail::mask_weights(cfg.masks);
  return detail::with_pgf(cfg, [&](const auto& pgf) { return build_jacobian(m, T, pgf.moments()); });
}

/// theta* = 1 / rho(J): scaling both base transmissibilities by theta* puts
/// the scenario exactly on the threshold rho(J) = 1 (J is linear in them).
/// Empty when rho = 0, i.e. no transmissibility produces an epidemic.
inline std::optional<double> critical_scaling(const ScenarioConfig& cfg) {
  validate_scenario(cfg);
  const double rho = spectral_radius(build_jacobian(cfg, build_transmissibility(cfg)));
  if (rho == 0.0) return std::nullopt;
  return 1.0 / rho;
}

// ---------------------------------------------------------------------------
// Epidemic size

namespace detail {

// Per-type arguments of f_i: sum_j m_j (1 - T[j,i] + q[j] T[j,i]). Note the
// transposed index: neighbour j infects the focal node i.
inline Eigen::VectorXd neighbour_escape(const Eigen::VectorXd& m, const Eigen::MatrixXd& T,
                                        const Eigen::VectorXd& q) {
  const Eigen::VectorXd gap = m.cwiseProduct(Eigen::VectorXd::Ones(m.size()) - q);
  return Eigen::VectorXd::Ones(m.size()) - T.transpose() * gap;
}

}  // namespace detail

/// One level of the non-infection recursion:
///   q_c[i] <- sum_d p_d k_c/<k_c> f_i(q_c, q_s, k_c - 1, k_s)
///   q_s[i] <- sum_d p_d k_s/<k_s> f_i(q_c, q_s, k_c, k_s - 1)
///   root[i] = sum_d p_d f_i(q_c, q_s, k_c, k_s)
template <ColoredPgf Pgf>
SizeState size_step(const SizeState& state, const Eigen::VectorXd& m, const TransmissibilityMatrices& T,
                    const Pgf& pgf) {
  const DegreeMoments mo = pgf.moments();
  const Eigen::VectorXd a = detail::neighbour_escape(m, T.community, state.community);
  const Eigen::VectorXd b = detail::neighbour_escape(m, T.school, state.school);
  SizeState next = SizeState::filled(static_cast<std::size_t>(m.size()), 1.0);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (mo.has_community_edges()) next.community[i] = pgf.excess_c(a[i], b[i]);
    if (mo.has_school_edges()) next.school[i] = pgf.excess_s(a[i], b[i]);
    next.root[i] = pgf.root(a[i], b[i]);
  }
  return next;
}

inline SizeState size_step(const SizeState& state, const ScenarioConfig& cfg, const TransmissibilityMatrices& T) {
  const Eigen::VectorXd m = detail::mask_weights(cfg.masks);
  return detail::with_pgf(cfg, [&](const auto& pgf) { return size_step(state, m, T, pgf); });
}

template <ColoredPgf Pgf>
EpidemicSize epidemic_size(const Eigen::VectorXd& m, const TransmissibilityMatrices& T, const Pgf& pgf,
                           const SolverOptions& opts) {
  SizeState state = SizeState::filled(static_cast<std::size_t>(m.size()), 0.0);
  double residual = 0.0;
  bool converged = false;
  std::size_t it = 1;
  for (; it <= opts.max_iterations; ++it) {
    SizeState next = size_step(state, m, T, pgf);
    residual = std::max(detail::sup_change(next.community, state.community),
                        detail::sup_change(next.school, state.school));
    state = std::move(next);
    if (residual < opts.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("epidemic size recursion did not converge", residual, opts.max_iterations);
  state.stats = {it, residual};

  EpidemicSize es;
  const Eigen::VectorXd a = detail::neighbour_escape(m, T.community, state.community);
  const Eigen::VectorXd b = detail::neighbour_escape(m, T.school, state.school);
  es.by_type.resize(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    state.root[i] = pgf.root(a[i], b[i]);
    es.by_type[i] = pgf.root_complement(a[i], b[i]);
  }
  es.total = m.dot(es.by_type);
  es.state = std::move(state);
  return es;
}

inline EpidemicSize epidemic_size(const ScenarioConfig& cfg, const TransmissibilityMatrices& T) {
  const Eigen::VectorXd m = detail::mask_weights(cfg.masks);
  return detail::with_pgf(cfg, [&](const auto& pgf) { return epidemic_size(m, T, pgf, cfg.solver); });
}

// ---------------------------------------------------------------------------

/// Probability of emergence, spectral radius and epidemic size for one
/// scenario.
inline AnalyticReport analyze(const ScenarioConfig& cfg) {
  validate_scenario(cfg);
  const TransmissibilityMatrices T = build_transmissibility(cfg);
  const Eigen::VectorXd m = detail::mask_weights(cfg.masks);
  return detail::with_pgf(cfg, [&](const auto& pgf) {
    AnalyticReport report;
    const ExtinctionState ext = solve_extinction(m, T, pgf, cfg.solver);
    const EmergenceProbability pe = emergence_probability(m, ext, pgf);
    report.pe_by_type = pe.by_type;
    report.pe_avg = pe.average;
    report.extinction = ext.stats;
    report.jacobian = build_jacobian(m, T, pgf.moments());
    report.rho = spectral_radius(report.jacobian);
    const EpidemicSize es = epidemic_size(m, T, pgf, cfg.solver);
    report.es_by_type = es.by_type;
    report.es_total = es.total;
    report.size = es.state.stats;
    return report;
  });
}

}  // namespace mlmask
