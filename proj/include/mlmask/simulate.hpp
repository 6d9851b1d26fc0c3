#pragma once

// Monte-Carlo bond percolation on generated two-layer networks. Every
// undirected edge carries two independent directed transmission coins:
// u -> v succeeds with probability T[type(u), type(v)] of the edge's layer.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "mlmask/network.hpp"
#include "mlmask/rng.hpp"
#include "mlmask/scenario.hpp"

namespace mlmask {

/// Zero-based mask type of every node.
struct MaskAssignment {
  std::vector<std::uint8_t> type_of;

  std::vector<std::size_t> counts(std::size_t types) const {
    std::vector<std::size_t> out(types, 0);
    for (std::uint8_t t : type_of) ++out[t];
    return out;
  }
};

/// I.i.d. categorical draws with probabilities masks.fraction.
inline MaskAssignment assign_masks(std::size_t n, const MaskSet& masks, std::uint64_t rng_seed) {
  MaskAssignment a;
  a.type_of.resize(n);
  if (masks.size() == 1) return a;
  Engine rng(rng_seed);
  std::discrete_distribution<int> draw(masks.fraction.begin(), masks.fraction.end());
  for (auto& t : a.type_of) t = static_cast<std::uint8_t>(draw(rng));
  return a;
}

struct OutbreakOutcome {
  std::size_t infected_total = 0;
  std::vector<std::size_t> infected_by_type;
  bool is_epidemic = false;
  std::uint8_t seed_type = 0;
};

/// Uniform in [0,1) that decides whether the directed attempt along `edge`
/// of `layer` in `direction` succeeds. Fixed by (rng_seed, layer, edge,
/// direction) alone, so outcomes do not depend on exploration order and
/// raising any transmissibility can only grow the infected set.
inline double transmission_draw(std::uint64_t rng_seed, Layer layer, std::uint32_t edge,
                                std::uint8_t direction) noexcept {
  const std::uint64_t key = (static_cast<std::uint64_t>(edge) << 2) |
                            (static_cast<std::uint64_t>(layer) << 1) | direction;
  return unit_double(derive_seed(rng_seed, key));
}

/// Single-pass SIR spread from `seed_node`: each infected node attempts every
/// incident edge once; infected nodes stay infected. Self-loops are ignored;
/// parallel edges are separate attempts.
inline OutbreakOutcome spread_from_seed(const MultilayerGraph& g, const MaskAssignment& assignment,
                                        const TransmissibilityMatrices& T, NodeId seed_node,
                                        std::uint64_t rng_seed, double emergence_threshold = 0.05) {
  const std::size_t n = g.node_count();
  if (seed_node >= n) throw std::out_of_range("spread_from_seed: seed node out of range");
  const auto types = static_cast<std::size_t>(T.community.rows());

  std::vector<std::uint8_t> infected(n, 0);
  std::vector<NodeId> frontier{seed_node};
  infected[seed_node] = 1;
  OutbreakOutcome out;
  out.infected_by_type.assign(types, 0);
  out.seed_type = assignment.type_of[seed_node];

  for (std::size_t head = 0; head < frontier.size(); ++head) {
    const NodeId u = frontier[head];
    const std::uint8_t tu = assignment.type_of[u];
    ++out.infected_by_type[tu];
    for (Layer layer : {Layer::community, Layer::school}) {
      const Eigen::MatrixXd& matrix = layer == Layer::community ? T.community : T.school;
      for (const Incidence& inc : g.incidences(layer, u)) {
        if (infected[inc.neighbor]) continue;
        const double p = matrix(tu, assignment.type_of[inc.neighbor]);
        if (transmission_draw(rng_seed, layer, inc.edge, inc.direction) < p) {
          infected[inc.neighbor] = 1;
          frontier.push_back(inc.neighbor);
        }
      }
    }
  }
  out.infected_total = frontier.size();
  out.is_epidemic = static_cast<double>(out.infected_total) >= emergence_threshold * static_cast<double>(n);
  return out;
}

/// Monte-Carlo estimates over independent trials.
struct TrialSummary {
  std::size_t trials = 0;
  std::size_t epidemics = 0;
  double pe_hat = 0.0;
  double pe_se = 0.0;
  /// False when no trial was epidemic; the conditional size fields are then
  /// meaningless and left at zero.
  bool es_defined = false;
  double es_hat = 0.0;
  double es_se = 0.0;
  std::vector<double> es_by_type_hat;
  std::vector<double> es_by_type_se;
  /// Mean final fraction over all trials, epidemic or not.
  double es_unconditional = 0.0;
};

struct TrialRecord {
  OutbreakOutcome outcome;
  std::vector<std::size_t> type_counts;
};

/// One full trial: fresh network, fresh mask assignment, uniformly random
/// seed node, spread.
inline TrialRecord simulate_trial(const ScenarioConfig& cfg, const TransmissibilityMatrices& T,
                                  std::uint64_t trial_seed) {
  const MultilayerGraph g = generate_multilayer(cfg, derive_seed(trial_seed, 1));
  const MaskAssignment masks = assign_masks(cfg.n, cfg.masks, derive_seed(trial_seed, 2));
  Engine pick(derive_seed(trial_seed, 3));
  const auto seed_node = std::uniform_int_distribution<NodeId>(0, static_cast<NodeId>(cfg.n - 1))(pick);
  TrialRecord rec;
  rec.outcome = spread_from_seed(g, masks, T, seed_node, derive_seed(trial_seed, 4), cfg.emergence_threshold);
  rec.type_counts = masks.counts(cfg.masks.size());
  return rec;
}

namespace detail {

struct MeanAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double standard_error() const {
    if (count < 2) return 0.0;
    const double c = static_cast<double>(count);
    const double var = std::max(0.0, (sum_sq - sum * sum / c) / (c - 1.0));
    return std::sqrt(var / c);
  }
};

/// Runs body(i) for i in [0, count) on `threads` workers.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
}

}  // namespace detail

/// Aggregates records in index order, so the summary does not depend on how
/// trials were scheduled.
inline TrialSummary summarize_trials(const std::vector<TrialRecord>& records, std::size_t n, std::size_t types) {
  TrialSummary s;
  s.trials = records.size();
  detail::MeanAccumulator size, unconditional;
  std::vector<detail::MeanAccumulator> by_type(types);
  for (const TrialRecord& r : records) {
    const double fraction = static_cast<double>(r.outcome.infected_total) / static_cast<double>(n);
    unconditional.add(fraction);
    if (!r.outcome.is_epidemic) continue;
    ++s.epidemics;
    size.add(fraction);
    for (std::size_t t = 0; t < types; ++t) {
      if (r.type_counts[t] > 0) {
        by_type[t].add(static_cast<double>(r.outcome.infected_by_type[t]) / static_cast<double>(r.type_counts[t]));
      }
    }
  }
  if (s.trials > 0) {
    const double p = static_cast<double>(s.epidemics) / static_cast<double>(s.trials);
    s.pe_hat = p;
    s.pe_se = std::sqrt(p * (1.0 - p) / static_cast<double>(s.trials));
  }
  s.es_unconditional = unconditional.mean();
  s.es_defined = s.epidemics > 0;
  if (s.es_defined) {
    s.es_hat = size.mean();
    s.es_se = size.standard_error();
    for (const auto& acc : by_type) {
      s.es_by_type_hat.push_back(acc.mean());
      s.es_by_type_se.push_back(acc.standard_error());
    }
  }
  return s;
}

/// Independent trials with per-trial seeds derive_seed(master_seed, index).
/// The result is identical for any thread count.
inline TrialSummary run_trials(const ScenarioConfig& cfg, std::size_t trials, std::uint64_t master_seed,
                               unsigned threads = 1) {
  validate_scenario(cfg);
  if (trials == 0) throw std::invalid_argument("run_trials: at least one trial is required");
  const TransmissibilityMatrices T = build_transmissibility(cfg);
  std::vector<TrialRecord> records(trials);
  detail::parallel_for(trials, threads,
                       [&](std::size_t i) { records[i] = simulate_trial(cfg, T, derive_seed(master_seed, i)); });
  return summarize_trials(records, cfg.n, cfg.masks.size());
}

}  // namespace mlmask
