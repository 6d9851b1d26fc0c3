#pragma once

// Exact percolation outcomes on tiny graphs by enumerating every open/closed
// configuration of the directed transmission attempts.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "mlmask/network.hpp"
#include "mlmask/scenario.hpp"
#include "mlmask/simulate.hpp"

namespace mlmask {

struct SmallGraphOracleResult {
  std::vector<double> exact_pe_per_seed;
  std::vector<double> exact_mean_size_per_seed;
  /// E[size^2] per seed, for exact Monte-Carlo standard errors.
  std::vector<double> exact_size_second_moment_per_seed;

  double mean_over_seeds(const std::vector<double>& v) const {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  }
  double pe() const { return mean_over_seeds(exact_pe_per_seed); }
  double mean_size() const { return mean_over_seeds(exact_mean_size_per_seed); }
  double size_second_moment() const { return mean_over_seeds(exact_size_second_moment_per_seed); }
};

inline constexpr std::size_t kOracleMaxDirectedSlots = 24;

inline SmallGraphOracleResult exact_small_graph_oracle(const MultilayerGraph& g, const MaskAssignment& assignment,
                                                       const TransmissibilityMatrices& T,
                                                       double emergence_threshold = 0.05) {
  const std::size_t n = g.node_count();
  const std::size_t edge_count = g.edges(Layer::community).size() + g.edges(Layer::school).size();
  if (2 * edge_count > kOracleMaxDirectedSlots) {
    throw std::invalid_argument("exact_small_graph_oracle: more than 24 directed attempts");
  }
  if (n == 0 || n > 64) throw std::invalid_argument("exact_small_graph_oracle: node count must be in [1, 64]");

  struct Slot {
    NodeId from, to;
    double p;
  };
  std::vector<Slot> slots;
  for (Layer layer : {Layer::community, Layer::school}) {
    const Eigen::MatrixXd& matrix = layer == Layer::community ? T.community : T.school;
    for (const Edge& e : g.edges(layer)) {
      if (e.u == e.v) continue;
      const auto tu = assignment.type_of[e.u];
      const auto tv = assignment.type_of[e.v];
      slots.push_back({e.u, e.v, matrix(tu, tv)});
      slots.push_back({e.v, e.u, matrix(tv, tu)});
    }
  }

  SmallGraphOracleResult r;
  r.exact_pe_per_seed.assign(n, 0.0);
  r.exact_mean_size_per_seed.assign(n, 0.0);
  r.exact_size_second_moment_per_seed.assign(n, 0.0);
  std::vector<std::uint64_t> out(n, 0);
  const double epidemic_size = emergence_threshold * static_cast<double>(n);

  auto leaf = [&](double weight) {
    for (std::size_t s = 0; s < n; ++s) {
      std::uint64_t reach = std::uint64_t{1} << s;
      for (;;) {
        std::uint64_t grown = reach;
        for (std::uint64_t rest = reach; rest; rest &= rest - 1) grown |= out[std::countr_zero(rest)];
        if (grown == reach) break;
        reach = grown;
      }
      const auto size = static_cast<double>(std::popcount(reach));
      r.exact_mean_size_per_seed[s] += weight * size;
      r.exact_size_second_moment_per_seed[s] += weight * size * size;
      if (size >= epidemic_size) r.exact_pe_per_seed[s] += weight;
    }
  };

  auto enumerate = [&](auto& self, std::size_t k, double weight) -> void {
    if (weight == 0.0) return;
    if (k == slots.size()) {
      leaf(weight);
      return;
    }
    const Slot& slot = slots[k];
    const std::uint64_t bit = std::uint64_t{1} << slot.to;
    const std::uint64_t before = out[slot.from];
    self(self, k + 1, weight * (1.0 - slot.p));
    out[slot.from] |= bit;
    self(self, k + 1, weight * slot.p);
    out[slot.from] = before;
  };
  enumerate(enumerate, 0, 1.0);
  return r;
}

/// Monte-Carlo estimates on a fixed graph compared with exact enumeration.
struct OracleComparison {
  SmallGraphOracleResult exact;
  std::size_t runs = 0;
  double mc_mean_size = 0.0;
  double mc_pe = 0.0;
  /// Standard errors implied by the exact distribution.
  double size_se = 0.0;
  double pe_se = 0.0;
  double size_z = 0.0;
  double pe_z = 0.0;

  bool within(double sigmas) const { return size_z <= sigmas && pe_z <= sigmas; }
};

/// Each run draws a uniformly random seed node and fresh transmission coins.
inline OracleComparison compare_with_oracle(const MultilayerGraph& g, const MaskAssignment& assignment,
                                            const TransmissibilityMatrices& T, double emergence_threshold,
                                            std::size_t runs, std::uint64_t master_seed) {
  OracleComparison c;
  c.exact = exact_small_graph_oracle(g, assignment, T, emergence_threshold);
  c.runs = runs;
  const auto n = static_cast<NodeId>(g.node_count());
  double size_sum = 0.0;
  std::size_t epidemics = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    const std::uint64_t run_seed = derive_seed(master_seed, r);
    Engine pick(derive_seed(run_seed, 0));
    const NodeId seed = std::uniform_int_distribution<NodeId>(0, n - 1)(pick);
    const OutbreakOutcome o = spread_from_seed(g, assignment, T, seed, derive_seed(run_seed, 1), emergence_threshold);
    size_sum += static_cast<double>(o.infected_total);
    epidemics += o.is_epidemic ? 1 : 0;
  }
  const auto count = static_cast<double>(runs);
  c.mc_mean_size = size_sum / count;
  c.mc_pe = static_cast<double>(epidemics) / count;
  const double mean = c.exact.mean_size();
  const double var = std::max(0.0, c.exact.size_second_moment() - mean * mean);
  const double p = c.exact.pe();
  c.size_se = std::sqrt(var / count);
  c.pe_se = std::sqrt(std::max(0.0, p * (1.0 - p)) / count);
  auto z = [](double estimate, double exact, double se) {
    const double gap = std::abs(estimate - exact);
    if (se > 0.0) return gap / se;
    return gap <= 1e-9 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  c.size_z = z(c.mc_mean_size, mean, c.size_se);
  c.pe_z = z(c.mc_pe, p, c.pe_se);
  return c;
}

}  // namespace mlmask
