#pragma once

// Two-layer configuration-model networks. The community layer spans all n
// nodes; the school layer spans a Bernoulli(alpha) subset. Stubs are matched
// uniformly at random within each layer, independently of the other layer.
// Self-loops and parallel edges are kept.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mlmask/errors.hpp"
#include "mlmask/rng.hpp"
#include "mlmask/scenario.hpp"

namespace mlmask {

using NodeId = std::uint32_t;

enum class Layer : std::uint8_t { community = 0, school = 1 };

inline char layer_tag(Layer layer) { return layer == Layer::community ? 'c' : 's'; }

/// Undirected edge, stored with u <= v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// One endpoint's view of an edge: the node at the other end, the edge's
/// index within its layer, and which direction (0: u->v, 1: v->u) a
/// transmission from this endpoint would take.
struct Incidence {
  NodeId neighbor;
  std::uint32_t edge;
  std::uint8_t direction;
};

/// Immutable two-layer multigraph with per-layer CSR adjacency.
class MultilayerGraph {
 public:
  MultilayerGraph() = default;

  MultilayerGraph(std::size_t n, std::vector<Edge> community, std::vector<Edge> school,
                  std::vector<std::uint8_t> school_members)
      : n_(n), school_members_(std::move(school_members)) {
    if (school_members_.size() != n_) throw std::invalid_argument("school membership vector has wrong length");
    edges_[0] = std::move(community);
    edges_[1] = std::move(school);
    for (int l = 0; l < 2; ++l) {
      for (const Edge& e : edges_[l]) {
        if (e.u >= n_ || e.v >= n_) throw std::invalid_argument("edge endpoint out of range");
        if (l == 1 && (!school_members_[e.u] || !school_members_[e.v])) {
          throw std::invalid_argument("school edge touches a non-member");
        }
      }
      build_adjacency(l);
    }
  }

  std::size_t node_count() const noexcept { return n_; }
  std::span<const Edge> edges(Layer layer) const noexcept { return edges_[index(layer)]; }
  std::span<const std::uint8_t> school_members() const noexcept { return school_members_; }
  bool is_school_member(NodeId v) const noexcept { return school_members_[v] != 0; }

  /// Incident non-loop edges of `v` in `layer`, ordered by neighbour id.
  std::span<const Incidence> incidences(Layer layer, NodeId v) const noexcept {
    const auto& off = offsets_[index(layer)];
    const auto& adj = adjacency_[index(layer)];
    return std::span<const Incidence>(adj).subspan(off[v], off[v + 1] - off[v]);
  }

  /// Degree counting both ends of self-loops, as in stub matching.
  std::size_t degree(Layer layer, NodeId v) const noexcept { return stub_degree_[index(layer)][v]; }

  friend bool operator==(const MultilayerGraph& a, const MultilayerGraph& b) {
    return a.n_ == b.n_ && a.edges_[0] == b.edges_[0] && a.edges_[1] == b.edges_[1] &&
           a.school_members_ == b.school_members_;
  }

 private:
  static constexpr int index(Layer layer) noexcept { return static_cast<int>(layer); }

  void build_adjacency(int l) {
    auto& deg = stub_degree_[l];
    deg.assign(n_, 0);
    std::vector<std::uint32_t> count(n_ + 1, 0);
    for (const Edge& e : edges_[l]) {
      ++deg[e.u];
      ++deg[e.v];
      if (e.u != e.v) {
        ++count[e.u + 1];
        ++count[e.v + 1];
      }
    }
    std::partial_sum(count.begin(), count.end(), count.begin());
    offsets_[l] = count;
    adjacency_[l].resize(count[n_]);
    for (std::uint32_t id = 0; id < edges_[l].size(); ++id) {
      const Edge& e = edges_[l][id];
      if (e.u == e.v) continue;
      adjacency_[l][count[e.u]++] = {e.v, id, 0};
      adjacency_[l][count[e.v]++] = {e.u, id, 1};
    }
    for (std::size_t v = 0; v < n_; ++v) {
      std::sort(adjacency_[l].begin() + offsets_[l][v], adjacency_[l].begin() + offsets_[l][v + 1],
                [](const Incidence& a, const Incidence& b) {
                  return a.neighbor != b.neighbor ? a.neighbor < b.neighbor : a.edge < b.edge;
                });
    }
  }

  std::size_t n_ = 0;
  std::vector<Edge> edges_[2];
  std::vector<std::uint8_t> school_members_;
  std::vector<std::uint32_t> offsets_[2];
  std::vector<Incidence> adjacency_[2];
  std::vector<std::uint32_t> stub_degree_[2];
};

struct ColoredDegreeSample {
  std::vector<std::uint32_t> community;
  std::vector<std::uint32_t> school;
  std::vector<std::uint8_t> school_members;
};

namespace detail {

class DegreeSampler {
 public:
  explicit DegreeSampler(const DegreePmf& pmf) {
    if (pmf.is_poisson()) {
      poisson_.emplace(pmf.poisson_mean() > 0.0 ? pmf.poisson_mean() : 1.0);
      zero_ = pmf.poisson_mean() == 0.0;
    } else {
      const auto p = pmf.probabilities();
      table_.emplace(p.begin(), p.end());
    }
  }

  std::uint32_t operator()(Engine& rng) {
    if (zero_) return 0;
    if (poisson_) return static_cast<std::uint32_t>((*poisson_)(rng));
    return static_cast<std::uint32_t>((*table_)(rng));
  }

 private:
  std::optional<std::poisson_distribution<std::uint32_t>> poisson_;
  std::optional<std::discrete_distribution<std::uint32_t>> table_;
  bool zero_ = false;
};

// Redraws the degree of one uniformly chosen eligible node until the stub
// sum is even.
inline void fix_parity(std::vector<std::uint32_t>& degrees, std::span<const NodeId> eligible,
                       DegreeSampler& sampler, bool can_flip, Engine& rng) {
  std::uint64_t total = std::accumulate(degrees.begin(), degrees.end(), std::uint64_t{0});
  if (total % 2 == 0) return;
  if (!can_flip || eligible.empty()) {
    throw ValidationError({"odd stub sum cannot be repaired: degree distribution has single-parity support"});
  }
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  while (total % 2 == 1) {
    const NodeId v = eligible[pick(rng)];
    const std::uint32_t fresh = sampler(rng);
    total = total - degrees[v] + fresh;
    degrees[v] = fresh;
  }
}

}  // namespace detail

/// Draws k_c for every node, school membership with probability alpha, and
/// k_s for members. Each layer's stub sum is made even.
inline ColoredDegreeSample sample_colored_degrees(const ScenarioConfig& cfg, std::uint64_t rng_seed) {
  Engine rng(rng_seed);
  const std::size_t n = cfg.n;
  ColoredDegreeSample out;
  out.community.resize(n);
  out.school.assign(n, 0);
  out.school_members.assign(n, 0);

  detail::DegreeSampler sample_c(cfg.dist_c);
  detail::DegreeSampler sample_s(cfg.dist_s);
  std::bernoulli_distribution member(cfg.alpha);
  std::vector<NodeId> members;
  for (std::size_t v = 0; v < n; ++v) out.community[v] = sample_c(rng);
  for (std::size_t v = 0; v < n; ++v) {
    if (member(rng)) {
      out.school_members[v] = 1;
      members.push_back(static_cast<NodeId>(v));
      out.school[v] = sample_s(rng);
    }
  }

  std::vector<NodeId> everyone(n);
  std::iota(everyone.begin(), everyone.end(), NodeId{0});
  const bool poisson_c = cfg.dist_c.is_poisson() && cfg.dist_c.poisson_mean() > 0.0;
  const bool poisson_s = cfg.dist_s.is_poisson() && cfg.dist_s.poisson_mean() > 0.0;
  detail::fix_parity(out.community, everyone, sample_c, poisson_c || cfg.dist_c.mixes_parity(), rng);
  detail::fix_parity(out.school, members, sample_s, poisson_s || cfg.dist_s.mixes_parity(), rng);
  return out;
}

/// Uniform random perfect matching of the stub multiset: node i contributes
/// degrees[i] stubs; consecutive stubs of a uniform shuffle are paired.
inline std::vector<Edge> pair_stubs(std::span<const std::uint32_t> degrees, std::uint64_t rng_seed) {
  std::vector<NodeId> stubs;
  stubs.reserve(std::accumulate(degrees.begin(), degrees.end(), std::size_t{0}));
  for (std::size_t v = 0; v < degrees.size(); ++v) stubs.insert(stubs.end(), degrees[v], static_cast<NodeId>(v));
  if (stubs.size() % 2 != 0) throw std::invalid_argument("pair_stubs: odd number of stubs");

  Engine rng(rng_seed);
  std::shuffle(stubs.begin(), stubs.end(), rng);
  std::vector<Edge> edges(stubs.size() / 2);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const NodeId a = stubs[2 * e];
    const NodeId b = stubs[2 * e + 1];
    edges[e] = {std::min(a, b), std::max(a, b)};
  }
  return edges;
}

/// Deterministic in `rng_seed`; the two layers use independent streams.
inline MultilayerGraph generate_multilayer(const ScenarioConfig& cfg, std::uint64_t rng_seed) {
  ColoredDegreeSample degrees = sample_colored_degrees(cfg, derive_seed(rng_seed, 0));
  auto community = pair_stubs(degrees.community, derive_seed(rng_seed, 1));
  auto school = pair_stubs(degrees.school, derive_seed(rng_seed, 2));
  return MultilayerGraph(cfg.n, std::move(community), std::move(school), std::move(degrees.school_members));
}

// ---------------------------------------------------------------------------
// Edge-list dump
//
//   <n> <alpha> <seed>
//   school <member ids...>
//   <u> <v> c|s
//   ...
//   masks <type of node 0> ... <type of node n-1>     (optional, 1-based)

struct EdgeListFile {
  MultilayerGraph graph;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  /// Zero-based mask type per node, when the file carries a masks line.
  std::optional<std::vector<std::uint8_t>> mask_types;
};

inline void write_edge_list(std::ostream& out, const MultilayerGraph& g, double alpha, std::uint64_t seed,
                            const std::vector<std::uint8_t>* mask_types = nullptr) {
  std::ostringstream alpha_text;
  alpha_text.precision(17);
  alpha_text << alpha;
  out << g.node_count() << ' ' << alpha_text.str() << ' ' << seed << '\n';
  out << "school";
  for (NodeId v = 0; v < g.node_count(); ++v) {
    if (g.is_school_member(v)) out << ' ' << v;
  }
  out << '\n';
  for (Layer layer : {Layer::community, Layer::school}) {
    for (const Edge& e : g.edges(layer)) out << e.u << ' ' << e.v << ' ' << layer_tag(layer) << '\n';
  }
  if (mask_types) {
    out << "masks";
    for (std::uint8_t t : *mask_types) out << ' ' << static_cast<int>(t) + 1;
    out << '\n';
  }
}

inline EdgeListFile read_edge_list(std::istream& in) {
  std::string line;
  auto fail = [](const std::string& why) -> EdgeListFile { throw ValidationError({"edge list: " + why}); };
  std::size_t n = 0;
  EdgeListFile file;
  bool header = false;
  std::vector<Edge> community, school;
  std::vector<std::uint8_t> members;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    if (!header) {
      if (!(row >> n >> file.alpha >> file.seed)) return fail("bad header line '" + line + "'");
      members.assign(n, 0);
      header = true;
      continue;
    }
    std::string first;
    row >> first;
    if (first == "school") {
      std::size_t v;
      while (row >> v) {
        if (v >= n) return fail("school member out of range");
        members[v] = 1;
      }
      continue;
    }
    if (first == "masks") {
      std::vector<std::uint8_t> types;
      int t;
      while (row >> t) {
        if (t < 1 || t > 255) return fail("mask type out of range");
        types.push_back(static_cast<std::uint8_t>(t - 1));
      }
      if (types.size() != n) return fail("masks line must list one type per node");
      file.mask_types = std::move(types);
      continue;
    }
    std::size_t u = 0, v = 0;
    char tag = 0;
    std::istringstream edge_row(line);
    if (!(edge_row >> u >> v >> tag) || (tag != 'c' && tag != 's')) return fail("bad edge line '" + line + "'");
    if (u >= n || v >= n) return fail("edge endpoint out of range");
    const Edge e{static_cast<NodeId>(std::min(u, v)), static_cast<NodeId>(std::max(u, v))};
    (tag == 'c' ? community : school).push_back(e);
  }
  if (!header) return fail("missing header line");
  try {
    file.graph = MultilayerGraph(n, std::move(community), std::move(school), std::move(members));
  } catch (const std::invalid_argument& e) {
    return fail(e.what());
  }
  return file;
}

}  // namespace mlmask
