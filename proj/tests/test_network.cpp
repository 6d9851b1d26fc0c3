#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "mlmask/network.hpp"

using namespace mlmask;
using Catch::Matchers::WithinAbs;

namespace {

ScenarioConfig layers(std::size_t n, double alpha, double lc, double ls) {
  ScenarioConfig cfg;
  cfg.n = n;
  cfg.alpha = alpha;
  cfg.dist_c = DegreePmf::poisson(lc);
  cfg.dist_s = DegreePmf::poisson(ls);
  return cfg;
}

std::size_t stub_sum(const std::vector<std::uint32_t>& d) { return std::accumulate(d.begin(), d.end(), std::size_t{0}); }

// Global transitivity of the simple graph underlying the community layer.
double transitivity(const MultilayerGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::set<NodeId>> adj(n);
  for (const Edge& e : g.edges(Layer::community)) {
    if (e.u == e.v) continue;
    adj[e.u].insert(e.v);
    adj[e.v].insert(e.u);
  }
  double triangles = 0.0, triples = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const double k = static_cast<double>(adj[v].size());
    triples += k * (k - 1.0) / 2.0;
    for (NodeId a : adj[v]) {
      for (NodeId b : adj[v]) {
        if (a < b && adj[a].count(b)) triangles += 1.0;
      }
    }
  }
  // Each triangle is seen once from each of its three corners.
  return triples > 0.0 ? triangles / triples : 0.0;
}

}  // namespace

TEST_CASE("closed school has no school degrees") {
  const auto sample = sample_colored_degrees(layers(2000, 0.0, 4.0, 8.0), 1);
  CHECK(std::all_of(sample.school.begin(), sample.school.end(), [](auto k) { return k == 0; }));
  CHECK(std::all_of(sample.school_members.begin(), sample.school_members.end(), [](auto m) { return m == 0; }));
}

TEST_CASE("sampled degrees have the configured means") {
  const std::size_t n = 10000;
  const auto s = sample_colored_degrees(layers(n, 0.4, 6.0, 8.0), 2);
  const double mean_c = static_cast<double>(stub_sum(s.community)) / n;
  CHECK(std::abs(mean_c - 6.0) < 4.0 * std::sqrt(6.0 / n));
  const auto members = static_cast<double>(std::count(s.school_members.begin(), s.school_members.end(), 1));
  CHECK(std::abs(members - 0.4 * n) < 4.0 * std::sqrt(n * 0.4 * 0.6));
  const double mean_s = static_cast<double>(stub_sum(s.school)) / members;
  CHECK(std::abs(mean_s - 8.0) < 4.0 * std::sqrt(8.0 / members));
}

TEST_CASE("stub sums are always even") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = sample_colored_degrees(layers(51, 0.5, 3.0, 2.0), seed);
    CHECK(stub_sum(s.community) % 2 == 0);
    CHECK(stub_sum(s.school) % 2 == 0);
    for (std::size_t v = 0; v < 51; ++v) {
      if (!s.school_members[v]) CHECK(s.school[v] == 0);
    }
  }
}

TEST_CASE("single-parity support with an odd stub sum is an error") {
  ScenarioConfig cfg = layers(5, 0.0, 0.0, 0.0);
  cfg.dist_c = DegreePmf::explicit_table({0.0, 1.0});
  CHECK_THROWS_AS(sample_colored_degrees(cfg, 1), ValidationError);
  cfg.n = 6;
  CHECK(stub_sum(sample_colored_degrees(cfg, 1).community) == 6);
}

TEST_CASE("pair_stubs on forced matchings") {
  const std::vector<std::uint32_t> two{1, 1};
  CHECK(pair_stubs(two, 7) == std::vector<Edge>{{0, 1}});
  const std::vector<std::uint32_t> loop{2, 0};
  CHECK(pair_stubs(loop, 7) == std::vector<Edge>{{0, 0}});
  const std::vector<std::uint32_t> odd{1, 2};
  CHECK_THROWS_AS(pair_stubs(odd, 7), std::invalid_argument);
  CHECK(pair_stubs(std::vector<std::uint32_t>{0, 0}, 7).empty());
}

TEST_CASE("pair_stubs picks perfect matchings uniformly") {
  const std::vector<std::uint32_t> degrees{1, 1, 1, 1};
  std::map<std::set<std::pair<NodeId, NodeId>>, int> counts;
  const int draws = 30000;
  for (int seed = 0; seed < draws; ++seed) {
    std::set<std::pair<NodeId, NodeId>> key;
    for (const Edge& e : pair_stubs(degrees, derive_seed(99, seed))) key.insert({e.u, e.v});
    ++counts[key];
  }
  REQUIRE(counts.size() == 3);
  double chi2 = 0.0;
  const double expected = draws / 3.0;
  for (const auto& [key, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 13.816);  // chi-square, 2 degrees of freedom, 0.999 quantile
}

TEST_CASE("graph generation is deterministic in the seed") {
  const auto cfg = layers(3000, 0.3, 6.0, 8.0);
  const auto a = generate_multilayer(cfg, 42);
  const auto b = generate_multilayer(cfg, 42);
  CHECK(a == b);
  CHECK_FALSE(a == generate_multilayer(cfg, 43));
}

TEST_CASE("an empty school distribution yields no school edges") {
  ScenarioConfig cfg = layers(1000, 1.0, 4.0, 0.0);
  cfg.dist_s = DegreePmf::explicit_table({1.0});
  const auto g = generate_multilayer(cfg, 5);
  CHECK(g.edges(Layer::school).empty());
  CHECK_FALSE(g.edges(Layer::community).empty());
}

TEST_CASE("stubs are conserved in every layer") {
  const auto cfg = layers(4001, 0.35, 5.0, 7.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto g = generate_multilayer(cfg, seed);
    const auto sampled = sample_colored_degrees(cfg, derive_seed(seed, 0));
    for (Layer layer : {Layer::community, Layer::school}) {
      const auto& want = layer == Layer::community ? sampled.community : sampled.school;
      CHECK(2 * g.edges(layer).size() == stub_sum(want));
      for (NodeId v = 0; v < cfg.n; ++v) CHECK(g.degree(layer, v) == want[v]);
    }
    for (const Edge& e : g.edges(Layer::school)) {
      CHECK(g.is_school_member(e.u));
      CHECK(g.is_school_member(e.v));
    }
  }
}

TEST_CASE("adjacency skips self-loops and keeps parallel edges") {
  const MultilayerGraph g(3, {{0, 0}, {0, 1}, {0, 1}, {1, 2}}, {{1, 2}}, {0, 1, 1});
  CHECK(g.degree(Layer::community, 0) == 4);
  const auto inc = g.incidences(Layer::community, 0);
  REQUIRE(inc.size() == 2);
  CHECK(inc[0].neighbor == 1);
  CHECK(inc[1].neighbor == 1);
  CHECK(inc[0].edge != inc[1].edge);
  CHECK(inc[0].direction == 0);
  const auto back = g.incidences(Layer::community, 2);
  REQUIRE(back.size() == 1);
  CHECK(back[0].direction == 1);
  CHECK(g.incidences(Layer::school, 0).empty());
  CHECK_THROWS_AS(MultilayerGraph(3, {}, {{0, 1}}, {0, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(MultilayerGraph(3, {{0, 3}}, {}, {0, 0, 0}), std::invalid_argument);
}

TEST_CASE("empirical degree histograms follow the configured distributions") {
  const std::size_t n = 10000;
  ScenarioConfig cfg = layers(n, 1.0, 6.0, 0.0);
  cfg.dist_s = DegreePmf::explicit_table({0.1, 0.2, 0.3, 0.4});
  const auto g = generate_multilayer(cfg, 77);
  for (Layer layer : {Layer::community, Layer::school}) {
    const DegreePmf& pmf = layer == Layer::community ? cfg.dist_c : cfg.dist_s;
    std::vector<double> hist(pmf.max_degree() + 40, 0.0);
    for (NodeId v = 0; v < n; ++v) hist[std::min<std::size_t>(g.degree(layer, v), hist.size() - 1)] += 1.0 / n;
    double cdf_emp = 0.0, cdf = 0.0, ks = 0.0;
    for (std::size_t k = 0; k < hist.size(); ++k) {
      cdf_emp += hist[k];
      cdf += pmf[k];
      ks = std::max(ks, std::abs(cdf_emp - cdf));
    }
    CHECK(ks < 1.95 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("community degrees do not depend on school membership") {
  const std::size_t n = 20000;
  const auto s = sample_colored_degrees(layers(n, 0.5, 6.0, 8.0), 123);
  double sum[2] = {0, 0}, sq[2] = {0, 0}, count[2] = {0, 0};
  for (std::size_t v = 0; v < n; ++v) {
    const int g = s.school_members[v];
    sum[g] += s.community[v];
    sq[g] += double(s.community[v]) * s.community[v];
    count[g] += 1;
  }
  const double m0 = sum[0] / count[0], m1 = sum[1] / count[1];
  const double v0 = sq[0] / count[0] - m0 * m0, v1 = sq[1] / count[1] - m1 * m1;
  const double z = (m0 - m1) / std::sqrt(v0 / count[0] + v1 / count[1]);
  CHECK(std::abs(z) < 4.0);
}

TEST_CASE("clustering vanishes roughly like 1/n") {
  auto mean_transitivity = [](std::size_t n, int graphs) {
    double total = 0.0;
    for (int k = 0; k < graphs; ++k) total += transitivity(generate_multilayer(layers(n, 0.0, 6.0, 0.0), 1000 + k));
    return total / graphs;
  };
  const double small = mean_transitivity(1000, 20);
  const double large = mean_transitivity(10000, 10);
  // Configuration-model value (<k^2>-<k>)^2 / (n <k>^3) = 4.17 / n.
  CHECK(small > 0.5 * 4.17e-3);
  CHECK(small < 2.0 * 4.17e-3);
  CHECK(small / large > 4.0);
  CHECK(small / large < 25.0);
}

TEST_CASE("edge lists round-trip") {
  const auto cfg = layers(300, 0.3, 3.0, 4.0);
  const auto g = generate_multilayer(cfg, 9);
  std::vector<std::uint8_t> types(300);
  for (std::size_t v = 0; v < 300; ++v) types[v] = static_cast<std::uint8_t>(v % 3);
  std::stringstream io;
  write_edge_list(io, g, 0.1 + 0.2, 9, &types);
  const EdgeListFile file = read_edge_list(io);
  CHECK(file.graph == g);
  CHECK(file.alpha == 0.1 + 0.2);
  CHECK(file.seed == 9);
  REQUIRE(file.mask_types);
  CHECK(*file.mask_types == types);

  std::stringstream plain;
  write_edge_list(plain, g, 0.3, 9);
  CHECK_FALSE(read_edge_list(plain).mask_types);
}

TEST_CASE("malformed edge lists are rejected") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_edge_list(in);
  };
  CHECK_THROWS_AS(parse(""), ValidationError);
  CHECK_THROWS_AS(parse("3 0.5 1\n0 5 c\n"), ValidationError);
  CHECK_THROWS_AS(parse("3 0.5 1\n0 1 x\n"), ValidationError);
  CHECK_THROWS_AS(parse("3 0.5 1\nschool 0\n0 1 s\n"), ValidationError);
  CHECK_THROWS_AS(parse("3 0.5 1\nmasks 1 2\n"), ValidationError);
  CHECK_NOTHROW(parse("# comment\n3 0.5 1\nschool 0 1\n0 1 s\n1 2 c\nmasks 1 2 1\n"));
}
