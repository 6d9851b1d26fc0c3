#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "mlmask/config_io.hpp"
#include "mlmask/oracle.hpp"

using namespace mlmask;
using Catch::Matchers::WithinAbs;

namespace {

TransmissibilityMatrices community_only(Eigen::MatrixXd tc) {
  return {tc, Eigen::MatrixXd::Zero(tc.rows(), tc.cols())};
}

TransmissibilityMatrices uniform_t(double t) { return {Eigen::MatrixXd::Constant(1, 1, t), Eigen::MatrixXd::Constant(1, 1, t)}; }

}  // namespace

TEST_CASE("single edge") {
  const MultilayerGraph g(2, {{0, 1}}, {}, {0, 0});
  const auto r = exact_small_graph_oracle(g, MaskAssignment{{0, 0}}, uniform_t(0.3), 1.0);
  CHECK_THAT(r.exact_mean_size_per_seed[0], WithinAbs(1.3, 1e-15));
  CHECK_THAT(r.exact_mean_size_per_seed[1], WithinAbs(1.3, 1e-15));
  CHECK_THAT(r.exact_pe_per_seed[0], WithinAbs(0.3, 1e-15));
  CHECK_THAT(r.exact_size_second_moment_per_seed[0], WithinAbs(0.7 + 4 * 0.3, 1e-15));
}

TEST_CASE("path of three") {
  const double t = 0.4;
  const MultilayerGraph g(3, {{0, 1}}, {{1, 2}}, {0, 1, 1});
  const auto r = exact_small_graph_oracle(g, MaskAssignment{{0, 0, 0}}, uniform_t(t), 0.05);
  CHECK_THAT(r.exact_mean_size_per_seed[0], WithinAbs(1 + t + t * t, 1e-15));
  CHECK_THAT(r.exact_mean_size_per_seed[1], WithinAbs(1 + 2 * t, 1e-15));
}

TEST_CASE("triangle") {
  const double t = 0.5;
  const MultilayerGraph g(3, {{0, 1}, {1, 2}, {0, 2}}, {}, {0, 0, 0});
  const auto r = exact_small_graph_oracle(g, MaskAssignment{{0, 0, 0}}, uniform_t(t), 0.05);
  const double expected = 1.0 + 2.0 * (t + t * t * (1.0 - t));
  CHECK_THAT(expected, WithinAbs(2.25, 1e-15));
  for (double m : r.exact_mean_size_per_seed) CHECK_THAT(m, WithinAbs(expected, 1e-14));
  CHECK_THAT(r.mean_size(), WithinAbs(2.25, 1e-14));
}

TEST_CASE("no transmission") {
  const MultilayerGraph g(3, {{0, 1}, {1, 2}}, {{0, 2}}, {1, 0, 1});
  const auto r = exact_small_graph_oracle(g, MaskAssignment{{0, 0, 0}}, uniform_t(0.0), 0.5);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(r.exact_mean_size_per_seed[s] == 1.0);
    CHECK(r.exact_pe_per_seed[s] == 0.0);
  }
}

TEST_CASE("each direction uses its own matrix entry") {
  Eigen::MatrixXd tc(2, 2);
  tc << 0.5, 0.9, 0.1, 0.5;  // type 0 infects type 1 with 0.9, the reverse with 0.1
  const MultilayerGraph g(2, {{0, 1}}, {}, {0, 0});
  const MaskAssignment masks{{0, 1}};
  const auto r = exact_small_graph_oracle(g, masks, community_only(tc), 1.0);
  CHECK_THAT(r.exact_mean_size_per_seed[0], WithinAbs(1.9, 1e-15));
  CHECK_THAT(r.exact_mean_size_per_seed[1], WithinAbs(1.1, 1e-15));
  const auto c = compare_with_oracle(g, masks, community_only(tc), 1.0, 100000, 8);
  CHECK(c.within(4.0));
  CHECK_THAT(c.mc_mean_size, WithinAbs(1.5, 0.01));
}

TEST_CASE("parallel edges are separate chances and loops are ignored") {
  const MultilayerGraph g(2, {{0, 1}, {1, 1}}, {{0, 1}}, {1, 1});
  const auto r = exact_small_graph_oracle(g, MaskAssignment{{0, 0}}, uniform_t(0.5), 1.0);
  CHECK_THAT(r.exact_pe_per_seed[0], WithinAbs(0.75, 1e-15));
}

TEST_CASE("oracle refuses graphs that are too large") {
  std::vector<Edge> edges;
  for (NodeId v = 0; v < 13; ++v) edges.push_back({v, v + 1});
  const MultilayerGraph g(14, edges, {}, std::vector<std::uint8_t>(14, 0));
  CHECK_THROWS_AS(exact_small_graph_oracle(g, MaskAssignment{std::vector<std::uint8_t>(14, 0)}, uniform_t(0.5)),
                  std::invalid_argument);
}

TEST_CASE("stored fixtures agree with Monte-Carlo") {
  const std::filesystem::path dir(MLMASK_FIXTURE_DIR);
  const ScenarioConfig cfg = load_scenario(dir / "oracle_scenario.ini");
  const auto T = build_transmissibility(cfg);
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".edges") continue;
    ++seen;
    std::ifstream in(entry.path());
    const EdgeListFile file = read_edge_list(in);
    REQUIRE(file.mask_types);
    const std::size_t edges = file.graph.edges(Layer::community).size() + file.graph.edges(Layer::school).size();
    CHECK(2 * edges <= 12);
    const auto c = compare_with_oracle(file.graph, MaskAssignment{*file.mask_types}, T, cfg.emergence_threshold,
                                       20000, 31);
    INFO(entry.path().filename().string() << " size z=" << c.size_z << " pe z=" << c.pe_z);
    CHECK(c.within(4.0));
    CHECK(c.exact.pe() > 0.0);
    CHECK(c.exact.pe() < 1.0);
  }
  CHECK(seen == 5);
}
