#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mlmask/pgf.hpp"
#include "support/reference.hpp"

using namespace mlmask;
using Catch::Matchers::WithinAbs;

namespace {

ScenarioConfig poisson_scenario(double lc, double ls, double alpha) {
  ScenarioConfig cfg;
  cfg.alpha = alpha;
  cfg.dist_c = DegreePmf::poisson(lc);
  cfg.dist_s = DegreePmf::poisson(ls);
  return cfg;
}

// Direct sums over the reference joint table.
struct DirectPgf {
  testing::JointTable t;
  double root(double x, double y) const {
    double s = 0.0;
    for (std::size_t a = 0; a < t.p.size(); ++a) {
      for (std::size_t b = 0; b < t.p[a].size(); ++b) s += t.p[a][b] * std::pow(x, a * 1.0) * std::pow(y, b * 1.0);
    }
    return s;
  }
  double excess_c(double x, double y) const {
    double s = 0.0;
    for (std::size_t a = 1; a < t.p.size(); ++a) {
      for (std::size_t b = 0; b < t.p[a].size(); ++b) s += t.p[a][b] * a * std::pow(x, a - 1.0) * std::pow(y, b * 1.0);
    }
    return s / t.mean_kc;
  }
  double excess_s(double x, double y) const {
    double s = 0.0;
    for (std::size_t a = 0; a < t.p.size(); ++a) {
      for (std::size_t b = 1; b < t.p[a].size(); ++b) s += t.p[a][b] * b * std::pow(x, a * 1.0) * std::pow(y, b - 1.0);
    }
    return s / t.mean_ks;
  }
};

}  // namespace

TEST_CASE("Poisson closed forms agree with the truncated grid") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double alpha : {0.0, 0.3, 1.0}) {
    for (auto [lc, ls] : {std::pair{6.0, 8.0}, std::pair{0.7, 3.0}, std::pair{12.0, 1.5}}) {
      const ScenarioConfig cfg = poisson_scenario(lc, ls, alpha);
      const PoissonPgf closed(lc, ls, alpha);
      const GridPgf grid(colored_degree_pmf(cfg));
      for (int k = 0; k < 25; ++k) {
        const double x = u(rng), y = u(rng);
        CHECK_THAT(closed.root(x, y), WithinAbs(grid.root(x, y), 1e-9));
        CHECK_THAT(closed.root_complement(x, y), WithinAbs(grid.root_complement(x, y), 1e-9));
        CHECK_THAT(closed.excess_c(x, y), WithinAbs(grid.excess_c(x, y), 1e-9));
        if (alpha > 0.0) CHECK_THAT(closed.excess_s(x, y), WithinAbs(grid.excess_s(x, y), 1e-9));
      }
      const auto a = closed.moments();
      const auto b = grid.moments();
      CHECK_THAT(a.mean_kc, WithinAbs(b.mean_kc, 1e-8));
      CHECK_THAT(a.mean_ks, WithinAbs(b.mean_ks, 1e-8));
      CHECK_THAT(a.mean_kc2, WithinAbs(b.mean_kc2, 1e-7));
      CHECK_THAT(a.mean_ks2, WithinAbs(b.mean_ks2, 1e-7));
      CHECK_THAT(a.mean_kcks, WithinAbs(b.mean_kcks, 1e-7));
    }
  }
}

TEST_CASE("grid generating functions match direct summation") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const ScenarioConfig cfg = testing::random_scenario(rng, {.alpha = 0.5});
    const GridPgf grid(colored_degree_pmf(cfg));
    const DirectPgf direct{testing::joint_table(cfg)};
    for (int k = 0; k < 10; ++k) {
      const double x = u(rng), y = u(rng);
      CHECK_THAT(grid.root(x, y), WithinAbs(direct.root(x, y), 1e-13));
      CHECK_THAT(grid.root_complement(x, y), WithinAbs(1.0 - direct.root(x, y), 1e-13));
      CHECK_THAT(grid.excess_c(x, y), WithinAbs(direct.excess_c(x, y), 1e-12));
      CHECK_THAT(grid.excess_s(x, y), WithinAbs(direct.excess_s(x, y), 1e-12));
    }
  }
}

TEST_CASE("generating functions equal one at (1,1)") {
  const GridPgf grid(colored_degree_pmf(poisson_scenario(6.0, 8.0, 0.3)));
  CHECK(grid.excess_c(1.0, 1.0) == 1.0);
  CHECK(grid.excess_s(1.0, 1.0) == 1.0);
  CHECK_THAT(grid.root(1.0, 1.0), WithinAbs(1.0, 1e-14));
  const PoissonPgf closed(6.0, 8.0, 0.3);
  CHECK(closed.root(1.0, 1.0) == 1.0);
  CHECK(closed.excess_c(1.0, 1.0) == 1.0);
  CHECK(closed.excess_s(1.0, 1.0) == 1.0);
  CHECK(closed.root_complement(1.0, 1.0) == 0.0);
}

TEST_CASE("Poisson school factor is zero-inflated") {
  const PoissonPgf pgf(2.0, 3.0, 0.25);
  // P(k_c = 0, k_s = 0) = e^{-2} (0.75 + 0.25 e^{-3})
  CHECK_THAT(pgf.root(0.0, 0.0), WithinAbs(std::exp(-2.0) * (0.75 + 0.25 * std::exp(-3.0)), 1e-15));
}

TEST_CASE("make_pgf chooses the closed form only when allowed") {
  ScenarioConfig cfg = poisson_scenario(6.0, 8.0, 0.3);
  CHECK(std::holds_alternative<PoissonPgf>(make_pgf(cfg)));
  cfg.solver.closed_form_poisson = false;
  CHECK(std::holds_alternative<GridPgf>(make_pgf(cfg)));
  cfg.solver.closed_form_poisson = true;
  cfg.dist_s = DegreePmf::explicit_table({0.5, 0.5});
  CHECK(std::holds_alternative<GridPgf>(make_pgf(cfg)));
}
