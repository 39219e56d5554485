#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "commlab/analytic.hpp"
#include "commlab/grid.hpp"
#include "commlab/oscillation.hpp"

using namespace commlab;

namespace {

DyadicGrid grid1d() { return DyadicGrid{1, 1.0, {0, 0, 0}}; }
DyadicGrid grid2d() { return DyadicGrid{2, 1.0, {0, 0, 0}}; }

SampledFunction random_fn(std::mt19937_64& rng, const DyadicGrid& g, int L) {
  SampledFunction f = SampledFunction::zeros_on_box(
      g, Box::cube(g.dim, 0.0, 1.0), -L);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (double& v : f.samples()) v = unif(rng);
  return f;
}

// Test-local oracle: per-cell dyadic maximal of f within the root.
std::vector<double> dyadic_maximal_oracle(const SampledFunction& f,
                                          const DyadicCube& root) {
  std::vector<double> out(f.samples().size(), 0.0);
  cubes_touching(
      f, f.cell_level(), root.level,
      [&](const DyadicCube& q) {
        if (!root.contains(q)) return;
        const double avg = f.average(q);
        f.for_each_cell(f.cells_of(q), [&](std::int64_t i) {
          out[static_cast<size_t>(i)] =
              std::max(out[static_cast<size_t>(i)], avg);
        });
      },
      /*contained=*/true);
  return out;
}

}  // namespace

TEST_CASE("median") {
  SECTION("odd count") {
    CHECK(osc::median_of({1.0, 2.0, 3.0}) == 2.0);
    CHECK(osc::median_of({3.0, 1.0, 2.0}) == 2.0);
  }
  SECTION("constant") { CHECK(osc::median_of({5.0, 5.0, 5.0, 5.0}) == 5.0); }
  SECTION("lower tie-break on even counts") {
    CHECK(osc::median_of({0.0, 0.0, 1.0, 1.0}) == 0.0);
  }
  SECTION("median bound |m_f(Q)| <= (f chi_Q)^*(|Q|/2)") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 40; ++trial) {
      const auto f = random_fn(rng, grid1d(), 5);
      const DyadicCube q{grid1d(), 0, {0, 0, 0}};
      const double m = osc::median(f, q);
      const double r = osc::rearrangement_value(f, q, 0.5 * q.volume());
      CHECK(std::abs(m) <= r * (1 + 1e-12));
    }
  }
  SECTION("empty set throws") {
    CHECK_THROWS_AS(osc::median_of({}), std::invalid_argument);
  }
}

TEST_CASE("rearrangement value") {
  SECTION("constants") {
    const auto f = analytic::sample(analytic::constant(1, 4.0), grid1d(),
                                    Box::cube(1, 0.0, 1.0), 5);
    const DyadicCube q{grid1d(), 0, {0, 0, 0}};
    for (double t : {0.1, 0.5, 0.9})
      CHECK(osc::rearrangement_value(f, q, t) == Catch::Approx(4.0));
  }

  SECTION("coordinate function at a quarter of the mass") {
    const auto f = analytic::sample(analytic::coordinate(1), grid1d(),
                                    Box::cube(1, 0.0, 1.0), 8);
    const DyadicCube q{grid1d(), 0, {0, 0, 0}};
    // distribution oracle: |{x > s}| = 1-s, so the value at mass 1/4 is 3/4
    CHECK(osc::rearrangement_value(f, q, 0.25) ==
          Catch::Approx(0.75).margin(f.cell_side()));
  }

  SECTION("weak-type bound with p = 1/2") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 25; ++trial) {
      const auto f = random_fn(rng, grid1d(), 6);
      const DyadicCube q{grid1d(), 0, {0, 0, 0}};
      const double lam = 0.3;
      double halfmean = 0;  // ||f||_{L^{1/2}(Q, dx/|Q|)}^{1/2} pieces
      for (double v : f.samples()) halfmean += std::sqrt(std::abs(v));
      halfmean /= static_cast<double>(f.samples().size());
      const double lp = halfmean * halfmean;  // mean of |f|^{1/2}, squared
      const double lhs = osc::rearrangement_value(f, q, lam * q.volume());
      CHECK(lhs <= std::pow(lam, -2.0) * lp * (1 + 1e-12));
    }
  }

  SECTION("t outside (0,|Q|) throws") {
    const auto f = analytic::sample(analytic::constant(1, 1.0), grid1d(),
                                    Box::cube(1, 0.0, 1.0), 4);
    const DyadicCube q{grid1d(), 0, {0, 0, 0}};
    CHECK_THROWS_AS(osc::rearrangement_value(f, q, 0.0), std::out_of_range);
    CHECK_THROWS_AS(osc::rearrangement_value(f, q, 1.5), std::out_of_range);
  }
}

TEST_CASE("local mean oscillation") {
  const DyadicCube q{grid1d(), 0, {0, 0, 0}};

  SECTION("constants have zero oscillation") {
    const auto f = analytic::sample(analytic::constant(1, 2.0), grid1d(),
                                    Box::cube(1, 0.0, 1.0), 6);
    CHECK(osc::local_oscillation(f, f.cells_of(q), 0.25) == 0.0);
  }

  SECTION("coordinate function at lambda = 1/4 gives exactly 3/8") {
    const auto f = analytic::sample(analytic::coordinate(1), grid1d(),
                                    Box::cube(1, 0.0, 1.0), 8);
    CHECK(osc::local_oscillation(f, f.cells_of(q), 0.25) ==
          Catch::Approx(0.375));
  }

  SECTION("translation and scale equivariance, monotone in lambda") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const auto f = random_fn(rng, grid1d(), 6);
      const auto box = f.cells_of(q);
      const double w = osc::local_oscillation(f, box, 0.25);
      const auto shifted = f.map([](double v) { return v + 11.0; });
      CHECK(osc::local_oscillation(shifted, box, 0.25) ==
            Catch::Approx(w).margin(1e-12));
      const auto scaled = f.scaled(-2.5);
      CHECK(osc::local_oscillation(scaled, box, 0.25) ==
            Catch::Approx(2.5 * w).margin(1e-12));
      CHECK(osc::local_oscillation(f, box, 0.5) <= w * (1 + 1e-12));
    }
  }
}

TEST_CASE("local sharp maximal function") {
  SECTION("constant gives zero") {
    const auto f = analytic::sample(analytic::constant(1, 1.5), grid1d(),
                                    Box::cube(1, 0.0, 1.0), 6);
    const DyadicCube root{grid1d(), 0, {0, 0, 0}};
    const auto m = osc::local_sharp_max(f, root, 0.25);
    for (double v : m.samples()) CHECK(v == 0.0);
  }

  SECTION("Haar function gives the constant 1") {
    SampledFunction f = SampledFunction::zeros_on_box(
        grid1d(), Box::cube(1, 0.0, 1.0), -6);
    for (size_t i = 0; i < f.samples().size(); ++i)
      f.samples()[i] = (i < f.samples().size() / 2) ? 1.0 : -1.0;
    const DyadicCube root{grid1d(), 0, {0, 0, 0}};
    const auto m = osc::local_sharp_max(f, root, 0.25);
    for (double v : m.samples()) CHECK(v == Catch::Approx(1.0));
  }

  SECTION("dominates the root oscillation pointwise") {
    std::mt19937_64 rng(11);
    const auto f = random_fn(rng, grid2d(), 3);
    const DyadicCube root{grid2d(), 0, {0, 0, 0}};
    const double w = osc::local_oscillation(f, f.cells_of(root), 0.25);
    const auto m = osc::local_sharp_max(f, root, 0.25);
    for (double v : m.samples()) CHECK(v >= w * (1 - 1e-12));
  }
}

TEST_CASE("calderon-zygmund cubes") {
  const DyadicCube root1{grid1d(), 1, {0, 0, 0}};  // [0,2)

  SECTION("indicator at height 1/2 selects [0,1)") {
    const auto f = analytic::sample(analytic::char_box(Box::cube(1, 0.0, 1.0)),
                                    grid1d(), Box::cube(1, 0.0, 2.0), 6);
    bool flagged = false;
    const auto cubes = osc::cz_cubes(f, 0.5, root1, &flagged);
    REQUIRE(cubes.size() == 1);
    CHECK(!flagged);
    CHECK(cubes[0].level == 0);
    CHECK(cubes[0].index[0] == 0);
    // averages in (h, 2^n h] when the parent is below threshold
    CHECK(f.average(cubes[0]) > 0.5);
    CHECK(f.average(cubes[0]) <= 2.0 * 0.5 + 1e-12);
  }

  SECTION("height above the maximum selects nothing") {
    const auto f = analytic::sample(analytic::char_box(Box::cube(1, 0.0, 1.0)),
                                    grid1d(), Box::cube(1, 0.0, 2.0), 4);
    CHECK(osc::cz_cubes(f, 2.0, root1).empty());
  }

  SECTION("root above the height is returned flagged") {
    const auto f = analytic::sample(analytic::constant(1, 3.0), grid1d(),
                                    Box::cube(1, 0.0, 2.0), 4);
    bool flagged = false;
    const auto cubes = osc::cz_cubes(f, 1.0, root1, &flagged);
    REQUIRE(cubes.size() == 1);
    CHECK(flagged);
    CHECK(cubes[0].level == root1.level);
  }

  SECTION("negative samples rejected") {
    auto f = analytic::sample(analytic::constant(1, 1.0), grid1d(),
                              Box::cube(1, 0.0, 2.0), 4);
    f.samples()[0] = -0.5;
    CHECK_THROWS_AS(osc::cz_cubes(f, 1.0, root1), std::domain_error);
  }

  SECTION("cubes at geometric heights reproduce the maximal level sets") {
    std::mt19937_64 rng(13);
    const int n = 2;
    const double a = std::pow(4.0, n);
    auto f = random_fn(rng, grid2d(), 4);
    for (double& v : f.samples()) v = std::abs(v) + 0.01;
    const DyadicCube root{grid2d(), 0, {0, 0, 0}};
    const auto md = dyadic_maximal_oracle(f, root);
    for (int k = -2; k <= 1; ++k) {
      const double h = std::pow(a, k);
      bool flagged = false;
      const auto cubes = osc::cz_cubes(f, h, root, &flagged);
      if (flagged) continue;
      std::vector<std::uint8_t> covered(f.samples().size(), 0);
      for (const auto& q : cubes)
        f.for_each_cell(f.cells_of(q), [&](std::int64_t i) {
          covered[static_cast<size_t>(i)] = 1;
        });
      for (size_t i = 0; i < md.size(); ++i)
        CHECK(covered[i] == (md[i] > h ? 1 : 0));
    }
  }

  SECTION("nesting: higher cubes live inside lower ones") {
    std::mt19937_64 rng(17);
    auto f = random_fn(rng, grid1d(), 6);
    for (double& v : f.samples()) v = std::abs(v) + 0.01;
    const DyadicCube root{grid1d(), 0, {0, 0, 0}};
    const double a = 4.0;
    for (int k = -2; k <= 0; ++k) {
      bool fl_lo = false, fl_hi = false;
      const auto lo = osc::cz_cubes(f, std::pow(a, k), root, &fl_lo);
      const auto hi = osc::cz_cubes(f, std::pow(a, k + 1), root, &fl_hi);
      if (fl_lo || fl_hi) continue;
      for (const auto& qh : hi) {
        bool inside = false;
        for (const auto& ql : lo)
          if (ql.contains(qh)) inside = true;
        CHECK(inside);
      }
    }
  }
}

TEST_CASE("lerner decomposition") {
  SECTION("constant function: empty tree, zero constant") {
    const auto f = analytic::sample(analytic::constant(1, 2.0), grid1d(),
                                    Box::cube(1, 0.0, 1.0), 6);
    const DyadicCube root{grid1d(), 0, {0, 0, 0}};
    const auto tree = osc::lerner_decompose(f, root);
    CHECK(tree.levels.empty());
    CHECK(tree.empirical_c == 0.0);
  }

  SECTION("half indicator: property (iii) holds with a finite constant") {
    const auto f = analytic::sample(analytic::char_box(Box::cube(1, 0.0, 0.5)),
                                    grid1d(), Box::cube(1, 0.0, 1.0), 6);
    const DyadicCube root{grid1d(), 0, {0, 0, 0}};
    const auto tree = osc::lerner_decompose(f, root);
    CHECK(std::isfinite(tree.empirical_c));
    CHECK(tree.empirical_c <= 20.0);  // recorded regression bound
    CHECK(tree.check_invariants(f).ok());
  }

  SECTION("random functions satisfy the structural invariants exactly") {
    for (int n = 1; n <= 2; ++n) {
      std::mt19937_64 rng(100 + n);
      const DyadicGrid g = (n == 1) ? grid1d() : grid2d();
      const DyadicCube root{g, 0, {0, 0, 0}};
      for (int trial = 0; trial < 12; ++trial) {
        const auto f = random_fn(rng, g, n == 1 ? 7 : 4);
        const auto tree = osc::lerner_decompose(f, root);
        const auto rep = tree.check_invariants(f);
        CHECK(rep.omega_nested);
        CHECK(rep.half_overlap);
        CHECK(rep.e_disjoint);
        CHECK(rep.e_mass);
        CHECK(std::isfinite(tree.empirical_c));
        CHECK(tree.empirical_c <= 20.0);
      }
    }
  }
}

TEST_CASE("cz decomposition tree") {
  std::mt19937_64 rng(19);
  auto f = random_fn(rng, grid1d(), 7);
  for (double& v : f.samples()) v = std::abs(v) + 0.05;
  const DyadicCube root{grid1d(), 0, {0, 0, 0}};
  const double a = 4.0;  // 4^n at n = 1
  const auto tree = osc::cz_decompose(f, root, a, 0, 3);
  const auto rep = tree.check_invariants(f);
  CHECK(rep.omega_nested);
  CHECK(rep.half_overlap);
  CHECK(rep.e_disjoint);
  CHECK(rep.e_mass);
}
