#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "commlab/analytic.hpp"
#include "commlab/grid.hpp"
#include "commlab/weights.hpp"

using namespace commlab;
using orlicz::YoungFunction;
using weights::CubeFamily;

namespace {

DyadicGrid grid1d() { return DyadicGrid{1, 1.0, {0, 0, 0}}; }

SampledFunction sample1d(const analytic::Function& fn, double lo, double hi,
                         int L) {
  return analytic::sample(fn, grid1d(), Box::cube(1, lo, hi), L);
}

SampledFunction random_logweight(std::mt19937_64& rng, int L, double lo = 0.0,
                                 double hi = 1.0) {
  SampledFunction w =
      SampledFunction::zeros_on_box(grid1d(), Box::cube(1, lo, hi), -L);
  std::uniform_real_distribution<double> unif(-1.2, 1.2);
  for (double& v : w.samples()) v = std::exp(unif(rng));
  return w;
}

// The same piecewise-constant function re-represented one level finer.
SampledFunction refine(const SampledFunction& f) {
  if (f.dim() != 1) throw std::logic_error("refine: 1-D helper");
  SampledFunction g = SampledFunction::zeros(
      f.grid(), f.cell_level() - 1, {2 * f.origin()[0], 0, 0},
      {2 * f.extent()[0], 1, 1});
  for (size_t i = 0; i < g.samples().size(); ++i)
    g.samples()[i] = f.samples()[i / 2];
  return g;
}

}  // namespace

TEST_CASE("bmo norm") {
  SECTION("constants have zero oscillation") {
    const auto b = sample1d(analytic::constant(1, 7.0), 0.0, 1.0, 5);
    CHECK(weights::bmo_norm(b, CubeFamily::lattice(b)) == 0.0);
  }

  SECTION("step function on [-1,1): straddling cube attains 1/2") {
    const auto b = sample1d(analytic::char_box(Box::cube(1, 0.0, 64.0)),
                            -1.0, 1.0, 8);
    const auto rep = weights::bmo_norm_report(b, CubeFamily::lattice(b));
    CHECK(rep.value == Catch::Approx(0.5));
    // purely dyadic cubes never straddle 0, so the dyadic value is 0
    CHECK(weights::bmo_norm(b, CubeFamily::dyadic(b)) == 0.0);
  }

  SECTION("log|x| has finite, resolution-stable norm") {
    const auto b8 = sample1d(analytic::log_abs(1), 0.0625, 16.0, 8);
    const auto b9 = sample1d(analytic::log_abs(1), 0.0625, 16.0, 9);
    const double n8 = weights::bmo_norm(b8, CubeFamily::lattice(b8));
    const double n9 = weights::bmo_norm(b9, CubeFamily::lattice(b9));
    CHECK(n8 > 0.1);
    CHECK(n9 == Catch::Approx(n8).epsilon(0.05));
  }
}

TEST_CASE("A_p constants") {
  SECTION("unit and constant weights give exactly 1") {
    for (double c : {1.0, 42.0}) {
      const auto w = sample1d(analytic::constant(1, c), 0.0, 1.0, 5);
      for (double p : {1.5, 2.0, 3.0})
        CHECK(weights::ap_constant(w, p, CubeFamily::dyadic(w)) ==
              Catch::Approx(1.0).epsilon(1e-12));
    }
  }

  SECTION("A_p >= 1 always") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
      const auto w = random_logweight(rng, 6);
      CHECK(weights::ap_constant(w, 2.0, CubeFamily::lattice(w)) >=
            1.0 - 1e-12);
    }
  }

  SECTION("|x|^{1/2} at p=2 matches a brute-force scan and is stable") {
    auto brute = [](const SampledFunction& w, double p) {
      // independent oracle: direct loop over dyadic cubes at every level
      double best = 0;
      const double pp = p / (p - 1);
      cubes_touching(
          w, w.cell_level(), top_contained_level(w),
          [&](const DyadicCube& q) {
            const CellBox b = w.cells_of(q);
            double s1 = 0, s2 = 0;
            std::int64_t cnt = 0;
            w.for_each_cell(b, [&](std::int64_t i) {
              const double v = w.samples()[static_cast<size_t>(i)];
              s1 += v;
              s2 += std::pow(v, 1.0 - pp);
              ++cnt;
            });
            best = std::max(best,
                            (s1 / cnt) * std::pow(s2 / cnt, p - 1.0));
          },
          /*contained=*/true);
      return best;
    };
    const auto w8 = sample1d(analytic::radial_power(1, 0.5), -1.0, 1.0, 8);
    const auto w9 = sample1d(analytic::radial_power(1, 0.5), -1.0, 1.0, 9);
    const double a8 = weights::ap_constant(w8, 2.0, CubeFamily::dyadic(w8));
    const double a9 = weights::ap_constant(w9, 2.0, CubeFamily::dyadic(w9));
    CHECK(a8 == Catch::Approx(brute(w8, 2.0)));
    CHECK(a9 == Catch::Approx(brute(w9, 2.0)));
    CHECK(a9 == Catch::Approx(a8).epsilon(0.02));
  }

  SECTION("nonpositive weight rejected") {
    auto w = sample1d(analytic::constant(1, 1.0), 0.0, 1.0, 3);
    w.samples()[2] = 0.0;
    CHECK_THROWS_AS(weights::ap_constant(w, 2.0, CubeFamily::dyadic(w)),
                    std::domain_error);
  }
}

TEST_CASE("A_{p,q} constants") {
  SECTION("unit weight gives 1") {
    const auto w = sample1d(analytic::constant(1, 1.0), 0.0, 1.0, 5);
    CHECK(weights::apq_constant(w, 4.0 / 3.0, 4.0, CubeFamily::dyadic(w)) ==
          Catch::Approx(1.0));
  }

  SECTION("identity [w]_{A_{p,q}} = [w^q]_{A_{1+q/p'}}") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
      const auto w = random_logweight(rng, 6);
      const double p = 4.0 / 3.0, q = 4.0;
      const double pp = p / (p - 1);
      const auto wq = w.map([&](double v) { return std::pow(v, q); });
      const double lhs =
          weights::apq_constant(w, p, q, CubeFamily::lattice(w));
      const double rhs =
          weights::ap_constant(wq, 1.0 + q / pp, CubeFamily::lattice(wq));
      CHECK(lhs == Catch::Approx(rhs).epsilon(1e-6));
    }
  }

  SECTION("duality [w^{-1}]_{A_{q',p'}} = [w]_{A_{p,q}}^{p'/q}") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
      const auto w = random_logweight(rng, 6);
      const double p = 4.0 / 3.0, q = 4.0;
      const double pp = p / (p - 1), qp = q / (q - 1);
      const auto winv = w.map([](double v) { return 1.0 / v; });
      const double lhs =
          weights::apq_constant(winv, qp, pp, CubeFamily::lattice(winv));
      const double rhs = std::pow(
          weights::apq_constant(w, p, q, CubeFamily::lattice(w)), pp / q);
      CHECK(lhs == Catch::Approx(rhs).epsilon(1e-6));
    }
  }

  SECTION("power-weight constant grows like delta^{-q/p'}") {
    // the full slope fit is an acceptance criterion; two deltas here
    const double p = 4.0 / 3.0, q = 4.0, pp = 4.0;
    auto constant_at = [&](double delta) {
      const auto w = sample1d(analytic::radial_power(1, (1.0 - delta) / pp),
                              -1.0, 1.0, 9);
      return weights::apq_constant(w, p, q, CubeFamily::lattice(w));
    };
    const double c1 = constant_at(0.4), c2 = constant_at(0.2);
    const double slope = std::log(c2 / c1) / std::log(2.0);
    CHECK(slope == Catch::Approx(q / pp).epsilon(0.25));
  }

  SECTION("enlarging the family never decreases the constant") {
    std::mt19937_64 rng(31);
    const auto w = random_logweight(rng, 6);
    const double d =
        weights::apq_constant(w, 2.0, 2.0, CubeFamily::dyadic(w));
    const double l =
        weights::apq_constant(w, 2.0, 2.0, CubeFamily::lattice(w));
    CHECK(l >= d * (1 - 1e-12));
  }
}

TEST_CASE("bump constants") {
  SECTION("unit pair with conjugate powers gives 1") {
    const auto one = sample1d(analytic::constant(1, 1.0), 0.0, 1.0, 5);
    weights::WeightPair pair{one, one, 2.0, 2.0, 0.0};
    const double c = weights::bump_constant(pair, YoungFunction::power(2),
                                            YoungFunction::power(2),
                                            CubeFamily::dyadic(one));
    CHECK(c == Catch::Approx(1.0).epsilon(1e-8));
  }

  SECTION("two-degrees-of-freedom scaling law") {
    std::mt19937_64 rng(37);
    const auto u = random_logweight(rng, 5);
    const auto v = random_logweight(rng, 5);
    const double p = 2.0;
    const auto A = YoungFunction::log_bump(p, 2 * p - 1 + 0.5);
    const auto B = YoungFunction::log_bump(2.0, 2 * 2 - 1 + 0.5);
    weights::WeightPair pair{u, v, p, p, 0.0};
    const double base =
        weights::bump_constant(pair, A, B, CubeFamily::dyadic(u));
    weights::WeightPair scaled{u.scaled(16.0), v.scaled(81.0), p, p, 0.0};
    const double shifted =
        weights::bump_constant(scaled, A, B, CubeFamily::dyadic(u));
    CHECK(shifted == Catch::Approx(std::pow(16.0, 1.0 / p) *
                                   std::pow(81.0, -1.0 / p) * base)
                         .epsilon(1e-6));
  }
}

TEST_CASE("factored pairs") {
  SECTION("unit inputs give the unit pair") {
    const auto one = sample1d(analytic::constant(1, 1.0), 0.0, 1.0, 5);
    const auto pair = weights::factored_pair(
        one, one, YoungFunction::power(1), YoungFunction::power(1), 2.0, 0.0);
    for (double v : pair.u.samples()) CHECK(v == Catch::Approx(1.0));
    for (double v : pair.v.samples()) CHECK(v == Catch::Approx(1.0));
  }

  SECTION("per-cube bump product bounded by 4 for the exact transforms") {
    // Phi(t) = A(t^{1/p}), Psi(t) = B(t^{1/p'}) reproduces the reverse
    // factorization bound cube by cube.
    std::mt19937_64 rng(43);
    const double p = 2.0, pp = 2.0;
    const auto A = YoungFunction::log_bump(p, 2 * p + 0.5);
    const auto B = YoungFunction::log_bump(pp, pp + 1);
    const auto Phi = A.compose_power(1.0 / p);
    const auto Psi = B.compose_power(1.0 / pp);
    for (int trial = 0; trial < 5; ++trial) {
      const auto w1 = random_logweight(rng, 5);
      const auto w2 = random_logweight(rng, 5);
      const auto pair = weights::factored_pair(w1, w2, Phi, Psi, p, 0.0);
      const auto ubump =
          pair.u.map([&](double t) { return std::pow(t, 1.0 / p); });
      const auto vbump =
          pair.v.map([&](double t) { return std::pow(t, -1.0 / p); });
      CubeFamily::dyadic(w1).for_each([&](const CellBox& q, double) {
        const double prod = orlicz::luxemburg_norm(ubump, q, A) *
                            orlicz::luxemburg_norm(vbump, q, B);
        CHECK(prod <= 4.0 * (1 + 1e-8));
      });
    }
  }

  SECTION("bump constant of a factored pair is finite and stable") {
    std::mt19937_64 rng(47);
    const double p = 2.0, delta = 0.5;
    const auto Phi = YoungFunction::log_bump(1, 2 * p + delta);
    const auto Psi = YoungFunction::log_bump(1, p + 1);  // p'+1 at p = 2
    const auto A = YoungFunction::log_bump(p, 2 * p + delta);
    const auto B = YoungFunction::log_bump(p, p + 1);
    const auto w1 = random_logweight(rng, 6);
    const auto w2 = random_logweight(rng, 6);
    const auto coarse = weights::factored_pair(w1, w2, Phi, Psi, p, 0.0);
    const double c0 = weights::bump_constant(coarse, A, B,
                                             CubeFamily::dyadic(coarse.u));
    const auto fine =
        weights::factored_pair(refine(w1), refine(w2), Phi, Psi, p, 0.0);
    const double c1 =
        weights::bump_constant(fine, A, B, CubeFamily::dyadic(fine.u));
    CHECK(std::isfinite(c0));
    CHECK(c0 > 0);
    CHECK(std::abs(c1 - c0) / c0 < 0.25);
  }

  SECTION("vanishing maximal function is reported with the cell") {
    auto w1 = sample1d(analytic::constant(1, 1.0), 0.0, 1.0, 3);
    auto w2 = sample1d(analytic::constant(1, 0.0), 0.0, 1.0, 3);
    CHECK_THROWS_AS(
        weights::factored_pair(w1, w2, YoungFunction::power(1),
                               YoungFunction::power(1), 2.0, 0.0),
        std::domain_error);
  }
}

TEST_CASE("exp-L vs BMO ratio") {
  SECTION("constant symbol gives zero") {
    const auto b = sample1d(analytic::constant(1, 3.0), 0.0, 1.0, 5);
    CHECK(weights::expl_bmo_ratio(b, CubeFamily::lattice(b)) == 0.0);
  }

  SECTION("step symbol: finite ratio, stable across resolutions") {
    const auto b8 = sample1d(analytic::char_box(Box::cube(1, 0.0, 2.0)),
                             -1.0, 1.0, 8);
    const auto b10 = sample1d(analytic::char_box(Box::cube(1, 0.0, 2.0)),
                              -1.0, 1.0, 10);
    const double r8 = weights::expl_bmo_ratio(
        b8, CubeFamily::lattice(b8).stride_divisor(4));
    const double r10 = weights::expl_bmo_ratio(
        b10, CubeFamily::lattice(b10).stride_divisor(4));
    CHECK(r8 > 0);
    CHECK(std::isfinite(r8));
    CHECK(r10 == Catch::Approx(r8).epsilon(0.05));
  }

  SECTION("log symbol: finite ratio, stable") {
    const auto b8 = sample1d(analytic::log_abs(1), 0.0625, 16.0, 8);
    const auto b9 = sample1d(analytic::log_abs(1), 0.0625, 16.0, 9);
    const double r8 = weights::expl_bmo_ratio(
        b8, CubeFamily::lattice(b8).stride_divisor(4));
    const double r9 = weights::expl_bmo_ratio(
        b9, CubeFamily::lattice(b9).stride_divisor(4));
    CHECK(std::isfinite(r8));
    CHECK(r9 == Catch::Approx(r8).epsilon(0.10));
  }
}
