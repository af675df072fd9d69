#include <catch2/catch_amalgamated.hpp>

#include "qce/cat_oracle.hpp"
#include "qce/fourier.hpp"
#include "qce/heisenberg.hpp"

using namespace qce;

namespace {
const IntMat2 kCat{1, 1, 1, 2};
}

TEST_CASE("spectral data of the reference matrix") {
  const CatMatrix cat(kCat);
  REQUIRE(cat.mu1() == Catch::Approx((3.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-15));
  REQUIRE(cat.mu1() * cat.mu2() == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(cat.mu1() + cat.mu2() == Catch::Approx(3.0).margin(1e-14));
  REQUIRE(cat.log_mu1() == Catch::Approx(0.962424).margin(5e-7));
  REQUIRE(cat.log_mu1() + cat.log_mu2() == Catch::Approx(0.0).margin(1e-14));

  const Vec2 e = cat.unstable_eigenvector();
  REQUIRE(cat.m.a * e[0] + cat.m.b * e[1] == Catch::Approx(cat.mu1() * e[0]).margin(1e-12));
  REQUIRE(cat.m.c * e[0] + cat.m.d * e[1] == Catch::Approx(cat.mu1() * e[1]).margin(1e-12));
}

TEST_CASE("matrix validation") {
  REQUIRE_THROWS_AS(CatMatrix(IntMat2{1, 0, 0, 1}), std::invalid_argument);   // not hyperbolic
  REQUIRE_THROWS_AS(CatMatrix(IntMat2{2, 0, 0, 2}), std::invalid_argument);   // det 4
  REQUIRE_NOTHROW(CatMatrix(IntMat2{2, 1, 1, 1}));
}

TEST_CASE("integer orbits") {
  const CatMatrix cat(kCat);
  const auto orb = orbit(cat, {1, 0}, 3);
  REQUIRE(orb[1].x == 1);
  REQUIRE(orb[1].y == 1);
  REQUIRE(orb[2].x == 2);
  REQUIRE(orb[2].y == 3);
  REQUIRE(orb[3].x == 5);
  REQUIRE(orb[3].y == 8);

  // exact recurrence: each entry is M applied to the previous one
  const auto longer = orbit(cat, {2, -7}, 60);
  for (std::size_t k = 0; k + 1 < longer.size(); ++k) {
    const BigVec2 next = apply(cat.m, longer[k]);
    REQUIRE(longer[k + 1].x == next.x);
    REQUIRE(longer[k + 1].y == next.y);
  }
  // trace/det recurrence a_{k+1} = 3 a_k - a_{k-1}, componentwise
  for (std::size_t k = 1; k + 1 < longer.size(); ++k) {
    REQUIRE(longer[k + 1].x == 3 * longer[k].x - longer[k - 1].x);
    REQUIRE(longer[k + 1].y == 3 * longer[k].y - longer[k - 1].y);
  }
}

TEST_CASE("exact exponent") {
  const CatMatrix cat(kCat);
  SECTION("generic directions give log(mu1)") {
    for (Vec2 v : {Vec2{1, 0}, Vec2{0, 1}, Vec2{3, -2}, Vec2{1e-3, 1}})
      REQUIRE(exact_exponent(cat, v, {1, 0}) == Catch::Approx(cat.log_mu1()).margin(1e-15));
  }
  SECTION("the closed-form orthogonal direction reaches log(mu2)") {
    REQUIRE(exact_exponent(cat, cat.orthogonal_to_unstable(), {1, 0}) ==
            Catch::Approx(cat.log_mu2()).margin(1e-15));
  }
  SECTION("zero inputs are rejected") {
    REQUIRE_THROWS_AS(exact_exponent(cat, Vec2{0, 0}, {1, 0}), std::invalid_argument);
    REQUIRE_THROWS_AS(exact_exponent(cat, Vec2{1, 0}, {0, 0}), std::invalid_argument);
  }
}

TEST_CASE("finite-n exponent sequence from exact integers") {
  const CatMatrix cat(kCat);
  const auto seq = finite_exponent_sequence(cat, {1, 0}, {1, 0}, 60);

  // value pinned by this big-integer oracle: v.M^30 l is a 12-digit integer
  REQUIRE(seq[29] == Catch::Approx(0.919559290743318).margin(1e-12));

  // the gap closes like C/n; for this v and l, C = log(phi sqrt 5)
  const double c_exact = std::log((1.0 + std::sqrt(5.0)) / 2.0 * std::sqrt(5.0));
  for (int n : {10, 20, 30, 45, 60}) {
    const double gap = cat.log_mu1() - seq[n - 1];
    REQUIRE(gap > 0.0);
    REQUIRE(gap <= 1.30 / n);  // measured envelope, slightly above C = 1.2860
    REQUIRE(gap == Catch::Approx(c_exact / n).margin(2e-3 / n));
  }

  // scaling v by a constant shifts the sequence by log(c)/n exactly
  const auto seq3 = finite_exponent_sequence(cat, {3, 0}, {1, 0}, 20);
  for (int n = 1; n <= 20; ++n)
    REQUIRE(seq3[n - 1] - seq[n - 1] == Catch::Approx(std::log(3.0) / n).margin(1e-12));
}

TEST_CASE("phase sums reduce huge orbit sums exactly") {
  const CatMatrix cat(kCat);
  // small n: compare against direct double-precision evaluation
  for (int n : {1, 2, 3, 4}) {
    const PhaseSum ps = phase_sum(cat, {1, 0}, 1.0, n);
    double s = 0.0;
    for (int k = 0; k < n; ++k)
      s += static_cast<double>(ps.orbit[k].x * ps.orbit[k].x + ps.orbit[k].y * ps.orbit[k].y);
    const double direct = std::remainder(2.0 * std::numbers::pi * std::numbers::pi * s, two_pi);
    REQUIRE(std::cos(ps.phase_sum) == Catch::Approx(std::cos(direct)).margin(1e-10));
    REQUIRE(std::sin(ps.phase_sum) == Catch::Approx(std::sin(direct)).margin(1e-10));
  }
  // large n: the sum has ~50 digits; the reduction must stay finite and in range
  const PhaseSum big = phase_sum(cat, {1, 0}, 1.0, 60);
  REQUIRE(big.phase_sum >= 0.0);
  REQUIRE(big.phase_sum < two_pi);
  REQUIRE(big.orbit.size() == 61);

  // theta_plus/theta_minus differ by twice the spatial term
  const PhaseSum ps2 = phase_sum(cat, {1, 0}, 0.5, 2);
  const Vec2 x{0.125, 0.25};
  REQUIRE(ps2.theta_plus(x) - ps2.theta_minus(x) ==
          Catch::Approx(2.0 * two_pi * (2.0 * x[0] + 3.0 * x[1])).margin(1e-9));
}

TEST_CASE("analytic derivative field") {
  const CatMatrix cat(kCat);
  const auto grid = PeriodicGrid::torus(64);
  const Vec2 v{1.0, 0.0};

  SECTION("n = 0 matches the direct derivative of the observable term") {
    const auto a = analytic_derivative_field(cat, {1, 0}, v, 1.0, 0, grid);
    REQUIRE(a.time_phase == Catch::Approx(1.0).margin(1e-15));  // empty sum
    for (long j1 = 0; j1 < grid.n; ++j1)
      for (long j2 = 0; j2 < grid.n; ++j2) {
        const double want = two_pi * std::cos(two_pi * j1 / static_cast<double>(grid.n));
        REQUIRE(a.field.values[grid.id(j1, j2)] == Catch::Approx(want).margin(1e-10));
      }
  }

  SECTION("time-phase-normalized sup norms grow by the exact orbit ratio") {
    const auto orb = orbit(cat, {1, 0}, 5);
    std::vector<double> sup;
    std::vector<double> tph;
    for (int n = 0; n <= 4; ++n) {
      const auto a = analytic_derivative_field(cat, {1, 0}, v, 1.0, n, grid);
      double m = 0.0;
      for (double val : a.field.values) m = std::max(m, std::abs(val));
      sup.push_back(m);
      tph.push_back(a.time_phase);
    }
    for (int n = 0; n < 4; ++n) {
      const double got = (sup[n + 1] / std::abs(tph[n + 1])) / (sup[n] / std::abs(tph[n]));
      const double want = std::abs(static_cast<double>(BigFloat(orb[n + 1].x))) /
                          std::abs(static_cast<double>(BigFloat(orb[n].x)));
      REQUIRE(got == Catch::Approx(want).epsilon(1e-12));
    }
  }

  SECTION("prefactor carries the signed direction projection") {
    const auto a = analytic_derivative_field(cat, {1, 0}, Vec2{-1.0, 0.0}, 1.0, 2, grid);
    REQUIRE(a.prefactor == Catch::Approx(-two_pi * 2.0).margin(1e-12));
  }
}
