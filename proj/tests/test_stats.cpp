#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "swapsim/rng.hpp"
#include "swapsim/stats.hpp"

#include <array>
#include <cmath>

using namespace swapsim;
using namespace swapsim::stats;

TEST_CASE("visibility carries the binomial error bar") {
  auto v = visibility(80, 20);
  CHECK(v.value == doctest::Approx(0.6));
  // sigma = 2*sqrt(max*min/N^3) = 2*sqrt(1600/1e6) = 0.08
  CHECK(v.sigma == doctest::Approx(0.08).epsilon(1e-12));
  CHECK(v.cc_max == 80);
  CHECK(v.cc_min == 20);

  CHECK(visibility(100, 0).value == doctest::Approx(1.0));
  CHECK(visibility(50, 50).value == doctest::Approx(0.0));
  CHECK(visibility(0, 0).value == 0.0);
  CHECK(visibility(0, 0).sigma == 0.0);
}

TEST_CASE("correlation follows the count table") {
  SettingCounts c;
  c.n[0][0] = 40;
  c.n[1][1] = 40;
  c.n[0][1] = 10;
  c.n[1][0] = 10;
  auto e = correlation_e(c);
  CHECK(e.value == doctest::Approx(0.6));
  CHECK(e.sigma == doctest::Approx(0.08).epsilon(1e-12));

  SettingCounts empty;
  CHECK(correlation_e(empty).value == 0.0);
}

TEST_CASE("signed visibility orients against the expected correlation") {
  SettingCounts anti;  // anticorrelated data
  anti.n[0][1] = 90;
  anti.n[1][0] = 90;
  anti.n[0][0] = 10;
  anti.n[1][1] = 10;

  auto v_minus = signed_visibility(anti, -1);
  CHECK(v_minus.value == doctest::Approx(0.8));
  auto v_plus = signed_visibility(anti, +1);
  CHECK(v_plus.value == doctest::Approx(-0.8));
  CHECK(v_plus.sigma == doctest::Approx(v_minus.sigma));

  CHECK_THROWS_AS(signed_visibility(anti, 0), std::invalid_argument);
}

TEST_CASE("witness hits the textbook values") {
  VisibilityEstimate unit{1.0, 0.0, 0, 0};
  auto w_perfect = witness(unit, unit, unit);
  CHECK(w_perfect.value == doctest::Approx(-0.5));

  VisibilityEstimate zero{0.0, 0.0, 0, 0};
  auto w_classical = witness(unit, zero, zero);  // V_hv=1 alone is separable
  CHECK(w_classical.value == doctest::Approx(0.0));
  CHECK(w_classical.significance == 0.0);

  // sigma adds the three visibility errors in quadrature over the 1/4 factor
  VisibilityEstimate v{0.6, 0.08, 80, 20};
  auto w = witness(v, v, v);
  CHECK(w.value == doctest::Approx(0.5 - (1 + 1.8) / 4));
  CHECK(w.sigma == doctest::Approx(0.25 * std::sqrt(3 * 0.08 * 0.08)).epsilon(1e-12));
  CHECK(w.significance == doctest::Approx(-w.value / w.sigma));
}

TEST_CASE("witness sign flips exactly at mean visibility one third") {
  auto w_above = witness(visibility(68, 32), visibility(68, 32), visibility(68, 32));
  CHECK(w_above.value < 0.0);  // V = 0.36 > 1/3
  auto w_below = witness(visibility(65, 35), visibility(65, 35), visibility(65, 35));
  CHECK(w_below.value > 0.0);  // V = 0.30 < 1/3
}

TEST_CASE("chsh combines four correlations with their signs") {
  // counts realizing E = +0.7 / -0.7 exactly
  SettingCounts plus;
  plus.n[0][0] = 85;
  plus.n[1][1] = 85;
  plus.n[0][1] = 15;
  plus.n[1][0] = 15;
  SettingCounts minus;
  minus.n[0][1] = 85;
  minus.n[1][0] = 85;
  minus.n[0][0] = 15;
  minus.n[1][1] = 15;

  std::array<SettingCounts, 4> counts = {minus, plus, minus, minus};
  std::array<int, 4> signs = {+1, -1, +1, +1};
  auto s = chsh(counts, signs);
  CHECK(s.value == doctest::Approx(2.8));
  CHECK(s.terms[0].value == doctest::Approx(-0.7));
  CHECK(s.terms[1].value == doctest::Approx(0.7));
  double sigma_e = s.terms[0].sigma;
  CHECK(s.sigma == doctest::Approx(2.0 * sigma_e).epsilon(1e-12));

  std::array<int, 4> bad = {+1, 0, +1, +1};
  CHECK_THROWS_AS(chsh(counts, bad), std::invalid_argument);
}

TEST_CASE("spacelike check compares light travel against the separation") {
  // 143 km at c is 476996.65 ns
  CHECK(spacelike_check(143.0, 476746.48));
  CHECK_FALSE(spacelike_check(143.0, 477221.81));
  CHECK_FALSE(spacelike_check(143.0, 476996.66));  // at the boundary: not spacelike
  CHECK(spacelike_check(143.0, 100.0));
  CHECK(spacelike_check(143.0, -100.0));  // magnitude matters, not sign
  CHECK_THROWS_AS(spacelike_check(0.0, 100.0), std::invalid_argument);
}

TEST_CASE("accidental rate is the product of rates and the window") {
  CHECK(accidental_rate_hz(158.0, 1084.0, 5.0) ==
        doctest::Approx(158.0 * 1084.0 * 5e-9).epsilon(1e-12));
  CHECK(accidental_rate_hz(0.0, 1000.0, 5.0) == 0.0);
}

TEST_CASE("bootstrap witness error agrees with the analytic one") {
  // counts drawn from V = 0.6 with N = 2000 per basis
  SettingCounts c;
  c.n[0][1] = 800;
  c.n[1][0] = 800;
  c.n[0][0] = 200;
  c.n[1][1] = 200;
  std::array<SettingCounts, 3> counts = {c, c, c};
  std::array<int, 3> signs = {-1, -1, -1};

  auto v = signed_visibility(c, -1);
  auto analytic = witness(v, v, v);

  auto rng = SplitStream::derive(99, {stream_tag::bootstrap});
  double boot = bootstrap_sigma_witness(counts, signs, 800, rng);
  CHECK(boot == doctest::Approx(analytic.sigma).epsilon(0.15));

  // deterministic under the same stream
  auto rng2 = SplitStream::derive(99, {stream_tag::bootstrap});
  CHECK(bootstrap_sigma_witness(counts, signs, 800, rng2) == boot);
}

TEST_CASE("bootstrap chsh error agrees with the analytic one") {
  SettingCounts plus;
  plus.n[0][0] = 850;
  plus.n[1][1] = 850;
  plus.n[0][1] = 150;
  plus.n[1][0] = 150;
  SettingCounts minus;
  minus.n[0][1] = 850;
  minus.n[1][0] = 850;
  minus.n[0][0] = 150;
  minus.n[1][1] = 150;
  std::array<SettingCounts, 4> counts = {minus, plus, minus, minus};
  std::array<int, 4> signs = {+1, -1, +1, +1};

  auto analytic = chsh(counts, signs);
  auto rng = SplitStream::derive(7, {stream_tag::bootstrap});
  double boot = bootstrap_sigma_chsh(counts, signs, 800, rng);
  CHECK(boot == doctest::Approx(analytic.sigma).epsilon(0.15));
}
