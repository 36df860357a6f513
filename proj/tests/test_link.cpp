#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "swapsim/link.hpp"
#include "swapsim/rng.hpp"

#include <cmath>
#include <vector>

using namespace swapsim;
using namespace swapsim::link;

TEST_CASE("split stream is reproducible and path-sensitive") {
  auto a = SplitStream::derive(1, {stream_tag::pulses, 42});
  auto b = SplitStream::derive(1, {stream_tag::pulses, 42});
  CHECK(a() == b());
  CHECK(a() == b());

  auto c = SplitStream::derive(1, {stream_tag::pulses, 43});
  auto d = SplitStream::derive(1, {42, stream_tag::pulses});
  auto e = SplitStream::derive(2, {stream_tag::pulses, 42});
  auto first = SplitStream::derive(1, {stream_tag::pulses, 42})();
  CHECK(c() != first);
  CHECK(d() != first);
  CHECK(e() != first);
}

TEST_CASE("uniform draws cover the unit interval evenly") {
  SplitStream rng(123);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  // mean 1/2, sigma of the mean = 1/sqrt(12 n)
  CHECK(std::abs(sum / n - 0.5) < 4.5 / std::sqrt(12.0 * n));
}

TEST_CASE("normal draws have the requested moments") {
  SplitStream rng(5);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal(2.0, 3.0);
    sum += x;
    sq += x * x;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  CHECK(std::abs(mean - 2.0) < 4.5 * 3.0 / std::sqrt(double(n)));
  CHECK(std::abs(var - 9.0) < 0.15);
}

TEST_CASE("discrete draw follows the pmf") {
  SplitStream rng(17);
  std::vector<double> pmf = {0.5, 0.3, 0.2};
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[rng.discrete(pmf)]++;
  for (int k = 0; k < 3; ++k) {
    double sigma = std::sqrt(pmf[k] * (1 - pmf[k]) * n);
    CHECK(std::abs(counts[k] - pmf[k] * n) < 4.5 * sigma);
  }
}

TEST_CASE("transmission matches the attenuation in dB") {
  SplitStream rng(9);
  const int n = 2000000;
  int passed = 0;
  for (int i = 0; i < n; ++i) passed += transmit(32.0, rng) ? 1 : 0;
  const double t = std::pow(10.0, -3.2);  // 6.30957e-4
  double sigma = std::sqrt(t * n);
  CHECK(std::abs(passed - t * n) < 4.5 * sigma);

  for (int i = 0; i < 100; ++i) CHECK(transmit(0.0, rng));
}

TEST_CASE("block loss draw is exact when scintillation is off") {
  ChannelParams ch;
  ch.mean_loss_db = 32.0;
  ch.scint_sigma_db = 0.0;
  SplitStream a(77), b(77);
  CHECK(sample_block_loss(ch, a) == 32.0);
  // no rng consumption when the width is zero: streams stay in lockstep
  CHECK(a() == b());

  ch.scint_sigma_db = 2.0;
  SplitStream c(78);
  const int n = 50000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = sample_block_loss(ch, c);
    sum += v;
    sq += v * v;
  }
  double mean = sum / n;
  CHECK(std::abs(mean - 32.0) < 4.5 * 2.0 / std::sqrt(double(n)));
  CHECK(std::abs(std::sqrt(sq / n - mean * mean) - 2.0) < 0.05);
}

TEST_CASE("detection applies efficiency thinning and gaussian jitter") {
  DetectorParams det;
  det.efficiency = 0.7;
  det.jitter_sigma_ps = 0.0;
  SplitStream rng(3);
  int kept = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    auto t = detect(1000.0, det, rng);
    if (t) {
      kept++;
      CHECK(*t == 1000.0);  // no jitter, exact arrival
    }
  }
  double sigma = std::sqrt(0.7 * 0.3 * n);
  CHECK(std::abs(kept - 0.7 * n) < 4.5 * sigma);

  det.efficiency = 1.0;
  det.jitter_sigma_ps = 150.0;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    auto t = detect(1000.0, det, rng);
    REQUIRE(t.has_value());
    sum += *t;
    sq += *t * *t;
  }
  double mean = sum / n;
  double sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean - 1000.0) < 4.5 * 0.15 / std::sqrt(double(n)));
  CHECK(sd == doctest::Approx(0.15).epsilon(0.03));  // 150 ps in ns
}

TEST_CASE("dark events form a sorted poisson stream at the right rate") {
  DetectorParams det;
  det.dark_rate_hz = 1000.0;
  SplitStream rng(11);
  auto times = dark_events(det, 10.0, rng);

  double sigma = std::sqrt(10000.0);
  CHECK(std::abs(double(times.size()) - 10000.0) < 4.5 * sigma);
  for (std::size_t i = 1; i < times.size(); ++i) CHECK(times[i] >= times[i - 1]);
  CHECK(times.front() >= 0.0);
  CHECK(times.back() < 10.0 * 1e9);

  double mean_gap = (times.back() - times.front()) / double(times.size() - 1);
  CHECK(mean_gap == doctest::Approx(1e6).epsilon(0.05));  // 1/rate in ns

  det.dark_rate_hz = 0.0;
  auto none = dark_events(det, 10.0, rng);
  CHECK(none.empty());
}

TEST_CASE("clock tagging quantizes with offset and drift") {
  ClockParams ideal;
  // mid-tick values avoid floating-point boundary ambiguity
  CHECK(apply_clock(1560.078, ideal) == 10000);  // 1560.078/0.156 = 10000.5
  CHECK(apply_clock(0.078, ideal) == 0);

  ClockParams offset;
  offset.offset_ns = 37000.0;
  CHECK(apply_clock(0.078, offset) - apply_clock(0.078, ideal) ==
        std::int64_t(std::floor(37000.078 / 0.156)) -
            std::int64_t(std::floor(0.078 / 0.156)));

  // 10 ppm over one second stretches tags by ~1e4 ns worth of ticks
  ClockParams drift;
  drift.drift_ppm = 10.0;
  double t = 1e9 + 0.078;
  std::int64_t got = apply_clock(t, drift);
  std::int64_t want = std::int64_t(std::floor(t * (1.0 + 1e-5) / 0.156));
  CHECK(got == want);

  // monotone in true time
  ClockParams c;
  c.offset_ns = 123.4;
  c.drift_ppm = -5.0;
  std::int64_t prev = apply_clock(0.0, c);
  for (double x = 1.0; x < 2000.0; x += 7.3) {
    std::int64_t cur = apply_clock(x, c);
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("dead time keeps only events spaced by the hold-off") {
  std::vector<double> times = {0.0, 10.0, 19.0, 40.0, 41.0, 60.0};
  apply_dead_time(times, 15.0);
  REQUIRE(times.size() == 4);
  CHECK(times[0] == 0.0);
  CHECK(times[1] == 19.0);
  CHECK(times[2] == 40.0);
  CHECK(times[3] == 60.0);

  std::vector<double> untouched = {0.0, 100.0};
  apply_dead_time(untouched, 0.0);
  CHECK(untouched.size() == 2);
}

TEST_CASE("propagation delays match geometry") {
  // 143 km line of sight at c
  CHECK(propagation_delay_ns(143.0) == doctest::Approx(476996.654).epsilon(1e-6));
  // 100 m of fibre at group index 1.5
  CHECK(fiber_delay_ns(100.0) == doctest::Approx(500.346).epsilon(1e-5));
  CHECK(fiber_delay_ns(0.0) == 0.0);
}

TEST_CASE("parameter validation flags nonsense") {
  ChannelParams ch;
  ch.mean_loss_db = -1.0;
  CHECK_THROWS_AS(ch.validate(), std::invalid_argument);

  DetectorParams det;
  det.efficiency = 1.5;
  CHECK_THROWS_AS(det.validate(), std::invalid_argument);
  det.efficiency = 0.5;
  det.dark_rate_hz = -2.0;
  CHECK_THROWS_AS(det.validate(), std::invalid_argument);
}
