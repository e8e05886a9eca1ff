#include <gtest/gtest.h>

#include <random>

#include "csivitals/outage.hpp"

using namespace csivitals;
using namespace csivitals::outage;

namespace {

std::vector<PowerWindow> grid(const std::vector<double>& power) {
  std::vector<PowerWindow> w;
  for (std::size_t i = 0; i < power.size(); ++i) w.push_back({i * 7.5, (i + 1) * 7.5, power[i]});
  return w;
}

std::vector<GroundTruthRecord> all(GroundTruthState s) {
  return {{0.0, s, s == GroundTruthState::breathing ? std::optional<double>(15.0) : std::nullopt}};
}

// runs of at-or-below samples, by scanning for run starts and ends separately
std::vector<std::size_t> run_lengths(const std::vector<double>& x, double thr) {
  std::vector<std::size_t> starts, ends;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool low = x[i] <= thr;
    const bool prev = i > 0 && x[i - 1] <= thr;
    const bool next = i + 1 < x.size() && x[i + 1] <= thr;
    if (low && !prev) starts.push_back(i);
    if (low && !next) ends.push_back(i);
  }
  std::vector<std::size_t> len;
  for (std::size_t k = 0; k < starts.size(); ++k) len.push_back(ends[k] - starts[k] + 1);
  return len;
}

}  // namespace

TEST(NoiseFloor, Examples) {
  EXPECT_EQ(estimate_noise_floor(std::vector<double>(40, 0.0)), 0.0);
  EXPECT_EQ(estimate_noise_floor(std::vector<double>(80, 2.5)), 2.5);
  std::vector<double> mix(90, 1.0);
  mix.insert(mix.end(), 10, 100.0);
  std::shuffle(mix.begin(), mix.end(), std::mt19937(2));
  EXPECT_EQ(estimate_noise_floor(mix), 1.0);
  EXPECT_THROW(estimate_noise_floor(std::vector<double>(39, 1.0)), InsufficientData);
}

TEST(NoiseFloor, PercentileMatchesSortOracle) {
  std::mt19937_64 g(4);
  std::exponential_distribution<double> ex(1.0);
  for (std::size_t n : {40u, 41u, 97u, 400u}) {
    std::vector<double> v(n);
    for (auto& x : v) x = ex(g);
    auto s = v;
    std::sort(s.begin(), s.end());
    const double pos = 0.1 * (n - 1);
    const auto k = static_cast<std::size_t>(pos);
    EXPECT_DOUBLE_EQ(estimate_noise_floor(v), s[k] + (pos - k) * (s[k + 1] - s[k]));
    EXPECT_DOUBLE_EQ(percentile(v, 0), s.front());
    EXPECT_DOUBLE_EQ(percentile(v, 100), s.back());
  }
}

TEST(DetectOutage, AbsentTruthNeverOutage) {
  const auto w = grid(std::vector<double>(100, 0.0));
  EXPECT_TRUE(detect_outage(w, 1.0, all(GroundTruthState::absent)).empty());
  EXPECT_TRUE(detect_outage(w, 1.0, all(GroundTruthState::motion)).empty());
  EXPECT_TRUE(detect_outage(w, 1.0, {}).empty());
}

TEST(DetectOutage, SingleWindow) {
  std::vector<double> p(20, 5.0);
  p[7] = 0.5;
  const auto o = detect_outage(grid(p), 1.0, all(GroundTruthState::breathing));
  ASSERT_EQ(o.size(), 1u);
  EXPECT_DOUBLE_EQ(o[0].end_s - o[0].start_s, 7.5);
  EXPECT_EQ(o[0].scale, OutageScale::small);
}

TEST(DetectOutage, BoundaryIsInclusive) {
  std::vector<double> p(5, 5.0);
  p[2] = 1.0;
  EXPECT_EQ(detect_outage(grid(p), 1.0, all(GroundTruthState::breathing)).size(), 1u);
}

TEST(DetectOutage, FiveMinuteSplit) {
  std::vector<double> p(60, 5.0);
  for (std::size_t i = 5; i < 46; ++i) p[i] = 0.0;  // 41 windows = 307.5 s
  auto o = detect_outage(grid(p), 1.0, all(GroundTruthState::breathing));
  ASSERT_EQ(o.size(), 1u);
  EXPECT_DOUBLE_EQ(o[0].end_s - o[0].start_s, 307.5);
  EXPECT_EQ(o[0].scale, OutageScale::large);
  p[45] = 5.0;  // 40 windows = exactly 5 min stays small
  o = detect_outage(grid(p), 1.0, all(GroundTruthState::breathing));
  ASSERT_EQ(o.size(), 1u);
  EXPECT_EQ(o[0].scale, OutageScale::small);
}

TEST(DetectOutage, PropertiesOnRandomNights) {
  std::mt19937_64 g(8);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> p(300);
    for (auto& v : p) v = (g() % 3 == 0) ? 0.1 : 3.0;
    std::vector<GroundTruthRecord> gt;
    for (double t = 0; t < 300 * 7.5; t += 20.0 + static_cast<double>(g() % 200)) {
      const auto s = static_cast<GroundTruthState>(g() % 3);
      gt.push_back({t, s, s == GroundTruthState::breathing ? std::optional<double>(14.0) : std::nullopt});
    }
    const auto o = detect_outage(grid(p), 1.0, gt);
    TruthLookup truth(gt);
    for (std::size_t i = 0; i < o.size(); ++i) {
      EXPECT_GT(o[i].end_s, o[i].start_s);
      if (i) EXPECT_GT(o[i].start_s, o[i - 1].end_s);  // touching ones would have merged
      EXPECT_TRUE(truth.breathing_throughout(o[i].start_s, o[i].end_s));
      EXPECT_EQ(o[i].scale == OutageScale::large, o[i].minutes() > 5.0);
    }
  }
}

TEST(LevelCrossing, Examples) {
  EXPECT_EQ(level_crossing_rate(std::vector<double>(100, 2.0), 1.0, 1.0), 0.0);
  std::vector<double> sq;
  for (int c = 0; c < 4; ++c) {
    sq.insert(sq.end(), 60, 5.0);
    sq.insert(sq.end(), 60, 0.0);
  }
  ASSERT_EQ(sq.size(), 480u);  // one hour at 7.5 s
  EXPECT_DOUBLE_EQ(level_crossing_rate(sq, 1.0, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(level_crossing_rate(sq, 1.0, 0.5), 8.0);
  EXPECT_THROW(level_crossing_rate(sq, 1.0, 0.0), ParameterError);
}

TEST(LevelCrossing, BruteForce) {
  std::mt19937_64 g(10);
  std::uniform_real_distribution<double> u(0, 2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(1 + g() % 500);
    for (auto& v : x) v = u(g);
    // a downward crossing starts every below run except one at index 0
    auto lens = run_lengths(x, 1.0);
    std::size_t brute = lens.size() - (!x.empty() && x[0] <= 1.0 ? 1 : 0);
    EXPECT_DOUBLE_EQ(level_crossing_rate(x, 1.0, 2.0), brute / 2.0);
  }
}

TEST(FadeDuration, Examples) {
  auto none = average_fade_duration(std::vector<double>(50, 3.0), 1.0);
  EXPECT_FALSE(none.small_mean_min);
  EXPECT_FALSE(none.large_mean_min);

  std::vector<double> x(40, 3.0);
  for (std::size_t i = 10; i < 26; ++i) x[i] = 0.0;  // 16 windows = 2 min
  auto two = average_fade_duration(x, 1.0);
  EXPECT_DOUBLE_EQ(*two.small_mean_min, 2.0);
  EXPECT_FALSE(two.large_mean_min);

  std::vector<double> y{3.0};
  for (int minutes : {1, 2, 6, 12}) {
    y.insert(y.end(), static_cast<std::size_t>(minutes * 8), 0.0);
    y.push_back(3.0);
  }
  auto mix = average_fade_duration(y, 1.0);
  EXPECT_DOUBLE_EQ(*mix.small_mean_min, 1.5);
  EXPECT_DOUBLE_EQ(*mix.large_mean_min, 9.0);
  EXPECT_EQ(mix.durations_min, (std::vector<double>{1, 2, 6, 12}));
}

TEST(FadeDuration, RunLengthOracle) {
  std::mt19937_64 g(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(1 + g() % 600);
    for (auto& v : x) v = (g() % 4 == 0) ? 3.0 : 0.0;
    const auto f = average_fade_duration(x, 1.0);
    const auto lens = run_lengths(x, 1.0);
    ASSERT_EQ(f.durations_min.size(), lens.size());
    for (std::size_t i = 0; i < lens.size(); ++i) EXPECT_DOUBLE_EQ(f.durations_min[i], lens[i] * 7.5 / 60.0);
  }
}
