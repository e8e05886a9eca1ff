#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "csivitals/filters.hpp"
#include "csivitals/preprocess.hpp"

using namespace csivitals;
using namespace csivitals::preprocess;

namespace {

std::vector<CsiFrame> random_frames(std::size_t n, Dims d, double rate, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd;
  std::vector<CsiFrame> out;
  for (std::size_t k = 0; k < n; ++k) {
    CsiFrame f;
    f.t = static_cast<double>(k) / rate;
    f.dims = d;
    for (std::size_t c = 0; c < d.channels(); ++c) f.csi.emplace_back(nd(g), nd(g));
    out.push_back(std::move(f));
  }
  return out;
}

RealChannelMatrix ramp_matrix(double seconds, double rate, std::size_t channels = 2) {
  RealChannelMatrix m;
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate)) - 1;
  m.samples.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(channels));
  for (std::size_t k = 0; k < n; ++k) {
    m.times.push_back(static_cast<double>(k + 1) / rate);
    for (std::size_t c = 0; c < channels; ++c) m.samples(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = static_cast<double>(k * 10 + c);
  }
  m.sample_rate = rate;
  return m;
}

// Steady-state amplitude of a filtered sinusoid, measured by least squares
// over the last `tail` samples.
double steady_gain(const std::vector<double>& y, double omega, std::size_t tail) {
  double cc = 0, ss = 0, cs = 0, yc = 0, ys = 0;
  for (std::size_t k = y.size() - tail; k < y.size(); ++k) {
    const double c = std::cos(omega * k), s = std::sin(omega * k);
    cc += c * c;
    ss += s * s;
    cs += c * s;
    yc += y[k] * c;
    ys += y[k] * s;
  }
  const double det = cc * ss - cs * cs;
  const double a = (yc * ss - ys * cs) / det, b = (ys * cc - yc * cs) / det;
  return std::hypot(a, b);
}

}  // namespace

TEST(FirstDifference, ConstantStreamIsZero) {
  auto frames = random_frames(1, {1, 2, 3}, 10, 1);
  for (int k = 1; k < 5; ++k) {
    frames.push_back(frames[0]);
    frames.back().t = k;
  }
  const auto m = first_difference_amplitude(frames);
  EXPECT_EQ(m.rows(), 4u);
  EXPECT_EQ(m.samples.cwiseAbs().maxCoeff(), 0.0);
}

TEST(FirstDifference, ThreeFourFive) {
  auto frames = random_frames(2, {1, 1, 3}, 10, 2);
  frames[1].csi = frames[0].csi;
  frames[1].csi[1] += Complex(3, 4);
  const auto m = first_difference_amplitude(frames);
  ASSERT_EQ(m.rows(), 1u);
  EXPECT_EQ(m.samples(0, 0), 0.0);
  EXPECT_NEAR(m.samples(0, 1), 5.0, 1e-12);
  EXPECT_EQ(m.samples(0, 2), 0.0);
  EXPECT_EQ(m.times[0], frames[1].t);
}

TEST(FirstDifference, OffsetInvariant) {
  auto frames = random_frames(50, {1, 2, 4}, 100, 3);
  auto shifted = frames;
  for (auto& f : shifted)
    for (auto& v : f.csi) v += Complex(0.25, -0.5);
  const auto a = first_difference_amplitude(frames), b = first_difference_amplitude(shifted);
  EXPECT_LT((a.samples - b.samples).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FirstDifference, Errors) {
  EXPECT_THROW(first_difference_amplitude(random_frames(1, {1, 1, 2}, 1, 0)), InsufficientData);
  auto frames = random_frames(3, {1, 1, 2}, 1, 0);
  frames[2].dims = {1, 2, 1};
  EXPECT_THROW(first_difference_amplitude(frames), DimensionError);
}

TEST(MedianFilter, Examples) {
  std::vector<double> x{1, 1, 9, 1, 1};
  EXPECT_EQ(filters::median_filter(x, 3), (std::vector<double>{1, 1, 1, 1, 1}));
  std::vector<double> r{4, -1, 7, 2, 8, 0};
  EXPECT_EQ(filters::median_filter(r, 1), r);
  std::vector<double> mono{1, 2, 3, 5, 8, 13, 21};
  EXPECT_EQ(filters::median_filter(mono, 5), mono);
  EXPECT_THROW(filters::median_filter(x, 4), ParameterError);
  EXPECT_THROW(filters::median_filter(x, 0), ParameterError);
}

TEST(MedianFilter, ShrinkingEdgesMatchSortOracle) {
  std::mt19937 g(4);
  std::vector<double> x(40);
  for (auto& v : x) v = static_cast<double>(g() % 100);
  for (std::size_t w : {3u, 5u, 7u}) {
    const auto y = filters::median_filter(x, w);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const std::size_t h = std::min({w / 2, k, x.size() - 1 - k});
      std::vector<double> win(x.begin() + (k - h), x.begin() + (k + h + 1));
      std::sort(win.begin(), win.end());
      EXPECT_EQ(y[k], win[h]);
    }
  }
}

TEST(EmaFilter, Examples) {
  std::vector<double> c(20, 3.5);
  for (double v : filters::ema_filter(c, 0.9)) EXPECT_DOUBLE_EQ(v, 3.5);
  std::vector<double> x{1, -2, 5, 0.5, 9};
  const auto y = filters::ema_filter(x, 1e-9);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-6);
  EXPECT_THROW(filters::ema_filter(x, 0.0), ParameterError);
  EXPECT_THROW(filters::ema_filter(x, 1.5), ParameterError);
  EXPECT_EQ(filters::ema_filter(x, 1.0), std::vector<double>(5, 1.0));
}

TEST(EmaFilter, StepMatchesUnrolledRecurrence) {
  // y[0] = 0, y[k] = sum_{j=1..k} 0.1 * 0.9^(k-j) = 1 - 0.9^k for a step arriving at k = 1
  std::vector<double> step(30, 1.0);
  step[0] = 0.0;
  const auto y = filters::ema_filter(step, 0.9);
  for (std::size_t k = 0; k < y.size(); ++k) {
    double acc = 0;
    for (std::size_t j = 1; j <= k; ++j) acc += 0.1 * std::pow(0.9, static_cast<double>(k - j));
    EXPECT_NEAR(y[k], acc, 1e-14);
    EXPECT_NEAR(y[k], 1.0 - std::pow(0.9, static_cast<double>(k)), 1e-14);
  }
}

TEST(Butterworth, UnityDcAfterSettling) {
  for (std::size_t order : {1u, 2u, 4u, 5u}) {
    std::vector<double> dc(4000, 2.5);
    const auto y = filters::butterworth_lowpass(dc, 0.0125 * std::numbers::pi, order);
    EXPECT_NEAR(y.back(), 2.5, 2.5e-6) << order;
  }
}

TEST(Butterworth, HalfPowerAtCutoff) {
  const double wc = 0.0125 * std::numbers::pi;
  for (std::size_t order : {1u, 2u, 4u}) {
    const auto f = filters::butterworth_lowpass_design(wc, order);
    EXPECT_EQ(f.order(), order);
    // frequency-response oracle: product of section transfer functions on the unit circle
    EXPECT_NEAR(f.gain(wc), 1 / std::sqrt(2.0), 1e-9);
    std::vector<double> x(20000);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::sin(wc * k);
    const auto y = filters::apply(f, x);
    EXPECT_NEAR(steady_gain(y, wc, 4000), 1 / std::sqrt(2.0), 0.02 / std::sqrt(2.0));
  }
}

TEST(Butterworth, MaximallyFlatMagnitude) {
  // |H|^2 = 1 / (1 + (tan(w/2) / tan(wc/2))^(2n)) for the bilinear design
  const double wc = 0.3;
  for (std::size_t n : {2u, 3u, 4u}) {
    const auto f = filters::butterworth_lowpass_design(wc, n);
    for (double w : {0.05, 0.2, 0.3, 0.6, 1.5, 3.0}) {
      const double r = std::tan(w / 2) / std::tan(wc / 2);
      EXPECT_NEAR(f.gain(w), 1 / std::sqrt(1 + std::pow(r, 2.0 * n)), 1e-9);
    }
  }
}

TEST(Butterworth, FiveHertzAtDefaultRate) {
  const double wc = 0.0125 * std::numbers::pi;
  EXPECT_NEAR(wc * 800.0 / (2 * std::numbers::pi), 5.0, 1e-12);
}

TEST(Butterworth, BadCutoff) {
  EXPECT_THROW(filters::butterworth_lowpass_design(0.0, 4), ParameterError);
  EXPECT_THROW(filters::butterworth_lowpass_design(std::numbers::pi, 4), ParameterError);
  EXPECT_THROW(filters::butterworth_lowpass_design(1.0, 0), ParameterError);
}

TEST(Condition, StreamingMatchesBatch) {
  FilterConfig cfg;
  cfg.butter_cutoff = 0.1;
  for (std::size_t w : {1u, 3u, 5u, 9u}) {
    cfg.median_window = w;
    const auto frames = random_frames(300, {1, 2, 3}, 100, 5 + w);
    const auto batch = condition(first_difference_amplitude(frames), cfg);
    Conditioner c(cfg);
    std::vector<Row> rows;
    for (const auto& f : frames) c.push(f, rows);
    c.flush(rows);
    ASSERT_EQ(rows.size(), batch.rows());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      EXPECT_EQ(rows[r].t, batch.times[r]);
      for (std::size_t ch = 0; ch < 6; ++ch)
        EXPECT_NEAR(rows[r].values[ch], batch.samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(ch)), 1e-12);
    }
  }
}

TEST(Condition, SameDelayOnEveryChannel) {
  // a step hitting every channel at once comes out identical on each
  RealChannelMatrix m;
  m.samples = Eigen::MatrixXd::Zero(400, 4);
  for (Eigen::Index r = 100; r < 400; ++r) m.samples.row(r).setConstant(1.0);
  m.times.resize(400);
  for (std::size_t i = 0; i < 400; ++i) m.times[i] = i;
  const auto y = condition(m, FilterConfig{});
  for (Eigen::Index c = 1; c < 4; ++c) EXPECT_EQ((y.samples.col(c) - y.samples.col(0)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Condition, RejectsBadConfig) {
  FilterConfig cfg;
  cfg.median_window = 4;
  EXPECT_THROW(Conditioner{cfg}, ParameterError);
  cfg.median_window = 5;
  cfg.butter_cutoff = 1.0;
  EXPECT_THROW(Conditioner{cfg}, ParameterError);
}

TEST(Epochize, NinetySeconds) {
  const auto e = epochize(ramp_matrix(90, 20), StreamConfig{20, 30, 600}, 0.0);
  ASSERT_EQ(e.size(), 3u);
  for (const auto& x : e) EXPECT_FALSE(x.partial);
  EXPECT_EQ(e[1].start_s, 30.0);
}

TEST(Epochize, SeventyFiveSeconds) {
  const auto e = epochize(ramp_matrix(75, 20), StreamConfig{20, 30, 600}, 0.0);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_FALSE(e[0].partial);
  EXPECT_FALSE(e[1].partial);
  EXPECT_TRUE(e[2].partial);
}

TEST(Epochize, Empty) {
  RealChannelMatrix m;
  EXPECT_TRUE(epochize(m, StreamConfig{}).empty());
}

TEST(Downsample, UniformDecimation) {
  RawEpoch e;
  for (std::size_t i = 0; i < 24000; ++i) e.rows.push_back({i / 800.0, {static_cast<double>(i)}});
  const auto d = downsample_epoch(e, 600, 800, 30);
  EXPECT_EQ(d.data.rows(), 600);
  EXPECT_EQ(d.valid, 600u);
  for (Eigen::Index k = 0; k < 600; ++k) {
    EXPECT_EQ(d.data(k, 0), 40.0 * k);
    // sample k sits at k / 20 s into the epoch
    EXPECT_NEAR(e.rows[static_cast<std::size_t>(d.data(k, 0))].t, k / 20.0, 1e-12);
  }
}

TEST(Downsample, ZeroPadAndIdentity) {
  RawEpoch e;
  for (std::size_t i = 0; i < 400; ++i) e.rows.push_back({i * 0.05, {1.0 + i, -1.0}});
  auto d = downsample_epoch(e, 600);
  EXPECT_EQ(d.valid, 400u);
  EXPECT_EQ(d.data(399, 0), 400.0);
  EXPECT_EQ(d.data.bottomRows(200).cwiseAbs().maxCoeff(), 0.0);

  RawEpoch f;
  for (std::size_t i = 0; i < 600; ++i) f.rows.push_back({i * 0.05, {std::sin(0.1 * i)}});
  d = downsample_epoch(f, 600);
  for (Eigen::Index k = 0; k < 600; ++k) EXPECT_EQ(d.data(k, 0), f.rows[static_cast<std::size_t>(k)].values[0]);
  EXPECT_THROW(downsample_epoch(RawEpoch{}, 600), InsufficientData);
}

TEST(Downsample, PartialKeepsTimeGrid) {
  RawEpoch e;
  e.partial = true;
  for (std::size_t i = 0; i < 12000; ++i) e.rows.push_back({i / 800.0, {static_cast<double>(i)}});
  const auto d = downsample_epoch(e, 600, 800, 30);
  EXPECT_EQ(d.valid, 300u);
  EXPECT_EQ(d.data(299, 0), 299.0 * 40);
  EXPECT_EQ(d.data.bottomRows(300).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Epocher, StreamingMatchesBatch) {
  const auto m = ramp_matrix(75, 40, 3);
  const StreamConfig cfg{40, 30, 600};
  const auto batch = epochize(m, cfg, 0.0);
  Epocher ep(cfg, 0.0);
  std::vector<DownsampledEpoch> got;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Row row{m.times[r], {m.samples(static_cast<Eigen::Index>(r), 0), m.samples(static_cast<Eigen::Index>(r), 1), m.samples(static_cast<Eigen::Index>(r), 2)}};
    if (auto d = ep.push(row)) got.push_back(*d);
  }
  if (auto d = ep.flush()) got.push_back(*d);
  ASSERT_EQ(got.size(), batch.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    const auto want = downsample_epoch(batch[i], 600, 40, 30);
    EXPECT_EQ(got[i].partial, batch[i].partial);
    EXPECT_EQ(got[i].valid, want.valid);
    EXPECT_EQ(got[i].data, want.data);
  }
  EXPECT_TRUE(got.back().partial);
  EXPECT_EQ(got.back().valid, 300u);
}

TEST(Pipeline, Deterministic) {
  const auto frames = random_frames(2000, {1, 1, 4}, 40, 8);
  auto run = [&] {
    Conditioner c(FilterConfig{});
    Epocher ep(StreamConfig{40, 30, 600}, frames.front().t);
    std::vector<Row> rows;
    std::vector<Eigen::MatrixXd> out;
    for (const auto& f : frames) {
      rows.clear();
      c.push(f, rows);
      for (auto& r : rows)
        if (auto d = ep.push(r)) out.push_back(d->data);
    }
    rows.clear();
    c.flush(rows);
    for (auto& r : rows)
      if (auto d = ep.push(r)) out.push_back(d->data);
    if (auto d = ep.flush()) out.push_back(d->data);
    return out;
  };
  EXPECT_EQ(run(), run());
}
