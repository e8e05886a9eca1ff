#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "csivitals/preprocess.hpp"
#include "csivitals/subspace.hpp"
#include "csivitals/synth.hpp"

using namespace csivitals;
using namespace csivitals::subspace;

namespace {

Epoch epoch_of(const Eigen::MatrixXd& m) {
  Epoch e;
  e.data = m;
  e.valid = static_cast<std::size_t>(m.rows());
  return e;
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(g) * (1.0 + 0.1 * j);
  return m;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix, descending.
std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30 * a.squaredNorm()) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

// Conditioned, downsampled epochs of a synthetic scene.
std::vector<preprocess::DownsampledEpoch> synth_epochs(const synth::MultipathScene& s, double seconds, std::uint64_t seed) {
  synth::CfrGenerator gen(s, seconds, 800, seed);
  preprocess::Conditioner cond(preprocess::FilterConfig{});
  preprocess::Epocher ep(StreamConfig{}, 0.0);
  std::vector<preprocess::DownsampledEpoch> out;
  std::vector<preprocess::Row> rows;
  while (auto f = gen.next()) {
    rows.clear();
    cond.push(*f, rows);
    for (auto& r : rows)
      if (auto d = ep.push(std::move(r))) out.push_back(std::move(*d));
  }
  rows.clear();
  cond.flush(rows);
  for (auto& r : rows)
    if (auto d = ep.push(std::move(r))) out.push_back(std::move(*d));
  if (auto d = ep.flush()) out.push_back(std::move(*d));
  return out;
}

}  // namespace

TEST(Pca, IdenticalSinusoidIsRankOne) {
  Eigen::MatrixXd m(600, 12);
  for (Eigen::Index i = 0; i < 600; ++i) m.row(i).setConstant(std::sin(2 * std::numbers::pi * i / 80.0));
  const auto e = pca_fit_project(epoch_of(m), 5);
  const Eigen::VectorXd centered = m.col(0).array() - m.col(0).mean();
  const double corr = e.projections.col(0).dot(centered) / (e.projections.col(0).norm() * centered.norm());
  EXPECT_NEAR(std::fabs(corr), 1.0, 1e-12);
  for (std::size_t k = 1; k < 5; ++k) EXPECT_NEAR(e.explained_power[k], 0.0, 1e-12 * e.explained_power[0]);
}

TEST(Pca, ZeroMatrix) {
  const auto e = pca_fit_project(epoch_of(Eigen::MatrixXd::Zero(600, 8)), 5);
  EXPECT_EQ(e.projections.cwiseAbs().maxCoeff(), 0.0);
  for (double v : e.explained_power) EXPECT_EQ(v, 0.0);
}

TEST(Pca, EigenvaluesMatchJacobiOracle) {
  const Eigen::MatrixXd m = random_matrix(600, 90, 17);
  const auto e = pca_fit_project(epoch_of(m), 90);
  const Eigen::MatrixXd c = m.rowwise() - m.colwise().mean();
  const auto oracle = jacobi_eigenvalues(c.transpose() * c / 600.0);
  for (std::size_t k = 0; k < 90; ++k) EXPECT_NEAR(e.explained_power[k], oracle[k], 1e-8 * oracle[k]) << k;
  // all directions reconstruct the centred data
  EXPECT_LT((e.projections * e.directions.transpose() - c).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Pca, OrthonormalAndPowerConserving) {
  const Eigen::MatrixXd m = random_matrix(600, 30, 5);
  const auto e = pca_fit_project(epoch_of(m), 30);
  EXPECT_LT((e.directions.transpose() * e.directions - Eigen::MatrixXd::Identity(30, 30)).cwiseAbs().maxCoeff(), 1e-8);
  const Eigen::MatrixXd c = m.rowwise() - m.colwise().mean();
  double sum = 0;
  for (double v : e.explained_power) sum += v;
  EXPECT_NEAR(sum, c.squaredNorm() / 600.0, 1e-8 * sum);
  for (std::size_t k = 1; k < 30; ++k) EXPECT_LE(e.explained_power[k], e.explained_power[k - 1]);
}

TEST(Pca, SignsAlignAcrossIdenticalEpochs) {
  const Eigen::MatrixXd m = random_matrix(600, 20, 9);
  const auto first = pca_fit_project(epoch_of(m), 5);
  auto prev = first;
  for (int i = 0; i < 4; ++i) {
    const auto next = pca_fit_project(epoch_of(m), 5, &prev);
    EXPECT_LT((next.projections - first.projections).cwiseAbs().maxCoeff(), 1e-9);
    prev = next;
  }
  // negated data flips every direction; alignment then flips it back onto the previous ones
  const auto neg = pca_fit_project(epoch_of(-m), 5, &first);
  for (Eigen::Index k = 0; k < 5; ++k) EXPECT_GT(neg.directions.col(k).dot(first.directions.col(k)), 0.99);
}

TEST(Pca, FirstEpochLargestLoadingPositive) {
  const auto e = pca_fit_project(epoch_of(random_matrix(600, 10, 3)), 5);
  for (Eigen::Index k = 0; k < 5; ++k) {
    Eigen::Index arg;
    e.directions.col(k).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(e.directions(arg, k), 0.0);
  }
}

TEST(Pca, PartialEpochUsesValidRows) {
  Eigen::MatrixXd m = random_matrix(600, 8, 4);
  m.bottomRows(200).setZero();
  Epoch e = epoch_of(m);
  e.valid = 400;
  const auto fit = pca_fit_project(e, 5);
  const auto ref = pca_fit_project(epoch_of(m.topRows(400)), 5);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(fit.explained_power[k], ref.explained_power[k], 1e-12);
  EXPECT_EQ(fit.projections.bottomRows(200).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Pca, Errors) {
  EXPECT_THROW(pca_fit_project(epoch_of(Eigen::MatrixXd::Ones(600, 4)), 5), ParameterError);
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(600, 8);
  m(3, 3) = std::nan("");
  EXPECT_THROW(pca_fit_project(epoch_of(m), 5), ParameterError);
}

TEST(ProjectionPower, Examples) {
  const auto z = pca_fit_project(epoch_of(Eigen::MatrixXd::Zero(600, 6)), 5);
  for (double v : projection_power(z, 0)) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(projection_power(z, 0).size(), 4u);

  Epoch e = epoch_of(Eigen::MatrixXd::Zero(600, 6));
  e.projections = Eigen::MatrixXd::Zero(600, 5);
  for (Eigen::Index i = 0; i < 600; ++i) e.projections(i, 0) = std::sin(2 * std::numbers::pi * i / 60.0);
  const auto p = projection_power(e, 0, 600);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_NEAR(p[0], 0.5, 0.01);
  EXPECT_THROW(projection_power(e, 0, 601), ParameterError);
  EXPECT_THROW(projection_power(e, 0, 0), ParameterError);
  EXPECT_THROW(projection_power(e, 7, 150), ParameterError);
}

TEST(ProjectionPower, MotionLiftsLowerComponents) {
  synth::SleeperOptions o;
  o.seed = 4;
  auto still = synth::sleeper_scene(o);
  auto moving = still;
  // a limb movement drags several reflections at once
  for (int i = 0; i < 3; ++i) {
    synth::DynamicPath limb;
    limb.base_distance_m = 1.8 + 0.4 * i;
    limb.antenna_offsets_m = {0.0, 0.013 * i, 0.029 * i};
    limb.trajectory = synth::Trajectory::motion_burst(5.0, 20.0, 0.06 + 0.01 * i, 77 + i);
    moving.dynamic_paths.push_back(limb);
  }
  const auto a = synth_epochs(still, 30, 1), b = synth_epochs(moving, 30, 1);
  ASSERT_EQ(a.size(), 1u);
  ASSERT_EQ(b.size(), 1u);
  const auto fa = pca_fit_project(Epoch::from(a[0]), 5), fb = pca_fit_project(Epoch::from(b[0]), 5);
  for (std::size_t comp : {2u, 3u, 4u}) {
    auto mean = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x;
      return s / v.size();
    };
    EXPECT_GE(mean(projection_power(fb, comp)), 5.0 * mean(projection_power(fa, comp))) << comp;
  }
}

TEST(Pca, BreathFrequencyOnFirstProjection) {
  // dominant DFT bin of projection 1 over two concatenated epochs sits at the breathing rate
  synth::SleeperOptions o;
  o.seed = 2;
  o.rate_bpm = 15;
  const auto eps = synth_epochs(synth::sleeper_scene(o), 60, 3);
  ASSERT_EQ(eps.size(), 2u);
  const auto e0 = pca_fit_project(Epoch::from(eps[0]), 5);
  const auto e1 = pca_fit_project(Epoch::from(eps[1]), 5, &e0);
  std::vector<double> x;
  for (const auto* e : {&e0, &e1})
    for (Eigen::Index i = 0; i < 600; ++i) x.push_back(e->projections(i, 0));
  const std::size_t n = x.size();
  std::size_t best = 1;
  double best_mag = 0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    std::complex<double> acc;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * std::polar(1.0, -2 * std::numbers::pi * k * i / n);
    if (std::abs(acc) > best_mag) {
      best_mag = std::abs(acc);
      best = k;
    }
  }
  const double truth_bin = 0.25 * 60.0;  // 0.25 Hz over 60 s
  EXPECT_LE(std::fabs(static_cast<double>(best) - truth_bin), 1.0) << "peak bin " << best;
}
