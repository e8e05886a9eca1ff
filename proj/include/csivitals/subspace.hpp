#pragma once

// Per-epoch PCA over the channel dimension.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "csivitals/error.hpp"
#include "csivitals/preprocess.hpp"

namespace csivitals::subspace {

struct Epoch {
  std::size_t index = 0;
  double start_s = 0.0;
  Eigen::MatrixXd data;         // [samples][channels]
  std::size_t valid = 0;        // leading rows that carry data; the rest is padding
  bool partial = false;
  Eigen::MatrixXd projections;  // [samples][p], padded rows stay zero
  Eigen::MatrixXd directions;   // [channels][p], unit columns
  std::vector<double> explained_power;

  static Epoch from(const preprocess::DownsampledEpoch& d) {
    Epoch e;
    e.index = d.index;
    e.start_s = d.start_s;
    e.data = d.data;
    e.valid = d.valid;
    e.partial = d.partial;
    return e;
  }
};

struct SubspaceSelection {
  std::size_t breath_component = 0;                 // 0-based
  std::vector<std::size_t> motion_components{2, 3, 4};
};

/// Centres each channel over the valid rows, eigendecomposes the 1/n channel
/// covariance, projects onto the top-p directions. Signs follow the previous
/// epoch's directions (loading dot product >= 0); without one, the
/// largest-magnitude loading of each direction is made positive.
inline Epoch pca_fit_project(Epoch e, std::size_t p, const Epoch* prev = nullptr) {
  const auto ch = static_cast<std::size_t>(e.data.cols());
  if (p < 1) throw ParameterError("pca: need at least one component");
  if (p > ch) throw ParameterError("pca: p = " + std::to_string(p) + " exceeds channel count " + std::to_string(ch));
  if (!e.data.allFinite()) throw ParameterError("pca: epoch data must be finite");
  const auto rows = static_cast<Eigen::Index>(e.data.rows());
  const auto n = static_cast<Eigen::Index>(e.valid == 0 ? e.data.rows() : std::min<std::size_t>(e.valid, e.data.rows()));
  e.valid = static_cast<std::size_t>(n);
  e.projections = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(p));
  e.directions = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(p));
  e.explained_power.assign(p, 0.0);
  if (n == 0) return e;

  const Eigen::MatrixXd block = e.data.topRows(n);
  const Eigen::RowVectorXd mean = block.colwise().mean();
  const Eigen::MatrixXd centered = block.rowwise() - mean;
  const double total = centered.squaredNorm();
  if (!(total > 0.0)) return e;

  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw Error("pca: eigendecomposition failed");
  // Eigen returns ascending order.
  for (std::size_t k = 0; k < p; ++k) {
    const auto src = static_cast<Eigen::Index>(ch - 1 - k);
    Eigen::VectorXd v = es.eigenvectors().col(src);
    bool flip = false;
    if (prev && prev->directions.rows() == v.rows() && static_cast<std::size_t>(prev->directions.cols()) > k &&
        prev->directions.col(static_cast<Eigen::Index>(k)).squaredNorm() > 0) {
      flip = v.dot(prev->directions.col(static_cast<Eigen::Index>(k))) < 0;
    } else {
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      flip = v(arg) < 0;
    }
    if (flip) v = -v;
    e.directions.col(static_cast<Eigen::Index>(k)) = v;
    e.explained_power[k] = std::max(0.0, es.eigenvalues()(src));
  }
  e.projections.topRows(n) = centered * e.directions;
  return e;
}

/// Mean square of one projection over consecutive windows of the valid rows;
/// a trailing short window is averaged over its own length.
inline std::vector<double> projection_power(const Epoch& e, std::size_t component, std::size_t window_samples = 150) {
  if (window_samples == 0 || window_samples > static_cast<std::size_t>(std::max<Eigen::Index>(e.data.rows(), 600)))
    throw ParameterError("projection window must lie in [1, 600]");
  if (static_cast<Eigen::Index>(component) >= e.projections.cols()) throw ParameterError("component not fitted");
  const std::size_t n = e.valid;
  std::vector<double> out;
  for (std::size_t s = 0; s < n; s += window_samples) {
    const std::size_t end = std::min(n, s + window_samples);
    double acc = 0.0;
    for (std::size_t i = s; i < end; ++i) {
      const double v = e.projections(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(component));
      acc += v * v;
    }
    out.push_back(acc / static_cast<double>(end - s));
  }
  return out;
}

}  // namespace csivitals::subspace
