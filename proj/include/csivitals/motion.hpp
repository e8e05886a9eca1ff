#pragma once

// Online hyper-ellipsoidal outlier detection: running mean and recursively
// updated inverse covariance, a chi-squared radius, and the micro-event /
// merge logic that turns outlier runs into motion events.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "csivitals/error.hpp"
#include "csivitals/special.hpp"

namespace csivitals::motion {

/// t with t^2 = chi2_d^{-1}(coverage).
inline double chi2_radius(std::size_t d, double coverage = 0.98) {
  if (d < 1) throw ParameterError("chi2_radius: d must be >= 1");
  if (!(coverage > 0 && coverage < 1)) throw ParameterError("chi2_radius: coverage must be in (0, 1)");
  return std::sqrt(special::chi2_quantile(coverage, static_cast<double>(d)));
}

struct EllipsoidConfig {
  double coverage = 0.98;
  double alpha = 0.9995;       // mean forgetting factor
  double cov_alpha = 1.0;      // forgetting factor inside the inverse-covariance recursion
  double k_cap = 2000.0;       // sample count used by the recursion saturates here
  double ridge_epsilon = 1e-6;
  bool freeze_on_outlier = false;
  double clip_multiple = 2.0;  // updates see r pulled in to clip_multiple * t; 0 disables

  void validate() const {
    if (!(coverage > 0 && coverage < 1)) throw ParameterError("coverage must be in (0, 1)");
    if (!(alpha > 0 && alpha <= 1)) throw ParameterError("alpha must be in (0, 1]");
    if (!(cov_alpha > 0 && cov_alpha <= 1)) throw ParameterError("cov_alpha must be in (0, 1]");
    if (!(k_cap >= 2)) throw ParameterError("k_cap must be >= 2");
    if (!(ridge_epsilon > 0)) throw ParameterError("ridge_epsilon must be > 0");
    if (!(clip_multiple >= 0)) throw ParameterError("clip_multiple must be >= 0");
  }
};

struct EllipsoidState {
  double k = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd inv_cov;
  double radius = 0;
  EllipsoidConfig cfg;
  bool ridged = false;

  std::size_t dims() const { return static_cast<std::size_t>(mean.size()); }
};

/// Batch mean and S = m_{R^2} - m_R m_R^T over the first k0 samples. A
/// near-singular S gets eps * trace(S) / d added to its diagonal (eps alone
/// when S is zero).
inline EllipsoidState ellipsoid_init(std::span<const Eigen::VectorXd> samples, const EllipsoidConfig& cfg = {}) {
  cfg.validate();
  if (samples.empty()) throw InsufficientData("ellipsoid_init: no samples");
  const auto d = samples.front().size();
  if (static_cast<Eigen::Index>(samples.size()) <= d)
    throw InsufficientData("ellipsoid_init: need more samples than dimensions (k0 > d)");
  Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(d, d);
  for (const auto& r : samples) {
    if (r.size() != d) throw DimensionError("ellipsoid_init: samples differ in dimension", 0);
    if (!r.allFinite()) throw ParameterError("ellipsoid_init: non-finite sample");
    m += r;
    m2 += r * r.transpose();
  }
  const double k = static_cast<double>(samples.size());
  m /= k;
  m2 /= k;
  Eigen::MatrixXd S = m2 - m * m.transpose();
  S = 0.5 * (S + S.transpose());

  EllipsoidState st;
  st.cfg = cfg;
  st.k = k;
  st.mean = m;
  st.radius = chi2_radius(static_cast<std::size_t>(d), cfg.coverage);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff(), low = es.eigenvalues().minCoeff();
  if (!(top > 0) || low <= 1e-10 * top) {
    const double tr = S.trace();
    const double eps = tr > 0 ? cfg.ridge_epsilon * tr / static_cast<double>(d) : cfg.ridge_epsilon;
    S += eps * Eigen::MatrixXd::Identity(d, d);
    st.ridged = true;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw InsufficientData("ellipsoid_init: covariance is rank deficient");
  st.inv_cov = llt.solve(Eigen::MatrixXd::Identity(d, d));
  st.inv_cov = 0.5 * (st.inv_cov + st.inv_cov.transpose());
  return st;
}

struct UpdateResult {
  double mahalanobis = 0;
  bool outlier = false;
};

/// sqrt((r - m)^T S^{-1} (r - m)) against the current state.
inline double mahalanobis(const EllipsoidState& st, const Eigen::VectorXd& r) {
  const Eigen::VectorXd u = r - st.mean;
  return std::sqrt(std::max(0.0, u.dot(st.inv_cov * u)));
}

/// One inverse-covariance step with u = r - m (pre-update mean):
///   S'^{-1} = k S^{-1} / (a (k-1)) [I - u u^T S^{-1} / ((k-1)/a + u^T S^{-1} u)]
/// with a = cov_alpha and k = min(count, k_cap).
inline void inverse_step(Eigen::MatrixXd& inv_cov, const Eigen::VectorXd& u, double k, double a) {
  const Eigen::VectorXd w = inv_cov * u;
  const double q = u.dot(w);
  const double c = k / (a * (k - 1.0));
  inv_cov = c * (inv_cov - (w * w.transpose()) / ((k - 1.0) / a + q));
  inv_cov = 0.5 * (inv_cov + inv_cov.transpose());
}

/// Classifies r with the pre-update state, then updates mean and S^{-1}.
/// An r farther than clip_multiple * t enters the update pulled in along
/// r - m to that distance, so a burst cannot inflate S within a few samples.
inline UpdateResult ellipsoid_update(EllipsoidState& st, const Eigen::VectorXd& r) {
  if (r.size() != st.mean.size()) throw DimensionError("ellipsoid_update: dimension mismatch", 0);
  if (!r.allFinite()) throw ParameterError("ellipsoid_update: non-finite input vector");
  UpdateResult res;
  Eigen::VectorXd u = r - st.mean;
  res.mahalanobis = std::sqrt(std::max(0.0, u.dot(st.inv_cov * u)));
  res.outlier = res.mahalanobis > st.radius;
  if (res.outlier && st.cfg.freeze_on_outlier) return res;
  if (st.cfg.clip_multiple > 0 && res.mahalanobis > st.cfg.clip_multiple * st.radius)
    u *= st.cfg.clip_multiple * st.radius / res.mahalanobis;
  const double k = std::min(st.k, st.cfg.k_cap);
  inverse_step(st.inv_cov, u, k, st.cfg.cov_alpha);
  st.mean = st.cfg.alpha * st.mean + (1.0 - st.cfg.alpha) * (st.mean + u);
  st.k += 1.0;
  return res;
}

struct MotionEvent {
  double start_s = 0, end_s = 0;
  std::size_t micro_event_count = 0;
  double peak_mahalanobis = 0;
  std::size_t first_sample = 0, last_sample = 0;  // inclusive stream indices

  double duration_s() const { return end_s - start_s; }
};

/// Streaming micro-event detector. Samples are pushed in order; an event is
/// returned once no later micro-event can merge into it.
class EventDetector {
 public:
  EventDetector(std::size_t e1, std::size_t e2, double sample_period_s) : e1_(e1), e2_(e2), dt_(sample_period_s) {
    if (e1 == 0) throw ParameterError("e1 must be >= 1");
    if (!(sample_period_s > 0)) throw ParameterError("sample period must be positive");
  }

  std::optional<MotionEvent> push(bool outlier, double t, double maha = 0.0) {
    std::optional<MotionEvent> done;
    const std::size_t i = n_++;
    if (outlier) {
      if (!run_) run_ = Run{i, i, t, t, maha};
      run_->end = i;
      run_->t_end = t;
      run_->peak = std::max(run_->peak, maha);
    } else {
      if (run_) close_run();
      gap_peak_ = std::max(gap_peak_, maha);
    }
    // The earliest index a future micro-event could start at.
    const std::size_t next_start = run_ ? run_->start : n_;
    if (pending_ && next_start - pending_->last_sample - 1 > e2_) {
      done = pending_;
      pending_.reset();
    }
    return done;
  }

  /// Ends the stream: closes any open run and returns the last event.
  std::optional<MotionEvent> flush() {
    if (run_) close_run();
    auto done = pending_;
    pending_.reset();
    return done;
  }

  /// Stream index ranges already known to belong to an event but not yet returned.
  std::vector<std::pair<std::size_t, std::size_t>> provisional() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (pending_) out.emplace_back(pending_->first_sample, pending_->last_sample);
    if (run_ && run_->end - run_->start + 1 >= e1_) out.emplace_back(run_->start, run_->end);
    return out;
  }

  std::size_t samples_seen() const { return n_; }

 private:
  struct Run {
    std::size_t start, end;
    double t_start, t_end, peak;
  };

  void close_run() {
    const Run r = *run_;
    run_.reset();
    if (r.end - r.start + 1 < e1_) {
      gap_peak_ = std::max(gap_peak_, r.peak);
      return;
    }
    if (pending_ && r.start - pending_->last_sample - 1 <= e2_) {
      pending_->last_sample = r.end;
      pending_->end_s = r.t_end + dt_;
      pending_->micro_event_count += 1;
      pending_->peak_mahalanobis = std::max({pending_->peak_mahalanobis, r.peak, gap_peak_});
    } else {
      MotionEvent e;
      e.start_s = r.t_start;
      e.end_s = r.t_end + dt_;
      e.micro_event_count = 1;
      e.peak_mahalanobis = r.peak;
      e.first_sample = r.start;
      e.last_sample = r.end;
      pending_ = e;
    }
    gap_peak_ = 0.0;
  }

  std::size_t e1_, e2_;
  double dt_;
  std::size_t n_ = 0;
  std::optional<Run> run_;
  std::optional<MotionEvent> pending_;
  double gap_peak_ = 0.0;
};

/// Batch form: >= e1 consecutive outliers form a micro-event; micro-events
/// separated by <= e2 non-outlier samples merge, gap included.
inline std::vector<MotionEvent> detect_events(const std::vector<bool>& flags, std::span<const double> times, std::size_t e1,
                                              std::size_t e2, double sample_period_s,
                                              std::span<const double> mahalanobis = {}) {
  if (flags.size() != times.size()) throw ParameterError("detect_events: flags and times differ in length");
  EventDetector det(e1, e2, sample_period_s);
  std::vector<MotionEvent> out;
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (auto e = det.push(flags[i], times[i], mahalanobis.empty() ? 0.0 : mahalanobis[i])) out.push_back(*e);
  if (auto e = det.flush()) out.push_back(*e);
  return out;
}

}  // namespace csivitals::motion
