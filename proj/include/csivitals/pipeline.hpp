#pragma once

// Streaming night processor shared by offline replay and live ingestion:
// frames in, conditioned epochs, PCA, motion events and per-second BPM out.
// Both entry points push the same frames through this class, so their
// outputs agree bit for bit.

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csivitals/breath.hpp"
#include "csivitals/config.hpp"
#include "csivitals/error.hpp"
#include "csivitals/filters.hpp"
#include "csivitals/motion.hpp"
#include "csivitals/outage.hpp"
#include "csivitals/preprocess.hpp"
#include "csivitals/subspace.hpp"
#include "csivitals/types.hpp"

namespace csivitals {

struct NightResult {
  std::size_t frames = 0;
  double t_start = 0, t_end = 0;
  std::size_t epochs = 0;
  bool last_epoch_partial = false;
  std::vector<breath::BpmSample> bpm;
  std::vector<motion::MotionEvent> events;
  std::vector<outage::PowerWindow> power_windows;
  std::optional<double> noise_floor;
  std::string noise_floor_source;  // "config", "calibration", "estimated" or ""
  std::vector<std::string> warnings;
};

class NightProcessor {
 public:
  explicit NightProcessor(Config cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    sel_ = cfg_.selection();
    rate_ = cfg_.stream.epoch_rate_hz();
    bandpass_ = breath::breath_bandpass_design(rate_, cfg_.bandpass_order);
    bp_state_ = filters::SosState(bandpass_);
    if (cfg_.noise_floor) {
      res_.noise_floor = cfg_.noise_floor;
      res_.noise_floor_source = cfg_.noise_floor_origin;
    }
    hop_ = static_cast<std::size_t>(std::llround(rate_));
    window_ = static_cast<std::size_t>(std::llround(cfg_.window_epochs * cfg_.stream.epoch_seconds * rate_));
    next_emit_ = hop_ - 1;
  }

  NightProcessor(const NightProcessor&) = delete;
  NightProcessor& operator=(const NightProcessor&) = delete;

  /// Feeds one frame. Throws DimensionError / OrderingError naming the
  /// 0-based frame index when the stream breaks its invariants.
  void push(const CsiFrame& f) {
    const std::size_t idx = res_.frames;
    if (!f.finite()) throw ValidationError("frame " + std::to_string(idx) + ": non-finite value", 0);
    if (f.csi.size() != f.dims.channels())
      throw DimensionError("frame " + std::to_string(idx) + ": tensor size does not match its dimensions", 0);
    if (idx == 0) {
      dims_ = f.dims;
      res_.t_start = f.t;
      epocher_.emplace(cfg_.stream, f.t);
      conditioner_.emplace(cfg_.filter);
      if (f.dims.channels() < cfg_.pca_components)
        throw DimensionError("frame 0: " + std::to_string(f.dims.channels()) + " channels, fewer than pca_components", 0);
    } else {
      if (!(f.dims == dims_))
        throw DimensionError("frame " + std::to_string(idx) + ": dimensions differ from frame 0", 0);
      if (!(f.t > res_.t_end))
        throw OrderingError("frame " + std::to_string(idx) + ": timestamp not strictly increasing", 0);
    }
    res_.t_end = f.t;
    ++res_.frames;
    rows_.clear();
    conditioner_->push(f, rows_);
    take_rows();
  }

  /// Drains the filters and the trailing epoch and returns the night.
  NightResult finish() {
    if (finished_) throw Error("NightProcessor::finish called twice");
    finished_ = true;
    if (res_.frames < 2) throw InsufficientData("no data: a night needs at least two frames");
    rows_.clear();
    conditioner_->flush(rows_);
    take_rows();
    if (auto e = epocher_->flush()) {
      res_.last_epoch_partial = e->partial;
      process_epoch(*e);
    }
    if (detector_)
      if (auto ev = detector_->flush()) res_.events.push_back(*ev);
    if (!res_.noise_floor) {
      try {
        set_floor(outage::estimate_noise_floor(calibration_powers(), cfg_.floor_percentile), "estimated");
      } catch (const InsufficientData& e) {
        res_.warnings.push_back(std::string("noise floor unavailable, breath presence gating disabled: ") + e.what());
      }
    }
    emit_bpm(stream_.size() + base_);
    if (res_.epochs == 0 || res_.bpm.empty())
      res_.warnings.push_back("stream shorter than one BPM window; no breathing rate emitted");
    return std::move(res_);
  }

  /// Number of 20 Hz samples held for the sliding window (bounded).
  std::size_t buffered_samples() const { return stream_.size(); }
  std::size_t frames_seen() const { return res_.frames; }

 private:
  struct Sample {
    double t = 0;
    double breath = 0;  // band-passed breath projection
    std::size_t window = 0;  // index into res_.power_windows
  };

  void take_rows() {
    for (auto& r : rows_)
      if (auto e = epocher_->push(std::move(r))) process_epoch(*e);
    rows_.clear();
  }

  void process_epoch(const preprocess::DownsampledEpoch& d) {
    auto ep = subspace::pca_fit_project(subspace::Epoch::from(d), cfg_.pca_components, prev_ ? &*prev_ : nullptr);
    ++res_.epochs;
    const std::size_t n = ep.valid;
    const auto bc = static_cast<Eigen::Index>(sel_.breath_component);
    const std::size_t before = base_ + stream_.size();

    const auto power = subspace::projection_power(ep, sel_.breath_component, cfg_.power_window_samples);
    const std::size_t first_window = res_.power_windows.size();
    for (std::size_t q = 0; q < power.size(); ++q) {
      outage::PowerWindow w;
      w.start_s = ep.start_s + static_cast<double>(q * cfg_.power_window_samples) / rate_;
      w.end_s = ep.start_s + static_cast<double>(std::min(n, (q + 1) * cfg_.power_window_samples)) / rate_;
      w.power = power[q];
      res_.power_windows.push_back(w);
    }

    // Motion residuals are re-centred on each column's median: a burst drags the
    // epoch mean, and the still part of that epoch would otherwise sit offset.
    std::vector<double> centre;
    for (auto c : sel_.motion_components) {
      std::vector<double> col(n);
      for (std::size_t k = 0; k < n; ++k) col[k] = ep.projections(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
      centre.push_back(n ? outage::percentile(std::move(col), 50.0) : 0.0);
    }

    for (std::size_t k = 0; k < n; ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      Sample s;
      s.t = ep.start_s + static_cast<double>(k) / rate_;
      s.breath = bp_state_.step(ep.projections(row, bc));
      s.window = first_window + k / cfg_.power_window_samples;
      stream_.push_back(s);

      Eigen::VectorXd r(static_cast<Eigen::Index>(sel_.motion_components.size()));
      for (std::size_t j = 0; j < sel_.motion_components.size(); ++j)
        r(static_cast<Eigen::Index>(j)) =
            ep.projections(row, static_cast<Eigen::Index>(sel_.motion_components[j])) - centre[j];
      motion_sample(r, s.t);
    }

    if (!res_.noise_floor) {
      const auto windows = calibration_window_count();
      if (res_.power_windows.size() >= windows)
        set_floor(outage::estimate_noise_floor(calibration_powers(), cfg_.floor_percentile), "estimated");
    }
    // One epoch of look-ahead keeps the motion gating final for what we emit.
    emit_bpm(before);
    ep.data.resize(0, 0);
    prev_ = std::move(ep);
  }

  void motion_sample(const Eigen::VectorXd& r, double t) {
    if (!ellipsoid_) {
      init_buf_.push_back(r);
      init_t_.push_back(t);
      if (init_buf_.size() < cfg_.init_samples) return;
      ellipsoid_ = motion::ellipsoid_init(init_buf_, cfg_.ellipsoid);
      detector_.emplace(cfg_.e1_consecutive, cfg_.e2_merge_gap, 1.0 / rate_);
      for (double ti : init_t_) detector_->push(false, ti, 0.0);
      init_buf_.clear();
      init_t_.clear();
      return;
    }
    const auto u = motion::ellipsoid_update(*ellipsoid_, r);
    if (auto ev = detector_->push(u.outlier, t, u.mahalanobis)) res_.events.push_back(*ev);
  }

  std::size_t calibration_window_count() const {
    const double window_s = static_cast<double>(cfg_.power_window_samples) / rate_;
    return static_cast<std::size_t>(std::llround(cfg_.calibration_minutes * 60.0 / window_s));
  }

  std::vector<double> calibration_powers() const {
    std::vector<double> p;
    const std::size_t n = std::min(res_.power_windows.size(), calibration_window_count());
    for (std::size_t i = 0; i < n; ++i) p.push_back(res_.power_windows[i].power);
    return p;
  }

  void set_floor(double v, const char* source) {
    res_.noise_floor = v;
    res_.noise_floor_source = source;
  }

  bool in_motion(std::size_t global) const {
    for (auto it = res_.events.rbegin(); it != res_.events.rend(); ++it) {
      if (global >= it->first_sample && global <= it->last_sample) return true;
      if (it->last_sample < global) break;
    }
    if (detector_)
      for (const auto& [a, b] : detector_->provisional())
        if (global >= a && global <= b) return true;
    return false;
  }

  // Emits every hop point whose window ends before global sample `upto`.
  void emit_bpm(std::size_t upto) {
    const bool gating = res_.noise_floor.has_value();
    if (!gating && !finished_) return;
    std::vector<double> x(window_);
    std::vector<bool> present(window_), motion(window_);
    while (next_emit_ + 1 <= upto) {
      const std::size_t i = next_emit_;
      if (i + 1 > base_ + stream_.size()) break;
      next_emit_ += hop_;
      if (i + 1 < window_) continue;
      const std::size_t a = i + 1 - window_;
      for (std::size_t k = 0; k < window_; ++k) {
        const Sample& s = stream_[a + k - base_];
        x[k] = s.breath;
        present[k] = !gating || res_.power_windows[s.window].power > *res_.noise_floor * cfg_.presence_margin;
        motion[k] = in_motion(a + k);
      }
      auto b = breath::window_bpm(x, present, motion, cfg_.peaks, rate_);
      b.t_s = stream_[i - base_].t + 1.0 / rate_;
      res_.bpm.push_back(b);
    }
    // Keep only what the next window can still reach.
    const std::size_t keep_from = next_emit_ + 1 > window_ ? next_emit_ + 1 - window_ : 0;
    while (base_ < keep_from && !stream_.empty()) {
      stream_.pop_front();
      ++base_;
    }
  }

  Config cfg_;
  subspace::SubspaceSelection sel_;
  double rate_ = 20.0;
  std::size_t hop_ = 20, window_ = 1200;
  filters::SosFilter bandpass_;
  filters::SosState bp_state_;
  Dims dims_;
  std::optional<preprocess::Conditioner> conditioner_;
  std::optional<preprocess::Epocher> epocher_;
  std::vector<preprocess::Row> rows_;
  std::optional<subspace::Epoch> prev_;
  std::deque<Sample> stream_;
  std::size_t base_ = 0;       // global index of stream_.front()
  std::size_t next_emit_ = 0;  // next hop point (global sample index)
  std::vector<Eigen::VectorXd> init_buf_;
  std::vector<double> init_t_;
  std::optional<motion::EllipsoidState> ellipsoid_;
  std::optional<motion::EventDetector> detector_;
  NightResult res_;
  bool finished_ = false;
};

}  // namespace csivitals
