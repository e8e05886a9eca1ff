#pragma once

// Raw CSI -> conditioned real matrix -> 30 s epochs of fixed length.
//
// Chain per channel: |H[k+1] - H[k]| -> centered median -> EMA -> Butterworth
// low-pass, run on the continuous stream, then cut into epochs anchored at the
// first frame and decimated (or zero padded) to epoch_samples rows.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "csivitals/error.hpp"
#include "csivitals/filters.hpp"
#include "csivitals/types.hpp"

namespace csivitals::preprocess {

/// out[k][c] = |csi_{k+1}[c] - csi_k[c]|, timestamped by the later frame.
inline RealChannelMatrix first_difference_amplitude(std::span<const CsiFrame> frames) {
  if (frames.size() < 2) throw InsufficientData("first_difference_amplitude needs at least 2 frames");
  const Dims dims = frames.front().dims;
  const std::size_t n = frames.size() - 1, c = dims.channels();
  RealChannelMatrix m;
  m.samples.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
  m.times.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& a = frames[k];
    const auto& b = frames[k + 1];
    if (!(b.dims == dims) || a.csi.size() != c || b.csi.size() != c)
      throw DimensionError("frame " + std::to_string(k + 1) + ": dimensions differ from the first frame", 0);
    for (std::size_t j = 0; j < c; ++j) m.samples(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = std::abs(b.csi[j] - a.csi[j]);
    m.times[k] = b.t;
  }
  const double span = m.times.back() - frames.front().t;
  m.sample_rate = span > 0 ? static_cast<double>(n) / span : 0.0;
  return m;
}

struct FilterConfig {
  std::size_t median_window = 5;
  double ema_alpha = 0.9;
  std::size_t butter_order = 4;
  double butter_cutoff = 0.0125;  // fraction of pi rad/sample

  void validate() const {
    if (median_window == 0 || median_window % 2 == 0) throw ParameterError("median_window must be odd and >= 1");
    filters::check_ema_alpha(ema_alpha);
    if (butter_order == 0) throw ParameterError("butter_order must be >= 1");
    if (!(butter_cutoff > 0 && butter_cutoff < 1)) throw ParameterError("butter_cutoff must lie in (0, 1)");
  }
};

/// Batch form of the conditioning chain applied column by column.
inline RealChannelMatrix condition(const RealChannelMatrix& in, const FilterConfig& cfg) {
  cfg.validate();
  RealChannelMatrix out = in;
  if (in.rows() == 0) return out;
  const auto lp = filters::butterworth_lowpass_design(cfg.butter_cutoff * std::numbers::pi, cfg.butter_order);
  std::vector<double> col(in.rows());
  for (Eigen::Index c = 0; c < in.samples.cols(); ++c) {
    for (Eigen::Index r = 0; r < in.samples.rows(); ++r) col[static_cast<std::size_t>(r)] = in.samples(r, c);
    auto y = filters::apply(lp, filters::ema_filter(filters::median_filter(col, cfg.median_window), cfg.ema_alpha));
    for (Eigen::Index r = 0; r < in.samples.rows(); ++r) out.samples(r, c) = y[static_cast<std::size_t>(r)];
  }
  return out;
}

/// One timestamped row of the conditioned stream.
struct Row {
  double t = 0.0;
  std::vector<double> values;
};

/// Streaming form of first_difference_amplitude + condition. Rows come out
/// median_window/2 frames late; flush() drains the tail with the same
/// shrinking-window rule the batch median uses.
class Conditioner {
 public:
  explicit Conditioner(const FilterConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    lp_ = filters::butterworth_lowpass_design(cfg_.butter_cutoff * std::numbers::pi, cfg_.butter_order);
    slots_ = cfg_.median_window;
    if (slots_ > 63) throw ParameterError("median_window too large for the streaming conditioner");
  }

  /// Feeds one frame; appends any rows that became final to `out`.
  void push(const CsiFrame& f, std::vector<Row>& out) {
    if (!have_prev_) {
      prev_ = f.csi;
      dims_ = f.dims;
      have_prev_ = true;
      ch_ = f.csi.size();
      ring_.assign(slots_ * ch_, 0.0);
      times_.assign(slots_, 0.0);
      ema_.assign(ch_, 0.0);
      z_.assign(ch_ * 2 * lp_.sections.size(), 0.0);
      return;
    }
    if (!(f.dims == dims_) || f.csi.size() != ch_) throw DimensionError("frame dimensions changed mid-stream", 0);
    double* slot = &ring_[(seen_ % slots_) * ch_];
    for (std::size_t j = 0; j < ch_; ++j) {
      const Complex d = f.csi[j] - prev_[j];
      slot[j] = std::sqrt(d.real() * d.real() + d.imag() * d.imag());
      prev_[j] = f.csi[j];
    }
    times_[seen_ % slots_] = f.t;
    ++seen_;
    drain(false, out);
  }

  void flush(std::vector<Row>& out) { drain(true, out); }

 private:
  static double median5(double a, double b, double c, double d, double e) {
    // branchless selection network
    const double f = std::max(std::min(a, b), std::min(c, d));
    const double g = std::min(std::max(a, b), std::max(c, d));
    return std::max(std::min(f, g), std::min(std::max(f, g), e));
  }

  double small_median(const std::size_t* off, std::size_t len, std::size_t c, double* b) const {
    for (std::size_t k = 0; k < len; ++k) {
      const double v = ring_[off[k] + c];
      std::size_t m = k;
      while (m > 0 && b[m - 1] > v) {
        b[m] = b[m - 1];
        --m;
      }
      b[m] = v;
    }
    return b[len / 2];
  }

  // Row k of the difference stream is final once row k + h has arrived.
  void drain(bool at_end, std::vector<Row>& out) {
    const std::size_t h = cfg_.median_window / 2;
    double buf[64];
    while (next_ < seen_ && (at_end || next_ + h < seen_)) {
      const std::size_t w = std::min({h, next_, (at_end ? seen_ - 1 - next_ : h)});
      const std::size_t len = 2 * w + 1;
      double* b = buf;
      std::size_t off[64];
      for (std::size_t k = 0; k < len; ++k) off[k] = ((next_ - w + k) % slots_) * ch_;
      Row r;
      r.t = times_[next_ % slots_];
      r.values.resize(ch_);
      const auto& secs = lp_.sections;
      for (std::size_t c = 0; c < ch_; ++c) {
        double y;
        if (len == 5) {
          y = median5(ring_[off[0] + c], ring_[off[1] + c], ring_[off[2] + c], ring_[off[3] + c], ring_[off[4] + c]);
        } else {
          y = small_median(off, len, c, b);
        }
        y = next_ == 0 ? y : cfg_.ema_alpha * ema_[c] + (1.0 - cfg_.ema_alpha) * y;
        ema_[c] = y;
        double* z = &z_[c * 2 * secs.size()];
        for (std::size_t i = 0; i < secs.size(); ++i, z += 2) {
          const auto& q = secs[i];
          const double o = q.b0 * y + z[0];
          z[0] = q.b1 * y - q.a1 * o + z[1];
          z[1] = q.b2 * y - q.a2 * o;
          y = o;
        }
        r.values[c] = y;
      }
      out.push_back(std::move(r));
      ++next_;
    }
  }

  FilterConfig cfg_;
  filters::SosFilter lp_;
  bool have_prev_ = false;
  Dims dims_;
  std::vector<Complex> prev_;
  std::size_t ch_ = 0, slots_ = 1;
  std::vector<double> ring_;   // slots_ rows of ch_ values, indexed by row % slots_
  std::vector<double> times_;
  std::size_t seen_ = 0;       // difference rows received
  std::size_t next_ = 0;       // next row to emit
  std::vector<double> ema_;
  std::vector<double> z_;      // low-pass delay lines, 2 per section per channel
};

/// Raw epoch: rows of the conditioned stream whose time falls in
/// [t0 + i * epoch_seconds, t0 + (i + 1) * epoch_seconds).
struct RawEpoch {
  std::size_t index = 0;
  double start_s = 0.0;
  std::vector<Row> rows;
  bool partial = false;
};

/// Epoch number of time t for a stream whose first raw frame was at t0.
inline std::size_t epoch_index(double t, double t0, double epoch_seconds) {
  return static_cast<std::size_t>(std::floor((t - t0) / epoch_seconds));
}

/// A final epoch counts as full when its last row reaches within 1.5 sample
/// periods of the boundary (rows are stamped by the later frame of each pair).
inline bool covers_epoch(const RawEpoch& e, double epoch_seconds, double rate_hz) {
  if (e.rows.empty()) return false;
  return e.rows.back().t - e.start_s >= epoch_seconds - 1.5 / rate_hz;
}

/// Splits a conditioned matrix into epochs. t0 is the time of the first raw
/// frame (the matrix starts one frame later).
inline std::vector<RawEpoch> epochize(const RealChannelMatrix& m, const StreamConfig& cfg, std::optional<double> t0 = {}) {
  cfg.validate();
  std::vector<RawEpoch> out;
  if (m.rows() == 0) return out;
  const double origin = t0.value_or(m.times.front() - (m.sample_rate > 0 ? 1.0 / m.sample_rate : 0.0));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const std::size_t idx = epoch_index(m.times[r], origin, cfg.epoch_seconds);
    if (out.empty() || out.back().index != idx) {
      RawEpoch e;
      e.index = idx;
      e.start_s = origin + static_cast<double>(idx) * cfg.epoch_seconds;
      out.push_back(std::move(e));
    }
    Row row;
    row.t = m.times[r];
    row.values.resize(m.channels());
    for (std::size_t c = 0; c < m.channels(); ++c) row.values[c] = m.samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    out.back().rows.push_back(std::move(row));
  }
  const double rate = m.sample_rate > 0 ? m.sample_rate : cfg.nominal_rate_hz;
  out.back().partial = !covers_epoch(out.back(), cfg.epoch_seconds, rate);
  return out;
}

/// Fixed-length epoch: `samples` rows, the first `valid` of which carry data.
struct DownsampledEpoch {
  std::size_t index = 0;
  double start_s = 0.0;
  Eigen::MatrixXd data;  // [epoch_samples][channels]
  std::size_t valid = 0;
  bool partial = false;
};

/// Full epochs: rows floor(i * n / target) when n >= target, tail zero-pad
/// otherwise. Partial epochs keep the full-epoch stride (rate * seconds /
/// target) so sample k still sits at k * seconds / target, then zero-pad.
inline DownsampledEpoch downsample_epoch(const RawEpoch& e, std::size_t target, double rate_hz = 0.0,
                                         double epoch_seconds = 30.0) {
  if (e.rows.empty()) throw InsufficientData("downsample_epoch needs a nonempty epoch");
  if (target == 0) throw ParameterError("target length must be positive");
  const std::size_t n = e.rows.size(), ch = e.rows.front().values.size();
  DownsampledEpoch d;
  d.index = e.index;
  d.start_s = e.start_s;
  d.partial = e.partial;
  d.data = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(target), static_cast<Eigen::Index>(ch));
  std::vector<std::size_t> pick;
  if (!e.partial) {
    if (n >= target) {
      for (std::size_t i = 0; i < target; ++i) pick.push_back(i * n / target);
    } else {
      for (std::size_t i = 0; i < n; ++i) pick.push_back(i);
    }
  } else {
    const double stride = rate_hz > 0 ? rate_hz * epoch_seconds / static_cast<double>(target) : 1.0;
    if (stride <= 1.0) {
      for (std::size_t i = 0; i < n && i < target; ++i) pick.push_back(i);
    } else {
      for (std::size_t i = 0; i < target; ++i) {
        const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(i) * stride));
        if (k >= n) break;
        pick.push_back(k);
      }
    }
  }
  for (std::size_t i = 0; i < pick.size(); ++i)
    for (std::size_t c = 0; c < ch; ++c) d.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = e.rows[pick[i]].values[c];
  d.valid = pick.size();
  return d;
}

/// Streaming epoch builder over conditioned rows.
class Epocher {
 public:
  Epocher(const StreamConfig& cfg, double t0) : cfg_(cfg), t0_(t0) { cfg_.validate(); }

  /// Adds a row; returns the previous epoch when this row opens a new one.
  std::optional<DownsampledEpoch> push(Row row) {
    std::optional<DownsampledEpoch> done;
    const std::size_t idx = epoch_index(row.t, t0_, cfg_.epoch_seconds);
    if (cur_ && cur_->index != idx) {
      done = finish(false);
    }
    if (!cur_) {
      cur_.emplace();
      cur_->index = idx;
      cur_->start_s = t0_ + static_cast<double>(idx) * cfg_.epoch_seconds;
    }
    if (first_t_ < 0) first_t_ = row.t;
    last_t_ = row.t;
    ++count_;
    cur_->rows.push_back(std::move(row));
    return done;
  }

  /// Emits the trailing epoch, flagged partial if it falls short.
  std::optional<DownsampledEpoch> flush() {
    if (!cur_) return std::nullopt;
    return finish(true);
  }

  /// Row rate measured over everything seen so far (nominal until 2 rows).
  double measured_rate() const {
    if (count_ < 2 || !(last_t_ > first_t_)) return cfg_.nominal_rate_hz;
    return static_cast<double>(count_ - 1) / (last_t_ - first_t_);
  }

 private:
  DownsampledEpoch finish(bool at_end) {
    const double rate = measured_rate();
    cur_->partial = at_end && !covers_epoch(*cur_, cfg_.epoch_seconds, rate);
    auto d = downsample_epoch(*cur_, cfg_.epoch_samples, rate, cfg_.epoch_seconds);
    cur_.reset();
    return d;
  }

  StreamConfig cfg_;
  double t0_;
  std::optional<RawEpoch> cur_;
  double first_t_ = -1.0, last_t_ = 0.0;
  std::size_t count_ = 0;
};

}  // namespace csivitals::preprocess
