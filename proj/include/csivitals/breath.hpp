#pragma once

// Breathing waveform extraction and per-second rate estimation: band-pass on
// the breath projection, presence gating from projection power, and peak
// counting over a sliding 60 s window.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "csivitals/error.hpp"
#include "csivitals/filters.hpp"
#include "csivitals/normalize.hpp"
#include "csivitals/types.hpp"

namespace csivitals::breath {

struct PeakParams {
  double min_prominence = 0.025;  // MINPRO, on the normalized [0, 1] scale
  double min_distance_s = 1.5;    // MINDIST
  double min_strength = 0.6;      // MINSTR, fraction of the median peak value

  void validate() const {
    if (!(min_prominence > 0 && min_prominence < 1)) throw ParameterError("minpro must lie in (0, 1)");
    if (!(min_distance_s > 0)) throw ParameterError("mindist_s must be positive");
    if (!(min_strength > 0)) throw ParameterError("minstr must be positive");
  }
};

struct BpmSample {
  double t_s = 0;
  std::optional<double> bpm;
  std::size_t peaks = 0;
  std::size_t usable_samples = 0;
};

/// Butterworth band-pass over [10, 40] breaths per minute.
inline filters::SosFilter breath_bandpass_design(double rate_hz = 20.0, std::size_t order = 2) {
  const double lo = kMinBreathBpm / 60.0, hi = kMaxBreathBpm / 60.0;
  if (!(rate_hz > 0) || rate_hz / 2.0 <= hi)
    throw ParameterError("sample rate too low for the breathing band (Nyquist must exceed 40/60 Hz)");
  return filters::butterworth_bandpass_design(2.0 * std::numbers::pi * lo / rate_hz, 2.0 * std::numbers::pi * hi / rate_hz,
                                              order);
}

inline std::vector<double> bandpass_breath(std::span<const double> x, double rate_hz = 20.0, std::size_t order = 2) {
  if (x.empty()) throw InsufficientData("bandpass_breath needs a nonempty series");
  return filters::apply(breath_bandpass_design(rate_hz, order), x);
}

/// Local maxima; a flat top counts once, at its left-middle sample.
inline std::vector<std::size_t> local_maxima(std::span<const double> x) {
  std::vector<std::size_t> out;
  const std::size_t n = x.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i - 1] < x[i]) {
      std::size_t j = i;
      while (j + 1 < n && x[j + 1] == x[i]) ++j;
      if (j + 1 < n && x[j + 1] < x[i]) {
        out.push_back((i + j) / 2);
        i = j + 1;
        continue;
      }
      i = j + 1;
      continue;
    }
    ++i;
  }
  return out;
}

/// Topographic prominence: height above the higher of the two lowest points
/// reached before meeting strictly higher ground on each side. The window
/// edge is not a col: a side that runs off the window sets no base, and when
/// both do the lower minimum is used. A crest cut by the edge still counts.
inline double prominence(std::span<const double> x, std::size_t p) {
  double left_min = x[p];
  bool left_open = true;
  for (std::size_t i = p; i-- > 0;) {
    if (x[i] > x[p]) {
      left_open = false;
      break;
    }
    left_min = std::min(left_min, x[i]);
  }
  double right_min = x[p];
  bool right_open = true;
  for (std::size_t i = p + 1; i < x.size(); ++i) {
    if (x[i] > x[p]) {
      right_open = false;
      break;
    }
    right_min = std::min(right_min, x[i]);
  }
  if (left_open && right_open) return x[p] - std::min(left_min, right_min);
  if (left_open) return x[p] - right_min;
  if (right_open) return x[p] - left_min;
  return x[p] - std::max(left_min, right_min);
}

/// Peaks filtered by prominence, then greedy distance suppression (taller
/// first), then strength against the median surviving peak value.
inline std::vector<std::size_t> detect_peaks(std::span<const double> x, const PeakParams& params, double rate_hz) {
  params.validate();
  std::vector<std::size_t> cand;
  for (std::size_t p : local_maxima(x))
    if (prominence(x, p) >= params.min_prominence) cand.push_back(p);

  const auto min_sep = static_cast<std::size_t>(std::ceil(params.min_distance_s * rate_hz - 1e-9));
  std::vector<std::size_t> order(cand.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[cand[a]] > x[cand[b]]; });
  std::vector<bool> keep(cand.size(), true);
  for (std::size_t oi : order) {
    if (!keep[oi]) continue;
    for (std::size_t j = oi; j-- > 0 && cand[oi] - cand[j] < min_sep;) keep[j] = false;
    for (std::size_t j = oi + 1; j < cand.size() && cand[j] - cand[oi] < min_sep; ++j) keep[j] = false;
  }
  std::vector<std::size_t> spaced;
  for (std::size_t i = 0; i < cand.size(); ++i)
    if (keep[i]) spaced.push_back(cand[i]);
  if (spaced.empty()) return spaced;

  std::vector<double> vals;
  for (std::size_t p : spaced) vals.push_back(x[p]);
  std::sort(vals.begin(), vals.end());
  const std::size_t m = vals.size();
  const double median = m % 2 ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
  std::vector<std::size_t> out;
  for (std::size_t p : spaced)
    if (x[p] >= params.min_strength * median) out.push_back(p);
  return out;
}

/// Present iff power > noise_floor * margin (strict).
inline std::vector<bool> breath_presence(std::span<const double> power, std::optional<double> noise_floor,
                                         double margin = 3.0) {
  if (!noise_floor) throw ParameterError("breath_presence: noise floor not established");
  std::vector<bool> out(power.size());
  for (std::size_t i = 0; i < power.size(); ++i) out[i] = power[i] > *noise_floor * margin;
  return out;
}

/// Rate over one window: motion samples are cut out, the rest is joined,
/// normalized and its peaks counted. No rate when fewer than half of the
/// samples are both present and motion-free.
inline BpmSample window_bpm(std::span<const double> x, const std::vector<bool>& present, const std::vector<bool>& motion,
                            const PeakParams& params, double rate_hz) {
  BpmSample s;
  std::vector<double> kept;
  kept.reserve(x.size());
  std::size_t usable = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (motion[i]) continue;
    kept.push_back(x[i]);
    if (present[i]) ++usable;
  }
  s.usable_samples = usable;
  if (2 * usable < x.size() || kept.empty()) return s;
  const auto norm = maxmin_normalize(kept);
  if (norm.degenerate) {
    s.bpm = 0.0;
    return s;
  }
  s.peaks = detect_peaks(norm.values, params, rate_hz).size();
  s.bpm = static_cast<double>(s.peaks);
  return s;
}

/// Batch sliding estimator over a band-passed breath stream sampled at
/// rate_hz. Every rate_hz samples, once a full window is available, the
/// trailing window (window_s seconds) yields one BpmSample stamped at
/// times[i] + 1 / rate_hz.
inline std::vector<BpmSample> sliding_bpm(std::span<const double> x, std::span<const double> times,
                                          const std::vector<bool>& present, const std::vector<bool>& motion,
                                          const PeakParams& params, double rate_hz = 20.0, double window_s = 60.0) {
  if (x.size() != times.size() || x.size() != present.size() || x.size() != motion.size())
    throw ParameterError("sliding_bpm: input series differ in length");
  const auto hop = static_cast<std::size_t>(std::llround(rate_hz));
  const auto win = static_cast<std::size_t>(std::llround(window_s * rate_hz));
  std::vector<BpmSample> out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if ((i + 1) % hop != 0 || i + 1 < win) continue;
    const std::size_t a = i + 1 - win;
    const std::vector<bool> pw(present.begin() + static_cast<std::ptrdiff_t>(a), present.begin() + static_cast<std::ptrdiff_t>(i + 1));
    const std::vector<bool> mw(motion.begin() + static_cast<std::ptrdiff_t>(a), motion.begin() + static_cast<std::ptrdiff_t>(i + 1));
    auto s = window_bpm(x.subspan(a, win), pw, mw, params, rate_hz);
    s.t_s = times[i] + 1.0 / rate_hz;
    out.push_back(s);
  }
  return out;
}

}  // namespace csivitals::breath
