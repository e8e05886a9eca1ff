#pragma once

// Noise floor, outage intervals and fade statistics on the 7.5 s power grid.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "csivitals/error.hpp"
#include "csivitals/types.hpp"

namespace csivitals::outage {

enum class OutageScale { small, large };

inline const char* to_string(OutageScale s) { return s == OutageScale::large ? "large" : "small"; }

struct OutageInterval {
  double start_s = 0, end_s = 0;
  OutageScale scale = OutageScale::small;

  double minutes() const { return (end_s - start_s) / 60.0; }
};

/// Percentile by linear interpolation between order statistics (q in [0, 100]).
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw InsufficientData("percentile of an empty series");
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Floor = `pct`-th percentile of the per-window power; needs >= min_windows.
inline double estimate_noise_floor(std::span<const double> window_power, double pct = 10.0, std::size_t min_windows = 40) {
  if (window_power.size() < min_windows)
    throw InsufficientData("noise floor needs at least " + std::to_string(min_windows) + " windows (" +
                           std::to_string(window_power.size()) + " given)");
  return percentile(std::vector<double>(window_power.begin(), window_power.end()), pct);
}

/// One 7.5 s window on the stream clock.
struct PowerWindow {
  double start_s = 0, end_s = 0;
  double power = 0;
};

/// Ground-truth state at time t: the latest record at or before t, if any.
class TruthLookup {
 public:
  explicit TruthLookup(std::span<const GroundTruthRecord> gt) : gt_(gt) {}

  std::optional<GroundTruthState> at(double t) const {
    auto it = std::upper_bound(gt_.begin(), gt_.end(), t, [](double v, const GroundTruthRecord& r) { return v < r.t; });
    if (it == gt_.begin()) return std::nullopt;
    return std::prev(it)->state;
  }

  /// True when every record covering [a, b) says breathing.
  bool breathing_throughout(double a, double b) const {
    auto s = at(a);
    if (!s || *s != GroundTruthState::breathing) return false;
    auto it = std::upper_bound(gt_.begin(), gt_.end(), a, [](double v, const GroundTruthRecord& r) { return v < r.t; });
    for (; it != gt_.end() && it->t < b; ++it)
      if (it->state != GroundTruthState::breathing) return false;
    return true;
  }

 private:
  std::span<const GroundTruthRecord> gt_;
};

/// A window is in outage iff power <= floor and ground truth shows breathing
/// for the whole window. Touching outage windows coalesce; intervals longer
/// than large_minutes are large.
inline std::vector<OutageInterval> detect_outage(std::span<const PowerWindow> windows, double noise_floor,
                                                 std::span<const GroundTruthRecord> gt, double large_minutes = 5.0) {
  TruthLookup truth(gt);
  std::vector<OutageInterval> out;
  for (const auto& w : windows) {
    const bool outage = w.power <= noise_floor && truth.breathing_throughout(w.start_s, w.end_s);
    if (!outage) continue;
    if (!out.empty() && std::fabs(out.back().end_s - w.start_s) < 1e-6)
      out.back().end_s = w.end_s;
    else
      out.push_back({w.start_s, w.end_s, OutageScale::small});
  }
  for (auto& o : out) o.scale = o.minutes() > large_minutes ? OutageScale::large : OutageScale::small;
  return out;
}

/// Downward crossings (x[i-1] > thr, x[i] <= thr) per hour.
inline double level_crossing_rate(std::span<const double> x, double threshold, double span_hours) {
  if (!(span_hours > 0)) throw ParameterError("level_crossing_rate: span must be positive");
  std::size_t n = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (x[i - 1] > threshold && x[i] <= threshold) ++n;
  return static_cast<double>(n) / span_hours;
}

struct FadeStats {
  std::optional<double> small_mean_min;
  std::optional<double> large_mean_min;
  std::vector<double> durations_min;
};

inline FadeStats fade_stats_from_durations(std::vector<double> durations_min, double large_minutes = 5.0) {
  FadeStats f;
  double ss = 0, sl = 0;
  std::size_t ns = 0, nl = 0;
  for (double d : durations_min) {
    if (d > large_minutes) {
      sl += d;
      ++nl;
    } else {
      ss += d;
      ++ns;
    }
  }
  if (ns) f.small_mean_min = ss / static_cast<double>(ns);
  if (nl) f.large_mean_min = sl / static_cast<double>(nl);
  f.durations_min = std::move(durations_min);
  return f;
}

/// Runs of samples <= threshold on a grid of window_s seconds, in minutes,
/// split at large_minutes (a run longer than that is large).
inline FadeStats average_fade_duration(std::span<const double> x, double threshold, double window_s = 7.5,
                                       double large_minutes = 5.0) {
  std::vector<double> runs;
  std::size_t len = 0;
  for (double v : x) {
    if (v <= threshold) {
      ++len;
    } else if (len) {
      runs.push_back(static_cast<double>(len) * window_s / 60.0);
      len = 0;
    }
  }
  if (len) runs.push_back(static_cast<double>(len) * window_s / 60.0);
  return fade_stats_from_durations(std::move(runs), large_minutes);
}

}  // namespace csivitals::outage
