#pragma once

// Accuracy metrics against ground truth: per-second BPM error, motion false
// positives and empirical CDF tables.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "csivitals/breath.hpp"
#include "csivitals/error.hpp"
#include "csivitals/motion.hpp"
#include "csivitals/types.hpp"

namespace csivitals::eval {

struct WindowError {
  double start_s = 0, end_s = 0;
  std::size_t samples = 0;
  double mse = 0;
};

struct BpmError {
  std::size_t samples = 0;
  double mse = 0;
  double rmse = 0;
  double median_abs = 0;
  std::vector<double> abs_errors;  // in prediction order
  std::vector<WindowError> windows;
};

/// Ground-truth BPM nearest to t within max_gap seconds, if that record is breathing.
inline std::optional<double> truth_bpm_near(std::span<const GroundTruthRecord> gt, double t, double max_gap = 1.0) {
  auto it = std::lower_bound(gt.begin(), gt.end(), t, [](const GroundTruthRecord& r, double v) { return r.t < v; });
  const GroundTruthRecord* best = nullptr;
  if (it != gt.end()) best = &*it;
  if (it != gt.begin()) {
    const auto& p = *std::prev(it);
    if (!best || t - p.t <= best->t - t) best = &p;
  }
  if (!best || std::fabs(best->t - t) > max_gap || !best->bpm) return std::nullopt;
  return best->bpm;
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw InsufficientData("median of an empty series");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// MSE over seconds where both sides report BPM; optional non-overlapping
/// windows of window_minutes anchored at the first prediction.
inline BpmError bpm_error(std::span<const breath::BpmSample> pred, std::span<const GroundTruthRecord> gt,
                          std::optional<double> window_minutes = std::nullopt) {
  BpmError e;
  std::vector<std::pair<double, double>> pairs;  // (t, squared error)
  double acc = 0.0;
  for (const auto& p : pred) {
    if (!p.bpm) continue;
    const auto truth = truth_bpm_near(gt, p.t_s);
    if (!truth) continue;
    const double d = *p.bpm - *truth;
    acc += d * d;
    e.abs_errors.push_back(std::fabs(d));
    pairs.emplace_back(p.t_s, d * d);
  }
  if (pairs.empty()) throw InsufficientData("bpm_error: no overlapping samples");
  e.samples = pairs.size();
  e.mse = acc / static_cast<double>(pairs.size());
  e.rmse = std::sqrt(e.mse);
  e.median_abs = median_of(e.abs_errors);
  if (window_minutes) {
    if (!(*window_minutes > 0)) throw ParameterError("bpm_error: window must be positive");
    const double w = *window_minutes * 60.0, origin = pred.front().t_s;
    for (const auto& [t, sq] : pairs) {
      const auto idx = static_cast<std::size_t>(std::floor((t - origin) / w));
      while (e.windows.size() <= idx) {
        const double a = origin + w * static_cast<double>(e.windows.size());
        e.windows.push_back({a, a + w, 0, 0.0});
      }
      e.windows[idx].samples += 1;
      e.windows[idx].mse += sq;
    }
    std::erase_if(e.windows, [](const WindowError& x) { return x.samples == 0; });
    for (auto& x : e.windows) x.mse /= static_cast<double>(x.samples);
  }
  return e;
}

struct FalsePositives {
  std::size_t count = 0;
  double minutes = 0;
};

/// An event is a false positive iff no ground-truth motion record (each
/// covering [t, t + 1)) overlaps [start_s, end_s).
inline FalsePositives motion_false_positives(std::span<const motion::MotionEvent> events,
                                             std::span<const GroundTruthRecord> gt) {
  FalsePositives fp;
  for (const auto& e : events) {
    bool hit = false;
    for (const auto& r : gt) {
      if (r.state == GroundTruthState::motion && r.t < e.end_s && r.t + 1.0 > e.start_s) {
        hit = true;
        break;
      }
    }
    if (!hit) {
      fp.count += 1;
      fp.minutes += e.duration_s() / 60.0;
    }
  }
  return fp;
}

struct CdfRow {
  double value = 0;
  double fraction = 0;
};

inline std::vector<CdfRow> cdf_table(std::vector<double> values) {
  if (values.empty()) throw InsufficientData("cdf_table needs at least one value");
  std::sort(values.begin(), values.end());
  std::vector<CdfRow> out;
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out.push_back({values[i], static_cast<double>(i + 1) / n});
  return out;
}

/// Smallest value whose cumulative fraction reaches q.
inline double cdf_quantile(std::span<const CdfRow> table, double q) {
  for (const auto& r : table)
    if (r.fraction >= q - 1e-12) return r.value;
  return table.back().value;
}

}  // namespace csivitals::eval
