#pragma once

// Per-minute activity from motion events and Webster sleep/awake scoring.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <span>
#include <vector>

#include "csivitals/error.hpp"
#include "csivitals/motion.hpp"

namespace csivitals::sleep {

struct MinuteActivity {
  std::size_t minute_index = 0;
  double a = 0;
};

struct WebsterWeights {
  double rho = 0.125;
  std::array<double, 7> w{0.15, 0.15, 0.15, 0.08, 0.21, 0.12, 0.13};  // offsets -4 .. +2
};

enum class Stage { sleep, awake };

inline const char* to_string(Stage s) { return s == Stage::sleep ? "sleep" : "awake"; }

/// a_m = 10 * (seconds of minute m covered by events) / 60 over
/// [night_start, night_start + minutes * 60).
inline std::vector<MinuteActivity> activity_scores(std::span<const motion::MotionEvent> events, double night_start_s,
                                                   std::size_t minutes) {
  std::vector<MinuteActivity> out(minutes);
  for (std::size_t m = 0; m < minutes; ++m) out[m].minute_index = m;
  for (const auto& e : events) {
    for (std::size_t m = 0; m < minutes; ++m) {
      const double a = night_start_s + 60.0 * static_cast<double>(m), b = a + 60.0;
      const double cover = std::min(b, e.end_s) - std::max(a, e.start_s);
      if (cover > 0) out[m].a += cover;
    }
  }
  for (auto& m : out) m.a = 10.0 * std::min(m.a, 60.0) / 60.0;
  return out;
}

/// s_m = rho * sum_{i=-4..2} w_i a_{m+i}; missing neighbours count as 0.
inline std::vector<double> webster_scores(std::span<const MinuteActivity> a, const WebsterWeights& wts = {}) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
  std::vector<double> s(a.size(), 0.0);
  for (std::ptrdiff_t m = 0; m < n; ++m) {
    double acc = 0.0;
    for (std::ptrdiff_t off = -4; off <= 2; ++off) {
      const std::ptrdiff_t j = m + off;
      if (j >= 0 && j < n) acc += wts.w[static_cast<std::size_t>(off + 4)] * a[static_cast<std::size_t>(j)].a;
    }
    s[static_cast<std::size_t>(m)] = wts.rho * acc;
  }
  return s;
}

/// Sleep iff s_m <= 1.
inline std::vector<Stage> webster_classify(std::span<const MinuteActivity> a, const WebsterWeights& wts = {}) {
  if (a.empty()) throw InsufficientData("webster_classify needs at least one minute");
  std::vector<Stage> out;
  for (double s : webster_scores(a, wts)) out.push_back(s <= 1.0 ? Stage::sleep : Stage::awake);
  return out;
}

inline double sleep_efficiency(std::span<const Stage> stages) {
  if (stages.empty()) throw InsufficientData("sleep_efficiency needs at least one minute");
  const auto awake = std::count(stages.begin(), stages.end(), Stage::awake);
  return 1.0 - static_cast<double>(awake) / static_cast<double>(stages.size());
}

/// "62.1%" style, one decimal.
inline std::string format_percent(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * ratio);
  return buf;
}

}  // namespace csivitals::sleep
