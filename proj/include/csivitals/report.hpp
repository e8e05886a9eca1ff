#pragma once

// NightReport assembly and its JSON / CSV forms.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csivitals/config.hpp"
#include "csivitals/eval.hpp"
#include "csivitals/outage.hpp"
#include "csivitals/pipeline.hpp"
#include "csivitals/sleep.hpp"

namespace csivitals {

struct OutageSummary {
  std::optional<double> noise_floor;
  double lcr_per_hour = 0;
  outage::FadeStats fades;  // below-floor runs of the raw power series
  std::vector<outage::OutageInterval> intervals;
  std::optional<double> outage_rate_per_hour;
  std::optional<double> small_afd_min, large_afd_min;
};

struct Metrics {
  eval::BpmError bpm;
  bool has_bpm = false;
  eval::FalsePositives mfp;
};

struct NightReport {
  NightResult night;
  OutageSummary outage;
  std::vector<sleep::MinuteActivity> activity;
  std::vector<double> scores;
  std::vector<sleep::Stage> stages;
  double sleep_efficiency = 1.0;
  double sleep_length_h = 0;
  double motion_minutes = 0;
  std::optional<Metrics> metrics;
};

inline NightReport nightly_report(NightResult night, const Config& cfg,
                                  const std::optional<std::vector<GroundTruthRecord>>& gt = std::nullopt) {
  if (night.frames == 0) throw InsufficientData("no data");
  NightReport r;
  const double span_s = night.t_end - night.t_start;
  r.sleep_length_h = span_s / 3600.0;
  for (const auto& e : night.events) r.motion_minutes += e.duration_s() / 60.0;

  const auto minutes = static_cast<std::size_t>(std::max(1.0, std::ceil(span_s / 60.0 - 1e-9)));
  r.activity = sleep::activity_scores(night.events, night.t_start, minutes);
  r.scores = sleep::webster_scores(r.activity);
  r.stages = sleep::webster_classify(r.activity);
  r.sleep_efficiency = sleep::sleep_efficiency(r.stages);

  auto& o = r.outage;
  o.noise_floor = night.noise_floor;
  if (night.noise_floor && !night.power_windows.empty()) {
    std::vector<double> p;
    for (const auto& w : night.power_windows) p.push_back(w.power);
    const double window_s = static_cast<double>(cfg.power_window_samples) / cfg.stream.epoch_rate_hz();
    const double hours = span_s > 0 ? span_s / 3600.0 : 0.0;
    if (hours > 0) o.lcr_per_hour = outage::level_crossing_rate(p, *night.noise_floor, hours);
    o.fades = outage::average_fade_duration(p, *night.noise_floor, window_s, cfg.large_outage_minutes);
    if (gt) {
      o.intervals = outage::detect_outage(night.power_windows, *night.noise_floor, *gt, cfg.large_outage_minutes);
      if (hours > 0) o.outage_rate_per_hour = static_cast<double>(o.intervals.size()) / hours;
      std::vector<double> durs;
      for (const auto& iv : o.intervals) durs.push_back(iv.minutes());
      const auto fs = outage::fade_stats_from_durations(durs, cfg.large_outage_minutes);
      o.small_afd_min = fs.small_mean_min;
      o.large_afd_min = fs.large_mean_min;
    }
  }

  if (gt) {
    Metrics m;
    try {
      m.bpm = eval::bpm_error(night.bpm, *gt, cfg.bpm_error_window_minutes);
      m.has_bpm = true;
    } catch (const InsufficientData&) {
      night.warnings.push_back("no overlapping BPM samples with ground truth; bpm metrics omitted");
    }
    m.mfp = eval::motion_false_positives(night.events, *gt);
    r.metrics = m;
  }
  r.night = std::move(night);
  return r;
}

namespace detail {

inline nlohmann::ordered_json opt(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace detail

inline nlohmann::ordered_json report_json(const NightReport& r) {
  using J = nlohmann::ordered_json;
  using detail::opt;
  const auto& n = r.night;
  J j;
  j["frames"] = n.frames;
  j["t_start"] = n.t_start;
  j["t_end"] = n.t_end;
  j["epochs"] = n.epochs;
  j["last_epoch_partial"] = n.last_epoch_partial;
  j["noise_floor"] = opt(n.noise_floor);
  j["noise_floor_source"] = n.noise_floor_source;

  J bpm = J::array();
  for (const auto& b : n.bpm) bpm.push_back(J{{"t", b.t_s}, {"bpm", opt(b.bpm)}});
  j["bpm_series"] = bpm;

  J ev = J::array();
  for (const auto& e : n.events)
    ev.push_back(J{{"start_s", e.start_s},
                   {"end_s", e.end_s},
                   {"micro_event_count", e.micro_event_count},
                   {"peak_mahalanobis", e.peak_mahalanobis}});
  j["motion_events"] = ev;

  J out;
  out["noise_floor"] = opt(r.outage.noise_floor);
  out["lcr_per_hour"] = r.outage.lcr_per_hour;
  out["fade_small_afd_min"] = opt(r.outage.fades.small_mean_min);
  out["fade_large_afd_min"] = opt(r.outage.fades.large_mean_min);
  out["fade_count"] = r.outage.fades.durations_min.size();
  out["outage_rate_per_hour"] = opt(r.outage.outage_rate_per_hour);
  out["small_afd_min"] = opt(r.outage.small_afd_min);
  out["large_afd_min"] = opt(r.outage.large_afd_min);
  J iv = J::array();
  for (const auto& o : r.outage.intervals)
    iv.push_back(J{{"start_s", o.start_s}, {"end_s", o.end_s}, {"scale", outage::to_string(o.scale)}});
  out["outage_intervals"] = iv;
  j["outage"] = out;

  J minutes = J::array();
  for (std::size_t m = 0; m < r.activity.size(); ++m)
    minutes.push_back(J{{"minute", m}, {"a", r.activity[m].a}, {"s", r.scores[m]}, {"stage", sleep::to_string(r.stages[m])}});
  j["minutes"] = minutes;
  j["sleep_efficiency"] = r.sleep_efficiency;
  j["sleep_efficiency_pct"] = sleep::format_percent(r.sleep_efficiency);
  j["sleep_length_h"] = r.sleep_length_h;
  j["motion_minutes"] = r.motion_minutes;

  if (r.metrics) {
    const auto& m = *r.metrics;
    J mj;
    if (m.has_bpm) {
      mj["bpm_samples"] = m.bpm.samples;
      mj["mse_bpm"] = m.bpm.mse;
      mj["rmse_bpm"] = m.bpm.rmse;
      mj["median_abs_error_bpm"] = m.bpm.median_abs;
      J w = J::array();
      for (const auto& x : m.bpm.windows)
        w.push_back(J{{"start_s", x.start_s}, {"end_s", x.end_s}, {"samples", x.samples}, {"mse", x.mse}});
      mj["windowed_mse"] = w;
      J cdf = J::array();
      for (const auto& row : eval::cdf_table(m.bpm.abs_errors)) cdf.push_back(J{row.value, row.fraction});
      mj["abs_error_cdf"] = cdf;
    } else {
      mj["bpm_samples"] = 0;
      mj["mse_bpm"] = nullptr;
      mj["rmse_bpm"] = nullptr;
      mj["median_abs_error_bpm"] = nullptr;
      mj["windowed_mse"] = J::array();
      mj["abs_error_cdf"] = J::array();
    }
    mj["mfp_count"] = m.mfp.count;
    mj["mfp_minutes"] = m.mfp.minutes;
    j["metrics"] = mj;
  } else {
    j["metrics"] = nullptr;
  }
  j["warnings"] = n.warnings;
  return j;
}

inline std::string report_string(const NightReport& r) { return report_json(r).dump(2) + "\n"; }

/// Per-minute CSV (minute,a,s_m,stage) from a serialized report.
inline std::string minutes_csv(const nlohmann::ordered_json& report) {
  std::ostringstream os;
  os << "minute,a,s_m,stage\n";
  os.precision(17);
  for (const auto& m : report.at("minutes"))
    os << m.at("minute").get<std::size_t>() << ',' << m.at("a").get<double>() << ',' << m.at("s").get<double>() << ','
       << m.at("stage").get<std::string>() << '\n';
  return os.str();
}

}  // namespace csivitals
