#pragma once

// One flat configuration document for every tunable. Precedence, lowest
// first: built-in defaults, JSON config file, CSIVITALS_* environment
// variables, explicit key=value overrides.

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csivitals/breath.hpp"
#include "csivitals/error.hpp"
#include "csivitals/motion.hpp"
#include "csivitals/preprocess.hpp"
#include "csivitals/subspace.hpp"
#include "csivitals/types.hpp"

namespace csivitals {

struct Config {
  StreamConfig stream;
  preprocess::FilterConfig filter;

  std::size_t pca_components = 5;
  std::size_t breath_component = 1;                  // 1-based
  std::vector<std::size_t> motion_components{3, 4, 5};  // 1-based

  std::size_t e1_consecutive = 5;
  std::size_t e2_merge_gap = 100;
  std::size_t init_samples = 200;
  motion::EllipsoidConfig ellipsoid;

  breath::PeakParams peaks;
  std::size_t window_epochs = 2;
  double presence_margin = 3.0;
  std::size_t bandpass_order = 2;
  std::size_t power_window_samples = 150;

  double calibration_minutes = 10.0;
  double floor_percentile = 10.0;
  double large_outage_minutes = 5.0;
  std::optional<double> noise_floor;  // fixed floor; estimated when unset
  std::string noise_floor_origin = "config";  // reported source of a fixed floor; not serialized

  double bpm_error_window_minutes = 15.0;

  subspace::SubspaceSelection selection() const {
    subspace::SubspaceSelection s;
    s.breath_component = breath_component - 1;
    s.motion_components.clear();
    for (auto c : motion_components) s.motion_components.push_back(c - 1);
    return s;
  }

  void validate() const {
    stream.validate();
    filter.validate();
    ellipsoid.validate();
    peaks.validate();
    if (pca_components < 5) throw ParameterError("pca_components must be >= 5");
    if (breath_component < 1 || breath_component > pca_components)
      throw ParameterError("breath_component must lie in [1, pca_components]");
    if (motion_components.empty()) throw ParameterError("motion_components must not be empty");
    for (auto c : motion_components)
      if (c < 1 || c > pca_components) throw ParameterError("motion_components must lie in [1, pca_components]");
    if (e1_consecutive < 1) throw ParameterError("e1_consecutive must be >= 1");
    if (init_samples <= motion_components.size()) throw ParameterError("init_samples must exceed the motion dimension");
    if (window_epochs < 1) throw ParameterError("window_epochs must be >= 1");
    if (!(presence_margin > 0)) throw ParameterError("presence_margin must be positive");
    if (bandpass_order < 1) throw ParameterError("bandpass_order must be >= 1");
    if (power_window_samples < 1 || power_window_samples > stream.epoch_samples)
      throw ParameterError("power_window_samples must lie in [1, epoch_samples]");
    if (!(calibration_minutes > 0)) throw ParameterError("calibration_minutes must be positive");
    if (!(floor_percentile >= 0 && floor_percentile <= 100)) throw ParameterError("floor_percentile must lie in [0, 100]");
    if (!(large_outage_minutes > 0)) throw ParameterError("large_outage_minutes must be positive");
    if (noise_floor && !(*noise_floor >= 0)) throw ParameterError("noise_floor must be >= 0");
    if (!(bpm_error_window_minutes > 0)) throw ParameterError("bpm_error_window_minutes must be positive");
  }
};

inline nlohmann::json to_json(const Config& c) {
  nlohmann::json j;
  j["nominal_rate_hz"] = c.stream.nominal_rate_hz;
  j["epoch_seconds"] = c.stream.epoch_seconds;
  j["epoch_samples"] = c.stream.epoch_samples;
  j["median_window"] = c.filter.median_window;
  j["ema_alpha"] = c.filter.ema_alpha;
  j["butter_order"] = c.filter.butter_order;
  j["butter_cutoff"] = c.filter.butter_cutoff;
  j["pca_components"] = c.pca_components;
  j["breath_component"] = c.breath_component;
  j["motion_components"] = c.motion_components;
  j["e1_consecutive"] = c.e1_consecutive;
  j["e2_merge_gap"] = c.e2_merge_gap;
  j["init_samples"] = c.init_samples;
  j["coverage"] = c.ellipsoid.coverage;
  j["alpha"] = c.ellipsoid.alpha;
  j["cov_alpha"] = c.ellipsoid.cov_alpha;
  j["cov_k_cap"] = c.ellipsoid.k_cap;
  j["ridge_epsilon"] = c.ellipsoid.ridge_epsilon;
  j["freeze_on_outlier"] = c.ellipsoid.freeze_on_outlier;
  j["clip_multiple"] = c.ellipsoid.clip_multiple;
  j["minpro"] = c.peaks.min_prominence;
  j["mindist_s"] = c.peaks.min_distance_s;
  j["minstr"] = c.peaks.min_strength;
  j["window_epochs"] = c.window_epochs;
  j["presence_margin"] = c.presence_margin;
  j["bandpass_order"] = c.bandpass_order;
  j["power_window_samples"] = c.power_window_samples;
  j["calibration_minutes"] = c.calibration_minutes;
  j["floor_percentile"] = c.floor_percentile;
  j["large_outage_minutes"] = c.large_outage_minutes;
  j["noise_floor"] = c.noise_floor ? nlohmann::json(*c.noise_floor) : nlohmann::json(nullptr);
  j["bpm_error_window_minutes"] = c.bpm_error_window_minutes;
  return j;
}

namespace detail {

template <class T>
void take(const nlohmann::json& j, const char* key, T& dst) {
  if (auto it = j.find(key); it != j.end()) dst = it->get<T>();
}

}  // namespace detail

/// Applies the keys present in `j` on top of `c`; unknown keys are rejected.
inline void apply_json(Config& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ParameterError("config: document must be a JSON object");
  const auto known = to_json(Config{});
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ParameterError("config: unknown key \"" + key + "\"");
  try {
    using detail::take;
    take(j, "nominal_rate_hz", c.stream.nominal_rate_hz);
    take(j, "epoch_seconds", c.stream.epoch_seconds);
    take(j, "epoch_samples", c.stream.epoch_samples);
    take(j, "median_window", c.filter.median_window);
    take(j, "ema_alpha", c.filter.ema_alpha);
    take(j, "butter_order", c.filter.butter_order);
    take(j, "butter_cutoff", c.filter.butter_cutoff);
    take(j, "pca_components", c.pca_components);
    take(j, "breath_component", c.breath_component);
    take(j, "motion_components", c.motion_components);
    take(j, "e1_consecutive", c.e1_consecutive);
    take(j, "e2_merge_gap", c.e2_merge_gap);
    take(j, "init_samples", c.init_samples);
    take(j, "coverage", c.ellipsoid.coverage);
    take(j, "alpha", c.ellipsoid.alpha);
    take(j, "cov_alpha", c.ellipsoid.cov_alpha);
    take(j, "cov_k_cap", c.ellipsoid.k_cap);
    take(j, "ridge_epsilon", c.ellipsoid.ridge_epsilon);
    take(j, "freeze_on_outlier", c.ellipsoid.freeze_on_outlier);
    take(j, "clip_multiple", c.ellipsoid.clip_multiple);
    take(j, "minpro", c.peaks.min_prominence);
    take(j, "mindist_s", c.peaks.min_distance_s);
    take(j, "minstr", c.peaks.min_strength);
    take(j, "window_epochs", c.window_epochs);
    take(j, "presence_margin", c.presence_margin);
    take(j, "bandpass_order", c.bandpass_order);
    take(j, "power_window_samples", c.power_window_samples);
    take(j, "calibration_minutes", c.calibration_minutes);
    take(j, "floor_percentile", c.floor_percentile);
    take(j, "large_outage_minutes", c.large_outage_minutes);
    take(j, "bpm_error_window_minutes", c.bpm_error_window_minutes);
    if (auto it = j.find("noise_floor"); it != j.end())
      c.noise_floor = it->is_null() ? std::nullopt : std::optional<double>(it->get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
}

/// key=value where value is JSON ("0.5", "[3,4,5]", "null", "true"); bare
/// words fall back to strings so type errors name the key.
inline void apply_override(Config& c, const std::string& key, const std::string& value) {
  nlohmann::json v;
  try {
    v = nlohmann::json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    v = value;
  }
  try {
    apply_json(c, nlohmann::json{{key, v}});
  } catch (const ParameterError& e) {
    throw ParameterError(std::string(e.what()) + " (while setting " + key + ")");
  }
}

inline Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError("config " + path + ": " + e.what());
  }
  Config c;
  apply_json(c, j);
  return c;
}

/// CSIVITALS_<KEY in upper case>, e.g. CSIVITALS_EMA_ALPHA=0.8.
inline void apply_environment(Config& c, char** envp = nullptr) {
  const auto keys = to_json(Config{});
  for (const auto& [key, _] : keys.items()) {
    std::string name = "CSIVITALS_";
    for (char ch : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    const char* v = nullptr;
    if (envp) {
      for (char** e = envp; *e; ++e) {
        std::string_view s(*e);
        if (s.size() > name.size() && s.substr(0, name.size()) == name && s[name.size()] == '=') v = *e + name.size() + 1;
      }
    } else {
      v = std::getenv(name.c_str());
    }
    if (v) apply_override(c, key, v);
  }
}

/// Defaults < file < environment < overrides.
inline Config resolve_config(const std::optional<std::string>& file, const std::vector<std::string>& overrides,
                             bool use_environment = true) {
  Config c = file ? load_config_file(*file) : Config{};
  if (use_environment) apply_environment(c);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ParameterError("override must look like key=value: " + kv);
    apply_override(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  c.validate();
  return c;
}

}  // namespace csivitals
