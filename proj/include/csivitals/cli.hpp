#pragma once

// Command-line front end: synth, replay, ingest, report.
// Exit codes: 0 ok, 1 runtime error, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csivitals/config.hpp"
#include "csivitals/outage.hpp"
#include "csivitals/pipeline.hpp"
#include "csivitals/report.hpp"
#include "csivitals/synth.hpp"
#include "csivitals/trace_io.hpp"
#include "csivitals/wire.hpp"

namespace csivitals::cli {

inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kUsageError = 2;

/// Input that does not exist or cannot be parsed as the documented schema.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(std::string("cannot open ") + what + ": " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline synth::MultipathScene load_scene(const std::string& path) {
  const std::string text = read_file(path, "scene file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("scene file " + path + ": " + e.what());
  }
  try {
    return synth::scene_from_json(j);
  } catch (const ParameterError& e) {
    throw UsageError("scene file " + path + ": " + e.what());
  }
}

/// Streams the generator straight to disk.
inline void write_synthetic(const synth::MultipathScene& scene, double duration_s, double rate_hz, std::uint64_t seed,
                            std::ostream& trace, std::ostream* labels) {
  synth::CfrGenerator gen(scene, duration_s, rate_hz, seed);
  while (auto f = gen.next()) trace << encode_frame(*f) << '\n';
  if (labels)
    for (const auto& r : synth::ground_truth(scene, duration_s)) *labels << encode_ground_truth(r) << '\n';
}

/// Feeds a trace stream through a NightProcessor. Reader errors are
/// re-thrown with the 0-based frame index prepended.
inline NightResult process_trace(std::istream& in, const Config& cfg) {
  TraceReader reader(in);
  NightProcessor proc(cfg);
  for (;;) {
    std::optional<CsiFrame> f;
    try {
      f = reader.next();
    } catch (const ParseError& e) {
      throw Error("frame " + std::to_string(reader.frames_read()) + ": " + e.what());
    }
    if (!f) break;
    proc.push(*f);
  }
  return proc.finish();
}

inline NightResult process_trace_file(const std::string& path, const Config& cfg) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open trace file: " + path);
  return process_trace(in, cfg);
}

/// Noise floor from an empty-room recording processed with the same settings.
inline double calibrate_noise_floor(const NightResult& empty_room, const Config& cfg) {
  std::vector<double> p;
  const double window_s = static_cast<double>(cfg.power_window_samples) / cfg.stream.epoch_rate_hz();
  const auto limit = static_cast<std::size_t>(std::llround(cfg.calibration_minutes * 60.0 / window_s));
  for (std::size_t i = 0; i < empty_room.power_windows.size() && i < limit; ++i) p.push_back(empty_room.power_windows[i].power);
  return outage::estimate_noise_floor(p, cfg.floor_percentile);
}

inline Config with_calibration(Config cfg, const std::optional<std::string>& calibration_trace) {
  if (!calibration_trace) return cfg;
  Config probe = cfg;
  probe.noise_floor = 0.0;  // skip estimation on the calibration run itself
  cfg.noise_floor = calibrate_noise_floor(process_trace_file(*calibration_trace, probe), cfg);
  cfg.noise_floor_origin = "calibration";
  return cfg;
}

inline std::string replay_report(const std::string& trace_path, const std::optional<std::string>& gt_path,
                                 const Config& cfg) {
  std::optional<std::vector<GroundTruthRecord>> gt;
  if (gt_path) {
    std::ifstream in(*gt_path);
    if (!in) throw UsageError("cannot open ground-truth file: " + *gt_path);
    gt = read_ground_truth(in);
  }
  NightResult night = process_trace_file(trace_path, cfg);
  return report_string(nightly_report(std::move(night), cfg, gt));
}

struct Streams {
  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
};

inline int run(int argc, const char* const* argv, Streams io = {}) {
  CLI::App app{"Breathing and motion tracking from WiFi CSI traces"};
  app.require_subcommand(1);

  std::string config_path, calibration;
  std::vector<std::string> sets;
  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", config_path, "JSON configuration file");
    c->add_option("--set", sets, "Override one setting, key=value (repeatable)");
    c->add_option("--calibration", calibration, "Empty-room trace used to fix the noise floor");
  };

  std::string scene_path, out_path, labels_path;
  double duration = 0, rate = 800.0;
  std::uint64_t seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic trace and its ground truth");
  synth_cmd->add_option("--scene", scene_path, "Scene description (JSON)")->required();
  synth_cmd->add_option("--duration", duration, "Seconds to generate")->required();
  synth_cmd->add_option("--seed", seed, "Noise seed");
  synth_cmd->add_option("--rate", rate, "Frame rate in Hz");
  synth_cmd->add_option("--out", out_path, "Trace output (JSONL)")->required();
  synth_cmd->add_option("--labels", labels_path, "Ground-truth output (JSONL)");

  std::string trace_path, gt_path, report_out;
  auto* replay_cmd = app.add_subcommand("replay", "Process a recorded trace into a night report");
  replay_cmd->add_option("--trace", trace_path, "Trace (JSONL)")->required();
  replay_cmd->add_option("--gt", gt_path, "Ground truth (JSONL)");
  replay_cmd->add_option("--out", report_out, "Report output (JSON); stdout when omitted");
  add_config(replay_cmd);

  std::string listen, out_dir;
  std::size_t sessions = 0;
  auto* ingest_cmd = app.add_subcommand("ingest", "Serve framed-TCP CSI ingestion");
  ingest_cmd->add_option("--listen", listen, "HOST:PORT")->required();
  ingest_cmd->add_option("--out-dir", out_dir, "Directory for session reports")->required();
  ingest_cmd->add_option("--sessions", sessions, "Exit after this many sessions (0 = run forever)");
  add_config(ingest_cmd);

  std::string night_path, format = "json";
  auto* report_cmd = app.add_subcommand("report", "Render a saved night report");
  report_cmd->add_option("--night", night_path, "Report produced by replay or ingest")->required();
  report_cmd->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int rc = app.exit(e, o, er);
    io.out << o.str();
    io.err << er.str();
    return rc == 0 ? kOk : kUsageError;
  }

  auto resolve = [&] {
    try {
      return resolve_config(config_path.empty() ? std::nullopt : std::optional<std::string>(config_path), sets);
    } catch (const ParameterError& e) {
      throw UsageError(e.what());
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  };
  auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); };

  try {
    if (*synth_cmd) {
      const auto scene = load_scene(scene_path);
      if (!(duration > 0)) throw UsageError("--duration must be positive");
      if (!(rate > 0)) throw UsageError("--rate must be positive");
      std::ofstream trace(out_path, std::ios::binary);
      if (!trace) throw Error("cannot write trace: " + out_path);
      std::optional<std::ofstream> labels;
      if (!labels_path.empty()) {
        labels.emplace(labels_path, std::ios::binary);
        if (!*labels) throw Error("cannot write labels: " + labels_path);
      }
      write_synthetic(scene, duration, rate, seed, trace, labels ? &*labels : nullptr);
      return kOk;
    }
    if (*replay_cmd) {
      const Config cfg = with_calibration(resolve(), opt(calibration));
      const std::string text = replay_report(trace_path, opt(gt_path), cfg);
      if (report_out.empty()) {
        io.out << text;
      } else {
        std::ofstream o(report_out, std::ios::binary);
        if (!o) throw Error("cannot write report: " + report_out);
        o << text;
      }
      return kOk;
    }
    if (*ingest_cmd) {
      const auto [host, port] = [&] {
        try {
          return wire::parse_endpoint(listen);
        } catch (const ParameterError& e) {
          throw UsageError(e.what());
        }
      }();
      const Config cfg = with_calibration(resolve(), opt(calibration));
      wire::IngestServer server(cfg, out_dir);
      const auto bound = server.bind(host, port);
      io.err << "listening on " << (host.empty() ? "0.0.0.0" : host) << ':' << bound << std::endl;
      server.serve(sessions);
      return kOk;
    }
    if (*report_cmd) {
      const std::string text = read_file(night_path, "report");
      nlohmann::ordered_json j;
      try {
        j = nlohmann::ordered_json::parse(text);
        if (format == "csv")
          io.out << minutes_csv(j);
        else
          io.out << j.dump(2) << '\n';
      } catch (const nlohmann::json::exception& e) {
        throw UsageError("report " + night_path + ": " + e.what());
      }
      return kOk;
    }
  } catch (const UsageError& e) {
    io.err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace csivitals::cli
