#pragma once

// JSONL encodings for CSI traces and ground-truth labels.
//
//   trace line:  {"t": <seconds>, "csi": [[[[re, im] x n_sub] x n_rx] x n_tx]}
//   label line:  {"t": <seconds>, "state": "breathing"|"motion"|"absent", "bpm": <optional>}
//
// Doubles are printed with the shortest representation that round-trips,
// so write -> read -> write is byte-identical.

#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csivitals/error.hpp"
#include "csivitals/types.hpp"

namespace csivitals {

namespace detail {

inline nlohmann::json parse_json_line(const std::string& line, std::size_t line_no) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
  }
}

inline double number_field(const nlohmann::json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field \"") + key + "\"", line_no);
  if (!it->is_number()) throw ParseError(std::string("field \"") + key + "\" is not a number", line_no);
  return it->get<double>();
}

inline bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace detail

/// Decodes one trace line. Dimension checks are local to the line (ragged tensor).
inline CsiFrame decode_frame(const std::string& line, std::size_t line_no = 0) {
  const auto j = detail::parse_json_line(line, line_no);
  if (!j.is_object()) throw ParseError("trace line is not a JSON object", line_no);
  CsiFrame f;
  f.t = detail::number_field(j, "t", line_no);
  if (!std::isfinite(f.t)) throw ValidationError("non-finite timestamp", line_no);
  auto it = j.find("csi");
  if (it == j.end() || !it->is_array() || it->empty())
    throw ParseError("missing or empty \"csi\" array", line_no);
  const auto& tx = *it;
  f.dims.tx = tx.size();
  for (std::size_t a = 0; a < tx.size(); ++a) {
    if (!tx[a].is_array() || tx[a].empty()) throw DimensionError("csi[tx] must be a non-empty array", line_no);
    if (a == 0) f.dims.rx = tx[a].size();
    if (tx[a].size() != f.dims.rx) throw DimensionError("ragged csi tensor (rx count differs)", line_no);
    for (std::size_t b = 0; b < tx[a].size(); ++b) {
      const auto& subs = tx[a][b];
      if (!subs.is_array() || subs.empty()) throw DimensionError("csi[tx][rx] must be a non-empty array", line_no);
      if (a == 0 && b == 0) {
        f.dims.sub = subs.size();
        f.csi.reserve(f.dims.channels());
      }
      if (subs.size() != f.dims.sub) throw DimensionError("ragged csi tensor (subcarrier count differs)", line_no);
      for (const auto& c : subs) {
        if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
          throw ParseError("csi entry must be [re, im]", line_no);
        const double re = c[0].get<double>(), im = c[1].get<double>();
        if (!std::isfinite(re) || !std::isfinite(im)) throw ValidationError("non-finite csi entry", line_no);
        f.csi.emplace_back(re, im);
      }
    }
  }
  return f;
}

inline std::string encode_frame(const CsiFrame& f) {
  nlohmann::json tx = nlohmann::json::array();
  for (std::size_t a = 0; a < f.dims.tx; ++a) {
    nlohmann::json rx = nlohmann::json::array();
    for (std::size_t b = 0; b < f.dims.rx; ++b) {
      nlohmann::json subs = nlohmann::json::array();
      for (std::size_t s = 0; s < f.dims.sub; ++s) {
        const auto& v = f.at(a, b, s);
        subs.push_back({v.real(), v.imag()});
      }
      rx.push_back(std::move(subs));
    }
    tx.push_back(std::move(rx));
  }
  nlohmann::json j;
  j["t"] = f.t;
  j["csi"] = std::move(tx);
  return j.dump();
}

/// Incremental reader enforcing stream-level invariants (shared dims, strictly
/// increasing timestamps). Used by replay so whole nights never sit in memory.
class TraceReader {
 public:
  explicit TraceReader(std::istream& in) : in_(in) {}

  std::optional<CsiFrame> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (detail::blank(line)) continue;
      CsiFrame f = decode_frame(line, line_no_);
      if (count_ > 0) {
        if (!(f.dims == dims_))
          throw DimensionError("tensor dimensions differ from the first frame", line_no_);
        if (!(f.t > last_t_))
          throw OrderingError("timestamp " + std::to_string(f.t) + " not after previous " +
                                  std::to_string(last_t_),
                              line_no_);
      } else {
        dims_ = f.dims;
      }
      last_t_ = f.t;
      ++count_;
      return f;
    }
    return std::nullopt;
  }

  std::size_t line() const noexcept { return line_no_; }
  std::size_t frames_read() const noexcept { return count_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
  std::size_t count_ = 0;
  Dims dims_;
  double last_t_ = 0.0;
};

inline std::vector<CsiFrame> read_trace(std::istream& in) {
  TraceReader reader(in);
  std::vector<CsiFrame> frames;
  while (auto f = reader.next()) frames.push_back(std::move(*f));
  return frames;
}

inline std::vector<CsiFrame> read_trace_string(const std::string& text) {
  std::istringstream in(text);
  return read_trace(in);
}

inline std::vector<CsiFrame> read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file: " + path);
  return read_trace(in);
}

/// Checks CsiFrame invariants across a sequence; throws ValidationError naming the frame index.
inline void validate_frames(const std::vector<CsiFrame>& frames) {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    const std::string where = "frame " + std::to_string(i) + ": ";
    if (f.csi.size() != f.dims.channels() || f.dims.channels() == 0)
      throw ValidationError(where + "csi size does not match its dimensions", 0);
    if (!f.finite()) throw ValidationError(where + "non-finite value", 0);
    if (i > 0 && !(f.dims == frames[0].dims))
      throw ValidationError(where + "dimensions differ from frame 0", 0);
    if (i > 0 && !(f.t > frames[i - 1].t))
      throw ValidationError(where + "timestamp not strictly increasing", 0);
  }
}

inline void write_trace(std::ostream& out, const std::vector<CsiFrame>& frames) {
  validate_frames(frames);
  for (const auto& f : frames) out << encode_frame(f) << '\n';
}

inline std::string write_trace(const std::vector<CsiFrame>& frames) {
  std::ostringstream out;
  write_trace(out, frames);
  return out.str();
}

inline GroundTruthRecord decode_ground_truth(const std::string& line, std::size_t line_no = 0) {
  const auto j = detail::parse_json_line(line, line_no);
  if (!j.is_object()) throw ParseError("ground-truth line is not a JSON object", line_no);
  GroundTruthRecord r;
  r.t = detail::number_field(j, "t", line_no);
  auto st = j.find("state");
  if (st == j.end() || !st->is_string()) throw ParseError("missing string field \"state\"", line_no);
  auto state = parse_state(st->get<std::string>());
  if (!state) throw ParseError("unknown state \"" + st->get<std::string>() + "\"", line_no);
  r.state = *state;
  if (auto b = j.find("bpm"); b != j.end() && !b->is_null()) {
    if (!b->is_number()) throw ParseError("field \"bpm\" is not a number", line_no);
    r.bpm = b->get<double>();
  }
  validate(r, line_no);
  return r;
}

inline std::string encode_ground_truth(const GroundTruthRecord& r) {
  nlohmann::json j;
  j["t"] = r.t;
  j["state"] = std::string(to_string(r.state));
  if (r.bpm) j["bpm"] = *r.bpm;
  return j.dump();
}

inline std::vector<GroundTruthRecord> read_ground_truth(std::istream& in) {
  std::vector<GroundTruthRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    auto r = decode_ground_truth(line, line_no);
    if (!out.empty() && !(r.t > out.back().t))
      throw OrderingError("ground-truth timestamps must be strictly increasing", line_no);
    out.push_back(r);
  }
  return out;
}

inline std::vector<GroundTruthRecord> read_ground_truth_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ground-truth file: " + path);
  return read_ground_truth(in);
}

inline void write_ground_truth(std::ostream& out, const std::vector<GroundTruthRecord>& records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    validate(records[i], 0);
    out << encode_ground_truth(records[i]) << '\n';
  }
}

}  // namespace csivitals
