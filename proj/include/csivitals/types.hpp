#pragma once

// Domain types shared across the pipeline: complex CSI frames, the real
// per-channel matrix produced after differencing, ground-truth labels and
// the epoch/stream configuration.

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "csivitals/error.hpp"

namespace csivitals {

using Complex = std::complex<double>;

/// Antenna/subcarrier layout of a CSI tensor.
struct Dims {
  std::size_t tx = 1;
  std::size_t rx = 1;
  std::size_t sub = 30;

  std::size_t channels() const noexcept { return tx * rx * sub; }
  std::size_t pairs() const noexcept { return tx * rx; }
  /// Flattened channel index, tx-major then rx then subcarrier.
  std::size_t index(std::size_t t, std::size_t r, std::size_t s) const noexcept {
    return (t * rx + r) * sub + s;
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// One timestamped CSI tensor indexed [tx][rx][subcarrier].
struct CsiFrame {
  double t = 0.0;
  Dims dims;
  std::vector<Complex> csi;  // dims.channels() entries, flattened by Dims::index

  Complex& at(std::size_t tx, std::size_t rx, std::size_t s) { return csi[dims.index(tx, rx, s)]; }
  const Complex& at(std::size_t tx, std::size_t rx, std::size_t s) const {
    return csi[dims.index(tx, rx, s)];
  }

  bool finite() const {
    if (!std::isfinite(t)) return false;
    for (const auto& v : csi)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }
};

/// Real matrix [time][channel] with per-row timestamps.
struct RealChannelMatrix {
  Eigen::MatrixXd samples;   // rows = time, cols = channel
  std::vector<double> times;  // one per row
  double sample_rate = 0.0;   // Hz, nominal

  std::size_t rows() const noexcept { return static_cast<std::size_t>(samples.rows()); }
  std::size_t channels() const noexcept { return static_cast<std::size_t>(samples.cols()); }
};

enum class GroundTruthState { breathing, motion, absent };

inline std::string_view to_string(GroundTruthState s) {
  switch (s) {
    case GroundTruthState::breathing: return "breathing";
    case GroundTruthState::motion: return "motion";
    case GroundTruthState::absent: return "absent";
  }
  return "absent";
}

inline std::optional<GroundTruthState> parse_state(std::string_view s) {
  if (s == "breathing") return GroundTruthState::breathing;
  if (s == "motion") return GroundTruthState::motion;
  if (s == "absent") return GroundTruthState::absent;
  return std::nullopt;
}

inline constexpr double kMinBreathBpm = 10.0;
inline constexpr double kMaxBreathBpm = 40.0;

struct GroundTruthRecord {
  double t = 0.0;
  GroundTruthState state = GroundTruthState::absent;
  std::optional<double> bpm;  // only for breathing, within [10, 40]
};

/// Throws ValidationError / RangeError when the record breaks its invariants.
inline void validate(const GroundTruthRecord& r, std::size_t line = 0) {
  if (!std::isfinite(r.t)) throw ValidationError("non-finite timestamp", line);
  if (r.bpm && r.state != GroundTruthState::breathing)
    throw ValidationError("bpm given on a non-breathing record", line);
  if (r.bpm && !(*r.bpm >= kMinBreathBpm && *r.bpm <= kMaxBreathBpm))
    throw RangeError("bpm " + std::to_string(*r.bpm) + " outside [10, 40]", line);
}

struct StreamConfig {
  double nominal_rate_hz = 800.0;
  double epoch_seconds = 30.0;
  std::size_t epoch_samples = 600;

  /// Output sample rate of a full, downsampled epoch (20 Hz by default).
  double epoch_rate_hz() const { return static_cast<double>(epoch_samples) / epoch_seconds; }

  void validate() const {
    if (!(nominal_rate_hz > 0) || !(epoch_seconds > 0) || epoch_samples == 0)
      throw ParameterError("stream config values must be positive");
    if (static_cast<double>(epoch_samples) > nominal_rate_hz * epoch_seconds)
      throw ParameterError("epoch_samples exceeds nominal_rate_hz * epoch_seconds");
  }
};

}  // namespace csivitals
