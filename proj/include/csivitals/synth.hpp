#pragma once

// Synthetic time-varying channel frequency response:
//
//   H(f, t) = H_s(f) + sum_i K / D_i(t)^2 * exp(j 2 pi D_i(t) / lambda),
//   D_i(t)  = D0_i + offset_i(tx, rx) + d_i(t)
//
// plus i.i.d. complex Gaussian noise. Also hosts the analytic breathing
// waveform |sum_i d_i'(t) exp(j 2 pi d_i(t) / lambda)| used as an oracle for
// the differentiated amplitude, and the A_i phase-term check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "csivitals/error.hpp"
#include "csivitals/normalize.hpp"
#include "csivitals/rng.hpp"
#include "csivitals/types.hpp"

namespace csivitals::synth {

inline constexpr double kSpeedOfLight = 299792458.0;

enum class TrajectoryKind { still, breathing_sinusoid, motion_burst };

/// Displacement model d_i(t) of one dynamic path.
class Trajectory {
 public:
  static Trajectory still() { return Trajectory{}; }

  static Trajectory breathing(double rate_bpm, double amplitude_m, double phase_rad = 0.0) {
    Trajectory t;
    t.kind_ = TrajectoryKind::breathing_sinusoid;
    t.rate_bpm_ = rate_bpm;
    t.amplitude_m_ = amplitude_m;
    t.phase_rad_ = phase_rad;
    return t;
  }

  /// Band-limited random displacement inside [start, start + duration), zero
  /// elsewhere. Sum of seeded sinusoids in 0.3-2 Hz with a 1/f weighting,
  /// scaled to peak |d| = amplitude and tapered at both ends.
  static Trajectory motion_burst(double start_s, double duration_s, double amplitude_m, std::uint64_t seed) {
    Trajectory t;
    t.kind_ = TrajectoryKind::motion_burst;
    t.start_s_ = start_s;
    t.duration_s_ = duration_s;
    t.amplitude_m_ = amplitude_m;
    t.seed_ = seed;
    t.build_burst();
    return t;
  }

  TrajectoryKind kind() const noexcept { return kind_; }
  double rate_bpm() const noexcept { return rate_bpm_; }
  double amplitude_m() const noexcept { return amplitude_m_; }
  double phase_rad() const noexcept { return phase_rad_; }
  double start_s() const noexcept { return start_s_; }
  double duration_s() const noexcept { return duration_s_; }
  std::uint64_t seed() const noexcept { return seed_; }

  bool active_at(double t) const {
    switch (kind_) {
      case TrajectoryKind::still: return false;
      case TrajectoryKind::breathing_sinusoid: return true;
      case TrajectoryKind::motion_burst: return t >= start_s_ && t < start_s_ + duration_s_;
    }
    return false;
  }

  double displacement(double t) const {
    switch (kind_) {
      case TrajectoryKind::still: return 0.0;
      case TrajectoryKind::breathing_sinusoid:
        return amplitude_m_ * std::sin(omega() * t + phase_rad_);
      case TrajectoryKind::motion_burst: {
        if (!active_at(t)) return 0.0;
        const double tau = t - start_s_;
        return amplitude_m_ * burst_scale_ * taper(tau) * burst_sum(tau);
      }
    }
    return 0.0;
  }

  bool has_analytic_velocity() const { return kind_ != TrajectoryKind::motion_burst; }

  /// d'(t); throws for trajectories without a closed form.
  double velocity(double t) const {
    switch (kind_) {
      case TrajectoryKind::still: return 0.0;
      case TrajectoryKind::breathing_sinusoid:
        return amplitude_m_ * omega() * std::cos(omega() * t + phase_rad_);
      case TrajectoryKind::motion_burst: break;
    }
    throw ParameterError("unsupported trajectory: motion_burst has no analytic derivative");
  }

  /// Largest |d(t)| the trajectory can reach.
  double max_displacement() const { return kind_ == TrajectoryKind::still ? 0.0 : amplitude_m_; }

 private:
  double omega() const { return 2.0 * std::numbers::pi * rate_bpm_ / 60.0; }

  double taper(double tau) const {
    const double edge = std::min(0.5, duration_s_ / 4.0);
    auto ramp = [&](double u) { return 0.5 - 0.5 * std::cos(std::numbers::pi * u / edge); };
    if (tau < edge) return ramp(tau);
    if (tau > duration_s_ - edge) return ramp(duration_s_ - tau);
    return 1.0;
  }

  double burst_sum(double tau) const {
    double s = 0.0;
    for (const auto& c : comps_) s += c.weight * std::sin(2.0 * std::numbers::pi * c.freq * tau + c.phase);
    return s;
  }

  void build_burst() {
    Rng rng(seed_ ^ 0x6d6f74696f6eULL);
    comps_.clear();
    for (int k = 0; k < 6; ++k) {
      Component c;
      c.freq = rng.uniform(0.3, 2.0);
      c.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      c.weight = 1.0 / c.freq;
      comps_.push_back(c);
    }
    double peak = 0.0;
    const int n = std::max(2, static_cast<int>(duration_s_ * 200.0));
    for (int i = 0; i <= n; ++i) {
      const double tau = duration_s_ * i / n;
      peak = std::max(peak, std::fabs(taper(tau) * burst_sum(tau)));
    }
    burst_scale_ = peak > 0 ? 1.0 / peak : 0.0;
  }

  struct Component {
    double freq = 0, phase = 0, weight = 0;
  };

  TrajectoryKind kind_ = TrajectoryKind::still;
  double rate_bpm_ = 0.0;
  double amplitude_m_ = 0.0;
  double phase_rad_ = 0.0;
  double start_s_ = 0.0;
  double duration_s_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<Component> comps_;
  double burst_scale_ = 0.0;
};

struct DynamicPath {
  double base_distance_m = 3.0;
  Trajectory trajectory;
  /// Extra path length per (tx, rx) pair, flattened tx-major; empty = all zero.
  std::vector<double> antenna_offsets_m;

  double offset(std::size_t pair) const {
    return antenna_offsets_m.empty() ? 0.0 : antenna_offsets_m[pair];
  }
};

struct MultipathScene {
  Dims dims{1, 1, 30};
  double center_freq_hz = 5.32e9;
  double subcarrier_spacing_hz = 312.5e3;
  double K = 1.0;
  double noise_sigma = 0.0;           // E|n|^2 = noise_sigma^2 per complex sample
  std::vector<Complex> static_cfr;    // dims.channels() entries; empty = zeros
  std::vector<DynamicPath> dynamic_paths;

  /// Subcarrier frequencies centred on center_freq_hz.
  std::vector<double> frequencies() const {
    std::vector<double> f(dims.sub);
    for (std::size_t s = 0; s < dims.sub; ++s)
      f[s] = center_freq_hz + (static_cast<double>(s) - 0.5 * (static_cast<double>(dims.sub) - 1.0)) *
                                  subcarrier_spacing_hz;
    return f;
  }

  std::vector<double> wavelengths() const {
    auto f = frequencies();
    for (auto& v : f) v = kSpeedOfLight / v;
    return f;
  }

  void validate() const {
    if (dims.channels() == 0) throw ParameterError("scene: empty wavelength list (no subcarriers)");
    for (double l : wavelengths())
      if (!(l > 0) || !std::isfinite(l)) throw ParameterError("scene: wavelengths must be positive");
    if (!(noise_sigma >= 0)) throw ParameterError("scene: noise_sigma must be >= 0");
    if (!static_cfr.empty() && static_cfr.size() != dims.channels())
      throw ParameterError("scene: static_cfr size does not match dimensions");
    for (std::size_t i = 0; i < dynamic_paths.size(); ++i) {
      const auto& p = dynamic_paths[i];
      const std::string where = "scene: dynamic path " + std::to_string(i) + ": ";
      if (!(p.base_distance_m > 0)) throw ParameterError(where + "base_distance_m must be > 0");
      if (!p.antenna_offsets_m.empty() && p.antenna_offsets_m.size() != dims.pairs())
        throw ParameterError(where + "antenna_offsets_m needs one entry per (tx, rx) pair");
      const auto& tr = p.trajectory;
      if (!(tr.amplitude_m() >= 0)) throw ParameterError(where + "amplitude must be >= 0");
      if (tr.max_displacement() > p.base_distance_m / 10.0)
        throw ParameterError(where + "displacement exceeds base_distance_m / 10");
      if (tr.kind() == TrajectoryKind::breathing_sinusoid &&
          !(tr.rate_bpm() >= kMinBreathBpm && tr.rate_bpm() <= kMaxBreathBpm))
        throw ParameterError(where + "rate_bpm outside [10, 40]");
      if (tr.kind() == TrajectoryKind::motion_burst && !(tr.duration_s() > 0))
        throw ParameterError(where + "motion burst duration must be > 0");
    }
  }

  /// Breathing rate of the first breathing path, if any.
  std::optional<double> breathing_rate() const {
    for (const auto& p : dynamic_paths)
      if (p.trajectory.kind() == TrajectoryKind::breathing_sinusoid) return p.trajectory.rate_bpm();
    return std::nullopt;
  }
};

/// Streams frames t_k = k / rate_hz, k = 0 .. round(duration * rate) - 1.
class CfrGenerator {
 public:
  CfrGenerator(const MultipathScene& scene, double duration_s, double rate_hz, std::uint64_t seed)
      : scene_(scene), rate_(rate_hz), rng_(seed) {
    scene_.validate();
    if (!(duration_s > 0)) throw ParameterError("duration must be positive");
    if (!(rate_hz > 0)) throw ParameterError("rate_hz must be positive");
    total_ = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
    const auto& d = scene_.dims;
    const auto freqs = scene_.frequencies();
    f0_ = freqs.front();
    baseline_.assign(d.channels(), Complex{});
    if (!scene_.static_cfr.empty()) baseline_ = scene_.static_cfr;
    // Paths that sit at d = 0 contribute a constant; fold it into the baseline
    // and only correct for the paths that are moving at a given instant.
    rest_.resize(scene_.dynamic_paths.size());
    for (std::size_t i = 0; i < scene_.dynamic_paths.size(); ++i) {
      rest_[i].assign(d.channels(), Complex{});
      add_path(i, 0.0, rest_[i]);
      for (std::size_t c = 0; c < d.channels(); ++c) baseline_[c] += rest_[i][c];
    }
  }

  std::size_t total_frames() const noexcept { return total_; }
  std::size_t emitted() const noexcept { return k_; }

  std::optional<CsiFrame> next() {
    if (k_ >= total_) return std::nullopt;
    CsiFrame f;
    f.t = static_cast<double>(k_) / rate_;
    f.dims = scene_.dims;
    f.csi = baseline_;
    for (std::size_t i = 0; i < scene_.dynamic_paths.size(); ++i) {
      const auto& tr = scene_.dynamic_paths[i].trajectory;
      if (!tr.active_at(f.t)) continue;
      const double disp = tr.displacement(f.t);
      if (disp == 0.0) continue;
      add_path(i, disp, f.csi);
      for (std::size_t c = 0; c < f.csi.size(); ++c) f.csi[c] -= rest_[i][c];
    }
    if (scene_.noise_sigma > 0) {
      const double s = scene_.noise_sigma / std::numbers::sqrt2;
      for (auto& v : f.csi) {
        auto [a, b] = rng_.normal_pair();
        v += Complex(s * a, s * b);
      }
    }
    ++k_;
    return f;
  }

 private:
  // Adds K / D^2 exp(j 2 pi D f / c) over all subcarriers of every antenna pair.
  void add_path(std::size_t i, double disp, std::vector<Complex>& out) const {
    const auto& p = scene_.dynamic_paths[i];
    const auto& d = scene_.dims;
    const double kf = 2.0 * std::numbers::pi / kSpeedOfLight;
    for (std::size_t tx = 0; tx < d.tx; ++tx)
      for (std::size_t rx = 0; rx < d.rx; ++rx) {
        const double D = p.base_distance_m + p.offset(tx * d.rx + rx) + disp;
        const double amp = scene_.K / (D * D);
        const double ph = kf * D * f0_, dph = kf * D * scene_.subcarrier_spacing_hz;
        double re = amp * std::cos(ph), im = amp * std::sin(ph);
        const double sr = std::cos(dph), si = std::sin(dph);
        const std::size_t base = d.index(tx, rx, 0);
        for (std::size_t s = 0; s < d.sub; ++s) {
          out[base + s] += Complex(re, im);
          const double nr = re * sr - im * si;
          im = re * si + im * sr;
          re = nr;
        }
      }
  }

  MultipathScene scene_;
  double rate_;
  Rng rng_;
  std::size_t total_ = 0;
  std::size_t k_ = 0;
  double f0_ = 0.0;
  std::vector<Complex> baseline_;
  std::vector<std::vector<Complex>> rest_;
};

/// Noise-free H at one instant for one (pair, subcarrier).
inline Complex cfr_at(const MultipathScene& scene, double t, std::size_t pair, std::size_t sub) {
  const auto lambdas = scene.wavelengths();
  const std::size_t c = pair * scene.dims.sub + sub;
  Complex h = scene.static_cfr.empty() ? Complex{} : scene.static_cfr[c];
  for (const auto& p : scene.dynamic_paths) {
    const double D = p.base_distance_m + p.offset(pair) + p.trajectory.displacement(t);
    h += std::polar(scene.K / (D * D), 2.0 * std::numbers::pi * D / lambdas[sub]);
  }
  return h;
}

/// Per-second labels: motion if [s, s+1) overlaps a burst, else breathing at
/// the scene's rate if a breathing path exists, else absent.
inline std::vector<GroundTruthRecord> ground_truth(const MultipathScene& scene, double duration_s) {
  std::vector<GroundTruthRecord> out;
  const auto rate = scene.breathing_rate();
  for (std::size_t s = 0; static_cast<double>(s) < duration_s; ++s) {
    const double t0 = static_cast<double>(s), t1 = t0 + 1.0;
    bool motion = false;
    for (const auto& p : scene.dynamic_paths) {
      const auto& tr = p.trajectory;
      if (tr.kind() == TrajectoryKind::motion_burst && tr.start_s() < t1 && tr.start_s() + tr.duration_s() > t0)
        motion = true;
    }
    GroundTruthRecord r;
    r.t = t0;
    if (motion) {
      r.state = GroundTruthState::motion;
    } else if (rate) {
      r.state = GroundTruthState::breathing;
      r.bpm = *rate;
    }
    out.push_back(r);
  }
  return out;
}

struct SyntheticRecording {
  std::vector<CsiFrame> frames;
  std::vector<GroundTruthRecord> truth;
};

/// Materialises a whole recording. Prefer CfrGenerator for long spans.
inline SyntheticRecording generate_cfr(const MultipathScene& scene, double duration_s, double rate_hz,
                                       std::uint64_t seed) {
  CfrGenerator gen(scene, duration_s, rate_hz, seed);
  SyntheticRecording rec;
  rec.frames.reserve(gen.total_frames());
  while (auto f = gen.next()) rec.frames.push_back(std::move(*f));
  rec.truth = ground_truth(scene, duration_s);
  return rec;
}

/// |sum_i d_i'(t) exp(j 2 pi d_i(t) / lambda)| on t_grid for one subcarrier.
inline std::vector<double> breath_waveform_oracle(const MultipathScene& scene, std::span<const double> t_grid,
                                                  std::size_t subcarrier = 0) {
  if (scene.dynamic_paths.empty()) throw ParameterError("breath oracle needs at least one dynamic path");
  for (const auto& p : scene.dynamic_paths)
    if (!p.trajectory.has_analytic_velocity())
      throw ParameterError("unsupported trajectory: motion_burst has no analytic derivative");
  const double lambda = scene.wavelengths().at(subcarrier);
  std::vector<double> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    Complex acc{};
    for (const auto& p : scene.dynamic_paths) {
      const auto& tr = p.trajectory;
      acc += tr.velocity(t) * std::polar(1.0, 2.0 * std::numbers::pi * tr.displacement(t) / lambda);
    }
    out.push_back(std::abs(acc));
  }
  return out;
}

/// Relative RMS difference between the max-min normalised central-difference
/// amplitude |dH/dt| of the generated channel and the analytic breathing
/// waveform, both sampled at rate_hz on one subcarrier of the first antenna pair.
inline double approximation_error(const MultipathScene& scene, double duration_s, double rate_hz,
                                  std::size_t subcarrier = 0) {
  scene.validate();
  if (scene.noise_sigma != 0.0) throw ParameterError("approximation_error requires a noiseless scene");
  if (!(rate_hz > 0)) throw ParameterError("rate_hz must be positive");
  double slowest = 0.0;
  for (const auto& p : scene.dynamic_paths)
    if (p.trajectory.kind() == TrajectoryKind::breathing_sinusoid)
      slowest = std::max(slowest, 60.0 / p.trajectory.rate_bpm());
  if (duration_s < slowest || duration_s <= 0)
    throw InsufficientData("duration shorter than one breathing cycle");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
  if (n < 3) throw InsufficientData("too few samples for central differences");
  std::vector<Complex> h(n);
  for (std::size_t k = 0; k < n; ++k) h[k] = cfr_at(scene, k / rate_hz, 0, subcarrier);
  std::vector<double> numeric(n - 2), grid(n - 2);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    numeric[k - 1] = std::abs(h[k + 1] - h[k - 1]) * rate_hz / 2.0;
    grid[k - 1] = k / rate_hz;
  }
  const auto analytic = breath_waveform_oracle(scene, grid, subcarrier);
  const auto a = maxmin_normalize(numeric), b = maxmin_normalize(analytic);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    num += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
    den += b.values[i] * b.values[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : 1.0;
  return std::sqrt(num / den);
}

/// A_i = atan(pi D0 / lambda * (1 - 2 d / D0)), principal branch.
inline double a_i_angle(double D0_m, double d_m, double lambda_m) {
  if (!(D0_m > 0) || !(lambda_m > 0)) throw ParameterError("a_i_angle requires D0 > 0 and lambda > 0");
  return std::atan(std::numbers::pi * D0_m / lambda_m * (1.0 - 2.0 * d_m / D0_m));
}

// ---------------------------------------------------------------------------
// Scene JSON

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
  const std::string kind = j.value("kind", std::string("still"));
  if (kind == "still") return Trajectory::still();
  if (kind == "breathing_sinusoid")
    return Trajectory::breathing(j.at("rate_bpm").get<double>(), j.at("amplitude_m").get<double>(),
                                 j.value("phase_rad", 0.0));
  if (kind == "motion_burst")
    return Trajectory::motion_burst(j.at("start_s").get<double>(), j.at("duration_s").get<double>(),
                                    j.at("amplitude_m").get<double>(), j.value("seed", std::uint64_t{0}));
  throw ParameterError("unknown trajectory kind \"" + kind + "\"");
}

inline nlohmann::json trajectory_to_json(const Trajectory& t) {
  switch (t.kind()) {
    case TrajectoryKind::still: return {{"kind", "still"}};
    case TrajectoryKind::breathing_sinusoid:
      return {{"kind", "breathing_sinusoid"}, {"rate_bpm", t.rate_bpm()}, {"amplitude_m", t.amplitude_m()},
              {"phase_rad", t.phase_rad()}};
    case TrajectoryKind::motion_burst:
      return {{"kind", "motion_burst"}, {"start_s", t.start_s()}, {"duration_s", t.duration_s()},
              {"amplitude_m", t.amplitude_m()}, {"seed", t.seed()}};
  }
  return {};
}

/// Parses a scene document. Unknown keys are rejected so typos surface.
/// Schema (all optional except dynamic path trajectories):
///   n_tx, n_rx, n_sub, center_freq_hz, subcarrier_spacing_hz, K, noise_sigma,
///   static_cfr: [[[[re,im] x n_sub] x n_rx] x n_tx] | {"seed": n, "magnitude": m},
///   dynamic_paths: [{base_distance_m, trajectory: {kind, ...}, antenna_offsets_m: [...]}]
inline MultipathScene scene_from_json(const nlohmann::json& j) {
  static const char* known[] = {"n_tx", "n_rx", "n_sub", "center_freq_hz", "subcarrier_spacing_hz",
                                "K", "noise_sigma", "static_cfr", "dynamic_paths"};
  if (!j.is_object()) throw ParameterError("scene: document must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
      throw ParameterError("scene: unknown field \"" + key + "\"");
  MultipathScene s;
  try {
    s.dims.tx = j.value("n_tx", std::size_t{1});
    s.dims.rx = j.value("n_rx", std::size_t{1});
    s.dims.sub = j.value("n_sub", std::size_t{30});
    s.center_freq_hz = j.value("center_freq_hz", s.center_freq_hz);
    s.subcarrier_spacing_hz = j.value("subcarrier_spacing_hz", s.subcarrier_spacing_hz);
    s.K = j.value("K", s.K);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    if (auto it = j.find("static_cfr"); it != j.end()) {
      if (it->is_object()) {
        Rng rng(it->value("seed", std::uint64_t{0}));
        const double mag = it->value("magnitude", 1.0);
        s.static_cfr.resize(s.dims.channels());
        for (auto& v : s.static_cfr) v = std::polar(mag * rng.uniform(0.5, 1.0), rng.uniform(0.0, 2 * std::numbers::pi));
      } else {
        const auto& a = *it;
        if (a.size() != s.dims.tx) throw ParameterError("scene: static_cfr tx dimension mismatch");
        for (const auto& rx : a) {
          if (rx.size() != s.dims.rx) throw ParameterError("scene: static_cfr rx dimension mismatch");
          for (const auto& sub : rx) {
            if (sub.size() != s.dims.sub) throw ParameterError("scene: static_cfr subcarrier dimension mismatch");
            for (const auto& c : sub) s.static_cfr.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
          }
        }
      }
    }
    if (auto it = j.find("dynamic_paths"); it != j.end()) {
      for (const auto& pj : *it) {
        DynamicPath p;
        p.base_distance_m = pj.value("base_distance_m", p.base_distance_m);
        p.trajectory = trajectory_from_json(pj.value("trajectory", nlohmann::json::object()));
        if (auto o = pj.find("antenna_offsets_m"); o != pj.end()) p.antenna_offsets_m = o->get<std::vector<double>>();
        s.dynamic_paths.push_back(std::move(p));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("scene: ") + e.what());
  }
  s.validate();
  return s;
}

inline nlohmann::json scene_to_json(const MultipathScene& s) {
  nlohmann::json j;
  j["n_tx"] = s.dims.tx;
  j["n_rx"] = s.dims.rx;
  j["n_sub"] = s.dims.sub;
  j["center_freq_hz"] = s.center_freq_hz;
  j["subcarrier_spacing_hz"] = s.subcarrier_spacing_hz;
  j["K"] = s.K;
  j["noise_sigma"] = s.noise_sigma;
  if (!s.static_cfr.empty()) {
    nlohmann::json tx = nlohmann::json::array();
    for (std::size_t a = 0; a < s.dims.tx; ++a) {
      nlohmann::json rx = nlohmann::json::array();
      for (std::size_t b = 0; b < s.dims.rx; ++b) {
        nlohmann::json sub = nlohmann::json::array();
        for (std::size_t c = 0; c < s.dims.sub; ++c) {
          const auto& v = s.static_cfr[s.dims.index(a, b, c)];
          sub.push_back({v.real(), v.imag()});
        }
        rx.push_back(sub);
      }
      tx.push_back(rx);
    }
    j["static_cfr"] = tx;
  }
  nlohmann::json paths = nlohmann::json::array();
  for (const auto& p : s.dynamic_paths) {
    nlohmann::json pj{{"base_distance_m", p.base_distance_m}, {"trajectory", trajectory_to_json(p.trajectory)}};
    if (!p.antenna_offsets_m.empty()) pj["antenna_offsets_m"] = p.antenna_offsets_m;
    paths.push_back(pj);
  }
  j["dynamic_paths"] = paths;
  return j;
}

// ---------------------------------------------------------------------------
// Sleeper scenes used by the end-to-end checks and the sample scene files.

struct SleeperOptions {
  double rate_bpm = 15.0;
  double duration_s = 1800.0;
  std::uint64_t seed = 1;
  Dims dims{1, 3, 30};
  double noise_sigma = 1e-4;
  bool breathing = true;
  std::size_t motion_bursts = 0;
  double quiet_lead_s = 60.0;  // no bursts before this time
  std::size_t torso_paths = 1;  // chest, then abdomen, then wall bounces off the torso
};

struct BurstInterval {
  double start_s = 0, end_s = 0;
};

/// A person breathing near the receiver (torso_paths reflections off the
/// chest and abdomen, moving in near-lockstep) plus optional
/// limb-motion bursts, each moving three limb reflections at once. Geometry
/// (distances, per-antenna offsets, burst timing) is drawn from the seed.
inline MultipathScene sleeper_scene(const SleeperOptions& o, std::vector<BurstInterval>* bursts = nullptr) {
  Rng rng(o.seed * 0x9e3779b97f4a7c15ULL + 17);
  MultipathScene s;
  s.dims = o.dims;
  s.noise_sigma = o.noise_sigma;
  s.static_cfr.resize(s.dims.channels());
  for (auto& v : s.static_cfr) v = std::polar(rng.uniform(0.5, 1.0), rng.uniform(0.0, 2 * std::numbers::pi));
  const double lambda = kSpeedOfLight / s.center_freq_hz;
  auto offsets = [&] {
    std::vector<double> off(s.dims.pairs());
    for (auto& v : off) v = rng.uniform(0.0, lambda);
    return off;
  };
  if (o.breathing) {
    const double d0 = rng.uniform(1.5, 3.0);
    const double phase = rng.uniform(0.0, 2 * std::numbers::pi);
    for (std::size_t i = 0; i < o.torso_paths; ++i) {
      DynamicPath p;
      // abdomen sits just behind the chest and lags it slightly; bounces travel further
      p.base_distance_m = i == 0 ? d0 : i == 1 ? d0 + rng.uniform(0.1, 0.3) : d0 + rng.uniform(0.8, 2.0);
      const double amp = i == 0 ? rng.uniform(0.008, 0.015) : rng.uniform(0.005, 0.012);
      p.trajectory = Trajectory::breathing(o.rate_bpm, amp, phase - (i == 0 ? 0.0 : rng.uniform(0.0, 0.6)));
      p.antenna_offsets_m = offsets();
      s.dynamic_paths.push_back(std::move(p));
    }
  }
  if (o.motion_bursts > 0) {
    const double span = o.duration_s - o.quiet_lead_s;
    const double slot = span / static_cast<double>(o.motion_bursts);
    for (std::size_t b = 0; b < o.motion_bursts; ++b) {
      const double dur = rng.uniform(8.0, 20.0);
      const double start = o.quiet_lead_s + b * slot + rng.uniform(0.0, std::max(0.0, slot - dur - 30.0));
      if (bursts) bursts->push_back({start, start + dur});
      for (int limb = 0; limb < 3; ++limb) {
        DynamicPath p;
        p.base_distance_m = rng.uniform(1.5, 3.0);
        p.trajectory = Trajectory::motion_burst(start, dur, rng.uniform(0.04, 0.1), rng.next_u64());
        p.antenna_offsets_m = offsets();
        s.dynamic_paths.push_back(std::move(p));
      }
    }
  }
  return s;
}

}  // namespace csivitals::synth
