#pragma once

// Scalar filters used by the conditioning chain and the breath extractor:
// centered median, exponential moving average, and Butterworth low/band-pass
// designs realised as cascaded biquads (second-order sections).

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "csivitals/error.hpp"

namespace csivitals::filters {

/// Centered running median. Near the edges the window shrinks symmetrically,
/// so out[k] uses half-width min(h, k, n-1-k).
inline std::vector<double> median_filter(std::span<const double> x, std::size_t window) {
  if (window == 0 || window % 2 == 0) throw ParameterError("median window must be odd and >= 1");
  const std::size_t n = x.size(), h = window / 2;
  std::vector<double> out(n), buf;
  buf.reserve(window);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t w = std::min({h, k, n - 1 - k});
    buf.assign(x.begin() + static_cast<std::ptrdiff_t>(k - w), x.begin() + static_cast<std::ptrdiff_t>(k + w + 1));
    auto mid = buf.begin() + static_cast<std::ptrdiff_t>(w);
    std::nth_element(buf.begin(), mid, buf.end());
    out[k] = *mid;
  }
  return out;
}

inline void check_ema_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("ema alpha must lie in (0, 1]");
}

/// y[0] = x[0]; y[k] = alpha * y[k-1] + (1 - alpha) * x[k].
inline std::vector<double> ema_filter(std::span<const double> x, double alpha) {
  check_ema_alpha(alpha);
  if (x.empty()) throw InsufficientData("ema_filter needs a nonempty series");
  std::vector<double> y(x.size());
  y[0] = x[0];
  for (std::size_t k = 1; k < x.size(); ++k) y[k] = alpha * y[k - 1] + (1.0 - alpha) * x[k];
  return y;
}

/// Normalized biquad: y = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2) x.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

  std::complex<double> response(double omega) const {
    const std::complex<double> z1 = std::polar(1.0, -omega), z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
  }
};

/// Cascade of second-order sections, the same design applied to every channel.
struct SosFilter {
  std::vector<Biquad> sections;

  std::complex<double> response(double omega) const {
    std::complex<double> h = 1.0;
    for (const auto& s : sections) h *= s.response(omega);
    return h;
  }
  double gain(double omega) const { return std::abs(response(omega)); }
  std::size_t order() const {
    std::size_t n = 0;
    for (const auto& s : sections) n += (s.a2 != 0.0 || s.b2 != 0.0) ? 2 : 1;
    return n;
  }
};

/// Per-stream delay-line state (transposed direct form II) for an SosFilter.
class SosState {
 public:
  SosState() = default;
  explicit SosState(const SosFilter& f) : filter_(&f), z_(2 * f.sections.size(), 0.0) {}

  double step(double x) {
    const auto& secs = filter_->sections;
    for (std::size_t i = 0; i < secs.size(); ++i) {
      const Biquad& s = secs[i];
      double& z1 = z_[2 * i];
      double& z2 = z_[2 * i + 1];
      const double y = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * y + z2;
      z2 = s.b2 * x - s.a2 * y;
      x = y;
    }
    return x;
  }

 private:
  const SosFilter* filter_ = nullptr;
  std::vector<double> z_;
};

inline std::vector<double> apply(const SosFilter& f, std::span<const double> x) {
  SosState st(f);
  std::vector<double> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = st.step(x[k]);
  return y;
}

namespace detail {

using cd = std::complex<double>;

// Butterworth analog prototype poles (unit cutoff), upper half plane plus
// the real pole for odd orders.
inline std::vector<cd> prototype_poles(std::size_t order) {
  std::vector<cd> p;
  for (std::size_t k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1.0) / (2.0 * order);
    const cd pole = std::polar(1.0, theta);
    if (pole.imag() >= -1e-12) p.push_back(pole.imag() < 1e-12 ? cd(pole.real(), 0.0) : pole);
  }
  return p;
}

inline cd bilinear(cd s) { return (2.0 + s) / (2.0 - s); }

// Section with poles (z1, z2), numerator given, normalized to unit gain at omega_ref.
inline Biquad section(cd z1, cd z2, double nb0, double nb1, double nb2, double omega_ref) {
  Biquad b;
  b.a1 = -(z1 + z2).real();
  b.a2 = (z1 * z2).real();
  b.b0 = nb0;
  b.b1 = nb1;
  b.b2 = nb2;
  const double g = std::abs(b.response(omega_ref));
  b.b0 /= g;
  b.b1 /= g;
  b.b2 /= g;
  return b;
}

}  // namespace detail

/// Digital Butterworth low-pass of the given order with -3 dB at cutoff
/// omega_c (rad/sample, 0 < omega_c < pi). Bilinear transform with prewarping.
inline SosFilter butterworth_lowpass_design(double omega_c, std::size_t order) {
  using detail::cd;
  if (!(omega_c > 0.0 && omega_c < std::numbers::pi)) throw ParameterError("cutoff must lie in (0, pi)");
  if (order == 0) throw ParameterError("filter order must be >= 1");
  const double warped = 2.0 * std::tan(omega_c / 2.0);
  SosFilter f;
  for (const cd& p : detail::prototype_poles(order)) {
    const cd z = detail::bilinear(warped * p);
    if (p.imag() == 0.0) {
      Biquad b;
      b.a1 = -z.real();
      b.b0 = b.b1 = 1.0;
      const double g = std::abs(b.response(0.0));
      b.b0 /= g;
      b.b1 /= g;
      f.sections.push_back(b);
    } else {
      f.sections.push_back(detail::section(z, std::conj(z), 1.0, 2.0, 1.0, 0.0));
    }
  }
  return f;
}

/// Digital Butterworth band-pass from an analog prototype of `order`
/// (the resulting filter has 2*order poles, one biquad per prototype pole).
/// Band edges in rad/sample; unit gain at the geometric centre.
inline SosFilter butterworth_bandpass_design(double omega_lo, double omega_hi, std::size_t order) {
  using detail::cd;
  if (!(omega_lo > 0.0 && omega_hi > omega_lo && omega_hi < std::numbers::pi))
    throw ParameterError("band edges must satisfy 0 < lo < hi < pi");
  if (order == 0) throw ParameterError("filter order must be >= 1");
  const double w1 = 2.0 * std::tan(omega_lo / 2.0), w2 = 2.0 * std::tan(omega_hi / 2.0);
  const double bw = w2 - w1, w0sq = w1 * w2;
  const double omega_ref = 2.0 * std::atan(std::sqrt(w0sq) / 2.0);
  SosFilter f;
  for (const cd& p : detail::prototype_poles(order)) {
    // s^2 - p*bw*s + w0^2 = 0
    const cd disc = std::sqrt(p * p * bw * bw - 4.0 * w0sq);
    const cd s1 = (p * bw + disc) / 2.0, s2 = (p * bw - disc) / 2.0;
    const cd z1 = detail::bilinear(s1), z2 = detail::bilinear(s2);
    if (p.imag() == 0.0) {
      f.sections.push_back(detail::section(z1, z2, 1.0, 0.0, -1.0, omega_ref));
    } else {
      f.sections.push_back(detail::section(z1, std::conj(z1), 1.0, 0.0, -1.0, omega_ref));
      f.sections.push_back(detail::section(z2, std::conj(z2), 1.0, 0.0, -1.0, omega_ref));
    }
  }
  return f;
}

/// Causal low-pass filtering of one series.
inline std::vector<double> butterworth_lowpass(std::span<const double> x, double omega_c, std::size_t order) {
  return filters::apply(butterworth_lowpass_design(omega_c, order), x);
}

}  // namespace csivitals::filters
