#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include <boost/random/normal_distribution.hpp>

namespace csivitals {

/// Seeded generator with platform-independent uniform/normal draws
/// (std distributions are implementation-defined, boost's are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in the open interval (0, 1).
  double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal (ziggurat).
  double normal() { return normal_(eng_); }

  std::pair<double, double> normal_pair() {
    const double a = normal();
    return {a, normal()};
  }

  std::uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  boost::random::normal_distribution<double> normal_;
};

}  // namespace csivitals
