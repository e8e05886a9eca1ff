#pragma once

#include <algorithm>
#include <span>
#include <vector>

namespace csivitals {

struct Normalized {
  std::vector<double> values;
  bool degenerate = false;  // range below 1e-12, values are all zero
};

/// (x - min) / (max - min); a flat series maps to zeros with `degenerate` set.
inline Normalized maxmin_normalize(std::span<const double> x) {
  Normalized out;
  out.values.assign(x.size(), 0.0);
  if (x.empty()) {
    out.degenerate = true;
    return out;
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double range = *hi - *lo;
  if (!(range >= 1e-12)) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = (x[i] - *lo) / range;
  return out;
}

}  // namespace csivitals
