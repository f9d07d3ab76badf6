#pragma once

// Reference implementations used to check the library: central differences
// and brute-force recursion, written independently of the fast paths.

#include "locov/cover.hpp"

#include <functional>
#include <vector>

namespace locov::oracle {

inline Vec central_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vec a = x, b = x;
    a[k] += h;
    b[k] -= h;
    g[k] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

// Every composition of length T, by plain recursion on the last index.
inline void all_compositions(const UpdateMap& map, const Dataset& data, const Vec& theta, std::size_t depth,
                             std::vector<Vec>& out) {
  if (depth == 0) {
    out.push_back(theta);
    return;
  }
  for (std::size_t i = 0; i < data.size(); ++i) all_compositions(map, data, map.apply(theta, data.samples[i]), depth - 1, out);
}

inline double nearest_distance(const std::vector<Vec>& pts, const Vec& x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) best = std::min(best, (p - x).norm());
  return best;
}

}  // namespace locov::oracle
