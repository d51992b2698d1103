#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "finsler/types.hpp"

namespace finsler {

constexpr std::uint64_t kDefaultSeed = 0x5EED;

/// Compact sample region: ball of given radius around a center, with a
/// resolution knob controlling how many base points get probed.
struct SampleRegion {
  Vec center;
  double radius = 0.0;  // 0 => single point
  int points = 1;
};

/// n=2: equally spaced angles including 0 and pi; n>2: fixed-seed Gaussian
/// directions plus the coordinate axes. Deterministic for a given (n, count).
inline std::vector<Vec> unit_directions(int n, int count, std::uint64_t seed = kDefaultSeed) {
  std::vector<Vec> dirs;
  dirs.reserve(count + 2 * n);
  if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double th = 2.0 * M_PI * k / count;
      dirs.push_back(vec2(std::cos(th), std::sin(th)));
    }
    return dirs;
  }
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (static_cast<int>(dirs.size()) < count) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    const double nrm = v.norm();
    if (nrm > 1e-8) dirs.push_back(v / nrm);
  }
  return dirs;
}

/// Deterministic low-discrepancy points in the region: golden-angle spiral
/// for n=2, fixed-seed uniform ball samples otherwise.
inline std::vector<Vec> region_points(const SampleRegion& region, std::uint64_t seed = kDefaultSeed) {
  std::vector<Vec> pts;
  const int n = static_cast<int>(region.center.size());
  const int count = std::max(1, region.points);
  pts.reserve(count);
  if (region.radius <= 0.0 || count == 1) {
    pts.push_back(region.center);
    return pts;
  }
  if (n == 2) {
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double r = region.radius * std::sqrt((k + 0.5) / count);
      const double th = golden * k;
      pts.push_back(region.center + r * vec2(std::cos(th), std::sin(th)));
    }
    return pts;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  while (static_cast<int>(pts.size()) < count) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = unif(rng);
    if (v.norm() <= 1.0) pts.push_back(region.center + region.radius * v);
  }
  return pts;
}

}  // namespace finsler
