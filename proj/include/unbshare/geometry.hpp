#pragma once

// Square torus geometry and homogeneous Poisson sampling on it.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rng.hpp"

namespace unb {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Square torus [-side/2, side/2)^2 with wrap-around distances.
class Torus {
 public:
  explicit Torus(double side) : side_(side), half_(0.5 * side) {}

  double side() const { return side_; }
  double area() const { return side_ * side_; }

  double wrap(double d) const {
    d = std::abs(d);
    return d > half_ ? side_ - d : d;
  }

  double distance_sq(Point a, Point b) const {
    const double dx = wrap(a.x - b.x);
    const double dy = wrap(a.y - b.y);
    return dx * dx + dy * dy;
  }

  double distance(Point a, Point b) const { return std::sqrt(distance_sq(a, b)); }

  Point uniform_point(Stream& rng) const {
    const double x = rng.uniform(-half_, half_);
    const double y = rng.uniform(-half_, half_);
    return {x, y};
  }

 private:
  double side_;
  double half_;
};

/// HPPP of the given density (per m^2) on the torus.
inline std::vector<Point> sample_hppp(double density, const Torus& torus, Stream& rng) {
  std::vector<Point> pts;
  if (density <= 0.0) return pts;
  const auto count = rng.poisson(density * torus.area());
  pts.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) pts.push_back(torus.uniform_point(rng));
  return pts;
}

/// Index of the nearest BS among those assigned to `band`; every BS counts
/// when `band` is empty or `assignment` is empty. Ties go to the lower index.
inline std::optional<std::size_t> nearest_listening_bs(Point origin, std::span<const Point> bs,
                                                       std::span<const int> assignment,
                                                       std::optional<int> band,
                                                       const Torus& torus) {
  std::optional<std::size_t> best;
  double best_d2 = 0.0;
  for (std::size_t j = 0; j < bs.size(); ++j) {
    if (band && !assignment.empty() && assignment[j] != *band) continue;
    const double d2 = torus.distance_sq(origin, bs[j]);
    if (!best || d2 < best_d2) {
      best = j;
      best_d2 = d2;
    }
  }
  return best;
}

}  // namespace unb
