#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace conc {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

inline double distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

using PointList = std::vector<Point>;

}  // namespace conc
