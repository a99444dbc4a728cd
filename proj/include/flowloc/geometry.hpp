#pragma once

#include <cmath>
#include <vector>

namespace flowloc {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline Point3 operator+(const Point3& a, const Point3& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}

inline Point3 operator-(const Point3& a, const Point3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

inline Point3 operator*(const Point3& a, double s) {
  return {a.x * s, a.y * s, a.z * s};
}

inline double norm(const Point3& p) {
  return std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
}

inline double distance(const Point3& a, const Point3& b) { return norm(a - b); }

using Polyline = std::vector<Point3>;

/// Sum of segment lengths of a polyline (0 for fewer than 2 vertices).
inline double arc_length(const Polyline& path) {
  double total = 0.0;
  for (size_t i = 1; i < path.size(); ++i) total += distance(path[i - 1], path[i]);
  return total;
}

/// Point at curvilinear offset s along the polyline, clamped to its ends.
Point3 point_at_arc(const Polyline& path, double s);

}  // namespace flowloc
