#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "contdef/vec2.hpp"

namespace contdef {

using Triangle = std::array<Vec2, 3>;

inline double signed_triangle_area(Vec2 a, Vec2 b, Vec2 c) {
  return 0.5 * cross(b - a, c - a);
}

inline double triangle_area(Vec2 a, Vec2 b, Vec2 c) {
  return std::abs(signed_triangle_area(a, b, c));
}

inline Vec2 triangle_centroid(const Triangle& t) {
  return (t[0] + t[1] + t[2]) / 3.0;
}

/// Distance from point p to segment [a, b].
inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 ab = b - a;
  double len2 = ab.squared_norm();
  if (len2 == 0.0) return distance(p, a);
  double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

inline bool point_in_triangle(Vec2 p, const Triangle& t, double tol = 0.0) {
  double s0 = signed_triangle_area(t[0], t[1], p);
  double s1 = signed_triangle_area(t[1], t[2], p);
  double s2 = signed_triangle_area(t[2], t[0], p);
  double orient = signed_triangle_area(t[0], t[1], t[2]) >= 0.0 ? 1.0 : -1.0;
  return orient * s0 >= -tol && orient * s1 >= -tol && orient * s2 >= -tol;
}

/// Distance from p to the triangle boundary, signed positive inside.
inline double signed_boundary_distance(Vec2 p, const Triangle& t) {
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    d = std::min(d, point_segment_distance(p, t[i], t[(i + 1) % 3]));
  }
  return point_in_triangle(p, t) ? d : -d;
}

}  // namespace contdef
