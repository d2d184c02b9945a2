#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "contdef/errors.hpp"
#include "contdef/vec2.hpp"

namespace contdef {

/// 2x2 real matrix, row-major.
struct Mat2 {
  double m00 = 1.0, m01 = 0.0;
  double m10 = 0.0, m11 = 1.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

  constexpr double det() const { return m00 * m11 - m01 * m10; }

  constexpr Vec2 operator*(Vec2 v) const {
    return {m00 * v.x + m01 * v.y, m10 * v.x + m11 * v.y};
  }
  constexpr Mat2 operator*(const Mat2& o) const {
    return {m00 * o.m00 + m01 * o.m10, m00 * o.m01 + m01 * o.m11,
            m10 * o.m00 + m11 * o.m10, m10 * o.m01 + m11 * o.m11};
  }
  constexpr Mat2 transposed() const { return {m00, m10, m01, m11}; }
  constexpr bool operator==(const Mat2&) const = default;
};

inline Mat2 rotation(double angle_rad) {
  double c = std::cos(angle_rad), s = std::sin(angle_rad);
  return {c, -s, s, c};
}

/// Solves a 3x3 system A x = b by Cramer's rule. Caller guards det(A).
inline std::array<double, 3> solve3(const std::array<std::array<double, 3>, 3>& a,
                                    const std::array<double, 3>& b) {
  auto det3 = [](const std::array<std::array<double, 3>, 3>& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  double d = det3(a);
  std::array<double, 3> x{};
  for (int col = 0; col < 3; ++col) {
    auto m = a;
    for (int row = 0; row < 3; ++row) m[row][col] = b[row];
    x[col] = det3(m) / d;
  }
  return x;
}

/// Dense Gaussian elimination with partial pivoting for small systems.
/// Throws Error on a (near-)singular matrix.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t row = col + 1; row < n; ++row) {
      if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
    }
    if (std::abs(a[pivot][col]) < 1e-12) {
      throw Error("solve_dense: singular system");
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t row = col + 1; row < n; ++row) {
      double f = a[row][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[row][k] -= f * a[col][k];
      b[row] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

}  // namespace contdef
