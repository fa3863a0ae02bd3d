#pragma once

#include "multimag/types.hpp"

#include <array>
#include <cmath>

namespace multimag::quad {

struct TriPoint {
  double l1, l2, l3;  ///< barycentric coordinates
  double w;           ///< weight, summing to 1 over the rule
};

/// Symmetric 7-point rule, exact for polynomials of degree 5.
inline const std::array<TriPoint, 7>& triangle7() {
  static const std::array<TriPoint, 7> rule = [] {
    const double s15 = std::sqrt(15.0);
    const double a1 = (9.0 - 2.0 * s15) / 21.0, b1 = (6.0 + s15) / 21.0;
    const double a2 = (9.0 + 2.0 * s15) / 21.0, b2 = (6.0 - s15) / 21.0;
    const double w1 = (155.0 + s15) / 1200.0, w2 = (155.0 - s15) / 1200.0;
    return std::array<TriPoint, 7>{{{1.0 / 3, 1.0 / 3, 1.0 / 3, 9.0 / 40.0},
                                    {a1, b1, b1, w1},
                                    {b1, a1, b1, w1},
                                    {b1, b1, a1, w1},
                                    {a2, b2, b2, w2},
                                    {b2, a2, b2, w2},
                                    {b2, b2, a2, w2}}};
  }();
  return rule;
}

inline Vec3 map_point(const TriPoint& q, const Vec3& a, const Vec3& b, const Vec3& c) {
  return q.l1 * a + q.l2 * b + q.l3 * c;
}

struct TetPoint {
  std::array<double, 4> l;
  double w;
};

/// 4-point rule, exact for polynomials of degree 2.
inline const std::array<TetPoint, 4>& tet4() {
  static const std::array<TetPoint, 4> rule = [] {
    const double a = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
    const double b = (5.0 - std::sqrt(5.0)) / 20.0;
    return std::array<TetPoint, 4>{{{{a, b, b, b}, 0.25}, {{b, a, b, b}, 0.25}, {{b, b, a, b}, 0.25}, {{b, b, b, a}, 0.25}}};
  }();
  return rule;
}

}  // namespace multimag::quad
