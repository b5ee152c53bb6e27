#include "codress/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace codress {

double segment_parameter(const Vec3& a, const Vec3& b, const Vec3& p) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) {
    return 0.0;
  }
  return std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
}

Vec3 closest_point_on_segment(const Vec3& a, const Vec3& b, const Vec3& p) {
  return a + segment_parameter(a, b, p) * (b - a);
}

std::pair<double, double> closest_segment_params(const Vec3& p0, const Vec3& p1,
                                                 const Vec3& q0, const Vec3& q1) {
  // Ericson, Real-Time Collision Detection, 5.1.9.
  const Vec3 d1 = p1 - p0;
  const Vec3 d2 = q1 - q0;
  const Vec3 r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  constexpr double eps = 1e-18;
  double s = 0.0;
  double t = 0.0;
  if (a <= eps && e <= eps) {
    return {0.0, 0.0};
  }
  if (a <= eps) {
    return {0.0, std::clamp(f / e, 0.0, 1.0)};
  }
  const double c = d1.dot(r);
  if (e <= eps) {
    return {std::clamp(-c / a, 0.0, 1.0), 0.0};
  }
  const double b = d1.dot(d2);
  const double denom = a * e - b * b;
  s = denom > eps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
  t = (b * s + f) / e;
  if (t < 0.0) {
    t = 0.0;
    s = std::clamp(-c / a, 0.0, 1.0);
  } else if (t > 1.0) {
    t = 1.0;
    s = std::clamp((b - c) / a, 0.0, 1.0);
  }
  return {s, t};
}

Transform make_transform(const Vec3& translation, const Mat3& rotation) {
  Transform t = Transform::Identity();
  t.linear() = rotation;
  t.translation() = translation;
  return t;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace codress
