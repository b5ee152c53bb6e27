#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <span>
#include <vector>

namespace codress {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Transform = Eigen::Isometry3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Wrench = Eigen::Matrix<double, 6, 1>;

/// Capsule swept by a sphere of `radius` along segment [a, b].
/// `link` is the chain link that carries it, `body` the id used when
/// aggregating contact forces.
struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.0;
  int link = -1;
  int body = -1;
};

/// Parameter t in [0,1] of the point on [a,b] closest to p.
double segment_parameter(const Vec3& a, const Vec3& b, const Vec3& p);

Vec3 closest_point_on_segment(const Vec3& a, const Vec3& b, const Vec3& p);

/// Closest pair between segments [p0,p1] and [q0,q1]; returns (s, t).
std::pair<double, double> closest_segment_params(const Vec3& p0, const Vec3& p1,
                                                 const Vec3& q0, const Vec3& q1);

Transform make_transform(const Vec3& translation, const Mat3& rotation = Mat3::Identity());

bool all_finite(std::span<const double> values);

}  // namespace codress
