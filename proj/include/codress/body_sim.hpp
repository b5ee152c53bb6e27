#pragma once

#include "codress/geometry.hpp"

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace codress {

using Rng = std::mt19937_64;

namespace body {

struct JointSpec {
  Vec3 axis = Vec3::UnitZ();
  double q_min = -M_PI;
  double q_max = M_PI;
  double torque_limit = 100.0;
  double kp = 100.0;
  double kd = 20.0;
  double damping = 0.0;  // passive, N·m·s/rad
};

/// One revolute DOF. The joint frame is parent_frame * offset * Rot(axis, q);
/// the link capsule runs from the joint origin along `direction * length`.
/// Links with body < 0 carry no collision capsule (e.g. the inner DOFs of a
/// ball-like shoulder).
struct ChainLink {
  int parent = -1;
  Transform offset = Transform::Identity();
  JointSpec joint;
  Vec3 direction = -Vec3::UnitZ();
  double length = 0.1;
  double radius = 0.05;
  int body = -1;
  double mass = 0.0;  // point mass at the capsule midpoint, used for gravity loads
};

struct ChainModel {
  std::string name;
  std::vector<ChainLink> links;
  Transform base = Transform::Identity();
  VecX q_rest;

  [[nodiscard]] int dof() const { return static_cast<int>(links.size()); }
  [[nodiscard]] VecX q_min() const;
  [[nodiscard]] VecX q_max() const;
  [[nodiscard]] VecX torque_limits() const;

  /// Throws ArgumentError when the tree ordering, geometry or joint specs are invalid.
  void validate() const;
};

struct ChainState {
  VecX q;
  VecX qdot;
};

struct ChainPose {
  std::vector<Transform> frames;   // world frame of each joint (after its rotation)
  std::vector<Vec3> positions;     // joint origins
  Vec3 tip = Vec3::Zero();         // far end of the last link
};

ChainPose forward_kinematics(const ChainModel& model, const VecX& q);

/// Collision capsules of every link with body >= 0.
std::vector<Capsule> link_capsules(const ChainModel& model, const ChainPose& pose);

struct PdStep {
  ChainState state;
  VecX torque;  // applied (clamped) PD torque
};

/// Stable PD step with unit joint-space inertia:
///   tau = clamp(kp (target - q - dt qdot) - kd (qdot + dt qddot), +-limit)
/// followed by semi-implicit Euler and clamp-and-stop joint limits.
/// `external` adds generalized forces (gravity, contact); `feedforward` is added
/// to the actuator torque before clamping. Both may be empty.
PdStep step_pd(const ChainModel& model, const ChainState& state, const VecX& pd_target,
               const VecX& torque_limits, double dt, const VecX& external = VecX(),
               const VecX& feedforward = VecX());

/// Generalized force J^T f of a world force applied at `point` on `link`.
VecX point_force_torques(const ChainModel& model, const ChainPose& pose, int link,
                         const Vec3& point, const Vec3& force);

/// Generalized gravity load of the link point masses.
VecX gravity_torques(const ChainModel& model, const ChainPose& pose, const Vec3& gravity);

// ---------------------------------------------------------------------------
// Capability (impairment) models

struct CapabilityVector {
  double noise_norm = 0.0;  // n_max / 15
  double j_min_sample = 0.0;
  double j_max_sample = 0.0;
  double strength_scale = 1.0;

  static CapabilityVector fully_capable(double nominal_min, double nominal_max);
  [[nodiscard]] std::array<double, 4> as_array() const;
  void validate() const;
};

enum class ImpairmentKind { None, Dyskinesia, LimitedRom, Weakness };

ImpairmentKind parse_impairment(const std::string& name);
std::string impairment_name(ImpairmentKind kind);

struct ImpairmentConfig {
  ImpairmentKind kind = ImpairmentKind::None;
  std::array<double, 2> noise_range{0.0, 1.0};     // normalized n_max
  std::array<double, 2> strength_range{0.1, 0.6};
  std::array<double, 2> j_min_range{0.0, 1.25};
  std::array<double, 2> j_max_range{1.25, 2.5};
  double nominal_min = 0.0;  // nominal limits of the range-limited joint
  double nominal_max = 2.5;

  /// Ranges of the active impairment kind must be ordered and in bounds.
  void validate() const;
};

/// Maximum noise as a fraction of a DOF's range when noise_norm = 1.
inline constexpr double kMaxNoiseFraction = 0.15;

CapabilityVector sample_capability(const ImpairmentConfig& cfg, Rng& rng);

/// Which DOFs an impairment acts on.
struct ImpairmentSites {
  std::vector<int> affected;  // noise and strength scaling
  int limited_joint = -1;     // joint whose limits are replaced
};

struct CapabilityEffect {
  VecX pd_target;
  VecX q_min;
  VecX q_max;
  VecX torque_limits;
};

/// Applies the three impairment modifiers to the actuated target and limits.
/// The caller's policy-visible target is never touched.
CapabilityEffect apply_capability(const CapabilityVector& cap, const VecX& pd_target,
                                  const ChainModel& model, const ImpairmentSites& sites,
                                  Rng& rng);

/// Copy of `model` with joint limits and torque limits replaced.
ChainModel with_limits(const ChainModel& model, const VecX& q_min, const VecX& q_max,
                       const VecX& torque_limits);

// ---------------------------------------------------------------------------
// Proximity

struct BodyPoint {
  Vec3 point = Vec3::Zero();
  double distance = 0.0;
  int capsule = -1;
};

BodyPoint closest_point_on_body(std::span<const Capsule> capsules, const Vec3& point);

// ---------------------------------------------------------------------------
// Reduced human and robot models

enum class Side { Right, Left };

struct HumanGeometry {
  Vec3 shoulder_right{0.0, -0.19, 1.40};
  double upper_arm_length = 0.29;
  double forearm_length = 0.30;
  double upper_arm_radius = 0.045;
  double forearm_radius = 0.04;
  double upper_arm_mass = 2.0;
  double forearm_mass = 1.5;
  double shoulder_torque = 16.0;
  double elbow_torque = 10.0;
  Capsule torso{Vec3(0.0, 0.0, 0.95), Vec3(0.0, 0.0, 1.40), 0.12, -1, 0};
};

/// 4-DOF arm: shoulder flexion, abduction, rotation, elbow flexion.
/// Body ids: 1 + 2*arm for the upper arm, 2 + 2*arm for the forearm.
ChainModel human_arm(const HumanGeometry& g, Side side, int arm_index, double kp, double kd);

struct RobotGeometry {
  Vec3 base_position{1.0, -0.35, 0.85};
  double base_yaw = M_PI;  // facing the human (-x)
  double shoulder_height = 0.2;
  double upper_length = 0.4;
  double fore_length = 0.4;
  double tool_length = 0.1;
  double torque_limit = 100.0;
};

/// 6-DOF arm: base yaw, shoulder pitch, elbow pitch, wrist roll/pitch/yaw.
/// The tool axis is the end-effector frame's +x.
ChainModel robot_arm(const RobotGeometry& g, double kp, double kd);

/// Closed-form placement of the end effector at `target` (wrist center from a
/// 2-link planar solve, wrist angles from an XYZ Euler decomposition).
/// Returns nullopt when unreachable or outside joint limits.
std::optional<VecX> robot_ik(const ChainModel& robot, const RobotGeometry& g,
                             const Transform& target);

}  // namespace body
}  // namespace codress
