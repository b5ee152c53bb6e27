#pragma once

#include "codress/body_sim.hpp"
#include "codress/geometry.hpp"

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace codress::sensors {

struct Field {
  std::string name;
  int offset = 0;
  int length = 0;
};

/// Named, disjoint slices tiling a flat observation vector.
class ObservationLayout {
 public:
  void add(const std::string& name, int length);

  [[nodiscard]] int size() const { return size_; }
  [[nodiscard]] const std::vector<Field>& fields() const { return fields_; }
  [[nodiscard]] bool has(const std::string& name) const;
  [[nodiscard]] const Field& field(const std::string& name) const;

 private:
  std::vector<Field> fields_;
  int size_ = 0;
};

using FieldValues = std::map<std::string, VecX>;

VecX pack(const ObservationLayout& layout, const FieldValues& values);
FieldValues unpack(const ObservationLayout& layout, const VecX& flat);

struct AblationFlags {
  bool drop_capacitive = false;
  bool drop_human_joint_positions = false;
};

inline constexpr int kCapacitiveCount = 6;
inline constexpr double kCapacitiveRange = 0.15;
inline constexpr int kHumanArmDof = 4;
inline constexpr int kRobotDof = 6;
inline constexpr int kHumanPointsPerArm = kHumanArmDof + 1;  // joint origins + hand tip
inline constexpr int kRobotPointsPerArm = kRobotDof + 1;     // joint origins + tool tip
inline constexpr int kCapabilitySize = 4;

/// Human observation schema for a task with `arms` dressed arms (and as many robots).
ObservationLayout human_layout(int arms);

/// Robot observation schema. Ablated slices are removed, not zero-filled.
/// Never contains the capability vector.
ObservationLayout robot_layout(int arms, const AblationFlags& flags);

/// Fixed per-field multipliers applied when packing observations.
struct ObservationScales {
  double position = 1.0;
  double velocity = 0.1;
  double force = 0.02;
  double torque = 0.1;
  double capacitive = 1.0 / kCapacitiveRange;
  double haptic = 0.02;
};

/// 2x3 grid of capacitive sensor points on the gripper face (4 cm x 6 cm,
/// normal along the tool axis).
std::array<Vec3, kCapacitiveCount> capacitive_grid(const Transform& end_effector);

std::array<double, kCapacitiveCount> capacitive_reading(
    const std::array<Vec3, kCapacitiveCount>& sensors, std::span<const Capsule> human);

/// Force applied to the end effector at a world point.
struct PointForce {
  Vec3 point = Vec3::Zero();
  Vec3 force = Vec3::Zero();
};

/// Sum of the garment reaction wrench (about `grip_point`) and rigid contact
/// forces, expressed in the end-effector frame about its origin.
Wrench force_torque_reading(const Transform& end_effector, const Vec3& grip_point,
                            const Wrench& garment_reaction, std::span<const PointForce> contacts);

/// Sleeve opening centre and axis expressed in the hand frame (6 values).
Eigen::Matrix<double, 6, 1> garment_feature(const Transform& hand, const Vec3& opening,
                                            const Vec3& axis);

struct HumanObservationInputs {
  VecX q;               // all human DOFs, arm-major
  VecX qdot;
  VecX haptics;         // per-body contact force magnitudes
  VecX garment;         // 6 per arm
  VecX task;            // (threshold arclength, progress) per arm
  VecX joint_positions; // human points then robot points, xyz-flattened
  VecX target;          // previous un-noised PD target
  VecX capability;      // 4
};

VecX build_observation_human(const HumanObservationInputs& in, const ObservationLayout& layout,
                             const ObservationScales& scales);

struct RobotArmInputs {
  VecX q;
  VecX qdot;
  Wrench force_torque = Wrench::Zero();
  std::array<double, kCapacitiveCount> capacitive{};
  VecX joint_positions;  // this robot's points
  VecX target;
};

VecX build_observation_robot(std::span<const RobotArmInputs> arms,
                             const VecX& human_joint_positions, const ObservationLayout& layout,
                             const ObservationScales& scales);

}  // namespace codress::sensors
