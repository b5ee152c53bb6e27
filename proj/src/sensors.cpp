#include "codress/sensors.hpp"

#include "codress/errors.hpp"

#include <algorithm>

namespace codress::sensors {

void ObservationLayout::add(const std::string& name, int length) {
  if (has(name)) throw LayoutError("duplicate observation field '" + name + "'");
  if (length <= 0) throw LayoutError("observation field '" + name + "' must have positive length");
  fields_.push_back({name, size_, length});
  size_ += length;
}

bool ObservationLayout::has(const std::string& name) const {
  return std::any_of(fields_.begin(), fields_.end(), [&](const Field& f) { return f.name == name; });
}

const Field& ObservationLayout::field(const std::string& name) const {
  for (const auto& f : fields_) {
    if (f.name == name) return f;
  }
  throw LayoutError("observation layout has no field '" + name + "'");
}

VecX pack(const ObservationLayout& layout, const FieldValues& values) {
  VecX flat(layout.size());
  for (const auto& f : layout.fields()) {
    auto it = values.find(f.name);
    if (it == values.end()) throw LayoutError("missing value for field '" + f.name + "'");
    if (it->second.size() != f.length) {
      throw LayoutError("field '" + f.name + "' expects " + std::to_string(f.length) +
                        " values, got " + std::to_string(it->second.size()));
    }
    flat.segment(f.offset, f.length) = it->second;
  }
  if (values.size() != layout.fields().size()) {
    throw LayoutError("values contain fields not present in the layout");
  }
  return flat;
}

FieldValues unpack(const ObservationLayout& layout, const VecX& flat) {
  if (flat.size() != layout.size()) {
    throw LayoutError("observation length " + std::to_string(flat.size()) +
                      " does not match layout size " + std::to_string(layout.size()));
  }
  FieldValues out;
  for (const auto& f : layout.fields()) out[f.name] = flat.segment(f.offset, f.length);
  return out;
}

ObservationLayout human_layout(int arms) {
  if (arms < 1 || arms > 2) throw LayoutError("human layout supports one or two arms");
  ObservationLayout l;
  l.add("human_q", kHumanArmDof * arms);
  l.add("human_qdot", kHumanArmDof * arms);
  l.add("haptics", 1 + 2 * arms);
  l.add("garment_feature", 6 * arms);
  l.add("task", 2 * arms);
  l.add("joint_positions", 3 * (kHumanPointsPerArm + kRobotPointsPerArm) * arms);
  l.add("target", kHumanArmDof * arms);
  l.add("capability", kCapabilitySize);
  return l;
}

ObservationLayout robot_layout(int arms, const AblationFlags& flags) {
  if (arms < 1 || arms > 2) throw LayoutError("robot layout supports one or two arms");
  ObservationLayout l;
  for (int k = 0; k < arms; ++k) {
    const std::string p = "robot" + std::to_string(k) + "_";
    l.add(p + "q", kRobotDof);
    l.add(p + "qdot", kRobotDof);
    l.add(p + "force_torque", 6);
    if (!flags.drop_capacitive) l.add(p + "capacitive", kCapacitiveCount);
    l.add(p + "joint_positions", 3 * kRobotPointsPerArm);
    l.add(p + "target", kRobotDof);
  }
  if (!flags.drop_human_joint_positions) {
    l.add("human_joint_positions", 3 * kHumanPointsPerArm * arms);
  }
  return l;
}

std::array<Vec3, kCapacitiveCount> capacitive_grid(const Transform& end_effector) {
  std::array<Vec3, kCapacitiveCount> pts;
  int k = 0;
  for (double y : {-0.02, 0.02}) {
    for (double z : {-0.03, 0.0, 0.03}) {
      pts[k++] = end_effector * Vec3(0.0, y, z);
    }
  }
  return pts;
}

std::array<double, kCapacitiveCount> capacitive_reading(
    const std::array<Vec3, kCapacitiveCount>& sensors, std::span<const Capsule> human) {
  std::array<double, kCapacitiveCount> out{};
  for (int i = 0; i < kCapacitiveCount; ++i) {
    const double d = human.empty() ? kCapacitiveRange
                                   : body::closest_point_on_body(human, sensors[i]).distance;
    out[i] = std::clamp(d, 0.0, kCapacitiveRange);
  }
  return out;
}

Wrench force_torque_reading(const Transform& end_effector, const Vec3& grip_point,
                            const Wrench& garment_reaction, std::span<const PointForce> contacts) {
  const Vec3 origin = end_effector.translation();
  Vec3 force = garment_reaction.head<3>();
  Vec3 torque = garment_reaction.tail<3>() + (grip_point - origin).cross(force);
  for (const auto& c : contacts) {
    force += c.force;
    torque += (c.point - origin).cross(c.force);
  }
  const Mat3 Rt = end_effector.linear().transpose();
  Wrench out;
  out.head<3>() = Rt * force;
  out.tail<3>() = Rt * torque;
  return out;
}

Eigen::Matrix<double, 6, 1> garment_feature(const Transform& hand, const Vec3& opening,
                                            const Vec3& axis) {
  Eigen::Matrix<double, 6, 1> f;
  const Mat3 Rt = hand.linear().transpose();
  f.head<3>() = Rt * (opening - hand.translation());
  f.tail<3>() = Rt * axis;
  return f;
}

VecX build_observation_human(const HumanObservationInputs& in, const ObservationLayout& layout,
                             const ObservationScales& s) {
  FieldValues v;
  v["human_q"] = in.q;
  v["human_qdot"] = in.qdot * s.velocity;
  v["haptics"] = in.haptics * s.haptic;
  v["garment_feature"] = in.garment * s.position;
  v["task"] = in.task;
  v["joint_positions"] = in.joint_positions * s.position;
  v["target"] = in.target;
  v["capability"] = in.capability;
  return pack(layout, v);
}

VecX build_observation_robot(std::span<const RobotArmInputs> arms,
                             const VecX& human_joint_positions, const ObservationLayout& layout,
                             const ObservationScales& s) {
  FieldValues v;
  for (size_t k = 0; k < arms.size(); ++k) {
    const auto& a = arms[k];
    const std::string p = "robot" + std::to_string(k) + "_";
    v[p + "q"] = a.q;
    v[p + "qdot"] = a.qdot * s.velocity;
    VecX ft(6);
    ft.head<3>() = a.force_torque.head<3>() * s.force;
    ft.tail<3>() = a.force_torque.tail<3>() * s.torque;
    v[p + "force_torque"] = ft;
    if (layout.has(p + "capacitive")) {
      VecX c(kCapacitiveCount);
      for (int i = 0; i < kCapacitiveCount; ++i) c[i] = a.capacitive[i] * s.capacitive;
      v[p + "capacitive"] = c;
    }
    v[p + "joint_positions"] = a.joint_positions * s.position;
    v[p + "target"] = a.target;
  }
  if (layout.has("human_joint_positions")) {
    v["human_joint_positions"] = human_joint_positions * s.position;
  }
  return pack(layout, v);
}

}  // namespace codress::sensors
