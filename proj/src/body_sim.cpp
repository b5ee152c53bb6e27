#include "codress/body_sim.hpp"

#include "codress/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace codress::body {

namespace {

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * std::generate_canonical<double, 53>(rng);
}

Mat3 axis_rotation(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

void check_range(const std::array<double, 2>& r, const char* name) {
  if (!(std::isfinite(r[0]) && std::isfinite(r[1])) || r[0] > r[1]) {
    throw ConfigError(std::string("impairment range '") + name + "' is empty or inverted");
  }
}

}  // namespace

VecX ChainModel::q_min() const {
  VecX v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = links[i].joint.q_min;
  return v;
}

VecX ChainModel::q_max() const {
  VecX v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = links[i].joint.q_max;
  return v;
}

VecX ChainModel::torque_limits() const {
  VecX v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = links[i].joint.torque_limit;
  return v;
}

void ChainModel::validate() const {
  for (int i = 0; i < dof(); ++i) {
    const auto& l = links[i];
    if (l.parent >= i) {
      throw ArgumentError(name + ": link " + std::to_string(i) + " has parent index >= own index");
    }
    if (!(l.length > 0.0) || !(l.radius > 0.0)) {
      throw ArgumentError(name + ": link " + std::to_string(i) + " needs positive length and radius");
    }
    const auto& j = l.joint;
    if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
      throw ArgumentError(name + ": joint " + std::to_string(i) + " axis is not unit length");
    }
    if (j.q_min > j.q_max || !(j.torque_limit > 0.0) || j.kp < 0.0 || j.kd < 0.0 ||
        j.damping < 0.0) {
      throw ArgumentError(name + ": joint " + std::to_string(i) + " has invalid limits or gains");
    }
  }
  if (q_rest.size() != dof()) {
    throw ArgumentError(name + ": rest pose size does not match joint count");
  }
}

ChainPose forward_kinematics(const ChainModel& model, const VecX& q) {
  if (q.size() != model.dof()) {
    throw ArgumentError("forward_kinematics: expected " + std::to_string(model.dof()) +
                        " joint angles, got " + std::to_string(q.size()));
  }
  ChainPose pose;
  pose.frames.reserve(model.links.size());
  pose.positions.reserve(model.links.size());
  for (int i = 0; i < model.dof(); ++i) {
    const auto& link = model.links[i];
    const Transform& parent = link.parent < 0 ? model.base : pose.frames[link.parent];
    Transform frame = parent * link.offset;
    frame.linear() = frame.linear() * axis_rotation(link.joint.axis, q[i]);
    pose.frames.push_back(frame);
    pose.positions.push_back(frame.translation());
  }
  if (!model.links.empty()) {
    const auto& last = model.links.back();
    pose.tip = pose.frames.back() * (last.direction * last.length);
  }
  return pose;
}

std::vector<Capsule> link_capsules(const ChainModel& model, const ChainPose& pose) {
  std::vector<Capsule> out;
  for (int i = 0; i < model.dof(); ++i) {
    const auto& link = model.links[i];
    if (link.body < 0) continue;
    Capsule c;
    c.a = pose.frames[i].translation();
    c.b = pose.frames[i] * (link.direction * link.length);
    c.radius = link.radius;
    c.link = i;
    c.body = link.body;
    out.push_back(c);
  }
  return out;
}

PdStep step_pd(const ChainModel& model, const ChainState& state, const VecX& pd_target,
               const VecX& torque_limits, double dt, const VecX& external,
               const VecX& feedforward) {
  const int n = model.dof();
  if (state.q.size() != n || state.qdot.size() != n || pd_target.size() != n ||
      torque_limits.size() != n || (external.size() != 0 && external.size() != n) ||
      (feedforward.size() != 0 && feedforward.size() != n)) {
    throw ArgumentError("step_pd: array sizes do not match joint count");
  }
  if (!(dt > 0.0)) {
    throw ArgumentError("step_pd: dt must be positive");
  }
  if (!all_finite({state.q.data(), static_cast<size_t>(n)}) ||
      !all_finite({state.qdot.data(), static_cast<size_t>(n)}) ||
      !all_finite({pd_target.data(), static_cast<size_t>(n)}) ||
      !all_finite({external.data(), static_cast<size_t>(external.size())}) ||
      !all_finite({feedforward.data(), static_cast<size_t>(feedforward.size())}) || !std::isfinite(dt)) {
    throw NumericError("step_pd: non-finite input");
  }

  PdStep out;
  out.state.q.resize(n);
  out.state.qdot.resize(n);
  out.torque.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& j = model.links[i].joint;
    const double q = state.q[i];
    const double qd = state.qdot[i];
    const double ext = external.size() ? external[i] : 0.0;
    const double ff = feedforward.size() ? feedforward[i] : 0.0;
    const double c = j.kd + j.damping;
    double qdd = (j.kp * (pd_target[i] - q - dt * qd) - c * qd + ff + ext) / (1.0 + dt * c);
    double tau = j.kp * (pd_target[i] - q - dt * qd) - j.kd * (qd + dt * qdd) + ff;
    const double limit = torque_limits[i];
    if (std::abs(tau) > limit) {
      tau = std::clamp(tau, -limit, limit);
      qdd = (tau - j.damping * qd + ext) / (1.0 + dt * j.damping);
    }
    double qd_next = qd + dt * qdd;
    double q_next = q + dt * qd_next;
    if (q_next < j.q_min) {
      q_next = j.q_min;
      qd_next = std::max(qd_next, 0.0);
    } else if (q_next > j.q_max) {
      q_next = j.q_max;
      qd_next = std::min(qd_next, 0.0);
    }
    out.state.q[i] = q_next;
    out.state.qdot[i] = qd_next;
    out.torque[i] = tau;
  }
  return out;
}

VecX point_force_torques(const ChainModel& model, const ChainPose& pose, int link,
                         const Vec3& point, const Vec3& force) {
  VecX tau = VecX::Zero(model.dof());
  for (int j = link; j >= 0; j = model.links[j].parent) {
    const Vec3 axis = pose.frames[j].linear() * model.links[j].joint.axis;
    tau[j] = axis.dot((point - pose.positions[j]).cross(force));
  }
  return tau;
}

VecX gravity_torques(const ChainModel& model, const ChainPose& pose, const Vec3& gravity) {
  VecX tau = VecX::Zero(model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    const auto& link = model.links[i];
    if (link.mass <= 0.0) continue;
    const Vec3 com = pose.frames[i] * (0.5 * link.length * link.direction);
    tau += point_force_torques(model, pose, i, com, link.mass * gravity);
  }
  return tau;
}

// ---------------------------------------------------------------------------

CapabilityVector CapabilityVector::fully_capable(double nominal_min, double nominal_max) {
  return {0.0, nominal_min, nominal_max, 1.0};
}

std::array<double, 4> CapabilityVector::as_array() const {
  return {noise_norm, j_min_sample, j_max_sample, strength_scale};
}

void CapabilityVector::validate() const {
  if (!(noise_norm >= 0.0 && noise_norm <= 1.0) ||
      !(strength_scale > 0.0 && strength_scale <= 1.0) || !(j_min_sample <= j_max_sample)) {
    throw ArgumentError("capability vector out of range");
  }
}

ImpairmentKind parse_impairment(const std::string& name) {
  if (name == "none") return ImpairmentKind::None;
  if (name == "dyskinesia") return ImpairmentKind::Dyskinesia;
  if (name == "limited_rom") return ImpairmentKind::LimitedRom;
  if (name == "weakness") return ImpairmentKind::Weakness;
  throw ConfigError("unknown impairment kind '" + name + "'");
}

std::string impairment_name(ImpairmentKind kind) {
  switch (kind) {
    case ImpairmentKind::None: return "none";
    case ImpairmentKind::Dyskinesia: return "dyskinesia";
    case ImpairmentKind::LimitedRom: return "limited_rom";
    case ImpairmentKind::Weakness: return "weakness";
  }
  return "none";
}

void ImpairmentConfig::validate() const {
  switch (kind) {
    case ImpairmentKind::None:
      break;
    case ImpairmentKind::Dyskinesia:
      check_range(noise_range, "noise_range");
      if (noise_range[0] < 0.0 || noise_range[1] > 1.0) {
        throw ConfigError("impairment range 'noise_range' must lie in [0, 1]");
      }
      break;
    case ImpairmentKind::Weakness:
      check_range(strength_range, "strength_range");
      if (!(strength_range[0] > 0.0) || strength_range[1] > 1.0) {
        throw ConfigError("impairment range 'strength_range' must lie in (0, 1]");
      }
      break;
    case ImpairmentKind::LimitedRom:
      check_range(j_min_range, "j_min_range");
      check_range(j_max_range, "j_max_range");
      if (j_max_range[1] < j_min_range[0]) {
        throw ConfigError("limited range of motion: j_max range lies entirely below j_min range");
      }
      break;
  }
}

CapabilityVector sample_capability(const ImpairmentConfig& cfg, Rng& rng) {
  cfg.validate();
  CapabilityVector cap = CapabilityVector::fully_capable(cfg.nominal_min, cfg.nominal_max);
  switch (cfg.kind) {
    case ImpairmentKind::None:
      break;
    case ImpairmentKind::Dyskinesia:
      cap.noise_norm = uniform(rng, cfg.noise_range[0], cfg.noise_range[1]);
      break;
    case ImpairmentKind::Weakness:
      cap.strength_scale = uniform(rng, cfg.strength_range[0], cfg.strength_range[1]);
      break;
    case ImpairmentKind::LimitedRom: {
      for (int attempt = 0;; ++attempt) {
        if (attempt == 10000) {
          throw ConfigError("limited range of motion: could not sample j_max >= j_min");
        }
        const double lo = uniform(rng, cfg.j_min_range[0], cfg.j_min_range[1]);
        const double hi = uniform(rng, cfg.j_max_range[0], cfg.j_max_range[1]);
        if (hi >= lo) {
          cap.j_min_sample = lo;
          cap.j_max_sample = hi;
          break;
        }
      }
      break;
    }
  }
  return cap;
}

CapabilityEffect apply_capability(const CapabilityVector& cap, const VecX& pd_target,
                                  const ChainModel& model, const ImpairmentSites& sites,
                                  Rng& rng) {
  const int n = model.dof();
  if (pd_target.size() != n) {
    throw ArgumentError("apply_capability: target size does not match joint count");
  }
  for (int j : sites.affected) {
    if (j < 0 || j >= n) throw ArgumentError("apply_capability: affected joint index out of range");
  }
  if (sites.limited_joint >= n) {
    throw ArgumentError("apply_capability: limited joint index out of range");
  }
  cap.validate();

  CapabilityEffect out{pd_target, model.q_min(), model.q_max(), model.torque_limits()};
  if (cap.noise_norm > 0.0) {
    for (int j : sites.affected) {
      const double range = model.links[j].joint.q_max - model.links[j].joint.q_min;
      const double half = cap.noise_norm * kMaxNoiseFraction * range;
      out.pd_target[j] += uniform(rng, -half, half);
    }
  }
  if (sites.limited_joint >= 0) {
    out.q_min[sites.limited_joint] = cap.j_min_sample;
    out.q_max[sites.limited_joint] = cap.j_max_sample;
  }
  for (int j : sites.affected) {
    out.torque_limits[j] *= cap.strength_scale;
  }
  return out;
}

ChainModel with_limits(const ChainModel& model, const VecX& q_min, const VecX& q_max,
                       const VecX& torque_limits) {
  ChainModel m = model;
  for (int i = 0; i < m.dof(); ++i) {
    m.links[i].joint.q_min = q_min[i];
    m.links[i].joint.q_max = q_max[i];
    m.links[i].joint.torque_limit = torque_limits[i];
  }
  return m;
}

// ---------------------------------------------------------------------------

BodyPoint closest_point_on_body(std::span<const Capsule> capsules, const Vec3& point) {
  BodyPoint best;
  best.distance = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < capsules.size(); ++i) {
    const auto& c = capsules[i];
    const Vec3 axis_point = closest_point_on_segment(c.a, c.b, point);
    const Vec3 offset = point - axis_point;
    const double centre_dist = offset.norm();
    BodyPoint candidate;
    candidate.capsule = static_cast<int>(i);
    if (centre_dist <= c.radius) {
      candidate.point = point;
      candidate.distance = 0.0;
    } else {
      candidate.point = axis_point + offset * (c.radius / centre_dist);
      candidate.distance = centre_dist - c.radius;
    }
    if (candidate.distance < best.distance) best = candidate;
  }
  return best;
}

// ---------------------------------------------------------------------------

ChainModel human_arm(const HumanGeometry& g, Side side, int arm_index, double kp, double kd) {
  const double mirror = side == Side::Right ? 1.0 : -1.0;
  Vec3 shoulder = g.shoulder_right;
  shoulder.y() *= mirror;

  auto joint = [&](Vec3 axis, double lo, double hi, double torque) {
    JointSpec j;
    j.axis = axis;
    j.q_min = lo;
    j.q_max = hi;
    j.torque_limit = torque;
    j.kp = kp;
    j.kd = kd;
    j.damping = 0.5;
    return j;
  };

  ChainModel m;
  m.name = side == Side::Right ? "human_right_arm" : "human_left_arm";
  m.base = Transform::Identity();

  ChainLink flex;
  flex.parent = -1;
  flex.offset = make_transform(shoulder);
  flex.joint = joint(-Vec3::UnitY(), -0.6, 2.6, g.shoulder_torque);
  flex.length = g.upper_arm_length;
  flex.radius = g.upper_arm_radius;

  ChainLink abduct = flex;
  abduct.parent = 0;
  abduct.offset = Transform::Identity();
  abduct.joint = joint(-mirror * Vec3::UnitX(), -0.3, 1.6, g.shoulder_torque);

  ChainLink rotate = flex;
  rotate.parent = 1;
  rotate.offset = Transform::Identity();
  rotate.joint = joint(-mirror * Vec3::UnitZ(), -1.3, 1.3, g.shoulder_torque);
  rotate.body = 1 + 2 * arm_index;
  rotate.mass = g.upper_arm_mass;

  ChainLink elbow;
  elbow.parent = 2;
  elbow.offset = make_transform(Vec3(0.0, 0.0, -g.upper_arm_length));
  elbow.joint = joint(-Vec3::UnitY(), 0.0, 2.5, g.elbow_torque);
  elbow.length = g.forearm_length;
  elbow.radius = g.forearm_radius;
  elbow.body = 2 + 2 * arm_index;
  elbow.mass = g.forearm_mass;

  m.links = {flex, abduct, rotate, elbow};
  m.q_rest = VecX(4);
  m.q_rest << 0.4, 0.1, 0.0, 1.3;
  m.validate();
  return m;
}

ChainModel robot_arm(const RobotGeometry& g, double kp, double kd) {
  auto joint = [&](Vec3 axis, double lo, double hi) {
    JointSpec j;
    j.axis = axis;
    j.q_min = lo;
    j.q_max = hi;
    j.torque_limit = g.torque_limit;
    j.kp = kp;
    j.kd = kd;
    j.damping = 0.5;
    return j;
  };
  ChainModel m;
  m.name = "robot_arm";
  m.base = make_transform(g.base_position,
                          Eigen::AngleAxisd(g.base_yaw, Vec3::UnitZ()).toRotationMatrix());

  ChainLink yaw;
  yaw.joint = joint(Vec3::UnitZ(), -2.5, 2.5);
  yaw.direction = Vec3::UnitZ();
  yaw.length = g.shoulder_height;
  yaw.radius = 0.06;

  ChainLink shoulder;
  shoulder.parent = 0;
  shoulder.offset = make_transform(Vec3(0.0, 0.0, g.shoulder_height));
  shoulder.joint = joint(-Vec3::UnitY(), -1.5, 2.2);
  shoulder.direction = Vec3::UnitX();
  shoulder.length = g.upper_length;
  shoulder.radius = 0.05;

  ChainLink elbow = shoulder;
  elbow.parent = 1;
  elbow.offset = make_transform(Vec3(g.upper_length, 0.0, 0.0));
  elbow.joint = joint(-Vec3::UnitY(), -2.8, 2.8);
  elbow.length = g.fore_length;
  elbow.radius = 0.04;

  ChainLink roll = elbow;
  roll.parent = 2;
  roll.offset = make_transform(Vec3(g.fore_length, 0.0, 0.0));
  roll.joint = joint(Vec3::UnitX(), -M_PI, M_PI);
  roll.length = 0.02;
  roll.radius = 0.03;

  ChainLink pitch = roll;
  pitch.parent = 3;
  pitch.offset = Transform::Identity();
  pitch.joint = joint(Vec3::UnitY(), -2.0, 2.0);

  ChainLink tool = roll;
  tool.parent = 4;
  tool.offset = Transform::Identity();
  tool.joint = joint(Vec3::UnitZ(), -M_PI, M_PI);
  tool.length = g.tool_length;

  m.links = {yaw, shoulder, elbow, roll, pitch, tool};
  m.q_rest = VecX::Zero(6);
  m.validate();
  return m;
}

std::optional<VecX> robot_ik(const ChainModel& robot, const RobotGeometry& g,
                             const Transform& target) {
  const Mat3 R = target.linear();
  const Vec3 wrist = target.translation() - R * Vec3(g.tool_length, 0.0, 0.0);
  const Vec3 wb = robot.base.inverse() * wrist;

  const double yaw = std::atan2(wb.y(), wb.x());
  const double r = std::hypot(wb.x(), wb.y());
  const double h = wb.z() - g.shoulder_height;
  const double l1 = g.upper_length;
  const double l2 = g.fore_length;
  const double cos_elbow = (r * r + h * h - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  if (cos_elbow < -1.0 || cos_elbow > 1.0) return std::nullopt;
  const double elbow = -std::acos(cos_elbow);  // elbow above the wrist line
  const double shoulder =
      std::atan2(h, r) - std::atan2(l2 * std::sin(elbow), l1 + l2 * std::cos(elbow));

  const Mat3 r03 = robot.base.linear() * axis_rotation(Vec3::UnitZ(), yaw) *
                   axis_rotation(-Vec3::UnitY(), shoulder) * axis_rotation(-Vec3::UnitY(), elbow);
  const Mat3 rw = r03.transpose() * R;
  const Vec3 e = rw.eulerAngles(0, 1, 2);
  const Vec3 alt(e[0] - M_PI, M_PI - e[1], e[2] - M_PI);

  auto wrap = [](double a) { return std::remainder(a, 2.0 * M_PI); };
  auto assemble = [&](const Vec3& w) {
    VecX q(6);
    q << yaw, shoulder, elbow, wrap(w[0]), wrap(w[1]), wrap(w[2]);
    return q;
  };
  auto within = [&](const VecX& q) {
    for (int i = 0; i < 6; ++i) {
      const auto& j = robot.links[i].joint;
      if (q[i] < j.q_min || q[i] > j.q_max) return false;
    }
    return true;
  };
  VecX a = assemble(e);
  VecX b = assemble(alt);
  const bool ok_a = within(a);
  const bool ok_b = within(b);
  if (ok_a && ok_b) return a.tail<3>().norm() <= b.tail<3>().norm() ? a : b;
  if (ok_a) return a;
  if (ok_b) return b;
  return std::nullopt;
}

}  // namespace codress::body
