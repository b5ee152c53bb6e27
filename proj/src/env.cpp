#include "codress/env.hpp"

#include "codress/errors.hpp"

#include <algorithm>
#include <cmath>

namespace codress::env {

namespace {

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * std::generate_canonical<double, 53>(rng);
}

Vec3 mirror_y(Vec3 v) {
  v.y() = -v.y();
  return v;
}

Transform grip_offset(double tube_radius) {
  // The gripper holds the rim from below; the tube axis points back along the tool axis.
  Transform t = make_transform(Vec3(0.0, 0.0, tube_radius));
  t.rotate(Eigen::AngleAxisd(M_PI, Vec3::UnitZ()));
  return t;
}

Transform hand_frame(const body::ChainPose& pose) {
  Transform h = pose.frames.back();
  h.translation() = pose.tip;
  return h;
}

void append_points(VecX& out, int& k, const body::ChainPose& pose) {
  for (const auto& p : pose.positions) {
    out.segment<3>(k) = p;
    k += 3;
  }
  out.segment<3>(k) = pose.tip;
  k += 3;
}

}  // namespace

TaskKind parse_task(const std::string& name) {
  if (name == "gown-one-arm") return TaskKind::GownOneArm;
  if (name == "gown-two-arms") return TaskKind::GownTwoArms;
  throw ConfigError("unknown task '" + name + "'");
}

std::string task_name(TaskKind kind) {
  return kind == TaskKind::GownOneArm ? "gown-one-arm" : "gown-two-arms";
}

void TaskConfig::validate() const {
  if (horizon < 1) throw ConfigError("task.horizon must be at least 1");
  if (!(policy_rate > 0.0)) throw ConfigError("task.policy_rate must be positive");
  if (substeps < 1) throw ConfigError("task.substeps must be at least 1");
  for (int i = 0; i < 3; ++i) {
    if (!(grip_box_min[i] <= grip_box_max[i])) throw ConfigError("task.grip_box min exceeds max");
  }
  if (!(min_separation >= 0.0 && min_separation <= max_separation)) {
    throw ConfigError("task.separation bounds are inverted");
  }
  if (max_reset_tries < 1) throw ConfigError("task.max_reset_tries must be at least 1");
  weights.validate();
  impairment.validate();
  if (!(force_reference > 0.0)) throw ConfigError("task.force_reference must be positive");
  if (!(action_scale > 0.0 && action_scale <= 1.0)) throw ConfigError("task.action_scale must lie in (0, 1]");
  if (!(max_target_delta > 0.0)) throw ConfigError("task.max_target_delta must be positive");
  if (!(threshold_fraction > 0.0 && threshold_fraction <= 1.0)) {
    throw ConfigError("task.threshold_fraction must lie in (0, 1]");
  }
  if (settle_time < 0.0) throw ConfigError("task.settle_time must be non-negative");
  if (!(gripper_radius > 0.0 && gripper_stiffness > 0.0)) throw ConfigError("task.gripper parameters must be positive");
  if (!(gravity >= 0.0)) throw ConfigError("task.gravity must be non-negative");
  try {
    sleeve.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("sleeve: ") + e.what());
  }
}

Transform DressingEnv::grip_from_end_effector(const Transform& ee, double tube_radius) {
  return ee * grip_offset(tube_radius);
}

Transform DressingEnv::end_effector_from_grip(const Transform& grip, double tube_radius) {
  return grip * grip_offset(tube_radius).inverse();
}

DressingEnv::DressingEnv(TaskConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  action_scale_ = cfg_.action_scale;
  human_layout_ = sensors::human_layout(arms());
  robot_layout_ = sensors::robot_layout(arms(), cfg_.ablation);

  for (int a = 0; a < arms(); ++a) {
    const auto side = a == 0 ? body::Side::Right : body::Side::Left;
    human_models_.push_back(body::human_arm(cfg_.human, side, a, cfg_.human_kp, cfg_.human_kd));
    body::RobotGeometry g = cfg_.robot;
    if (a == 1) g.base_position = mirror_y(g.base_position);
    robot_geoms_.push_back(g);
    robot_models_.push_back(body::robot_arm(g, cfg_.robot_kp, cfg_.robot_kd));
    const auto group = a == 0 ? reward::PoseGroup::RightArm : reward::PoseGroup::LeftArm;
    for (int j = 0; j < sensors::kHumanArmDof; ++j) pose_groups_.push_back(group);
  }
  human_rest_.resize(human_action_dim());
  for (int a = 0; a < arms(); ++a) human_rest_.segment(a * sensors::kHumanArmDof, sensors::kHumanArmDof) = human_models_[a].q_rest;

  // The right arm is the active (impaired) arm; range limits act on its elbow.
  sites_.affected = {0, 1, 2, 3};
  sites_.limited_joint = cfg_.impairment.kind == body::ImpairmentKind::LimitedRom ? 3 : -1;
}

void DressingEnv::set_action_scale(double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) throw ArgumentError("action scale must lie in (0, 1]");
  action_scale_ = scale;
}

Transform DressingEnv::end_effector(int arm) const {
  const auto pose = body::forward_kinematics(robot_models_[arm], robot_states_[arm].q);
  Transform ee = pose.frames.back();
  ee.translation() = pose.tip;
  return ee;
}

Transform DressingEnv::grip_frame(int arm) const {
  return grip_from_end_effector(end_effector(arm), cfg_.sleeve.tube_radius);
}

Vec3 DressingEnv::hand_tip(int arm) const {
  return body::forward_kinematics(human_models_[arm], human_states_[arm].q).tip;
}

std::vector<Capsule> DressingEnv::human_capsules() const {
  std::vector<Capsule> caps{cfg_.human.torso};
  for (int a = 0; a < arms(); ++a) {
    const auto pose = body::forward_kinematics(human_models_[a], human_states_[a].q);
    for (const auto& c : body::link_capsules(human_models_[a], pose)) caps.push_back(c);
  }
  return caps;
}

Observation DressingEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  const int n_arms = arms();
  robot_states_.assign(n_arms, {});
  std::vector<Transform> grips(n_arms);

  bool placed = false;
  for (int attempt = 0; attempt < cfg_.max_reset_tries && !placed; ++attempt) {
    placed = true;
    for (int a = 0; a < n_arms; ++a) {
      Vec3 lo = cfg_.grip_box_min;
      Vec3 hi = cfg_.grip_box_max;
      if (a == 1) {
        lo.y() = -cfg_.grip_box_max.y();
        hi.y() = -cfg_.grip_box_min.y();
      }
      Vec3 p;
      for (int i = 0; i < 3; ++i) p[i] = uniform(rng_, lo[i], hi[i]);
      grips[a] = make_transform(p);
      const Transform ee = end_effector_from_grip(grips[a], cfg_.sleeve.tube_radius);
      const auto q = body::robot_ik(robot_models_[a], robot_geoms_[a], ee);
      if (!q) {
        placed = false;
        break;
      }
      robot_states_[a].q = *q;
      robot_states_[a].qdot = VecX::Zero(sensors::kRobotDof);
    }
    if (placed && n_arms == 2) {
      const double sep = (end_effector(0).translation() - end_effector(1).translation()).norm();
      placed = sep >= cfg_.min_separation && sep <= cfg_.max_separation;
    }
  }
  if (!placed) {
    throw ConfigError("task.grip_box: no reachable grip pose after " +
                      std::to_string(cfg_.max_reset_tries) + " tries");
  }

  capability_ = body::sample_capability(cfg_.impairment, rng_);

  human_states_.assign(n_arms, {});
  for (int a = 0; a < n_arms; ++a) {
    auto& s = human_states_[a];
    s.q = human_models_[a].q_rest;
    s.qdot = VecX::Zero(sensors::kHumanArmDof);
  }
  if (sites_.limited_joint >= 0) {
    double& q = human_states_[0].q[sites_.limited_joint];
    q = std::clamp(q, capability_.j_min_sample, capability_.j_max_sample);
  }
  human_target_ = human_rest_;
  robot_target_.resize(robot_action_dim());
  for (int a = 0; a < n_arms; ++a) robot_target_.segment(a * sensors::kRobotDof, sensors::kRobotDof) = robot_states_[a].q;

  sleeves_.clear();
  for (int a = 0; a < n_arms; ++a) sleeves_.push_back(garment::rest_state(cfg_.sleeve, grip_frame(a)));
  last_ = Substep{};
  last_.reactions.assign(n_arms, Wrench::Zero());
  last_.gripper_forces.assign(n_arms, {});
  const auto caps = human_capsules();
  const int settle_steps = static_cast<int>(std::lround(cfg_.settle_time / cfg_.substep_dt()));
  for (int k = 0; k < settle_steps; ++k) {
    last_.contacts.clear();
    for (int a = 0; a < n_arms; ++a) {
      auto g = garment::step_garment(cfg_.sleeve, sleeves_[a], grip_frame(a), caps, cfg_.substep_dt());
      sleeves_[a] = std::move(g.state);
      last_.reactions[a] = g.reaction;
      last_.contacts.insert(last_.contacts.end(), sleeves_[a].contacts.begin(), sleeves_[a].contacts.end());
    }
  }

  d0_.assign(n_arms, 0.0);
  for (int a = 0; a < n_arms; ++a) d0_[a] = garment::geodesic_distance(cfg_.sleeve, sleeves_[a], hand_tip(a));

  steps_ = 0;
  started_ = true;
  limb_success_.assign(n_arms, false);
  time_to_success_.reset();
  max_force_ = 0.0;
  deformation_sum_ = 0.0;
  last_progress_.assign(n_arms, 0.0);
  const auto reports = measure();
  for (int a = 0; a < n_arms; ++a) last_progress_[a] = reports[a].progress;
  return observe();
}

void DressingEnv::physics_substep(const std::vector<body::ChainModel>& actuated,
                                  const VecX& human_actuated_target,
                                  const VecX& human_torque_limits) {
  const double dt = cfg_.substep_dt();
  const int n_arms = arms();
  const auto caps = human_capsules();

  last_.contacts.clear();
  for (int a = 0; a < n_arms; ++a) {
    const Transform ee = end_effector(a);
    auto g = garment::step_garment(cfg_.sleeve, sleeves_[a],
                                   grip_from_end_effector(ee, cfg_.sleeve.tube_radius), caps, dt);
    sleeves_[a] = std::move(g.state);
    last_.reactions[a] = g.reaction;
    last_.contacts.insert(last_.contacts.end(), sleeves_[a].contacts.begin(), sleeves_[a].contacts.end());

    // Rigid gripper: a sphere at the end-effector origin with penalty contact.
    auto& forces = last_.gripper_forces[a];
    forces.clear();
    const Vec3 centre = ee.translation();
    for (const auto& c : caps) {
      const Vec3 axis_point = closest_point_on_segment(c.a, c.b, centre);
      const Vec3 rel = axis_point - centre;
      const double dist = rel.norm();
      const double depth = cfg_.gripper_radius + c.radius - dist;
      if (depth <= 0.0 || dist <= 1e-12) continue;
      const Vec3 f = cfg_.gripper_stiffness * depth * (rel / dist);
      last_.contacts.push_back({c.body, c.link, f, axis_point});
      forces.push_back({centre + rel * (cfg_.gripper_radius / dist), -f});
    }
  }

  const Vec3 g(0.0, 0.0, -cfg_.gravity);
  for (int a = 0; a < n_arms; ++a) {
    const int off = a * sensors::kHumanArmDof;
    auto& state = human_states_[a];
    const auto pose = body::forward_kinematics(actuated[a], state.q);
    const VecX gravity = body::gravity_torques(actuated[a], pose, g);
    VecX external = gravity;
    for (const auto& c : last_.contacts) {
      if (c.body == 1 + 2 * a || c.body == 2 + 2 * a) {
        external += body::point_force_torques(actuated[a], pose, c.link, c.point, c.force);
      }
    }
    state = body::step_pd(actuated[a], state, human_actuated_target.segment(off, sensors::kHumanArmDof),
                          human_torque_limits.segment(off, sensors::kHumanArmDof), dt, external,
                          -gravity)
                .state;
  }
  for (int a = 0; a < n_arms; ++a) {
    const int off = a * sensors::kRobotDof;
    robot_states_[a] = body::step_pd(robot_models_[a], robot_states_[a],
                                     robot_target_.segment(off, sensors::kRobotDof),
                                     robot_models_[a].torque_limits(), dt)
                           .state;
  }
}

std::vector<garment::ProgressReport> DressingEnv::measure() const {
  const double f_max = garment::aggregate_force_on_human(last_.contacts, human_body_count());
  std::vector<garment::ProgressReport> out(arms());
  for (int a = 0; a < arms(); ++a) {
    const Vec3 tip = hand_tip(a);
    out[a].progress = garment::limb_progress(cfg_.sleeve, sleeves_[a], tip, cfg_.threshold());
    out[a].geodesic = garment::geodesic_distance(cfg_.sleeve, sleeves_[a], tip);
    out[a].max_stretch = garment::deformation(cfg_.sleeve, sleeves_[a]);
    out[a].f_max = f_max;
  }
  return out;
}

StepOutput DressingEnv::step(const VecX& joint_action) {
  if (!started_) throw ArgumentError("step called before reset");
  if (done()) throw ArgumentError("step called on a finished episode");
  if (joint_action.size() != action_dim()) {
    throw ArgumentError("action has " + std::to_string(joint_action.size()) + " values, expected " +
                        std::to_string(action_dim()));
  }
  if (!joint_action.allFinite()) {
    throw NumericError("non-finite action at step " + std::to_string(steps_) + "; episode aborted");
  }

  // Clamp, then scale.
  const double bound = cfg_.max_target_delta * action_scale_;
  const VecX delta = joint_action.cwiseMax(-1.0).cwiseMin(1.0) * bound;
  const int nh = human_action_dim();
  for (int a = 0; a < arms(); ++a) {
    const int ho = a * sensors::kHumanArmDof;
    const int ro = a * sensors::kRobotDof;
    human_target_.segment(ho, sensors::kHumanArmDof) =
        (human_target_.segment(ho, sensors::kHumanArmDof) + delta.segment(ho, sensors::kHumanArmDof))
            .cwiseMax(human_models_[a].q_min())
            .cwiseMin(human_models_[a].q_max());
    robot_target_.segment(ro, sensors::kRobotDof) =
        (robot_target_.segment(ro, sensors::kRobotDof) + delta.segment(nh + ro, sensors::kRobotDof))
            .cwiseMax(robot_models_[a].q_min())
            .cwiseMin(robot_models_[a].q_max());
  }

  // Impairments act on the actuated target and limits only.
  VecX actuated_target = human_target_;
  VecX torque_limits(nh);
  std::vector<body::ChainModel> actuated = human_models_;
  for (int a = 0; a < arms(); ++a) {
    torque_limits.segment(a * sensors::kHumanArmDof, sensors::kHumanArmDof) = human_models_[a].torque_limits();
  }
  {
    const auto effect = body::apply_capability(capability_, human_target_.head(sensors::kHumanArmDof),
                                               human_models_[0], sites_, rng_);
    actuated_target.head(sensors::kHumanArmDof) = effect.pd_target;
    torque_limits.head(sensors::kHumanArmDof) = effect.torque_limits;
    actuated[0] = body::with_limits(human_models_[0], effect.q_min, effect.q_max, effect.torque_limits);
  }

  for (int k = 0; k < cfg_.substeps; ++k) physics_substep(actuated, actuated_target, torque_limits);
  ++steps_;

  StepOutput out;
  out.limbs = measure();
  out.contacts = last_.contacts;
  std::vector<double> progress;
  double worst_stretch = 0.0;
  double geodesic_reward = 0.0;
  out.info.progress = out.limbs.front().progress;
  for (int a = 0; a < arms(); ++a) {
    const auto& r = out.limbs[a];
    progress.push_back(r.progress);
    worst_stretch = std::max(worst_stretch, r.max_stretch);
    geodesic_reward += reward::geodesic_reward(r.geodesic, d0_[a]) / arms();
    out.info.progress = std::min(out.info.progress, r.progress);
    out.info.geodesic = std::max(out.info.geodesic, r.geodesic);
    if (r.progress >= 1.0) limb_success_[a] = true;
    last_progress_[a] = r.progress;
  }
  out.info.max_stretch = worst_stretch;
  out.info.f_max = out.limbs.front().f_max;

  reward::RewardBreakdown parts;
  parts.r_p = reward::progress_reward(progress);
  parts.r_d = reward::deformation_penalty(worst_stretch, cfg_.deformation_slack);
  parts.r_g = geodesic_reward;
  parts.r_c = cfg_.force_penalty == reward::ForcePenalty::Tanh
                  ? reward::perceived_force_penalty(out.info.f_max, cfg_.weights.w_mid, cfg_.weights.w_scale)
                  : reward::linear_force_penalty(out.info.f_max, cfg_.force_reference);
  VecX q(nh);
  for (int a = 0; a < arms(); ++a) q.segment(a * sensors::kHumanArmDof, sensors::kHumanArmDof) = human_states_[a].q;
  parts.r_r = reward::rest_pose_penalty(q, human_rest_, pose_groups_, cfg_.weights.w5).per_group;
  out.reward = reward::total_reward(parts, cfg_.weights);

  max_force_ = std::max(max_force_, out.info.f_max);
  deformation_sum_ += worst_stretch;
  if (!time_to_success_ && std::all_of(limb_success_.begin(), limb_success_.end(), [](bool b) { return b; })) {
    time_to_success_ = steps_ / cfg_.policy_rate;
  }
  out.done = done();
  out.obs = observe();
  return out;
}

EpisodeResult DressingEnv::result() const {
  EpisodeResult r;
  r.limb_success = limb_success_;
  r.success = !limb_success_.empty() &&
              std::all_of(limb_success_.begin(), limb_success_.end(), [](bool b) { return b; });
  r.time_to_success = time_to_success_;
  r.max_force = max_force_;
  r.mean_deformation = steps_ > 0 ? deformation_sum_ / steps_ : 0.0;
  double sum = 0.0;
  for (double p : last_progress_) sum += p;
  r.final_progress = last_progress_.empty() ? 0.0 : sum / last_progress_.size();
  r.steps = steps_;
  return r;
}

Observation DressingEnv::observe() const {
  const int n_arms = arms();
  std::vector<body::ChainPose> human_poses;
  std::vector<body::ChainPose> robot_poses;
  for (int a = 0; a < n_arms; ++a) {
    human_poses.push_back(body::forward_kinematics(human_models_[a], human_states_[a].q));
    robot_poses.push_back(body::forward_kinematics(robot_models_[a], robot_states_[a].q));
  }

  VecX human_points(3 * sensors::kHumanPointsPerArm * n_arms);
  VecX robot_points(3 * sensors::kRobotPointsPerArm * n_arms);
  int k = 0;
  for (const auto& p : human_poses) append_points(human_points, k, p);
  k = 0;
  for (const auto& p : robot_poses) append_points(robot_points, k, p);

  sensors::HumanObservationInputs h;
  h.q.resize(human_action_dim());
  h.qdot.resize(human_action_dim());
  h.garment.resize(6 * n_arms);
  h.task.resize(2 * n_arms);
  for (int a = 0; a < n_arms; ++a) {
    h.q.segment(a * sensors::kHumanArmDof, sensors::kHumanArmDof) = human_states_[a].q;
    h.qdot.segment(a * sensors::kHumanArmDof, sensors::kHumanArmDof) = human_states_[a].qdot;
    const auto& x = sleeves_[a].positions;
    const Vec3 axis = (x[1] - x[0]).normalized();
    h.garment.segment<6>(6 * a) = sensors::garment_feature(hand_frame(human_poses[a]), x[0], axis);
    h.task[2 * a] = cfg_.threshold();
    h.task[2 * a + 1] = last_progress_.empty() ? 0.0 : last_progress_[a];
  }
  std::vector<Vec3> per_body(human_body_count(), Vec3::Zero());
  for (const auto& c : last_.contacts) per_body[c.body] += c.force;
  h.haptics.resize(human_body_count());
  for (int b = 0; b < human_body_count(); ++b) h.haptics[b] = per_body[b].norm();
  h.joint_positions.resize(human_points.size() + robot_points.size());
  h.joint_positions << human_points, robot_points;
  h.target = human_target_;
  const auto cap = capability_.as_array();
  h.capability = Eigen::Map<const VecX>(cap.data(), cap.size());

  const auto caps = human_capsules();
  std::vector<sensors::RobotArmInputs> r(n_arms);
  for (int a = 0; a < n_arms; ++a) {
    Transform ee = robot_poses[a].frames.back();
    ee.translation() = robot_poses[a].tip;
    const Transform grip = grip_from_end_effector(ee, cfg_.sleeve.tube_radius);
    r[a].q = robot_states_[a].q;
    r[a].qdot = robot_states_[a].qdot;
    r[a].force_torque = sensors::force_torque_reading(ee, grip.translation(), last_.reactions[a],
                                                      last_.gripper_forces[a]);
    r[a].capacitive = sensors::capacitive_reading(sensors::capacitive_grid(ee), caps);
    r[a].joint_positions = robot_points.segment(3 * sensors::kRobotPointsPerArm * a, 3 * sensors::kRobotPointsPerArm);
    r[a].target = robot_target_.segment(a * sensors::kRobotDof, sensors::kRobotDof);
  }

  Observation o;
  o.human = sensors::build_observation_human(h, human_layout_, cfg_.scales);
  o.robot = sensors::build_observation_robot(r, human_points, robot_layout_, cfg_.scales);
  return o;
}

// ---------------------------------------------------------------------------

ScriptedInserter::ScriptedInserter(double speed, double overshoot) : speed_(speed), overshoot_(overshoot) {
  if (!(speed > 0.0)) throw ArgumentError("scripted inserter speed must be positive");
}

void ScriptedInserter::reset(const DressingEnv& env) {
  path_.assign(env.arms(), -0.05);
}

VecX ScriptedInserter::act(const DressingEnv& env) {
  if (static_cast<int>(path_.size()) != env.arms()) reset(env);
  const auto& cfg = env.config();
  VecX action = VecX::Zero(env.action_dim());
  const double bound = cfg.max_target_delta * env.action_scale();
  const double end = cfg.threshold() + overshoot_;
  for (int a = 0; a < env.arms(); ++a) {
    path_[a] = std::min(path_[a] + speed_ * env.action_scale() / cfg.policy_rate, end);
    const auto pose = body::forward_kinematics(env.human_model(a), env.human_state(a).q);
    const Vec3 elbow = pose.positions.back();
    const Vec3 dir = (pose.tip - elbow).normalized();
    const Vec3 opening = pose.tip - dir * path_[a];
    Transform grip = make_transform(opening, Eigen::Quaterniond::FromTwoVectors(Vec3::UnitX(), dir).toRotationMatrix());
    const Transform ee = DressingEnv::end_effector_from_grip(grip, cfg.sleeve.tube_radius);
    const auto q = body::robot_ik(env.robot_model(a), env.robot_geometry(a), ee);
    if (!q) continue;
    const VecX current = env.robot_target().segment(a * sensors::kRobotDof, sensors::kRobotDof);
    action.segment(env.human_action_dim() + a * sensors::kRobotDof, sensors::kRobotDof) =
        ((*q - current) / bound).cwiseMax(-1.0).cwiseMin(1.0);
  }
  return action;
}

}  // namespace codress::env
