#pragma once

#include "codress/body_sim.hpp"
#include "codress/garment.hpp"
#include "codress/reward.hpp"
#include "codress/sensors.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace codress::env {

enum class TaskKind { GownOneArm, GownTwoArms };

TaskKind parse_task(const std::string& name);
std::string task_name(TaskKind kind);

struct TaskConfig {
  TaskKind task = TaskKind::GownOneArm;
  int horizon = 150;           // policy steps per episode
  double policy_rate = 100.0;  // Hz
  int substeps = 4;            // physics substeps per policy step

  // Sleeve-opening sample box for the right arm; the left arm uses its mirror image.
  Vec3 grip_box_min{0.50, -0.30, 1.08};
  Vec3 grip_box_max{0.62, -0.14, 1.26};
  double min_separation = 0.1;  // between robot end effectors (two-arm task)
  double max_separation = 0.5;
  int max_reset_tries = 100;

  body::ImpairmentConfig impairment;
  reward::RewardWeights weights = reward::weight_preset("gown-one-arm");
  reward::ForcePenalty force_penalty = reward::ForcePenalty::Tanh;
  double force_reference = 50.0;  // N, linear penalty scale
  double deformation_slack = 1.05;

  double action_scale = 1.0;
  double max_target_delta = 0.04;  // rad per policy step before scaling

  double threshold_fraction = 0.6;  // success threshold as a fraction of sleeve length
  double settle_time = 0.5;         // s of garment-only stepping after placement

  garment::SleeveModel sleeve;
  body::HumanGeometry human;
  body::RobotGeometry robot;
  double human_kp = 100.0;
  double human_kd = 20.0;
  double robot_kp = 100.0;
  double robot_kd = 20.0;
  double gravity = 9.81;  // on the human arms; a capable human compensates it

  double gripper_radius = 0.03;
  double gripper_stiffness = 2000.0;

  sensors::AblationFlags ablation;
  sensors::ObservationScales scales;

  [[nodiscard]] int arms() const { return task == TaskKind::GownOneArm ? 1 : 2; }
  [[nodiscard]] double threshold() const { return threshold_fraction * sleeve.length(); }
  [[nodiscard]] double substep_dt() const { return 1.0 / (policy_rate * substeps); }
  void validate() const;
};

struct Observation {
  VecX human;
  VecX robot;
};

struct StepOutput {
  Observation obs;
  reward::RewardBreakdown reward;
  bool done = false;
  std::vector<garment::ProgressReport> limbs;  // one per dressed arm
  garment::ProgressReport info;                // worst limb progress, max stretch, f_max
  std::vector<garment::ContactRecord> contacts;
};

struct EpisodeResult {
  std::vector<bool> limb_success;
  bool success = false;  // every limb passed the threshold
  std::optional<double> time_to_success;
  double max_force = 0.0;
  double mean_deformation = 0.0;
  double final_progress = 0.0;  // mean over limbs
  int steps = 0;
};

/// Reduced assisted-dressing episode: one or two human arms, as many robots
/// and sleeves. The joint action is (human action, robot action); each is a
/// normalized change of the PD targets, arm-major.
class DressingEnv {
 public:
  explicit DressingEnv(TaskConfig cfg);

  [[nodiscard]] const TaskConfig& config() const { return cfg_; }
  [[nodiscard]] int arms() const { return cfg_.arms(); }
  [[nodiscard]] int human_action_dim() const { return sensors::kHumanArmDof * arms(); }
  [[nodiscard]] int robot_action_dim() const { return sensors::kRobotDof * arms(); }
  [[nodiscard]] int action_dim() const { return human_action_dim() + robot_action_dim(); }
  [[nodiscard]] const sensors::ObservationLayout& human_layout() const { return human_layout_; }
  [[nodiscard]] const sensors::ObservationLayout& robot_layout() const { return robot_layout_; }
  [[nodiscard]] int human_body_count() const { return 1 + 2 * arms(); }

  /// Action scale applied by step(); defaults to the config value.
  void set_action_scale(double scale);
  [[nodiscard]] double action_scale() const { return action_scale_; }

  Observation reset(std::uint64_t seed);
  StepOutput step(const VecX& joint_action);

  [[nodiscard]] bool done() const { return steps_ >= cfg_.horizon; }
  [[nodiscard]] int step_count() const { return steps_; }
  [[nodiscard]] EpisodeResult result() const;

  // State access for controllers and tests.
  [[nodiscard]] const body::ChainModel& human_model(int arm) const { return human_models_[arm]; }
  [[nodiscard]] const body::ChainModel& robot_model(int arm) const { return robot_models_[arm]; }
  [[nodiscard]] const body::RobotGeometry& robot_geometry(int arm) const { return robot_geoms_[arm]; }
  [[nodiscard]] const body::ChainState& human_state(int arm) const { return human_states_[arm]; }
  [[nodiscard]] const body::ChainState& robot_state(int arm) const { return robot_states_[arm]; }
  [[nodiscard]] const garment::SleeveState& sleeve_state(int arm) const { return sleeves_[arm]; }
  [[nodiscard]] const VecX& human_target() const { return human_target_; }
  [[nodiscard]] const VecX& robot_target() const { return robot_target_; }
  [[nodiscard]] const body::CapabilityVector& capability() const { return capability_; }
  [[nodiscard]] Transform end_effector(int arm) const;
  [[nodiscard]] Transform grip_frame(int arm) const;
  [[nodiscard]] Vec3 hand_tip(int arm) const;
  [[nodiscard]] double initial_geodesic(int arm) const { return d0_[arm]; }

  /// Grip (sleeve opening) frame for a given end-effector pose, and back.
  static Transform grip_from_end_effector(const Transform& ee, double tube_radius);
  static Transform end_effector_from_grip(const Transform& grip, double tube_radius);

 private:
  struct Substep {
    std::vector<garment::ContactRecord> contacts;
    std::vector<Wrench> reactions;
    std::vector<std::vector<sensors::PointForce>> gripper_forces;
  };

  std::vector<Capsule> human_capsules() const;
  void physics_substep(const std::vector<body::ChainModel>& actuated_models,
                       const VecX& human_actuated_target, const VecX& human_torque_limits);
  std::vector<garment::ProgressReport> measure() const;
  Observation observe() const;

  TaskConfig cfg_;
  double action_scale_ = 1.0;
  sensors::ObservationLayout human_layout_;
  sensors::ObservationLayout robot_layout_;
  std::vector<body::ChainModel> human_models_;
  std::vector<body::ChainModel> robot_models_;
  std::vector<body::RobotGeometry> robot_geoms_;
  std::vector<reward::PoseGroup> pose_groups_;
  VecX human_rest_;
  body::ImpairmentSites sites_;

  Rng rng_;
  std::vector<body::ChainState> human_states_;
  std::vector<body::ChainState> robot_states_;
  std::vector<garment::SleeveState> sleeves_;
  VecX human_target_;
  VecX robot_target_;
  body::CapabilityVector capability_;
  std::vector<double> d0_;
  Substep last_;

  int steps_ = 0;
  bool started_ = false;
  std::vector<bool> limb_success_;
  std::optional<double> time_to_success_;
  double max_force_ = 0.0;
  double deformation_sum_ = 0.0;
  std::vector<double> last_progress_;
};

/// Privileged controller that pulls each sleeve opening along the forearm of
/// its arm at a constant path speed (scaled by the env's action scale), with
/// the human holding its pose. Used as a known-good policy in tests and evals.
class ScriptedInserter {
 public:
  explicit ScriptedInserter(double speed = 0.35, double overshoot = 0.06);
  void reset(const DressingEnv& env);
  VecX act(const DressingEnv& env);

 private:
  double speed_;
  double overshoot_;
  std::vector<double> path_;  // current arclength of the opening target behind the hand tip
};

}  // namespace codress::env
