#pragma once

#include "codress/geometry.hpp"

#include <array>
#include <string>
#include <vector>

namespace codress::reward {

/// Rest-pose groups, in weight-vector order.
enum class PoseGroup { Torso = 0, Spine = 1, Neck = 2, LeftArm = 3, RightArm = 4 };
inline constexpr int kPoseGroups = 5;
using GroupVector = std::array<double, kPoseGroups>;

struct RewardWeights {
  double w1 = 0.0;  // progress
  double w2 = 0.0;  // deformation
  double w3 = 0.0;  // geodesic
  double w4 = 0.0;  // perceived force
  GroupVector w5{};  // rest pose, per group
  double w_mid = 30.0;    // N
  double w_scale = 0.1;   // 1/N

  void validate() const;
};

/// Named weight presets: "gown-one-arm", "gown-two-arms", "tshirt".
RewardWeights weight_preset(const std::string& name);
std::vector<std::string> weight_preset_names();

enum class ForcePenalty { Tanh, Linear };

ForcePenalty parse_force_penalty(const std::string& name);
std::string force_penalty_name(ForcePenalty p);

/// -tanh(w_scale (f_max - w_mid)) / 2 - 1/2
double perceived_force_penalty(double f_max, double w_mid, double w_scale);

/// -f_max / f_ref, used during curriculum refinement.
double linear_force_penalty(double f_max, double f_ref);

/// min(progress, 1) plus a bonus of 1 once progress >= 1; averaged over limbs.
double progress_reward(double progress);
double progress_reward(std::span<const double> limb_progress);

double deformation_penalty(double max_stretch, double slack = 1.05);

double geodesic_reward(double geodesic, double initial_geodesic);

struct RestPose {
  GroupVector per_group{};
  double weighted = 0.0;
};

/// `groups[i]` assigns DOF i to a pose group.
RestPose rest_pose_penalty(const VecX& q, const VecX& q_rest, std::span<const PoseGroup> groups,
                           const GroupVector& w5);

struct RewardBreakdown {
  double r_p = 0.0;
  double r_d = 0.0;
  double r_g = 0.0;
  double r_c = 0.0;
  GroupVector r_r{};
  double total = 0.0;
};

/// Fills `total` with w1 r_p + w2 r_d + w3 r_g + w4 r_c + w5 . r_r.
RewardBreakdown total_reward(RewardBreakdown components, const RewardWeights& w);

}  // namespace codress::reward
