#include "codress/reward.hpp"

#include "codress/errors.hpp"

#include <algorithm>
#include <cmath>

namespace codress::reward {

void RewardWeights::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  bool valid = ok(w1) && ok(w2) && ok(w3) && ok(w4) && std::isfinite(w_mid) && w_mid >= 0.0 &&
               std::isfinite(w_scale) && w_scale > 0.0;
  for (double v : w5) valid = valid && ok(v);
  if (!valid) throw ConfigError("reward weights must be finite and non-negative, w_scale > 0");
}

RewardWeights weight_preset(const std::string& name) {
  RewardWeights w;
  if (name == "gown-one-arm") {
    w.w1 = 40; w.w2 = 5; w.w3 = 0; w.w4 = 5;
    w.w5 = {40, 4, 8, 4, 0.5};
  } else if (name == "gown-two-arms") {
    w.w1 = 40; w.w2 = 5; w.w3 = 0; w.w4 = 5;
    w.w5 = {45, 5, 4, 0.25, 0.25};
  } else if (name == "tshirt") {
    w.w1 = 20; w.w2 = 5; w.w3 = 15; w.w4 = 5;
    w.w5 = {40, 5, 4, 0, 0};
  } else {
    throw ConfigError("unknown reward weight preset '" + name + "'");
  }
  return w;
}

std::vector<std::string> weight_preset_names() { return {"gown-one-arm", "gown-two-arms", "tshirt"}; }

ForcePenalty parse_force_penalty(const std::string& name) {
  if (name == "tanh") return ForcePenalty::Tanh;
  if (name == "linear") return ForcePenalty::Linear;
  throw ConfigError("unknown force penalty form '" + name + "'");
}

std::string force_penalty_name(ForcePenalty p) { return p == ForcePenalty::Tanh ? "tanh" : "linear"; }

double perceived_force_penalty(double f_max, double w_mid, double w_scale) {
  // -(tanh(x) + 1) / 2 written as a logistic so the f_max < w_mid tail keeps precision
  return -1.0 / (1.0 + std::exp(-2.0 * w_scale * (f_max - w_mid)));
}

double linear_force_penalty(double f_max, double f_ref) { return -f_max / f_ref; }

double progress_reward(double progress) {
  return std::min(progress, 1.0) + (progress >= 1.0 ? 1.0 : 0.0);
}

double progress_reward(std::span<const double> limb_progress) {
  if (limb_progress.empty()) return 0.0;
  double sum = 0.0;
  for (double p : limb_progress) sum += progress_reward(p);
  return sum / static_cast<double>(limb_progress.size());
}

double deformation_penalty(double max_stretch, double slack) {
  return -std::max(max_stretch - slack, 0.0);
}

double geodesic_reward(double geodesic, double initial_geodesic) {
  if (initial_geodesic <= 0.0) return 1.0;
  return std::max(1.0 - geodesic / initial_geodesic, 0.0);
}

RestPose rest_pose_penalty(const VecX& q, const VecX& q_rest, std::span<const PoseGroup> groups,
                           const GroupVector& w5) {
  if (q.size() != q_rest.size()) throw ArgumentError("rest_pose_penalty: size mismatch");
  if (static_cast<Eigen::Index>(groups.size()) != q.size()) {
    throw ConfigError("rest_pose_penalty: every human DOF must be assigned to a pose group");
  }
  GroupVector sum{};
  std::array<int, kPoseGroups> count{};
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const int g = static_cast<int>(groups[i]);
    if (g < 0 || g >= kPoseGroups) throw ConfigError("rest_pose_penalty: invalid pose group");
    const double d = q[i] - q_rest[i];
    sum[g] += d * d;
    ++count[g];
  }
  RestPose out;
  for (int g = 0; g < kPoseGroups; ++g) {
    out.per_group[g] = count[g] ? -sum[g] / count[g] : 0.0;
    out.weighted += w5[g] * out.per_group[g];
  }
  return out;
}

RewardBreakdown total_reward(RewardBreakdown c, const RewardWeights& w) {
  double total = w.w1 * c.r_p + w.w2 * c.r_d + w.w3 * c.r_g + w.w4 * c.r_c;
  for (int g = 0; g < kPoseGroups; ++g) total += w.w5[g] * c.r_r[g];
  c.total = total;
  return c;
}

}  // namespace codress::reward
