#pragma once

#include "codress/mlp.hpp"

#include <span>
#include <vector>

namespace codress::rl {

inline constexpr double kMinLogStd = -20.0;
inline const std::vector<int> kDefaultHidden = {128, 64};

/// Diagonal Gaussian policy: MLP mean plus one state-independent log-std per
/// action dimension. params = [mlp parameters..., log_std...].
struct PolicyNet {
  Mlp net;
  VecX params;

  static PolicyNet create(int obs_dim, int act_dim, Rng& rng,
                          const std::vector<int>& hidden = kDefaultHidden,
                          double initial_log_std = -1.0, double output_scale = 0.05);

  [[nodiscard]] int obs_dim() const { return net.input_size(); }
  [[nodiscard]] int act_dim() const { return net.output_size(); }
  [[nodiscard]] int num_params() const { return static_cast<int>(params.size()); }
  [[nodiscard]] VecX log_std() const;

  /// (mean action, clamped log-std)
  [[nodiscard]] std::pair<VecX, VecX> forward(const VecX& obs) const;
};

struct AgentSlot {
  int obs_offset = 0;
  int obs_len = 0;
  int act_offset = 0;
  int act_len = 0;
  int param_offset = 0;
  int param_len = 0;
};

/// Separate per-agent networks behind unified observation and action vectors.
/// Joint observation = concat(agent observations); joint action likewise; the
/// flat parameter vector concatenates every agent's parameters, so no entry is
/// shared between agents.
class JointPolicy {
 public:
  JointPolicy() = default;
  explicit JointPolicy(std::vector<PolicyNet> agents);

  [[nodiscard]] int num_agents() const { return static_cast<int>(agents_.size()); }
  [[nodiscard]] int obs_dim() const { return obs_dim_; }
  [[nodiscard]] int act_dim() const { return act_dim_; }
  [[nodiscard]] int num_params() const { return num_params_; }
  [[nodiscard]] const PolicyNet& agent(int i) const { return agents_[i]; }
  [[nodiscard]] const AgentSlot& slot(int i) const { return slots_[i]; }

  [[nodiscard]] VecX flat_params() const;
  void set_flat_params(const VecX& flat);

  /// Flat indices holding log-stds.
  [[nodiscard]] std::vector<int> log_std_indices() const;

  [[nodiscard]] VecX concat_obs(std::span<const VecX> parts) const;
  [[nodiscard]] std::vector<VecX> split_obs(const VecX& joint) const;
  [[nodiscard]] VecX concat_action(std::span<const VecX> parts) const;
  [[nodiscard]] std::vector<VecX> split_action(const VecX& joint) const;

  [[nodiscard]] VecX mean_action(const VecX& joint_obs) const;
  [[nodiscard]] VecX log_std() const;

  struct Sample {
    VecX action;
    double log_prob = 0.0;
  };
  Sample sample(const VecX& joint_obs, Rng& rng) const;
  [[nodiscard]] double log_prob(const VecX& joint_obs, const VecX& action) const;

  /// Batched evaluation (samples as columns) at a given flat parameter vector.
  struct Forward {
    VecX params;
    MatX mean;
    VecX log_std;
    std::vector<Mlp::Cache> caches;
  };
  [[nodiscard]] Forward forward(const MatX& obs) const;
  [[nodiscard]] Forward forward(const MatX& obs, const VecX& flat) const;
  [[nodiscard]] VecX log_prob(const Forward& f, const MatX& actions) const;

  /// Parameter gradient of sum(dmean .* mean); log-std entries are zero.
  [[nodiscard]] VecX mean_vjp(const Forward& f, const MatX& dmean) const;
  /// Mean directional derivative along parameter direction v.
  [[nodiscard]] MatX mean_jvp(const Forward& f, const VecX& v) const;

 private:
  std::vector<PolicyNet> agents_;
  std::vector<AgentSlot> slots_;
  int obs_dim_ = 0;
  int act_dim_ = 0;
  int num_params_ = 0;
};

double gaussian_log_prob(const VecX& mean, const VecX& log_std, const VecX& action);

}  // namespace codress::rl
