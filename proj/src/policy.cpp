#include "codress/policy.hpp"

#include "codress/errors.hpp"

#include <cmath>
#include <random>

namespace codress::rl {

namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * M_PI);
}

PolicyNet PolicyNet::create(int obs_dim, int act_dim, Rng& rng, const std::vector<int>& hidden,
                            double initial_log_std, double output_scale) {
  std::vector<int> sizes;
  sizes.push_back(obs_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(act_dim);
  PolicyNet p;
  p.net = Mlp(sizes);
  p.params.resize(p.net.num_params() + act_dim);
  p.params.head(p.net.num_params()) = p.net.initial_params(rng, output_scale);
  p.params.tail(act_dim).setConstant(initial_log_std);
  return p;
}

VecX PolicyNet::log_std() const {
  return params.tail(act_dim()).cwiseMax(kMinLogStd);
}

std::pair<VecX, VecX> PolicyNet::forward(const VecX& obs) const {
  return {net.forward(obs, {params.data(), static_cast<size_t>(net.num_params())}), log_std()};
}

double gaussian_log_prob(const VecX& mean, const VecX& log_std, const VecX& action) {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    lp -= 0.5 * z * z + log_std[i] + kHalfLog2Pi;
  }
  return lp;
}

JointPolicy::JointPolicy(std::vector<PolicyNet> agents) : agents_(std::move(agents)) {
  for (const auto& a : agents_) {
    AgentSlot s;
    s.obs_offset = obs_dim_;
    s.obs_len = a.obs_dim();
    s.act_offset = act_dim_;
    s.act_len = a.act_dim();
    s.param_offset = num_params_;
    s.param_len = a.num_params();
    obs_dim_ += s.obs_len;
    act_dim_ += s.act_len;
    num_params_ += s.param_len;
    slots_.push_back(s);
  }
}

VecX JointPolicy::flat_params() const {
  VecX flat(num_params_);
  for (int i = 0; i < num_agents(); ++i) {
    flat.segment(slots_[i].param_offset, slots_[i].param_len) = agents_[i].params;
  }
  return flat;
}

void JointPolicy::set_flat_params(const VecX& flat) {
  if (flat.size() != num_params_) throw ArgumentError("set_flat_params: size mismatch");
  for (int i = 0; i < num_agents(); ++i) {
    agents_[i].params = flat.segment(slots_[i].param_offset, slots_[i].param_len);
  }
}

std::vector<int> JointPolicy::log_std_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < num_agents(); ++i) {
    const int start = slots_[i].param_offset + agents_[i].net.num_params();
    for (int k = 0; k < slots_[i].act_len; ++k) idx.push_back(start + k);
  }
  return idx;
}

VecX JointPolicy::concat_obs(std::span<const VecX> parts) const {
  if (static_cast<int>(parts.size()) != num_agents()) throw ArgumentError("concat_obs: agent count mismatch");
  VecX joint(obs_dim_);
  for (int i = 0; i < num_agents(); ++i) {
    if (parts[i].size() != slots_[i].obs_len) {
      throw ArgumentError("concat_obs: agent " + std::to_string(i) + " observation has size " +
                          std::to_string(parts[i].size()) + ", expected " +
                          std::to_string(slots_[i].obs_len));
    }
    joint.segment(slots_[i].obs_offset, slots_[i].obs_len) = parts[i];
  }
  return joint;
}

std::vector<VecX> JointPolicy::split_obs(const VecX& joint) const {
  if (joint.size() != obs_dim_) throw ArgumentError("split_obs: size mismatch");
  std::vector<VecX> parts;
  for (const auto& s : slots_) parts.push_back(joint.segment(s.obs_offset, s.obs_len));
  return parts;
}

VecX JointPolicy::concat_action(std::span<const VecX> parts) const {
  if (static_cast<int>(parts.size()) != num_agents()) throw ArgumentError("concat_action: agent count mismatch");
  VecX joint(act_dim_);
  for (int i = 0; i < num_agents(); ++i) {
    if (parts[i].size() != slots_[i].act_len) throw ArgumentError("concat_action: size mismatch");
    joint.segment(slots_[i].act_offset, slots_[i].act_len) = parts[i];
  }
  return joint;
}

std::vector<VecX> JointPolicy::split_action(const VecX& joint) const {
  if (joint.size() != act_dim_) throw ArgumentError("split_action: size mismatch");
  std::vector<VecX> parts;
  for (const auto& s : slots_) parts.push_back(joint.segment(s.act_offset, s.act_len));
  return parts;
}

VecX JointPolicy::mean_action(const VecX& joint_obs) const {
  if (joint_obs.size() != obs_dim_) throw ArgumentError("mean_action: observation size mismatch");
  VecX mean(act_dim_);
  for (int i = 0; i < num_agents(); ++i) {
    const auto& s = slots_[i];
    mean.segment(s.act_offset, s.act_len) = agents_[i].forward(joint_obs.segment(s.obs_offset, s.obs_len)).first;
  }
  return mean;
}

VecX JointPolicy::log_std() const {
  VecX ls(act_dim_);
  for (int i = 0; i < num_agents(); ++i) ls.segment(slots_[i].act_offset, slots_[i].act_len) = agents_[i].log_std();
  return ls;
}

JointPolicy::Sample JointPolicy::sample(const VecX& joint_obs, Rng& rng) const {
  const VecX mean = mean_action(joint_obs);
  const VecX ls = log_std();
  Sample s;
  s.action.resize(act_dim_);
  for (int i = 0; i < act_dim_; ++i) {
    std::normal_distribution<double> normal(0.0, 1.0);
    s.action[i] = mean[i] + std::exp(ls[i]) * normal(rng);
  }
  s.log_prob = gaussian_log_prob(mean, ls, s.action);
  return s;
}

double JointPolicy::log_prob(const VecX& joint_obs, const VecX& action) const {
  return gaussian_log_prob(mean_action(joint_obs), log_std(), action);
}

JointPolicy::Forward JointPolicy::forward(const MatX& obs) const { return forward(obs, flat_params()); }

JointPolicy::Forward JointPolicy::forward(const MatX& obs, const VecX& flat) const {
  if (obs.rows() != obs_dim_) throw ArgumentError("forward: observation rows do not match policy");
  if (flat.size() != num_params_) throw ArgumentError("forward: parameter size mismatch");
  Forward f;
  f.params = flat;
  f.mean.resize(act_dim_, obs.cols());
  f.log_std.resize(act_dim_);
  f.caches.resize(agents_.size());
  for (int i = 0; i < num_agents(); ++i) {
    const auto& s = slots_[i];
    const auto& net = agents_[i].net;
    const double* p = flat.data() + s.param_offset;
    f.mean.middleRows(s.act_offset, s.act_len) =
        net.forward(obs.middleRows(s.obs_offset, s.obs_len), {p, static_cast<size_t>(net.num_params())},
                    f.caches[i]);
    f.log_std.segment(s.act_offset, s.act_len) =
        Eigen::Map<const VecX>(p + net.num_params(), s.act_len).cwiseMax(kMinLogStd);
  }
  return f;
}

VecX JointPolicy::log_prob(const Forward& f, const MatX& actions) const {
  const VecX inv_std = (-f.log_std).array().exp();
  const MatX z = ((actions - f.mean).array().colwise() * inv_std.array()).matrix();
  const double constant = f.log_std.sum() + act_dim_ * kHalfLog2Pi;
  return (-0.5 * z.colwise().squaredNorm().array() - constant).matrix().transpose();
}

VecX JointPolicy::mean_vjp(const Forward& f, const MatX& dmean) const {
  VecX grad = VecX::Zero(num_params_);
  for (int i = 0; i < num_agents(); ++i) {
    const auto& s = slots_[i];
    const auto& net = agents_[i].net;
    grad.segment(s.param_offset, net.num_params()) =
        net.backward(f.caches[i], {f.params.data() + s.param_offset, static_cast<size_t>(net.num_params())},
                     dmean.middleRows(s.act_offset, s.act_len));
  }
  return grad;
}

MatX JointPolicy::mean_jvp(const Forward& f, const VecX& v) const {
  MatX out(act_dim_, f.mean.cols());
  for (int i = 0; i < num_agents(); ++i) {
    const auto& s = slots_[i];
    const auto& net = agents_[i].net;
    out.middleRows(s.act_offset, s.act_len) =
        net.jvp(f.caches[i], {f.params.data() + s.param_offset, static_cast<size_t>(net.num_params())},
                {v.data() + s.param_offset, static_cast<size_t>(net.num_params())});
  }
  return out;
}

}  // namespace codress::rl
