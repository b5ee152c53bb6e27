#include "codress/gae.hpp"

#include "codress/errors.hpp"

#include <cmath>

namespace codress::rl {

GaeResult compute_gae(const VecX& rewards, const VecX& values,
                      const std::vector<EpisodeSpan>& episodes, double gamma, double lambda) {
  const Eigen::Index n = rewards.size();
  if (n == 0 || episodes.empty()) throw ArgumentError("compute_gae: empty batch");
  if (values.size() != n) throw ArgumentError("compute_gae: values and rewards differ in length");

  GaeResult out;
  out.advantages_raw = VecX::Zero(n);
  int expected_start = 0;
  for (const auto& ep : episodes) {
    if (ep.start != expected_start || ep.length <= 0 || ep.start + ep.length > n) {
      throw ArgumentError("compute_gae: episodes must be contiguous and cover the batch");
    }
    expected_start += ep.length;
    double next_value = ep.bootstrap_value;
    double running = 0.0;
    for (int t = ep.start + ep.length - 1; t >= ep.start; --t) {
      const double delta = rewards[t] + gamma * next_value - values[t];
      running = delta + gamma * lambda * running;
      out.advantages_raw[t] = running;
      next_value = values[t];
    }
  }
  if (expected_start != n) throw ArgumentError("compute_gae: episodes do not cover the batch");

  out.value_targets = out.advantages_raw + values;
  const double mean = out.advantages_raw.mean();
  const double var = (out.advantages_raw.array() - mean).square().mean();
  const double std = std::sqrt(var);
  out.advantages = (out.advantages_raw.array() - mean) / (std > 1e-8 ? std : 1.0);
  return out;
}

}  // namespace codress::rl
