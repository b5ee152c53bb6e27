#pragma once

#include "codress/geometry.hpp"

#include <vector>

namespace codress::rl {

/// Contiguous run of steps [start, start + length). `bootstrap_value` is V(s_T)
/// for episodes cut at the horizon (0 for true terminations).
struct EpisodeSpan {
  int start = 0;
  int length = 0;
  double bootstrap_value = 0.0;
};

struct GaeResult {
  VecX advantages_raw;
  VecX advantages;  // zero mean, unit variance over the batch
  VecX value_targets;
};

/// Reverse-recursion GAE: delta_t = r_t + gamma V_{t+1} - V_t,
/// A_t = delta_t + gamma lambda A_{t+1}.
GaeResult compute_gae(const VecX& rewards, const VecX& values,
                      const std::vector<EpisodeSpan>& episodes, double gamma, double lambda);

}  // namespace codress::rl
