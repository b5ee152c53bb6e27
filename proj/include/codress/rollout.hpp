#pragma once

#include "codress/env.hpp"
#include "codress/gae.hpp"
#include "codress/policy.hpp"
#include "codress/value.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace codress::rl {

/// Seed of training episode `episode` of iteration `iteration`. The top bit is
/// always set so training seeds never collide with evaluation seeds.
std::uint64_t episode_seed(std::uint64_t run_seed, int iteration, int episode);

/// Seed of the action-sampling stream for the same episode.
std::uint64_t sampling_seed(std::uint64_t run_seed, int iteration, int episode);

std::uint64_t splitmix64(std::uint64_t x);

struct EpisodeStats {
  std::uint64_t seed = 0;
  int length = 0;
  double episode_return = 0.0;
  bool success = false;
  double max_force = 0.0;
};

/// Steps stored as columns, episodes contiguous and in episode order.
struct RolloutBatch {
  MatX obs;
  MatX actions;
  VecX log_probs;
  VecX rewards;
  VecX values;
  VecX force_penalty;  // r_c per step
  VecX f_max;
  std::vector<unsigned char> done;
  std::vector<EpisodeSpan> episodes;
  std::vector<EpisodeStats> stats;

  [[nodiscard]] int size() const { return static_cast<int>(rewards.size()); }
};

/// Collects exactly `samples` steps in ceil(samples / horizon) episodes; the
/// last one is cut short when samples is not a multiple of the horizon. Every
/// episode is bootstrapped with V(s_T). The result does not depend on `workers`.
RolloutBatch collect_rollouts(const env::TaskConfig& task, const JointPolicy& policy,
                              const ValueFunction& value, int samples, std::uint64_t run_seed,
                              int iteration, int workers);

/// Runs `count` jobs over up to `workers` threads; job i runs exactly once.
void parallel_for(int count, int workers, const std::function<void(int worker, int job)>& fn);

}  // namespace codress::rl
