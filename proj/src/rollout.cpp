#include "codress/rollout.hpp"

#include "codress/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

namespace codress::rl {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t mix(std::uint64_t run_seed, int iteration, int episode, std::uint64_t stream) {
  std::uint64_t h = splitmix64(run_seed ^ stream);
  h = splitmix64(h ^ static_cast<std::uint64_t>(iteration));
  return splitmix64(h ^ static_cast<std::uint64_t>(episode));
}

}  // namespace

std::uint64_t episode_seed(std::uint64_t run_seed, int iteration, int episode) {
  return mix(run_seed, iteration, episode, 0x656e76ull) | (1ull << 63);
}

std::uint64_t sampling_seed(std::uint64_t run_seed, int iteration, int episode) {
  return mix(run_seed, iteration, episode, 0x616374ull);
}

void parallel_for(int count, int workers, const std::function<void(int, int)>& fn) {
  workers = std::clamp(workers, 1, std::max(count, 1));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(0, i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(w, i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

RolloutBatch collect_rollouts(const env::TaskConfig& task, const JointPolicy& policy,
                              const ValueFunction& value, int samples, std::uint64_t run_seed,
                              int iteration, int workers) {
  if (samples < 1) throw ConfigError("samples per iteration must be at least 1");
  const int horizon = task.horizon;
  const int episodes = (samples + horizon - 1) / horizon;

  RolloutBatch b;
  b.obs.resize(policy.obs_dim(), samples);
  b.actions.resize(policy.act_dim(), samples);
  b.log_probs.resize(samples);
  b.rewards.resize(samples);
  b.values.resize(samples);
  b.force_penalty.resize(samples);
  b.f_max.resize(samples);
  b.done.assign(samples, 0);
  b.episodes.resize(episodes);
  b.stats.resize(episodes);

  std::vector<std::unique_ptr<env::DressingEnv>> envs(std::max(1, std::min(workers, episodes)));
  parallel_for(episodes, workers, [&](int w, int ep) {
    if (!envs[w]) envs[w] = std::make_unique<env::DressingEnv>(task);
    env::DressingEnv& e = *envs[w];
    const int start = ep * horizon;
    const int length = std::min(horizon, samples - start);
    EpisodeStats& st = b.stats[ep];
    st.seed = episode_seed(run_seed, iteration, ep);
    st.length = length;
    Rng rng(sampling_seed(run_seed, iteration, ep));

    env::Observation o = e.reset(st.seed);
    for (int t = 0; t < length; ++t) {
      const VecX parts[] = {o.human, o.robot};
      const VecX joint = policy.concat_obs(parts);
      const int col = start + t;
      b.obs.col(col) = joint;
      const auto s = policy.sample(joint, rng);
      if (!std::isfinite(s.log_prob)) throw NumericError("non-finite log-probability during rollout");
      b.actions.col(col) = s.action;
      b.log_probs[col] = s.log_prob;
      b.values[col] = value.predict(joint);
      const env::StepOutput out = e.step(s.action);
      b.rewards[col] = out.reward.total;
      b.force_penalty[col] = out.reward.r_c;
      b.f_max[col] = out.info.f_max;
      st.episode_return += out.reward.total;
      o = out.obs;
    }
    b.done[start + length - 1] = 1;
    const VecX parts[] = {o.human, o.robot};
    b.episodes[ep] = EpisodeSpan{start, length, value.predict(policy.concat_obs(parts))};
    const env::EpisodeResult r = e.result();
    st.success = r.success;
    st.max_force = r.max_force;
  });
  return b;
}

}  // namespace codress::rl
