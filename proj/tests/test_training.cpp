#include "codress/checkpoint.hpp"
#include "codress/config.hpp"
#include "codress/curriculum.hpp"
#include "codress/errors.hpp"
#include "codress/rollout.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace codress;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("codress_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small enough to run a few iterations in well under a second.
config::ExperimentConfig tiny_config(std::uint64_t seed = 3) {
  config::ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.task.horizon = 20;
  cfg.training.samples_per_iteration = 50;
  cfg.training.value_fit.epochs = 3;
  cfg.phases = {config::PhaseSpec{}};
  cfg.phases[0].iterations = 2;
  return cfg;
}

MatX probe_observations(const rl::JointPolicy& policy, int count) {
  Rng rng(99);
  MatX obs(policy.obs_dim(), count);
  for (int j = 0; j < count; ++j)
    for (int i = 0; i < policy.obs_dim(); ++i) obs(i, j) = -1.0 + 2.0 * std::generate_canonical<double, 53>(rng);
  return obs;
}

}  // namespace

// ---------------------------------------------------------------- rollouts

TEST(Rollout, EpisodeSeedsAreDistinctAndTagged) {
  std::set<std::uint64_t> seen;
  for (int it = 0; it < 50; ++it) {
    for (int ep = 0; ep < 40; ++ep) {
      const auto s = rl::episode_seed(1, it, ep);
      EXPECT_TRUE(s >> 63);
      EXPECT_TRUE(seen.insert(s).second);
      EXPECT_NE(s, rl::sampling_seed(1, it, ep));
    }
  }
  EXPECT_NE(rl::episode_seed(1, 0, 0), rl::episode_seed(2, 0, 0));
}

TEST(Rollout, BatchShapeAndTruncatedLastEpisode) {
  auto cfg = tiny_config();
  const auto ck = curriculum::initial_checkpoint(cfg, cfg.task);
  const auto batch = rl::collect_rollouts(cfg.task, ck.policy, ck.value, 50, cfg.seed, 0, 1);
  EXPECT_EQ(batch.size(), 50);
  ASSERT_EQ(batch.episodes.size(), 3u);
  EXPECT_EQ(batch.episodes[2].start, 40);
  EXPECT_EQ(batch.episodes[2].length, 10);
  EXPECT_EQ(batch.obs.cols(), 50);
  EXPECT_EQ(batch.obs.rows(), ck.policy.obs_dim());
  EXPECT_EQ(batch.actions.rows(), ck.policy.act_dim());
  for (int t = 0; t < 50; ++t) EXPECT_NEAR(batch.values[t], ck.value.predict(VecX(batch.obs.col(t))), 1e-9);
}

TEST(Rollout, ResultDoesNotDependOnWorkerCount) {
  auto cfg = tiny_config();
  const auto ck = curriculum::initial_checkpoint(cfg, cfg.task);
  const auto a = rl::collect_rollouts(cfg.task, ck.policy, ck.value, 90, cfg.seed, 4, 1);
  const auto b = rl::collect_rollouts(cfg.task, ck.policy, ck.value, 90, cfg.seed, 4, 4);
  EXPECT_EQ(a.obs, b.obs);
  EXPECT_EQ(a.actions, b.actions);
  EXPECT_EQ(a.rewards, b.rewards);
  EXPECT_EQ(a.log_probs, b.log_probs);
  for (size_t e = 0; e < a.episodes.size(); ++e) EXPECT_EQ(a.episodes[e].bootstrap_value, b.episodes[e].bootstrap_value);
}

TEST(Rollout, LinearPenaltyIsLoggedAsForceOverReference) {
  auto cfg = tiny_config();
  config::PhaseSpec p;
  p.penalty = reward::ForcePenalty::Linear;
  const auto task = config::phase_task(cfg, p);
  const auto ck = curriculum::initial_checkpoint(cfg, task);
  const auto batch = rl::collect_rollouts(task, ck.policy, ck.value, 60, cfg.seed, 0, 1);
  for (int t = 0; t < batch.size(); ++t) EXPECT_NEAR(batch.force_penalty[t], -batch.f_max[t] / 50.0, 1e-12);
}

TEST(Rollout, ParallelForRunsEveryJobOnceAndPropagatesErrors) {
  std::vector<int> hits(37, 0);
  rl::parallel_for(37, 4, [&](int, int job) { ++hits[job]; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(rl::parallel_for(10, 3, [](int, int job) { if (job == 6) throw NumericError("boom"); }), NumericError);
}

// ---------------------------------------------------------------- phases

TEST(Phase, ZeroIterationsIsANoOp) {
  auto cfg = tiny_config();
  cfg.phases[0].iterations = 0;
  const auto init = curriculum::initial_checkpoint(cfg, cfg.task);
  const auto r = curriculum::run_phase(cfg, cfg.phases[0], init, 0, {});
  EXPECT_EQ(r.checkpoint.policy.flat_params(), init.policy.flat_params());
  EXPECT_EQ(r.checkpoint.value.params, init.value.params);
  EXPECT_TRUE(r.log.empty());
}

TEST(Phase, FixedSeedReproducesTrainingLog) {
  auto cfg = tiny_config();
  const auto a = curriculum::run_curriculum(cfg, {});
  const auto b = curriculum::run_curriculum(cfg, {});
  ASSERT_EQ(a.log.size(), 2u);
  for (size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].mean_return, b.log[i].mean_return);
    EXPECT_EQ(a.log[i].kl, b.log[i].kl);
    EXPECT_EQ(a.log[i].iteration, static_cast<int>(i));
  }
  EXPECT_EQ(a.final.policy.flat_params(), b.final.policy.flat_params());
  EXPECT_NE(a.final.policy.flat_params(), curriculum::initial_checkpoint(cfg, cfg.task).policy.flat_params());
}

TEST(Phase, RejectsCheckpointOfAnotherLayout) {
  auto cfg = tiny_config();
  env::TaskConfig ablated = cfg.task;
  ablated.ablation.drop_capacitive = true;
  const auto wrong = curriculum::initial_checkpoint(cfg, ablated);
  EXPECT_THROW(curriculum::run_phase(cfg, cfg.phases[0], wrong, 0, {}), CheckpointError);
}

TEST(Curriculum, DegenerateCurriculumEqualsOneLongerRun) {
  auto single = tiny_config();
  single.phases[0].iterations = 4;
  auto split = tiny_config();
  split.phases = {config::PhaseSpec{}, config::PhaseSpec{}};
  split.phases[0].iterations = 2;
  split.phases[1].name = "phase2";
  split.phases[1].iterations = 2;
  split.phases[1].init = "previous";
  const auto a = curriculum::run_curriculum(single, {});
  const auto b = curriculum::run_curriculum(split, {});
  ASSERT_EQ(a.log.size(), b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].mean_return, b.log[i].mean_return) << i;
  EXPECT_EQ(a.final.policy.flat_params(), b.final.policy.flat_params());
}

TEST(Curriculum, PhaseTwoStartsFromPhaseOneOnDisk) {
  const auto dir = scratch("curriculum");
  auto cfg = tiny_config();
  cfg.phases = {config::PhaseSpec{}, config::PhaseSpec{}};
  cfg.phases[0].iterations = 2;
  cfg.phases[1].name = "phase2";
  cfg.phases[1].iterations = 1;
  cfg.phases[1].init = "previous";
  cfg.phases[1].penalty = reward::ForcePenalty::Linear;
  cfg.phases[1].reward_overrides = {{"w4", 20.0}};
  const auto result = curriculum::run_curriculum(cfg, dir);

  const auto hash = checkpoint::schema_hash(checkpoint::schema_document(cfg.task));
  const auto phase1 = checkpoint::load(dir / "phase1" / "checkpoint", hash);
  EXPECT_EQ(phase1.policy.flat_params(), result.phase_checkpoints[0].policy.flat_params());

  // A zero-length phase started from the saved phase-1 checkpoint reproduces its outputs exactly.
  auto probe_phase = cfg.phases[1];
  probe_phase.iterations = 0;
  const auto start = curriculum::run_phase(cfg, probe_phase, phase1, phase1.iteration, {});
  const MatX probe = probe_observations(phase1.policy, 16);
  EXPECT_EQ(start.checkpoint.policy.forward(probe).mean, result.phase_checkpoints[0].policy.forward(probe).mean);

  // Phase 1 written alone is byte-identical to phase 1 of the two-phase run.
  const auto alone = scratch("curriculum_alone");
  auto only_first = cfg;
  only_first.phases.resize(1);
  curriculum::run_curriculum(only_first, alone);
  for (const auto& entry : fs::directory_iterator(alone / "phase1" / "checkpoint")) {
    EXPECT_EQ(read_bytes(entry.path()), read_bytes(dir / "phase1" / "checkpoint" / entry.path().filename()))
        << entry.path().filename();
  }

  ASSERT_EQ(result.log.size(), 3u);
  EXPECT_EQ(result.log[2].phase, "phase2");
  EXPECT_EQ(result.log[2].iteration, 2);
  EXPECT_TRUE(fs::exists(dir / "phase2" / "checkpoint" / "manifest.json"));
}

TEST(Curriculum, TrainingLogIsCompleteAndVersioned) {
  const auto dir = scratch("log");
  auto cfg = tiny_config();
  cfg.phases[0].iterations = 3;
  cfg.training.checkpoint_every = 2;
  curriculum::run_curriculum(cfg, dir);
  std::ifstream in(dir / "training_log.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, curriculum::kLogVersionLine);
  std::getline(in, line);
  EXPECT_EQ(line, curriculum::kLogHeader);
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.rfind("phase1," + std::to_string(rows) + ",", 0), 0u) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 3);
  EXPECT_TRUE(fs::exists(dir / "phase1" / "checkpoint_2" / "manifest.json"));
}

TEST(Curriculum, PreviousInitIsInvalidForFirstPhase) {
  auto cfg = tiny_config();
  cfg.phases[0].init = "previous";
  EXPECT_THROW(curriculum::run_curriculum(cfg, {}), ConfigError);
}
