#pragma once

#include "codress/env.hpp"
#include "codress/trpo.hpp"
#include "codress/value.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace codress::config {

using Json = nlohmann::json;

/// Optional per-phase reward overrides layered on the task's weights.
struct PhaseSpec {
  std::string name = "phase1";
  int iterations = 120;
  reward::ForcePenalty penalty = reward::ForcePenalty::Tanh;
  Json reward_overrides = Json::object();
  std::string init = "random";  // "random", "previous" or a checkpoint directory
};

struct TrainingConfig {
  int samples_per_iteration = 4000;
  double init_log_std = -1.0;
  double value_scale = 1000.0;
  rl::ValueFitConfig value_fit{40, 3e-3};
  int checkpoint_every = 0;  // 0: only at the end of each phase
};

struct EvalConfig {
  int episodes = 100;
  int horizon = 0;  // 0: task horizon
  std::uint64_t seed = 1000000;
  std::vector<double> scales{1.0, 0.8, 0.6, 0.4, 0.2};
  double force_threshold = 50.0;
};

struct ExperimentConfig {
  env::TaskConfig task;
  rl::TrpoConfig trpo;
  TrainingConfig training;
  std::vector<PhaseSpec> phases{PhaseSpec{}};
  EvalConfig eval;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output_dir = "runs/default";

  void validate() const;
};

/// Reads a config file, resolving "include" entries (paths relative to the
/// including file; later keys override earlier ones).
Json load_tree(const std::filesystem::path& path);

/// Deep merge: objects merge recursively, everything else is replaced.
void merge(Json& base, const Json& overlay);

ExperimentConfig from_json(const Json& tree);
Json to_json(const ExperimentConfig& cfg);

ExperimentConfig load(const std::filesystem::path& path);

/// Task weights with a phase's reward overrides and penalty form applied.
env::TaskConfig phase_task(const ExperimentConfig& cfg, const PhaseSpec& phase);

/// Applies "capacitive" / "jointpos" to the ablation flags.
void apply_ablation(sensors::AblationFlags& flags, const std::string& name);

}  // namespace codress::config
