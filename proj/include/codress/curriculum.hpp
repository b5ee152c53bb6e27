#pragma once

#include "codress/checkpoint.hpp"
#include "codress/config.hpp"

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace codress::curriculum {

inline constexpr const char* kLogVersionLine = "# codress training-log v1";
inline constexpr const char* kLogHeader =
    "phase,iteration,mean_return,success_rate,mean_f_max,p90_f_max,mean_force_penalty,kl,"
    "surrogate_improvement,backtracks,accepted,value_loss,wall_clock_s";

struct LogRow {
  std::string phase;
  int iteration = 0;  // counted across phases
  double mean_return = 0.0;
  double success_rate = 0.0;
  double mean_f_max = 0.0;  // mean over episodes of the per-episode maximum
  double p90_f_max = 0.0;
  double mean_force_penalty = 0.0;  // mean per-step r_c
  double kl = 0.0;
  double surrogate_improvement = 0.0;
  int backtracks = 0;
  bool accepted = false;
  double value_loss = 0.0;
  double wall_clock_s = 0.0;
};

std::string format_row(const LogRow& row);
void write_log_header(std::ostream& out);

using IterationCallback = std::function<void(const LogRow&)>;

/// Freshly initialized human/robot policies and value function for a task.
checkpoint::Checkpoint initial_checkpoint(const config::ExperimentConfig& cfg,
                                          const env::TaskConfig& task);

struct PhaseResult {
  checkpoint::Checkpoint checkpoint;
  std::vector<LogRow> log;
};

/// Runs `phase.iterations` of collect, GAE, trust-region update and value fit
/// starting from `init`. Iteration numbers (and so episode seeds) start at
/// `first_iteration`. Writes checkpoints under out_dir/<phase> unless out_dir
/// is empty.
PhaseResult run_phase(const config::ExperimentConfig& cfg, const config::PhaseSpec& phase,
                      checkpoint::Checkpoint init, int first_iteration,
                      const std::filesystem::path& out_dir, const IterationCallback& on_iteration = {});

struct CurriculumResult {
  checkpoint::Checkpoint final;
  std::vector<checkpoint::Checkpoint> phase_checkpoints;
  std::vector<LogRow> log;
};

/// Runs every configured phase in order, threading checkpoints between them.
/// With a non-empty out_dir the training log is streamed to
/// out_dir/training_log.csv.
CurriculumResult run_curriculum(const config::ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                const IterationCallback& on_iteration = {});

}  // namespace codress::curriculum
