#include "codress/curriculum.hpp"

#include "codress/errors.hpp"
#include "codress/gae.hpp"
#include "codress/rollout.hpp"
#include "codress/stats.hpp"
#include "codress/trpo.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

namespace codress::curriculum {

namespace fs = std::filesystem;

std::string format_row(const LogRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g,%.3f",
                r.phase.c_str(), r.iteration, r.mean_return, r.success_rate, r.mean_f_max, r.p90_f_max,
                r.mean_force_penalty, r.kl, r.surrogate_improvement, r.backtracks, r.accepted ? 1 : 0,
                r.value_loss, r.wall_clock_s);
  return buf;
}

void write_log_header(std::ostream& out) { out << kLogVersionLine << "\n" << kLogHeader << "\n"; }

checkpoint::Checkpoint initial_checkpoint(const config::ExperimentConfig& cfg, const env::TaskConfig& task) {
  const int arms = task.arms();
  const auto human = sensors::human_layout(arms);
  const auto robot = sensors::robot_layout(arms, task.ablation);
  Rng rng(rl::splitmix64(cfg.seed ^ 0x696e6974ull));
  const double log_std = cfg.training.init_log_std;
  std::vector<rl::PolicyNet> agents;
  agents.push_back(rl::PolicyNet::create(human.size(), sensors::kHumanArmDof * arms, rng,
                                         rl::kDefaultHidden, log_std));
  agents.push_back(rl::PolicyNet::create(robot.size(), sensors::kRobotDof * arms, rng,
                                         rl::kDefaultHidden, log_std));
  checkpoint::Checkpoint c;
  c.policy = rl::JointPolicy(std::move(agents));
  c.value = rl::ValueFunction::create(c.policy.obs_dim(), rng, cfg.training.value_scale);
  c.schema_hash = checkpoint::schema_hash(checkpoint::schema_document(task));
  return c;
}

namespace {

LogRow summarize(const std::string& phase, int iteration, const rl::RolloutBatch& batch, int horizon,
                 const rl::TrpoDiagnostics& diag, double value_loss, double wall) {
  LogRow row;
  row.phase = phase;
  row.iteration = iteration;
  std::vector<double> returns, forces;
  double successes = 0.0;
  for (const auto& s : batch.stats) {
    if (s.length != horizon && batch.stats.size() > 1) continue;
    returns.push_back(s.episode_return);
    forces.push_back(s.max_force);
    successes += s.success ? 1.0 : 0.0;
  }
  row.mean_return = stats::mean(returns);
  row.success_rate = successes / static_cast<double>(returns.size());
  row.mean_f_max = stats::mean(forces);
  row.p90_f_max = stats::percentile(forces, 90.0);
  row.mean_force_penalty = batch.force_penalty.mean();
  row.kl = diag.kl;
  row.surrogate_improvement = diag.surrogate_improvement;
  row.backtracks = diag.backtracks;
  row.accepted = diag.accepted;
  row.value_loss = value_loss;
  row.wall_clock_s = wall;
  return row;
}

}  // namespace

PhaseResult run_phase(const config::ExperimentConfig& cfg, const config::PhaseSpec& phase,
                      checkpoint::Checkpoint init, int first_iteration, const fs::path& out_dir,
                      const IterationCallback& on_iteration) {
  const env::TaskConfig task = config::phase_task(cfg, phase);
  task.validate();
  cfg.trpo.validate();
  const std::string expected = checkpoint::schema_hash(checkpoint::schema_document(task));
  if (init.schema_hash != expected) {
    throw CheckpointError("checkpoint schema hash " + init.schema_hash +
                          " does not match the configured schema hash " + expected);
  }

  PhaseResult out;
  out.checkpoint = std::move(init);
  out.checkpoint.phase = phase.name;
  auto& ck = out.checkpoint;
  const fs::path phase_dir = out_dir.empty() ? fs::path() : out_dir / phase.name;

  for (int k = 0; k < phase.iterations; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const int iteration = first_iteration + k;
    const rl::RolloutBatch batch = rl::collect_rollouts(task, ck.policy, ck.value, cfg.training.samples_per_iteration,
                                                        cfg.seed, iteration, cfg.workers);
    const rl::GaeResult gae =
        rl::compute_gae(batch.rewards, batch.values, batch.episodes, cfg.trpo.gamma, cfg.trpo.gae_lambda);
    const rl::TrpoDiagnostics diag = rl::trpo_update(ck.policy, batch.obs, batch.actions, gae.advantages, cfg.trpo);
    const std::vector<double> losses = rl::fit_value(ck.value, batch.obs, gae.value_targets, cfg.training.value_fit);
    ck.iteration = iteration + 1;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    LogRow row = summarize(phase.name, iteration, batch, task.horizon, diag, losses.back(), wall);
    out.log.push_back(row);
    if (on_iteration) on_iteration(row);

    const int every = cfg.training.checkpoint_every;
    if (!phase_dir.empty() && every > 0 && (k + 1) % every == 0 && k + 1 < phase.iterations) {
      checkpoint::save(phase_dir / ("checkpoint_" + std::to_string(iteration + 1)), ck);
    }
  }
  if (!phase_dir.empty()) checkpoint::save(phase_dir / "checkpoint", ck);
  return out;
}

CurriculumResult run_curriculum(const config::ExperimentConfig& cfg, const fs::path& out_dir,
                                const IterationCallback& on_iteration) {
  cfg.validate();
  std::ofstream log_file;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    log_file.open(out_dir / "training_log.csv", std::ios::trunc);
    if (!log_file) throw ConfigError("cannot write '" + (out_dir / "training_log.csv").string() + "'");
    write_log_header(log_file);
  }
  auto stream_row = [&](const LogRow& row) {
    if (log_file.is_open()) log_file << format_row(row) << "\n" << std::flush;
    if (on_iteration) on_iteration(row);
  };

  CurriculumResult result;
  int iteration = 0;
  for (size_t i = 0; i < cfg.phases.size(); ++i) {
    const auto& phase = cfg.phases[i];
    const env::TaskConfig task = config::phase_task(cfg, phase);
    checkpoint::Checkpoint init;
    if (phase.init == "random") {
      init = initial_checkpoint(cfg, task);
    } else if (phase.init == "previous") {
      if (i == 0) throw ConfigError("phases." + phase.name + ".init: the first phase has no previous checkpoint");
      init = result.phase_checkpoints.back();
    } else {
      init = checkpoint::load(phase.init, checkpoint::schema_hash(checkpoint::schema_document(task)));
      iteration = init.iteration;
    }
    PhaseResult pr = run_phase(cfg, phase, std::move(init), iteration, out_dir, stream_row);
    iteration = pr.checkpoint.iteration;
    result.log.insert(result.log.end(), pr.log.begin(), pr.log.end());
    result.phase_checkpoints.push_back(std::move(pr.checkpoint));
  }
  result.final = result.phase_checkpoints.back();
  return result;
}

}  // namespace codress::curriculum
