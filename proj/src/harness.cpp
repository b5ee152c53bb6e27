#include "codress/harness.hpp"

#include "codress/curriculum.hpp"
#include "codress/errors.hpp"
#include "codress/rollout.hpp"
#include "codress/stats.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace codress::harness {

namespace fs = std::filesystem;

namespace {

class PolicyController : public Controller {
 public:
  explicit PolicyController(std::shared_ptr<const rl::JointPolicy> policy) : policy_(std::move(policy)) {}
  void reset(const env::DressingEnv&) override {}
  VecX act(const env::DressingEnv&, const env::Observation& obs) override {
    const VecX parts[] = {obs.human, obs.robot};
    return policy_->mean_action(policy_->concat_obs(parts));
  }

 private:
  std::shared_ptr<const rl::JointPolicy> policy_;
};

class ScriptedController : public Controller {
 public:
  explicit ScriptedController(double speed) : inserter_(speed) {}
  void reset(const env::DressingEnv& env) override { inserter_.reset(env); }
  VecX act(const env::DressingEnv& env, const env::Observation&) override { return inserter_.act(env); }

 private:
  env::ScriptedInserter inserter_;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string scale_label(double s) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "scale=%g", s);
  return buf;
}

}  // namespace

ControllerFactory policy_controller(rl::JointPolicy policy) {
  auto shared = std::make_shared<const rl::JointPolicy>(std::move(policy));
  return [shared] { return std::make_unique<PolicyController>(shared); };
}

ControllerFactory scripted_controller(double speed) {
  return [speed] { return std::make_unique<ScriptedController>(speed); };
}

std::vector<EpisodeRecord> evaluate(const env::TaskConfig& task, const ControllerFactory& controller,
                                    int episodes, std::uint64_t base_seed, int workers) {
  if (episodes < 1) throw ConfigError("eval.episodes must be at least 1");
  task.validate();
  std::vector<EpisodeRecord> records(episodes);
  rl::parallel_for(episodes, workers, [&](int, int i) {
    env::DressingEnv e(task);
    auto ctrl = controller();
    EpisodeRecord& rec = records[i];
    rec.seed = base_seed + static_cast<std::uint64_t>(i);
    env::Observation o = e.reset(rec.seed);
    ctrl->reset(e);
    while (!e.done()) o = e.step(ctrl->act(e, o)).obs;
    rec.result = e.result();
  });
  return records;
}

std::vector<MetricsRow> metrics_rows(const std::string& run_id, const std::string& phase,
                                     const std::vector<EpisodeRecord>& records) {
  std::vector<MetricsRow> rows;
  rows.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i].result;
    rows.push_back(MetricsRow{run_id, phase, static_cast<int>(i), records[i].seed, r.success, r.time_to_success,
                              r.max_force, r.mean_deformation, r.final_progress});
  }
  return rows;
}

std::string format_metrics_row(const MetricsRow& r) {
  std::string line = r.run_id + "," + r.phase + "," + std::to_string(r.episode) + "," + std::to_string(r.seed) +
                     "," + (r.success ? "1" : "0") + ",";
  if (r.time_to_success_s) line += fmt(*r.time_to_success_s);
  line += "," + fmt(r.max_force_N) + "," + fmt(r.mean_deformation) + "," + fmt(r.final_progress);
  return line;
}

void write_metrics(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsVersionLine << "\n" << kMetricsHeader << "\n";
  for (const auto& r : rows) out << format_metrics_row(r) << "\n";
}

void write_metrics(const fs::path& file, const std::vector<MetricsRow>& rows) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + file.string() + "'");
  write_metrics(out, rows);
}

Summary summarize(const std::vector<MetricsRow>& rows, double force_threshold) {
  Summary s;
  s.episodes = static_cast<int>(rows.size());
  s.force_threshold_N = force_threshold;
  if (rows.empty()) return s;
  std::vector<double> forces, times, progress;
  double successes = 0.0, below = 0.0;
  for (const auto& r : rows) {
    forces.push_back(r.max_force_N);
    progress.push_back(r.final_progress);
    if (r.success) successes += 1.0;
    if (r.time_to_success_s) times.push_back(*r.time_to_success_s);
    if (r.max_force_N < force_threshold) below += 1.0;
  }
  const double n = static_cast<double>(rows.size());
  s.success_rate = successes / n;
  if (!times.empty()) s.mean_time_to_success_s = stats::mean(times);
  s.mean_max_force_N = stats::mean(forces);
  s.p50_max_force_N = stats::percentile(forces, 50.0);
  s.p90_max_force_N = stats::percentile(forces, 90.0);
  s.p95_max_force_N = stats::percentile(forces, 95.0);
  s.fraction_below_threshold = below / n;
  s.mean_final_progress = stats::mean(progress);
  return s;
}

Json to_json(const Summary& s) {
  Json j;
  j["episodes"] = s.episodes;
  j["success_rate"] = s.success_rate;
  j["mean_time_to_success_s"] = s.mean_time_to_success_s ? Json(*s.mean_time_to_success_s) : Json(nullptr);
  j["mean_max_force_N"] = s.mean_max_force_N;
  j["p50_max_force_N"] = s.p50_max_force_N;
  j["p90_max_force_N"] = s.p90_max_force_N;
  j["p95_max_force_N"] = s.p95_max_force_N;
  j["force_threshold_N"] = s.force_threshold_N;
  j["fraction_below_threshold"] = s.fraction_below_threshold;
  j["mean_final_progress"] = s.mean_final_progress;
  return j;
}

SweepReport sweep_action_scale(const env::TaskConfig& task, const ControllerFactory& controller,
                               const std::vector<double>& scales, int episodes, std::uint64_t base_seed,
                               int workers, const std::string& run_id, std::vector<MetricsRow>& rows) {
  if (scales.empty()) throw ConfigError("eval.scales must not be empty");
  SweepReport report;
  std::vector<double> xs, ts;
  for (double scale : scales) {
    if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("action scale " + fmt(scale) + " must lie in (0, 1]");
    env::TaskConfig t = task;
    t.action_scale = scale;
    const auto part = metrics_rows(run_id, scale_label(scale), evaluate(t, controller, episodes, base_seed, workers));
    rows.insert(rows.end(), part.begin(), part.end());
    SweepPoint p{scale, summarize(part, 50.0)};
    if (p.summary.mean_time_to_success_s) {
      xs.push_back(scale);
      ts.push_back(*p.summary.mean_time_to_success_s);
    }
    report.points.push_back(p);
  }
  report.spearman_scale_vs_time = stats::spearman(xs, ts);
  report.time_decreases_with_scale = report.spearman_scale_vs_time < 0.0;
  return report;
}

Json to_json(const SweepReport& r) {
  Json j;
  j["points"] = Json::array();
  for (const auto& p : r.points) {
    Json s = to_json(p.summary);
    s["action_scale"] = p.action_scale;
    j["points"].push_back(s);
  }
  j["spearman_scale_vs_time_to_success"] =
      std::isnan(r.spearman_scale_vs_time) ? Json(nullptr) : Json(r.spearman_scale_vs_time);
  j["time_decreases_with_scale"] = r.time_decreases_with_scale;
  return j;
}

// ---------------------------------------------------------------- CLI

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const CheckpointError*>(&e)) return kExitCheckpoint;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  return kExitConfig;
}

config::ExperimentConfig resolve_config(const CliOptions& opts) {
  config::ExperimentConfig cfg;
  if (!opts.config.empty()) {
    if (!fs::exists(opts.config)) throw ConfigError("config file not found: " + opts.config.string());
    cfg = config::load(opts.config);
  }
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.out) cfg.output_dir = opts.out->string();
  if (opts.episodes) cfg.eval.episodes = *opts.episodes;
  if (opts.action_scale) cfg.task.action_scale = *opts.action_scale;
  if (opts.workers) cfg.workers = *opts.workers;
  for (const auto& a : opts.ablate) config::apply_ablation(cfg.task.ablation, a);
  if (!opts.scales.empty()) cfg.eval.scales = opts.scales;
  cfg.validate();
  return cfg;
}

namespace {

std::string run_id(const CliOptions& opts, const config::ExperimentConfig& cfg) {
  const std::string stem = opts.config.empty() ? "default" : opts.config.stem().string();
  return stem + "-s" + std::to_string(cfg.seed);
}

fs::path prepare_out(const config::ExperimentConfig& cfg) {
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  std::ofstream snap(out / "resolved_config.json", std::ios::trunc);
  if (!snap) throw ConfigError("cannot write '" + (out / "resolved_config.json").string() + "'");
  snap << config::to_json(cfg).dump(2) << "\n";
  return out;
}

void write_json(const fs::path& file, const Json& j) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + file.string() + "'");
  out << j.dump(2) << "\n";
}

env::TaskConfig eval_task(const config::ExperimentConfig& cfg) {
  env::TaskConfig t = cfg.task;
  if (cfg.eval.horizon > 0) t.horizon = cfg.eval.horizon;
  return t;
}

ControllerFactory make_controller(const CliOptions& opts, const config::ExperimentConfig& cfg) {
  if (opts.controller == "scripted") return scripted_controller();
  if (opts.controller != "policy") throw ConfigError("unknown controller '" + opts.controller + "'");
  if (opts.checkpoint.empty()) throw ConfigError("--checkpoint is required for the policy controller");
  const std::string expected = checkpoint::schema_hash(checkpoint::schema_document(cfg.task));
  return policy_controller(checkpoint::load(opts.checkpoint, expected).policy);
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

void progress_line(std::ostream& out, const curriculum::LogRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "[%s] iter %4d  return %9.2f  success %5.1f%%  p90 f_max %7.2f N  kl %.4f  %.2fs\n",
                r.phase.c_str(), r.iteration, r.mean_return, 100.0 * r.success_rate, r.p90_f_max, r.kl,
                r.wall_clock_s);
  out << buf << std::flush;
}

}  // namespace

int cli_train(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = resolve_config(opts);
    const fs::path dir = prepare_out(cfg);
    curriculum::run_curriculum(cfg, dir, [&](const curriculum::LogRow& r) {
      if (!opts.quiet) progress_line(out, r);
    });
    out << "checkpoints written under " << dir.string() << "\n";
    return kExitOk;
  });
}

int cli_curriculum(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = resolve_config(opts);
    const fs::path dir = prepare_out(cfg);
    const auto result = curriculum::run_curriculum(cfg, dir, [&](const curriculum::LogRow& r) {
      if (!opts.quiet) progress_line(out, r);
    });
    const env::TaskConfig task = eval_task(cfg);
    const std::string id = run_id(opts, cfg);
    Json report;
    report["phases"] = Json::array();
    std::vector<Summary> summaries;
    for (size_t i = 0; i < cfg.phases.size(); ++i) {
      const auto& name = cfg.phases[i].name;
      const auto rows = metrics_rows(
          id, name,
          evaluate(task, policy_controller(result.phase_checkpoints[i].policy), cfg.eval.episodes, cfg.eval.seed,
                   cfg.workers));
      write_metrics(dir / name / "metrics.csv", rows);
      summaries.push_back(summarize(rows, cfg.eval.force_threshold));
      Json s = to_json(summaries.back());
      s["phase"] = name;
      write_json(dir / name / "summary.json", s);
      report["phases"].push_back(s);
    }
    if (summaries.size() >= 2) {
      const Summary& a = summaries.front();
      const Summary& b = summaries.back();
      report["change"] = {{"fraction_below_threshold", b.fraction_below_threshold - a.fraction_below_threshold},
                          {"success_rate", b.success_rate - a.success_rate}};
    }
    write_json(dir / "curriculum_report.json", report);
    out << report.dump(2) << "\n";
    return kExitOk;
  });
}

int cli_eval(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = resolve_config(opts);
    const auto controller = make_controller(opts, cfg);
    const fs::path dir = prepare_out(cfg);
    const auto rows = metrics_rows(run_id(opts, cfg), "eval",
                                   evaluate(eval_task(cfg), controller, cfg.eval.episodes, cfg.eval.seed, cfg.workers));
    write_metrics(dir / "metrics.csv", rows);
    Json s = to_json(summarize(rows, cfg.eval.force_threshold));
    s["action_scale"] = cfg.task.action_scale;
    write_json(dir / "summary.json", s);
    out << s.dump(2) << "\n";
    return kExitOk;
  });
}

int cli_sweep(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = resolve_config(opts);
    const auto controller = make_controller(opts, cfg);
    const fs::path dir = prepare_out(cfg);
    std::vector<MetricsRow> rows;
    const SweepReport report = sweep_action_scale(eval_task(cfg), controller, cfg.eval.scales, cfg.eval.episodes,
                                                  cfg.eval.seed, cfg.workers, run_id(opts, cfg), rows);
    write_metrics(dir / "sweep_metrics.csv", rows);
    const Json j = to_json(report);
    write_json(dir / "sweep_report.json", j);
    out << j.dump(2) << "\n";
    return kExitOk;
  });
}

int cli_schema(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = resolve_config(opts);
    Json doc = checkpoint::schema_document(cfg.task);
    Json j;
    j["schema_hash"] = checkpoint::schema_hash(doc);
    j["checkpoint_version"] = checkpoint::kCheckpointVersion;
    j["schema"] = std::move(doc);
    if (opts.out) {
      fs::create_directories(*opts.out);
      write_json(*opts.out / "schema.json", j);
    }
    out << j.dump(2) << "\n";
    return kExitOk;
  });
}

}  // namespace codress::harness
