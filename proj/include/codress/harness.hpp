#pragma once

#include "codress/checkpoint.hpp"
#include "codress/config.hpp"
#include "codress/env.hpp"
#include "codress/policy.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace codress::harness {

using Json = nlohmann::json;

class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset(const env::DressingEnv& env) = 0;
  virtual VecX act(const env::DressingEnv& env, const env::Observation& obs) = 0;
};

using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

/// Deterministic controller taking the policy mean.
ControllerFactory policy_controller(rl::JointPolicy policy);
ControllerFactory scripted_controller(double speed = 0.35);

struct EpisodeRecord {
  std::uint64_t seed = 0;
  env::EpisodeResult result;
};

/// Runs episodes with seeds base_seed .. base_seed + episodes - 1. Results are
/// in seed order and do not depend on `workers`.
std::vector<EpisodeRecord> evaluate(const env::TaskConfig& task, const ControllerFactory& controller,
                                    int episodes, std::uint64_t base_seed, int workers);

inline constexpr const char* kMetricsVersionLine = "# codress metrics v1";
inline constexpr const char* kMetricsHeader =
    "run_id,phase,episode,seed,success,time_to_success_s,max_force_N,mean_deformation,final_progress";

struct MetricsRow {
  std::string run_id;
  std::string phase;
  int episode = 0;
  std::uint64_t seed = 0;
  bool success = false;
  std::optional<double> time_to_success_s;
  double max_force_N = 0.0;
  double mean_deformation = 0.0;
  double final_progress = 0.0;
};

std::vector<MetricsRow> metrics_rows(const std::string& run_id, const std::string& phase,
                                     const std::vector<EpisodeRecord>& records);
std::string format_metrics_row(const MetricsRow& row);
void write_metrics(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_metrics(const std::filesystem::path& file, const std::vector<MetricsRow>& rows);

struct Summary {
  int episodes = 0;
  double success_rate = 0.0;
  std::optional<double> mean_time_to_success_s;  // over successful episodes
  double mean_max_force_N = 0.0;
  double p50_max_force_N = 0.0;
  double p90_max_force_N = 0.0;
  double p95_max_force_N = 0.0;
  double force_threshold_N = 50.0;
  double fraction_below_threshold = 0.0;  // max force strictly below the threshold
  double mean_final_progress = 0.0;
};

Summary summarize(const std::vector<MetricsRow>& rows, double force_threshold);
Json to_json(const Summary& s);

struct SweepPoint {
  double action_scale = 1.0;
  Summary summary;
};

struct SweepReport {
  std::vector<SweepPoint> points;
  double spearman_scale_vs_time = 0.0;  // NaN when undefined
  bool time_decreases_with_scale = false;
};

/// Evaluates the same seed set at every action scale. Rows for every scale are
/// appended to `rows` with phase "scale=<s>".
SweepReport sweep_action_scale(const env::TaskConfig& task, const ControllerFactory& controller,
                               const std::vector<double>& scales, int episodes, std::uint64_t base_seed,
                               int workers, const std::string& run_id, std::vector<MetricsRow>& rows);
Json to_json(const SweepReport& r);

// Command-line entry points. Each returns a process exit code.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCheckpoint = 3;
inline constexpr int kExitNumeric = 4;

struct CliOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> episodes;
  std::optional<double> action_scale;
  std::vector<std::string> ablate;
  std::optional<int> workers;
  std::filesystem::path checkpoint;
  std::string controller = "policy";  // "policy" or "scripted"
  std::vector<double> scales;
  bool quiet = false;
};

/// Loads the config file (if any) and applies command-line overrides.
config::ExperimentConfig resolve_config(const CliOptions& opts);

int cli_train(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cli_curriculum(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cli_eval(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cli_sweep(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cli_schema(const CliOptions& opts, std::ostream& out, std::ostream& err);

/// Maps an exception from any stage onto the documented exit codes.
int exit_code_for(const std::exception& e);

}  // namespace codress::harness
