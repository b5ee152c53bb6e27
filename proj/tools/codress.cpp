#include "codress/harness.hpp"

#include "CLI11.hpp"

#include <iostream>

using codress::harness::CliOptions;

namespace {

void add_common(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--config", o.config, "Experiment config file");
  cmd->add_option("--seed", o.seed, "Run seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--ablate", o.ablate, "Drop an observation slice: capacitive or jointpos")
      ->check(CLI::IsMember({"capacitive", "jointpos", "none"}));
  cmd->add_flag("--quiet", o.quiet, "Suppress per-iteration progress");
}

void add_eval(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint directory");
  cmd->add_option("--episodes", o.episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
  cmd->add_option("--controller", o.controller, "policy or scripted")
      ->check(CLI::IsMember({"policy", "scripted"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-optimized human/robot policies for a reduced assisted-dressing task"};
  app.require_subcommand(1);
  CliOptions o;

  auto* train = app.add_subcommand("train", "Train every configured phase");
  add_common(train, o);
  auto* curriculum = app.add_subcommand("curriculum", "Train all phases, then evaluate each phase's policy");
  add_common(curriculum, o);
  curriculum->add_option("--episodes", o.episodes, "Evaluation episodes per phase")->check(CLI::PositiveNumber);
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval, o);
  add_eval(eval, o);
  eval->add_option("--action-scale", o.action_scale, "Action scale")->check(CLI::Range(0.0, 1.0));
  auto* sweep = app.add_subcommand("sweep-action-scale", "Evaluate a checkpoint over several action scales");
  add_common(sweep, o);
  add_eval(sweep, o);
  sweep->add_option("--scales", o.scales, "Action scales (default from config)");
  auto* schema = app.add_subcommand("schema", "Print the observation/action schema and its hash");
  add_common(schema, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : codress::harness::kExitConfig;
  }

  namespace h = codress::harness;
  if (*train) return h::cli_train(o, std::cout, std::cerr);
  if (*curriculum) return h::cli_curriculum(o, std::cout, std::cerr);
  if (*eval) return h::cli_eval(o, std::cout, std::cerr);
  if (*sweep) return h::cli_sweep(o, std::cout, std::cerr);
  return h::cli_schema(o, std::cout, std::cerr);
}
