#include "codress/config.hpp"

#include "codress/errors.hpp"

#include <fstream>
#include <set>

namespace codress::config {

namespace fs = std::filesystem;

namespace {

/// Typed access to one JSON object that rejects unknown keys and names the
/// full key path in every error.
class Section {
 public:
  Section(const Json& j, std::string path, std::set<std::string> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + ": expected an object");
    for (const auto& [key, value] : j_.items()) {
      if (!allowed.count(key)) throw ConfigError("unknown config key '" + where(key) + "'");
    }
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }
  [[nodiscard]] const Json& raw(const std::string& key) const { return j_.at(key); }
  [[nodiscard]] std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  void get(const std::string& key, double& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_number()) throw ConfigError(where(key) + ": expected a number");
    out = j_.at(key).get<double>();
  }
  void get(const std::string& key, int& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    out = j_.at(key).get<int>();
  }
  void get(const std::string& key, std::uint64_t& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_number_unsigned()) throw ConfigError(where(key) + ": expected a non-negative integer");
    out = j_.at(key).get<std::uint64_t>();
  }
  void get(const std::string& key, std::string& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_string()) throw ConfigError(where(key) + ": expected a string");
    out = j_.at(key).get<std::string>();
  }
  void get(const std::string& key, Vec3& out) const {
    if (!has(key)) return;
    const auto v = numbers(key, 3);
    out = Vec3(v[0], v[1], v[2]);
  }
  void get(const std::string& key, std::array<double, 2>& out) const {
    if (!has(key)) return;
    const auto v = numbers(key, 2);
    out = {v[0], v[1]};
  }
  void get(const std::string& key, reward::GroupVector& out) const {
    if (!has(key)) return;
    const auto v = numbers(key, reward::kPoseGroups);
    std::copy(v.begin(), v.end(), out.begin());
  }
  [[nodiscard]] std::vector<double> numbers(const std::string& key, int expected = -1) const {
    const Json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array");
    if (expected >= 0 && static_cast<int>(v.size()) != expected) {
      throw ConfigError(where(key) + ": expected " + std::to_string(expected) + " values");
    }
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where(key) + ": expected numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  [[nodiscard]] Section child(const std::string& key, std::set<std::string> allowed) const {
    return Section(j_.at(key), where(key), std::move(allowed));
  }

 private:
  const Json& j_;
  std::string path_;
};

Json array2(const std::array<double, 2>& a) { return Json::array({a[0], a[1]}); }
Json vec3(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

void read_reward(const Section& s, reward::RewardWeights& w) {
  s.get("w1", w.w1);
  s.get("w2", w.w2);
  s.get("w3", w.w3);
  s.get("w4", w.w4);
  s.get("w5", w.w5);
  s.get("w_mid", w.w_mid);
  s.get("w_scale", w.w_scale);
}

const std::set<std::string> kRewardOverrideKeys = {"w1", "w2", "w3", "w4", "w5", "w_mid", "w_scale"};

void read_task(const Section& s, env::TaskConfig& t) {
  std::string name = env::task_name(t.task);
  s.get("name", name);
  try {
    t.task = env::parse_task(name);
  } catch (const ConfigError& e) {
    throw ConfigError(s.where("name") + ": " + e.what());
  }
  s.get("horizon", t.horizon);
  s.get("policy_rate", t.policy_rate);
  s.get("substeps", t.substeps);
  s.get("max_reset_tries", t.max_reset_tries);
  s.get("action_scale", t.action_scale);
  s.get("max_target_delta", t.max_target_delta);
  s.get("threshold_fraction", t.threshold_fraction);
  s.get("settle_time", t.settle_time);
  s.get("gravity", t.gravity);
  if (s.has("separation")) {
    std::array<double, 2> sep{t.min_separation, t.max_separation};
    s.get("separation", sep);
    t.min_separation = sep[0];
    t.max_separation = sep[1];
  }
  if (s.has("grip_box")) {
    const auto b = s.child("grip_box", {"min", "max"});
    b.get("min", t.grip_box_min);
    b.get("max", t.grip_box_max);
  }
  if (s.has("impairment")) {
    const auto im = s.child("impairment", {"kind", "noise_range", "strength_range", "j_min_range",
                                           "j_max_range", "nominal_range"});
    std::string kind = body::impairment_name(t.impairment.kind);
    im.get("kind", kind);
    try {
      t.impairment.kind = body::parse_impairment(kind);
    } catch (const ConfigError& e) {
      throw ConfigError(im.where("kind") + ": " + e.what());
    }
    im.get("noise_range", t.impairment.noise_range);
    im.get("strength_range", t.impairment.strength_range);
    im.get("j_min_range", t.impairment.j_min_range);
    im.get("j_max_range", t.impairment.j_max_range);
    std::array<double, 2> nominal{t.impairment.nominal_min, t.impairment.nominal_max};
    im.get("nominal_range", nominal);
    t.impairment.nominal_min = nominal[0];
    t.impairment.nominal_max = nominal[1];
  }
  if (s.has("reward")) {
    auto keys = kRewardOverrideKeys;
    keys.insert({"preset", "penalty", "force_reference", "deformation_slack"});
    const auto r = s.child("reward", keys);
    if (r.has("preset")) {
      std::string preset;
      r.get("preset", preset);
      try {
        t.weights = reward::weight_preset(preset);
      } catch (const ConfigError& e) {
        throw ConfigError(r.where("preset") + ": " + e.what());
      }
    }
    read_reward(r, t.weights);
    if (r.has("penalty")) {
      std::string p;
      r.get("penalty", p);
      try {
        t.force_penalty = reward::parse_force_penalty(p);
      } catch (const ConfigError& e) {
        throw ConfigError(r.where("penalty") + ": " + e.what());
      }
    }
    r.get("force_reference", t.force_reference);
    r.get("deformation_slack", t.deformation_slack);
  }
  if (s.has("sleeve")) {
    const auto g = s.child("sleeve", {"n_particles", "rest_segment_length", "tube_radius",
                                      "stretch_stiffness", "bend_stiffness", "damping",
                                      "particle_mass", "contact_stiffness"});
    g.get("n_particles", t.sleeve.n_particles);
    g.get("rest_segment_length", t.sleeve.rest_segment_length);
    g.get("tube_radius", t.sleeve.tube_radius);
    g.get("stretch_stiffness", t.sleeve.stretch_stiffness);
    g.get("bend_stiffness", t.sleeve.bend_stiffness);
    g.get("damping", t.sleeve.damping);
    g.get("particle_mass", t.sleeve.particle_mass);
    g.get("contact_stiffness", t.sleeve.contact_stiffness);
  }
  if (s.has("gains")) {
    const auto g = s.child("gains", {"human_kp", "human_kd", "robot_kp", "robot_kd"});
    g.get("human_kp", t.human_kp);
    g.get("human_kd", t.human_kd);
    g.get("robot_kp", t.robot_kp);
    g.get("robot_kd", t.robot_kd);
  }
  if (s.has("gripper")) {
    const auto g = s.child("gripper", {"radius", "stiffness"});
    g.get("radius", t.gripper_radius);
    g.get("stiffness", t.gripper_stiffness);
  }
  if (s.has("robot")) {
    const auto g = s.child("robot", {"base_position", "base_yaw"});
    g.get("base_position", t.robot.base_position);
    g.get("base_yaw", t.robot.base_yaw);
  }
  if (s.has("ablate")) {
    const Json& a = s.raw("ablate");
    if (!a.is_array()) throw ConfigError(s.where("ablate") + ": expected an array of names");
    t.ablation = {};
    for (const auto& e : a) {
      if (!e.is_string()) throw ConfigError(s.where("ablate") + ": expected an array of names");
      try {
        apply_ablation(t.ablation, e.get<std::string>());
      } catch (const ConfigError& err) {
        throw ConfigError(s.where("ablate") + ": " + err.what());
      }
    }
  }
}

void read_trpo(const Section& s, rl::TrpoConfig& c) {
  s.get("kl_delta", c.kl_delta);
  s.get("cg_iterations", c.cg_iterations);
  s.get("cg_damping", c.cg_damping);
  s.get("backtrack_ratio", c.backtrack_ratio);
  s.get("max_backtracks", c.max_backtracks);
  s.get("gamma", c.gamma);
  s.get("gae_lambda", c.gae_lambda);
  s.get("fisher_stride", c.fisher_stride);
}

PhaseSpec read_phase(const Section& s, int index) {
  PhaseSpec p;
  p.name = "phase" + std::to_string(index + 1);
  p.init = index == 0 ? "random" : "previous";
  s.get("name", p.name);
  s.get("iterations", p.iterations);
  s.get("init", p.init);
  if (s.has("penalty")) {
    std::string name;
    s.get("penalty", name);
    try {
      p.penalty = reward::parse_force_penalty(name);
    } catch (const ConfigError& e) {
      throw ConfigError(s.where("penalty") + ": " + e.what());
    }
  }
  if (s.has("reward")) {
    const auto r = s.child("reward", kRewardOverrideKeys);
    reward::RewardWeights probe;
    read_reward(r, probe);  // type-checks the overrides
    p.reward_overrides = s.raw("reward");
  }
  return p;
}

}  // namespace

void apply_ablation(sensors::AblationFlags& flags, const std::string& name) {
  if (name == "capacitive") {
    flags.drop_capacitive = true;
  } else if (name == "jointpos") {
    flags.drop_human_joint_positions = true;
  } else if (name != "none") {
    throw ConfigError("unknown ablation '" + name + "' (expected capacitive, jointpos or none)");
  }
}

void merge(Json& base, const Json& overlay) {
  if (base.is_object() && overlay.is_object()) {
    for (const auto& [key, value] : overlay.items()) {
      if (base.contains(key)) {
        merge(base[key], value);
      } else {
        base[key] = value;
      }
    }
  } else {
    base = overlay;
  }
}

Json load_tree(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  Json tree;
  try {
    tree = Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("cannot parse config file '" + path.string() + "': " + e.what());
  }
  if (!tree.is_object()) throw ConfigError("config file '" + path.string() + "' must hold an object");
  if (!tree.contains("include")) return tree;

  Json includes = tree["include"];
  tree.erase("include");
  if (includes.is_string()) includes = Json::array({includes});
  if (!includes.is_array()) throw ConfigError("include: expected a path or a list of paths");
  Json resolved = Json::object();
  for (const auto& inc : includes) {
    if (!inc.is_string()) throw ConfigError("include: expected a path or a list of paths");
    merge(resolved, load_tree(path.parent_path() / inc.get<std::string>()));
  }
  merge(resolved, tree);
  return resolved;
}

ExperimentConfig from_json(const Json& tree) {
  ExperimentConfig cfg;
  const Section top(tree, "", {"seed", "workers", "output_dir", "task", "trpo", "training", "phases", "eval"});
  top.get("seed", cfg.seed);
  top.get("workers", cfg.workers);
  top.get("output_dir", cfg.output_dir);
  if (top.has("task")) {
    read_task(top.child("task", {"name", "horizon", "policy_rate", "substeps", "grip_box", "separation",
                                 "max_reset_tries", "impairment", "reward", "action_scale",
                                 "max_target_delta", "threshold_fraction", "settle_time", "sleeve",
                                 "gains", "gravity", "gripper", "robot", "ablate"}),
              cfg.task);
  }
  if (top.has("trpo")) {
    read_trpo(top.child("trpo", {"kl_delta", "cg_iterations", "cg_damping", "backtrack_ratio",
                                 "max_backtracks", "gamma", "gae_lambda", "fisher_stride"}),
              cfg.trpo);
  }
  if (top.has("training")) {
    const auto t = top.child("training", {"samples_per_iteration", "init_log_std", "value_scale",
                                          "value_epochs", "value_step_size", "checkpoint_every"});
    t.get("samples_per_iteration", cfg.training.samples_per_iteration);
    t.get("init_log_std", cfg.training.init_log_std);
    t.get("value_scale", cfg.training.value_scale);
    t.get("value_epochs", cfg.training.value_fit.epochs);
    t.get("value_step_size", cfg.training.value_fit.step_size);
    t.get("checkpoint_every", cfg.training.checkpoint_every);
  }
  if (top.has("phases")) {
    const Json& phases = top.raw("phases");
    if (!phases.is_array() || phases.empty()) throw ConfigError("phases: expected a non-empty array");
    cfg.phases.clear();
    for (size_t i = 0; i < phases.size(); ++i) {
      const Section s(phases[i], "phases[" + std::to_string(i) + "]",
                      {"name", "iterations", "penalty", "reward", "init"});
      cfg.phases.push_back(read_phase(s, static_cast<int>(i)));
    }
  }
  if (top.has("eval")) {
    const auto e = top.child("eval", {"episodes", "horizon", "seed", "scales", "force_threshold"});
    e.get("episodes", cfg.eval.episodes);
    e.get("horizon", cfg.eval.horizon);
    e.get("seed", cfg.eval.seed);
    if (e.has("scales")) cfg.eval.scales = e.numbers("scales");
    e.get("force_threshold", cfg.eval.force_threshold);
  }
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  task.validate();
  trpo.validate();
  if (training.samples_per_iteration < 1) throw ConfigError("training.samples_per_iteration must be at least 1");
  if (!(training.value_scale > 0.0)) throw ConfigError("training.value_scale must be positive");
  if (training.value_fit.epochs < 0) throw ConfigError("training.value_epochs must be non-negative");
  if (!(training.value_fit.step_size > 0.0)) throw ConfigError("training.value_step_size must be positive");
  if (training.checkpoint_every < 0) throw ConfigError("training.checkpoint_every must be non-negative");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (eval.episodes < 1) throw ConfigError("eval.episodes must be at least 1");
  if (eval.horizon < 0) throw ConfigError("eval.horizon must be non-negative");
  for (double s : eval.scales) {
    if (!(s > 0.0 && s <= 1.0)) throw ConfigError("eval.scales: every scale must lie in (0, 1]");
  }
  for (size_t i = 0; i < phases.size(); ++i) {
    const auto& p = phases[i];
    if (p.iterations < 0) throw ConfigError("phases[" + std::to_string(i) + "].iterations must be non-negative");
    if (i > 0 && p.init == "random") {
      throw ConfigError("phases[" + std::to_string(i) + "].init: refinement phases must start from a checkpoint");
    }
    if (i == 0 && p.init == "previous") {
      throw ConfigError("phases[0].init: there is no previous phase");
    }
    phase_task(*this, p).weights.validate();
  }
}

env::TaskConfig phase_task(const ExperimentConfig& cfg, const PhaseSpec& phase) {
  env::TaskConfig t = cfg.task;
  const Section r(phase.reward_overrides, "phases." + phase.name + ".reward", kRewardOverrideKeys);
  read_reward(r, t.weights);
  t.force_penalty = phase.penalty;
  return t;
}

Json to_json(const ExperimentConfig& cfg) {
  const auto& t = cfg.task;
  Json ablate = Json::array();
  if (t.ablation.drop_capacitive) ablate.push_back("capacitive");
  if (t.ablation.drop_human_joint_positions) ablate.push_back("jointpos");
  Json w5 = Json::array();
  for (double v : t.weights.w5) w5.push_back(v);

  Json j;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["output_dir"] = cfg.output_dir;
  j["task"] = {
      {"name", env::task_name(t.task)},
      {"horizon", t.horizon},
      {"policy_rate", t.policy_rate},
      {"substeps", t.substeps},
      {"grip_box", {{"min", vec3(t.grip_box_min)}, {"max", vec3(t.grip_box_max)}}},
      {"separation", Json::array({t.min_separation, t.max_separation})},
      {"max_reset_tries", t.max_reset_tries},
      {"impairment",
       {{"kind", body::impairment_name(t.impairment.kind)},
        {"noise_range", array2(t.impairment.noise_range)},
        {"strength_range", array2(t.impairment.strength_range)},
        {"j_min_range", array2(t.impairment.j_min_range)},
        {"j_max_range", array2(t.impairment.j_max_range)},
        {"nominal_range", Json::array({t.impairment.nominal_min, t.impairment.nominal_max})}}},
      {"reward",
       {{"w1", t.weights.w1}, {"w2", t.weights.w2}, {"w3", t.weights.w3}, {"w4", t.weights.w4},
        {"w5", w5}, {"w_mid", t.weights.w_mid}, {"w_scale", t.weights.w_scale},
        {"penalty", reward::force_penalty_name(t.force_penalty)},
        {"force_reference", t.force_reference}, {"deformation_slack", t.deformation_slack}}},
      {"action_scale", t.action_scale},
      {"max_target_delta", t.max_target_delta},
      {"threshold_fraction", t.threshold_fraction},
      {"settle_time", t.settle_time},
      {"sleeve",
       {{"n_particles", t.sleeve.n_particles}, {"rest_segment_length", t.sleeve.rest_segment_length},
        {"tube_radius", t.sleeve.tube_radius}, {"stretch_stiffness", t.sleeve.stretch_stiffness},
        {"bend_stiffness", t.sleeve.bend_stiffness}, {"damping", t.sleeve.damping},
        {"particle_mass", t.sleeve.particle_mass}, {"contact_stiffness", t.sleeve.contact_stiffness}}},
      {"gains",
       {{"human_kp", t.human_kp}, {"human_kd", t.human_kd}, {"robot_kp", t.robot_kp}, {"robot_kd", t.robot_kd}}},
      {"gravity", t.gravity},
      {"gripper", {{"radius", t.gripper_radius}, {"stiffness", t.gripper_stiffness}}},
      {"robot", {{"base_position", vec3(t.robot.base_position)}, {"base_yaw", t.robot.base_yaw}}},
      {"ablate", ablate},
  };
  j["trpo"] = {{"kl_delta", cfg.trpo.kl_delta},         {"cg_iterations", cfg.trpo.cg_iterations},
               {"cg_damping", cfg.trpo.cg_damping},     {"backtrack_ratio", cfg.trpo.backtrack_ratio},
               {"max_backtracks", cfg.trpo.max_backtracks}, {"gamma", cfg.trpo.gamma},
               {"gae_lambda", cfg.trpo.gae_lambda},     {"fisher_stride", cfg.trpo.fisher_stride}};
  j["training"] = {{"samples_per_iteration", cfg.training.samples_per_iteration},
                   {"init_log_std", cfg.training.init_log_std},
                   {"value_scale", cfg.training.value_scale},
                   {"value_epochs", cfg.training.value_fit.epochs},
                   {"value_step_size", cfg.training.value_fit.step_size},
                   {"checkpoint_every", cfg.training.checkpoint_every}};
  j["phases"] = Json::array();
  for (const auto& p : cfg.phases) {
    j["phases"].push_back({{"name", p.name},
                           {"iterations", p.iterations},
                           {"penalty", reward::force_penalty_name(p.penalty)},
                           {"reward", p.reward_overrides},
                           {"init", p.init}});
  }
  j["eval"] = {{"episodes", cfg.eval.episodes},
               {"horizon", cfg.eval.horizon},
               {"seed", cfg.eval.seed},
               {"scales", cfg.eval.scales},
               {"force_threshold", cfg.eval.force_threshold}};
  return j;
}

ExperimentConfig load(const fs::path& path) { return from_json(load_tree(path)); }

}  // namespace codress::config
