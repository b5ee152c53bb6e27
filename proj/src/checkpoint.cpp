#include "codress/checkpoint.hpp"

#include "codress/errors.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace codress::checkpoint {

namespace fs = std::filesystem;

namespace {

const char* const kHumanJoints[] = {"shoulder_flexion", "shoulder_abduction", "shoulder_rotation", "elbow"};
const char* const kRobotJoints[] = {"base_yaw", "shoulder_pitch", "elbow_pitch", "wrist_roll", "wrist_pitch", "wrist_yaw"};

Json layout_json(const sensors::ObservationLayout& layout) {
  Json fields = Json::array();
  for (const auto& f : layout.fields()) {
    fields.push_back({{"name", f.name}, {"offset", f.offset}, {"length", f.length}});
  }
  return fields;
}

Json mlp_layout(const rl::Mlp& net) {
  Json layers = Json::array();
  for (int l = 0; l < net.layers(); ++l) {
    const int in = net.sizes()[l];
    const int out = net.sizes()[l + 1];
    layers.push_back({{"weight_offset", net.weight_offset(l)},
                      {"weight_shape", {out, in}},
                      {"weight_order", "column-major"},
                      {"bias_offset", net.weight_offset(l) + out * in},
                      {"bias_length", out},
                      {"activation", l + 1 < net.layers() ? "tanh" : "linear"}});
  }
  return layers;
}

std::vector<int> read_sizes(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() < 2) throw CheckpointError("manifest: " + what + " layer sizes are malformed");
  std::vector<int> sizes;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<int>() <= 0) throw CheckpointError("manifest: " + what + " layer sizes are malformed");
    sizes.push_back(v.get<int>());
  }
  return sizes;
}

const Json& need(const Json& j, const std::string& key) {
  if (!j.contains(key)) throw CheckpointError("manifest: missing key '" + key + "'");
  return j.at(key);
}

}  // namespace

std::vector<int> policy_layers(int obs_dim, int act_dim) {
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), rl::kDefaultHidden.begin(), rl::kDefaultHidden.end());
  sizes.push_back(act_dim);
  return sizes;
}

Json schema_document(const env::TaskConfig& task) {
  const int arms = task.arms();
  const auto human = sensors::human_layout(arms);
  const auto robot = sensors::robot_layout(arms, task.ablation);
  Json human_actions = Json::array();
  for (int a = 0; a < arms; ++a) {
    for (const char* j : kHumanJoints) human_actions.push_back("arm" + std::to_string(a) + "_" + j);
  }
  Json robot_actions = Json::array();
  for (int a = 0; a < arms; ++a) {
    for (const char* j : kRobotJoints) robot_actions.push_back("robot" + std::to_string(a) + "_" + j);
  }
  const int h_act = static_cast<int>(human_actions.size());
  const int r_act = static_cast<int>(robot_actions.size());

  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["task"] = env::task_name(task.task);
  doc["arms"] = arms;
  doc["ablation"] = {{"capacitive", task.ablation.drop_capacitive},
                     {"jointpos", task.ablation.drop_human_joint_positions}};
  doc["agents"] = Json::array({
      {{"name", "human"},
       {"observation", layout_json(human)},
       {"observation_size", human.size()},
       {"action", human_actions},
       {"action_size", h_act},
       {"network", policy_layers(human.size(), h_act)}},
      {{"name", "robot"},
       {"observation", layout_json(robot)},
       {"observation_size", robot.size()},
       {"action", robot_actions},
       {"action_size", r_act},
       {"network", policy_layers(robot.size(), r_act)}},
  });
  doc["joint_observation"] = {
      {"size", human.size() + robot.size()},
      {"routing", Json::array({{{"agent", "human"}, {"offset", 0}, {"length", human.size()}},
                               {{"agent", "robot"}, {"offset", human.size()}, {"length", robot.size()}}})}};
  doc["joint_action"] = {
      {"size", h_act + r_act},
      {"routing", Json::array({{{"agent", "human"}, {"offset", 0}, {"length", h_act}},
                               {{"agent", "robot"}, {"offset", h_act}, {"length", r_act}}})}};
  doc["interface"] = {
      {"reset", "reset(seed) -> observation {human, robot}"},
      {"step", "step(joint_action) -> observation, reward breakdown {r_p, r_d, r_g, r_c, r_r, total}, done, "
               "info {progress, geodesic, max_stretch, f_max}"},
      {"action", "normalized PD-target change per joint; clamped to [-1, 1], then multiplied by "
                 "max_target_delta * action_scale"},
      {"done", "true once the step count reaches the horizon; success does not end an episode"}};
  return doc;
}

std::string schema_hash(const Json& schema) {
  const std::string text = schema.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_f64(const fs::path& file, const VecX& values) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write '" + file.string() + "'");
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(values[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    unsigned char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!out) throw CheckpointError("failed writing '" + file.string() + "'");
}

VecX read_f64(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw CheckpointError("cannot read '" + file.string() + "'");
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() % 8 != 0) throw CheckpointError("'" + file.string() + "' is not a float64 array");
  VecX v(static_cast<Eigen::Index>(data.size() / 8));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, data.data() + 8 * i, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v[i] = std::bit_cast<double>(bits);
  }
  return v;
}

void save(const fs::path& dir, const Checkpoint& ckpt) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CheckpointError("cannot create checkpoint directory '" + dir.string() + "'");
  const char* const names[] = {"human", "robot"};
  if (ckpt.policy.num_agents() != 2) throw CheckpointError("checkpoint expects a human and a robot policy");

  Json manifest;
  manifest["format"] = "codress-checkpoint";
  manifest["version"] = kCheckpointVersion;
  manifest["schema_hash"] = ckpt.schema_hash;
  manifest["phase"] = ckpt.phase;
  manifest["iteration"] = ckpt.iteration;
  manifest["agents"] = Json::array();
  for (int i = 0; i < 2; ++i) {
    const auto& agent = ckpt.policy.agent(i);
    const std::string params_file = std::string(names[i]) + "_policy.bin";
    const std::string log_std_file = std::string(names[i]) + "_log_std.bin";
    write_f64(dir / params_file, agent.params.head(agent.net.num_params()));
    write_f64(dir / log_std_file, agent.params.tail(agent.act_dim()));
    manifest["agents"].push_back({{"name", names[i]},
                                  {"layers", agent.net.sizes()},
                                  {"params_file", params_file},
                                  {"log_std_file", log_std_file},
                                  {"layout", mlp_layout(agent.net)},
                                  {"joint_param_offset", ckpt.policy.slot(i).param_offset}});
  }
  write_f64(dir / "value.bin", ckpt.value.params);
  manifest["value"] = {{"layers", ckpt.value.net.sizes()},
                       {"file", "value.bin"},
                       {"output_scale", ckpt.value.scale},
                       {"layout", mlp_layout(ckpt.value.net)}};

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw CheckpointError("cannot write manifest in '" + dir.string() + "'");
  out << manifest.dump(2) << "\n";
}

Checkpoint load(const fs::path& dir, const std::string& expected_hash) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw CheckpointError("no checkpoint manifest at '" + manifest_path.string() + "'");
  Json m;
  try {
    m = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw CheckpointError("cannot parse '" + manifest_path.string() + "': " + e.what());
  }
  if (!m.is_object() || m.value("format", "") != "codress-checkpoint") {
    throw CheckpointError("'" + manifest_path.string() + "' is not a checkpoint manifest");
  }
  if (need(m, "version") != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + need(m, "version").dump());
  }
  Checkpoint ckpt;
  ckpt.schema_hash = need(m, "schema_hash").get<std::string>();
  if (ckpt.schema_hash != expected_hash) {
    throw CheckpointError("checkpoint schema hash " + ckpt.schema_hash +
                          " does not match the configured schema hash " + expected_hash);
  }
  ckpt.phase = m.value("phase", "");
  ckpt.iteration = m.value("iteration", 0);

  std::vector<rl::PolicyNet> agents;
  for (const auto& a : need(m, "agents")) {
    const std::string name = need(a, "name").get<std::string>();
    rl::PolicyNet p;
    p.net = rl::Mlp(read_sizes(need(a, "layers"), name));
    const VecX params = read_f64(dir / need(a, "params_file").get<std::string>());
    const VecX log_std = read_f64(dir / need(a, "log_std_file").get<std::string>());
    if (params.size() != p.net.num_params() || log_std.size() != p.net.output_size()) {
      throw CheckpointError("checkpoint arrays for '" + name + "' do not match its layer sizes");
    }
    p.params.resize(params.size() + log_std.size());
    p.params << params, log_std;
    agents.push_back(std::move(p));
  }
  if (agents.size() != 2) throw CheckpointError("checkpoint must hold a human and a robot policy");
  ckpt.policy = rl::JointPolicy(std::move(agents));

  const Json& v = need(m, "value");
  ckpt.value.net = rl::Mlp(read_sizes(need(v, "layers"), "value"));
  ckpt.value.params = read_f64(dir / need(v, "file").get<std::string>());
  ckpt.value.scale = need(v, "output_scale").get<double>();
  if (ckpt.value.params.size() != ckpt.value.net.num_params()) {
    throw CheckpointError("value array does not match its layer sizes");
  }
  return ckpt;
}

}  // namespace codress::checkpoint
