#pragma once

#include "codress/env.hpp"
#include "codress/policy.hpp"
#include "codress/value.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

namespace codress::checkpoint {

using Json = nlohmann::json;

inline constexpr int kCheckpointVersion = 1;
inline constexpr int kSchemaVersion = 1;

/// Machine-readable observation/action schema for a task, including the
/// agent routing of the joint vectors and the network layer sizes.
Json schema_document(const env::TaskConfig& task);

/// 64-bit FNV-1a of the canonical schema text, as 16 hex digits.
std::string schema_hash(const Json& schema);

/// Layer sizes of the human and robot policy networks for a task.
std::vector<int> policy_layers(int obs_dim, int act_dim);

struct Checkpoint {
  rl::JointPolicy policy;  // agent 0 human, agent 1 robot
  rl::ValueFunction value;
  std::string schema_hash;
  std::string phase;
  int iteration = 0;
};

/// Writes manifest.json plus little-endian float64 arrays into `dir`.
void save(const std::filesystem::path& dir, const Checkpoint& ckpt);

/// Loads and validates a checkpoint; a schema hash differing from
/// `expected_hash` is rejected with both hashes in the message.
Checkpoint load(const std::filesystem::path& dir, const std::string& expected_hash);

void write_f64(const std::filesystem::path& file, const VecX& values);
VecX read_f64(const std::filesystem::path& file);

}  // namespace codress::checkpoint
