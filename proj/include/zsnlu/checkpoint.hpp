#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsnlu/model.hpp"
#include "zsnlu/optimizer.hpp"

namespace zsnlu {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

inline constexpr char kCheckpointMagic[] = "ZSCKPT1";

struct OptimizerSnapshot {
  AdamConfig config;
  std::size_t step = 0;
  std::vector<Tensor> first_moments;
  std::vector<Tensor> second_moments;
};

// Layout: 7-byte magic | u32 header length | JSON header | f64 LE payload
// (parameters in header order, then optimizer moments when present).
struct Checkpoint {
  ModelConfig config;
  ParamStore params;  // carries the group freeze flags
  std::optional<OptimizerSnapshot> optimizer;
  std::size_t epochs_completed = 0;
  nlohmann::json info = nlohmann::json::object();
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const JointModel& model);
JointModel model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace zsnlu
