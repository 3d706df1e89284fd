#pragma once

#include <filesystem>

#include <json.hpp>

#include "dmgnn/evaluation.hpp"
#include "dmgnn/graph.hpp"
#include "dmgnn/numerics.hpp"
#include "dmgnn/trainer.hpp"

namespace dmgnn {

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthConfig& cfg);
nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const IterationLog& log);

/// {param name -> {"shape": [rows, cols], "data": [...]}}
nlohmann::json params_to_json(const ParamStore& store);
ParamStore params_from_json(const nlohmann::json& j);

struct Checkpoint {
  TrainConfig config;
  std::size_t num_attrs = 0;
  std::size_t num_labels = 0;
  ParamStore params;

  ModelConfig model() const { return ModelConfig::from(config, num_attrs, num_labels); }
};

/// {"config": ..., "num_attrs": W, "num_labels": C, "params": ...}
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dmgnn
