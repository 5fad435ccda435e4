#pragma once

#include "json.hpp"
#include "omrn/config.hpp"

namespace omrn {

// JSON mappings for the configuration structs.  Parsing starts from a default
// instance and overrides only the keys present, so partial config files work;
// unknown keys raise ValidationError to catch typos.

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j, const ModelConfig& defaults);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& defaults);

}  // namespace omrn
