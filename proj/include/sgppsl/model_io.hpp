#pragma once

#include <string>

#include "sgppsl/inference.hpp"

namespace sgppsl {

inline constexpr int kModelFormatVersion = 1;

// Versioned JSON model file. Numeric arrays serialize with shortest
// round-trip representations, so save/load reproduces every double
// bit-exactly. The training corpus is stored as surfaces plus candidate
// sets and re-featurized on load (featurization is deterministic).
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(const std::string& text);

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace sgppsl
