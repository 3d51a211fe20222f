#pragma once

#include "roughcast/nn/mlp.hpp"

#include <json.hpp>

#include <filesystem>

namespace roughcast::nn {

inline constexpr int kModelFormatVersion = 1;

// Model file layout:
//   { format_version, feature_order, scaler:{min,max,target_min,target_max},
//     architecture:{activation,leaky_slope,bn_momentum,dropout},
//     layers:[{w:[[...]], b:[...], bn:{gamma,beta,mean,var} | null}],
//     metadata:{config, epochs_run, best_val_mae, train_rows, metrics} }
// Weights are nested row-major arrays (fan_in rows of fan_out values).

nlohmann::json to_json(const MlpConfig& config);
MlpConfig config_from_json(const nlohmann::json& j, MlpConfig base = {});

nlohmann::json to_json(const data::ScalerParams& scaler);
data::ScalerParams scaler_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MetricsReport& metrics);
MetricsReport metrics_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainReport& report);

// `layers` array plus architecture block.
nlohmann::json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MlpModel& model);
MlpModel model_from_json(const nlohmann::json& j);

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

} // namespace roughcast::nn
