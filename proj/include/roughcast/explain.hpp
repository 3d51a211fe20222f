#pragma once

#include "roughcast/matrix.hpp"
#include "roughcast/nn/mlp.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace roughcast::xai {

// Batch predictor in output units: one value per input row.
using Predictor = std::function<std::vector<double>(const Matrix&)>;

inline constexpr std::size_t kMaxShapFeatures = 16;

struct ShapExplanation {
    double base_value = 0.0; // mean prediction over the background
    double prediction = 0.0; // f(instance)
    std::vector<double> phi;
    std::vector<double> instance;
    std::size_t background_size = 0;
};

// Exact Shapley values over all 2^M coalitions. The value of a coalition S is
// the mean over background rows b of f(x_S, b_notS).
ShapExplanation shap_exact(const Predictor& f, std::span<const double> instance, const Matrix& background);
ShapExplanation shap_exact(const nn::MlpModel& model, std::span<const double> instance, const Matrix& background);

struct GlobalImportance {
    std::vector<std::string> features;
    std::vector<double> mean_abs_phi;
    std::vector<std::size_t> ranking; // feature indices, most important first
    double base_value = 0.0;
    Matrix phi;    // one row per evaluated instance
    Matrix values; // matching feature values (beeswarm data)
    std::vector<double> predictions;
};

GlobalImportance global_importance(const Predictor& f, const Matrix& eval_rows, const Matrix& background,
                                   std::vector<std::string> feature_names = {});
GlobalImportance global_importance(const nn::MlpModel& model, const Matrix& eval_rows, const Matrix& background);

// Up to n distinct rows drawn without replacement (all rows when n >= rows).
Matrix select_background(const Matrix& rows, std::size_t n, std::uint64_t seed);

nlohmann::json to_json(const GlobalImportance& g);

} // namespace roughcast::xai
