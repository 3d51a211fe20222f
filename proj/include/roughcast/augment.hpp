#pragma once

#include "roughcast/matrix.hpp"
#include "roughcast/nn/network.hpp"
#include "roughcast/scaler.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace roughcast::aug {

struct CganConfig {
    std::size_t noise_dim = 16;
    std::vector<std::size_t> generator_widths{64, 64, 64};
    std::vector<std::size_t> discriminator_widths{64, 64, 64};
    double generator_lr = 2e-4;
    double discriminator_lr = 2e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    double leaky_slope = 0.2;
    std::size_t epochs = 300;
    std::size_t batch_size = 64;
    std::uint64_t seed = 42;

    // Sampling defaults used by `cgan sample` and the ratio sweep.
    double sigma = 0.02;
    double synthetic_weight = 0.5;

    void validate() const;
    bool operator==(const CganConfig&) const = default;
};

// Generator: [noise, conditions] -> normalized Ra (linear head).
// Discriminator: [normalized Ra, conditions] -> real-probability logit.
// `scaler` holds the condition min/max plus the target range of the real
// training subset; `train_conditions` keeps that subset in normalized form
// so sampling needs nothing but the model file.
struct CganModel {
    nn::Network generator;
    nn::Network discriminator;
    data::ScalerParams scaler;
    std::vector<std::string> feature_order;
    std::size_t noise_dim = 0;
    CganConfig config;
    Matrix train_conditions;

    std::size_t condition_dim() const { return scaler.width(); }
};

struct CganReport {
    std::vector<double> discriminator_loss; // per-epoch mean
    std::vector<double> generator_loss;
    std::size_t updates_per_epoch = 0;
    std::size_t generator_updates = 0;
    std::size_t discriminator_updates = 0;
    bool mode_collapse_warning = false;
};

struct CganTrainResult {
    CganModel model;
    CganReport report;
};

inline constexpr std::size_t kCollapseEpochs = 50;
inline constexpr double kCollapseLoss = 1e-3;

// Trains on raw feature rows (canonical order) and Ra in um. Rows must come
// from the real training subset only.
CganTrainResult train_cgan(const Matrix& train_rows, std::span<const double> train_ra, const CganConfig& config,
                           std::vector<std::string> feature_order = {});

struct ConditionSample {
    Matrix conditions;               // normalized, clipped to [0, 1]
    std::vector<std::size_t> source; // training row each vector was drawn from
    double mean_abs_perturbation = 0.0;
};

// Uniform draws of normalized training rows plus N(0, sigma^2) noise per
// component, clipped to [0, 1]. The perturbation statistic is pre-clip.
ConditionSample sample_conditions(const Matrix& normalized_train, std::size_t n, double sigma, std::uint64_t seed);

struct SyntheticRecord {
    std::vector<double> conditions; // normalized
    double ra = 0.0;                // um
    double weight = 1.0;
    bool pre_clip_out_of_range = false;
};

std::vector<SyntheticRecord> generate_synthetic(const CganModel& model, const Matrix& conditions, double weight,
                                                std::uint64_t seed);

// Raw (physical-unit) feature rows of synthetic records.
Matrix synthetic_feature_rows(const CganModel& model, const std::vector<SyntheticRecord>& records);

struct Histogram {
    std::vector<double> edges; // bins + 1
    std::vector<std::size_t> real;
    std::vector<std::size_t> synthetic;
};

struct FeatureCoverage {
    std::string feature;
    double real_min = 0.0;
    double real_max = 0.0;
    double synthetic_min = 0.0;
    double synthetic_max = 0.0;
    double real_mean = 0.0;
    double synthetic_mean = 0.0;
};

struct AugmentationDiagnostics {
    double ks = 0.0;
    double real_mean = 0.0;
    double synthetic_mean = 0.0;
    double real_std = 0.0;
    double synthetic_std = 0.0;
    double mean_delta = 0.0; // synthetic - real
    double std_delta = 0.0;
    double clip_fraction = 0.0;
    std::vector<FeatureCoverage> coverage;
    Histogram histogram;
};

// Exact two-sample Kolmogorov-Smirnov statistic (sup over pooled points).
double ks_statistic(std::span<const double> a, std::span<const double> b);

AugmentationDiagnostics diagnostics(std::span<const double> real_ra, std::span<const double> synthetic_ra,
                                    std::size_t bins = 20);

// Adds clip fraction and per-feature coverage (normalized space).
AugmentationDiagnostics diagnostics(std::span<const double> real_ra, const std::vector<SyntheticRecord>& synthetic,
                                    const Matrix& real_conditions, const std::vector<std::string>& feature_order,
                                    std::size_t bins = 20);

nlohmann::json to_json(const CganConfig& config);
CganConfig cgan_config_from_json(const nlohmann::json& j, CganConfig base = {});
nlohmann::json to_json(const CganModel& model);
CganModel cgan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AugmentationDiagnostics& d);
nlohmann::json to_json(const CganReport& r);

void save_cgan(const CganModel& model, const std::filesystem::path& path);
CganModel load_cgan(const std::filesystem::path& path);

} // namespace roughcast::aug
