#pragma once

#include "roughcast/augment.hpp"
#include "roughcast/dataset.hpp"
#include "roughcast/nn/mlp.hpp"
#include "roughcast/split.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace roughcast::pipe {

using Indices = std::vector<std::size_t>;

// Index-set bookkeeping across protocol stages. Every stage that consumes
// records reports the dataset indices it touched; any stage other than the
// final test evaluation that touches a protected (test) index throws
// Errc::leakage.
enum class Stage {
    scaler_fit,
    model_fit,
    early_stopping,
    cgan_fit,
    hpo_objective,
    sweep_selection,
    final_fit,
    test_evaluation,
};

std::string_view to_string(Stage stage);

class LeakageAudit {
public:
    struct Entry {
        Stage stage;
        std::string label;
        std::size_t count = 0;
    };

    LeakageAudit() = default;
    explicit LeakageAudit(std::span<const std::size_t> protected_indices);

    void protect(std::span<const std::size_t> indices);
    void record(Stage stage, std::span<const std::size_t> indices, std::string label = {});

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t count(Stage stage) const;

private:
    std::set<std::size_t> protected_;
    std::vector<Entry> entries_;
};

// Throws Errc::leakage when the two sets intersect.
void require_disjoint(std::span<const std::size_t> a, std::span<const std::size_t> b, std::string_view what);

// Seeded partition of positions 0..n-1 into `folds` groups whose sizes differ
// by at most one.
std::vector<Indices> kfold_partition(std::size_t n, std::size_t folds, std::uint64_t seed);

struct FoldResult {
    Indices train; // dataset indices
    Indices val;
    nn::MetricsReport metrics; // on val, lenient
    data::ScalerParams scaler; // fitted on `train` only
    std::size_t best_epoch = 0;
    std::size_t stopping_epoch = 0;
};

struct CvResult {
    std::vector<FoldResult> folds;
    double mean_val_mae = 0.0;
    std::uint64_t seed = 0;
    // Set when a fold callback stopped the run early.
    std::optional<std::size_t> stopped_after_fold;
};

// Returning false from the callback stops CV after that fold.
using FoldCallback = std::function<bool(std::size_t fold, double running_mean_mae)>;

CvResult run_cv(const data::Dataset& ds, std::span<const std::size_t> pool, const nn::MlpConfig& config,
                std::size_t folds = 5, std::uint64_t seed = 42, LeakageAudit* audit = nullptr,
                const FoldCallback& on_fold = {});

struct SearchSpace {
    std::size_t min_layers = 1;
    std::size_t max_layers = 4;
    std::vector<std::size_t> widths{32, 64, 128, 256};
    double dropout_min = 0.0;
    double dropout_max = 0.5;
    double lr_min = 1e-4;
    double lr_max = 1e-2;
    double l2_min = 1e-7;
    double l2_max = 1e-3;
    std::vector<std::size_t> batch_sizes{16, 32, 64};
    std::vector<nn::Activation> activations{nn::Activation::relu, nn::Activation::tanh, nn::Activation::elu};
    // Fields not searched (epochs, patience, clipping, ...) come from here.
    nn::MlpConfig base;

    void validate() const;
};

enum class TrialStatus { complete, pruned, failed };
std::string_view to_string(TrialStatus status);

struct HpoTrial {
    std::size_t number = 0;
    nn::MlpConfig config;
    std::vector<double> fold_maes;
    std::vector<double> running_means;
    std::vector<std::size_t> fold_best_epochs;
    TrialStatus status = TrialStatus::complete;
    std::optional<std::size_t> pruned_at_fold; // 0-based
    double objective = 0.0;                    // mean val MAE (complete trials)
    std::string error;
};

class Sampler {
public:
    virtual ~Sampler() = default;
    virtual nn::MlpConfig sample(const SearchSpace& space, const std::vector<HpoTrial>& history, Rng& rng) = 0;
};

// Independent draws from each dimension of the space.
class RandomSampler final : public Sampler {
public:
    nn::MlpConfig sample(const SearchSpace& space, const std::vector<HpoTrial>& history, Rng& rng) override;
};

struct HpoOptions {
    std::size_t n_trials = 50;
    std::size_t folds = 5;
    std::uint64_t seed = 42;
    bool pruning = true;
    // Completed trials required before the median rule activates.
    std::size_t prune_warmup = 5;
};

struct HpoResult {
    nn::MlpConfig best_config;
    double best_objective = 0.0;
    std::size_t best_trial = 0;
    // Mean best epoch across the best trial's folds; used for the final retrain.
    std::size_t best_epochs = 0;
    std::vector<HpoTrial> trials;
};

HpoResult hpo_search(const data::Dataset& ds, std::span<const std::size_t> pool, const SearchSpace& space,
                     const HpoOptions& options, LeakageAudit* audit = nullptr, Sampler* sampler = nullptr);

struct FinalResult {
    nn::MlpModel model;
    nn::MetricsReport test_metrics;
    nn::TrainReport report;
};

// Retrains scaler + model on the whole pool for `epochs` epochs (no early
// stopping; 0 means config.max_epochs) and evaluates once on `test`.
FinalResult finalize_and_test(const data::Dataset& ds, std::span<const std::size_t> pool,
                              std::span<const std::size_t> test, const nn::MlpConfig& config, std::size_t epochs = 0,
                              LeakageAudit* audit = nullptr);

struct SweepEntry {
    double ratio = 0.0;
    std::size_t synthetic_count = 0;
    double val_mae = 0.0;
    std::size_t stopping_epoch = 0;
    std::optional<nn::MetricsReport> test_metrics;
    std::optional<aug::AugmentationDiagnostics> diagnostics;
};

struct SweepOptions {
    nn::MlpConfig config;
    double synthetic_weight = 0.5;
    double sigma = 0.02;
    std::uint64_t seed = 42;
    // Also evaluate the ratio-0 model on test for reporting (never used for selection).
    bool report_baseline_test = true;
};

struct SweepResult {
    std::vector<SweepEntry> entries; // ascending ratio
    double selected_ratio = 0.0;
    std::string selection_rule = "argmin_val_mae";
    nn::MlpModel selected_model;

    const SweepEntry& selected() const;
    const SweepEntry& baseline() const;
};

inline const std::vector<double> kDefaultRatios{0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0};

SweepResult ratio_sweep(const data::Dataset& ds, const data::SplitIndices& split, const aug::CganModel& cgan,
                        std::vector<double> ratios, const SweepOptions& options, LeakageAudit* audit = nullptr);

// CGAN fit on the split's training indices, with the audit told about it.
aug::CganTrainResult train_cgan_on(const data::Dataset& ds, std::span<const std::size_t> train,
                                   const aug::CganConfig& config, LeakageAudit* audit = nullptr);

nlohmann::json to_json(const CvResult& cv);
nlohmann::json to_json(const HpoTrial& trial);
nlohmann::json to_json(const HpoResult& result);
nlohmann::json to_json(const SweepResult& result);
nlohmann::json to_json(const data::SplitIndices& split);
data::SplitIndices split_from_json(const nlohmann::json& j);

SearchSpace search_space_from_json(const nlohmann::json& j, SearchSpace base = {});

} // namespace roughcast::pipe
