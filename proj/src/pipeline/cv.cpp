#include "roughcast/error.hpp"
#include "roughcast/pipeline.hpp"

#include <algorithm>

namespace roughcast::pipe {

std::string_view to_string(Stage stage)
{
    switch (stage) {
    case Stage::scaler_fit: return "scaler_fit";
    case Stage::model_fit: return "model_fit";
    case Stage::early_stopping: return "early_stopping";
    case Stage::cgan_fit: return "cgan_fit";
    case Stage::hpo_objective: return "hpo_objective";
    case Stage::sweep_selection: return "sweep_selection";
    case Stage::final_fit: return "final_fit";
    case Stage::test_evaluation: return "test_evaluation";
    }
    return "unknown";
}

LeakageAudit::LeakageAudit(std::span<const std::size_t> protected_indices)
{
    protect(protected_indices);
}

void LeakageAudit::protect(std::span<const std::size_t> indices)
{
    protected_.insert(indices.begin(), indices.end());
}

void LeakageAudit::record(Stage stage, std::span<const std::size_t> indices, std::string label)
{
    if (stage != Stage::test_evaluation) {
        for (auto i : indices) {
            if (protected_.contains(i)) {
                fail(Errc::leakage, "test index " + std::to_string(i) + " reached stage " +
                                        std::string(to_string(stage)) + (label.empty() ? "" : " (" + label + ")"));
            }
        }
    }
    entries_.push_back({stage, std::move(label), indices.size()});
}

std::size_t LeakageAudit::count(Stage stage) const
{
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [stage](const Entry& e) { return e.stage == stage; }));
}

void require_disjoint(std::span<const std::size_t> a, std::span<const std::size_t> b, std::string_view what)
{
    const std::set<std::size_t> sa(a.begin(), a.end());
    for (auto i : b) {
        if (sa.contains(i)) {
            fail(Errc::leakage, std::string(what) + ": index " + std::to_string(i) + " appears in both sets");
        }
    }
}

std::vector<Indices> kfold_partition(std::size_t n, std::size_t folds, std::uint64_t seed)
{
    if (folds < 2 || n < folds) {
        fail(Errc::config, "k-fold needs 2 <= folds <= n (n=" + std::to_string(n) + ", folds=" + std::to_string(folds) +
                               ")");
    }
    auto order = iota_indices(n);
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<Indices> out(folds);
    for (std::size_t i = 0; i < n; ++i) {
        out[i % folds].push_back(order[i]);
    }
    for (auto& f : out) {
        std::sort(f.begin(), f.end());
    }
    return out;
}

CvResult run_cv(const data::Dataset& ds, std::span<const std::size_t> pool, const nn::MlpConfig& config,
                std::size_t folds, std::uint64_t seed, LeakageAudit* audit, const FoldCallback& on_fold)
{
    config.validate();
    const auto parts = kfold_partition(pool.size(), folds, seed);
    for (const auto& p : parts) {
        if (p.size() < 2 || pool.size() - p.size() < 2) {
            fail(Errc::config, "every fold needs at least 2 validation and 2 training samples");
        }
    }

    CvResult result;
    result.seed = seed;
    double mae_sum = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
        FoldResult fold;
        std::vector<bool> in_val(pool.size(), false);
        for (auto pos : parts[f]) {
            in_val[pos] = true;
        }
        for (std::size_t pos = 0; pos < pool.size(); ++pos) {
            (in_val[pos] ? fold.val : fold.train).push_back(pool[pos]);
        }
        if (audit) {
            const std::string label = "fold " + std::to_string(f);
            audit->record(Stage::scaler_fit, fold.train, label);
            audit->record(Stage::model_fit, fold.train, label);
            audit->record(Stage::early_stopping, fold.val, label);
        }

        const nn::TrainSet train{ds.features(fold.train), ds.targets(fold.train), {}};
        const nn::EvalSet val{ds.features(fold.val), ds.targets(fold.val)};
        const auto trained = nn::train_mlp(nn::init_mlp(config, ds.features(fold.train).cols()), train, val, config);
        fold.scaler = trained.model.scaler;
        fold.metrics = nn::compute_metrics(val.targets, trained.model.predict(val.rows), nn::MetricsPolicy::lenient);
        fold.best_epoch = trained.report.best_epoch;
        fold.stopping_epoch = trained.report.stopping_epoch;
        mae_sum += fold.metrics.mae;
        result.folds.push_back(std::move(fold));

        const double running = mae_sum / static_cast<double>(f + 1);
        result.mean_val_mae = running;
        if (on_fold && !on_fold(f, running)) {
            result.stopped_after_fold = f;
            break;
        }
    }
    return result;
}

} // namespace roughcast::pipe
