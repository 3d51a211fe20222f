#include "roughcast/error.hpp"
#include "roughcast/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace roughcast::pipe {

const SweepEntry& SweepResult::selected() const
{
    for (const auto& e : entries) {
        if (e.ratio == selected_ratio) {
            return e;
        }
    }
    fail(Errc::contract, "selected ratio missing from sweep entries");
}

const SweepEntry& SweepResult::baseline() const
{
    for (const auto& e : entries) {
        if (e.ratio == 0.0) {
            return e;
        }
    }
    fail(Errc::contract, "sweep has no ratio-0 baseline");
}

SweepResult ratio_sweep(const data::Dataset& ds, const data::SplitIndices& split, const aug::CganModel& cgan,
                        std::vector<double> ratios, const SweepOptions& options, LeakageAudit* audit)
{
    if (ratios.empty()) {
        fail(Errc::config, "ratio list is empty");
    }
    for (double r : ratios) {
        if (!(r >= 0.0) || !std::isfinite(r)) {
            fail(Errc::config, "augmentation ratios must be finite and >= 0");
        }
    }
    if (cgan.feature_order != data::feature_order()) {
        fail(Errc::contract, "CGAN feature order does not match the predictor's canonical order");
    }
    if (split.train.empty() || split.val.empty() || split.test.empty()) {
        fail(Errc::insufficient_data, "the sweep needs non-empty train, val and test subsets");
    }
    require_disjoint(split.train, split.test, "sweep train/test");
    require_disjoint(split.val, split.test, "sweep val/test");
    require_disjoint(split.train, split.val, "sweep train/val");

    ratios.push_back(0.0);
    std::sort(ratios.begin(), ratios.end());
    ratios.erase(std::unique(ratios.begin(), ratios.end()), ratios.end());

    if (audit) {
        audit->record(Stage::scaler_fit, split.train, "sweep");
        audit->record(Stage::model_fit, split.train, "sweep");
        audit->record(Stage::sweep_selection, split.val, "sweep");
    }

    const Matrix real_rows = ds.features(split.train);
    const auto real_ra = ds.targets(split.train);
    const Matrix normalized_train = data::apply_scaler(cgan.scaler, real_rows);
    const nn::EvalSet val{ds.features(split.val), ds.targets(split.val)};

    SweepResult result;
    std::vector<nn::MlpModel> models;
    for (double r : ratios) {
        SweepEntry entry;
        entry.ratio = r;
        entry.synthetic_count = static_cast<std::size_t>(std::llround(r * static_cast<double>(split.train.size())));

        nn::TrainSet train{real_rows, real_ra, std::vector<double>(real_rows.rows(), 1.0)};
        if (entry.synthetic_count > 0) {
            // Seeds depend on the ratio value, not its position in the list.
            const std::uint64_t rseed = derive_seed(options.seed, std::bit_cast<std::uint64_t>(r));
            const auto conds =
                aug::sample_conditions(normalized_train, entry.synthetic_count, options.sigma, derive_seed(rseed, 1));
            const auto synth =
                aug::generate_synthetic(cgan, conds.conditions, options.synthetic_weight, derive_seed(rseed, 2));
            train.rows.append_rows(aug::synthetic_feature_rows(cgan, synth));
            for (const auto& rec : synth) {
                train.targets.push_back(rec.ra);
                train.weights.push_back(rec.weight);
            }
            entry.diagnostics = aug::diagnostics(real_ra, synth, normalized_train, cgan.feature_order);
        }

        auto trained = nn::train_mlp(nn::init_mlp(options.config, real_rows.cols()), train, val, options.config);
        entry.val_mae = trained.report.best_val_mae;
        entry.stopping_epoch = trained.report.stopping_epoch;
        result.entries.push_back(std::move(entry));
        models.push_back(std::move(trained.model));
    }

    // argmin val MAE; ties go to the smaller ratio (entries are ascending).
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.entries.size(); ++i) {
        if (result.entries[i].val_mae < result.entries[best].val_mae) {
            best = i;
        }
    }
    result.selected_ratio = result.entries[best].ratio;

    if (audit) {
        audit->record(Stage::test_evaluation, split.test, "sweep");
    }
    const Matrix test_rows = ds.features(split.test);
    const auto test_ra = ds.targets(split.test);
    auto evaluate = [&](std::size_t i) {
        result.entries[i].test_metrics =
            nn::compute_metrics(test_ra, models[i].predict(test_rows), nn::MetricsPolicy::lenient);
    };
    evaluate(best);
    if (options.report_baseline_test && best != 0) {
        evaluate(0);
    }
    result.selected_model = std::move(models[best]);
    result.selected_model.metadata.test_metrics = result.entries[best].test_metrics;
    return result;
}

} // namespace roughcast::pipe
