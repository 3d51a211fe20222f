#include "roughcast/error.hpp"
#include "roughcast/nn/serialize.hpp"
#include "roughcast/pipeline.hpp"

namespace roughcast::pipe {

using nlohmann::json;

FinalResult finalize_and_test(const data::Dataset& ds, std::span<const std::size_t> pool,
                              std::span<const std::size_t> test, const nn::MlpConfig& config, std::size_t epochs,
                              LeakageAudit* audit)
{
    require_disjoint(pool, test, "finalize_and_test pool/test");
    if (pool.empty() || test.empty()) {
        fail(Errc::insufficient_data, "pool and test set must be non-empty");
    }
    if (audit) {
        audit->record(Stage::scaler_fit, pool, "final");
        audit->record(Stage::final_fit, pool, "final");
    }
    nn::MlpConfig c = config;
    if (epochs > 0) {
        c.max_epochs = epochs;
    }
    const Matrix rows = ds.features(pool);
    const auto targets = ds.targets(pool);
    // No held-out data remains: the pool doubles as the monitoring set, and
    // with early stopping and snapshot restore off it cannot steer the weights
    // beyond the plateau schedule.
    auto trained = nn::train_mlp(nn::init_mlp(c, rows.cols()), {rows, targets, {}}, {rows, targets}, c,
                                 {.early_stopping = false, .restore_best = false});

    if (audit) {
        audit->record(Stage::test_evaluation, test, "final");
    }
    const auto test_rows = ds.features(test);
    const auto test_targets = ds.targets(test);
    FinalResult out{std::move(trained.model), {}, std::move(trained.report)};
    out.test_metrics =
        nn::compute_metrics(test_targets, out.model.predict(test_rows), nn::MetricsPolicy::lenient);
    out.model.metadata.test_metrics = out.test_metrics;
    out.model.metadata.best_val_mae.reset();
    return out;
}

aug::CganTrainResult train_cgan_on(const data::Dataset& ds, std::span<const std::size_t> train,
                                   const aug::CganConfig& config, LeakageAudit* audit)
{
    if (audit) {
        audit->record(Stage::cgan_fit, train, "cgan");
    }
    return aug::train_cgan(ds.features(train), ds.targets(train), config, data::feature_order());
}

json to_json(const CvResult& cv)
{
    json folds = json::array();
    for (const auto& f : cv.folds) {
        folds.push_back({
            {"val_size", f.val.size()},
            {"train_size", f.train.size()},
            {"metrics", nn::to_json(f.metrics)},
            {"best_epoch", f.best_epoch},
            {"stopping_epoch", f.stopping_epoch},
            {"scaler", nn::to_json(f.scaler)},
        });
    }
    return {{"seed", cv.seed}, {"mean_val_mae", cv.mean_val_mae}, {"folds", std::move(folds)}};
}

json to_json(const HpoTrial& t)
{
    return {
        {"number", t.number},
        {"status", std::string(to_string(t.status))},
        {"config", nn::to_json(t.config)},
        {"fold_maes", t.fold_maes},
        {"running_means", t.running_means},
        {"fold_best_epochs", t.fold_best_epochs},
        {"pruned_at_fold", t.pruned_at_fold ? json(*t.pruned_at_fold) : json(nullptr)},
        {"objective", t.status == TrialStatus::failed ? json(nullptr) : json(t.objective)},
        {"error", t.error},
    };
}

json to_json(const HpoResult& r)
{
    json trials = json::array();
    for (const auto& t : r.trials) {
        trials.push_back(to_json(t));
    }
    return {
        {"best_trial", r.best_trial},
        {"best_objective", r.best_objective},
        {"best_epochs", r.best_epochs},
        {"best_config", nn::to_json(r.best_config)},
        {"trials", std::move(trials)},
    };
}

json to_json(const SweepResult& r)
{
    json entries = json::array();
    for (const auto& e : r.entries) {
        entries.push_back({
            {"ratio", e.ratio},
            {"synthetic_count", e.synthetic_count},
            {"val_mae", e.val_mae},
            {"stopping_epoch", e.stopping_epoch},
            {"test_metrics", e.test_metrics ? nn::to_json(*e.test_metrics) : json(nullptr)},
            {"diagnostics", e.diagnostics ? aug::to_json(*e.diagnostics) : json(nullptr)},
        });
    }
    return {
        {"selection_rule", r.selection_rule},
        {"selected_ratio", r.selected_ratio},
        {"entries", std::move(entries)},
    };
}

json to_json(const data::SplitIndices& s)
{
    return {
        {"seed", s.seed},
        {"grouped", s.grouped},
        {"fractions", {{"train", s.fractions.train}, {"val", s.fractions.val}, {"test", s.fractions.test}}},
        {"train", s.train},
        {"val", s.val},
        {"test", s.test},
    };
}

data::SplitIndices split_from_json(const json& j)
{
    data::SplitIndices s;
    try {
        s.train = j.at("train").get<Indices>();
        s.val = j.value("val", Indices{});
        s.test = j.at("test").get<Indices>();
        s.seed = j.value("seed", std::uint64_t{0});
        s.grouped = j.value("grouped", false);
        if (j.contains("fractions")) {
            const auto& f = j.at("fractions");
            s.fractions = {f.at("train").get<double>(), f.at("val").get<double>(), f.at("test").get<double>()};
        }
    } catch (const json::exception& e) {
        fail(Errc::schema, std::string("malformed split JSON: ") + e.what());
    }
    require_disjoint(s.train, s.test, "split train/test");
    require_disjoint(s.val, s.test, "split val/test");
    require_disjoint(s.train, s.val, "split train/val");
    return s;
}

SearchSpace search_space_from_json(const json& j, SearchSpace s)
{
    try {
        auto take = [&](const char* key, auto& field) {
            if (j.contains(key) && !j.at(key).is_null()) {
                field = j.at(key).get<std::decay_t<decltype(field)>>();
            }
        };
        take("min_layers", s.min_layers);
        take("max_layers", s.max_layers);
        take("widths", s.widths);
        take("dropout_min", s.dropout_min);
        take("dropout_max", s.dropout_max);
        take("lr_min", s.lr_min);
        take("lr_max", s.lr_max);
        take("l2_min", s.l2_min);
        take("l2_max", s.l2_max);
        take("batch_sizes", s.batch_sizes);
        if (j.contains("activations")) {
            s.activations.clear();
            for (const auto& a : j.at("activations")) {
                s.activations.push_back(nn::parse_activation(a.get<std::string>()));
            }
        }
        if (j.contains("base")) {
            s.base = nn::config_from_json(j.at("base"), s.base);
        }
    } catch (const json::exception& e) {
        fail(Errc::config, std::string("invalid search space: ") + e.what());
    }
    s.validate();
    return s;
}

} // namespace roughcast::pipe
