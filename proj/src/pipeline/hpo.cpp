#include "roughcast/error.hpp"
#include "roughcast/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace roughcast::pipe {

std::string_view to_string(TrialStatus status)
{
    switch (status) {
    case TrialStatus::complete: return "complete";
    case TrialStatus::pruned: return "pruned";
    case TrialStatus::failed: return "failed";
    }
    return "unknown";
}

void SearchSpace::validate() const
{
    if (min_layers == 0 || min_layers > max_layers) {
        fail(Errc::config, "search space layer range is empty");
    }
    if (widths.empty() || batch_sizes.empty() || activations.empty()) {
        fail(Errc::config, "search space has an empty categorical dimension");
    }
    if (dropout_min < 0.0 || dropout_max > 0.9 || dropout_min > dropout_max) {
        fail(Errc::config, "dropout range must lie within [0, 0.9]");
    }
    if (!(lr_min > 0.0 && lr_min <= lr_max) || !(l2_min > 0.0 && l2_min <= l2_max)) {
        fail(Errc::config, "log-uniform ranges need 0 < min <= max");
    }
}

namespace {

template <typename T>
const T& pick(const std::vector<T>& options, Rng& rng)
{
    return options[rng.below(options.size())];
}

double log_uniform(Rng& rng, double lo, double hi)
{
    return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace

nn::MlpConfig RandomSampler::sample(const SearchSpace& space, const std::vector<HpoTrial>&, Rng& rng)
{
    nn::MlpConfig c = space.base;
    const std::size_t layers = space.min_layers + rng.below(space.max_layers - space.min_layers + 1);
    c.hidden_widths.clear();
    for (std::size_t l = 0; l < layers; ++l) {
        c.hidden_widths.push_back(pick(space.widths, rng));
    }
    c.dropout_rate = rng.uniform(space.dropout_min, space.dropout_max);
    c.learning_rate = log_uniform(rng, space.lr_min, space.lr_max);
    c.l2_strength = log_uniform(rng, space.l2_min, space.l2_max);
    c.batch_size = pick(space.batch_sizes, rng);
    c.activation = pick(space.activations, rng);
    return c;
}

HpoResult hpo_search(const data::Dataset& ds, std::span<const std::size_t> pool, const SearchSpace& space,
                     const HpoOptions& options, LeakageAudit* audit, Sampler* sampler)
{
    space.validate();
    if (options.n_trials == 0) {
        fail(Errc::config, "n_trials must be >= 1");
    }
    if (audit) {
        audit->record(Stage::hpo_objective, pool, "hpo pool");
    }
    RandomSampler fallback;
    Sampler& s = sampler ? *sampler : fallback;
    Rng rng(derive_seed(options.seed, 0x490));
    const std::uint64_t fold_seed = derive_seed(options.seed, 0xF01D);

    HpoResult result;
    // running_means of completed trials, indexed [fold][trial]
    std::vector<std::vector<double>> completed_traces(options.folds);

    for (std::size_t t = 0; t < options.n_trials; ++t) {
        HpoTrial trial;
        trial.number = t;
        trial.config = s.sample(space, result.trials, rng);
        trial.config.seed = derive_seed(options.seed, 0x7000 + t);

        const bool pruning_active = options.pruning && completed_traces.front().size() >= options.prune_warmup;
        auto on_fold = [&](std::size_t fold, double running) {
            trial.running_means.push_back(running);
            // The last fold completes the objective; pruning only applies before it.
            if (!pruning_active || fold + 1 >= options.folds) {
                return true;
            }
            if (running > median(completed_traces[fold])) {
                trial.pruned_at_fold = fold;
                return false;
            }
            return true;
        };

        try {
            const auto cv = run_cv(ds, pool, trial.config, options.folds, fold_seed, audit, on_fold);
            for (const auto& f : cv.folds) {
                trial.fold_maes.push_back(f.metrics.mae);
                trial.fold_best_epochs.push_back(f.best_epoch);
            }
            if (trial.pruned_at_fold) {
                trial.status = TrialStatus::pruned;
                trial.objective = cv.mean_val_mae;
            } else {
                trial.status = TrialStatus::complete;
                trial.objective = cv.mean_val_mae;
                if (!std::isfinite(trial.objective)) {
                    trial.status = TrialStatus::failed;
                    trial.error = "non-finite objective";
                }
            }
        } catch (const Error& e) {
            if (e.code() == Errc::leakage) {
                throw;
            }
            trial.status = TrialStatus::failed;
            trial.error = e.what();
        }
        if (trial.status == TrialStatus::complete) {
            for (std::size_t f = 0; f < options.folds; ++f) {
                completed_traces[f].push_back(trial.running_means[f]);
            }
        }
        result.trials.push_back(std::move(trial));
    }

    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (const auto& trial : result.trials) {
        if (trial.status == TrialStatus::complete && trial.objective < best) {
            best = trial.objective;
            result.best_trial = trial.number;
            found = true;
        }
    }
    if (!found) {
        std::string log;
        for (const auto& trial : result.trials) {
            log += "\n  trial " + std::to_string(trial.number) + ": " + std::string(to_string(trial.status)) +
                   (trial.error.empty() ? "" : " (" + trial.error + ")");
        }
        fail(Errc::search_failed, "no trial completed" + log);
    }
    const auto& winner = result.trials[result.best_trial];
    result.best_config = winner.config;
    result.best_objective = best;
    double epoch_sum = 0.0;
    for (auto e : winner.fold_best_epochs) {
        epoch_sum += static_cast<double>(e);
    }
    result.best_epochs = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(epoch_sum / static_cast<double>(winner.fold_best_epochs.size()))));
    return result;
}

} // namespace roughcast::pipe
