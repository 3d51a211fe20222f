#include "roughcast/explain.hpp"

#include "roughcast/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace roughcast::xai {

using nlohmann::json;

namespace {

// |S|! (M - |S| - 1)! / M! for every coalition size.
std::vector<double> shapley_weights(std::size_t m)
{
    std::vector<double> fact(m + 1, 1.0);
    for (std::size_t i = 1; i <= m; ++i) {
        fact[i] = fact[i - 1] * static_cast<double>(i);
    }
    std::vector<double> w(m);
    for (std::size_t s = 0; s < m; ++s) {
        w[s] = fact[s] * fact[m - s - 1] / fact[m];
    }
    return w;
}

Predictor wrap(const nn::MlpModel& model)
{
    return [&model](const Matrix& rows) { return model.predict(rows); };
}

} // namespace

ShapExplanation shap_exact(const Predictor& f, std::span<const double> instance, const Matrix& background)
{
    const std::size_t m = instance.size();
    if (m == 0 || m > kMaxShapFeatures) {
        fail(Errc::config, "exact Shapley enumeration supports 1.." + std::to_string(kMaxShapFeatures) +
                               " features (got " + std::to_string(m) + ")");
    }
    if (background.rows() == 0) {
        fail(Errc::insufficient_data, "Shapley background set is empty");
    }
    if (background.cols() != m) {
        fail(Errc::contract, "background width does not match the instance");
    }

    const std::size_t coalitions = std::size_t{1} << m;
    const std::size_t nb = background.rows();
    // Coalitions are evaluated in chunks of (coalition, background row) pairs
    // to bound the batch size for wide inputs or large backgrounds.
    const std::size_t chunk = std::max<std::size_t>(1, (std::size_t{1} << 16) / nb);
    std::vector<double> v(coalitions);
    for (std::size_t first = 0; first < coalitions; first += chunk) {
        const std::size_t last = std::min(coalitions, first + chunk);
        Matrix batch((last - first) * nb, m);
        for (std::size_t s = first; s < last; ++s) {
            for (std::size_t b = 0; b < nb; ++b) {
                auto row = batch.row((s - first) * nb + b);
                const auto bg = background.row(b);
                for (std::size_t j = 0; j < m; ++j) {
                    row[j] = (s >> j) & 1U ? instance[j] : bg[j];
                }
            }
        }
        const auto pred = f(batch);
        if (pred.size() != batch.rows()) {
            fail(Errc::contract, "predictor returned the wrong number of values");
        }
        for (std::size_t s = first; s < last; ++s) {
            double sum = 0.0;
            for (std::size_t b = 0; b < nb; ++b) {
                sum += pred[(s - first) * nb + b];
            }
            v[s] = sum / static_cast<double>(nb);
        }
    }

    const auto w = shapley_weights(m);
    ShapExplanation out;
    out.phi.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t bit = std::size_t{1} << j;
        double acc = 0.0;
        for (std::size_t s = 0; s < coalitions; ++s) {
            if (s & bit) {
                continue;
            }
            acc += w[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]);
        }
        out.phi[j] = acc;
    }
    out.base_value = v[0];
    out.prediction = v[coalitions - 1];
    out.instance.assign(instance.begin(), instance.end());
    out.background_size = nb;
    return out;
}

ShapExplanation shap_exact(const nn::MlpModel& model, std::span<const double> instance, const Matrix& background)
{
    if (instance.size() != model.input_dim()) {
        fail(Errc::contract, "instance width does not match the model");
    }
    return shap_exact(wrap(model), instance, background);
}

GlobalImportance global_importance(const Predictor& f, const Matrix& eval_rows, const Matrix& background,
                                   std::vector<std::string> feature_names)
{
    if (eval_rows.rows() == 0) {
        fail(Errc::insufficient_data, "evaluation set is empty");
    }
    const std::size_t m = eval_rows.cols();
    if (feature_names.empty()) {
        for (std::size_t j = 0; j < m; ++j) {
            feature_names.push_back("x" + std::to_string(j));
        }
    }
    if (feature_names.size() != m) {
        fail(Errc::contract, "feature name count does not match row width");
    }
    GlobalImportance g;
    g.features = std::move(feature_names);
    g.phi = Matrix(eval_rows.rows(), m);
    g.values = eval_rows;
    g.mean_abs_phi.assign(m, 0.0);
    for (std::size_t r = 0; r < eval_rows.rows(); ++r) {
        const auto e = shap_exact(f, eval_rows.row(r), background);
        g.base_value = e.base_value;
        g.predictions.push_back(e.prediction);
        for (std::size_t j = 0; j < m; ++j) {
            g.phi(r, j) = e.phi[j];
            g.mean_abs_phi[j] += std::abs(e.phi[j]);
        }
    }
    for (double& v : g.mean_abs_phi) {
        v /= static_cast<double>(eval_rows.rows());
    }
    g.ranking = iota_indices(m);
    std::stable_sort(g.ranking.begin(), g.ranking.end(),
                     [&](std::size_t a, std::size_t b) { return g.mean_abs_phi[a] > g.mean_abs_phi[b]; });
    return g;
}

GlobalImportance global_importance(const nn::MlpModel& model, const Matrix& eval_rows, const Matrix& background)
{
    if (eval_rows.cols() != model.input_dim()) {
        fail(Errc::contract, "evaluation rows do not match the model width");
    }
    return global_importance(wrap(model), eval_rows, background, model.feature_order);
}

Matrix select_background(const Matrix& rows, std::size_t n, std::uint64_t seed)
{
    if (rows.rows() == 0) {
        fail(Errc::insufficient_data, "cannot draw a background from an empty set");
    }
    auto order = iota_indices(rows.rows());
    Rng rng(seed);
    rng.shuffle(order);
    order.resize(std::min(n, order.size()));
    std::sort(order.begin(), order.end());
    return rows.select_rows(order);
}

json to_json(const GlobalImportance& g)
{
    json ranking = json::array();
    for (auto j : g.ranking) {
        ranking.push_back({{"feature", g.features[j]}, {"mean_abs_phi", g.mean_abs_phi[j]}});
    }
    json samples = json::array();
    for (std::size_t r = 0; r < g.phi.rows(); ++r) {
        const auto phi = g.phi.row(r);
        const auto val = g.values.row(r);
        samples.push_back({
            {"prediction", g.predictions[r]},
            {"phi", std::vector<double>(phi.begin(), phi.end())},
            {"values", std::vector<double>(val.begin(), val.end())},
        });
    }
    return {
        {"base_value", g.base_value},
        {"features", g.features},
        {"mean_abs_phi", g.mean_abs_phi},
        {"ranking", std::move(ranking)},
        {"samples", std::move(samples)},
    };
}

} // namespace roughcast::xai
