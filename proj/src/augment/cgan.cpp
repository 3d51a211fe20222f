#include "roughcast/augment.hpp"

#include "roughcast/dataset.hpp"
#include "roughcast/error.hpp"
#include "roughcast/nn/serialize.hpp"
#include "roughcast/text.hpp"

#include <algorithm>
#include <cmath>

namespace roughcast::aug {

using nlohmann::json;

void CganConfig::validate() const
{
    if (noise_dim == 0 || epochs == 0 || batch_size == 0) {
        fail(Errc::config, "noise_dim, epochs and batch_size must be positive");
    }
    if (generator_widths.empty() || discriminator_widths.empty()) {
        fail(Errc::config, "generator and discriminator need at least one hidden layer");
    }
    for (auto w : generator_widths) {
        if (w == 0) {
            fail(Errc::config, "generator widths must be positive");
        }
    }
    for (auto w : discriminator_widths) {
        if (w == 0) {
            fail(Errc::config, "discriminator widths must be positive");
        }
    }
    if (!(generator_lr > 0.0) || !(discriminator_lr > 0.0)) {
        fail(Errc::config, "learning rates must be > 0");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        fail(Errc::config, "Adam betas must lie in [0, 1)");
    }
    if (!(sigma >= 0.0)) {
        fail(Errc::config, "sigma must be >= 0");
    }
    if (!(synthetic_weight > 0.0 && synthetic_weight <= 1.0)) {
        fail(Errc::config, "synthetic_weight must lie in (0, 1]");
    }
}

namespace {

double softplus(double x)
{
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x)
{
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix generator_input(const Matrix& noise, const Matrix& cond)
{
    Matrix in(cond.rows(), noise.cols() + cond.cols());
    for (std::size_t r = 0; r < cond.rows(); ++r) {
        auto row = in.row(r);
        std::copy(noise.row(r).begin(), noise.row(r).end(), row.begin());
        std::copy(cond.row(r).begin(), cond.row(r).end(), row.begin() + static_cast<std::ptrdiff_t>(noise.cols()));
    }
    return in;
}

Matrix discriminator_input(std::span<const double> ra, const Matrix& cond)
{
    Matrix in(cond.rows(), 1 + cond.cols());
    for (std::size_t r = 0; r < cond.rows(); ++r) {
        in(r, 0) = ra[r];
        std::copy(cond.row(r).begin(), cond.row(r).end(), in.row(r).begin() + 1);
    }
    return in;
}

Matrix noise_matrix(Rng& rng, std::size_t rows, std::size_t dim)
{
    Matrix m(rows, dim);
    for (double& v : m.data()) {
        v = rng.normal();
    }
    return m;
}

void accumulate(nn::Gradients& into, const nn::Gradients& from)
{
    for (std::size_t b = 0; b < into.blocks.size(); ++b) {
        for (std::size_t i = 0; i < into.blocks[b].size(); ++i) {
            into.blocks[b][i] += from.blocks[b][i];
        }
    }
}

} // namespace

CganTrainResult train_cgan(const Matrix& train_rows, std::span<const double> train_ra, const CganConfig& config,
                           std::vector<std::string> feature_order)
{
    config.validate();
    const std::size_t n = train_rows.rows();
    if (train_ra.size() != n) {
        fail(Errc::schema, "Ra count does not match row count");
    }
    if (n < 2 * config.batch_size) {
        fail(Errc::insufficient_data, "CGAN training needs at least 2 x batch_size rows (have " + std::to_string(n) +
                                          ")");
    }
    if (feature_order.empty()) {
        feature_order = train_rows.cols() == data::kFeatureCount ? data::feature_order() : std::vector<std::string>{};
        for (std::size_t i = feature_order.size(); i < train_rows.cols(); ++i) {
            feature_order.push_back("x" + std::to_string(i));
        }
    }
    if (feature_order.size() != train_rows.cols()) {
        fail(Errc::contract, "feature order length does not match row width");
    }

    CganModel model;
    model.config = config;
    model.noise_dim = config.noise_dim;
    model.feature_order = std::move(feature_order);
    model.scaler = data::fit_scaler(train_rows, train_ra);
    model.train_conditions = data::apply_scaler(model.scaler, train_rows);
    const std::size_t d = train_rows.cols();

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = data::scale_target(model.scaler, train_ra[i]);
    }

    Rng init_rng(derive_seed(config.seed, 0xC6A1));
    nn::NetworkShape g_shape;
    g_shape.input_dim = config.noise_dim + d;
    g_shape.hidden_widths = config.generator_widths;
    g_shape.activation = nn::Activation::leaky_relu;
    g_shape.batch_norm = false;
    g_shape.leaky_slope = config.leaky_slope;
    model.generator = nn::Network::create(g_shape, init_rng);

    nn::NetworkShape d_shape = g_shape;
    d_shape.input_dim = 1 + d;
    d_shape.hidden_widths = config.discriminator_widths;
    model.discriminator = nn::Network::create(d_shape, init_rng);

    const nn::Adam::Options adam_opts{config.adam_beta1, config.adam_beta2, 1e-8};
    nn::Adam g_adam(model.generator, adam_opts);
    nn::Adam d_adam(model.discriminator, adam_opts);
    Rng shuffle_rng(derive_seed(config.seed, 0x5A));
    Rng noise_rng(derive_seed(config.seed, 0x2015E));

    CganReport report;
    report.updates_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    std::size_t collapsed_epochs = 0;
    auto order = iota_indices(n);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double d_epoch = 0.0;
        double g_epoch = 0.0;
        for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
            const std::size_t b = std::min(config.batch_size, n - begin);
            const std::span<const std::size_t> idx(order.data() + begin, b);
            const Matrix cond = model.train_conditions.select_rows(idx);
            std::vector<double> real_y(b);
            for (std::size_t i = 0; i < b; ++i) {
                real_y[i] = y[idx[i]];
            }
            const double inv_b = 1.0 / static_cast<double>(b);

            // Discriminator: mean BCE on real (label 1) plus mean BCE on fake (label 0).
            const Matrix fake = model.generator.forward(generator_input(noise_matrix(noise_rng, b, model.noise_dim), cond),
                                                        nn::Mode::train);
            nn::ForwardCache real_cache;
            nn::ForwardCache fake_cache;
            const Matrix real_logit =
                model.discriminator.forward(discriminator_input(real_y, cond), nn::Mode::train, &real_cache);
            const Matrix fake_logit =
                model.discriminator.forward(discriminator_input(fake.data(), cond), nn::Mode::train, &fake_cache);
            double d_loss = 0.0;
            Matrix g_real(b, 1);
            Matrix g_fake(b, 1);
            for (std::size_t i = 0; i < b; ++i) {
                d_loss += (softplus(-real_logit(i, 0)) + softplus(fake_logit(i, 0))) * inv_b;
                g_real(i, 0) = (sigmoid(real_logit(i, 0)) - 1.0) * inv_b;
                g_fake(i, 0) = sigmoid(fake_logit(i, 0)) * inv_b;
            }
            nn::Gradients d_grads = model.discriminator.backward(real_cache, g_real);
            accumulate(d_grads, model.discriminator.backward(fake_cache, g_fake));
            d_adam.step(model.discriminator, d_grads, config.discriminator_lr);

            // Generator: non-saturating objective -log D(G(z, c), c).
            nn::ForwardCache g_cache;
            const Matrix gen = model.generator.forward(
                generator_input(noise_matrix(noise_rng, b, model.noise_dim), cond), nn::Mode::train, &g_cache);
            nn::ForwardCache dg_cache;
            const Matrix dg_logit =
                model.discriminator.forward(discriminator_input(gen.data(), cond), nn::Mode::train, &dg_cache);
            double g_loss = 0.0;
            Matrix g_logit(b, 1);
            for (std::size_t i = 0; i < b; ++i) {
                g_loss += softplus(-dg_logit(i, 0)) * inv_b;
                g_logit(i, 0) = (sigmoid(dg_logit(i, 0)) - 1.0) * inv_b;
            }
            Matrix grad_d_input;
            model.discriminator.backward(dg_cache, g_logit, &grad_d_input);
            Matrix grad_gen(b, 1);
            for (std::size_t i = 0; i < b; ++i) {
                grad_gen(i, 0) = grad_d_input(i, 0);
            }
            g_adam.step(model.generator, model.generator.backward(g_cache, grad_gen), config.generator_lr);

            d_epoch += d_loss * static_cast<double>(b);
            g_epoch += g_loss * static_cast<double>(b);
            ++report.discriminator_updates;
            ++report.generator_updates;
        }
        d_epoch /= static_cast<double>(n);
        g_epoch /= static_cast<double>(n);
        if (!std::isfinite(d_epoch) || !std::isfinite(g_epoch)) {
            fail(Errc::divergence, "non-finite CGAN loss at epoch " + std::to_string(epoch));
        }
        report.discriminator_loss.push_back(d_epoch);
        report.generator_loss.push_back(g_epoch);
        collapsed_epochs = d_epoch < kCollapseLoss ? collapsed_epochs + 1 : 0;
        if (collapsed_epochs >= kCollapseEpochs) {
            report.mode_collapse_warning = true;
        }
    }
    return {std::move(model), std::move(report)};
}

std::vector<SyntheticRecord> generate_synthetic(const CganModel& model, const Matrix& conditions, double weight,
                                                std::uint64_t seed)
{
    if (!(weight > 0.0 && weight <= 1.0)) {
        fail(Errc::validation, "synthetic weight must lie in (0, 1]");
    }
    if (conditions.rows() == 0) {
        return {};
    }
    if (conditions.cols() != model.condition_dim()) {
        fail(Errc::contract, "condition width does not match the CGAN model");
    }
    Rng rng(seed);
    const Matrix noise = noise_matrix(rng, conditions.rows(), model.noise_dim);
    const Matrix out = model.generator.forward(generator_input(noise, conditions), nn::Mode::eval);
    std::vector<SyntheticRecord> records(conditions.rows());
    for (std::size_t r = 0; r < conditions.rows(); ++r) {
        const double raw = out(r, 0);
        const double clipped = std::clamp(raw, 0.0, 1.0);
        auto& rec = records[r];
        rec.conditions.assign(conditions.row(r).begin(), conditions.row(r).end());
        rec.ra = data::unscale_target(model.scaler, clipped);
        rec.weight = weight;
        rec.pre_clip_out_of_range = !(raw >= 0.0 && raw <= 1.0);
    }
    return records;
}

Matrix synthetic_feature_rows(const CganModel& model, const std::vector<SyntheticRecord>& records)
{
    Matrix scaled(records.size(), model.condition_dim());
    for (std::size_t r = 0; r < records.size(); ++r) {
        std::copy(records[r].conditions.begin(), records[r].conditions.end(), scaled.row(r).begin());
    }
    return data::invert_scaler(model.scaler, scaled);
}

json to_json(const CganConfig& c)
{
    return {
        {"noise_dim", c.noise_dim},
        {"generator_widths", c.generator_widths},
        {"discriminator_widths", c.discriminator_widths},
        {"generator_lr", c.generator_lr},
        {"discriminator_lr", c.discriminator_lr},
        {"adam_beta1", c.adam_beta1},
        {"adam_beta2", c.adam_beta2},
        {"leaky_slope", c.leaky_slope},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"seed", c.seed},
        {"sigma", c.sigma},
        {"synthetic_weight", c.synthetic_weight},
    };
}

CganConfig cgan_config_from_json(const json& j, CganConfig c)
{
    try {
        auto take = [&](const char* key, auto& field) {
            if (j.contains(key) && !j.at(key).is_null()) {
                field = j.at(key).get<std::decay_t<decltype(field)>>();
            }
        };
        take("noise_dim", c.noise_dim);
        take("generator_widths", c.generator_widths);
        take("discriminator_widths", c.discriminator_widths);
        take("generator_lr", c.generator_lr);
        take("discriminator_lr", c.discriminator_lr);
        take("adam_beta1", c.adam_beta1);
        take("adam_beta2", c.adam_beta2);
        take("leaky_slope", c.leaky_slope);
        take("epochs", c.epochs);
        take("batch_size", c.batch_size);
        take("seed", c.seed);
        take("sigma", c.sigma);
        take("synthetic_weight", c.synthetic_weight);
    } catch (const json::exception& e) {
        fail(Errc::config, std::string("invalid CGAN config: ") + e.what());
    }
    c.validate();
    return c;
}

json to_json(const CganModel& m)
{
    json g = nn::network_to_json(m.generator);
    g["role"] = "generator";
    g["noise_dim"] = m.noise_dim;
    json d = nn::network_to_json(m.discriminator);
    d["role"] = "discriminator";
    d["noise_dim"] = m.noise_dim;
    json conds = json::array();
    for (std::size_t r = 0; r < m.train_conditions.rows(); ++r) {
        const auto row = m.train_conditions.row(r);
        conds.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return {
        {"format_version", nn::kModelFormatVersion},
        {"kind", "cgan"},
        {"feature_order", m.feature_order},
        {"noise_dim", m.noise_dim},
        {"scaler", nn::to_json(m.scaler)},
        {"config", to_json(m.config)},
        {"generator", std::move(g)},
        {"discriminator", std::move(d)},
        {"train_conditions", std::move(conds)},
    };
}

CganModel cgan_from_json(const json& j)
{
    CganModel m;
    try {
        if (j.value("format_version", 0) != nn::kModelFormatVersion || j.value("kind", "") != "cgan") {
            fail(Errc::schema, "not a CGAN model file of format_version " + std::to_string(nn::kModelFormatVersion));
        }
        m.feature_order = j.at("feature_order").get<std::vector<std::string>>();
        m.noise_dim = j.at("noise_dim").get<std::size_t>();
        m.scaler = nn::scaler_from_json(j.at("scaler"));
        m.config = cgan_config_from_json(j.at("config"));
        if (j.at("generator").value("role", "") != "generator" ||
            j.at("discriminator").value("role", "") != "discriminator") {
            fail(Errc::schema, "CGAN network roles are missing or swapped");
        }
        m.generator = nn::network_from_json(j.at("generator"));
        m.discriminator = nn::network_from_json(j.at("discriminator"));
        const auto rows = j.at("train_conditions").get<std::vector<std::vector<double>>>();
        m.train_conditions = rows.empty() ? Matrix(0, m.scaler.width()) : Matrix::from_rows(rows);
    } catch (const json::exception& e) {
        fail(Errc::schema, std::string("malformed CGAN JSON: ") + e.what());
    }
    const std::size_t d = m.scaler.width();
    if (m.feature_order.size() != d || m.generator.input_dim() != m.noise_dim + d ||
        m.discriminator.input_dim() != 1 + d || m.generator.output_dim() != 1 || m.discriminator.output_dim() != 1 ||
        m.train_conditions.cols() != d || !m.scaler.has_target()) {
        fail(Errc::contract, "CGAN model shapes are inconsistent");
    }
    return m;
}

json to_json(const CganReport& r)
{
    return {
        {"discriminator_loss", r.discriminator_loss},
        {"generator_loss", r.generator_loss},
        {"updates_per_epoch", r.updates_per_epoch},
        {"generator_updates", r.generator_updates},
        {"discriminator_updates", r.discriminator_updates},
        {"mode_collapse_warning", r.mode_collapse_warning},
    };
}

void save_cgan(const CganModel& model, const std::filesystem::path& path)
{
    text::write_file(path, to_json(model).dump(1));
}

CganModel load_cgan(const std::filesystem::path& path)
{
    json j;
    try {
        j = json::parse(text::read_file(path));
    } catch (const json::parse_error& e) {
        fail(Errc::parse, path.string() + ": " + e.what());
    }
    return cgan_from_json(j);
}

} // namespace roughcast::aug
