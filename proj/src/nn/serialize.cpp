#include "roughcast/nn/serialize.hpp"

#include "roughcast/error.hpp"
#include "roughcast/text.hpp"

namespace roughcast::nn {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* key, T fallback)
{
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) {
        return fallback;
    }
    return j.at(key).get<T>();
}

const json& require(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        fail(Errc::schema, std::string("model JSON lacks '") + key + "'");
    }
    return j.at(key);
}

json optional_number(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

std::optional<double> optional_from(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<double>();
}

} // namespace

json to_json(const MlpConfig& c)
{
    return {
        {"hidden_widths", c.hidden_widths},
        {"activation", std::string(to_string(c.activation))},
        {"dropout_rate", c.dropout_rate},
        {"learning_rate", c.learning_rate},
        {"l2_strength", c.l2_strength},
        {"batch_size", c.batch_size},
        {"max_epochs", c.max_epochs},
        {"early_stop_patience", c.early_stop_patience},
        {"grad_clip_norm", c.grad_clip_norm},
        {"seed", c.seed},
        {"plateau_factor", c.plateau_factor},
        {"plateau_patience", c.plateau_patience},
        {"min_learning_rate", c.min_learning_rate},
        {"bn_momentum", c.bn_momentum},
        {"scale_target", c.scale_target},
    };
}

MlpConfig config_from_json(const json& j, MlpConfig c)
{
    try {
        c.hidden_widths = field(j, "hidden_widths", c.hidden_widths);
        c.activation = parse_activation(field(j, "activation", std::string(to_string(c.activation))));
        c.dropout_rate = field(j, "dropout_rate", c.dropout_rate);
        c.learning_rate = field(j, "learning_rate", c.learning_rate);
        c.l2_strength = field(j, "l2_strength", c.l2_strength);
        c.batch_size = field(j, "batch_size", c.batch_size);
        c.max_epochs = field(j, "max_epochs", c.max_epochs);
        c.early_stop_patience = field(j, "early_stop_patience", c.early_stop_patience);
        c.grad_clip_norm = field(j, "grad_clip_norm", c.grad_clip_norm);
        c.seed = field(j, "seed", c.seed);
        c.plateau_factor = field(j, "plateau_factor", c.plateau_factor);
        c.plateau_patience = field(j, "plateau_patience", c.plateau_patience);
        c.min_learning_rate = field(j, "min_learning_rate", c.min_learning_rate);
        c.bn_momentum = field(j, "bn_momentum", c.bn_momentum);
        c.scale_target = field(j, "scale_target", c.scale_target);
    } catch (const json::exception& e) {
        fail(Errc::config, std::string("invalid MLP config: ") + e.what());
    }
    c.validate();
    return c;
}

json to_json(const data::ScalerParams& s)
{
    return {
        {"min", s.min},
        {"max", s.max},
        {"target_min", optional_number(s.target_min)},
        {"target_max", optional_number(s.target_max)},
    };
}

data::ScalerParams scaler_from_json(const json& j)
{
    data::ScalerParams s;
    s.min = require(j, "min").get<std::vector<double>>();
    s.max = require(j, "max").get<std::vector<double>>();
    s.target_min = optional_from(j, "target_min");
    s.target_max = optional_from(j, "target_max");
    if (s.min.size() != s.max.size()) {
        fail(Errc::schema, "scaler min/max length mismatch");
    }
    for (std::size_t f = 0; f < s.min.size(); ++f) {
        if (!(s.min[f] <= s.max[f])) {
            fail(Errc::schema, "scaler min exceeds max");
        }
    }
    return s;
}

json to_json(const MetricsReport& m)
{
    return {{"mae", m.mae}, {"mse", m.mse}, {"r2", optional_number(m.r2)}, {"mape", optional_number(m.mape)}};
}

MetricsReport metrics_from_json(const json& j)
{
    MetricsReport m;
    m.mae = require(j, "mae").get<double>();
    m.mse = require(j, "mse").get<double>();
    m.r2 = optional_from(j, "r2");
    m.mape = optional_from(j, "mape");
    return m;
}

json to_json(const TrainReport& r)
{
    return {
        {"train_loss", r.train_loss},
        {"val_mae", r.val_mae},
        {"learning_rate", r.learning_rate},
        {"stopping_epoch", r.stopping_epoch},
        {"best_epoch", r.best_epoch},
        {"best_val_mae", r.best_val_mae},
        {"early_stopped", r.early_stopped},
        {"optimizer_steps", r.optimizer_steps},
    };
}

json network_to_json(const Network& net)
{
    json layers = json::array();
    for (const auto& layer : net.layers()) {
        json w = json::array();
        for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
            const auto row = layer.weight.row(r);
            w.push_back(std::vector<double>(row.begin(), row.end()));
        }
        json entry = {{"w", std::move(w)}, {"b", layer.bias}, {"bn", nullptr}};
        if (layer.bn) {
            entry["bn"] = {
                {"gamma", layer.bn->gamma},
                {"beta", layer.bn->beta},
                {"mean", layer.bn->running_mean},
                {"var", layer.bn->running_var},
            };
        }
        layers.push_back(std::move(entry));
    }
    return {
        {"architecture",
         {
             {"activation", std::string(to_string(net.activation()))},
             {"leaky_slope", net.leaky_slope()},
             {"bn_momentum", net.bn_momentum()},
             {"dropout", net.dropout()},
         }},
        {"layers", std::move(layers)},
    };
}

Network network_from_json(const json& j)
{
    try {
        const auto& arch = require(j, "architecture");
        std::vector<DenseLayer> layers;
        for (const auto& entry : require(j, "layers")) {
            DenseLayer layer;
            const auto rows = require(entry, "w").get<std::vector<std::vector<double>>>();
            layer.weight = Matrix::from_rows(rows);
            layer.bias = require(entry, "b").get<std::vector<double>>();
            if (entry.contains("bn") && !entry.at("bn").is_null()) {
                const auto& bn = entry.at("bn");
                layer.bn = BatchNorm{
                    require(bn, "gamma").get<std::vector<double>>(),
                    require(bn, "beta").get<std::vector<double>>(),
                    require(bn, "mean").get<std::vector<double>>(),
                    require(bn, "var").get<std::vector<double>>(),
                };
            }
            layers.push_back(std::move(layer));
        }
        return Network(std::move(layers), parse_activation(require(arch, "activation").get<std::string>()),
                       field(arch, "dropout", 0.0), field(arch, "bn_momentum", 0.1), field(arch, "leaky_slope", 0.2));
    } catch (const json::exception& e) {
        fail(Errc::schema, std::string("malformed network JSON: ") + e.what());
    }
}

json to_json(const MlpModel& model)
{
    json net = network_to_json(model.network);
    json metadata = {
        {"config", to_json(model.metadata.config)},
        {"epochs_run", model.metadata.epochs_run},
        {"best_val_mae", optional_number(model.metadata.best_val_mae)},
        {"train_rows", model.metadata.train_rows},
        {"metrics", model.metadata.test_metrics ? to_json(*model.metadata.test_metrics) : json(nullptr)},
    };
    return {
        {"format_version", kModelFormatVersion},
        {"feature_order", model.feature_order},
        {"scaler", to_json(model.scaler)},
        {"architecture", std::move(net["architecture"])},
        {"layers", std::move(net["layers"])},
        {"metadata", std::move(metadata)},
    };
}

MlpModel model_from_json(const json& j)
{
    const int version = field(j, "format_version", 0);
    if (version != kModelFormatVersion) {
        fail(Errc::schema, "unsupported model format_version " + std::to_string(version));
    }
    MlpModel model;
    try {
        model.network = network_from_json(j);
        model.scaler = scaler_from_json(require(j, "scaler"));
        model.feature_order = require(j, "feature_order").get<std::vector<std::string>>();
        const json meta = field(j, "metadata", json::object());
        if (meta.contains("config")) {
            model.metadata.config = config_from_json(meta.at("config"));
        }
        model.metadata.epochs_run = field<std::size_t>(meta, "epochs_run", 0);
        model.metadata.best_val_mae = optional_from(meta, "best_val_mae");
        model.metadata.train_rows = field<std::size_t>(meta, "train_rows", 0);
        if (meta.contains("metrics") && !meta.at("metrics").is_null()) {
            model.metadata.test_metrics = metrics_from_json(meta.at("metrics"));
        }
    } catch (const json::exception& e) {
        fail(Errc::schema, std::string("malformed model JSON: ") + e.what());
    }
    if (model.scaler.width() != model.network.input_dim() || model.feature_order.size() != model.network.input_dim()) {
        fail(Errc::contract, "scaler / feature order width does not match network input");
    }
    if (model.network.output_dim() != 1) {
        fail(Errc::contract, "regression model must have a single output");
    }
    return model;
}

void save_model(const MlpModel& model, const std::filesystem::path& path)
{
    text::write_file(path, to_json(model).dump(1));
}

MlpModel load_model(const std::filesystem::path& path)
{
    json j;
    try {
        j = json::parse(text::read_file(path));
    } catch (const json::parse_error& e) {
        fail(Errc::parse, path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

} // namespace roughcast::nn
