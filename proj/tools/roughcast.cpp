#include "roughcast/augment.hpp"
#include "roughcast/dataset.hpp"
#include "roughcast/doe.hpp"
#include "roughcast/error.hpp"
#include "roughcast/explain.hpp"
#include "roughcast/mesh.hpp"
#include "roughcast/nn/serialize.hpp"
#include "roughcast/pipeline.hpp"
#include "roughcast/server.hpp"
#include "roughcast/stats.hpp"
#include "roughcast/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

using namespace roughcast;
using nlohmann::json;

namespace {

void emit(const std::string& path, const std::string& content)
{
    if (path.empty() || path == "-") {
        std::cout << content;
        if (!content.empty() && content.back() != '\n') {
            std::cout << '\n';
        }
        return;
    }
    text::write_file(path, content);
}

void emit(const std::string& path, const json& j)
{
    emit(path, j.dump(2) + "\n");
}

// Inline JSON or a path to a JSON file.
json json_arg(const std::string& arg)
{
    if (arg.empty()) {
        return json::object();
    }
    const std::string body = std::filesystem::exists(arg) ? text::read_file(arg) : arg;
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) {
        fail(Errc::parse, "not valid JSON (or missing file): " + arg);
    }
    return j;
}

std::vector<double> number_list(const std::string& arg, std::size_t expected = 0)
{
    std::vector<double> out;
    for (auto tok : text::split(arg, ',')) {
        const auto v = text::parse_double(tok);
        if (!v) {
            fail(Errc::config, "bad number '" + std::string(tok) + "' in '" + arg + "'");
        }
        out.push_back(*v);
    }
    if (expected && out.size() != expected) {
        fail(Errc::config, "expected " + std::to_string(expected) + " comma-separated values in '" + arg + "'");
    }
    return out;
}

data::SplitIndices load_split_or(const std::string& path, const data::Dataset& ds, data::SplitFractions fallback,
                                 std::uint64_t seed)
{
    if (!path.empty()) {
        auto split = pipe::split_from_json(json_arg(path));
        if (split.total() != ds.size()) {
            fail(Errc::contract, "split covers " + std::to_string(split.total()) + " rows but the dataset has " +
                                     std::to_string(ds.size()));
        }
        return split;
    }
    return data::split_holdout(ds, fallback, seed);
}

std::vector<std::size_t> subset_of(const data::SplitIndices& split, const std::string& name)
{
    if (name == "train") return split.train;
    if (name == "val") return split.val;
    if (name == "test") return split.test;
    if (name == "pool") return split.pool();
    fail(Errc::config, "unknown subset '" + name + "' (train, val, test, pool)");
}

// ---- doe -------------------------------------------------------------------

void add_doe(CLI::App& app)
{
    auto* doe_cmd = app.add_subcommand("doe", "Box-Behnken design generation")->require_subcommand(1);
    auto* gen = doe_cmd->add_subcommand("generate", "Generate a Box-Behnken design");
    static std::string factors, out, verify;
    static std::size_t center = 3;
    gen->add_option("--factors", factors, "factor spec file (name,unit,l1,l2,l3); default: study factors");
    gen->add_option("--center", center, "center-point replicates")->capture_default_str();
    gen->add_option("--verify", verify, "reference CSV of parameter rows to match exactly");
    gen->add_option("--out", out, "output CSV (stdout if omitted)");
    gen->callback([] {
        const auto specs = factors.empty() ? doe::study_factors() : doe::load_factor_spec(factors);
        const auto design = doe::generate_bbd(specs, center);
        emit(out, doe::design_to_csv(design));
        if (!verify.empty()) {
            std::vector<doe::ParameterRow> ref;
            const auto lines = text::split_lines(text::read_file(verify));
            for (std::size_t i = 1; i < lines.size(); ++i) {
                if (text::trim(lines[i]).empty()) {
                    continue;
                }
                doe::ParameterRow row;
                for (auto tok : text::split(lines[i], ',')) {
                    if (const auto v = text::parse_double(tok)) {
                        row.push_back(*v);
                    }
                }
                row.resize(specs.size());
                ref.push_back(row);
            }
            const auto report = doe::verify_against_reference(design, ref);
            if (!report.empty()) {
                fail(Errc::invalid_design, "design does not match " + verify);
            }
            std::cerr << "design matches " << verify << " (" << ref.size() << " rows)\n";
        }
    });
}

// ---- data ------------------------------------------------------------------

void add_data(CLI::App& app)
{
    auto* data_cmd = app.add_subcommand("data", "Dataset statistics and splits")->require_subcommand(1);

    auto* stats = data_cmd->add_subcommand("stats", "Descriptive statistics of one column");
    static std::string in, column = "ra_um", out;
    stats->add_option("--in", in, "dataset CSV")->required();
    stats->add_option("--column", column, "column name")->capture_default_str();
    stats->add_option("--out", out, "output JSON (stdout if omitted)");
    stats->callback([] {
        const auto ds = data::load_dataset(in);
        std::vector<double> values;
        if (column == "ra_um") {
            values = ds.targets();
        } else {
            const auto it = std::find(data::kCsvColumns.begin() + 1, data::kCsvColumns.end() - 1, column);
            if (it == data::kCsvColumns.end() - 1) {
                fail(Errc::config, "unknown numeric column '" + column + "'");
            }
            values = ds.features().column(static_cast<std::size_t>(it - data::kCsvColumns.begin() - 1));
        }
        const auto s = data::descriptive_stats(values);
        emit(out, json{{"column", column},
                       {"count", s.count},
                       {"mean", s.mean},
                       {"std", s.std},
                       {"min", s.min},
                       {"q1", s.q1},
                       {"median", s.median},
                       {"q3", s.q3},
                       {"max", s.max},
                       {"skewness", s.skewness}});
    });

    auto* split = data_cmd->add_subcommand("split", "Seeded hold-out split");
    static std::string split_in, fractions = "0.85,0.0,0.15", split_out;
    static std::uint64_t seed = 42;
    static bool grouped = false;
    split->add_option("--in", split_in, "dataset CSV")->required();
    split->add_option("--fractions", fractions, "train,val,test")->capture_default_str();
    split->add_option("--seed", seed)->capture_default_str();
    split->add_flag("--grouped", grouped, "keep each object_id in one subset");
    split->add_option("--out", split_out, "output JSON (stdout if omitted)");
    split->callback([] {
        const auto ds = data::load_dataset(split_in);
        const auto f = number_list(fractions, 3);
        const data::SplitFractions fr{f[0], f[1], f[2]};
        const auto s = grouped ? data::split_holdout_grouped(ds, fr, seed) : data::split_holdout(ds, fr, seed);
        emit(split_out, pipe::to_json(s));
    });
}

// ---- train / eval ----------------------------------------------------------

void add_train(CLI::App& app)
{
    auto* train = app.add_subcommand("train", "Train one MLP: fit on train rows, early-stop on val, score test once");
    static std::string data_path, config, split_path, out;
    static std::uint64_t seed = 42;
    train->add_option("--data", data_path, "dataset CSV")->required();
    train->add_option("--config", config, "MlpConfig JSON (file or inline)");
    train->add_option("--split", split_path, "split JSON; default 70/15/15 with --seed");
    train->add_option("--seed", seed, "split seed when --split is absent")->capture_default_str();
    train->add_option("--out", out, "model JSON")->required();
    train->callback([] {
        const auto ds = data::load_dataset(data_path);
        const auto cfg = nn::config_from_json(json_arg(config));
        const auto split = load_split_or(split_path, ds, data::kAugmentationProtocol, seed);
        if (split.val.empty()) {
            fail(Errc::config, "training needs a non-empty val subset for early stopping");
        }
        const nn::TrainSet ts{ds.features(split.train), ds.targets(split.train), {}};
        const nn::EvalSet vs{ds.features(split.val), ds.targets(split.val)};
        auto result = nn::train_mlp(nn::init_mlp(cfg, data::kFeatureCount), ts, vs, cfg);
        if (!split.test.empty()) {
            result.model.metadata.test_metrics = nn::compute_metrics(
                ds.targets(split.test), result.model.predict(ds.features(split.test)), nn::MetricsPolicy::lenient);
        }
        nn::save_model(result.model, out);
        json summary = {{"best_epoch", result.report.best_epoch},
                        {"stopping_epoch", result.report.stopping_epoch},
                        {"best_val_mae", result.report.best_val_mae}};
        if (result.model.metadata.test_metrics) {
            summary["test_metrics"] = nn::to_json(*result.model.metadata.test_metrics);
        }
        std::cerr << summary.dump(2) << "\n";
    });

    auto* eval = app.add_subcommand("eval", "Evaluate a saved model on a dataset");
    static std::string model_path, eval_data, eval_split, subset = "test", eval_out;
    eval->add_option("--model", model_path, "model JSON")->required();
    eval->add_option("--data", eval_data, "dataset CSV")->required();
    eval->add_option("--split", eval_split, "split JSON; evaluates --subset rows only");
    eval->add_option("--subset", subset, "train|val|test|pool")->capture_default_str();
    eval->add_option("--out", eval_out, "output JSON (stdout if omitted)");
    eval->callback([] {
        const auto model = nn::load_model(model_path);
        const auto ds = data::load_dataset(eval_data);
        std::vector<std::size_t> rows = iota_indices(ds.size());
        if (!eval_split.empty()) {
            rows = subset_of(pipe::split_from_json(json_arg(eval_split)), subset);
        }
        const auto m = nn::compute_metrics(ds.targets(rows), model.predict(ds.features(rows)),
                                           nn::MetricsPolicy::lenient);
        auto j = nn::to_json(m);
        j["rows"] = rows.size();
        emit(eval_out, j);
    });
}

// ---- hpo -------------------------------------------------------------------

void add_hpo(CLI::App& app)
{
    auto* hpo = app.add_subcommand("hpo", "Cross-validated hyperparameter search, then one hold-out test");
    static std::string data_path, space_path, split_path, out, model_out;
    static std::size_t trials = 50, folds = 5;
    static std::uint64_t seed = 42;
    static bool no_pruning = false;
    hpo->add_option("--data", data_path, "dataset CSV")->required();
    hpo->add_option("--trials", trials)->capture_default_str();
    hpo->add_option("--folds", folds)->capture_default_str();
    hpo->add_option("--seed", seed)->capture_default_str();
    hpo->add_option("--space", space_path, "search space JSON (file or inline)");
    hpo->add_option("--split", split_path, "split JSON; default 85/15 with --seed");
    hpo->add_flag("--no-pruning", no_pruning, "disable median pruning");
    hpo->add_option("--out", out, "study JSON")->required();
    hpo->add_option("--model-out", model_out, "final model JSON");
    hpo->callback([] {
        const auto ds = data::load_dataset(data_path);
        const auto split = load_split_or(split_path, ds, data::kHoldoutProtocol, seed);
        const auto space = pipe::search_space_from_json(json_arg(space_path));
        pipe::LeakageAudit audit;
        audit.protect(split.test);
        pipe::HpoOptions opt;
        opt.n_trials = trials;
        opt.folds = folds;
        opt.seed = seed;
        opt.pruning = !no_pruning;
        const auto pool = split.pool();
        const auto study = pipe::hpo_search(ds, pool, space, opt, &audit);
        const auto final = pipe::finalize_and_test(ds, pool, split.test, study.best_config, study.best_epochs, &audit);
        json j = pipe::to_json(study);
        j["split"] = pipe::to_json(split);
        j["test_metrics"] = nn::to_json(final.test_metrics);
        emit(out, j);
        if (!model_out.empty()) {
            nn::save_model(final.model, model_out);
        }
        std::cerr << "best trial " << study.best_trial << ": cv mae " << study.best_objective << ", test "
                  << nn::to_json(final.test_metrics).dump() << "\n";
    });
}

// ---- cgan ------------------------------------------------------------------

void add_cgan(CLI::App& app)
{
    auto* cgan = app.add_subcommand("cgan", "Conditional GAN augmentation")->require_subcommand(1);

    auto* train = cgan->add_subcommand("train", "Train the CGAN on the split's train rows");
    static std::string data_path, split_path, config, out;
    static std::uint64_t seed = 42;
    train->add_option("--data", data_path, "dataset CSV")->required();
    train->add_option("--split", split_path, "split JSON; default 70/15/15 with --seed");
    train->add_option("--seed", seed)->capture_default_str();
    train->add_option("--config", config, "CganConfig JSON (file or inline)");
    train->add_option("--out", out, "CGAN JSON")->required();
    train->callback([] {
        const auto ds = data::load_dataset(data_path);
        const auto split = load_split_or(split_path, ds, data::kAugmentationProtocol, seed);
        const auto cfg = aug::cgan_config_from_json(json_arg(config));
        pipe::LeakageAudit audit;
        audit.protect(split.test);
        const auto result = pipe::train_cgan_on(ds, split.train, cfg, &audit);
        aug::save_cgan(result.model, out);
        std::cerr << aug::to_json(result.report).dump() << "\n";
        if (result.report.mode_collapse_warning) {
            std::cerr << "warning: discriminator loss collapsed; check the generator\n";
        }
    });

    auto* sample = cgan->add_subcommand("sample", "Draw weighted synthetic records");
    static std::string cgan_path, sample_out;
    static std::size_t n = 0;
    static double sigma = 0.02, weight = 0.5;
    static std::uint64_t sample_seed = 42;
    sample->add_option("--cgan", cgan_path, "CGAN JSON")->required();
    sample->add_option("--n", n, "number of synthetic rows")->required();
    sample->add_option("--sigma", sigma, "condition jitter (normalized units)")->capture_default_str();
    sample->add_option("--weight", weight, "sample weight in (0, 1]")->capture_default_str();
    sample->add_option("--seed", sample_seed)->capture_default_str();
    sample->add_option("--out", sample_out, "synthetic CSV (stdout if omitted)");
    sample->callback([] {
        const auto model = aug::load_cgan(cgan_path);
        const auto conds =
            aug::sample_conditions(model.train_conditions, n, sigma, derive_seed(sample_seed, 1));
        const auto synth = aug::generate_synthetic(model, conds.conditions, weight, derive_seed(sample_seed, 2));
        const auto rows = aug::synthetic_feature_rows(model, synth);
        std::vector<data::MeasurementRecord> records;
        data::ExtraColumn w{"weight", {}};
        data::ExtraColumn prov{"provenance", {}};
        for (std::size_t i = 0; i < synth.size(); ++i) {
            const auto r = rows.row(i);
            data::MeasurementRecord rec;
            rec.object_id = "synthetic-" + std::to_string(i + 1);
            rec.params = data::ProcessParameters::from_array(r);
            rec.surface_angle = r[data::kFeatureCount - 1];
            rec.ra = synth[i].ra;
            records.push_back(rec);
            w.values.push_back(text::format_double(synth[i].weight));
            prov.values.emplace_back("synthetic");
        }
        emit(sample_out, data::dataset_to_csv(records, {w, prov}));
    });
}

// ---- sweep -----------------------------------------------------------------

void add_sweep(CLI::App& app)
{
    auto* sweep = app.add_subcommand("sweep", "Augmentation-ratio sweep selected on validation MAE");
    static std::string data_path, split_path, cgan_path, config, ratios = "0,1,2,3,4,5", out, model_out;
    static std::uint64_t seed = 42;
    static double sigma = 0.02, weight = 0.5;
    sweep->add_option("--data", data_path, "dataset CSV")->required();
    sweep->add_option("--split", split_path, "split JSON; default 70/15/15 with --seed");
    sweep->add_option("--cgan", cgan_path, "CGAN JSON trained on the same split")->required();
    sweep->add_option("--config", config, "MlpConfig JSON (file or inline)");
    sweep->add_option("--ratios", ratios)->capture_default_str();
    sweep->add_option("--sigma", sigma)->capture_default_str();
    sweep->add_option("--weight", weight)->capture_default_str();
    sweep->add_option("--seed", seed)->capture_default_str();
    sweep->add_option("--out", out, "sweep JSON")->required();
    sweep->add_option("--model-out", model_out, "selected model JSON");
    sweep->callback([] {
        const auto ds = data::load_dataset(data_path);
        const auto split = load_split_or(split_path, ds, data::kAugmentationProtocol, seed);
        const auto cgan = aug::load_cgan(cgan_path);
        pipe::SweepOptions opt;
        opt.config = nn::config_from_json(json_arg(config));
        opt.sigma = sigma;
        opt.synthetic_weight = weight;
        opt.seed = seed;
        pipe::LeakageAudit audit;
        audit.protect(split.test);
        const auto result = pipe::ratio_sweep(ds, split, cgan, number_list(ratios), opt, &audit);
        json j = pipe::to_json(result);
        j["split"] = pipe::to_json(split);
        emit(out, j);
        if (!model_out.empty()) {
            nn::save_model(result.selected_model, model_out);
        }
        std::cerr << "selected ratio " << result.selected_ratio << "\n";
    });
}

// ---- explain ---------------------------------------------------------------

void add_explain(CLI::App& app)
{
    auto* explain = app.add_subcommand("explain", "Exact Shapley attributions");
    static std::string model_path, data_path, split_path, subset = "test", out;
    static std::size_t background = 100, limit = 0;
    static std::uint64_t seed = 42;
    explain->add_option("--model", model_path, "model JSON")->required();
    explain->add_option("--data", data_path, "dataset CSV")->required();
    explain->add_option("--split", split_path, "split JSON; background comes from its train rows");
    explain->add_option("--subset", subset, "rows to explain: train|val|test|pool")->capture_default_str();
    explain->add_option("--background", background, "background rows")->capture_default_str();
    explain->add_option("--limit", limit, "explain at most this many rows (0 = all)");
    explain->add_option("--seed", seed)->capture_default_str();
    explain->add_option("--out", out, "SHAP JSON (stdout if omitted)");
    explain->callback([] {
        const auto model = nn::load_model(model_path);
        const auto ds = data::load_dataset(data_path);
        std::vector<std::size_t> bg_rows = iota_indices(ds.size());
        std::vector<std::size_t> eval_rows = bg_rows;
        if (!split_path.empty()) {
            const auto split = pipe::split_from_json(json_arg(split_path));
            bg_rows = split.train;
            eval_rows = subset_of(split, subset);
        }
        if (limit > 0 && eval_rows.size() > limit) {
            eval_rows.resize(limit);
        }
        const auto bg = xai::select_background(ds.features(bg_rows), background, seed);
        const auto g = xai::global_importance(model, ds.features(eval_rows), bg);
        auto j = xai::to_json(g);
        j["background_size"] = bg.rows();
        emit(out, j);
    });
}

// ---- mesh ------------------------------------------------------------------

void add_mesh(CLI::App& app)
{
    auto* mesh_cmd = app.add_subcommand("mesh", "Per-facet roughness on a triangle mesh")->require_subcommand(1);
    auto* predict = mesh_cmd->add_subcommand("predict", "Predict the roughness field of a mesh");
    static std::string model_path, mesh_path, format = "auto", params, rotate = "0,0,0", range, out, sidecar;
    predict->add_option("--model", model_path, "model JSON")->required();
    predict->add_option("--mesh", mesh_path, "STL or OBJ file")->required();
    predict->add_option("--format", format, "stl|stl-binary|stl-ascii|obj|auto")->capture_default_str();
    predict->add_option("--params", params, "process parameters JSON (file or inline)")->required();
    predict->add_option("--rotate", rotate, "rx,ry,rz degrees")->capture_default_str();
    predict->add_option("--range", range, "fixed color range lo,hi (default: field min/max)");
    predict->add_option("--out", out, "field JSON (stdout if omitted)");
    predict->add_option("--sidecar", sidecar, "binary float32 Ra sidecar");
    predict->callback([] {
        const auto model = nn::load_model(model_path);
        const auto m = mesh::load_mesh(mesh_path, mesh::parse_mesh_format(format));
        const auto p = mesh::params_from_json(json_arg(params),
                                              data::ProcessParameters::from_array(std::vector<double>(7, NAN)));
        const auto r = number_list(rotate, 3);
        mesh::ColorRange cr;
        if (!range.empty()) {
            const auto lh = number_list(range, 2);
            cr = mesh::ColorRange::fixed(lh[0], lh[1]);
        }
        const auto field = mesh::predict_field(model, m, {r[0], r[1], r[2]}, p, cr);
        emit(out, mesh::to_json(field).dump() + "\n");
        if (!sidecar.empty()) {
            text::write_file(sidecar, mesh::field_sidecar(field));
        }
        const auto& s = field.summary;
        std::cerr << s.facet_count << " facets (" << s.clamped_count << " clamped, " << s.degenerate_count
                  << " degenerate); Ra " << s.min << " .. " << s.max << " um, area-weighted mean "
                  << s.area_weighted_mean << " um\n";
    });
}

// ---- serve -----------------------------------------------------------------

void add_serve(CLI::App& app)
{
    auto* serve = app.add_subcommand("serve", "HTTP API (and optional static UI)");
    static std::string model_path, addr = "127.0.0.1:8080", static_dir;
    static std::size_t cache = srv::kDefaultCacheCapacity, max_upload_mb = 64;
    serve->add_option("--model", model_path, "model JSON (falls back to $ROUGHCAST_MODEL)");
    serve->add_option("--addr", addr, "host:port")->capture_default_str();
    serve->add_option("--static", static_dir, "directory served at /");
    serve->add_option("--cache", cache, "mesh cache capacity")->capture_default_str();
    serve->add_option("--max-upload-mb", max_upload_mb)->capture_default_str();
    serve->callback([] {
        if (model_path.empty()) {
            if (const char* env = std::getenv("ROUGHCAST_MODEL")) {
                model_path = env;
            }
        }
        std::optional<nn::MlpModel> model;
        if (!model_path.empty()) {
            model = nn::load_model(model_path);
        } else {
            std::cerr << "warning: no model given; predict and model/info will answer 503\n";
        }
        srv::Service service(std::move(model), {cache, max_upload_mb << 20});
        srv::HttpServer http(service, static_dir);
        const auto [host, port] = srv::parse_address(addr);
        const int bound = http.bind(host, port);
        std::cerr << "listening on http://" << host << ":" << bound << "\n";
        http.run();
    });
}

int exit_code(Errc code)
{
    switch (code) {
    case Errc::config:
    case Errc::schema: return 2;
    case Errc::leakage: return 4;
    default: return 1;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"roughcast: surface-roughness modelling for FDM prints"};
    app.require_subcommand(1);
    add_doe(app);
    add_data(app);
    add_train(app);
    add_hpo(app);
    add_cgan(app);
    add_sweep(app);
    add_explain(app);
    add_mesh(app);
    add_serve(app);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "roughcast: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "roughcast: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
