// End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per criterion
// and exits non-zero when any criterion fails.
//
// Dataset-dependent criteria read the measured study CSV from
// $ROUGHCAST_STUDY_CSV (or the default path baked in at build time). Without
// it they run on the synthetic oracle study instead, or are skipped where the
// check only makes sense on the measured data.

#include "live_server.hpp"
#include "mesh_fixtures.hpp"
#include "support.hpp"

#include "roughcast/doe.hpp"
#include "roughcast/error.hpp"
#include "roughcast/explain.hpp"
#include "roughcast/mesh.hpp"
#include "roughcast/nn/serialize.hpp"
#include "roughcast/pipeline.hpp"
#include "roughcast/server.hpp"
#include "roughcast/stats.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

using namespace roughcast;
using nlohmann::json;
namespace rt = roughcast::testing;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
    Status status = Status::pass;
    std::vector<std::string> notes;
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what)
    {
        if (!ok) {
            failures.push_back(what);
            status = Status::fail;
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(double v, int precision = 4)
{
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

int failures = 0;

void run(const std::string& name, const std::function<void(Outcome&)>& body)
{
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(out);
    } catch (const std::exception& e) {
        out.expect(false, std::string("unexpected exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = out.status == Status::pass ? "PASS" : out.status == Status::fail ? "FAIL" : "SKIP";
    std::cout << tag << "  " << name << "  [" << fmt(secs, 3) << " s]\n";
    for (const auto& n : out.notes) {
        std::cout << "      " << n << "\n";
    }
    for (const auto& f : out.failures) {
        std::cout << "      failed: " << f << "\n";
    }
    std::cout.flush();
    if (out.status == Status::fail) {
        ++failures;
    }
}

bool throws_code(Errc code, const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

std::optional<std::filesystem::path> study_csv()
{
    if (const char* env = std::getenv("ROUGHCAST_STUDY_CSV"); env && *env) {
        return std::filesystem::path(env);
    }
#ifdef ROUGHCAST_DEFAULT_STUDY_CSV
    if (std::filesystem::exists(ROUGHCAST_DEFAULT_STUDY_CSV)) {
        return std::filesystem::path(ROUGHCAST_DEFAULT_STUDY_CSV);
    }
#endif
    return std::nullopt;
}

// Fixed, data-independent configuration for the augmentation sweep so that
// no hyperparameter is chosen on rows that later serve as the sweep's test set.
nn::MlpConfig sweep_config()
{
    nn::MlpConfig c;
    c.hidden_widths = {64, 64};
    c.learning_rate = 3e-3;
    c.batch_size = 64;
    c.max_epochs = 200;
    c.early_stop_patience = 30;
    c.plateau_patience = 10;
    return c;
}

struct Shared {
    std::optional<data::Dataset> real;
    data::Dataset synthetic;
    std::optional<nn::MlpModel> baseline_model;
    data::SplitIndices baseline_split;
    const data::Dataset* baseline_data = nullptr;
};

// ---------------------------------------------------------------------------

void bbd_reconstruction(Outcome& out)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto design = doe::generate_bbd(doe::study_factors(), 3);
    const auto report = doe::verify_against_reference(design, rt::load_table4());
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out.expect(design.coded_rows.size() == 87, "row count " + std::to_string(design.coded_rows.size()) + " != 87");
    out.expect(report.empty(), "level-mapped multiset differs from the appendix run table");
    out.expect(ms < 1000.0, "runtime " + fmt(ms) + " ms >= 1 s");
    out.note("87 rows, exact multiset match, " + fmt(ms, 3) + " ms");
}

void eq1_property(Outcome& out)
{
    std::size_t cases = 0;
    for (std::size_t k = 3; k <= 8; ++k) {
        std::vector<doe::FactorSpec> f;
        for (std::size_t i = 0; i < k; ++i) {
            f.push_back({"x" + std::to_string(i), "", {1.0, 2.0, 3.0}});
        }
        for (std::size_t c0 = 0; c0 <= 5; ++c0) {
            const auto d = doe::generate_bbd(f, c0);
            const std::size_t expected = 2 * k * (k - 1) + c0;
            out.expect(d.coded_rows.size() == expected, "k=" + std::to_string(k) + " C0=" + std::to_string(c0) +
                                                      ": " + std::to_string(d.coded_rows.size()) + " rows");
            std::size_t centers = 0;
            for (const auto& row : d.coded_rows) {
                std::size_t nonzero = 0;
                for (auto v : row) {
                    nonzero += v != 0 ? 1 : 0;
                }
                if (nonzero == 0) {
                    ++centers;
                } else {
                    out.expect(nonzero == 2, "non-center row with " + std::to_string(nonzero) + " active factors");
                }
            }
            out.expect(centers == c0, "center count mismatch");
            ++cases;
        }
    }
    out.note(std::to_string(cases) + " (k, C0) combinations brute-forced");
}

void dataset_statistics(Outcome& out, const Shared& s)
{
    if (!s.real) {
        out.status = Status::skip;
        out.note("measured study CSV not found; set ROUGHCAST_STUDY_CSV to run this check");
        return;
    }
    const auto ra = s.real->targets();
    const auto st = data::descriptive_stats(ra);
    auto within = [&](const char* name, double got, double want, double tol) {
        out.expect(std::abs(got - want) <= tol,
                   std::string(name) + " " + fmt(got, 6) + " vs " + fmt(want, 6) + " +/- " + fmt(tol));
    };
    out.expect(st.count == 1566, "n = " + std::to_string(st.count));
    within("mean", st.mean, 20.62, 0.01);
    within("std", st.std, 8.25, 0.01);
    within("min", st.min, 2.69, 0.005);
    within("median", st.median, 20.11, 0.01);
    within("max", st.max, 46.34, 0.005);
    within("skewness", st.skewness, 0.31, 0.02);
    out.note("n=" + std::to_string(st.count) + " mean=" + fmt(st.mean) + " std=" + fmt(st.std) + " min=" +
             fmt(st.min) + " median=" + fmt(st.median) + " max=" + fmt(st.max) + " skew=" + fmt(st.skewness, 3));
}

void baseline_quality(Outcome& out, Shared& s)
{
    const bool real = s.real.has_value();
    const data::Dataset& ds = real ? *s.real : s.synthetic;
    const auto split = data::split_holdout(ds, data::kHoldoutProtocol, 42);
    pipe::SearchSpace space;
    pipe::HpoOptions opt;
    opt.seed = 42;
    if (real) {
        opt.n_trials = 25;
        opt.folds = 5;
    } else {
        // Reduced budget for the synthetic fallback.
        opt.n_trials = 8;
        opt.folds = 3;
        opt.prune_warmup = 3;
        space.max_layers = 3;
        space.widths = {32, 64, 128};
        space.batch_sizes = {32, 64};
        space.lr_min = 1e-3;
        space.base.max_epochs = 200;
        space.base.early_stop_patience = 30;
        space.base.plateau_patience = 10;
    }
    pipe::LeakageAudit audit;
    audit.protect(split.test);
    const auto pool = split.pool();
    const auto t0 = std::chrono::steady_clock::now();
    const auto study = pipe::hpo_search(ds, pool, space, opt, &audit);
    const auto final = pipe::finalize_and_test(ds, pool, split.test, study.best_config, study.best_epochs, &audit);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& m = final.test_metrics;
    const double r2 = m.r2.value_or(-1.0);

    std::size_t pruned = 0;
    for (const auto& t : study.trials) {
        pruned += t.status == pipe::TrialStatus::pruned ? 1 : 0;
    }
    out.note(std::string(real ? "measured study" : "synthetic oracle (noise sd 1 um)") + ": " +
             std::to_string(opt.n_trials) + " trials (" + std::to_string(pruned) + " pruned), " +
             std::to_string(opt.folds) + "-fold CV, best CV MAE " + fmt(study.best_objective) + " um");
    out.note("hold-out MAE " + fmt(m.mae) + " um, R2 " + fmt(r2) + ", runtime " + fmt(secs, 3) + " s");
    if (real) {
        out.note("reference: MAE 2.200 um, R2 0.844");
        out.expect(m.mae <= 2.8, "hold-out MAE " + fmt(m.mae) + " > 2.8 um");
        out.expect(r2 >= 0.80, "hold-out R2 " + fmt(r2) + " < 0.80");
        out.expect(secs <= 900.0, "runtime " + fmt(secs) + " s > 15 min");
    } else {
        out.expect(r2 >= 0.90, "hold-out R2 " + fmt(r2) + " < 0.90");
    }
    s.baseline_model = final.model;
    s.baseline_split = split;
    s.baseline_data = &ds;
}

struct AugmentationRun {
    std::optional<pipe::SweepResult> sweep;
    std::optional<aug::AugmentationDiagnostics> fidelity;
    std::string error;
    bool real = false;
};

AugmentationRun run_augmentation(const Shared& s)
{
    AugmentationRun run;
    run.real = s.real.has_value();
    const data::Dataset& ds = run.real ? *s.real : s.synthetic;
    try {
        const auto split = data::split_holdout(ds, data::kAugmentationProtocol, 42);
        pipe::LeakageAudit audit;
        audit.protect(split.test);
        const auto cgan = pipe::train_cgan_on(ds, split.train, aug::CganConfig{}, &audit);

        // Marginal fidelity: one synthetic row per real training row.
        const Matrix normalized = data::apply_scaler(cgan.model.scaler, ds.features(split.train));
        const auto conds = aug::sample_conditions(normalized, split.train.size(), 0.02, 1001);
        const auto synth = aug::generate_synthetic(cgan.model, conds.conditions, 0.5, 1002);
        run.fidelity = aug::diagnostics(ds.targets(split.train), synth, normalized, cgan.model.feature_order);

        pipe::SweepOptions opt;
        opt.config = sweep_config();
        opt.seed = 42;
        run.sweep = pipe::ratio_sweep(ds, split, cgan.model, {0, 1, 2, 3, 4, 5}, opt, &audit);
    } catch (const std::exception& e) {
        run.error = e.what();
    }
    return run;
}

void augmentation_effect(Outcome& out, const AugmentationRun& run)
{
    if (!run.sweep) {
        out.expect(false, "sweep did not complete: " + run.error);
        return;
    }
    const auto& sw = *run.sweep;
    const auto& sel = sw.selected();
    const auto& base = sw.baseline();
    for (const auto& e : sw.entries) {
        out.note("ratio " + fmt(e.ratio) + ": val MAE " + fmt(e.val_mae) +
                 (e.test_metrics ? ", test MAE " + fmt(e.test_metrics->mae) : std::string()));
    }
    const double sel_test = sel.test_metrics.value().mae;
    const double base_test = base.test_metrics.value().mae;
    out.note(std::string(run.real ? "measured study" : "synthetic oracle") + ": selected ratio " +
             fmt(sw.selected_ratio) + ", hold-out MAE " + fmt(sel_test) + " vs ratio-0 " + fmt(base_test) +
             " (reference: 2.200 -> 1.752 um)");
    out.expect(sel_test <= base_test + 0.05,
               "selected hold-out MAE " + fmt(sel_test) + " > ratio-0 " + fmt(base_test) + " + 0.05");
    out.expect(sel.val_mae <= base.val_mae, "selected ratio has higher val MAE than ratio 0");
}

void cgan_fidelity(Outcome& out, const AugmentationRun& run)
{
    if (!run.fidelity) {
        out.expect(false, "CGAN run did not complete: " + run.error);
        return;
    }
    const auto& d = *run.fidelity;
    out.note(std::string(run.real ? "measured study" : "synthetic oracle") + ": KS " + fmt(d.ks) +
             ", clip fraction " + fmt(100.0 * d.clip_fraction, 3) + " %, mean delta " + fmt(d.mean_delta) +
             " um, std delta " + fmt(d.std_delta) + " um");
    out.expect(d.ks < 0.15, "KS " + fmt(d.ks) + " >= 0.15");
    out.expect(d.clip_fraction < 0.05, "clip fraction " + fmt(d.clip_fraction) + " >= 5%");
}

void gradient_correctness(Outcome& out)
{
    Rng rng(2024);
    const nn::Activation acts[] = {nn::Activation::relu, nn::Activation::tanh, nn::Activation::elu,
                                   nn::Activation::leaky_relu};
    double worst = 0.0;
    std::size_t params = 0;
    for (int a = 0; a < 20; ++a) {
        nn::NetworkShape shape;
        shape.input_dim = 1 + rng.below(8);
        shape.hidden_widths.resize(1 + rng.below(4));
        for (auto& w : shape.hidden_widths) {
            w = 2 + rng.below(15);
        }
        shape.activation = acts[rng.below(4)];
        shape.batch_norm = rng.below(2) == 1;
        nn::Network net = nn::Network::create(shape, rng);
        for (auto& layer : net.layers()) {
            for (double& b : layer.bias) {
                b = rng.uniform(-0.1, 0.1);
            }
            if (layer.bn) {
                for (std::size_t j = 0; j < layer.fan_out(); ++j) {
                    layer.bn->gamma[j] = rng.uniform(0.5, 1.5);
                    layer.bn->beta[j] = rng.uniform(-0.3, 0.3);
                    layer.bn->running_mean[j] = rng.uniform(-0.2, 0.2);
                    layer.bn->running_var[j] = rng.uniform(0.5, 2.0);
                }
            }
        }
        const std::size_t n = 4 + rng.below(8);
        Matrix batch(n, shape.input_dim);
        for (double& v : batch.data()) {
            v = rng.uniform(0.0, 1.0);
        }
        std::vector<double> y(n);
        for (double& v : y) {
            v = rng.uniform(-1.0, 1.0);
        }
        for (auto mode : {nn::Mode::eval, nn::Mode::train}) {
            nn::GradientCheckOptions opt;
            opt.epsilon = 1e-5;
            opt.mode = mode;
            const auto r = nn::gradient_check(net, batch, y, opt);
            worst = std::max(worst, r.max_relative_error);
            params += r.checked;
        }
    }
    out.note("20 architectures, eval and train mode, " + std::to_string(params) +
             " parameters checked, max relative error " + fmt(worst, 3));
    out.expect(worst < 1e-4, "max relative error " + fmt(worst, 3) + " >= 1e-4");
}

void leakage_audit(Outcome& out, const Shared& s)
{
    const auto& ds = s.synthetic;
    const auto split = data::split_holdout(ds, data::kAugmentationProtocol, 5);
    const auto pool = split.pool();

    pipe::SearchSpace space;
    space.widths = {16};
    space.max_layers = 1;
    space.base.max_epochs = 5;
    pipe::HpoOptions hopt;
    hopt.n_trials = 2;
    hopt.folds = 2;
    aug::CganConfig ccfg;
    ccfg.epochs = 2;
    pipe::SweepOptions sopt;
    sopt.config.hidden_widths = {16};
    sopt.config.max_epochs = 5;

    // Clean protocol: every stage reports its indices; none may touch test.
    pipe::LeakageAudit audit;
    audit.protect(split.test);
    const auto study = pipe::hpo_search(ds, pool, space, hopt, &audit);
    pipe::finalize_and_test(ds, pool, split.test, study.best_config, 5, &audit);
    const auto cgan = pipe::train_cgan_on(ds, split.train, ccfg, &audit);
    pipe::ratio_sweep(ds, split, cgan.model, {0, 1}, sopt, &audit);
    for (auto stage : {pipe::Stage::scaler_fit, pipe::Stage::model_fit, pipe::Stage::cgan_fit,
                       pipe::Stage::hpo_objective, pipe::Stage::sweep_selection, pipe::Stage::test_evaluation}) {
        out.expect(audit.count(stage) > 0, std::string("stage never audited: ") + std::string(to_string(stage)));
    }
    out.note("clean protocol: " + std::to_string(audit.entries().size()) + " audited stage records, no test index");

    // Poisoned paths: each must be rejected.
    const std::size_t leaked = split.test.front();
    auto poisoned_pool = pool;
    poisoned_pool.push_back(leaked);
    auto poisoned_train = split.train;
    poisoned_train.push_back(leaked);
    auto poisoned_split = split;
    poisoned_split.val.push_back(leaked);

    auto fresh = [&] { return pipe::LeakageAudit(split.test); };
    int rejected = 0;
    auto must_reject = [&](const std::string& what, const std::function<void()>& fn) {
        const bool ok = throws_code(Errc::leakage, fn);
        out.expect(ok, "poisoned path not rejected: " + what);
        rejected += ok ? 1 : 0;
    };
    must_reject("scaler fit on a test row", [&] {
        auto a = fresh();
        a.record(pipe::Stage::scaler_fit, poisoned_train, "poison");
    });
    must_reject("HPO objective over a pool containing a test row", [&] {
        auto a = fresh();
        pipe::hpo_search(ds, poisoned_pool, space, hopt, &a);
    });
    must_reject("CGAN fit on a test row", [&] {
        auto a = fresh();
        pipe::train_cgan_on(ds, poisoned_train, ccfg, &a);
    });
    must_reject("sweep selection on a test row", [&] {
        auto a = fresh();
        pipe::ratio_sweep(ds, poisoned_split, cgan.model, {0, 1}, sopt, &a);
    });
    must_reject("final fit on a test row", [&] {
        auto a = fresh();
        pipe::finalize_and_test(ds, poisoned_pool, split.test, study.best_config, 5, &a);
    });
    out.note(std::to_string(rejected) + "/5 poisoned paths rejected with a leakage error");
}

void scaler_round_trip(Outcome& out, const Shared& s)
{
    const Matrix rows = rt::random_feature_rows(10000, 77);
    const auto sc = data::fit_scaler(rows);
    const Matrix back = data::invert_scaler(sc, data::apply_scaler(sc, rows));
    double worst = 0.0;
    for (std::size_t i = 0; i < rows.data().size(); ++i) {
        worst = std::max(worst, std::abs(back.data()[i] - rows.data()[i]));
    }
    out.expect(worst < 1e-12, "round-trip error " + fmt(worst, 3));

    nn::MlpConfig c;
    c.hidden_widths = {8};
    c.max_epochs = 2;
    const auto split = data::split_holdout(s.synthetic, data::kHoldoutProtocol, 3);
    const auto cv = pipe::run_cv(s.synthetic, split.pool(), c, 5, 42);
    std::size_t equal = 0;
    for (const auto& f : cv.folds) {
        const bool same = f.scaler == data::fit_scaler(s.synthetic.features(f.train), s.synthetic.targets(f.train));
        out.expect(same, "fold scaler differs from the train-only refit");
        equal += same ? 1 : 0;
    }
    out.note("10^4 rows, max |invert(apply(x)) - x| = " + fmt(worst, 3) + "; " + std::to_string(equal) +
             "/5 fold scalers equal a train-only recomputation");
}

void shapley_exactness(Outcome& out, const Shared& s)
{
    if (!s.baseline_model) {
        out.expect(false, "no baseline model available");
        return;
    }
    const auto& model = *s.baseline_model;
    const auto& ds = *s.baseline_data;
    const auto& split = s.baseline_split;
    const Matrix bg = xai::select_background(ds.features(split.pool()), 50, 42);
    std::vector<std::size_t> eval(split.test.begin(), split.test.begin() + std::min<std::size_t>(100, split.test.size()));
    const Matrix rows = ds.features(eval);
    const auto direct = model.predict(rows);

    double worst_eff = 0.0;
    xai::GlobalImportance g = xai::global_importance(model, rows, bg);
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        double sum = g.base_value;
        for (std::size_t j = 0; j < rows.cols(); ++j) {
            sum += g.phi(r, j);
        }
        worst_eff = std::max(worst_eff, std::abs(sum - direct[r]));
    }
    out.expect(worst_eff < 1e-6, "efficiency gap " + fmt(worst_eff, 3));

    // Linear model: phi_j = w_j (x_j - mean_b x_j).
    Rng rng(31);
    Matrix w(data::kFeatureCount, 1);
    for (double& v : w.data()) {
        v = rng.uniform(-2.0, 2.0);
    }
    const nn::Network linear({nn::DenseLayer{w, {0.7}, std::nullopt}}, nn::Activation::relu);
    const auto lin = nn::wrap_network(linear, data::ScalerParams::identity(data::kFeatureCount), data::feature_order());
    std::vector<double> bg_mean(data::kFeatureCount, 0.0);
    for (std::size_t b = 0; b < bg.rows(); ++b) {
        for (std::size_t j = 0; j < bg.cols(); ++j) {
            bg_mean[j] += bg(b, j) / static_cast<double>(bg.rows());
        }
    }
    double worst_lin = 0.0;
    for (std::size_t r = 0; r < 20; ++r) {
        const auto e = xai::shap_exact(lin, rows.row(r), bg);
        for (std::size_t j = 0; j < data::kFeatureCount; ++j) {
            worst_lin = std::max(worst_lin, std::abs(e.phi[j] - w(j, 0) * (rows(r, j) - bg_mean[j])));
        }
    }
    out.expect(worst_lin < 1e-8, "linear closed-form gap " + fmt(worst_lin, 3));

    // Dead feature: zero every outgoing weight of infill_density.
    auto dead = model;
    const std::size_t dead_j = 3;
    auto& first = dead.network.layers().front();
    for (std::size_t c = 0; c < first.fan_out(); ++c) {
        first.weight(dead_j, c) = 0.0;
    }
    bool exact_zero = true;
    for (std::size_t r = 0; r < 10; ++r) {
        exact_zero = exact_zero && xai::shap_exact(dead, rows.row(r), bg).phi[dead_j] == 0.0;
    }
    out.expect(exact_zero, "dead feature received non-zero attribution");

    out.note(std::to_string(rows.rows()) + " hold-out instances, background " + std::to_string(bg.rows()) +
             ": max efficiency gap " + fmt(worst_eff, 3) + "; linear closed-form gap " + fmt(worst_lin, 3) +
             "; dead-feature phi exactly 0");
    std::string ranking;
    for (std::size_t k = 0; k < g.ranking.size(); ++k) {
        ranking += (k ? ", " : "") + g.features[g.ranking[k]] + " " + fmt(g.mean_abs_phi[g.ranking[k]], 3);
    }
    out.note("global ranking: " + ranking);
    const bool expected_order =
        g.features[g.ranking[0]] == "surface_angle" && g.features[g.ranking[1]] == "layer_height";
    if (s.real) {
        out.note(expected_order ? "ranking check: pass (surface_angle 1st, layer_height 2nd)"
                                : "ranking check: WARN (expected surface_angle 1st, layer_height 2nd)");
    } else {
        out.note("ranking check: not applicable to the synthetic oracle (informational only)");
    }
}

void geometry(Outcome& out)
{
    const auto cube = rt::unit_cube();
    double worst_cube = 0.0;
    for (const auto& d : mesh::facet_descriptors(cube)) {
        double best = 180.0;
        for (double a : {0.0, 90.0, 180.0}) {
            best = std::min(best, std::abs(d.inclination - a));
        }
        worst_cube = std::max(worst_cube, best);
    }
    out.expect(worst_cube < 1e-9, "cube inclination off the {0, 90, 180} grid by " + fmt(worst_cube, 3));

    const auto sphere = rt::jittered_sphere(24, 36, 17);
    const auto base = mesh::facet_descriptors(sphere);
    const double area = mesh::surface_area(sphere);
    Rng rng(404);
    double worst_rot = 0.0;
    double worst_area = 0.0;
    for (int i = 0; i < 50; ++i) {
        const auto o = rt::random_orientation(rng);
        const auto rotated = mesh::apply_orientation(sphere, o);
        const auto desc = mesh::facet_descriptors(rotated, mesh::rotate(mesh::rotation_matrix(o), mesh::kBuildDirection));
        for (std::size_t f = 0; f < base.size(); ++f) {
            worst_rot = std::max(worst_rot, std::abs(desc[f].inclination - base[f].inclination));
        }
        worst_area = std::max(worst_area, std::abs(mesh::surface_area(rotated) - area) / area);
    }
    out.expect(worst_rot < 1e-9, "co-rotation deviation " + fmt(worst_rot, 3) + " deg");
    out.expect(worst_area < 1e-9, "relative area change " + fmt(worst_area, 3));

    const auto loaded = mesh::parse_mesh(mesh::write_stl_binary(sphere), mesh::MeshFormat::stl_binary);
    const auto again = mesh::parse_mesh(mesh::write_stl_binary(loaded), mesh::MeshFormat::stl_binary);
    const bool bit_exact =
        again.vertices.size() == loaded.vertices.size() &&
        std::memcmp(again.vertices.data(), loaded.vertices.data(), loaded.vertices.size() * sizeof(mesh::Vec3)) == 0;
    out.expect(bit_exact, "binary STL round trip changed vertex bits");
    out.note("cube grid error " + fmt(worst_cube, 3) + " deg; " + std::to_string(base.size()) +
             "-facet mesh x 50 orientations: co-rotation " + fmt(worst_rot, 3) + " deg, area " +
             fmt(worst_area, 3) + " relative; STL round trip bit-exact");
}

void service_equivalence(Outcome& out, const Shared& s)
{
    if (!s.baseline_model) {
        out.expect(false, "no baseline model available");
        return;
    }
    const auto& model = *s.baseline_model;
    rt::LiveServer live(model);
    auto cli = live.client();

    std::vector<std::string> ids;
    std::vector<mesh::TriangleMesh> local;
    std::vector<mesh::TriangleMesh> meshes{rt::unit_cube()};
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        meshes.push_back(rt::jittered_sphere(6 + 3 * seed, 8 + 4 * seed, seed));
    }
    for (const auto& m : meshes) {
        const auto bytes = mesh::write_stl_binary(m);
        auto res = cli.Post("/api/mesh", {{"X-Mesh-Format", "stl"}}, bytes, "application/octet-stream");
        if (!res || res->status != 200) {
            out.expect(false, "mesh upload failed");
            return;
        }
        ids.push_back(json::parse(res->body)["id"].get<std::string>());
        local.push_back(mesh::parse_mesh(bytes));
    }

    Rng rng(50);
    double worst = 0.0;
    std::vector<std::string> bodies;
    for (int t = 0; t < 64; ++t) {
        const std::size_t k = rng.below(meshes.size());
        const auto p = rt::random_params(rng);
        const auto o = rt::random_orientation(rng);
        json req = {{"mesh_id", ids[k]}, {"params", mesh::to_json(p)}, {"orientation", mesh::to_json(o)}};
        bodies.push_back(req.dump());
        if (t >= 50) {
            continue;
        }
        auto res = cli.Post("/api/predict", bodies.back(), "application/json");
        if (!res || res->status != 200) {
            out.expect(false, "predict request failed");
            return;
        }
        const auto facets = json::parse(res->body)["facets"];
        const auto ref = mesh::predict_field(model, local[k], o, p);
        out.expect(facets.size() == ref.facets.size(), "facet count mismatch");
        for (std::size_t f = 0; f < ref.facets.size() && f < facets.size(); ++f) {
            if (ref.facets[f].ra) {
                worst = std::max(worst, std::abs(facets[f]["ra_um"].get<double>() - *ref.facets[f].ra));
            }
        }
    }
    out.expect(worst < 1e-12, "HTTP vs library per-facet gap " + fmt(worst, 3) + " um");

    std::vector<std::string> serial;
    for (const auto& b : bodies) {
        auto res = cli.Post("/api/predict", b, "application/json");
        serial.push_back(res ? res->body : std::string());
    }
    std::vector<std::string> parallel(bodies.size());
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        threads.emplace_back([&, i] {
            auto c = live.client();
            if (auto res = c.Post("/api/predict", bodies[i], "application/json")) {
                parallel[i] = res->body;
            } else {
                parallel[i] = "transport error: " + httplib::to_string(res.error());
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    std::size_t identical = 0;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        identical += !serial[i].empty() && parallel[i] == serial[i] ? 1 : 0;
    }
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        if (parallel[i] != serial[i]) {
            out.note("request " + std::to_string(i) + " differs: " + parallel[i].substr(0, 80));
        }
    }
    out.expect(identical == bodies.size(),
               std::to_string(bodies.size() - identical) + " concurrent responses differ from serial");
    out.note("50 (mesh, params, orientation) tuples: max |HTTP - library| " + fmt(worst, 3) + " um; " +
             std::to_string(identical) + "/64 concurrent responses identical to serial");
}

} // namespace

int main()
{
    Shared s;
    s.synthetic = rt::make_synthetic_study(42, 1.0);
    if (const auto path = study_csv()) {
        try {
            s.real = data::load_dataset(*path);
            std::cout << "measured study: " << path->string() << " (" << s.real->size() << " records)\n";
        } catch (const std::exception& e) {
            std::cout << "measured study unreadable (" << e.what() << "); using the synthetic oracle\n";
        }
    } else {
        std::cout << "measured study CSV not found; dataset-dependent checks use the synthetic oracle\n";
    }

    run("BBD reconstruction", bbd_reconstruction);
    run("Run-count formula property", eq1_property);
    run("Dataset statistics", [&](Outcome& o) { dataset_statistics(o, s); });
    run("Baseline model quality", [&](Outcome& o) { baseline_quality(o, s); });
    const auto aug_run = run_augmentation(s);
    run("Augmentation effect", [&](Outcome& o) { augmentation_effect(o, aug_run); });
    run("CGAN marginal fidelity", [&](Outcome& o) { cgan_fidelity(o, aug_run); });
    run("Gradient correctness", gradient_correctness);
    run("Leakage audit", [&](Outcome& o) { leakage_audit(o, s); });
    run("Scaler round-trip", [&](Outcome& o) { scaler_round_trip(o, s); });
    run("Shapley exactness", [&](Outcome& o) { shapley_exactness(o, s); });
    run("Geometry", geometry);
    run("Service equivalence", [&](Outcome& o) { service_equivalence(o, s); });

    std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
              << "\n";
    return failures == 0 ? 0 : 1;
}
