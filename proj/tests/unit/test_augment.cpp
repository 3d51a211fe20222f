#include "roughcast/augment.hpp"
#include "roughcast/error.hpp"
#include "roughcast/split.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

using namespace roughcast;
using namespace roughcast::aug;

namespace {

// O(n*m) KS oracle: evaluate both ECDFs at every pooled point.
double brute_ks(const std::vector<double>& a, const std::vector<double>& b)
{
    auto ecdf = [](const std::vector<double>& s, double t) {
        return static_cast<double>(std::count_if(s.begin(), s.end(), [t](double v) { return v <= t; })) /
               static_cast<double>(s.size());
    };
    double d = 0.0;
    for (const auto* s : {&a, &b}) {
        for (double t : *s) {
            d = std::max(d, std::abs(ecdf(a, t) - ecdf(b, t)));
        }
    }
    return d;
}

CganConfig tiny_config()
{
    CganConfig c;
    c.generator_widths = {16, 16};
    c.discriminator_widths = {16, 16};
    c.epochs = 2;
    c.batch_size = 32;
    return c;
}

struct TrainSubset {
    Matrix rows;
    std::vector<double> ra;
};

TrainSubset study_train(std::size_t max_rows = 400)
{
    const auto ds = testing::make_synthetic_study(21);
    auto split = data::split_holdout(ds, data::kAugmentationProtocol, 5);
    split.train.resize(std::min(max_rows, split.train.size()));
    return {ds.features(split.train), ds.targets(split.train)};
}

} // namespace

TEST_CASE("KS statistic edge cases and brute-force agreement")
{
    const std::vector<double> a{1, 2, 3};
    CHECK(ks_statistic(a, a) == 0.0);
    CHECK(ks_statistic(std::vector<double>{0, 0, 0}, std::vector<double>{1, 1, 1}) == 1.0);
    CHECK(ks_statistic(std::vector<double>{1, 2}, std::vector<double>{2, 3}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(ks_statistic(a, std::vector<double>{}), Error);

    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(1 + rng.below(40));
        std::vector<double> y(1 + rng.below(40));
        // Coarse grid so ties are common.
        for (double& v : x) v = std::round(rng.normal(0, 2));
        for (double& v : y) v = std::round(rng.normal(0.5, 2));
        CHECK(ks_statistic(x, y) == doctest::Approx(brute_ks(x, y)).epsilon(1e-12));
    }

    std::vector<double> n1(1000), n2(1000);
    for (double& v : n1) v = rng.normal();
    for (double& v : n2) v = rng.normal();
    CHECK(ks_statistic(n1, n2) < 0.1);
}

TEST_CASE("sample_conditions")
{
    const Matrix train{{0.1, 0.9}, {0.5, 0.5}, {0.0, 1.0}};
    SUBCASE("sigma 0 is an exact empirical resample")
    {
        const auto s = sample_conditions(train, 50, 0.0, 3);
        REQUIRE(s.conditions.rows() == 50);
        for (std::size_t i = 0; i < 50; ++i) {
            const auto src = train.row(s.source[i]);
            CHECK(std::equal(src.begin(), src.end(), s.conditions.row(i).begin()));
        }
        CHECK(s.mean_abs_perturbation == 0.0);
    }
    SUBCASE("perturbation magnitude follows the half-normal mean")
    {
        const Matrix centre(20, 8, 0.5);
        const auto s = sample_conditions(centre, 10000, 0.02, 4);
        const double expected = 0.02 * std::sqrt(2.0 / std::numbers::pi);
        CHECK(std::abs(s.mean_abs_perturbation - expected) < 3e-4);
        const auto s2 = sample_conditions(train, 10000, 0.02, 4);
        for (double v : s2.conditions.data()) {
            CHECK((v >= 0.0 && v <= 1.0));
        }
    }
    SUBCASE("count and errors")
    {
        CHECK(sample_conditions(train, 9, 0.02, 1).conditions.rows() == 3 * train.rows());
        CHECK(sample_conditions(train, 0, 0.02, 1).conditions.rows() == 0);
        CHECK_THROWS_AS(sample_conditions(Matrix(0, 2), 5, 0.02, 1), Error);
        CHECK_THROWS_AS(sample_conditions(train, 5, -1.0, 1), Error);
        const auto a = sample_conditions(train, 30, 0.05, 9);
        const auto b = sample_conditions(train, 30, 0.05, 9);
        CHECK(a.conditions == b.conditions);
    }
}

TEST_CASE("generate_synthetic with a stub generator")
{
    // Model whose generator returns the first condition component.
    CganModel m;
    m.noise_dim = 2;
    m.scaler.min = {0.0, 0.0};
    m.scaler.max = {1.0, 1.0};
    m.scaler.target_min = 5.0;
    m.scaler.target_max = 25.0;
    m.feature_order = {"a", "b"};
    nn::DenseLayer head{Matrix{{0.0}, {0.0}, {1.0}, {0.0}}, {0.0}, std::nullopt};
    m.generator = nn::Network({head}, nn::Activation::leaky_relu);

    const Matrix cond{{0.0, 0.3}, {0.25, 0.1}, {1.0, 0.0}};
    const auto recs = generate_synthetic(m, cond, 0.5, 1);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].ra == doctest::Approx(5.0));
    CHECK(recs[1].ra == doctest::Approx(10.0));
    CHECK(recs[2].ra == doctest::Approx(25.0));
    for (const auto& r : recs) {
        CHECK(r.weight == 0.5);
        CHECK_FALSE(r.pre_clip_out_of_range);
        CHECK(r.ra >= 5.0);
        CHECK(r.ra <= 25.0);
    }

    const Matrix outside{{1.4, 0.0}, {-0.2, 0.0}};
    const auto clipped = generate_synthetic(m, outside, 1.0, 1);
    CHECK(clipped[0].pre_clip_out_of_range);
    CHECK(clipped[0].ra == 25.0);
    CHECK(clipped[1].pre_clip_out_of_range);
    CHECK(clipped[1].ra == 5.0);

    CHECK(generate_synthetic(m, Matrix(0, 2), 0.5, 1).empty());
    CHECK_THROWS_AS(generate_synthetic(m, cond, 0.0, 1), Error);
    CHECK_THROWS_AS(generate_synthetic(m, cond, 1.5, 1), Error);
    CHECK_THROWS_AS(generate_synthetic(m, Matrix(1, 3), 0.5, 1), Error);

    std::vector<double> real{5.0, 25.0};
    const auto d = diagnostics(real, clipped, cond, m.feature_order);
    CHECK(d.clip_fraction == 1.0);
    CHECK(diagnostics(real, recs, cond, m.feature_order).clip_fraction == 0.0);
    REQUIRE(d.coverage.size() == 2);
    CHECK(d.coverage[0].real_max == 1.0);
}

TEST_CASE("train_cgan bookkeeping, determinism and persistence")
{
    const auto t = study_train(200);
    auto c = tiny_config();
    c.epochs = 1;
    const auto one = train_cgan(t.rows, t.ra, c);
    CHECK(one.report.updates_per_epoch == (200 + 31) / 32);
    CHECK(one.report.generator_updates == 7);
    CHECK(one.report.discriminator_updates == 7);
    CHECK(one.report.discriminator_loss.size() == 1);
    CHECK(one.model.feature_order == data::feature_order());
    CHECK(one.model.generator.input_dim() == 16 + 8);
    CHECK(one.model.discriminator.input_dim() == 1 + 8);
    CHECK(one.model.scaler == data::fit_scaler(t.rows, t.ra));

    const auto again = train_cgan(t.rows, t.ra, c);
    for (std::size_t l = 0; l < one.model.generator.layers().size(); ++l) {
        CHECK(one.model.generator.layers()[l].weight == again.model.generator.layers()[l].weight);
    }

    c.batch_size = 128;
    CHECK_THROWS_AS(train_cgan(t.rows, t.ra, c), Error);

    const auto path = std::filesystem::temp_directory_path() / "roughcast_cgan_roundtrip.json";
    save_cgan(one.model, path);
    const auto loaded = load_cgan(path);
    std::filesystem::remove(path);
    const auto conds = sample_conditions(one.model.train_conditions, 40, 0.02, 2).conditions;
    const auto a = generate_synthetic(one.model, conds, 0.5, 11);
    const auto b = generate_synthetic(loaded, conds, 0.5, 11);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].ra == b[i].ra);
    }
    CHECK(loaded.train_conditions == one.model.train_conditions);

    auto j = to_json(one.model);
    j["generator"]["role"] = "discriminator";
    CHECK_THROWS_AS(cgan_from_json(j), Error);
}

TEST_CASE("synthetic records stay inside the real training ranges")
{
    const auto t = study_train(200);
    const auto trained = train_cgan(t.rows, t.ra, tiny_config());
    const auto conds = sample_conditions(trained.model.train_conditions, 300, 0.02, 6);
    const auto recs = generate_synthetic(trained.model, conds.conditions, 0.5, 7);
    const double lo = *std::min_element(t.ra.begin(), t.ra.end());
    const double hi = *std::max_element(t.ra.begin(), t.ra.end());
    for (const auto& r : recs) {
        CHECK(r.ra >= lo - 1e-9);
        CHECK(r.ra <= hi + 1e-9);
    }
    // Raw synthetic rows fall inside the fitted box, so a scaler refitted on the
    // augmented set equals the real-only fit.
    Matrix augmented = t.rows;
    augmented.append_rows(synthetic_feature_rows(trained.model, recs));
    const auto refit = data::fit_scaler(augmented);
    const auto real_fit = data::fit_scaler(t.rows);
    for (std::size_t f = 0; f < 8; ++f) {
        CHECK(refit.min[f] == doctest::Approx(real_fit.min[f]).epsilon(1e-12));
        CHECK(refit.max[f] == doctest::Approx(real_fit.max[f]).epsilon(1e-12));
    }

    const auto diag = diagnostics(t.ra, recs, trained.model.train_conditions, trained.model.feature_order);
    CHECK(diag.ks >= 0.0);
    CHECK(diag.ks <= 1.0);
    CHECK(diag.clip_fraction >= 0.0);
    CHECK(diag.clip_fraction <= 1.0);
    CHECK(diag.histogram.edges.size() == 21);
    std::size_t total = 0;
    for (auto v : diag.histogram.synthetic) total += v;
    CHECK(total == recs.size());
    CHECK(to_json(diag).contains("coverage"));
}

TEST_CASE("CGAN config validation")
{
    CganConfig c;
    c.noise_dim = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.synthetic_weight = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK(cgan_config_from_json({{"epochs", 7}}).epochs == 7);
    CHECK_THROWS_AS(cgan_config_from_json({{"epochs", "many"}}), Error);
}
