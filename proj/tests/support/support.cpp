#include "support.hpp"

#include "roughcast/error.hpp"
#include "roughcast/rng.hpp"
#include "roughcast/text.hpp"

#include <cmath>
#include <numbers>

#ifndef ROUGHCAST_TEST_DATA_DIR
#error "ROUGHCAST_TEST_DATA_DIR must be defined"
#endif

namespace roughcast::testing {

std::filesystem::path data_path(const std::string& name)
{
    return std::filesystem::path(ROUGHCAST_TEST_DATA_DIR) / name;
}

std::vector<doe::ParameterRow> load_table4()
{
    const auto lines = text::split_lines(text::read_file(data_path("table4_runs.csv")));
    std::vector<doe::ParameterRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = text::split(lines[i], ',');
        doe::ParameterRow row;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            row.push_back(*text::parse_double(cells[c]));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

double oracle_ra(const std::array<double, data::kFeatureCount>& f)
{
    const double lh = f[0];
    const double theta = f[7];
    const double angle_term = 8.0 * std::sin(std::numbers::pi * theta / 120.0) +
                              5.0 * std::cos(std::numbers::pi * theta / 60.0) * (lh / 0.2);
    return 12.0 + 70.0 * lh + angle_term + 0.08 * (f[1] - 200.0) + 0.01 * (f[2] - 200.0) + 0.05 * (f[3] - 15.0) -
           10.0 * (f[4] - 0.42) + 0.05 * (f[5] - 60.0) - 0.02 * (f[6] - 80.0);
}

data::Dataset make_synthetic_study(std::uint64_t seed, double noise_sigma)
{
    const auto design = doe::generate_bbd(doe::study_factors(), 3);
    const auto runs = doe::map_levels(design);
    Rng rng(seed);
    data::Dataset ds;
    ds.source = "synthetic-oracle";
    for (std::size_t r = 0; r < runs.size(); ++r) {
        for (int a = 0; a <= 170; a += 10) {
            data::MeasurementRecord rec;
            rec.object_id = "Object-" + std::to_string(r + 1);
            rec.params = data::ProcessParameters::from_array(runs[r]);
            rec.surface_angle = a;
            rec.ra = oracle_ra(rec.features()) + rng.normal(0.0, noise_sigma);
            ds.records.push_back(std::move(rec));
        }
    }
    return ds;
}

ToyProblem linear_problem(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    ToyProblem p{Matrix(n, 1), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(-1.0, 1.0);
        p.rows(i, 0) = x;
        p.targets[i] = 2.0 * x + 1.0;
    }
    return p;
}

Matrix random_feature_rows(std::size_t n, std::uint64_t seed)
{
    const auto factors = doe::study_factors();
    Rng rng(seed);
    Matrix rows(n, data::kFeatureCount);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < factors.size(); ++f) {
            rows(i, f) = rng.uniform(factors[f].levels[0], factors[f].levels[2]);
        }
        rows(i, 7) = rng.uniform(0.0, 170.0);
    }
    return rows;
}

} // namespace roughcast::testing
