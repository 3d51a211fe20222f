#pragma once

#include "roughcast/dataset.hpp"
#include "roughcast/doe.hpp"
#include "roughcast/matrix.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace roughcast::testing {

std::filesystem::path data_path(const std::string& name);

// Appendix run matrix of the study (87 rows, parameter columns only).
std::vector<doe::ParameterRow> load_table4();

// Known smooth response used as a stand-in for the measured study: angle
// dominates (non-monotonic), layer height second, the rest small.
double oracle_ra(const std::array<double, data::kFeatureCount>& features);

// 87 design runs x 18 angles (0..170 step 10) = 1566 records with
// Ra = oracle_ra + N(0, noise_sigma).
data::Dataset make_synthetic_study(std::uint64_t seed, double noise_sigma = 1.0);

// Row-wise y = 2x + 1 style toy problems for the training tests.
struct ToyProblem {
    Matrix rows;
    std::vector<double> targets;
};
ToyProblem linear_problem(std::size_t n, std::uint64_t seed);

// Random rows drawn uniformly inside the study factor/angle box.
Matrix random_feature_rows(std::size_t n, std::uint64_t seed);

} // namespace roughcast::testing
