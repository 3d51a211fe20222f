#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace roughcast::doe {

// One process factor with its three ascending levels (low, mid, high).
struct FactorSpec {
    std::string name;
    std::string unit;
    std::array<double, 3> levels{};
};

using CodedRow = std::vector<std::int8_t>;
using ParameterRow = std::vector<double>;

// Three-level Box-Behnken design in coded units {-1, 0, +1}.
//
// Row layout: for every factor pair (i, j) with i < j in lexicographic order,
// four edge rows (-,-), (-,+), (+,-), (+,+) with every other factor at 0,
// followed by `center_replicates` all-zero rows.
struct DesignMatrix {
    std::vector<FactorSpec> factors;
    std::vector<CodedRow> coded_rows;
    std::size_t center_replicates = 0;

    std::size_t factor_count() const { return factors.size(); }
    std::size_t edge_row_count() const { return coded_rows.size() - center_replicates; }
};

// 2k(k-1) + C0
std::size_t bbd_run_count(std::size_t factor_count, std::size_t center_replicates);

void validate_factors(const std::vector<FactorSpec>& factors);

// Throws Errc::invalid_design when the design breaks any structural invariant.
void validate_design(const DesignMatrix& design);

DesignMatrix generate_bbd(const std::vector<FactorSpec>& factors, std::size_t center_replicates);

std::vector<ParameterRow> map_levels(const DesignMatrix& design);

struct RowCount {
    ParameterRow row;
    std::size_t expected = 0; // multiplicity in the mapped design
    std::size_t actual = 0;   // multiplicity in the reference
};

// Multiset comparison of a mapped design against reference rows.
// `missing`: design rows the reference lacks entirely.
// `extra`: reference rows the design never produces.
// `multiplicity`: rows present on both sides with different counts.
struct MatchReport {
    std::vector<RowCount> missing;
    std::vector<RowCount> extra;
    std::vector<RowCount> multiplicity;

    bool empty() const { return missing.empty() && extra.empty() && multiplicity.empty(); }
};

MatchReport verify_against_reference(const DesignMatrix& design, const std::vector<ParameterRow>& reference_rows);

// The seven factors and levels of the FFF roughness study.
std::vector<FactorSpec> study_factors();

// `name,unit,l1,l2,l3` per line; blank lines and `#` comments skipped.
std::vector<FactorSpec> parse_factor_spec(const std::string& text);
std::vector<FactorSpec> load_factor_spec(const std::filesystem::path& path);

// Header: factor names then `run_id`; rows `Object-<n>` numbered from 1.
std::string design_to_csv(const DesignMatrix& design);

} // namespace roughcast::doe
