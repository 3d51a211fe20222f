#include "roughcast/doe.hpp"

#include "roughcast/error.hpp"
#include "roughcast/text.hpp"

#include <map>
#include <set>
#include <sstream>

namespace roughcast::doe {

std::size_t bbd_run_count(std::size_t factor_count, std::size_t center_replicates)
{
    return 2 * factor_count * (factor_count - 1) + center_replicates;
}

void validate_factors(const std::vector<FactorSpec>& factors)
{
    std::set<std::string> names;
    for (const auto& f : factors) {
        if (f.name.empty()) {
            fail(Errc::schema, "factor with empty name");
        }
        if (!names.insert(f.name).second) {
            fail(Errc::schema, "duplicate factor name '" + f.name + "'");
        }
        const auto& l = f.levels;
        if (!(l[0] < l[1] && l[1] < l[2])) {
            fail(Errc::schema, "levels of factor '" + f.name + "' are not strictly ascending");
        }
    }
}

void validate_design(const DesignMatrix& design)
{
    const std::size_t k = design.factor_count();
    if (k < 3) {
        fail(Errc::invalid_design, "Box-Behnken needs at least 3 factors, got " + std::to_string(k));
    }
    if (design.coded_rows.size() != bbd_run_count(k, design.center_replicates)) {
        fail(Errc::invalid_design, "row count " + std::to_string(design.coded_rows.size()) + " != 2k(k-1)+C0 = " +
                                       std::to_string(bbd_run_count(k, design.center_replicates)));
    }
    // pair_signs[(i, j)] collects the sign patterns realized on that pair.
    std::map<std::pair<std::size_t, std::size_t>, std::set<std::pair<int, int>>> pair_signs;
    std::set<CodedRow> seen;
    std::size_t centers = 0;
    for (const auto& row : design.coded_rows) {
        if (row.size() != k) {
            fail(Errc::invalid_design, "coded row width mismatch");
        }
        std::vector<std::size_t> active;
        for (std::size_t c = 0; c < k; ++c) {
            if (row[c] < -1 || row[c] > 1) {
                fail(Errc::invalid_design, "coded value outside {-1, 0, +1}");
            }
            if (row[c] != 0) {
                active.push_back(c);
            }
        }
        if (active.empty()) {
            ++centers;
            continue;
        }
        if (active.size() != 2) {
            fail(Errc::invalid_design, "edge row must have exactly two non-zero coordinates");
        }
        if (!seen.insert(row).second) {
            fail(Errc::invalid_design, "duplicate edge row");
        }
        pair_signs[{active[0], active[1]}].insert({row[active[0]], row[active[1]]});
    }
    if (centers != design.center_replicates) {
        fail(Errc::invalid_design, "center row count mismatch");
    }
    if (pair_signs.size() != k * (k - 1) / 2) {
        fail(Errc::invalid_design, "not every factor pair is covered");
    }
    for (const auto& [pair, signs] : pair_signs) {
        if (signs.size() != 4) {
            fail(Errc::invalid_design, "factor pair does not realize all four sign combinations");
        }
    }
}

DesignMatrix generate_bbd(const std::vector<FactorSpec>& factors, std::size_t center_replicates)
{
    const std::size_t k = factors.size();
    if (k < 3) {
        fail(Errc::invalid_design, "Box-Behnken needs at least 3 factors, got " + std::to_string(k));
    }
    validate_factors(factors);

    DesignMatrix design;
    design.factors = factors;
    design.center_replicates = center_replicates;
    design.coded_rows.reserve(bbd_run_count(k, center_replicates));

    constexpr std::int8_t signs[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            for (const auto& s : signs) {
                CodedRow row(k, 0);
                row[i] = s[0];
                row[j] = s[1];
                design.coded_rows.push_back(std::move(row));
            }
        }
    }
    for (std::size_t c = 0; c < center_replicates; ++c) {
        design.coded_rows.emplace_back(k, 0);
    }
    return design;
}

std::vector<ParameterRow> map_levels(const DesignMatrix& design)
{
    std::vector<ParameterRow> out;
    out.reserve(design.coded_rows.size());
    for (const auto& coded : design.coded_rows) {
        ParameterRow row(coded.size());
        for (std::size_t c = 0; c < coded.size(); ++c) {
            row[c] = design.factors[c].levels[static_cast<std::size_t>(coded[c] + 1)];
        }
        out.push_back(std::move(row));
    }
    return out;
}

MatchReport verify_against_reference(const DesignMatrix& design, const std::vector<ParameterRow>& reference_rows)
{
    const std::size_t k = design.factor_count();
    std::map<ParameterRow, std::size_t> expected;
    for (auto& row : map_levels(design)) {
        ++expected[std::move(row)];
    }
    std::map<ParameterRow, std::size_t> actual;
    for (const auto& row : reference_rows) {
        if (row.size() != k) {
            fail(Errc::schema, "reference row has " + std::to_string(row.size()) + " columns, design has " +
                                   std::to_string(k));
        }
        ++actual[row];
    }

    MatchReport report;
    for (const auto& [row, count] : expected) {
        auto it = actual.find(row);
        if (it == actual.end()) {
            report.missing.push_back({row, count, 0});
        } else if (it->second != count) {
            report.multiplicity.push_back({row, count, it->second});
        }
    }
    for (const auto& [row, count] : actual) {
        if (!expected.contains(row)) {
            report.extra.push_back({row, 0, count});
        }
    }
    return report;
}

std::vector<FactorSpec> study_factors()
{
    return {
        {"layer_height", "mm", {0.12, 0.20, 0.28}},
        {"extrusion_temp", "C", {190, 200, 210}},
        {"outer_wall_speed", "mm/s", {150, 200, 250}},
        {"infill_density", "%", {5, 15, 25}},
        {"wall_thickness", "mm", {0.36, 0.42, 0.48}},
        {"bed_temp", "C", {55, 60, 65}},
        {"fan_speed", "%", {60, 80, 100}},
    };
}

std::vector<FactorSpec> parse_factor_spec(const std::string& text)
{
    std::vector<FactorSpec> factors;
    const auto lines = text::split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const auto line = text::trim(lines[n]);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto cells = text::split(line, ',');
        if (cells.size() != 5) {
            throw Error(Errc::schema, "expected 'name,unit,l1,l2,l3', got " + std::to_string(cells.size()) + " fields",
                        n + 1);
        }
        FactorSpec f;
        f.name = std::string(text::trim(cells[0]));
        f.unit = std::string(text::trim(cells[1]));
        for (std::size_t l = 0; l < 3; ++l) {
            const auto v = text::parse_double(cells[2 + l]);
            if (!v) {
                throw Error(Errc::parse, "non-numeric level '" + std::string(text::trim(cells[2 + l])) + "'", n + 1);
            }
            f.levels[l] = *v;
        }
        factors.push_back(std::move(f));
    }
    validate_factors(factors);
    return factors;
}

std::vector<FactorSpec> load_factor_spec(const std::filesystem::path& path)
{
    return parse_factor_spec(text::read_file(path));
}

std::string design_to_csv(const DesignMatrix& design)
{
    std::ostringstream out;
    for (const auto& f : design.factors) {
        out << f.name << ',';
    }
    out << "run_id\n";
    const auto rows = map_levels(design);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (double v : rows[r]) {
            out << text::format_double(v) << ',';
        }
        out << "Object-" << (r + 1) << '\n';
    }
    return out.str();
}

} // namespace roughcast::doe
