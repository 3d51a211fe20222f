#include "roughcast/split.hpp"

#include "roughcast/error.hpp"
#include "roughcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace roughcast::data {

std::vector<std::size_t> SplitIndices::pool() const
{
    std::vector<std::size_t> out = train;
    out.insert(out.end(), val.begin(), val.end());
    std::sort(out.begin(), out.end());
    return out;
}

void validate_fractions(const SplitFractions& f)
{
    if (!(f.train > 0.0) || f.val < 0.0 || f.test < 0.0 || !std::isfinite(f.train + f.val + f.test)) {
        fail(Errc::config, "split fractions must be positive (val and test may be 0)");
    }
    if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
        fail(Errc::config, "split fractions must sum to 1");
    }
}

namespace {

// floor(n * fraction), tolerant to representation error such as 0.29 * 100.
std::size_t floor_count(std::size_t n, double fraction)
{
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
}

} // namespace

SplitIndices split_holdout(std::size_t n, const SplitFractions& fractions, std::uint64_t seed)
{
    validate_fractions(fractions);
    auto order = iota_indices(n);
    Rng rng(seed);
    rng.shuffle(order);

    const std::size_t n_test = floor_count(n, fractions.test);
    const std::size_t n_val = floor_count(n, fractions.val);

    SplitIndices out;
    out.seed = seed;
    out.fractions = fractions;
    out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                   order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), order.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

SplitIndices split_holdout(const Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed)
{
    return split_holdout(dataset.size(), fractions, seed);
}

SplitIndices split_holdout_grouped(const Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed)
{
    validate_fractions(fractions);
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        groups[dataset.records[i].object_id].push_back(i);
    }
    std::vector<const std::vector<std::size_t>*> order;
    for (const auto& [id, members] : groups) {
        order.push_back(&members);
    }
    Rng rng(seed);
    rng.shuffle(order);

    const std::size_t n = dataset.size();
    const std::size_t n_test = floor_count(n, fractions.test);
    const std::size_t n_val = floor_count(n, fractions.val);

    SplitIndices out;
    out.seed = seed;
    out.fractions = fractions;
    out.grouped = true;
    for (const auto* members : order) {
        auto* target = &out.train;
        if (out.test.size() + members->size() <= n_test) {
            target = &out.test;
        } else if (out.val.size() + members->size() <= n_val) {
            target = &out.val;
        }
        target->insert(target->end(), members->begin(), members->end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

} // namespace roughcast::data
