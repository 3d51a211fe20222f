#pragma once

#include "roughcast/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace roughcast::data {

struct SplitFractions {
    double train = 0.85;
    double val = 0.0;
    double test = 0.15;
};

inline constexpr SplitFractions kHoldoutProtocol{0.85, 0.0, 0.15};
inline constexpr SplitFractions kAugmentationProtocol{0.70, 0.15, 0.15};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
    SplitFractions fractions;
    bool grouped = false;

    std::size_t total() const { return train.size() + val.size() + test.size(); }
    // train followed by val, i.e. the model-selection pool.
    std::vector<std::size_t> pool() const;
};

void validate_fractions(const SplitFractions& fractions);

// Record-level seeded shuffle. Test and val sizes are floor(n * fraction);
// the remainder goes to train. Index lists are returned sorted.
SplitIndices split_holdout(std::size_t n, const SplitFractions& fractions, std::uint64_t seed);
SplitIndices split_holdout(const Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed);

// Specimen-level variant: whole object_id groups are assigned to one subset,
// filling test then val up to their floor targets (groups are taken in seeded
// order while they still fit).
SplitIndices split_holdout_grouped(const Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed);

} // namespace roughcast::data
