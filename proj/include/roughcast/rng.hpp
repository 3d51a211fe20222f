#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace roughcast {

// Seeded generator with portable derived distributions. The standard library
// distributions are implementation-defined, so uniform/normal/shuffle are
// built directly on the (fully specified) 64-bit Mersenne Twister stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n), unbiased.
    std::size_t below(std::size_t n);
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& values)
    {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// splitmix64 mix of a master seed with a stream tag.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag);

std::vector<std::size_t> iota_indices(std::size_t n);

} // namespace roughcast
