#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mixcon {

/// The single random source used across the library.
///
/// Raw bits come from std::mt19937_64 (MT19937-64, whose output sequence is
/// fixed by the C++ standard). Distributions are derived here rather than
/// through <random> distribution classes, whose algorithms differ between
/// standard libraries:
///   uniform01 : top 53 bits of one draw, scaled by 2^-53, in [0, 1)
///   normal    : Box-Muller on two uniform draws, both outputs used
///   below(n)  : rejection sampling followed by modulo, unbiased
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform01();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    double normal(double mean = 0.0, double stddev = 1.0);
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

    /// Seed for an independent stream derived from (seed, stream).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mixcon
