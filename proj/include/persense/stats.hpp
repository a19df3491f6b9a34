#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace persense::stats {

// Mean over a nonempty sample.
double mean(const std::vector<double>& xs);

// Population standard deviation (divide by N).
double population_std(const std::vector<double>& xs);

// Linear-interpolation percentile on the sorted sample: index = p/100 * (n-1).
// p in [0,100]; xs nonempty.
double percentile(const std::vector<double>& xs, double p);

// Standard normal CDF, accurate to well below 1e-7.
double normal_cdf(double z);

// Round half away from zero.
int round_half_away(double v);

}  // namespace persense::stats

namespace persense::rng {

// splitmix64 stream; deterministic and platform independent. We avoid the
// std <random> distributions because their output is implementation defined.
class SplitMix {
public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // uniform in [0, 1)
    double next_double();

    // uniform integer in [lo, hi] inclusive
    int next_int(int lo, int hi);

    // uniform in [lo, hi)
    double next_range(double lo, double hi);

private:
    std::uint64_t state_;
};

// FNV-1a over the seed and tag bytes; used to derive per-entity substreams.
std::uint64_t stable_hash(std::uint64_t seed, const std::string& tag, std::uint64_t index = 0);

// Convenience: one hashed double in [0,1).
double hash_unit(std::uint64_t seed, const std::string& tag, std::uint64_t index);

}  // namespace persense::rng
