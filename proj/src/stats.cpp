#include "persense/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace persense::stats {

double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double population_std(const std::vector<double>& xs) {
    const double mu = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(xs.size()));
}

double percentile(const std::vector<double>& xs, double p) {
    if (xs.empty()) throw std::invalid_argument("percentile of empty sample");
    if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile p outside [0,100]");
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const double idx = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(idx);
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

int round_half_away(double v) {
    return static_cast<int>(v >= 0.0 ? std::floor(v + 0.5) : std::ceil(v - 0.5));
}

}  // namespace persense::stats

namespace persense::rng {

std::uint64_t SplitMix::next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SplitMix::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int SplitMix::next_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
}

double SplitMix::next_range(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

std::uint64_t stable_hash(std::uint64_t seed, const std::string& tag, std::uint64_t index) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_byte = [&h](std::uint8_t b) {
        h ^= b;
        h *= 0x100000001b3ULL;
    };
    for (int i = 0; i < 8; ++i) mix_byte(static_cast<std::uint8_t>(seed >> (8 * i)));
    for (char c : tag) mix_byte(static_cast<std::uint8_t>(c));
    for (int i = 0; i < 8; ++i) mix_byte(static_cast<std::uint8_t>(index >> (8 * i)));
    return h;
}

double hash_unit(std::uint64_t seed, const std::string& tag, std::uint64_t index) {
    return SplitMix(stable_hash(seed, tag, index)).next_double();
}

}  // namespace persense::rng
