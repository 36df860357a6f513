#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace swapsim {

// Counter-based stream: output depends only on (key, counter), so any pulse
// index or block can be sampled independently of processing order.
class SplitStream {
public:
    using result_type = std::uint64_t;

    explicit SplitStream(std::uint64_t key) : key_(key), counter_(0) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }

    // splitmix64 finalizer over key ^ mixed counter
    std::uint64_t operator()() {
        std::uint64_t z = key_ + 0x9e3779b97f4a7c15ull * ++counter_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Hash-chained key derivation; deterministic and order-sensitive.
    static std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        std::uint64_t k = mix(seed ^ 0x6a09e667f3bcc909ull);
        for (std::uint64_t p : path) k = mix(k ^ mix(p + 0x9e3779b97f4a7c15ull));
        return k;
    }

    static SplitStream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        return SplitStream(derive_key(seed, path));
    }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // unbiased via rejection
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t v;
        do { v = (*this)(); } while (v >= limit);
        return v % n;
    }

    // Box-Muller, cosine branch only (keeps the draw count per call fixed)
    double normal(double mean = 0.0, double sigma = 1.0) {
        double u1 = uniform(), u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double exponential(double rate) {
        double u = uniform();
        return -std::log1p(-u) / rate;
    }

    // number of failures before the first success; used for geometric gap sampling
    std::int64_t geometric_failures(double success_prob) {
        if (success_prob >= 1.0) return 0;
        double u = uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        return static_cast<std::int64_t>(std::floor(std::log1p(-u) / std::log1p(-success_prob)));
    }

    // inverse-CDF draw from a small pmf; returns pmf.size()-1 on rounding spill
    int discrete(const std::vector<double>& pmf) {
        double u = uniform(), acc = 0.0;
        for (std::size_t i = 0; i < pmf.size(); ++i) {
            acc += pmf[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(pmf.size()) - 1;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_;
};

// Fixed stream tags so sub-streams never collide across modules.
namespace stream_tag {
constexpr std::uint64_t pulses = 1;
constexpr std::uint64_t bob_singles = 2;
constexpr std::uint64_t darks = 3;
constexpr std::uint64_t block_loss = 4;
constexpr std::uint64_t bootstrap = 5;
constexpr std::uint64_t detect = 6;
}  // namespace stream_tag

}  // namespace swapsim
