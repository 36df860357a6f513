#pragma once

#include <array>
#include <cstdint>

#include "swapsim/rng.hpp"

// Coincidence statistics: visibilities, the entanglement witness, CHSH values,
// their binomial error bars, and bootstrap cross-checks.
namespace swapsim::stats {

struct VisibilityEstimate {
    double value = 0.0;  // may carry a sign when oriented against an expected correlation
    double sigma = 0.0;
    std::int64_t cc_max = 0;
    std::int64_t cc_min = 0;
};

// (cc_max - cc_min) / (cc_max + cc_min) with the propagated counting error.
VisibilityEstimate visibility(std::int64_t cc_max, std::int64_t cc_min);

// Outcome table for one pair of analyzer settings; n[a][b] with 0/1 the
// transmitted/reflected analyzer ports on each side.
struct SettingCounts {
    std::int64_t n[2][2]{};

    std::int64_t total() const { return n[0][0] + n[0][1] + n[1][0] + n[1][1]; }
    void add(int a, int b) { ++n[a & 1][b & 1]; }
};

struct Correlation {
    double value = 0.0;
    double sigma = 0.0;
};

// E = (n00 + n11 - n01 - n10) / N
Correlation correlation_e(const SettingCounts& counts);

// Correlation visibility oriented by the sign the target state predicts for this
// basis: +1 means correlated outcomes expected, -1 anticorrelated. A state matching
// the expectation yields a positive value.
VisibilityEstimate signed_visibility(const SettingCounts& counts, int expected_sign);

struct WitnessResult {
    double value = 0.0;
    double sigma = 0.0;
    double significance = 0.0;  // sigmas below zero; 0 when the value is non-negative
};

// W = 1/2 - (1 + V_hv + V_pm + V_rl) / 4; negative values certify entanglement.
WitnessResult witness(const VisibilityEstimate& v_hv, const VisibilityEstimate& v_pm,
                      const VisibilityEstimate& v_rl);

struct ChshResult {
    double value = 0.0;
    double sigma = 0.0;
    std::array<Correlation, 4> terms{};
};

// S = |sum_i sign_i * E_i| over the four setting pairs in schedule order.
ChshResult chsh(const std::array<SettingCounts, 4>& counts, const std::array<int, 4>& signs);

// True when light cannot bridge the stations within the time difference.
bool spacelike_check(double distance_km, double dt_ns);

// Random-coincidence rate of two uncorrelated streams through a +-window/2 gate.
double accidental_rate_hz(double rate1_hz, double rate2_hz, double window_ns);

// Bootstrap standard deviations via multinomial resampling of the count tables,
// one independent multinomial per setting with its observed total.
double bootstrap_sigma_witness(const std::array<SettingCounts, 3>& counts,
                               const std::array<int, 3>& expected_signs, int resamples,
                               SplitStream& rng);
double bootstrap_sigma_chsh(const std::array<SettingCounts, 4>& counts,
                            const std::array<int, 4>& signs, int resamples, SplitStream& rng);

}  // namespace swapsim::stats
