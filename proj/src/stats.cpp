#include "swapsim/stats.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace swapsim::stats {

namespace {

// shared error model for any (A - B) / (A + B) ratio of two Poisson counts
double ratio_sigma(double a, double b) {
    const double n = a + b;
    if (n <= 0.0) return 0.0;
    return 2.0 * std::sqrt(a * b / (n * n * n));
}

SettingCounts resample(const SettingCounts& src, SplitStream& rng) {
    SettingCounts out;
    const auto total = src.total();
    if (total <= 0) return out;
    const double inv = 1.0 / static_cast<double>(total);
    const std::vector<double> pmf = {
        static_cast<double>(src.n[0][0]) * inv, static_cast<double>(src.n[0][1]) * inv,
        static_cast<double>(src.n[1][0]) * inv, static_cast<double>(src.n[1][1]) * inv};
    for (std::int64_t i = 0; i < total; ++i) {
        const int cell = rng.discrete(pmf);
        ++out.n[cell >> 1][cell & 1];
    }
    return out;
}

}  // namespace

VisibilityEstimate visibility(std::int64_t cc_max, std::int64_t cc_min) {
    if (cc_max < 0 || cc_min < 0) throw std::invalid_argument("visibility: negative counts");
    VisibilityEstimate est;
    est.cc_max = cc_max;
    est.cc_min = cc_min;
    const double a = static_cast<double>(cc_max), b = static_cast<double>(cc_min);
    if (a + b > 0.0) {
        est.value = (a - b) / (a + b);
        est.sigma = ratio_sigma(a, b);
    }
    return est;
}

Correlation correlation_e(const SettingCounts& counts) {
    Correlation e;
    const double same = static_cast<double>(counts.n[0][0] + counts.n[1][1]);
    const double diff = static_cast<double>(counts.n[0][1] + counts.n[1][0]);
    if (same + diff > 0.0) {
        e.value = (same - diff) / (same + diff);
        e.sigma = ratio_sigma(same, diff);
    }
    return e;
}

VisibilityEstimate signed_visibility(const SettingCounts& counts, int expected_sign) {
    if (expected_sign != 1 && expected_sign != -1)
        throw std::invalid_argument("signed_visibility: sign must be +-1");
    const std::int64_t same = counts.n[0][0] + counts.n[1][1];
    const std::int64_t diff = counts.n[0][1] + counts.n[1][0];
    const std::int64_t expected_max = expected_sign > 0 ? same : diff;
    const std::int64_t expected_min = expected_sign > 0 ? diff : same;
    VisibilityEstimate est;
    est.cc_max = expected_max;
    est.cc_min = expected_min;
    const double a = static_cast<double>(expected_max), b = static_cast<double>(expected_min);
    if (a + b > 0.0) {
        est.value = (a - b) / (a + b);  // negative when the data contradicts the sign
        est.sigma = ratio_sigma(a, b);
    }
    return est;
}

WitnessResult witness(const VisibilityEstimate& v_hv, const VisibilityEstimate& v_pm,
                      const VisibilityEstimate& v_rl) {
    WitnessResult w;
    w.value = 0.5 - (1.0 + v_hv.value + v_pm.value + v_rl.value) / 4.0;
    w.sigma = 0.25 * std::sqrt(v_hv.sigma * v_hv.sigma + v_pm.sigma * v_pm.sigma +
                               v_rl.sigma * v_rl.sigma);
    w.significance = (w.value < 0.0 && w.sigma > 0.0) ? -w.value / w.sigma : 0.0;
    return w;
}

ChshResult chsh(const std::array<SettingCounts, 4>& counts, const std::array<int, 4>& signs) {
    ChshResult res;
    double sum = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        if (signs[i] != 1 && signs[i] != -1)
            throw std::invalid_argument("chsh: signs must be +-1");
        res.terms[i] = correlation_e(counts[i]);
        sum += static_cast<double>(signs[i]) * res.terms[i].value;
        var += res.terms[i].sigma * res.terms[i].sigma;
    }
    res.value = std::fabs(sum);
    res.sigma = std::sqrt(var);
    return res;
}

bool spacelike_check(double distance_km, double dt_ns) {
    if (distance_km <= 0.0) throw std::invalid_argument("spacelike_check: distance must be positive");
    constexpr double c_m_per_ns = 0.299792458;
    const double light_m = std::fabs(dt_ns) * c_m_per_ns;
    const double separation_m = distance_km * 1000.0;
    // the exact light-cone boundary counts as not spacelike; the slack only absorbs
    // round-trip rounding of a boundary dt computed as separation / c
    return light_m < separation_m - 1e-6;
}

double accidental_rate_hz(double rate1_hz, double rate2_hz, double window_ns) {
    if (rate1_hz < 0.0 || rate2_hz < 0.0 || window_ns < 0.0)
        throw std::invalid_argument("accidental_rate_hz: negative input");
    return rate1_hz * rate2_hz * window_ns * 1e-9;
}

double bootstrap_sigma_witness(const std::array<SettingCounts, 3>& counts,
                               const std::array<int, 3>& expected_signs, int resamples,
                               SplitStream& rng) {
    if (resamples < 2) throw std::invalid_argument("bootstrap: need at least 2 resamples");
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < resamples; ++r) {
        std::array<VisibilityEstimate, 3> vis;
        for (std::size_t b = 0; b < 3; ++b)
            vis[b] = signed_visibility(resample(counts[b], rng), expected_signs[b]);
        const double w = witness(vis[0], vis[1], vis[2]).value;
        sum += w;
        sum2 += w * w;
    }
    const double n = static_cast<double>(resamples);
    const double var = sum2 / n - (sum / n) * (sum / n);
    return std::sqrt(std::max(var, 0.0) * n / (n - 1.0));
}

double bootstrap_sigma_chsh(const std::array<SettingCounts, 4>& counts,
                            const std::array<int, 4>& signs, int resamples, SplitStream& rng) {
    if (resamples < 2) throw std::invalid_argument("bootstrap: need at least 2 resamples");
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < resamples; ++r) {
        std::array<SettingCounts, 4> draw;
        for (std::size_t i = 0; i < 4; ++i) draw[i] = resample(counts[i], rng);
        const double s = chsh(draw, signs).value;
        sum += s;
        sum2 += s * s;
    }
    const double n = static_cast<double>(resamples);
    const double var = sum2 / n - (sum / n) * (sum / n);
    return std::sqrt(std::max(var, 0.0) * n / (n - 1.0));
}

}  // namespace swapsim::stats
