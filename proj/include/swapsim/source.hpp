#pragma once

#include <cstdint>
#include <vector>

#include "swapsim/rng.hpp"

// Pulsed down-conversion pair sources and the interference-overlap model.
namespace swapsim::source {

enum class StatModel { poissonian, thermal };

struct SourceParams {
    double pair_prob = 0.0;            // per-pulse emission probability, < 0.1
    double intrinsic_visibility = 1.0; // quality cap <= 1, reached at perfect overlap
    StatModel stat_model = StatModel::poissonian;

    void validate() const;
};

struct HomParams {
    double delta_l_mm = 0.0;            // relative path-length mismatch at the beam splitter
    double center_wavelength_nm = 808.0;
    double filter_fwhm_nm = 3.0;
    double dip_width_scale = 1.0;       // single exposed scale factor on the Gaussian width
};

// Per-pulse emission; counts are capped at the truncation limit.
struct PulseEmission {
    std::int64_t pulse_index = 0;
    int n_pairs_src1 = 0;
    int n_pairs_src2 = 0;
};

inline constexpr int kMaxPairsPerPulse = 4;

// P(n pairs), n = 0..n_max, renormalized over the truncated support.
std::vector<double> pair_count_distribution(const SourceParams& params, int n_max);

// lambda0^2 / delta_lambda, in mm
double coherence_length_mm(const HomParams& h);

// Gaussian two-photon overlap vs path mismatch; 1 at delta_l = 0.
double hom_overlap(const HomParams& h);

// intrinsic visibility times interference overlap
double effective_overlap(const SourceParams& s, const HomParams& h);

// p = two_fold_rate / (rep_rate * eta^2); throws if outside the perturbative regime
double calibrate_pair_prob(double two_fold_rate_hz, double rep_rate_hz, double eta_local);

// inverse of calibrate_pair_prob
double two_fold_rate_from_pair_prob(double pair_prob, double rep_rate_hz, double eta_local);

// Deterministic given (seed, pulse_index); independent across pulse indices.
PulseEmission sample_pulse(const SourceParams& s1, const SourceParams& s2,
                           std::int64_t pulse_index, std::uint64_t seed);

}  // namespace swapsim::source
