#include "swapsim/source.hpp"

#include <cmath>
#include <stdexcept>

namespace swapsim::source {

void SourceParams::validate() const {
    if (pair_prob < 0.0 || pair_prob >= 0.1)
        throw std::invalid_argument("pair_prob must be in [0, 0.1)");
    if (intrinsic_visibility < 0.0 || intrinsic_visibility > 1.0)
        throw std::invalid_argument("intrinsic_visibility must be in [0,1]");
}

std::vector<double> pair_count_distribution(const SourceParams& params, int n_max) {
    params.validate();
    if (n_max < 0 || n_max > kMaxPairsPerPulse)
        throw std::invalid_argument("n_max must be in [0,4]");
    const double p = params.pair_prob;
    std::vector<double> pmf(n_max + 1);
    if (params.stat_model == StatModel::poissonian) {
        // mean p
        double term = std::exp(-p);
        for (int n = 0; n <= n_max; ++n) {
            pmf[n] = term;
            term *= p / (n + 1);
        }
    } else {
        // thermal with mean p: P(n) ~ (1-x) x^n, x = p/(1+p)
        const double x = p / (1.0 + p);
        double term = 1.0 - x;
        for (int n = 0; n <= n_max; ++n) {
            pmf[n] = term;
            term *= x;
        }
    }
    double sum = 0.0;
    for (double v : pmf) sum += v;
    for (double& v : pmf) v /= sum;
    return pmf;
}

double coherence_length_mm(const HomParams& h) {
    if (h.filter_fwhm_nm <= 0.0 || h.center_wavelength_nm <= 0.0)
        throw std::invalid_argument("wavelengths must be positive");
    // both in nm; result nm^2/nm = nm, converted to mm
    return h.center_wavelength_nm * h.center_wavelength_nm / h.filter_fwhm_nm * 1e-6;
}

double hom_overlap(const HomParams& h) {
    if (h.dip_width_scale <= 0.0) throw std::invalid_argument("dip_width_scale must be positive");
    const double lc = coherence_length_mm(h);
    const double sigma = h.dip_width_scale * lc / std::sqrt(8.0 * std::log(2.0));
    const double d = h.delta_l_mm;
    return std::exp(-d * d / (2.0 * sigma * sigma));
}

double effective_overlap(const SourceParams& s, const HomParams& h) {
    s.validate();
    return s.intrinsic_visibility * hom_overlap(h);
}

double calibrate_pair_prob(double two_fold_rate_hz, double rep_rate_hz, double eta_local) {
    if (two_fold_rate_hz < 0.0) throw std::invalid_argument("two_fold_rate must be >= 0");
    if (rep_rate_hz <= 0.0) throw std::invalid_argument("rep_rate must be positive");
    if (eta_local <= 0.0 || eta_local > 1.0) throw std::invalid_argument("eta must be in (0,1]");
    const double p = two_fold_rate_hz / (rep_rate_hz * eta_local * eta_local);
    if (p >= 0.1) throw std::invalid_argument("calibrated pair_prob leaves the perturbative regime");
    return p;
}

double two_fold_rate_from_pair_prob(double pair_prob, double rep_rate_hz, double eta_local) {
    if (pair_prob < 0.0 || pair_prob >= 0.1)
        throw std::invalid_argument("pair_prob must be in [0, 0.1)");
    if (rep_rate_hz <= 0.0) throw std::invalid_argument("rep_rate must be positive");
    if (eta_local <= 0.0 || eta_local > 1.0) throw std::invalid_argument("eta must be in (0,1]");
    return pair_prob * rep_rate_hz * eta_local * eta_local;
}

PulseEmission sample_pulse(const SourceParams& s1, const SourceParams& s2,
                           std::int64_t pulse_index, std::uint64_t seed) {
    auto rng = SplitStream::derive(seed, {stream_tag::pulses,
                                          static_cast<std::uint64_t>(pulse_index)});
    const auto pmf1 = pair_count_distribution(s1, kMaxPairsPerPulse);
    const auto pmf2 = pair_count_distribution(s2, kMaxPairsPerPulse);
    PulseEmission e;
    e.pulse_index = pulse_index;
    e.n_pairs_src1 = rng.discrete(pmf1);
    e.n_pairs_src2 = rng.discrete(pmf2);
    return e;
}

}  // namespace swapsim::source
