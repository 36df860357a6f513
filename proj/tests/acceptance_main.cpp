// End-to-end acceptance checks for the swap simulator. Each numbered check
// prints exactly one PASS/FAIL line; the exit code is the number of failures.
// Tolerances are pinned next to each check.

#include "swapsim/config.hpp"
#include "swapsim/pipeline.hpp"
#include "swapsim/qstate.hpp"
#include "swapsim/report.hpp"
#include "swapsim/rng.hpp"
#include "swapsim/source.hpp"
#include "swapsim/stats.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

using namespace swapsim;
using config::ExperimentConfig;
using qstate::BellKind;

namespace {

int g_failures = 0;

void report_line(int id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("%s  %d  %s (%s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

const std::array<BellKind, 4> kKinds = {BellKind::PsiMinus, BellKind::PsiPlus,
                                        BellKind::PhiPlus, BellKind::PhiMinus};

// kept from check 4 for the timing/sampling claims in check 9
std::optional<pipeline::RunResult> g_full_remote;

double pooled_visibility(const pipeline::RunResult& r) {
    double n = double(r.singlet.events + r.triplet.events);
    if (n <= 0.0) return 0.0;
    return (r.singlet.mean_visibility * double(r.singlet.events) +
            r.triplet.mean_visibility * double(r.triplet.events)) / n;
}

// ---------------------------------------------------------------------------

void check_1_decomposition() {
    const double kTol = 1e-12;

    auto state = qstate::sort_labels(qstate::tensor(qstate::bell_state(BellKind::PsiMinus, {0, 1}),
                                                    qstate::bell_state(BellKind::PsiMinus, {2, 3})));
    // expected coefficients of |outer(0,3)> x |inner(1,2)|: +-1/2 on the diagonal
    const std::array<double, 4> diag = {-0.5, 0.5, -0.5, 0.5};

    double worst = 0.0;
    Eigen::VectorXcd rebuilt = Eigen::VectorXcd::Zero(16);
    for (std::size_t o = 0; o < 4; ++o) {
        for (std::size_t i = 0; i < 4; ++i) {
            auto c = qstate::bell_overlap(state, kKinds[o], kKinds[i]);
            double want = (o == i) ? diag[o] : 0.0;
            worst = std::max(worst, std::abs(c - std::complex<double>(want, 0.0)));
            auto term = qstate::sort_labels(qstate::tensor(qstate::bell_state(kKinds[o], {0, 3}),
                                                           qstate::bell_state(kKinds[i], {1, 2})));
            rebuilt += c * term.amplitudes();
        }
    }
    double residual = (rebuilt - state.amplitudes()).cwiseAbs().maxCoeff();
    bool ok = worst < kTol && residual < kTol;
    report_line(1, ok, "two singlet pairs decompose into the four matched bell products",
                fmt("max coefficient error %.2e, reconstruction residual %.2e, tol 1e-12",
                    worst, residual));
}

void check_2_bsm_branching() {
    const double kProbTol = 1e-12;   // analytic branch probabilities
    const double kFreqTol = 0.005;   // sampled frequency, 2e5 pulses
    const double kFidTol = 1e-9;
    const int kPulses = 200000;

    auto state = qstate::sort_labels(qstate::tensor(qstate::bell_state(BellKind::PsiMinus, {0, 1}),
                                                    qstate::bell_state(BellKind::PsiMinus, {2, 3})));
    std::vector<double> probs;
    double prob_err = 0.0;
    double fid_err = 0.0;
    for (auto kind : kKinds) {
        auto proj = qstate::bsm_project(state, kind);
        probs.push_back(proj.probability);
        prob_err = std::max(prob_err, std::abs(proj.probability - 0.25));
        if (proj.conditional) {
            double f = qstate::fidelity(*proj.conditional, qstate::bell_state(kind, {0, 3}));
            fid_err = std::max(fid_err, std::abs(f - 1.0));
        } else {
            fid_err = 1.0;
        }
    }

    // ideal double-pair pulses: draw the projection outcome per pulse
    auto rng = SplitStream::derive(2024, {stream_tag::pulses});
    std::array<std::int64_t, 4> counts{};
    for (int i = 0; i < kPulses; ++i) counts[std::size_t(rng.discrete(probs))]++;
    double f_minus = double(counts[0]) / kPulses;
    double f_plus = double(counts[1]) / kPulses;

    bool ok = prob_err < kProbTol && fid_err < kFidTol &&
              std::abs(f_minus - 0.25) < kFreqTol && std::abs(f_plus - 0.25) < kFreqTol;
    report_line(2, ok, "interferometer outcomes branch at 1/4 with the right conditional states",
                fmt("analytic error %.2e, psi- freq %.4f, psi+ freq %.4f (0.25+-0.005 over %d "
                    "pulses), fidelity error %.2e",
                    prob_err, f_minus, f_plus, kPulses, fid_err));
}

void check_3_rate_budget() {
    const double kQuotedTol = 0.30;  // |quoted - predicted| / predicted
    const double kMcSigmas = 3.0;
    const struct {
        double two_fold_hz;
        double quoted_hz;
        double duration_s;
    } points[] = {{15e3, 1.0, 3000.0}, {130e3, 100.0, 300.0}, {240e3, 370.0, 120.0}};

    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    double effective_pulses = 0.0;
    for (const auto& pt : points) {
        ExperimentConfig cfg;
        cfg.mode = config::Mode::Local;
        cfg.measurement = config::Measurement::Witness;
        cfg.two_fold_hz = pt.two_fold_hz;
        cfg.duration_s = pt.duration_s;
        cfg.block_seconds = 30.0;
        cfg.dark_rate_local_hz = 0.0;
        cfg.dark_rate_remote_hz = 0.0;
        cfg.jitter_sigma_ps = 0.0;
        cfg.unpaired_singles = false;
        cfg.seed = 1;

        double pred = pipeline::closed_form_budget(cfg).fourfold_local_hz;
        double rel = std::abs(pt.quoted_hz - pred) / pred;
        if (rel > kQuotedTol) ok = false;

        auto res = pipeline::run(cfg);
        double expected = pred * pt.duration_s;
        double dev = std::abs(double(res.fourfolds) - expected) / std::sqrt(expected);
        if (dev > kMcSigmas) ok = false;
        effective_pulses += cfg.duration_s * cfg.rep_rate_hz;

        if (!detail.empty()) detail += "; ";
        detail += fmt("%.0f kHz: pred %.4g Hz vs quoted %.4g (rel %.2f), mc %.4g Hz (%.1f sigma)",
                      pt.two_fold_hz / 1e3, pred, pt.quoted_hz, rel,
                      double(res.fourfolds) / pt.duration_s, dev);
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (elapsed > 60.0) ok = false;
    detail += fmt("; %.2e effective pulses in %.1f s", effective_pulses, elapsed);
    report_line(3, ok, "local 4-fold budget matches closed form and monte carlo within 30%/3sigma",
                detail);
}

void check_4_remote_yield() {
    const double kCenter = 998.0;
    const double kRelTol = 0.20;
    const double kMaxSeconds = 600.0;

    ExperimentConfig cfg;  // defaults are the long-distance scenario
    auto res = pipeline::run(cfg);
    double lo = kCenter * (1.0 - kRelTol), hi = kCenter * (1.0 + kRelTol);
    bool ok = double(res.fourfolds) >= lo && double(res.fourfolds) <= hi &&
              res.elapsed_s <= kMaxSeconds;
    report_line(4, ok, "16260 s over the 143 km channel yields the observed swap count",
                fmt("%lld events in [%.0f, %.0f], budget %.0f, wall %.1f s (cap %.0f)",
                    static_cast<long long>(res.fourfolds), lo, hi,
                    res.budget.expected_remote_fourfolds, res.elapsed_s, kMaxSeconds));
    g_full_remote = std::move(res);
}

void check_5_witness() {
    const double kTarget = -0.2125;
    const double kTol = 0.015;
    const double kSigmaRef = 0.027;  // quoted error bar at ~506 events
    const int kEvents = 506;

    ExperimentConfig cfg;
    cfg.mode = config::Mode::Local;
    cfg.measurement = config::Measurement::Witness;
    cfg.two_fold_hz = 130e3;
    cfg.duration_s = 300.0;
    cfg.seed = 1;
    cfg.intrinsic_visibility = pipeline::calibrate_intrinsic_visibility(cfg, 0.6167);
    auto res = pipeline::run(cfg);

    bool w_ok = std::abs(res.singlet.witness.value - kTarget) <= kTol &&
                std::abs(res.triplet.witness.value - kTarget) <= kTol;

    // error bar cross-check at the fielded sample size: ~506 singlet events
    // spread over the three bases the way a full campaign would collect them
    std::array<stats::SettingCounts, 3> counts{};
    std::array<int, 3> quota = {169, 169, 168};
    int taken = 0;
    for (const auto& ev : res.events) {
        if (ev.bsm_kind != tagstream::BsmKind::PsiMinus12) continue;
        int b = ev.basis_a.kind == qstate::MeasBasis::Kind::HV   ? 0
                : ev.basis_a.kind == qstate::MeasBasis::Kind::PM ? 1
                                                                 : 2;
        if (quota[std::size_t(b)] == 0) continue;
        --quota[std::size_t(b)];
        counts[std::size_t(b)].add(ev.alice_outcome, ev.bob_outcome);
        if (++taken == kEvents) break;
    }
    auto rng = SplitStream::derive(cfg.seed, {stream_tag::bootstrap, 99});
    double boot = stats::bootstrap_sigma_witness(counts, pipeline::witness_signs(
                                                              tagstream::BsmKind::PsiMinus12),
                                                 500, rng);
    bool b_ok = taken == kEvents && boot >= kSigmaRef / 2.0 && boot <= kSigmaRef * 2.0;

    report_line(5, w_ok && b_ok,
                "calibrated 0.6167 visibility puts the witness at -0.212 with the quoted error",
                fmt("singlet W %.4f, triplet W %.4f (target %.4f+-%.3f), bootstrap sigma %.4f "
                    "at %d events (ref %.3f, factor-2 band)",
                    res.singlet.witness.value, res.triplet.witness.value, kTarget, kTol, boot,
                    taken, kSigmaRef));
}

void check_6_chsh() {
    const double kIdealTol = 0.01;
    const double kCalTarget = 2.46, kCalTol = 0.15;
    const double kWernerRel = 0.08;  // |S - 2 sqrt(2) V| on the werner grid

    // noise-free: both conditioned states saturate the quantum bound. The pump
    // must idle far below the operating points, since double pairs from one
    // source dilute S by roughly 2.83 * pair_prob.
    ExperimentConfig ideal;
    ideal.mode = config::Mode::Local;
    ideal.measurement = config::Measurement::Chsh;
    ideal.duration_s = 8.0e5;
    ideal.block_seconds = 30.0;
    ideal.pair_prob = 2.5e-4;
    ideal.intrinsic_visibility = 1.0;
    ideal.multipair_noise_coeff = 0.0;
    ideal.dark_rate_local_hz = 0.0;
    ideal.jitter_sigma_ps = 0.0;
    ideal.unpaired_singles = false;
    ideal.seed = 1;
    auto res_ideal = pipeline::run(ideal);
    const double kTsirelson = 2.0 * std::sqrt(2.0);
    std::int64_t n_ideal = res_ideal.singlet.events + res_ideal.triplet.events;
    bool ideal_ok = n_ideal >= 1000000 &&
                    std::abs(res_ideal.singlet.chsh.value - kTsirelson) <= kIdealTol &&
                    std::abs(res_ideal.triplet.chsh.value - kTsirelson) <= kIdealTol;

    // throttled-pump calibration: S near the measured violation
    ExperimentConfig cal;
    cal.mode = config::Mode::Local;
    cal.measurement = config::Measurement::Chsh;
    cal.two_fold_hz = 15e3;
    cal.duration_s = 8040.0;
    cal.seed = 1;
    auto res_cal = pipeline::run(cal);
    bool cal_ok = std::abs(res_cal.singlet.chsh.value - kCalTarget) <= kCalTol &&
                  std::abs(res_cal.triplet.chsh.value - kCalTarget) <= kCalTol;

    // werner grid: isotropic background only, so S = 2 sqrt(2) V and the
    // violation threshold sits exactly at V = 1/sqrt(2)
    bool werner_ok = true;
    std::string grid;
    for (double v : {0.62, 0.67, 0.74, 0.80}) {
        ExperimentConfig w = ideal;
        w.duration_s = 60.0;
        w.block_seconds = 5.0;
        w.pair_prob = 5e-3;
        w.intrinsic_visibility = 1.0;
        w.multipair_noise_coeff = (1.0 / v - 1.0) / w.pair_prob;
        auto res = pipeline::run(w);
        double s = res.singlet.chsh.value;
        bool above = s > 2.0;
        bool should = v > 1.0 / std::sqrt(2.0);
        if (above != should || std::abs(s - kTsirelson * v) > kWernerRel) werner_ok = false;
        grid += fmt(" V=%.2f:S=%.3f", v, s);
    }

    report_line(6, ideal_ok && cal_ok && werner_ok,
                "chsh saturates ideally, matches the calibrated run, and violates iff V > 1/sqrt(2)",
                fmt("ideal S %.4f/%.4f at %lld events (2.8284+-0.01), calibrated S %.3f/%.3f "
                    "(2.46+-0.15), grid%s",
                    res_ideal.singlet.chsh.value, res_ideal.triplet.chsh.value,
                    static_cast<long long>(n_ideal), res_cal.singlet.chsh.value,
                    res_cal.triplet.chsh.value, grid.c_str()));
}

void check_7_sweeps() {
    const double kAnchorTol = 0.05;

    ExperimentConfig base;
    base.mode = config::Mode::Local;
    base.measurement = config::Measurement::Witness;
    base.seed = 1;

    auto rate_pts = pipeline::sweep(base, "source.two_fold_hz",
                                    {"15e3", "60e3", "130e3", "240e3"});
    std::vector<double> vis;
    for (const auto& p : rate_pts) vis.push_back(pooled_visibility(p.result));
    bool rate_mono = vis[0] > vis[1] && vis[1] > vis[2] && vis[2] > vis[3];
    bool anchors = std::abs(vis[0] - 0.87) <= kAnchorTol && std::abs(vis[3] - 0.49) <= kAnchorTol;

    ExperimentConfig at130 = base;
    at130.two_fold_hz = 130e3;
    auto dl_pts = pipeline::sweep(at130, "source.delta_l_mm", {"0", "0.1", "0.2", "0.4"});
    std::vector<double> dl_vis;
    for (const auto& p : dl_pts) dl_vis.push_back(pooled_visibility(p.result));
    bool dl_mono = dl_vis[0] > dl_vis[1] && dl_vis[1] > dl_vis[2] && dl_vis[2] > dl_vis[3];

    // isolines: the witness changes sign exactly at V = 1/3, and on the werner
    // family S crosses 2 exactly at V = 1/sqrt(2)
    auto w_of = [](double v) {
        auto e = stats::visibility(std::int64_t(1e9 * (1 + v) / 2), std::int64_t(1e9 * (1 - v) / 2));
        return stats::witness(e, e, e).value;
    };
    bool iso_exact = std::abs(w_of(1.0 / 3.0)) < 1e-9 &&
                     std::abs(2.0 * std::sqrt(2.0) * (1.0 / std::sqrt(2.0)) - 2.0) < 1e-12 &&
                     w_of(0.34) < 0.0 && w_of(0.32) > 0.0;

    // every simulated point classifies on the correct side of V = 1/3
    bool iso_match = true;
    for (const auto* pts : {&rate_pts, &dl_pts}) {
        for (const auto& p : *pts) {
            bool entangled = p.result.singlet.witness.value < 0.0;
            bool above = pooled_visibility(p.result) > 1.0 / 3.0;
            if (entangled != above) iso_match = false;
        }
    }

    report_line(7, rate_mono && anchors && dl_mono && iso_exact && iso_match,
                "visibility falls monotonically with rate and path imbalance, isolines exact",
                fmt("rate sweep V %.3f/%.3f/%.3f/%.3f (anchors 0.87 and 0.49 +-0.05), imbalance "
                    "sweep V %.3f/%.3f/%.3f/%.3f, witness zero at V=1/3 and chsh=2 at V=1/sqrt(2)",
                    vis[0], vis[1], vis[2], vis[3], dl_vis[0], dl_vis[1], dl_vis[2], dl_vis[3]));
}

void check_8_sync_robustness() {
    const int kTrials = 100;
    const double kRecovery = 0.95;

    ExperimentConfig base;
    base.mode = config::Mode::Remote;
    base.measurement = config::Measurement::Witness;
    base.duration_s = 30.0;
    base.block_seconds = 5.0;
    base.two_fold_hz = 130e3;
    base.mean_loss_db = 0.0;  // table-scale check: the far arm stays on the bench
    base.dark_rate_local_hz = 100.0;
    base.dark_rate_remote_hz = 200.0;
    base.unpaired_singles = false;

    auto draw = SplitStream::derive(4242, {stream_tag::block_loss, 77});
    int recovered_trials = 0;
    double worst = 1.0;
    for (int t = 0; t < kTrials; ++t) {
        ExperimentConfig cfg = base;
        cfg.seed = 1000 + std::uint64_t(t);
        cfg.remote_clock_offset_ns = (draw.uniform() * 2.0 - 1.0) * 500e3;
        cfg.remote_clock_drift_ppm = (draw.uniform() * 2.0 - 1.0) * 10.0;

        ExperimentConfig ref_cfg = cfg;  // same photons, ideal clock
        ref_cfg.remote_clock_offset_ns = 0.0;
        ref_cfg.remote_clock_drift_ppm = 0.0;

        auto ref = pipeline::run(ref_cfg);
        auto res = pipeline::run(cfg);
        double frac = ref.truth_fourfolds > 0
                          ? double(res.truth_fourfolds) / double(ref.truth_fourfolds)
                          : 0.0;
        worst = std::min(worst, frac);
        if (frac >= kRecovery) ++recovered_trials;
    }

    int false_locks = 0;
    std::int64_t noise_fourfolds = 0;
    for (int t = 0; t < kTrials; ++t) {
        ExperimentConfig cfg = base;
        cfg.seed = 5000 + std::uint64_t(t);
        cfg.mean_loss_db = 200.0;  // nothing crosses; the remote stream is pure noise
        cfg.remote_clock_offset_ns = (draw.uniform() * 2.0 - 1.0) * 500e3;
        cfg.remote_clock_drift_ppm = (draw.uniform() * 2.0 - 1.0) * 10.0;
        auto res = pipeline::run(cfg);
        false_locks += res.sync.blocks_synced;
        noise_fourfolds += res.fourfolds;
    }

    bool ok = recovered_trials == kTrials && false_locks == 0 && noise_fourfolds == 0;
    report_line(8, ok, "clock recovery survives +-500 us offsets and +-10 ppm drift",
                fmt("%d/%d trials recovered >=95%% of true 4-folds (worst %.3f), %d false locks "
                    "and %lld events over %d pure-noise trials",
                    recovered_trials, kTrials, worst, false_locks,
                    static_cast<long long>(noise_fourfolds), kTrials));
}

void check_9_determinism() {
    ExperimentConfig cfg;
    cfg.duration_s = 600.0;
    cfg.seed = 7;
    auto a = report::render_report(pipeline::run(cfg));
    auto b = report::render_report(pipeline::run(cfg));
    bool identical = a == b;

    bool sampled = false, fast = false;
    double expanded_frac = 1.0;
    if (g_full_remote) {
        double slots = g_full_remote->cfg.duration_s * g_full_remote->cfg.rep_rate_hz;
        expanded_frac = double(g_full_remote->pulses_simulated) / slots;
        sampled = expanded_frac < 1e-3;
        fast = g_full_remote->elapsed_s <= 600.0;
    }

    report_line(9, identical && sampled && fast,
                "identical seeds give byte-identical reports; gap sampling keeps the full run fast",
                fmt("repeat reports %s, expanded %.2e of 1.3e12 pulse slots, full run %.1f s",
                    identical ? "identical" : "differ", expanded_frac,
                    g_full_remote ? g_full_remote->elapsed_s : -1.0));
}

}  // namespace

int main() {
    check_1_decomposition();
    check_2_bsm_branching();
    check_3_rate_budget();
    check_4_remote_yield();
    check_5_witness();
    check_6_chsh();
    check_7_sweeps();
    check_8_sync_robustness();
    check_9_determinism();

    std::printf("%d of 9 checks passed\n", 9 - g_failures);
    return g_failures;
}
