#include "swapsim/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "swapsim/link.hpp"
#include "swapsim/qstate.hpp"

namespace swapsim::pipeline {

namespace {

using config::ExperimentConfig;
using config::Measurement;
using config::Mode;
using link::Channel;
using link::DetectionEvent;
using qstate::BellKind;
using qstate::MeasBasis;

constexpr double kTick = link::ClockParams::tick_ns;

constexpr BellKind kKinds[4] = {BellKind::PsiMinus, BellKind::PsiPlus, BellKind::PhiPlus,
                                BellKind::PhiMinus};

// a/b are the H/V outputs of beam-splitter port 0, c/d of port 1
Channel bsm_channel(int port, int pol) {
    static constexpr Channel map[2][2] = {{Channel::A, Channel::B}, {Channel::C, Channel::D}};
    return map[port & 1][pol & 1];
}

struct Derived {
    source::SourceParams src;
    source::HomParams hom;
    double p = 0.0;      // pair probability per pulse and source
    double m_eff = 0.0;  // coherent-swap branch weight
    double w_bg = 0.0;   // post-selection background replacement probability
    std::vector<double> pmf, pmf_ge1, pmf_ge2;
    double q1 = 0.0;      // P(n >= 1)
    double q2plus = 0.0;  // P(n >= 2)
    double q_both = 0.0;
    double s_fake = 0.0;  // P(n >= 2 here, none from the other source)
    double eta = 1.0;

    double period_ns = 12.5;
    double d_bsm_ns = 0.0, d_alice_ns = 0.0, d_bob_ns = 0.0;
    double lag3_ns = 0.0;
    link::ClockParams clock_local{}, clock_remote{};
    link::DetectorParams det_station{}, det_remote{};
    link::ChannelParams channel{};
    std::int64_t pulses_per_block = 0;
    std::int64_t total_pulses = 0;
    int n_blocks = 0;
    bool remote = false;
};

std::vector<double> condition_at_least(const std::vector<double>& pmf, int n_min) {
    std::vector<double> out(pmf.size(), 0.0);
    double tail = 0.0;
    for (std::size_t n = static_cast<std::size_t>(n_min); n < pmf.size(); ++n) tail += pmf[n];
    if (tail <= 0.0) return out;
    for (std::size_t n = static_cast<std::size_t>(n_min); n < pmf.size(); ++n)
        out[n] = pmf[n] / tail;
    return out;
}

double pair_prob_of(const ExperimentConfig& cfg) {
    return cfg.pair_prob > 0.0
               ? cfg.pair_prob
               : source::calibrate_pair_prob(cfg.two_fold_hz, cfg.rep_rate_hz,
                                             cfg.det_efficiency);
}

Derived make_derived(const ExperimentConfig& cfg) {
    Derived d;
    d.remote = cfg.mode == Mode::Remote;
    d.p = pair_prob_of(cfg);
    d.src.pair_prob = d.p;
    d.src.intrinsic_visibility = cfg.intrinsic_visibility;
    d.src.stat_model = cfg.stat_model == config::StatModelCfg::Poissonian
                           ? source::StatModel::poissonian
                           : source::StatModel::thermal;
    d.hom.delta_l_mm = cfg.delta_l_mm;
    d.hom.center_wavelength_nm = cfg.center_wavelength_nm;
    d.hom.filter_fwhm_nm = cfg.filter_fwhm_nm;
    d.hom.dip_width_scale = cfg.dip_width_scale;
    d.m_eff = source::effective_overlap(d.src, d.hom);
    const double beta = cfg.multipair_noise_coeff * d.p;
    d.w_bg = beta / (1.0 + beta);
    d.pmf = source::pair_count_distribution(d.src, source::kMaxPairsPerPulse);
    d.pmf_ge1 = condition_at_least(d.pmf, 1);
    d.pmf_ge2 = condition_at_least(d.pmf, 2);
    d.q1 = 1.0 - d.pmf[0];
    d.q2plus = d.q1 - d.pmf[1];
    d.q_both = d.q1 * d.q1;
    d.s_fake = d.q2plus * d.pmf[0];
    d.eta = cfg.det_efficiency;

    d.period_ns = 1e9 / cfg.rep_rate_hz;
    d.d_bsm_ns = link::fiber_delay_ns(cfg.fiber_bsm_m);
    d.d_alice_ns = link::fiber_delay_ns(cfg.fiber_alice_m);
    d.d_bob_ns = d.remote
                     ? link::fiber_delay_ns(cfg.fiber_bob_tx_m) +
                           link::propagation_delay_ns(cfg.length_km)
                     : link::fiber_delay_ns(cfg.fiber_bob_local_m);
    d.lag3_ns = d.d_alice_ns - d.d_bsm_ns;

    d.clock_local = link::ClockParams{0.0, 0.0};
    d.clock_remote = d.remote ? link::ClockParams{cfg.remote_clock_offset_ns,
                                                  cfg.remote_clock_drift_ppm}
                              : d.clock_local;
    d.det_station.efficiency = d.eta;
    d.det_station.dark_rate_hz = cfg.dark_rate_local_hz;
    d.det_station.jitter_sigma_ps = cfg.jitter_sigma_ps;
    d.det_remote = d.det_station;
    d.det_remote.dark_rate_hz = cfg.dark_rate_remote_hz;
    d.channel.mean_loss_db = cfg.mean_loss_db;
    d.channel.scint_sigma_db = cfg.scint_sigma_db;
    d.channel.length_km = cfg.length_km;

    d.pulses_per_block = std::llround(cfg.block_seconds * cfg.rep_rate_hz);
    d.total_pulses = std::llround(cfg.duration_s * cfg.rep_rate_hz);
    d.n_blocks = std::max(
        1, static_cast<int>(std::ceil(cfg.duration_s / cfg.block_seconds - 1e-9)));
    return d;
}

// per-setting lookup tables so the hot pulse loop never touches Eigen
struct BlockSetting {
    MeasBasis basis_a, basis_b;
    std::array<std::vector<double>, 4> joint;  // per Bell kind: P(oa,ob), order 00,01,10,11
    std::array<double, 2> pa0{}, pb0{};        // P(outcome 0 | definite H or V photon)
};

std::vector<BlockSetting> make_cycle(const tagstream::SettingsSchedule& schedule) {
    std::vector<BlockSetting> cycle;
    cycle.reserve(schedule.pairs.size());
    for (const auto& [a, b] : schedule.pairs) {
        BlockSetting st;
        st.basis_a = a;
        st.basis_b = b;
        for (int k = 0; k < 4; ++k) {
            const auto rho =
                qstate::DensityOp::from_pure(qstate::bell_state(kKinds[k], {0, 3}));
            const auto probs = qstate::born_probabilities(rho, a, b);
            st.joint[static_cast<std::size_t>(k)].assign(probs.begin(), probs.end());
        }
        for (int pol = 0; pol < 2; ++pol) {
            st.pa0[static_cast<std::size_t>(pol)] = std::norm(a.ket(0)(pol));
            st.pb0[static_cast<std::size_t>(pol)] = std::norm(b.ket(0)(pol));
        }
        cycle.push_back(std::move(st));
    }
    return cycle;
}

struct SimContext {
    ExperimentConfig cfg;
    Derived d;
    tagstream::SettingsSchedule schedule;
    std::vector<BlockSetting> cycle;
};

SimContext make_context(const ExperimentConfig& cfg) {
    SimContext ctx;
    ctx.cfg = cfg;
    ctx.d = make_derived(cfg);
    ctx.schedule = build_schedule(cfg);
    ctx.cycle = make_cycle(ctx.schedule);
    return ctx;
}

struct PulseSink {
    std::vector<DetectionEvent>* local = nullptr;
    std::vector<DetectionEvent>* remote = nullptr;
};

struct Candidate {
    Channel channel;
    double base_ns;
    std::int8_t photon;
    bool remote_path;
};

// One laser pulse with n1/n2 pairs from the two sources. Single-pair-each pulses
// carry the interference physics; anything with extra pairs is treated as fully
// distinguishable light.
void simulate_pulse(const Derived& d, const BlockSetting& st, double loss_db,
                    std::int64_t pulse, int n1, int n2, SplitStream& rng,
                    const PulseSink& sink) {
    static const std::vector<double> quarters = {0.25, 0.25, 0.25, 0.25};
    const double t0 = static_cast<double>(pulse) * d.period_ns;

    Candidate cand[16];
    int nc = 0;
    auto add = [&](Channel ch, double delay, int photon, bool rem) {
        cand[nc++] = {ch, t0 + delay, static_cast<std::int8_t>(photon), rem};
    };
    auto outcome_for = [&rng](double p0) { return rng.uniform() < p0 ? 0 : 1; };

    if (n1 == 1 && n2 == 1) {
        int oa, ob;
        if (rng.bernoulli(d.m_eff)) {
            const int k = rng.discrete(quarters);
            if (k == 0) {  // antisymmetric: both ports fire, orthogonal polarizations
                const bool alt = rng.bernoulli(0.5);
                add(alt ? Channel::B : Channel::A, d.d_bsm_ns, 1, false);
                add(alt ? Channel::C : Channel::D, d.d_bsm_ns, 2, false);
            } else if (k == 1) {  // one port, orthogonal polarizations
                const bool alt = rng.bernoulli(0.5);
                add(alt ? Channel::C : Channel::A, d.d_bsm_ns, 1, false);
                add(alt ? Channel::D : Channel::B, d.d_bsm_ns, 2, false);
            } else {  // both photons bunch into a single detector
                const int port = rng.bernoulli(0.5) ? 1 : 0;
                const int pol = rng.bernoulli(0.5) ? 1 : 0;
                add(bsm_channel(port, pol), d.d_bsm_ns, 1, false);
            }
            const int joint = rng.discrete(st.joint[static_cast<std::size_t>(k)]);
            oa = joint >> 1;
            ob = joint & 1;
        } else {
            const int pol1 = rng.bernoulli(0.5) ? 1 : 0;
            const int pol2 = rng.bernoulli(0.5) ? 1 : 0;
            const int port1 = rng.bernoulli(0.5) ? 1 : 0;
            const int port2 = rng.bernoulli(0.5) ? 1 : 0;
            add(bsm_channel(port1, pol1), d.d_bsm_ns, 1, false);
            add(bsm_channel(port2, pol2), d.d_bsm_ns, 2, false);
            oa = outcome_for(st.pa0[static_cast<std::size_t>(1 - pol1)]);
            ob = outcome_for(st.pb0[static_cast<std::size_t>(1 - pol2)]);
        }
        // rate-preserving isotropic admixture; outcomes scramble, clicks stay
        if (d.w_bg > 0.0 && rng.bernoulli(d.w_bg)) {
            oa = rng.bernoulli(0.5) ? 1 : 0;
            ob = rng.bernoulli(0.5) ? 1 : 0;
        }
        add(oa ? Channel::F : Channel::E, d.d_alice_ns, 0, false);
        add(ob ? Channel::H : Channel::G, d.d_bob_ns, 3, d.remote);
    } else {
        for (int i = 0; i < n1; ++i) {
            const int pol1 = rng.bernoulli(0.5) ? 1 : 0;
            const int port = rng.bernoulli(0.5) ? 1 : 0;
            add(bsm_channel(port, pol1), d.d_bsm_ns, 1, false);
            const int oa = outcome_for(st.pa0[static_cast<std::size_t>(1 - pol1)]);
            add(oa ? Channel::F : Channel::E, d.d_alice_ns, 0, false);
        }
        for (int j = 0; j < n2; ++j) {
            const int pol2 = rng.bernoulli(0.5) ? 1 : 0;
            const int port = rng.bernoulli(0.5) ? 1 : 0;
            add(bsm_channel(port, pol2), d.d_bsm_ns, 2, false);
            const int ob = outcome_for(st.pb0[static_cast<std::size_t>(1 - pol2)]);
            add(ob ? Channel::H : Channel::G, d.d_bob_ns, 3, d.remote);
        }
    }

    struct Hit {
        Channel channel;
        double t_ns;
        std::int8_t photon;
        bool remote_path;
    };
    Hit hits[16];
    int nh = 0;
    for (int i = 0; i < nc; ++i) {
        if (cand[i].remote_path && !link::transmit(loss_db, rng)) continue;
        const auto& det = cand[i].remote_path ? d.det_remote : d.det_station;
        const auto t = link::detect(cand[i].base_ns, det, rng);
        if (!t) continue;
        hits[nh++] = {cand[i].channel, *t, cand[i].photon, cand[i].remote_path};
    }
    // one electronic click per detector per pulse: keep the earliest arrival
    for (int i = 0; i < nh; ++i) {
        bool shadowed = false;
        for (int j = 0; j < nh; ++j) {
            if (j == i || hits[j].channel != hits[i].channel) continue;
            if (hits[j].t_ns < hits[i].t_ns || (hits[j].t_ns == hits[i].t_ns && j < i))
                shadowed = true;
        }
        if (shadowed) continue;
        DetectionEvent ev;
        ev.channel = hits[i].channel;
        ev.truth = link::Truth{pulse, hits[i].photon};
        const bool rem = hits[i].remote_path && d.remote;
        ev.tag = link::apply_clock(hits[i].t_ns, rem ? d.clock_remote : d.clock_local);
        auto* out = rem ? sink.remote : sink.local;
        if (out) out->push_back(ev);
    }
}

template <typename F>
void for_sampled_pulses(std::uint64_t seed, std::uint64_t chain_tag, int block,
                        std::int64_t lo, std::int64_t hi, double prob, F&& f) {
    if (prob <= 0.0) return;
    auto chain = SplitStream::derive(
        seed, {stream_tag::pulses, chain_tag, static_cast<std::uint64_t>(block)});
    std::int64_t idx = lo + chain.geometric_failures(prob);
    while (idx < hi) {
        f(idx, chain);
        idx += 1 + chain.geometric_failures(prob);
    }
}

void sort_events(std::vector<DetectionEvent>& evs) {
    std::sort(evs.begin(), evs.end(), [](const DetectionEvent& a, const DetectionEvent& b) {
        if (a.tag != b.tag) return a.tag < b.tag;
        if (a.channel != b.channel) return a.channel < b.channel;
        const std::int64_t pa = a.truth ? a.truth->pulse : -1;
        const std::int64_t pb = b.truth ? b.truth->pulse : -1;
        return pa < pb;
    });
}

void apply_stream_dead_time(std::vector<DetectionEvent>& evs, double dead_ns) {
    if (dead_ns <= 0.0) return;
    const std::int64_t dead_ticks = std::llround(dead_ns / kTick);
    std::array<std::int64_t, 9> last;
    last.fill(std::numeric_limits<std::int64_t>::min() / 4);
    std::size_t kept = 0;
    for (const auto& ev : evs) {
        auto& prev = last[static_cast<std::size_t>(ev.channel)];
        if (ev.tag - prev < dead_ticks) continue;
        prev = ev.tag;
        evs[kept++] = ev;
    }
    evs.resize(kept);
}

BlockStreams gen_block(const SimContext& ctx, int block, bool want_local, bool want_remote) {
    const auto& cfg = ctx.cfg;
    const auto& d = ctx.d;
    if (block < 0 || block >= d.n_blocks) throw std::invalid_argument("block out of range");

    const std::int64_t lo = static_cast<std::int64_t>(block) * d.pulses_per_block;
    const std::int64_t hi = std::min(lo + d.pulses_per_block, d.total_pulses);
    const double block_start_ns = static_cast<double>(lo) * d.period_ns;
    const double dur_blk_s = static_cast<double>(hi - lo) * d.period_ns * 1e-9;
    const auto& st = ctx.cycle[static_cast<std::size_t>(block) % ctx.cycle.size()];

    BlockStreams bs;
    PulseSink sink{want_local ? &bs.local : nullptr,
                   (want_remote && d.remote) ? &bs.remote : nullptr};

    double loss_db = 0.0;
    if (d.remote) {
        auto rng_loss = SplitStream::derive(
            cfg.seed, {stream_tag::block_loss, static_cast<std::uint64_t>(block)});
        loss_db = link::sample_block_loss(d.channel, rng_loss);
    }

    for_sampled_pulses(cfg.seed, 1, block, lo, hi, d.q_both,
                       [&](std::int64_t idx, SplitStream&) {
                           auto rng = SplitStream::derive(
                               cfg.seed, {stream_tag::detect, static_cast<std::uint64_t>(idx)});
                           const int n1 = rng.discrete(d.pmf_ge1);
                           const int n2 = rng.discrete(d.pmf_ge1);
                           simulate_pulse(d, st, loss_db, idx, n1, n2, rng, sink);
                           ++bs.pulses;
                       });

    if (cfg.unpaired_singles) {
        // lone multi-pair emissions still fake interferometer patterns
        for_sampled_pulses(cfg.seed, 2, block, lo, hi, d.s_fake,
                           [&](std::int64_t idx, SplitStream&) {
                               auto rng = SplitStream::derive(
                                   cfg.seed,
                                   {stream_tag::detect, static_cast<std::uint64_t>(idx)});
                               const int n1 = rng.discrete(d.pmf_ge2);
                               simulate_pulse(d, st, loss_db, idx, n1, 0, rng, sink);
                               ++bs.pulses;
                           });
        for_sampled_pulses(cfg.seed, 3, block, lo, hi, d.s_fake,
                           [&](std::int64_t idx, SplitStream&) {
                               auto rng = SplitStream::derive(
                                   cfg.seed,
                                   {stream_tag::detect, static_cast<std::uint64_t>(idx)});
                               const int n2 = rng.discrete(d.pmf_ge2);
                               simulate_pulse(d, st, loss_db, idx, 0, n2, rng, sink);
                               ++bs.pulses;
                           });
    }

    if (d.remote && cfg.unpaired_singles && sink.remote) {
        // single-source pulses seen only at the far station, thinned to the
        // post-loss click rate; double clicks from one pulse are ~(T*eta)^2 and skipped
        const double t_eff = std::pow(10.0, -loss_db / 10.0) * d.eta;
        double click_given_pulse = 0.0;
        for (std::size_t n = 1; n < d.pmf.size(); ++n)
            click_given_pulse +=
                d.pmf[n] * (1.0 - std::pow(1.0 - t_eff, static_cast<double>(n)));
        const double s_bob = d.pmf[0] * click_given_pulse;
        const double jitter_ns = d.det_remote.jitter_sigma_ps * 1e-3;
        for_sampled_pulses(cfg.seed, 4, block, lo, hi, s_bob,
                           [&](std::int64_t idx, SplitStream& chain) {
                               const int ob = chain.bernoulli(0.5) ? 1 : 0;
                               double t = static_cast<double>(idx) * d.period_ns + d.d_bob_ns;
                               if (jitter_ns > 0.0) t += chain.normal(0.0, jitter_ns);
                               DetectionEvent ev;
                               ev.channel = ob ? Channel::H : Channel::G;
                               ev.tag = link::apply_clock(t, d.clock_remote);
                               ev.truth = link::Truth{idx, 3};
                               sink.remote->push_back(ev);
                               ++bs.pulses;
                           });
    }

    auto add_darks = [&](Channel ch, const link::DetectorParams& det,
                         const link::ClockParams& clock, std::vector<DetectionEvent>& out) {
        if (det.dark_rate_hz <= 0.0) return;
        auto rng = SplitStream::derive(cfg.seed,
                                       {stream_tag::darks, static_cast<std::uint64_t>(block),
                                        static_cast<std::uint64_t>(ch)});
        for (double t : link::dark_events(det, dur_blk_s, rng)) {
            DetectionEvent ev;
            ev.channel = ch;
            ev.tag = link::apply_clock(block_start_ns + t, clock);
            out.push_back(ev);
        }
    };
    if (want_local) {
        for (int c = 0; c < 6; ++c)
            add_darks(static_cast<Channel>(c), d.det_station, d.clock_local, bs.local);
        if (!d.remote) {
            add_darks(Channel::G, d.det_station, d.clock_local, bs.local);
            add_darks(Channel::H, d.det_station, d.clock_local, bs.local);
        }
    }
    if (want_remote && d.remote) {
        add_darks(Channel::G, d.det_remote, d.clock_remote, bs.remote);
        add_darks(Channel::H, d.det_remote, d.clock_remote, bs.remote);
    }

    sort_events(bs.local);
    sort_events(bs.remote);
    apply_stream_dead_time(bs.local, cfg.dead_time_ns);
    apply_stream_dead_time(bs.remote, cfg.dead_time_ns);
    return bs;
}

int witness_basis_index(const MeasBasis& basis) {
    switch (basis.kind) {
        case MeasBasis::Kind::HV: return 0;
        case MeasBasis::Kind::PM: return 1;
        case MeasBasis::Kind::RL: return 2;
        default: throw std::logic_error("witness statistics on a linear setting");
    }
}

void finalize_stats(RunResult& res) {
    const bool witness_mode = res.cfg.measurement == Measurement::Witness;
    res.truth_fourfolds = 0;
    for (const auto& ev : res.events) {
        KindResult& kr =
            ev.bsm_kind == tagstream::BsmKind::PsiMinus12 ? res.singlet : res.triplet;
        ++kr.events;
        if (witness_mode) {
            kr.basis_counts[static_cast<std::size_t>(witness_basis_index(ev.basis_a))].add(
                ev.alice_outcome, ev.bob_outcome);
        } else {
            kr.setting_counts[static_cast<std::size_t>(ev.block % 4)].add(ev.alice_outcome,
                                                                          ev.bob_outcome);
        }
        if (ev.truth_matched()) ++res.truth_fourfolds;
    }

    const tagstream::BsmKind kinds[2] = {tagstream::BsmKind::PsiMinus12,
                                         tagstream::BsmKind::PsiPlus12};
    KindResult* results[2] = {&res.singlet, &res.triplet};
    for (int i = 0; i < 2; ++i) {
        KindResult& kr = *results[i];
        auto rng = SplitStream::derive(res.cfg.seed,
                                       {stream_tag::bootstrap, static_cast<std::uint64_t>(i)});
        if (witness_mode) {
            const auto signs = witness_signs(kinds[i]);
            double v_sum = 0.0;
            for (std::size_t b = 0; b < 3; ++b) {
                kr.vis[b] = stats::signed_visibility(kr.basis_counts[b], signs[b]);
                v_sum += kr.vis[b].value;
            }
            kr.mean_visibility = v_sum / 3.0;
            kr.witness = stats::witness(kr.vis[0], kr.vis[1], kr.vis[2]);
            if (kr.events > 0)
                kr.witness_bootstrap_sigma = stats::bootstrap_sigma_witness(
                    kr.basis_counts, signs, res.cfg.bootstrap_resamples, rng);
        } else {
            const auto signs = chsh_signs(kinds[i]);
            kr.chsh = stats::chsh(kr.setting_counts, signs);
            if (kr.events > 0)
                kr.chsh_bootstrap_sigma = stats::bootstrap_sigma_chsh(
                    kr.setting_counts, signs, res.cfg.bootstrap_resamples, rng);
        }
    }
    res.fourfolds = static_cast<std::int64_t>(res.events.size());
}

void fill_sync_summary(RunResult& res) {
    auto& s = res.sync;
    s.blocks_total = static_cast<int>(res.sync_solutions.size());
    s.blocks_synced = 0;
    double off_sum = 0.0, drift_sum = 0.0;
    double sig_min = 0.0, sig_max = 0.0;
    for (const auto& sol : res.sync_solutions) {
        if (!sol.synced) continue;
        if (s.blocks_synced == 0) {
            sig_min = sig_max = sol.significance;
        } else {
            sig_min = std::min(sig_min, sol.significance);
            sig_max = std::max(sig_max, sol.significance);
        }
        ++s.blocks_synced;
        off_sum += sol.offset_ns;
        drift_sum += sol.drift_ppm;
    }
    if (s.blocks_synced > 0) {
        s.mean_offset_ns = off_sum / s.blocks_synced;
        s.mean_drift_ppm = drift_sum / s.blocks_synced;
        s.min_significance = sig_min;
        s.max_significance = sig_max;
    }
}

void fill_separation(RunResult& res, const Derived& d) {
    if (!d.remote) return;
    res.alice_bob_dt_ns = d.d_bob_ns - d.d_alice_ns;
    res.alice_bob_spacelike = stats::spacelike_check(res.cfg.length_km, res.alice_bob_dt_ns);
    res.bsm_bob_dt_ns = d.d_bob_ns - d.d_bsm_ns;
    res.bsm_bob_spacelike = stats::spacelike_check(res.cfg.length_km, res.bsm_bob_dt_ns);
}

void require_valid(const ExperimentConfig& cfg) {
    const auto bad = config::validate(cfg);
    if (bad.empty()) return;
    std::ostringstream msg;
    msg << "invalid configuration:";
    for (const auto& b : bad) msg << "\n  " << b;
    throw std::invalid_argument(msg.str());
}

}  // namespace

tagstream::SettingsSchedule build_schedule(const ExperimentConfig& cfg) {
    tagstream::SettingsSchedule schedule;
    schedule.block_seconds = cfg.block_seconds;
    if (cfg.measurement == Measurement::Witness) {
        schedule.pairs = {{MeasBasis::hv(), MeasBasis::hv()},
                          {MeasBasis::pm(), MeasBasis::pm()},
                          {MeasBasis::rl(), MeasBasis::rl()}};
    } else {
        const double a0 = 0.0, a1 = M_PI / 4.0, b0 = M_PI / 8.0, b1 = 3.0 * M_PI / 8.0;
        schedule.pairs = {{MeasBasis::linear(a0), MeasBasis::linear(b0)},
                          {MeasBasis::linear(a0), MeasBasis::linear(b1)},
                          {MeasBasis::linear(a1), MeasBasis::linear(b0)},
                          {MeasBasis::linear(a1), MeasBasis::linear(b1)}};
    }
    return schedule;
}

std::array<int, 3> witness_signs(tagstream::BsmKind kind) {
    // expected correlation sign per basis (hv, pm, rl) of the conditioned pair
    return kind == tagstream::BsmKind::PsiMinus12 ? std::array<int, 3>{-1, -1, -1}
                                                  : std::array<int, 3>{-1, 1, 1};
}

std::array<int, 4> chsh_signs(tagstream::BsmKind kind) {
    return kind == tagstream::BsmKind::PsiMinus12 ? std::array<int, 4>{1, -1, 1, 1}
                                                  : std::array<int, 4>{-1, 1, 1, 1};
}

ClosedFormBudget closed_form_budget(const ExperimentConfig& cfg) {
    ClosedFormBudget b;
    b.pair_prob = pair_prob_of(cfg);
    source::SourceParams src;
    src.pair_prob = b.pair_prob;
    src.stat_model = cfg.stat_model == config::StatModelCfg::Poissonian
                         ? source::StatModel::poissonian
                         : source::StatModel::thermal;
    const auto pmf = source::pair_count_distribution(src, source::kMaxPairsPerPulse);
    b.emit_prob = 1.0 - pmf[0];
    const double eta = cfg.det_efficiency;
    const double t = std::pow(10.0, -cfg.mean_loss_db / 10.0);
    // half of both-emission pulses produce a two-detector interferometer signature
    b.bsm_rate_hz = cfg.rep_rate_hz * b.emit_prob * b.emit_prob * 0.5 * eta * eta;
    b.fourfold_local_hz = b.bsm_rate_hz * eta * eta;
    b.fourfold_remote_hz = b.bsm_rate_hz * eta * t * eta;
    b.expected_remote_fourfolds = b.fourfold_remote_hz * cfg.duration_s;
    const double threefold_hz = b.bsm_rate_hz * eta;
    const double bob_stream_hz =
        cfg.rep_rate_hz * pmf[0] * b.pair_prob * t * eta + 2.0 * cfg.dark_rate_remote_hz;
    b.accidentals_per_window_hz =
        stats::accidental_rate_hz(threefold_hz, bob_stream_hz, cfg.fourfold_window_ns);
    return b;
}

double calibrate_intrinsic_visibility(const ExperimentConfig& cfg, double target_mean_v) {
    if (target_mean_v <= 0.0 || target_mean_v > 1.0)
        throw std::invalid_argument("target mean visibility must lie in (0, 1]");
    const double p = pair_prob_of(cfg);
    const double beta = cfg.multipair_noise_coeff * p;
    source::HomParams hom;
    hom.delta_l_mm = cfg.delta_l_mm;
    hom.center_wavelength_nm = cfg.center_wavelength_nm;
    hom.filter_fwhm_nm = cfg.filter_fwhm_nm;
    hom.dip_width_scale = cfg.dip_width_scale;
    const double overlap = source::hom_overlap(hom);
    if (overlap <= 0.0) throw std::invalid_argument("interference overlap is zero");
    // mean three-basis visibility of the recovered pairs is (1 + 2 m) / (3 (1 + beta))
    return (3.0 * target_mean_v * (1.0 + beta) - 1.0) / (2.0 * overlap);
}

BlockStreams generate_block(const ExperimentConfig& cfg, int block) {
    require_valid(cfg);
    const SimContext ctx = make_context(cfg);
    return gen_block(ctx, block, true, true);
}

RunResult run(const ExperimentConfig& cfg) {
    require_valid(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const SimContext ctx = make_context(cfg);
    const Derived& d = ctx.d;

    RunResult res;
    res.cfg = cfg;
    res.budget = closed_form_budget(cfg);

    std::vector<tagstream::ThreeFold> tfs;
    std::vector<double> tf_ns, remote_ns;

    for (int block = 0; block < d.n_blocks; ++block) {
        auto bs = gen_block(ctx, block, true, d.remote);
        res.pulses_simulated += bs.pulses;
        res.local_events += static_cast<std::int64_t>(bs.local.size());
        res.remote_events += static_cast<std::int64_t>(bs.remote.size());

        auto recs = tagstream::find_bsm(bs.local, cfg.bsm_window_ns);
        auto tf = tagstream::threefold(recs, bs.local, cfg.threefold_window_ns, d.lag3_ns);
        res.bsm_records += static_cast<std::int64_t>(recs.size());

        if (d.remote) {
            for (const auto& t : tf) {
                tf_ns.push_back(static_cast<double>(t.tag) * kTick);
                tfs.push_back(t);
            }
            for (const auto& ev : bs.remote)
                remote_ns.push_back(static_cast<double>(ev.tag) * kTick);
        } else {
            res.threefolds += static_cast<std::int64_t>(tf.size());
            tagstream::TagStream blk;
            blk.recorder = tagstream::Recorder::LaPalma;
            blk.events = std::move(bs.local);
            blk.block_seconds = cfg.block_seconds;
            auto four = tagstream::fourfold(tf, blk, cfg.fourfold_window_ns, ctx.schedule,
                                            cfg.sideband_offset_ns, d.d_bob_ns - d.d_bsm_ns);
            res.events.insert(res.events.end(), four.events.begin(), four.events.end());
            res.sideband_plus += four.sideband_plus;
            res.sideband_minus += four.sideband_minus;
        }
    }

    if (d.remote) {
        res.threefolds = static_cast<std::int64_t>(tfs.size());
        tagstream::SyncOptions so;
        so.search_span_us = cfg.sync_search_span_us;
        so.bin_ns = cfg.sync_bin_ns;
        so.min_significance = cfg.sync_min_significance;
        so.min_peak_count = cfg.sync_min_peak_count;
        so.block_seconds = cfg.block_seconds;
        so.duration_s = cfg.duration_s;
        so.center_ns = d.d_bob_ns - d.d_bsm_ns;  // path delay is known; clock offset is not
        res.sync_solutions = tagstream::synchronize(tf_ns, remote_ns, so);
        remote_ns.clear();
        remote_ns.shrink_to_fit();

        // second pass: regenerate each block's far-station events, retime them, and
        // keep only the neighborhood of a recovered three-fold
        tagstream::TagStream filtered;
        filtered.recorder = tagstream::Recorder::Tenerife;
        filtered.block_seconds = cfg.block_seconds;
        const std::int64_t keep =
            std::llround((cfg.sideband_offset_ns + cfg.fourfold_window_ns) / kTick) + 4;
        std::size_t k = 0;
        for (int block = 0; block < d.n_blocks; ++block) {
            auto bs = gen_block(ctx, block, false, true);
            tagstream::TagStream blk;
            blk.recorder = tagstream::Recorder::Tenerife;
            blk.events = std::move(bs.remote);
            blk.block_seconds = cfg.block_seconds;
            auto corr = tagstream::drift_correct(res.sync_solutions, blk);
            for (const auto& ev : corr.events) {
                while (k < tfs.size() && tfs[k].tag < ev.tag - keep) ++k;
                if (k < tfs.size() && tfs[k].tag <= ev.tag + keep)
                    filtered.events.push_back(ev);
            }
        }
        sort_events(filtered.events);
        auto four = tagstream::fourfold(tfs, filtered, cfg.fourfold_window_ns, ctx.schedule,
                                        cfg.sideband_offset_ns, 0.0);
        res.events = std::move(four.events);
        res.sideband_plus = four.sideband_plus;
        res.sideband_minus = four.sideband_minus;
    }

    res.accidental_estimate =
        static_cast<double>(res.sideband_plus + res.sideband_minus) / 2.0;
    finalize_stats(res);
    fill_sync_summary(res);
    fill_separation(res, d);
    res.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

RunResult analyze(const ExperimentConfig& cfg, const tagstream::TagStream& local,
                  const std::optional<tagstream::TagStream>& remote) {
    require_valid(cfg);
    if (cfg.mode == Mode::Remote && !remote)
        throw std::invalid_argument("analyze: remote mode needs a remote stream");
    const auto t0 = std::chrono::steady_clock::now();
    const SimContext ctx = make_context(cfg);
    const Derived& d = ctx.d;
    local.validate();

    RunResult res;
    res.cfg = cfg;
    res.budget = closed_form_budget(cfg);
    res.local_events = static_cast<std::int64_t>(local.events.size());

    auto recs = tagstream::find_bsm(local.events, cfg.bsm_window_ns);
    auto tfs = tagstream::threefold(recs, local.events, cfg.threefold_window_ns, d.lag3_ns);
    res.bsm_records = static_cast<std::int64_t>(recs.size());
    res.threefolds = static_cast<std::int64_t>(tfs.size());

    tagstream::FourfoldResult four;
    if (cfg.mode == Mode::Remote) {
        remote->validate();
        res.remote_events = static_cast<std::int64_t>(remote->events.size());
        std::vector<double> tf_ns, remote_ns;
        tf_ns.reserve(tfs.size());
        for (const auto& t : tfs) tf_ns.push_back(static_cast<double>(t.tag) * kTick);
        remote_ns.reserve(remote->events.size());
        for (const auto& ev : remote->events)
            remote_ns.push_back(static_cast<double>(ev.tag) * kTick);
        tagstream::SyncOptions so;
        so.search_span_us = cfg.sync_search_span_us;
        so.bin_ns = cfg.sync_bin_ns;
        so.min_significance = cfg.sync_min_significance;
        so.min_peak_count = cfg.sync_min_peak_count;
        so.block_seconds = cfg.block_seconds;
        so.duration_s = cfg.duration_s;
        so.center_ns = d.d_bob_ns - d.d_bsm_ns;  // path delay is known; clock offset is not
        res.sync_solutions = tagstream::synchronize(tf_ns, remote_ns, so);
        auto corr = tagstream::drift_correct(res.sync_solutions, *remote);
        four = tagstream::fourfold(tfs, corr, cfg.fourfold_window_ns, ctx.schedule,
                                   cfg.sideband_offset_ns, 0.0);
    } else {
        four = tagstream::fourfold(tfs, local, cfg.fourfold_window_ns, ctx.schedule,
                                   cfg.sideband_offset_ns, d.d_bob_ns - d.d_bsm_ns);
    }
    res.events = std::move(four.events);
    res.sideband_plus = four.sideband_plus;
    res.sideband_minus = four.sideband_minus;
    res.accidental_estimate =
        static_cast<double>(res.sideband_plus + res.sideband_minus) / 2.0;
    finalize_stats(res);
    fill_sync_summary(res);
    fill_separation(res, d);
    res.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

std::vector<SweepPoint> sweep(const ExperimentConfig& base, const std::string& key,
                              const std::vector<std::string>& values) {
    if (values.empty()) throw std::invalid_argument("sweep: no values given");
    std::vector<SweepPoint> out;
    out.reserve(values.size());
    for (const auto& value : values) {
        ExperimentConfig cfg = base;
        config::apply_kv(cfg, key, value);
        const auto budget = closed_form_budget(cfg);
        const double rate = cfg.mode == Mode::Local ? budget.fourfold_local_hz
                                                    : budget.fourfold_remote_hz;
        if (rate > 0.0) {
            const auto cycle = cfg.measurement == Measurement::Witness ? 3 : 4;
            const double want_s = cfg.sweep_events_target / rate;
            const auto blocks = static_cast<std::int64_t>(
                std::ceil(want_s / (cfg.block_seconds * cycle)) * cycle);
            cfg.duration_s = static_cast<double>(std::max<std::int64_t>(blocks, cycle)) *
                             cfg.block_seconds;
        }
        out.push_back({value, run(cfg)});
    }
    return out;
}

}  // namespace swapsim::pipeline
