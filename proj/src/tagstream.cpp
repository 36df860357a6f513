#include "swapsim/tagstream.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>

namespace swapsim::tagstream {

namespace {

constexpr double kTick = link::ClockParams::tick_ns;

std::int64_t ticks_for(double ns) { return std::llround(ns / kTick); }

bool is_bsm_channel(link::Channel c) {
    return c == link::Channel::A || c == link::Channel::B || c == link::Channel::C ||
           c == link::Channel::D;
}

// Same output port = same-polarization bunching, no coincidence signature.
std::optional<BsmKind> classify_pattern(link::Channel x, link::Channel y) {
    if (x > y) std::swap(x, y);
    using link::Channel;
    if (x == Channel::A && y == Channel::D) return BsmKind::PsiMinus12;
    if (x == Channel::B && y == Channel::C) return BsmKind::PsiMinus12;
    if (x == Channel::A && y == Channel::B) return BsmKind::PsiPlus12;
    if (x == Channel::C && y == Channel::D) return BsmKind::PsiPlus12;
    return std::nullopt;  // a&c, b&d, or a retrigger
}

void require_sorted(std::span<const link::DetectionEvent> events, const char* who) {
    for (std::size_t i = 1; i < events.size(); ++i) {
        if (events[i].tag < events[i - 1].tag)
            throw std::invalid_argument(std::string(who) + ": time tags must be sorted");
    }
}

std::optional<std::int64_t> shared_pulse(const std::optional<link::Truth>& a,
                                         const std::optional<link::Truth>& b) {
    if (a && b && a->pulse >= 0 && a->pulse == b->pulse) return a->pulse;
    return std::nullopt;
}

// Offset as a piecewise-linear function of time; ends extrapolate along the
// outermost segment so a steady drift stays corrected past the last anchor.
struct LinearModel {
    std::vector<double> ts, offs;

    double eval(double t) const {
        if (ts.empty()) return 0.0;
        if (ts.size() == 1) return offs[0];
        std::size_t hi = std::upper_bound(ts.begin(), ts.end(), t) - ts.begin();
        std::size_t i = hi == 0 ? 0 : (hi >= ts.size() ? ts.size() - 2 : hi - 1);
        double span = ts[i + 1] - ts[i];
        if (span <= 0.0) return offs[i];
        double f = (t - ts[i]) / span;
        return offs[i] + f * (offs[i + 1] - offs[i]);
    }

    double slope_at(double t) const {
        if (ts.size() < 2) return 0.0;
        std::size_t hi = std::upper_bound(ts.begin(), ts.end(), t) - ts.begin();
        std::size_t i = hi == 0 ? 0 : (hi >= ts.size() ? ts.size() - 2 : hi - 1);
        double span = ts[i + 1] - ts[i];
        return span > 0.0 ? (offs[i + 1] - offs[i]) / span : 0.0;
    }

    // The model maps station time to lag, but a raw far-site tag is station time
    // plus that same lag. Two fixed-point steps solve for the station time; skipping
    // this would bias fast-drift corrections by slope*lag, several ns at 10 ppm.
    double eval_at_remote(double t_remote) const {
        double o = eval(t_remote);
        o = eval(t_remote - o);
        return eval(t_remote - o);
    }
};

struct Anchor {
    double t_ns = 0.0;
    double offset_ns = 0.0;
    double significance = 0.0;
    int first_block = 0;
    int last_block = 0;
};

// Each model point is a local least-squares line over up to 13 neighboring anchors,
// evaluated at the anchor's own time. Raw anchor centroids carry bin-scale noise, and
// interpolating them directly puts slope errors comparable to the drift itself into
// the model; the local fit averages that noise away while still following slow wander.
LinearModel model_from(const std::vector<Anchor>& anchors) {
    LinearModel m;
    const int n = static_cast<int>(anchors.size());
    m.ts.reserve(anchors.size());
    m.offs.reserve(anchors.size());
    constexpr int kHalf = 6;
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - kHalf);
        const int hi = std::min(n - 1, i + kHalf);
        double sw = 0.0, st = 0.0, so = 0.0, stt = 0.0, sto = 0.0;
        for (int j = lo; j <= hi; ++j) {
            const double t = anchors[static_cast<std::size_t>(j)].t_ns - anchors[static_cast<std::size_t>(i)].t_ns;
            const double o = anchors[static_cast<std::size_t>(j)].offset_ns;
            sw += 1.0;
            st += t;
            so += o;
            stt += t * t;
            sto += t * o;
        }
        const double det = sw * stt - st * st;
        const double val = det > 0.0 ? (stt * so - st * sto) / det : so / sw;
        m.ts.push_back(anchors[static_cast<std::size_t>(i)].t_ns);
        m.offs.push_back(val);
    }
    return m;
}

std::span<const double> slice(const std::vector<double>& v, double lo, double hi) {
    auto b = std::lower_bound(v.begin(), v.end(), lo);
    auto e = std::upper_bound(b, v.end(), hi);
    return {v.data() + (b - v.begin()), static_cast<std::size_t>(e - b)};
}

}  // namespace

void TagStream::validate() const {
    require_sorted(events, "TagStream");
    if (block_seconds <= 0.0) throw std::invalid_argument("block_seconds must be positive");
}

std::vector<BsmRecord> find_bsm(std::span<const link::DetectionEvent> events, double window_ns) {
    if (window_ns <= 0.0) throw std::invalid_argument("find_bsm: window must be positive");
    require_sorted(events, "find_bsm");

    struct Click {
        std::int64_t tag;
        link::Channel channel;
        std::optional<link::Truth> truth;
    };
    std::vector<Click> clicks;
    clicks.reserve(events.size());
    for (const auto& ev : events) {
        if (is_bsm_channel(ev.channel)) clicks.push_back({ev.tag, ev.channel, ev.truth});
    }

    const std::int64_t limit = ticks_for(window_ns / 2.0);
    std::vector<BsmRecord> records;
    std::vector<char> used(clicks.size(), 0);
    for (std::size_t i = 0; i < clicks.size(); ++i) {
        if (used[i]) continue;
        for (std::size_t j = i + 1; j < clicks.size(); ++j) {
            if (clicks[j].tag - clicks[i].tag > limit) break;
            if (used[j]) continue;
            // nearest-in-time partner; an invalid combination consumes both clicks,
            // rejecting the whole multi-photon pattern rather than re-pairing
            used[i] = used[j] = 1;
            if (auto kind = classify_pattern(clicks[i].channel, clicks[j].channel)) {
                BsmRecord rec;
                rec.tag = clicks[i].tag;
                rec.kind = *kind;
                rec.first_channel = clicks[i].channel;
                rec.second_channel = clicks[j].channel;
                rec.truth_pulse = shared_pulse(clicks[i].truth, clicks[j].truth);
                records.push_back(rec);
            }
            break;
        }
    }
    return records;
}

std::vector<ThreeFold> threefold(std::span<const BsmRecord> records,
                                 std::span<const link::DetectionEvent> events, double window_ns,
                                 double lag_ns) {
    if (window_ns <= 0.0) throw std::invalid_argument("threefold: window must be positive");
    require_sorted(events, "threefold");

    struct Click {
        std::int64_t tag;
        link::Channel channel;
        std::optional<link::Truth> truth;
    };
    std::vector<Click> alice;
    alice.reserve(events.size() / 4);
    for (const auto& ev : events) {
        if (ev.channel == link::Channel::E || ev.channel == link::Channel::F)
            alice.push_back({ev.tag, ev.channel, ev.truth});
    }

    const std::int64_t limit = ticks_for(window_ns / 2.0);
    const std::int64_t lag = ticks_for(lag_ns);
    std::vector<ThreeFold> out;
    std::size_t j = 0;
    for (const auto& rec : records) {
        const std::int64_t center = rec.tag + lag;
        while (j < alice.size() && alice[j].tag < center - limit) ++j;
        if (j == alice.size() || alice[j].tag > center + limit) continue;
        ThreeFold tf;
        tf.tag = rec.tag;
        tf.kind = rec.kind;
        tf.alice_channel = alice[j].channel;
        tf.truth_pulse = rec.truth_pulse && alice[j].truth && alice[j].truth->pulse >= 0 &&
                                 *rec.truth_pulse == alice[j].truth->pulse
                             ? rec.truth_pulse
                             : std::nullopt;
        out.push_back(tf);
        ++j;  // analyzer click consumed
    }
    return out;
}

XcorrResult xcorr_offset(std::span<const double> local_ns, std::span<const double> remote_ns,
                         double search_span_us, double bin_ns, double center_ns,
                         double min_significance, int min_peak_count) {
    if (search_span_us <= 0.0 || bin_ns <= 0.0)
        throw std::invalid_argument("xcorr_offset: span and bin must be positive");
    const double span_ns = search_span_us * 1000.0;
    const auto nbins = static_cast<std::size_t>(std::ceil(2.0 * span_ns / bin_ns));
    if (nbins < 8 || nbins > 5'000'000)
        throw std::invalid_argument("xcorr_offset: bin count out of range");

    std::vector<std::int64_t> counts(nbins, 0);
    std::size_t j_lo = 0;
    for (double t : local_ns) {
        const double lo = t + center_ns - span_ns;
        const double hi = t + center_ns + span_ns;
        while (j_lo < remote_ns.size() && remote_ns[j_lo] < lo) ++j_lo;
        for (std::size_t j = j_lo; j < remote_ns.size() && remote_ns[j] < hi; ++j) {
            auto b = static_cast<std::size_t>((remote_ns[j] - t - center_ns + span_ns) / bin_ns);
            if (b < nbins) ++counts[b];
        }
    }

    std::size_t peak = 0;
    for (std::size_t b = 1; b < nbins; ++b)
        if (counts[b] > counts[peak]) peak = b;

    // background statistics exclude the peak and its direct neighbors
    double sum = 0.0, sum2 = 0.0;
    std::size_t n_off = 0;
    for (std::size_t b = 0; b < nbins; ++b) {
        if (b + 1 >= peak && b <= peak + 1) continue;
        sum += static_cast<double>(counts[b]);
        sum2 += static_cast<double>(counts[b]) * static_cast<double>(counts[b]);
        ++n_off;
    }
    const double mean = n_off ? sum / static_cast<double>(n_off) : 0.0;
    double var = n_off ? sum2 / static_cast<double>(n_off) - mean * mean : 0.0;
    if (var < 1.0) var = std::max(mean, 1.0);  // Poisson floor for sparse histograms

    XcorrResult res;
    res.peak_count = counts[peak];
    res.background_mean = mean;
    res.significance = (static_cast<double>(counts[peak]) - mean) / std::sqrt(var);

    // a z-score alone is far too generous in the low-count regime, so the peak must
    // also beat a Bonferroni-corrected Poisson tail bound against the background mean
    bool tail_ok = false;
    const double k = static_cast<double>(counts[peak]);
    const double mu = std::max(mean, 1e-3);
    if (k > mu) {
        double log_tail = k * std::log(mu) - mu - std::lgamma(k + 1.0);
        const double rho = mu / (k + 1.0);
        if (rho < 1.0) log_tail -= std::log1p(-rho);
        tail_ok = log_tail <= std::log(1e-6 / static_cast<double>(nbins));
    }
    res.significant = tail_ok && res.significance >= min_significance &&
                      counts[peak] >= static_cast<std::int64_t>(min_peak_count);

    // centroid over the peak neighborhood recovers sub-bin position
    double w_sum = 0.0, wx_sum = 0.0;
    for (std::size_t b = peak >= 2 ? peak - 2 : 0; b < std::min(peak + 3, nbins); ++b) {
        const double w = std::max(static_cast<double>(counts[b]) - mean, 0.0);
        const double x = -span_ns + (static_cast<double>(b) + 0.5) * bin_ns;
        w_sum += w;
        wx_sum += w * x;
    }
    const double rel =
        w_sum > 0.0 ? wx_sum / w_sum : -span_ns + (static_cast<double>(peak) + 0.5) * bin_ns;
    res.offset_ns = center_ns + rel;
    return res;
}

namespace {

struct StageParams {
    double bin_ns;
    double span_ns;
};

// Runs one refinement stage: walk blocks in order, aggregating consecutive blocks
// until the residual histogram shows a significant peak, then drop an anchor at the
// window's center of mass. Windows that never become significant give up after a cap.
std::vector<Anchor> refine_stage(const std::vector<double>& local_ns,
                                 const std::vector<double>& remote_corr,
                                 const std::vector<std::size_t>& block_lo, int n_blocks,
                                 double block_ns, const StageParams& stage,
                                 const SyncOptions& opt) {
    constexpr int kMaxBlocksPerWindow = 256;
    std::vector<Anchor> anchors;
    int b = 0;
    while (b < n_blocks) {
        int first = b;
        std::size_t i0 = block_lo[static_cast<std::size_t>(first)];
        while (b < n_blocks) {
            const std::size_t i1 = block_lo[static_cast<std::size_t>(b) + 1];
            ++b;
            const std::size_t n_local = i1 - i0;
            const bool last = b >= n_blocks || (b - first) >= kMaxBlocksPerWindow;
            if (n_local < static_cast<std::size_t>(opt.min_peak_count) && !last) continue;
            if (n_local == 0) break;

            std::span<const double> lw(local_ns.data() + i0, n_local);
            auto rw = slice(remote_corr, lw.front() - stage.span_ns - block_ns,
                            lw.back() + stage.span_ns + block_ns);
            auto res = xcorr_offset(lw, rw, stage.span_ns / 1000.0, stage.bin_ns, 0.0,
                                    opt.min_significance, opt.min_peak_count);
            if (res.significant) {
                double t_sum = 0.0;
                for (double t : lw) t_sum += t;
                Anchor a;
                a.t_ns = t_sum / static_cast<double>(n_local);
                a.offset_ns = res.offset_ns;  // residual; caller adds the model back
                a.significance = res.significance;
                a.first_block = first;
                a.last_block = b - 1;
                anchors.push_back(a);
                break;
            }
            if (last) break;  // uncovered stretch
        }
    }
    return anchors;
}

}  // namespace

std::vector<SyncSolution> synchronize(std::span<const double> local_in,
                                      std::span<const double> remote_in, const SyncOptions& opt) {
    if (opt.search_span_us <= 0.0 || opt.bin_ns <= 0.0 || opt.block_seconds <= 0.0)
        throw std::invalid_argument("synchronize: options must be positive");

    std::vector<double> local(local_in.begin(), local_in.end());
    std::vector<double> remote(remote_in.begin(), remote_in.end());
    std::sort(local.begin(), local.end());
    std::sort(remote.begin(), remote.end());

    const double block_ns = opt.block_seconds * 1e9;
    double duration_ns = opt.duration_s > 0.0 ? opt.duration_s * 1e9 : 0.0;
    if (duration_ns <= 0.0) {
        if (!local.empty()) duration_ns = std::max(duration_ns, local.back());
        if (!remote.empty()) duration_ns = std::max(duration_ns, remote.back());
    }
    const int n_blocks = std::max(1, static_cast<int>(std::ceil(duration_ns / block_ns - 1e-9)));

    std::vector<SyncSolution> out(static_cast<std::size_t>(n_blocks));
    for (int k = 0; k < n_blocks; ++k) out[static_cast<std::size_t>(k)].block = k;
    if (local.size() < static_cast<std::size_t>(opt.min_peak_count) || remote.empty()) return out;

    std::vector<std::size_t> block_lo(static_cast<std::size_t>(n_blocks) + 1);
    for (int k = 0; k <= n_blocks; ++k) {
        block_lo[static_cast<std::size_t>(k)] = static_cast<std::size_t>(
            std::lower_bound(local.begin(), local.end(), static_cast<double>(k) * block_ns) -
            local.begin());
    }

    const double span_ns = opt.search_span_us * 1000.0;
    const double coarse_bin = std::max(opt.bin_ns, 2.0 * span_ns / 100.0);

    // acquisition: walk blocks in order, aggregating consecutive blocks until one
    // window locks; within a window try a descending ladder of bin sizes so both a
    // drift-smeared peak (wants coarse bins) and a sharp peak buried in dense
    // background (wants fine bins) are found; searches center on the extrapolated lag
    auto acquire = [&](std::span<const double> lw, double center) {
        XcorrResult best;
        double c = center, span = span_ns;
        for (double bin = coarse_bin;;) {
            auto rw = slice(remote, lw.front() + c - span - block_ns,
                            lw.back() + c + span + block_ns);
            auto res = xcorr_offset(lw, rw, span / 1000.0, bin, c, opt.min_significance,
                                    opt.min_peak_count);
            if (res.significant) {
                best = res;
                c = res.offset_ns;
                span = std::max(16.0 * bin, 64.0 * opt.bin_ns);
            }
            if (bin <= opt.bin_ns) break;
            bin = std::max(opt.bin_ns, bin / 8.0);
        }
        return best;
    };

    constexpr int kMaxBlocksPerWindow = 256;
    std::vector<Anchor> anchors;
    double slope = 0.0, last_t = 0.0, last_off = 0.0;
    bool have_prev = false;
    int b = 0;
    while (b < n_blocks) {
        const int first = b;
        const std::size_t i0 = block_lo[static_cast<std::size_t>(first)];
        while (b < n_blocks) {
            const std::size_t i1 = block_lo[static_cast<std::size_t>(b) + 1];
            ++b;
            const std::size_t n_local = i1 - i0;
            const bool last = b >= n_blocks || (b - first) >= kMaxBlocksPerWindow;
            if (n_local < static_cast<std::size_t>(opt.min_peak_count) && !last) continue;
            if (n_local == 0) break;
            std::span<const double> lw(local.data() + i0, n_local);
            double t_sum = 0.0;
            for (double t : lw) t_sum += t;
            const double t_c = t_sum / static_cast<double>(n_local);
            const double pred =
                have_prev ? last_off + slope * (t_c - last_t) : opt.center_ns;
            auto res = acquire(lw, pred);
            if (res.significant) {
                Anchor a;
                a.t_ns = t_c;
                a.offset_ns = res.offset_ns;
                a.significance = res.significance;
                a.first_block = first;
                a.last_block = b - 1;
                if (have_prev && t_c > last_t)
                    slope = (a.offset_ns - last_off) / (t_c - last_t);
                last_t = t_c;
                last_off = a.offset_ns;
                have_prev = true;
                anchors.push_back(a);
                break;
            }
            if (last) break;  // uncovered stretch
        }
    }
    if (anchors.empty()) return out;  // nothing locked anywhere, all blocks stay unsynced

    // refinement ladder: shrink bins stepwise, re-centering the remote stream on the
    // current model each stage so every histogram only sees residual offsets
    std::vector<double> bins;
    for (double b = coarse_bin / 16.0; b > opt.bin_ns * 8.0; b /= 16.0) bins.push_back(b);
    bins.push_back(opt.bin_ns);

    LinearModel model = model_from(anchors);
    double prev_bin = coarse_bin;
    std::vector<Anchor> stage_anchors = anchors;
    std::vector<double> remote_corr(remote.size());
    auto run_stage = [&](double bin) {
        StageParams stage;
        stage.bin_ns = bin;
        stage.span_ns = std::max(8.0 * prev_bin, 64.0 * bin);
        for (std::size_t i = 0; i < remote.size(); ++i)
            remote_corr[i] = remote[i] - model.eval_at_remote(remote[i]);
        std::sort(remote_corr.begin(), remote_corr.end());
        auto found =
            refine_stage(local, remote_corr, block_lo, n_blocks, block_ns, stage, opt);
        if (found.empty()) return false;  // keep the coarser model rather than discard everything
        for (auto& a : found) a.offset_ns += model.eval(a.t_ns);
        stage_anchors = std::move(found);
        model = model_from(stage_anchors);
        prev_bin = bin;
        return true;
    };
    for (double bin : bins) {
        if (!run_stage(bin)) break;
    }
    // One pass at the final bin is not enough when residual drift across a block
    // exceeds the bin: the peak smears into a plateau and the anchor lands anywhere
    // on it, tens of ns off at 10 ppm with 5 s blocks. Each repeat re-absorbs the
    // slope just measured, shrinking the plateau geometrically, so a few passes pin
    // every anchor to the bin scale.
    for (int pass = 0; pass < 6; ++pass) {
        const LinearModel before = model;
        if (!run_stage(opt.bin_ns)) break;
        double moved = 0.0;
        for (const auto& a : stage_anchors)
            moved = std::max(moved, std::abs(a.offset_ns - before.eval(a.t_ns)));
        if (moved <= 0.25 * opt.bin_ns) break;
    }

    std::vector<char> covered(static_cast<std::size_t>(n_blocks), 0);
    std::vector<double> block_sig(static_cast<std::size_t>(n_blocks), 0.0);
    for (const auto& a : stage_anchors) {
        for (int k = a.first_block; k <= a.last_block && k < n_blocks; ++k) {
            covered[static_cast<std::size_t>(k)] = 1;
            block_sig[static_cast<std::size_t>(k)] = a.significance;
        }
    }
    for (int k = 0; k < n_blocks; ++k) {
        auto& sol = out[static_cast<std::size_t>(k)];
        const double t_c = (static_cast<double>(k) + 0.5) * block_ns;
        sol.offset_ns = model.eval(t_c);
        sol.drift_ppm = model.slope_at(t_c) * 1e6;
        sol.significance = block_sig[static_cast<std::size_t>(k)];
        sol.synced = covered[static_cast<std::size_t>(k)] != 0;
    }
    return out;
}

TagStream drift_correct(const std::vector<SyncSolution>& blocks, const TagStream& remote) {
    remote.validate();
    const double block_ns = remote.block_seconds * 1e9;

    LinearModel model;
    for (const auto& sol : blocks) {
        if (!sol.synced) continue;
        model.ts.push_back((static_cast<double>(sol.block) + 0.5) * block_ns);
        model.offs.push_back(sol.offset_ns);
    }

    TagStream corrected;
    corrected.recorder = remote.recorder;
    corrected.block_seconds = remote.block_seconds;
    if (model.ts.empty()) return corrected;

    corrected.events.reserve(remote.events.size());
    for (const auto& ev : remote.events) {
        const double t = static_cast<double>(ev.tag) * kTick;
        const double t_corr = t - model.eval_at_remote(t);
        const auto block = static_cast<std::int64_t>(std::floor(t_corr / block_ns));
        if (block < 0 || block >= static_cast<std::int64_t>(blocks.size())) continue;
        if (!blocks[static_cast<std::size_t>(block)].synced) continue;
        link::DetectionEvent out = ev;
        out.tag = std::llround(t_corr / kTick);
        corrected.events.push_back(out);
    }
    std::sort(corrected.events.begin(), corrected.events.end(),
              [](const auto& a, const auto& b) { return a.tag < b.tag; });
    return corrected;
}

const std::pair<qstate::MeasBasis, qstate::MeasBasis>& SettingsSchedule::for_block(
    int block) const {
    if (pairs.empty()) throw std::logic_error("SettingsSchedule: no setting pairs");
    const auto n = static_cast<std::int64_t>(pairs.size());
    auto idx = static_cast<std::int64_t>(block) % n;
    if (idx < 0) idx += n;
    return pairs[static_cast<std::size_t>(idx)];
}

FourfoldResult fourfold(std::span<const ThreeFold> threefolds, const TagStream& remote,
                        double window_ns, const SettingsSchedule& schedule,
                        double sideband_offset_ns, double lag_ns) {
    if (window_ns <= 0.0) throw std::invalid_argument("fourfold: window must be positive");
    remote.validate();

    struct Click {
        std::int64_t tag;
        link::Channel channel;
        std::optional<link::Truth> truth;
    };
    std::vector<Click> bob;
    bob.reserve(remote.events.size());
    for (const auto& ev : remote.events) {
        if (ev.channel == link::Channel::G || ev.channel == link::Channel::H)
            bob.push_back({ev.tag, ev.channel, ev.truth});
    }

    const std::int64_t limit = ticks_for(window_ns / 2.0);
    const std::int64_t lag = ticks_for(lag_ns);
    const std::int64_t side = ticks_for(sideband_offset_ns);
    const double block_ns = schedule.block_seconds * 1e9;

    FourfoldResult result;

    // counting pass shared by the signal window and both sidebands
    auto count_matches = [&](std::int64_t shift, bool emit) {
        std::int64_t n = 0;
        std::size_t j = 0;
        for (const auto& tf : threefolds) {
            const std::int64_t center = tf.tag + lag + shift;
            while (j < bob.size() && bob[j].tag < center - limit) ++j;
            if (j == bob.size() || bob[j].tag > center + limit) continue;
            ++n;
            if (emit) {
                SwapEvent ev;
                ev.bsm_kind = tf.kind;
                ev.alice_outcome = tf.alice_channel == link::Channel::F ? 1 : 0;
                ev.bob_outcome = bob[j].channel == link::Channel::H ? 1 : 0;
                ev.block = static_cast<int>(
                    std::floor(static_cast<double>(tf.tag) * kTick / block_ns));
                const auto& settings = schedule.for_block(ev.block);
                ev.basis_a = settings.first;
                ev.basis_b = settings.second;
                ev.residual_ns = static_cast<double>(bob[j].tag - tf.tag - lag) * kTick;
                ev.truth_pulse_local = tf.truth_pulse;
                if (bob[j].truth && bob[j].truth->pulse >= 0)
                    ev.truth_pulse_bob = bob[j].truth->pulse;
                result.events.push_back(ev);
            }
            ++j;
        }
        return n;
    };

    count_matches(0, true);
    result.sideband_plus = count_matches(side, false);
    result.sideband_minus = count_matches(-side, false);
    result.accidental_estimate =
        static_cast<double>(result.sideband_plus + result.sideband_minus) / 2.0;
    return result;
}

}  // namespace swapsim::tagstream
