#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "swapsim/link.hpp"
#include "swapsim/qstate.hpp"

// Turns raw time-tag streams into coincidences: interferometric click patterns,
// local 3-folds, remote clock recovery, and 4-fold swap events.
namespace swapsim::tagstream {

enum class Recorder { LaPalma, Tenerife };

struct TagStream {
    Recorder recorder = Recorder::LaPalma;
    std::vector<link::DetectionEvent> events;  // sorted by tag
    double block_seconds = 30.0;

    void validate() const;  // throws on unsorted tags
};

enum class BsmKind { PsiMinus12, PsiPlus12 };

// Two-detector click pattern at the projecting station. Valid patterns only:
// (a&d) or (b&c) -> PsiMinus12; (a&b) or (c&d) -> PsiPlus12.
struct BsmRecord {
    std::int64_t tag = 0;  // earlier click's tag
    BsmKind kind = BsmKind::PsiMinus12;
    link::Channel first_channel = link::Channel::A;
    link::Channel second_channel = link::Channel::D;
    std::optional<std::int64_t> truth_pulse;  // set when both clicks are photons of one pulse
};

struct ThreeFold {
    std::int64_t tag = 0;  // BSM record tag
    BsmKind kind = BsmKind::PsiMinus12;
    link::Channel alice_channel = link::Channel::E;
    std::optional<std::int64_t> truth_pulse;
};

struct SwapEvent {
    BsmKind bsm_kind = BsmKind::PsiMinus12;
    int alice_outcome = 0;  // 0 = channel e, 1 = channel f
    int bob_outcome = 0;    // 0 = channel g, 1 = channel h
    qstate::MeasBasis basis_a, basis_b;
    int block = 0;
    double residual_ns = 0.0;  // bob minus 3-fold, after correction
    std::optional<std::int64_t> truth_pulse_local;
    std::optional<std::int64_t> truth_pulse_bob;

    bool truth_matched() const {
        return truth_pulse_local && truth_pulse_bob && *truth_pulse_local == *truth_pulse_bob;
    }
};

struct SyncSolution {
    int block = 0;
    double offset_ns = 0.0;
    double drift_ppm = 0.0;
    double significance = 0.0;
    bool synced = false;
};

// Greedy earliest-first pairing of station clicks (channels a-d) into BSM records.
// Each click is used at most once; invalid same-side/same-polarization pairs are skipped.
std::vector<BsmRecord> find_bsm(std::span<const link::DetectionEvent> events, double window_ns);

// Pairs each BSM record with at most one analyzer click (channels e/f) within the
// window around the known electronic lag.
std::vector<ThreeFold> threefold(std::span<const BsmRecord> records,
                                 std::span<const link::DetectionEvent> events, double window_ns,
                                 double lag_ns = 0.0);

struct XcorrResult {
    double offset_ns = 0.0;       // peak location (center-relative offsets folded in)
    double significance = 0.0;    // (peak - mean) / std over off-peak bins
    std::int64_t peak_count = 0;
    double background_mean = 0.0;
    bool significant = false;
};

// Histogram of (remote - local - center) differences within +-search_span;
// peak position estimates the clock offset between the streams.
XcorrResult xcorr_offset(std::span<const double> local_ns, std::span<const double> remote_ns,
                         double search_span_us, double bin_ns, double center_ns = 0.0,
                         double min_significance = 5.0, int min_peak_count = 5);

struct SyncOptions {
    double search_span_us = 500.0;
    double bin_ns = 1.0;  // finest refinement bin
    double min_significance = 5.0;
    int min_peak_count = 5;
    double block_seconds = 30.0;
    double duration_s = 0.0;   // 0 = derive from the data
    double center_ns = 0.0;    // expected lag from known geometry; search is centered here
};

// Per-block offset recovery: windowed acquisition (blocks aggregate until a peak
// clears a Poisson tail test at some bin size), then a refinement ladder with
// shrinking bins against the running drift model.
// Blocks without a significant solution are flagged unsynced.
std::vector<SyncSolution> synchronize(std::span<const double> local_ns,
                                      std::span<const double> remote_ns,
                                      const SyncOptions& opt);

// Piecewise-linear retiming of the remote stream through the synced block offsets;
// events falling in unsynced blocks are dropped.
TagStream drift_correct(const std::vector<SyncSolution>& blocks, const TagStream& remote);

struct SettingsSchedule {
    std::vector<std::pair<qstate::MeasBasis, qstate::MeasBasis>> pairs;
    double block_seconds = 30.0;

    const std::pair<qstate::MeasBasis, qstate::MeasBasis>& for_block(int block) const;
};

struct FourfoldResult {
    std::vector<SwapEvent> events;
    std::int64_t sideband_plus = 0;   // matches with the remote stream shifted +offset
    std::int64_t sideband_minus = 0;  // and -offset
    double accidental_estimate = 0.0;
};

// Matches 3-folds against remote analyzer clicks (channels g/h) within the window,
// greedy earliest-first, each side used at most once. Sideband matches at the shifted
// windows estimate the accidental rate; never subtracted here.
FourfoldResult fourfold(std::span<const ThreeFold> threefolds, const TagStream& remote,
                        double window_ns, const SettingsSchedule& schedule,
                        double sideband_offset_ns = 100.0, double lag_ns = 0.0);

}  // namespace swapsim::tagstream
