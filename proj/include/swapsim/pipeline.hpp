#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swapsim/config.hpp"
#include "swapsim/source.hpp"
#include "swapsim/stats.hpp"
#include "swapsim/tagstream.hpp"

// End-to-end simulation: pulse-by-pulse event generation, coincidence recovery,
// clock synchronization, and the per-outcome statistics of the recovered events.
namespace swapsim::pipeline {

// Leading-order rate predictions used to sanity-check a run before it starts.
struct ClosedFormBudget {
    double pair_prob = 0.0;           // per pulse and source
    double emit_prob = 0.0;           // P(n >= 1) per source
    double bsm_rate_hz = 0.0;         // valid interferometer patterns
    double fourfold_local_hz = 0.0;   // all four detectors co-located
    double fourfold_remote_hz = 0.0;  // through the free-space channel
    double expected_remote_fourfolds = 0.0;  // over the configured duration
    double accidentals_per_window_hz = 0.0;
};

ClosedFormBudget closed_form_budget(const config::ExperimentConfig& cfg);

// Intrinsic source visibility that makes the model's mean three-basis visibility
// hit target_mean_v at this configuration's emission rate and delay.
double calibrate_intrinsic_visibility(const config::ExperimentConfig& cfg, double target_mean_v);

// Per-outcome-kind statistics over the recovered swap events.
struct KindResult {
    std::int64_t events = 0;
    // witness measurement
    std::array<stats::SettingCounts, 3> basis_counts{};  // hv, pm, rl
    std::array<stats::VisibilityEstimate, 3> vis{};      // oriented to the expected state
    double mean_visibility = 0.0;
    stats::WitnessResult witness{};
    double witness_bootstrap_sigma = 0.0;
    // chsh measurement
    std::array<stats::SettingCounts, 4> setting_counts{};
    stats::ChshResult chsh{};
    double chsh_bootstrap_sigma = 0.0;
};

struct SyncSummary {
    int blocks_total = 0;
    int blocks_synced = 0;
    double mean_offset_ns = 0.0;
    double mean_drift_ppm = 0.0;
    double min_significance = 0.0;  // over synced blocks
    double max_significance = 0.0;
};

struct RunResult {
    config::ExperimentConfig cfg;
    ClosedFormBudget budget;

    std::int64_t pulses_simulated = 0;  // pulses actually expanded, not clock ticks
    std::int64_t local_events = 0;
    std::int64_t remote_events = 0;
    std::int64_t bsm_records = 0;
    std::int64_t threefolds = 0;
    std::int64_t fourfolds = 0;
    std::int64_t truth_fourfolds = 0;  // all four clicks from one pulse
    std::int64_t sideband_plus = 0;
    std::int64_t sideband_minus = 0;
    double accidental_estimate = 0.0;

    KindResult singlet;  // conditioned on the psi-minus interferometer outcome
    KindResult triplet;  // conditioned on psi-plus

    SyncSummary sync;
    std::vector<tagstream::SyncSolution> sync_solutions;
    std::vector<tagstream::SwapEvent> events;

    // station separation bookkeeping; dt is detection time minus detection time
    double alice_bob_dt_ns = 0.0;
    bool alice_bob_spacelike = false;
    double bsm_bob_dt_ns = 0.0;
    bool bsm_bob_spacelike = false;

    double elapsed_s = 0.0;  // wall clock, never rendered into reports
};

RunResult run(const config::ExperimentConfig& cfg);

// Coincidence recovery and statistics on externally recorded streams. The remote
// stream is required in remote mode and ignored in local mode.
RunResult analyze(const config::ExperimentConfig& cfg, const tagstream::TagStream& local,
                  const std::optional<tagstream::TagStream>& remote);

struct SweepPoint {
    std::string value;
    RunResult result;
};

// Re-runs the experiment for each value of one configuration key, sizing each
// run's duration so roughly analysis.sweep_events_target events are collected.
std::vector<SweepPoint> sweep(const config::ExperimentConfig& base, const std::string& key,
                              const std::vector<std::string>& values);

// One simulated measurement block; exposed for tests and the export path.
struct BlockStreams {
    std::vector<link::DetectionEvent> local;   // la palma recorder, sorted
    std::vector<link::DetectionEvent> remote;  // tenerife recorder, sorted (remote mode)
    std::int64_t pulses = 0;
};

BlockStreams generate_block(const config::ExperimentConfig& cfg, int block);

// Measurement settings cycled per block for this configuration.
tagstream::SettingsSchedule build_schedule(const config::ExperimentConfig& cfg);

// Expected-correlation signs per basis/setting for each conditioned state.
std::array<int, 3> witness_signs(tagstream::BsmKind kind);
std::array<int, 4> chsh_signs(tagstream::BsmKind kind);

}  // namespace swapsim::pipeline
