#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "swapsim/rng.hpp"

// Lossy channel, detectors, and recorder clocks.
namespace swapsim::link {

struct ChannelParams {
    double mean_loss_db = 32.0;   // average attenuation over the free-space link
    double scint_sigma_db = 0.0;  // per-block log-normal fluctuation width, 0 = off
    double length_km = 143.0;

    void validate() const;
};

struct DetectorParams {
    double efficiency = 1.0;
    double dark_rate_hz = 0.0;
    double jitter_sigma_ps = 150.0;
    double dead_time_ns = 0.0;

    void validate() const;
};

// tag = floor((true_ns * (1 + drift_ppm*1e-6) + offset_ns) / tick_ns)
struct ClockParams {
    double offset_ns = 0.0;
    double drift_ppm = 0.0;
    static constexpr double tick_ns = 0.156;  // 156 ps time-tagging resolution
};

// APD identifiers: a-d at the interferometric measurement, e/f local analyzer,
// g/h remote analyzer. `dark` marks imported noise events with no channel attribution;
// simulated dark counts carry their physical channel.
enum class Channel : std::uint8_t { A, B, C, D, E, F, G, H, Dark };

struct Truth {
    std::int64_t pulse = -1;
    std::int8_t photon = -1;  // 0..3 photon id, -1 = dark origin
};

struct DetectionEvent {
    Channel channel = Channel::Dark;
    std::int64_t tag = 0;  // clock ticks
    std::optional<Truth> truth;
};

// true if the photon survives loss_db of attenuation
bool transmit(double loss_db, SplitStream& rng);

// per-block dB draw; normal in dB so transmission is log-normal
double sample_block_loss(const ChannelParams& ch, SplitStream& rng);

// efficiency thinning plus Gaussian jitter; dead time is a stream-level effect,
// see apply_dead_time
std::optional<double> detect(double arrival_ns, const DetectorParams& det, SplitStream& rng);

// homogeneous Poisson arrivals over [0, duration_s), in ns, sorted
std::vector<double> dark_events(const DetectorParams& det, double duration_s, SplitStream& rng);

std::int64_t apply_clock(double true_ns, const ClockParams& clock);

// removes events closer than dead_ns to the previous kept event (single channel, sorted)
void apply_dead_time(std::vector<double>& times_ns, double dead_ns);

// free-space line of sight at c
double propagation_delay_ns(double length_km);

// fibre at group index 1.5
double fiber_delay_ns(double length_m);

}  // namespace swapsim::link
