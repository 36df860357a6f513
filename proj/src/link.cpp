#include "swapsim/link.hpp"

#include <cmath>
#include <stdexcept>

namespace swapsim::link {

namespace {
constexpr double kSpeedOfLightMPerNs = 0.299792458;
constexpr double kFiberGroupIndex = 1.5;
}  // namespace

void ChannelParams::validate() const {
    if (mean_loss_db < 0.0) throw std::invalid_argument("mean_loss_db must be >= 0");
    if (scint_sigma_db < 0.0) throw std::invalid_argument("scint_sigma_db must be >= 0");
    if (length_km < 0.0) throw std::invalid_argument("length_km must be >= 0");
}

void DetectorParams::validate() const {
    if (efficiency < 0.0 || efficiency > 1.0)
        throw std::invalid_argument("efficiency must be in [0,1]");
    if (dark_rate_hz < 0.0) throw std::invalid_argument("dark_rate_hz must be >= 0");
    if (jitter_sigma_ps < 0.0) throw std::invalid_argument("jitter_sigma_ps must be >= 0");
    if (dead_time_ns < 0.0) throw std::invalid_argument("dead_time_ns must be >= 0");
}

bool transmit(double loss_db, SplitStream& rng) {
    if (loss_db < 0.0) throw std::invalid_argument("loss_db must be >= 0");
    return rng.uniform() < std::pow(10.0, -loss_db / 10.0);
}

double sample_block_loss(const ChannelParams& ch, SplitStream& rng) {
    ch.validate();
    if (ch.scint_sigma_db == 0.0) return ch.mean_loss_db;
    double db = rng.normal(ch.mean_loss_db, ch.scint_sigma_db);
    return db < 0.0 ? 0.0 : db;
}

std::optional<double> detect(double arrival_ns, const DetectorParams& det, SplitStream& rng) {
    det.validate();
    if (rng.uniform() >= det.efficiency) return std::nullopt;
    if (det.jitter_sigma_ps == 0.0) return arrival_ns;
    return arrival_ns + rng.normal(0.0, det.jitter_sigma_ps * 1e-3);
}

std::vector<double> dark_events(const DetectorParams& det, double duration_s, SplitStream& rng) {
    det.validate();
    if (duration_s < 0.0) throw std::invalid_argument("duration must be >= 0");
    std::vector<double> out;
    if (det.dark_rate_hz == 0.0 || duration_s == 0.0) return out;
    const double end_ns = duration_s * 1e9;
    const double rate_per_ns = det.dark_rate_hz * 1e-9;
    out.reserve(static_cast<std::size_t>(det.dark_rate_hz * duration_s * 1.2) + 8);
    double t = rng.exponential(rate_per_ns);
    while (t < end_ns) {
        out.push_back(t);
        t += rng.exponential(rate_per_ns);
    }
    return out;
}

std::int64_t apply_clock(double true_ns, const ClockParams& clock) {
    const double local = true_ns * (1.0 + clock.drift_ppm * 1e-6) + clock.offset_ns;
    return static_cast<std::int64_t>(std::floor(local / ClockParams::tick_ns));
}

void apply_dead_time(std::vector<double>& times_ns, double dead_ns) {
    if (dead_ns <= 0.0 || times_ns.size() < 2) return;
    std::size_t kept = 1;
    double last = times_ns[0];
    for (std::size_t i = 1; i < times_ns.size(); ++i) {
        if (times_ns[i] - last >= dead_ns) {
            times_ns[kept++] = times_ns[i];
            last = times_ns[i];
        }
    }
    times_ns.resize(kept);
}

double propagation_delay_ns(double length_km) {
    if (length_km < 0.0) throw std::invalid_argument("length_km must be >= 0");
    return length_km * 1000.0 / kSpeedOfLightMPerNs;
}

double fiber_delay_ns(double length_m) {
    if (length_m < 0.0) throw std::invalid_argument("length_m must be >= 0");
    return length_m * kFiberGroupIndex / kSpeedOfLightMPerNs;
}

}  // namespace swapsim::link
