#include "swapsim/report.hpp"

#include <cstdio>
#include <sstream>

#include "swapsim/config.hpp"

namespace swapsim::report {

namespace {

using config::Measurement;
using config::Mode;

const char* bool_name(bool v) { return v ? "true" : "false"; }

class Writer {
  public:
    void section(const std::string& name) {
        if (!first_) out_ << '\n';
        first_ = false;
        out_ << '[' << name << "]\n";
    }
    void kv(const std::string& key, const std::string& value) {
        out_ << key << '\t' << value << '\n';
    }
    void kv(const std::string& key, double value) { kv(key, format_number(value)); }
    void kv(const std::string& key, std::int64_t value) { kv(key, std::to_string(value)); }
    void kv(const std::string& key, int value) { kv(key, std::to_string(value)); }
    std::string str() const { return out_.str(); }

  private:
    std::ostringstream out_;
    bool first_ = true;
};

void write_kind(Writer& w, const std::string& name, const pipeline::KindResult& kr,
                Measurement meas) {
    w.section(name);
    w.kv("events", kr.events);
    if (meas == Measurement::Witness) {
        static const char* basis_names[3] = {"hv", "pm", "rl"};
        for (std::size_t b = 0; b < 3; ++b) {
            w.kv(std::string("visibility_") + basis_names[b], kr.vis[b].value);
            w.kv(std::string("visibility_") + basis_names[b] + "_sigma", kr.vis[b].sigma);
        }
        w.kv("mean_visibility", kr.mean_visibility);
        w.kv("witness", kr.witness.value);
        w.kv("witness_sigma", kr.witness.sigma);
        w.kv("witness_significance", kr.witness.significance);
        w.kv("witness_bootstrap_sigma", kr.witness_bootstrap_sigma);
    } else {
        for (std::size_t s = 0; s < 4; ++s) {
            w.kv("e" + std::to_string(s), kr.chsh.terms[s].value);
            w.kv("e" + std::to_string(s) + "_sigma", kr.chsh.terms[s].sigma);
            w.kv("n" + std::to_string(s), kr.setting_counts[s].total());
        }
        w.kv("chsh", kr.chsh.value);
        w.kv("chsh_sigma", kr.chsh.sigma);
        w.kv("chsh_bootstrap_sigma", kr.chsh_bootstrap_sigma);
    }
}

}  // namespace

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

std::string render_report(const pipeline::RunResult& result) {
    const auto& cfg = result.cfg;
    const bool remote = cfg.mode == Mode::Remote;
    Writer w;

    w.section("run");
    w.kv("mode", config::mode_name(cfg.mode));
    w.kv("measurement", config::measurement_name(cfg.measurement));
    w.kv("duration_s", cfg.duration_s);
    w.kv("block_seconds", cfg.block_seconds);
    w.kv("seed", static_cast<std::int64_t>(cfg.seed));

    w.section("source");
    w.kv("rep_rate_hz", cfg.rep_rate_hz);
    w.kv("pair_prob", result.budget.pair_prob);
    w.kv("intrinsic_visibility", cfg.intrinsic_visibility);
    w.kv("delta_l_mm", cfg.delta_l_mm);
    w.kv("stat_model", config::stat_model_name(cfg.stat_model));

    w.section("budget");
    w.kv("emit_prob", result.budget.emit_prob);
    w.kv("bsm_rate_hz", result.budget.bsm_rate_hz);
    w.kv("fourfold_local_hz", result.budget.fourfold_local_hz);
    w.kv("fourfold_remote_hz", result.budget.fourfold_remote_hz);
    if (remote) w.kv("expected_remote_fourfolds", result.budget.expected_remote_fourfolds);
    w.kv("accidentals_per_window_hz", result.budget.accidentals_per_window_hz);

    w.section("counts");
    w.kv("pulses_simulated", result.pulses_simulated);
    w.kv("local_events", result.local_events);
    if (remote) w.kv("remote_events", result.remote_events);
    w.kv("bsm_records", result.bsm_records);
    w.kv("threefolds", result.threefolds);
    w.kv("fourfolds", result.fourfolds);
    w.kv("truth_fourfolds", result.truth_fourfolds);
    w.kv("sideband_plus", result.sideband_plus);
    w.kv("sideband_minus", result.sideband_minus);
    w.kv("accidental_estimate", result.accidental_estimate);

    if (remote) {
        w.section("sync");
        w.kv("blocks_total", result.sync.blocks_total);
        w.kv("blocks_synced", result.sync.blocks_synced);
        w.kv("mean_offset_ns", result.sync.mean_offset_ns);
        w.kv("mean_drift_ppm", result.sync.mean_drift_ppm);
        w.kv("min_significance", result.sync.min_significance);
        w.kv("max_significance", result.sync.max_significance);
    }

    write_kind(w, "singlet", result.singlet, cfg.measurement);
    write_kind(w, "triplet", result.triplet, cfg.measurement);

    if (remote) {
        w.section("timing");
        w.kv("alice_bob_dt_ns", result.alice_bob_dt_ns);
        w.kv("alice_bob_spacelike", bool_name(result.alice_bob_spacelike));
        w.kv("bsm_bob_dt_ns", result.bsm_bob_dt_ns);
        w.kv("bsm_bob_spacelike", bool_name(result.bsm_bob_spacelike));
    }
    return w.str();
}

std::string render_sweep(const std::string& key,
                         const std::vector<pipeline::SweepPoint>& points) {
    std::ostringstream out;
    out << "# sweep " << key << '\n';
    const bool witness = !points.empty() &&
                         points.front().result.cfg.measurement == Measurement::Witness;
    if (witness) {
        out << "value\tfourfolds\tsinglet_mean_v\tsinglet_witness\tsinglet_witness_sigma"
               "\ttriplet_mean_v\ttriplet_witness\ttriplet_witness_sigma\n";
    } else {
        out << "value\tfourfolds\tsinglet_chsh\tsinglet_chsh_sigma"
               "\ttriplet_chsh\ttriplet_chsh_sigma\n";
    }
    for (const auto& pt : points) {
        const auto& r = pt.result;
        out << pt.value << '\t' << r.fourfolds;
        if (witness) {
            out << '\t' << format_number(r.singlet.mean_visibility) << '\t'
                << format_number(r.singlet.witness.value) << '\t'
                << format_number(r.singlet.witness.sigma) << '\t'
                << format_number(r.triplet.mean_visibility) << '\t'
                << format_number(r.triplet.witness.value) << '\t'
                << format_number(r.triplet.witness.sigma);
        } else {
            out << '\t' << format_number(r.singlet.chsh.value) << '\t'
                << format_number(r.singlet.chsh.sigma) << '\t'
                << format_number(r.triplet.chsh.value) << '\t'
                << format_number(r.triplet.chsh.sigma);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace swapsim::report
