#include "swapsim/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace swapsim::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE)
        throw std::invalid_argument("config: bad numeric value for " + key + ": '" + value + "'");
    return v;
}

int parse_int(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw std::invalid_argument("config: " + key + " must be an integer");
    return i;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE)
        throw std::invalid_argument("config: bad unsigned value for " + key + ": '" + value + "'");
    return static_cast<std::uint64_t>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw std::invalid_argument("config: bad boolean for " + key + ": '" + value + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    auto dbl = [](double ExperimentConfig::* field) {
        return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*field = parse_double(k, v);
        };
    };
    static const std::map<std::string, Setter> table = {
        {"run.mode",
         [](ExperimentConfig& c, const std::string&, const std::string& v) {
             if (v == "local") c.mode = Mode::Local;
             else if (v == "remote") c.mode = Mode::Remote;
             else throw std::invalid_argument("config: run.mode must be local or remote");
         }},
        {"run.measurement",
         [](ExperimentConfig& c, const std::string&, const std::string& v) {
             if (v == "witness") c.measurement = Measurement::Witness;
             else if (v == "chsh") c.measurement = Measurement::Chsh;
             else throw std::invalid_argument("config: run.measurement must be witness or chsh");
         }},
        {"run.duration_s", dbl(&ExperimentConfig::duration_s)},
        {"run.seed",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.seed = parse_u64(k, v);
         }},
        {"source.rep_rate_hz", dbl(&ExperimentConfig::rep_rate_hz)},
        {"source.two_fold_hz", dbl(&ExperimentConfig::two_fold_hz)},
        {"source.pair_prob", dbl(&ExperimentConfig::pair_prob)},
        {"source.intrinsic_visibility", dbl(&ExperimentConfig::intrinsic_visibility)},
        {"source.stat_model",
         [](ExperimentConfig& c, const std::string&, const std::string& v) {
             if (v == "poissonian") c.stat_model = StatModelCfg::Poissonian;
             else if (v == "thermal") c.stat_model = StatModelCfg::Thermal;
             else throw std::invalid_argument(
                 "config: source.stat_model must be poissonian or thermal");
         }},
        {"source.delta_l_mm", dbl(&ExperimentConfig::delta_l_mm)},
        {"source.center_wavelength_nm", dbl(&ExperimentConfig::center_wavelength_nm)},
        {"source.filter_fwhm_nm", dbl(&ExperimentConfig::filter_fwhm_nm)},
        {"source.dip_width_scale", dbl(&ExperimentConfig::dip_width_scale)},
        {"source.multipair_noise_coeff", dbl(&ExperimentConfig::multipair_noise_coeff)},
        {"channel.mean_loss_db", dbl(&ExperimentConfig::mean_loss_db)},
        {"channel.scint_sigma_db", dbl(&ExperimentConfig::scint_sigma_db)},
        {"channel.length_km", dbl(&ExperimentConfig::length_km)},
        {"detector.efficiency", dbl(&ExperimentConfig::det_efficiency)},
        {"detector.dark_rate_local_hz", dbl(&ExperimentConfig::dark_rate_local_hz)},
        {"detector.dark_rate_remote_hz", dbl(&ExperimentConfig::dark_rate_remote_hz)},
        {"detector.jitter_sigma_ps", dbl(&ExperimentConfig::jitter_sigma_ps)},
        {"detector.dead_time_ns", dbl(&ExperimentConfig::dead_time_ns)},
        {"clock.remote_offset_ns", dbl(&ExperimentConfig::remote_clock_offset_ns)},
        {"clock.remote_drift_ppm", dbl(&ExperimentConfig::remote_clock_drift_ppm)},
        {"timing.bsm_window_ns", dbl(&ExperimentConfig::bsm_window_ns)},
        {"timing.threefold_window_ns", dbl(&ExperimentConfig::threefold_window_ns)},
        {"timing.fourfold_window_ns", dbl(&ExperimentConfig::fourfold_window_ns)},
        {"timing.sideband_offset_ns", dbl(&ExperimentConfig::sideband_offset_ns)},
        {"timing.block_seconds", dbl(&ExperimentConfig::block_seconds)},
        {"fiber.bsm_m", dbl(&ExperimentConfig::fiber_bsm_m)},
        {"fiber.alice_m", dbl(&ExperimentConfig::fiber_alice_m)},
        {"fiber.bob_local_m", dbl(&ExperimentConfig::fiber_bob_local_m)},
        {"fiber.bob_tx_m", dbl(&ExperimentConfig::fiber_bob_tx_m)},
        {"sync.search_span_us", dbl(&ExperimentConfig::sync_search_span_us)},
        {"sync.bin_ns", dbl(&ExperimentConfig::sync_bin_ns)},
        {"sync.min_significance", dbl(&ExperimentConfig::sync_min_significance)},
        {"sync.min_peak_count",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.sync_min_peak_count = parse_int(k, v);
         }},
        {"sim.unpaired_singles",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.unpaired_singles = parse_bool(k, v);
         }},
        {"analysis.bootstrap_resamples",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.bootstrap_resamples = parse_int(k, v);
         }},
        {"analysis.sweep_events_target", dbl(&ExperimentConfig::sweep_events_target)},
    };
    return table;
}

}  // namespace

ExperimentConfig default_config() { return ExperimentConfig{}; }

void apply_kv(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    it->second(cfg, key, trim(value));
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg = default_config();
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        " is not key=value: '" + line + "'");
        apply_kv(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
    std::vector<std::string> bad;
    auto need = [&bad](bool ok, const char* msg) {
        if (!ok) bad.emplace_back(msg);
    };
    need(cfg.duration_s > 0.0, "run.duration_s must be positive");
    need(cfg.rep_rate_hz > 0.0, "source.rep_rate_hz must be positive");
    need(cfg.two_fold_hz >= 0.0, "source.two_fold_hz must be non-negative");
    need(cfg.pair_prob >= 0.0 && cfg.pair_prob < 0.1,
         "source.pair_prob must lie in [0, 0.1)");
    need(cfg.pair_prob > 0.0 || cfg.two_fold_hz > 0.0,
         "one of source.pair_prob or source.two_fold_hz must be positive");
    need(cfg.intrinsic_visibility >= 0.0 && cfg.intrinsic_visibility <= 1.0,
         "source.intrinsic_visibility must lie in [0, 1]");
    need(cfg.delta_l_mm >= 0.0, "source.delta_l_mm must be non-negative");
    need(cfg.center_wavelength_nm > 0.0, "source.center_wavelength_nm must be positive");
    need(cfg.filter_fwhm_nm > 0.0, "source.filter_fwhm_nm must be positive");
    need(cfg.dip_width_scale > 0.0, "source.dip_width_scale must be positive");
    need(cfg.multipair_noise_coeff >= 0.0, "source.multipair_noise_coeff must be non-negative");
    need(cfg.mean_loss_db >= 0.0, "channel.mean_loss_db must be non-negative");
    need(cfg.scint_sigma_db >= 0.0, "channel.scint_sigma_db must be non-negative");
    need(cfg.length_km > 0.0, "channel.length_km must be positive");
    need(cfg.det_efficiency > 0.0 && cfg.det_efficiency <= 1.0,
         "detector.efficiency must lie in (0, 1]");
    need(cfg.dark_rate_local_hz >= 0.0, "detector.dark_rate_local_hz must be non-negative");
    need(cfg.dark_rate_remote_hz >= 0.0, "detector.dark_rate_remote_hz must be non-negative");
    need(cfg.jitter_sigma_ps >= 0.0, "detector.jitter_sigma_ps must be non-negative");
    need(cfg.dead_time_ns >= 0.0, "detector.dead_time_ns must be non-negative");
    need(cfg.bsm_window_ns > 0.0, "timing.bsm_window_ns must be positive");
    need(cfg.threefold_window_ns > 0.0, "timing.threefold_window_ns must be positive");
    need(cfg.fourfold_window_ns > 0.0, "timing.fourfold_window_ns must be positive");
    need(cfg.sideband_offset_ns > cfg.fourfold_window_ns,
         "timing.sideband_offset_ns must exceed the fourfold window");
    need(cfg.block_seconds > 0.0, "timing.block_seconds must be positive");
    need(cfg.fiber_bsm_m >= 0.0, "fiber.bsm_m must be non-negative");
    need(cfg.fiber_alice_m >= 0.0, "fiber.alice_m must be non-negative");
    need(cfg.fiber_bob_local_m >= 0.0, "fiber.bob_local_m must be non-negative");
    need(cfg.fiber_bob_tx_m >= 0.0, "fiber.bob_tx_m must be non-negative");
    need(cfg.sync_search_span_us > 0.0, "sync.search_span_us must be positive");
    need(cfg.sync_bin_ns > 0.0, "sync.bin_ns must be positive");
    need(cfg.sync_min_significance > 0.0, "sync.min_significance must be positive");
    need(cfg.sync_min_peak_count >= 1, "sync.min_peak_count must be at least 1");
    need(cfg.bootstrap_resamples >= 2, "analysis.bootstrap_resamples must be at least 2");
    need(cfg.sweep_events_target > 0.0, "analysis.sweep_events_target must be positive");
    return bad;
}

const char* mode_name(Mode m) { return m == Mode::Local ? "local" : "remote"; }
const char* measurement_name(Measurement m) {
    return m == Measurement::Witness ? "witness" : "chsh";
}
const char* stat_model_name(StatModelCfg s) {
    return s == StatModelCfg::Poissonian ? "poissonian" : "thermal";
}

}  // namespace swapsim::config
