#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "swapsim/config.hpp"
#include "swapsim/pipeline.hpp"
#include "swapsim/report.hpp"
#include "swapsim/tagio.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kBadInput = 2;
constexpr int kRuntimeFailure = 3;
constexpr int kCheckFailure = 4;

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out_path;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-c,--config", opts.config_path, "configuration file (key = value lines)");
    cmd->add_option("-s,--set", opts.overrides, "override one key, e.g. --set run.seed=7")
        ->type_name("KEY=VALUE");
    cmd->add_option("--seed", opts.seed, "shortcut for --set run.seed=N");
    cmd->add_option("-o,--out", opts.out_path, "write the report here instead of stdout");
}

swapsim::config::ExperimentConfig build_config(const CommonOpts& opts) {
    swapsim::config::ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg = swapsim::config::load_config_file(opts.config_path);
    for (const auto& kv : opts.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("override needs KEY=VALUE, got: " + kv);
        swapsim::config::apply_kv(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opts.seed) cfg.seed = *opts.seed;
    const auto bad = swapsim::config::validate(cfg);
    if (!bad.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& b : bad) msg += "\n  " + b;
        throw std::invalid_argument(msg);
    }
    return cfg;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + out_path);
    out << text;
}

void export_streams(const swapsim::config::ExperimentConfig& cfg, const std::string& local_path,
                    const std::string& remote_path) {
    using swapsim::tagstream::Recorder;
    swapsim::tagstream::TagStream local, remote;
    local.recorder = Recorder::LaPalma;
    remote.recorder = Recorder::Tenerife;
    local.block_seconds = remote.block_seconds = cfg.block_seconds;
    const int blocks =
        std::max(1, static_cast<int>(std::ceil(cfg.duration_s / cfg.block_seconds - 1e-9)));
    for (int b = 0; b < blocks; ++b) {
        auto bs = swapsim::pipeline::generate_block(cfg, b);
        local.events.insert(local.events.end(), bs.local.begin(), bs.local.end());
        remote.events.insert(remote.events.end(), bs.remote.begin(), bs.remote.end());
    }
    // consecutive blocks overlap in tag space: a photon emitted just before a block
    // boundary arrives after the next block's first dark counts, so the concatenated
    // buffers must be merged into arrival order before they can be written
    auto by_tag = [](const auto& a, const auto& b) { return a.tag < b.tag; };
    std::stable_sort(local.events.begin(), local.events.end(), by_tag);
    std::stable_sort(remote.events.begin(), remote.events.end(), by_tag);
    if (!local_path.empty()) swapsim::tagio::export_tags(local, local_path);
    if (!remote_path.empty()) {
        if (cfg.mode != swapsim::config::Mode::Remote)
            throw std::invalid_argument("--export-remote needs run.mode=remote");
        swapsim::tagio::export_tags(remote, remote_path);
    }
}

int run_selftest() {
    using namespace swapsim;
    config::ExperimentConfig cfg;
    cfg.mode = config::Mode::Local;
    cfg.measurement = config::Measurement::Witness;
    cfg.duration_s = 90.0;
    cfg.two_fold_hz = 0.0;
    cfg.pair_prob = 5e-3;
    cfg.intrinsic_visibility = 1.0;
    cfg.multipair_noise_coeff = 0.0;
    cfg.dark_rate_local_hz = 0.0;
    cfg.jitter_sigma_ps = 0.0;
    cfg.unpaired_singles = false;
    const auto res = pipeline::run(cfg);
    const bool counts_ok = res.singlet.events > 1000 && res.triplet.events > 1000;
    const bool vis_ok = std::abs(res.singlet.mean_visibility - 1.0) < 0.02 &&
                        std::abs(res.triplet.mean_visibility - 1.0) < 0.02;
    const bool witness_ok = std::abs(res.singlet.witness.value + 0.5) < 0.02 &&
                            std::abs(res.triplet.witness.value + 0.5) < 0.02;
    std::printf("selftest counts   %s\n", counts_ok ? "ok" : "FAIL");
    std::printf("selftest vis      %s\n", vis_ok ? "ok" : "FAIL");
    std::printf("selftest witness  %s\n", witness_ok ? "ok" : "FAIL");
    return counts_ok && vis_ok && witness_ok ? kOk : kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"entanglement swapping simulator and tag analysis"};
    app.require_subcommand(1);

    CommonOpts run_opts;
    std::string export_local, export_remote;
    auto* cmd_run = app.add_subcommand("run", "simulate an experiment and print the report");
    add_common(cmd_run, run_opts);
    cmd_run->add_option("--export-local", export_local, "write the station tag file here");
    cmd_run->add_option("--export-remote", export_remote, "write the far-site tag file here");

    CommonOpts sweep_opts;
    std::string sweep_key;
    std::vector<std::string> sweep_values;
    auto* cmd_sweep = app.add_subcommand("sweep", "rerun over a range of one parameter");
    add_common(cmd_sweep, sweep_opts);
    cmd_sweep->add_option("key", sweep_key, "configuration key to vary")->required();
    cmd_sweep->add_option("values", sweep_values, "values to apply")->required();

    CommonOpts analyze_opts;
    std::string local_path, remote_path;
    auto* cmd_analyze = app.add_subcommand("analyze", "recover coincidences from tag files");
    add_common(cmd_analyze, analyze_opts);
    cmd_analyze->add_option("--local", local_path, "station tag file")->required();
    cmd_analyze->add_option("--remote", remote_path, "far-site tag file");

    auto* cmd_selftest = app.add_subcommand("selftest", "quick internal consistency check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kBadInput;
    }

    try {
        if (cmd_run->parsed()) {
            const auto cfg = build_config(run_opts);
            if (!export_local.empty() || !export_remote.empty())
                export_streams(cfg, export_local, export_remote);
            const auto res = swapsim::pipeline::run(cfg);
            emit(swapsim::report::render_report(res), run_opts.out_path);
        } else if (cmd_sweep->parsed()) {
            const auto cfg = build_config(sweep_opts);
            const auto points = swapsim::pipeline::sweep(cfg, sweep_key, sweep_values);
            emit(swapsim::report::render_sweep(sweep_key, points), sweep_opts.out_path);
        } else if (cmd_analyze->parsed()) {
            const auto cfg = build_config(analyze_opts);
            auto local = swapsim::tagio::import_tags(local_path);
            local.recorder = swapsim::tagstream::Recorder::LaPalma;
            local.block_seconds = cfg.block_seconds;
            std::optional<swapsim::tagstream::TagStream> remote;
            if (!remote_path.empty()) {
                remote = swapsim::tagio::import_tags(remote_path);
                remote->recorder = swapsim::tagstream::Recorder::Tenerife;
                remote->block_seconds = cfg.block_seconds;
            }
            const auto res = swapsim::pipeline::analyze(cfg, local, remote);
            emit(swapsim::report::render_report(res), analyze_opts.out_path);
        } else if (cmd_selftest->parsed()) {
            return run_selftest();
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    return kOk;
}
