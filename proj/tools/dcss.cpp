// Monte Carlo harness for distributed cooperative spectrum sensing
// experiments. Each subcommand reproduces one experiment family and writes
// plot-ready records; see README.md for the config format and file schemas.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "dcss/config.hpp"
#include "dcss/harness.hpp"
#include "dcss/io.hpp"
#include "dcss/scenario.hpp"

namespace {

using dcss::DetectorKind;
using dcss::DetectorSpec;
using dcss::ScenarioConfig;

DetectorSpec spec_of(DetectorKind kind, dcss::WeightKind scheme = dcss::WeightKind::uniform) {
    DetectorSpec s;
    s.kind = kind;
    s.mwsed_scheme = scheme;
    s.em_scheme = scheme;
    return s;
}

ScenarioConfig preset_consensus() {
    ScenarioConfig cfg;
    cfg.id = "consensus";
    cfg.n_sus = 10;
    cfg.connectivity = 0.5;
    cfg.channel.samples_per_interval = 12;
    cfg.channel.snr_db = -3.0;
    cfg.trials = 100;
    cfg.consensus_tol = 0.01;
    cfg.detectors = {spec_of(DetectorKind::ed)};
    return cfg;
}

ScenarioConfig preset_dist() {
    ScenarioConfig cfg;
    cfg.id = "dist";
    cfg.n_sus = 1;
    cfg.channel.samples_per_interval = 12;
    cfg.channel.snr_db = -3.0;
    cfg.window_length = 150;
    cfg.trials = 10000;
    cfg.dist_c_list = {4, 20, 90};
    cfg.detectors = {spec_of(DetectorKind::mwsed_oracle)};
    return cfg;
}

ScenarioConfig preset_roc() {
    // local (single-SU) detection: the matched-sample statistic against the
    // windowed baselines
    ScenarioConfig cfg;
    cfg.id = "roc";
    cfg.n_sus = 1;
    cfg.channel.samples_per_interval = 12;
    cfg.channel.snr_db = -3.0;
    cfg.window_length = 150;
    cfg.trials = 4000;
    cfg.detectors = {spec_of(DetectorKind::ed), spec_of(DetectorKind::wsed),
                     spec_of(DetectorKind::mwsed_oracle)};
    return cfg;
}

ScenarioConfig preset_err_surface() {
    ScenarioConfig cfg;
    cfg.id = "err-surface";
    cfg.n_sus = 20;
    cfg.connectivity = 0.2;
    cfg.window_length = 150;
    cfg.trials = 50;
    cfg.consensus_tol = 0.5;
    cfg.snr_list = {-5.0, -3.0, 0.0};
    cfg.l_list = {8, 12, 36};
    cfg.detectors = {spec_of(DetectorKind::em_mwsed)};
    return cfg;
}

ScenarioConfig preset_em_converge() {
    ScenarioConfig cfg;
    cfg.id = "em-converge";
    cfg.n_sus = 10;
    cfg.connectivity = 0.2;
    cfg.window_length = 150;
    cfg.trials = 50;
    cfg.consensus_tol = 0.5;
    cfg.snr_list = {-5.0, -3.0, 0.0};
    cfg.l_list = {12, 36};
    cfg.detectors = {spec_of(DetectorKind::em_mwsed)};
    return cfg;
}

ScenarioConfig preset_pd_vs_snr() {
    ScenarioConfig cfg;
    cfg.id = "pd-vs-snr";
    cfg.n_sus = 20;
    cfg.connectivity = 0.5;
    cfg.window_length = 150;
    cfg.trials = 2000;
    cfg.consensus_tol = 0.5;
    cfg.snr_list = {-6.0, -5.0, -4.0, -3.0, -2.0, -1.0, 0.0};
    cfg.pd_target_pf = 0.1;
    cfg.detectors = {spec_of(DetectorKind::mwsed_oracle), spec_of(DetectorKind::em_mwsed)};
    return cfg;
}

struct CommonOpts {
    std::string config_path;
    std::string out = "results.csv";
    std::string format = "csv";
    std::uint64_t seed = 0;
    long long trials = 0;
    int workers = 0;
    bool seed_set = false, trials_set = false, workers_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "scenario config file (key = value)");
    cmd->add_option("--out", opts.out, "output path")->capture_default_str();
    cmd->add_option("--format", opts.format, "csv or jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}))
        ->capture_default_str();
    cmd->add_option("--seed", opts.seed, "master seed")->each([&](const std::string&) {
        opts.seed_set = true;
    });
    cmd->add_option("--trials", opts.trials, "Monte Carlo trials")->each([&](const std::string&) {
        opts.trials_set = true;
    });
    cmd->add_option("--workers", opts.workers, "worker threads")->each([&](const std::string&) {
        opts.workers_set = true;
    });
}

ScenarioConfig resolve(const ScenarioConfig& preset, const CommonOpts& opts) {
    ScenarioConfig cfg = preset;
    if (!opts.config_path.empty()) cfg.apply(dcss::KeyValueConfig::from_file(opts.config_path));
    if (opts.seed_set) cfg.master_seed = opts.seed;
    if (opts.trials_set) cfg.trials = opts.trials;
    if (opts.workers_set) cfg.workers = opts.workers;
    return cfg;
}

dcss::OutputFormat format_of(const CommonOpts& opts) {
    return opts.format == "jsonl" ? dcss::OutputFormat::jsonl : dcss::OutputFormat::csv;
}

// "results.csv" + "hist" -> "results.hist.csv"
std::string derived_path(const std::string& out, const std::string& tag) {
    const std::size_t dot = out.find_last_of('.');
    if (dot == std::string::npos || out.find('/', dot) != std::string::npos)
        return out + "." + tag;
    return out.substr(0, dot) + "." + tag + out.substr(dot);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distributed cooperative spectrum sensing simulator"};
    app.require_subcommand(1);

    CommonOpts consensus_opts, dist_opts, roc_opts, surface_opts, converge_opts, pd_opts;
    std::string traces_out;

    auto* cmd_consensus =
        app.add_subcommand("consensus", "iterations-to-consensus study with trace export");
    add_common(cmd_consensus, consensus_opts);
    cmd_consensus->add_option("--traces", traces_out,
                              "also write per-seed value traces to this path");

    auto* cmd_dist =
        app.add_subcommand("dist", "statistic distributions for controlled selection sizes");
    add_common(cmd_dist, dist_opts);

    auto* cmd_roc = app.add_subcommand("roc", "ROC sweep over the configured detectors");
    add_common(cmd_roc, roc_opts);

    auto* cmd_surface =
        app.add_subcommand("err-surface", "state estimation error over an (SNR, L) grid");
    add_common(cmd_surface, surface_opts);

    auto* cmd_converge =
        app.add_subcommand("em-converge", "parameter MSE per EM iteration over (SNR, L) points");
    add_common(cmd_converge, converge_opts);

    auto* cmd_pd = app.add_subcommand("pd-vs-snr", "detection probability at matched false-alarm");
    add_common(cmd_pd, pd_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (cmd_consensus->parsed()) {
            const ScenarioConfig cfg = resolve(preset_consensus(), consensus_opts);
            const bool keep = !traces_out.empty();
            const auto res = dcss::consensus_study(cfg, keep);
            dcss::emit_results(res.records, consensus_opts.out, format_of(consensus_opts));

            dcss::Table seeds;
            seeds.columns = {"scenario", "seed", "iterations", "converged"};
            for (std::size_t s = 0; s < res.iterations.size(); ++s)
                seeds.add_row({cfg.id, static_cast<long long>(s),
                               static_cast<long long>(res.iterations[s]),
                               static_cast<long long>(res.converged[s])});
            dcss::write_table(seeds, derived_path(consensus_opts.out, "seeds"),
                              format_of(consensus_opts));

            if (keep) {
                dcss::Table traces;
                traces.columns = {"scenario", "seed", "iteration", "su", "value"};
                for (std::size_t s = 0; s < res.traces.size(); ++s)
                    for (std::size_t k = 0; k < res.traces[s].size(); ++k)
                        for (std::size_t i = 0; i < res.traces[s][k].size(); ++i)
                            traces.add_row({cfg.id, static_cast<long long>(s),
                                            static_cast<long long>(k), static_cast<long long>(i),
                                            res.traces[s][k][i]});
                dcss::write_table(traces, traces_out, format_of(consensus_opts));
            }
        } else if (cmd_dist->parsed()) {
            const ScenarioConfig cfg = resolve(preset_dist(), dist_opts);
            const auto res = dcss::dist_study(cfg);
            dcss::write_table(res.summary, dist_opts.out, format_of(dist_opts));
            dcss::write_table(res.histogram, derived_path(dist_opts.out, "hist"),
                              format_of(dist_opts));
        } else if (cmd_roc->parsed()) {
            const ScenarioConfig cfg = resolve(preset_roc(), roc_opts);
            const auto res = dcss::roc_sweep(cfg);
            dcss::emit_results(res.records, roc_opts.out, format_of(roc_opts));
        } else if (cmd_surface->parsed()) {
            const ScenarioConfig cfg = resolve(preset_err_surface(), surface_opts);
            const auto res = dcss::estimation_error_surface(cfg);
            dcss::emit_results(res.records, surface_opts.out, format_of(surface_opts));
        } else if (cmd_converge->parsed()) {
            ScenarioConfig base = resolve(preset_em_converge(), converge_opts);
            if (base.snr_list.empty()) base.snr_list = {base.channel.snr_db};
            if (base.l_list.empty()) base.l_list = {base.channel.samples_per_interval};
            std::vector<dcss::MetricRecord> records;
            for (double snr : base.snr_list)
                for (long long l : base.l_list) {
                    ScenarioConfig cfg = base;
                    cfg.channel.snr_db = snr;
                    cfg.channel.samples_per_interval = static_cast<int>(l);
                    const auto res = dcss::mse_trace(cfg);
                    records.insert(records.end(), res.records.begin(), res.records.end());
                }
            dcss::emit_results(records, converge_opts.out, format_of(converge_opts));
        } else if (cmd_pd->parsed()) {
            const ScenarioConfig cfg = resolve(preset_pd_vs_snr(), pd_opts);
            const auto res = dcss::pd_vs_snr(cfg);
            dcss::emit_results(res.records, pd_opts.out, format_of(pd_opts));
        }
    } catch (const dcss::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
