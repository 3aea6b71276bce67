// SPDX-License-Identifier: Apache-2.0
// Command-line runner: one subcommand per study, plus `run` for a single optimization.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bdris/experiments.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "results";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trials = 0;
    std::string arms;
    std::string sweep;
    std::string structural;
    std::string direct;
    std::string format = "csv";
    std::vector<std::string> settings;
    int mover = 3;
};

bool parse_switch(const std::string& name, const std::string& v) {
    if (v == "on") return true;
    if (v == "off") return false;
    throw bdris::ConfigError(name, "expected on or off, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw bdris::ConfigError("sweep", "not a number: '" + item + "'");
        }
    }
    return out;
}

bdris::ScenarioConfig resolve_config(const CommonOptions& o) {
    bdris::ScenarioConfig cfg;
    if (!o.config_path.empty()) cfg = bdris::load_config(o.config_path);
    for (const auto& kv : o.settings) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw bdris::ConfigError("set", "expected key=value, got '" + kv + "'");
        bdris::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed_set) cfg.seed = o.seed;
    if (o.trials > 0) cfg.trials = o.trials;
    if (!o.structural.empty()) cfg.structural_scattering = parse_switch("structural-scattering", o.structural);
    if (!o.direct.empty()) cfg.direct_links = parse_switch("direct-links", o.direct);
    return bdris::validate(cfg);
}

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--config", o.config_path, "key = value config file");
    app->add_option("--out", o.out_dir, "output directory");
    app->add_option("--seed", o.seed, "base seed")->each([&o](const std::string&) { o.seed_set = true; });
    app->add_option("--trials", o.trials, "Monte-Carlo trials");
    app->add_option("--structural-scattering", o.structural, "on|off");
    app->add_option("--direct-links", o.direct, "on|off");
    app->add_option("--set", o.settings, "extra config override key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BD-RIS full-duplex circulator optimizer and study runner"};
    app.require_subcommand(1);
    CommonOptions opts;

    for (bdris::Experiment e : bdris::all_experiments()) {
        CLI::App* sub = app.add_subcommand(bdris::to_string(e), "run the " + bdris::to_string(e) + " study");
        add_common(sub, opts);
        sub->add_option("--arms", opts.arms, "comma list of NR, R, D, NR-g<size>, R-g<size>");
        sub->add_option("--sweep", opts.sweep, "comma list of swept values");
        sub->add_option("--format", opts.format, "csv|json");
        if (e == bdris::Experiment::moving_user)
            sub->add_option("--mover", opts.mover, "1-based index of the moving user");
    }
    CLI::App* run_cmd = app.add_subcommand("run", "optimize one channel realization and print a JSON report");
    add_common(run_cmd, opts);
    std::string trace_path;
    run_cmd->add_option("--pdd-trace", trace_path, "write the first scattering trace as CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        const bdris::ScenarioConfig cfg = resolve_config(opts);
        if (run_cmd->parsed()) {
            const bdris::ChannelSet ch = bdris::sample_channels(cfg, bdris::derive_trial_seed(cfg.seed, 0));
            const bdris::OptimizerReport rep = bdris::run(cfg, ch);
            std::cout << bdris::report_json(rep, cfg) << "\n";
            if (!trace_path.empty() && !rep.pdd_traces.empty()) {
                std::ofstream out(trace_path);
                if (!out) throw std::runtime_error("cannot write " + trace_path);
                bdris::write_pdd_trace(out, rep.pdd_traces.front());
            }
            return 0;
        }
        for (CLI::App* sub : app.get_subcommands()) {
            bdris::SweepSpec spec;
            spec.experiment = bdris::parse_experiment(sub->get_name());
            spec.trials = cfg.trials;
            if (!opts.arms.empty()) spec.arms = bdris::parse_arms(opts.arms);
            if (!opts.sweep.empty()) spec.swept_values = parse_list(opts.sweep);
            spec.mover = opts.mover - 1;
            const auto fmt = bdris::parse_format(opts.format);
            const bdris::SweepResult res = bdris::run_sweep(spec, cfg);
            for (const auto& path : bdris::export_results(res, fmt, opts.out_dir))
                std::cout << path << "\n";
        }
    } catch (const bdris::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
