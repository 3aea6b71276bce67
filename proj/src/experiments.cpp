// SPDX-License-Identifier: Apache-2.0
#include "bdris/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

namespace bdris {

namespace {

const std::vector<std::pair<Experiment, std::string>>& experiment_names() {
    static const std::vector<std::pair<Experiment, std::string>> names = {
        {Experiment::elements, "elements"},
        {Experiment::moving_user, "moving_user"},
        {Experiment::group_size, "group_size"},
        {Experiment::antennas, "antennas"},
        {Experiment::users, "users"},
        {Experiment::rate_region, "rate_region"},
        {Experiment::beampatterns, "beampatterns"},
        {Experiment::security_power, "security_power"},
        {Experiment::convergence, "convergence"},
    };
    return names;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string to_string(Experiment e) {
    for (const auto& [k, v] : experiment_names())
        if (k == e) return v;
    return "unknown";
}

Experiment parse_experiment(const std::string& s) {
    for (const auto& [k, v] : experiment_names())
        if (v == s) return k;
    throw ConfigError("experiment", "unknown experiment '" + s + "'");
}

const std::vector<Experiment>& all_experiments() {
    static const std::vector<Experiment> all = [] {
        std::vector<Experiment> v;
        for (const auto& [k, name] : experiment_names()) v.push_back(k);
        return v;
    }();
    return all;
}

// ---------------------------------------------------------------- arms

RisArchitecture ArmSpec::resolve(int elements) const {
    RisArchitecture a;
    a.elements = elements;
    a.group_size = group_size <= 0 ? elements : group_size;
    a.reciprocity = reciprocity;
    if (a.group_size == 1) {
        a.connectivity = Connectivity::diagonal;
        a.reciprocity = Reciprocity::reciprocal;
    } else if (a.group_size == elements) {
        a.connectivity = Connectivity::fully_connected;
    } else {
        a.connectivity = Connectivity::group_connected;
    }
    return a;
}

ArmSpec parse_arm(const std::string& raw) {
    const std::string s = trim(raw);
    if (s == "D") return {Reciprocity::reciprocal, 1};
    std::string head = s, tail;
    if (const auto dash = s.find("-g"); dash != std::string::npos) {
        head = s.substr(0, dash);
        tail = s.substr(dash + 2);
    }
    ArmSpec a;
    if (head == "NR") a.reciprocity = Reciprocity::non_reciprocal;
    else if (head == "R") a.reciprocity = Reciprocity::reciprocal;
    else throw ConfigError("arms", "unknown arm '" + s + "' (expected NR, R, D, NR-g<size>, R-g<size>)");
    if (!tail.empty()) {
        try {
            std::size_t used = 0;
            a.group_size = std::stoi(tail, &used);
            if (used != tail.size() || a.group_size < 1) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ConfigError("arms", "bad group size in '" + s + "'");
        }
    }
    return a;
}

std::vector<ArmSpec> parse_arms(const std::string& list) {
    std::vector<ArmSpec> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty()) out.push_back(parse_arm(item));
    if (out.empty()) throw ConfigError("arms", "empty arm list");
    return out;
}

std::string arm_spec_label(const ArmSpec& a) {
    if (a.group_size == 1) return "D";
    std::string s = a.reciprocity == Reciprocity::reciprocal ? "R" : "NR";
    if (a.group_size > 1) s += "-g" + std::to_string(a.group_size);
    return s;
}

// ---------------------------------------------------------------- spec

std::vector<double> default_sweep(Experiment e, const ScenarioConfig& cfg) {
    switch (e) {
        case Experiment::elements: return {8, 16, 24, 32};
        case Experiment::moving_user: {
            std::vector<double> v;
            for (int a = 1; a < 180; ++a) v.push_back(a);
            return v;
        }
        case Experiment::group_size: {
            std::vector<double> v;
            for (int g = 1; g <= cfg.ris.elements; g *= 2)
                if (cfg.ris.elements % g == 0) v.push_back(g);
            return v;
        }
        case Experiment::antennas: return {1, 2, 3, 4};
        case Experiment::users: return {2, 3, 4, 5};
        case Experiment::rate_region: return {0.1};
        case Experiment::beampatterns: return {static_cast<double>(cfg.ris.elements)};
        case Experiment::security_power: return {0, 10, 20, 30, 40};
        case Experiment::convergence: return {0.8, 0.9};
    }
    return {};
}

namespace {

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

ScenarioConfig with_overrides(const ScenarioConfig& cfg, const KeyValues& overrides) {
    ScenarioConfig c = cfg;
    for (const auto& [k, v] : overrides) apply_setting(c, k, v);
    return validate(c);
}

}  // namespace

void validate_spec(const SweepSpec& spec, const ScenarioConfig& cfg) {
    if (spec.trials < 1) throw ConfigError("trials", "must be at least 1");
    const ScenarioConfig base = with_overrides(cfg, spec.fixed_overrides);
    const std::vector<double> values =
        spec.swept_values.empty() ? default_sweep(spec.experiment, base) : spec.swept_values;
    if (values.empty()) throw ConfigError("sweep", "no swept values");
    for (double v : values) {
        switch (spec.experiment) {
            case Experiment::elements:
            case Experiment::group_size:
            case Experiment::antennas:
            case Experiment::users:
            case Experiment::beampatterns:
                if (!is_integer(v) || v < 1) throw ConfigError("sweep", "values must be positive integers");
                break;
            case Experiment::moving_user:
                if (!(v > 0.0 && v < 180.0)) throw ConfigError("sweep", "angles must lie in (0, 180)");
                break;
            case Experiment::rate_region:
                if (!(v > 0.0 && v <= 1.0) || std::abs(std::round(1.0 / v) * v - 1.0) > 1e-9)
                    throw ConfigError("sweep", "rate-region step must divide 1");
                break;
            case Experiment::security_power:
                if (!std::isfinite(v)) throw ConfigError("sweep", "powers must be finite");
                break;
            case Experiment::convergence:
                if (!(v > 0.0 && v < 1.0)) throw ConfigError("sweep", "penalty scale must lie in (0, 1)");
                break;
        }
    }
    if (spec.experiment == Experiment::moving_user &&
        (spec.mover < 0 || spec.mover >= base.users))
        throw ConfigError("mover", "moving user index out of range");
}

// ---------------------------------------------------------------- table

std::string format_cell(const Table::Cell& c) {
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    const double d = std::get<double>(c);
    if (std::isnan(d)) return "nan";
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns_.size())
        throw std::invalid_argument("Table::add: row width does not match the header");
    rows_.push_back(std::move(row));
}

int Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i] == name) return static_cast<int>(i);
    throw std::out_of_range("Table: no column '" + name + "'");
}

double Table::number(std::size_t r, const std::string& col) const {
    const Cell& c = rows_.at(r)[column(col)];
    if (const auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&c)) return *d;
    return std::stod(std::get<std::string>(c));
}

std::string Table::text(std::size_t r, const std::string& col) const {
    return format_cell(rows_.at(r)[column(col)]);
}

std::string Table::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
    out += "\n";
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
        out += "\n";
    }
    return out;
}

std::string Table::to_json() const {
    // Numbers are emitted through format_cell so that JSON and CSV agree digit for digit;
    // non-finite values become strings.
    std::string out = "[";
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        out += r ? ",\n{" : "\n{";
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            out += (i ? "," : "") + nlohmann::json(columns_[i]).dump() + ":";
            const Cell& c = rows_[r][i];
            const bool finite_number =
                !std::holds_alternative<std::string>(c) &&
                (!std::holds_alternative<double>(c) || std::isfinite(std::get<double>(c)));
            out += finite_number ? format_cell(c) : nlohmann::json(format_cell(c)).dump();
        }
        out += "}";
    }
    out += "\n]\n";
    return out;
}

// ---------------------------------------------------------------- sweeps

std::vector<std::vector<double>> simplex_grid(int users, double step) {
    const int n = static_cast<int>(std::lround(1.0 / step));
    std::vector<std::vector<double>> out;
    std::vector<int> parts(users, 0);
    std::function<void(int, int)> rec = [&](int idx, int left) {
        if (idx == users - 1) {
            parts[idx] = left;
            std::vector<double> w(users);
            for (int i = 0; i < users; ++i) w[i] = static_cast<double>(parts[i]) / n;
            out.push_back(w);
            return;
        }
        for (int v = left; v >= 0; --v) {
            parts[idx] = v;
            rec(idx + 1, left - v);
        }
    };
    rec(0, n);
    return out;
}

namespace {

double other_user_power_db(const RateReport& r, double noise_w) {
    double total = 0.0;
    for (double p : r.other_user_power) total += p;
    const double mean = total / static_cast<double>(std::max<std::size_t>(1, r.other_user_power.size()));
    return 10.0 * std::log10(std::max(mean / noise_w, 1e-300));
}

std::vector<double> spread_angles(int users) {
    if (users == 1) return {90.0};
    std::vector<double> a(users);
    for (int k = 0; k < users; ++k) a[k] = 30.0 + 120.0 * k / (users - 1);
    return a;
}

std::string value_column(Experiment e) {
    switch (e) {
        case Experiment::elements: return "elements";
        case Experiment::moving_user: return "mover_angle_deg";
        case Experiment::group_size: return "group_size";
        case Experiment::antennas: return "antennas";
        case Experiment::users: return "users";
        case Experiment::rate_region: return "weight_index";
        case Experiment::beampatterns: return "elements";
        case Experiment::security_power: return "tx_power_dbm";
        case Experiment::convergence: return "penalty_scale";
    }
    return "value";
}

// Scenario of one sweep cell before validation.
ScenarioConfig cell_config(const SweepSpec& spec, const ScenarioConfig& base, double value,
                           const ArmSpec& arm) {
    ScenarioConfig c = base;
    switch (spec.experiment) {
        case Experiment::elements:
        case Experiment::beampatterns:
            c.ris = arm.resolve(static_cast<int>(value));
            return c;
        case Experiment::moving_user:
            c.user_angles_deg[spec.mover] = value;
            break;
        case Experiment::group_size: {
            ArmSpec a = arm;
            a.group_size = static_cast<int>(value);
            c.ris = a.resolve(c.ris.elements);
            return c;
        }
        case Experiment::antennas:
            c.antennas = static_cast<int>(value);
            break;
        case Experiment::users:
            c.users = static_cast<int>(value);
            c.user_angles_deg = spread_angles(c.users);
            c.user_distances_m.clear();
            c.tx_power_dbm.clear();
            c.weights.clear();
            break;
        case Experiment::security_power:
            c.tx_power_dbm.assign(c.users, value);
            break;
        case Experiment::convergence:
            c.solver.pdd_scale = value;
            break;
        case Experiment::rate_region:
            break;
    }
    c.ris = arm.resolve(c.ris.elements);
    return c;
}

struct CellOutcome {
    std::string arm;
    std::string architecture;
    double value = 0.0;
    int trial = 0;
    OptimizerReport report;
    double noise_w = 0.0;
};

void add_trial_tables(SweepResult& res, const std::vector<CellOutcome>& cells,
                      const std::string& vcol) {
    Table trials({vcol, "arm", "architecture", "trial", "sum_rate", "weighted_sum_rate",
                  "other_user_power_db", "iterations", "converged", "pdd_nonconverged"});
    Table per_user({vcol, "arm", "trial", "user", "rate", "sinr", "other_user_power_w"});
    for (const auto& c : cells) {
        const RateReport& r = c.report.final_rates;
        trials.add({c.value, c.arm, c.architecture, static_cast<long long>(c.trial), sum_rate(r),
                    r.weighted_sum, other_user_power_db(r, c.noise_w),
                    static_cast<long long>(c.report.iterations_used),
                    static_cast<long long>(c.report.converged ? 1 : 0),
                    static_cast<long long>(c.report.pdd_nonconverged)});
        for (std::size_t k = 0; k < r.per_user_rate.size(); ++k)
            per_user.add({c.value, c.arm, static_cast<long long>(c.trial),
                          static_cast<long long>(k + 1), r.per_user_rate[k], r.per_user_sinr[k],
                          r.other_user_power[k]});
    }
    res.tables["trials"] = std::move(trials);
    res.tables["per_user"] = std::move(per_user);
}

// Mean/stderr per (value, arm) and paired differences between arms per value, in
// first-seen order of values and arms.
void add_summary_tables(SweepResult& res, const std::vector<CellOutcome>& cells,
                        const std::string& vcol,
                        const std::function<double(const CellOutcome&)>& metric_a,
                        const std::string& name_a,
                        const std::function<double(const CellOutcome&)>& metric_b,
                        const std::string& name_b) {
    std::vector<double> values;
    std::vector<std::string> arms;
    for (const auto& c : cells) {
        if (std::find(values.begin(), values.end(), c.value) == values.end()) values.push_back(c.value);
        if (std::find(arms.begin(), arms.end(), c.arm) == arms.end()) arms.push_back(c.arm);
    }
    auto series = [&](double v, const std::string& arm,
                      const std::function<double(const CellOutcome&)>& f) {
        std::vector<double> out;
        for (const auto& c : cells)
            if (c.value == v && c.arm == arm) out.push_back(f(c));
        return out;
    };
    Table summary({vcol, "arm", "n", name_a + "_mean", name_a + "_stderr", name_b + "_mean",
                   name_b + "_stderr"});
    Table paired({vcol, "arm_a", "arm_b", "n", name_a + "_diff_mean", name_a + "_diff_stderr",
                  name_b + "_diff_mean", name_b + "_diff_stderr"});
    for (double v : values) {
        for (const auto& arm : arms) {
            const auto a = series(v, arm, metric_a), b = series(v, arm, metric_b);
            if (a.empty()) continue;
            summary.add({v, arm, static_cast<long long>(a.size()), mean_of(a), stderr_of(a),
                         mean_of(b), stderr_of(b)});
        }
        for (std::size_t i = 0; i < arms.size(); ++i) {
            for (std::size_t j = i + 1; j < arms.size(); ++j) {
                const auto ai = series(v, arms[i], metric_a), aj = series(v, arms[j], metric_a);
                const auto bi = series(v, arms[i], metric_b), bj = series(v, arms[j], metric_b);
                if (ai.empty() || aj.empty()) continue;
                const PairedStat pa = paired_stat(arms[i], ai, arms[j], aj);
                const PairedStat pb = paired_stat(arms[i], bi, arms[j], bj);
                paired.add({v, arms[i], arms[j], static_cast<long long>(pa.n), pa.mean_diff,
                            pa.stderr_, pb.mean_diff, pb.stderr_});
            }
        }
    }
    res.tables["summary"] = std::move(summary);
    res.tables["paired"] = std::move(paired);
}

CellOutcome run_cell(const ScenarioConfig& raw, const ArmSpec& arm, double value,
                     const TrialSeed& seed) {
    const ScenarioConfig c = validate(raw);
    const ChannelSet ch = sample_channels(c, seed);
    CellOutcome out;
    out.arm = arm_spec_label(arm);
    out.architecture = arm_label(c.ris);
    out.value = value;
    out.trial = seed.trial_index;
    out.report = run(c, ch);
    out.noise_w = c.noise_w;
    return out;
}

int argmax(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec_in, const ScenarioConfig& cfg) {
    validate_spec(spec_in, cfg);
    SweepResult res;
    res.experiment = spec_in.experiment;
    res.spec = spec_in;
    if (res.spec.arms.empty()) res.spec.arms = parse_arms("NR,R,D");
    if (res.spec.experiment == Experiment::group_size) {
        // one arm per reciprocity class; the group size comes from the sweep
        std::vector<ArmSpec> arms;
        for (const auto& a : res.spec.arms) {
            if (a.group_size == 1) continue;
            ArmSpec b{a.reciprocity, 0};
            if (std::none_of(arms.begin(), arms.end(), [&](const ArmSpec& x) { return x.reciprocity == b.reciprocity; }))
                arms.push_back(b);
        }
        if (arms.empty()) arms.push_back({});
        res.spec.arms = arms;
    }
    KeyValues overrides = res.spec.fixed_overrides;
    if (res.spec.experiment == Experiment::beampatterns) overrides.emplace_back("rician_kappa", "inf");
    res.base = with_overrides(cfg, overrides);
    if (res.spec.swept_values.empty()) res.spec.swept_values = default_sweep(res.spec.experiment, res.base);

    const SweepSpec& spec = res.spec;
    const ScenarioConfig& base = res.base;
    const std::string vcol = value_column(spec.experiment);
    std::vector<TrialSeed> seeds;
    for (int t = 0; t < spec.trials; ++t) seeds.push_back(derive_trial_seed(base.seed, t));

    std::vector<CellOutcome> cells;

    if (spec.experiment == Experiment::rate_region) {
        const auto grid = simplex_grid(base.users, spec.swept_values.front());
        std::vector<std::string> cols{"weight_index"};
        for (int k = 0; k < base.users; ++k) cols.push_back("alpha_" + std::to_string(k + 1));
        cols.insert(cols.end(), {"arm", "trial"});
        for (int k = 0; k < base.users; ++k) cols.push_back("rate_" + std::to_string(k + 1));
        cols.push_back("weighted_sum_rate");
        Table region(cols);
        for (std::size_t wi = 0; wi < grid.size(); ++wi) {
            for (const auto& arm : spec.arms) {
                ScenarioConfig c = cell_config(spec, base, static_cast<double>(wi), arm);
                c.weights = grid[wi];
                for (const auto& seed : seeds) {
                    CellOutcome o = run_cell(c, arm, static_cast<double>(wi), seed);
                    std::vector<Table::Cell> row{static_cast<long long>(wi)};
                    for (double a : grid[wi]) row.push_back(a);
                    row.push_back(o.arm);
                    row.push_back(static_cast<long long>(o.trial));
                    for (double r : o.report.final_rates.per_user_rate) row.push_back(r);
                    row.push_back(o.report.final_rates.weighted_sum);
                    region.add(std::move(row));
                    cells.push_back(std::move(o));
                }
            }
        }
        res.tables["region"] = std::move(region);
        add_summary_tables(
            res, cells, vcol, [](const CellOutcome& c) { return c.report.final_rates.weighted_sum; },
            "weighted_sum_rate", [](const CellOutcome& c) { return sum_rate(c.report.final_rates); },
            "sum_rate");
        return res;
    }

    for (double v : spec.swept_values) {
        for (const auto& arm : spec.arms) {
            const ScenarioConfig c = cell_config(spec, base, v, arm);
            for (const auto& seed : seeds) cells.push_back(run_cell(c, arm, v, seed));
        }
    }
    add_trial_tables(res, cells, vcol);
    add_summary_tables(
        res, cells, vcol, [](const CellOutcome& c) { return sum_rate(c.report.final_rates); },
        "sum_rate",
        [](const CellOutcome& c) { return other_user_power_db(c.report.final_rates, c.noise_w); },
        "other_user_power_db");

    if (spec.experiment == Experiment::beampatterns) {
        Table patterns({"elements", "arm", "trial", "variant", "user", "angle_deg", "impinging",
                        "reflected"});
        Table peaks({"elements", "arm", "trial", "variant", "user", "own_angle_deg",
                     "next_angle_deg", "impinging_peak_deg", "reflected_peak_deg"});
        const std::vector<double> grid = default_beam_grid();
        for (const auto& cell : cells) {
            ScenarioConfig c = cell_config(spec, base, cell.value, parse_arm(cell.arm));
            c = validate(c);
            const ChannelSet ch = sample_channels(c, derive_trial_seed(base.seed, cell.trial));
            std::vector<bool> variants{false};
            if (c.structural_scattering) variants.push_back(true);
            for (bool structural : variants) {
                const std::string variant = structural ? "with_structural_scattering" : "classic";
                const BeampatternSet bp = beampatterns(cell.report.phi, ch, grid, structural);
                for (int k = 0; k < c.users; ++k) {
                    for (std::size_t g = 0; g < grid.size(); ++g)
                        patterns.add({cell.value, cell.arm, static_cast<long long>(cell.trial),
                                      variant, static_cast<long long>(k + 1), grid[g],
                                      bp.impinging[k][g], bp.reflected[k][g]});
                    peaks.add({cell.value, cell.arm, static_cast<long long>(cell.trial), variant,
                               static_cast<long long>(k + 1), c.user_angles_deg[k],
                               c.user_angles_deg[next_user(k, c.users)],
                               grid[argmax(bp.impinging[k])], grid[argmax(bp.reflected[k])]});
                }
            }
        }
        res.tables["patterns"] = std::move(patterns);
        res.tables["peaks"] = std::move(peaks);
    }

    if (spec.experiment == Experiment::convergence) {
        Table bcd({"penalty_scale", "arm", "trial", "iteration", "objective", "weighted_sum_rate"});
        Table pdd({"penalty_scale", "arm", "trial", "bcd_iteration", "outer_iter", "inner_iters",
                   "augmented_lagrangian", "gap", "rho"});
        for (const auto& cell : cells) {
            const auto& rep = cell.report;
            bcd.add({cell.value, cell.arm, static_cast<long long>(cell.trial), 0LL,
                     rep.start_objective, rep.start_objective});
            for (std::size_t t = 0; t < rep.objective_trace.size(); ++t)
                bcd.add({cell.value, cell.arm, static_cast<long long>(cell.trial),
                         static_cast<long long>(t + 1), rep.objective_trace[t],
                         rep.sum_rate_trace[t]});
            for (std::size_t t = 0; t < rep.pdd_traces.size(); ++t) {
                const auto& rows = rep.pdd_traces[t];
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    const bool last_of_outer =
                        i + 1 == rows.size() || rows[i + 1].outer_iter != rows[i].outer_iter;
                    if (!last_of_outer) continue;
                    pdd.add({cell.value, cell.arm, static_cast<long long>(cell.trial),
                             static_cast<long long>(t + 1),
                             static_cast<long long>(rows[i].outer_iter),
                             static_cast<long long>(rows[i].inner_iter),
                             rows[i].augmented_lagrangian, rows[i].gap, rows[i].rho});
                }
            }
        }
        res.tables["bcd"] = std::move(bcd);
        res.tables["pdd"] = std::move(pdd);
    }
    return res;
}

// ---------------------------------------------------------------- structural term

double structural_scattering_probe(double angle_a_deg, double angle_b_deg, int elements) {
    // cos a + cos b = 2 cos((a+b)/2) cos((a-b)/2); the half-sum is exactly 90 deg for
    // supplementary pairs, where the cosine is taken as an exact zero. The magnitude is
    // steep in the phase for large M, so phase and sum are carried in extended precision.
    using LD = long double;
    const LD pi = 3.141592653589793238462643383279502884L;
    const auto cos_deg = [pi](double d) -> LD {
        const double r = std::fmod(std::abs(d), 180.0);
        return r == 90.0 ? 0.0L : std::cos(static_cast<LD>(d) * pi / 180.0L);
    };
    const LD x = 2.0L * pi * cos_deg(0.5 * (angle_a_deg + angle_b_deg)) *
                 cos_deg(0.5 * (angle_a_deg - angle_b_deg));
    LD re = 0.0L, im = 0.0L;
    for (int n = 0; n < elements; ++n) {
        re += std::cos(n * x);
        im += std::sin(n * x);
    }
    return static_cast<double>(std::hypot(re, im));
}

BoundCheck structural_bound(const CVec& h_k, const CVec& h_km1, const CMat& phi) {
    const Complex direct = (h_k.transpose() * h_km1).value();
    const Complex through = (h_k.transpose() * phi * h_km1).value();
    const double lhs = std::norm(through - direct);
    const double rhs = std::pow(h_k.norm() * h_km1.norm() + std::abs(direct), 2);
    return {lhs, rhs};
}

namespace {

// Unitary whose first column is exactly x (unit norm).
CMat complete_unitary(const CVec& x) {
    const Eigen::Index m = x.size();
    const CMat col = x;
    Eigen::HouseholderQR<CMat> qr(col);
    CMat q = qr.householderQ() * CMat::Identity(m, m);
    const Complex c = q.col(0).dot(x);
    q.col(0) *= c / std::abs(c);
    return q;
}

}  // namespace

EqualityConditionFixture build_equality_fixture(const CVec& h_km1, const CVec& h_k) {
    if (!(h_km1.norm() > 0.0) || !(h_k.norm() > 0.0))
        throw std::invalid_argument("build_equality_fixture: channels must be nonzero");
    EqualityConditionFixture f;
    f.h_km1 = h_km1;
    f.h_k = h_k;
    const Complex direct = (h_k.transpose() * h_km1).value();
    f.beta = std::abs(direct) > 0.0 ? -direct / std::abs(direct) : Complex{1.0, 0.0};
    const CVec x = h_km1 / h_km1.norm();
    const CVec y = f.beta * h_k.conjugate() / h_k.norm();
    f.phi_constructed = complete_unitary(y) * complete_unitary(x).adjoint();
    return f;
}

// ---------------------------------------------------------------- export

std::string git_blob_sha1(const std::string& data) {
    const std::string blob = "blob " + std::to_string(data.size()) + std::string(1, '\0') + data;
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, blob.data(), blob.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha1: digest failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

ExportFormat parse_format(const std::string& s) {
    if (s == "csv") return ExportFormat::csv;
    if (s == "json") return ExportFormat::json;
    throw ConfigError("format", "expected csv or json, got '" + s + "'");
}

std::string manifest_json(const SweepResult& r) {
    nlohmann::ordered_json j;
    j["experiment"] = to_string(r.experiment);
    j["seed"] = r.base.seed;
    j["trials"] = r.spec.trials;
    std::vector<std::string> arms;
    for (const auto& a : r.spec.arms) arms.push_back(arm_spec_label(a));
    j["arms"] = arms;
    std::vector<std::string> values;
    for (double v : r.spec.swept_values) values.push_back(format_cell(v));
    j["swept_values"] = values;
    if (r.experiment == Experiment::moving_user) j["mover"] = r.spec.mover + 1;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    for (const auto& [k, v] : to_key_values(r.base)) config[k] = v;
    j["config"] = config;
    std::string inputs = serialize_config(r.base);
    inputs += "experiment = " + to_string(r.experiment) + "\n";
    inputs += "trials = " + std::to_string(r.spec.trials) + "\n";
    for (const auto& a : arms) inputs += "arm = " + a + "\n";
    for (const auto& v : values) inputs += "value = " + v + "\n";
    j["input_sha1"] = git_blob_sha1(inputs);
    std::vector<std::string> tables;
    for (const auto& [name, t] : r.tables) tables.push_back(name);
    j["tables"] = tables;
    if (r.experiment == Experiment::beampatterns)
        j["note"] = "variant with_structural_scattering uses Phi - I; classic uses Phi";
    return j.dump(2) + "\n";
}

ScenarioConfig config_from_manifest(const std::string& manifest_text) {
    const auto j = nlohmann::json::parse(manifest_text);
    std::string text;
    for (const auto& [k, v] : j.at("config").items()) text += k + " = " + v.get<std::string>() + "\n";
    return parse_config(text);
}

std::vector<std::string> export_results(const SweepResult& r, ExportFormat fmt,
                                        const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("export: cannot create '" + dir + "': " + ec.message());
    std::vector<std::string> written;
    auto write = [&](const std::string& name, const std::string& content) {
        const std::string path = (fs::path(dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("export: cannot write '" + path + "'");
        out << content;
        if (!out) throw std::runtime_error("export: write failed for '" + path + "'");
        written.push_back(path);
    };
    const std::string stem = to_string(r.experiment) + "_";
    for (const auto& [name, t] : r.tables) {
        if (fmt == ExportFormat::csv) write(stem + name + ".csv", t.to_csv());
        else write(stem + name + ".json", t.to_json());
    }
    write("manifest.json", manifest_json(r));
    return written;
}

}  // namespace bdris
