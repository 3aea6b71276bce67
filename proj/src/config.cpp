// SPDX-License-Identifier: Apache-2.0
#include "bdris/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "bdris/types.hpp"

namespace bdris {

std::string to_string(Connectivity c) {
    switch (c) {
        case Connectivity::diagonal: return "diagonal";
        case Connectivity::group_connected: return "group_connected";
        case Connectivity::fully_connected: return "fully_connected";
    }
    return "?";
}

std::string to_string(Reciprocity r) {
    return r == Reciprocity::reciprocal ? "reciprocal" : "non_reciprocal";
}

Connectivity parse_connectivity(const std::string& s) {
    if (s == "diagonal" || s == "D" || s == "single_connected") return Connectivity::diagonal;
    if (s == "group_connected" || s == "group") return Connectivity::group_connected;
    if (s == "fully_connected" || s == "fully") return Connectivity::fully_connected;
    throw ConfigError("connectivity", "unknown value '" + s + "'");
}

Reciprocity parse_reciprocity(const std::string& s) {
    if (s == "reciprocal" || s == "R") return Reciprocity::reciprocal;
    if (s == "non_reciprocal" || s == "NR") return Reciprocity::non_reciprocal;
    throw ConfigError("reciprocity", "unknown value '" + s + "'");
}

std::string arm_label(const RisArchitecture& arch) {
    if (arch.connectivity == Connectivity::diagonal || arch.group_size == 1) return "D";
    std::string base = arch.reciprocal() ? "R" : "NR";
    if (arch.group_size != arch.elements) base += "-g" + std::to_string(arch.group_size);
    return base;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

TrialSeed derive_trial_seed(std::uint64_t seed, int trial) {
    return {trial, mix_seed(seed, static_cast<std::uint64_t>(trial))};
}

namespace {

void require(bool ok, const char* field, const std::string& message) {
    if (!ok) throw ConfigError(field, message);
}

void broadcast(std::vector<double>& v, int users, double fallback, const char* field) {
    if (v.empty()) v.assign(users, fallback);
    else if (v.size() == 1 && users > 1) v.assign(users, v.front());
    require(static_cast<int>(v.size()) == users, field,
            "expected " + std::to_string(users) + " entries, got " + std::to_string(v.size()));
}

}  // namespace

ScenarioConfig validate(ScenarioConfig c) {
    require(c.users >= 2, "users", "at least 2 users required");
    require(c.antennas >= 1, "antennas", "must be positive");

    auto& ris = c.ris;
    require(ris.elements >= 1, "elements", "must be positive");
    require(ris.group_size >= 1, "group_size", "must be positive");
    require(ris.elements % ris.group_size == 0, "group_size",
            "group size must divide element count");
    if (ris.connectivity == Connectivity::diagonal) {
        require(ris.group_size == 1, "group_size", "diagonal architecture requires group size 1");
        ris.reciprocity = Reciprocity::reciprocal;
    } else if (ris.connectivity == Connectivity::fully_connected) {
        require(ris.group_size == ris.elements, "group_size",
                "fully connected architecture requires group size equal to element count");
    }
    if (ris.group_size == 1) ris.reciprocity = Reciprocity::reciprocal;

    require(static_cast<int>(c.user_angles_deg.size()) == c.users, "user_angles_deg",
            "expected one angle per user");
    for (double a : c.user_angles_deg)
        require(std::isfinite(a) && a > 0.0 && a < 180.0, "user_angles_deg",
                "angles must lie strictly inside (0, 180) degrees");
    broadcast(c.user_distances_m, c.users, 35.0, "user_distances_m");
    for (double d : c.user_distances_m)
        require(std::isfinite(d) && d > 0.0, "user_distances_m", "distances must be positive");
    broadcast(c.tx_power_dbm, c.users, 20.0, "tx_power_dbm");
    for (double p : c.tx_power_dbm)
        require(std::isfinite(p), "tx_power_dbm", "powers must be finite");
    require(std::isfinite(c.noise_dbm), "noise_dbm", "must be finite");
    require(std::isfinite(c.pathloss_ref_db), "pathloss_ref_db", "must be finite");
    require(std::isfinite(c.exponent_ris) && std::isfinite(c.exponent_direct), "exponent_ris",
            "path-loss exponents must be finite");
    require(c.rician_kappa >= 0.0 && !std::isnan(c.rician_kappa), "rician_kappa",
            "must be nonnegative");
    broadcast(c.weights, c.users, 1.0 / c.users, "weights");
    for (double a : c.weights) require(a >= 0.0 && std::isfinite(a), "weights", "must be nonnegative");
    const double wsum = std::accumulate(c.weights.begin(), c.weights.end(), 0.0);
    require(std::abs(wsum - 1.0) <= 1e-12, "weights", "weights must sum to 1");

    const auto& s = c.solver;
    require(s.pdd_scale > 0.0 && s.pdd_scale < 1.0, "pdd_scale", "must lie in (0, 1)");
    require(s.pdd_eps > 0.0, "pdd_eps", "must be positive");
    require(s.pdd_rho0 > 0.0, "pdd_rho0", "must be positive");
    require(s.pdd_inner_tol >= 0.0, "pdd_inner_tol", "must be nonnegative");
    require(s.bcd_max_iters >= 1, "bcd_max_iters", "must be positive");
    require(s.bcd_rel_tol >= 0.0, "bcd_rel_tol", "must be nonnegative");
    require(s.pdd_inner_max >= 1 && s.pdd_outer_max >= 1, "pdd_inner_max", "caps must be positive");
    require(s.bisection_tol > 0.0 && s.bisection_max_iters >= 1, "bisection_tol",
            "bisection parameters must be positive");
    require(s.restarts >= 1, "restarts", "must be positive");
    require(c.trials >= 1, "trials", "must be positive");

    c.user_angles_rad.resize(c.users);
    std::transform(c.user_angles_deg.begin(), c.user_angles_deg.end(), c.user_angles_rad.begin(),
                   deg_to_rad);
    c.tx_power_w.resize(c.users);
    std::transform(c.tx_power_dbm.begin(), c.tx_power_dbm.end(), c.tx_power_w.begin(), dbm_to_watts);
    c.noise_w = dbm_to_watts(c.noise_dbm);
    if (c.residual_si_gain >= 0.0) {
        c.si_gain = c.residual_si_gain;
    } else {
        const double mean_p =
            std::accumulate(c.tx_power_w.begin(), c.tx_power_w.end(), 0.0) / c.users;
        c.si_gain = c.noise_w / mean_p;
    }
    return c;
}

// ---------------------------------------------------------------------------
// key = value documents

namespace {

std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += fmt_double(v[i]);
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    if (v == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(key, "not a number: '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    try {
        std::size_t pos = 0;
        const long long out = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(key, "not an integer: '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    try {
        std::size_t pos = 0;
        const unsigned long long out = std::stoull(v, &pos, 0);
        if (pos != v.size() || v.starts_with("-")) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(key, "not an unsigned integer: '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    throw ConfigError(key, "not a boolean: '" + value + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(parse_double(key, item));
    }
    return out;
}

}  // namespace

KeyValues to_key_values(const ScenarioConfig& c) {
    const auto& s = c.solver;
    return {
        {"users", std::to_string(c.users)},
        {"antennas", std::to_string(c.antennas)},
        {"user_angles_deg", fmt_list(c.user_angles_deg)},
        {"user_distances_m", fmt_list(c.user_distances_m)},
        {"elements", std::to_string(c.ris.elements)},
        {"group_size", std::to_string(c.ris.group_size)},
        {"connectivity", to_string(c.ris.connectivity)},
        {"reciprocity", to_string(c.ris.reciprocity)},
        {"pathloss_ref_db", fmt_double(c.pathloss_ref_db)},
        {"exponent_ris", fmt_double(c.exponent_ris)},
        {"exponent_direct", fmt_double(c.exponent_direct)},
        {"rician_kappa", fmt_double(c.rician_kappa)},
        {"tx_power_dbm", fmt_list(c.tx_power_dbm)},
        {"noise_dbm", fmt_double(c.noise_dbm)},
        {"residual_si_gain", c.residual_si_gain < 0 ? "auto" : fmt_double(c.residual_si_gain)},
        {"weights", fmt_list(c.weights)},
        {"structural_scattering", c.structural_scattering ? "true" : "false"},
        {"direct_links", c.direct_links ? "true" : "false"},
        {"user_departure_deg", fmt_double(c.user_departure_deg)},
        {"bcd_max_iters", std::to_string(s.bcd_max_iters)},
        {"bcd_rel_tol", fmt_double(s.bcd_rel_tol)},
        {"pdd_inner_max", std::to_string(s.pdd_inner_max)},
        {"pdd_inner_tol", fmt_double(s.pdd_inner_tol)},
        {"pdd_outer_max", std::to_string(s.pdd_outer_max)},
        {"pdd_eps", fmt_double(s.pdd_eps)},
        {"pdd_rho0", fmt_double(s.pdd_rho0)},
        {"pdd_scale", fmt_double(s.pdd_scale)},
        {"bisection_tol", fmt_double(s.bisection_tol)},
        {"bisection_max_iters", std::to_string(s.bisection_max_iters)},
        {"restarts", std::to_string(s.restarts)},
        {"strict_monotone", s.strict_monotone ? "true" : "false"},
        {"seed", std::to_string(c.seed)},
        {"trials", std::to_string(c.trials)},
    };
}

std::string serialize_config(const ScenarioConfig& c) {
    std::string out;
    for (const auto& [k, v] : to_key_values(c)) out += k + " = " + v + "\n";
    return out;
}

void apply_setting(ScenarioConfig& c, const std::string& raw_key, const std::string& value) {
    const std::string key = trim(raw_key);
    auto& s = c.solver;
    auto as_int = [&] { return static_cast<int>(parse_int(key, value)); };
    if (key == "users") c.users = as_int();
    else if (key == "antennas") c.antennas = as_int();
    else if (key == "user_angles_deg") c.user_angles_deg = parse_list(key, value);
    else if (key == "user_distances_m") c.user_distances_m = parse_list(key, value);
    else if (key == "elements") c.ris.elements = as_int();
    else if (key == "group_size") c.ris.group_size = as_int();
    else if (key == "connectivity") c.ris.connectivity = parse_connectivity(trim(value));
    else if (key == "reciprocity") c.ris.reciprocity = parse_reciprocity(trim(value));
    else if (key == "pathloss_ref_db") c.pathloss_ref_db = parse_double(key, value);
    else if (key == "exponent_ris") c.exponent_ris = parse_double(key, value);
    else if (key == "exponent_direct") c.exponent_direct = parse_double(key, value);
    else if (key == "rician_kappa") c.rician_kappa = parse_double(key, value);
    else if (key == "tx_power_dbm") c.tx_power_dbm = parse_list(key, value);
    else if (key == "noise_dbm") c.noise_dbm = parse_double(key, value);
    else if (key == "residual_si_gain")
        c.residual_si_gain = trim(value) == "auto" ? -1.0 : parse_double(key, value);
    else if (key == "weights") c.weights = parse_list(key, value);
    else if (key == "structural_scattering") c.structural_scattering = parse_bool(key, value);
    else if (key == "direct_links") c.direct_links = parse_bool(key, value);
    else if (key == "user_departure_deg") c.user_departure_deg = parse_double(key, value);
    else if (key == "bcd_max_iters") s.bcd_max_iters = as_int();
    else if (key == "bcd_rel_tol") s.bcd_rel_tol = parse_double(key, value);
    else if (key == "pdd_inner_max") s.pdd_inner_max = as_int();
    else if (key == "pdd_inner_tol") s.pdd_inner_tol = parse_double(key, value);
    else if (key == "pdd_outer_max") s.pdd_outer_max = as_int();
    else if (key == "pdd_eps") s.pdd_eps = parse_double(key, value);
    else if (key == "pdd_rho0") s.pdd_rho0 = parse_double(key, value);
    else if (key == "pdd_scale") s.pdd_scale = parse_double(key, value);
    else if (key == "bisection_tol") s.bisection_tol = parse_double(key, value);
    else if (key == "bisection_max_iters") s.bisection_max_iters = as_int();
    else if (key == "restarts") s.restarts = as_int();
    else if (key == "strict_monotone") s.strict_monotone = parse_bool(key, value);
    else if (key == "seed") c.seed = parse_u64(key, value);
    else if (key == "trials") c.trials = as_int();
    else throw ConfigError(key, "unknown configuration key");
}

ScenarioConfig parse_config(const std::string& text, ScenarioConfig base) {
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
        apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
    }
    return base;
}

ScenarioConfig load_config(const std::string& path, ScenarioConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), std::move(base));
}

}  // namespace bdris
