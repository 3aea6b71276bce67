// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bdris {

enum class Connectivity { diagonal, group_connected, fully_connected };
enum class Reciprocity { reciprocal, non_reciprocal };

std::string to_string(Connectivity c);
std::string to_string(Reciprocity r);
Connectivity parse_connectivity(const std::string& s);
Reciprocity parse_reciprocity(const std::string& s);

struct RisArchitecture {
    int elements = 16;
    int group_size = 16;
    Connectivity connectivity = Connectivity::fully_connected;
    Reciprocity reciprocity = Reciprocity::non_reciprocal;

    int groups() const { return group_size > 0 ? elements / group_size : 0; }
    bool reciprocal() const { return reciprocity == Reciprocity::reciprocal; }

    bool operator==(const RisArchitecture&) const = default;
};

/// Short arm label used in tables: "NR", "R", "D", or e.g. "NR-g4" for group-connected.
std::string arm_label(const RisArchitecture& arch);

struct SolverParams {
    int bcd_max_iters = 50;
    double bcd_rel_tol = 1e-4;
    int pdd_inner_max = 50;
    double pdd_inner_tol = 1e-8;  // relative change of the augmented Lagrangian
    int pdd_outer_max = 200;
    double pdd_eps = 1e-6;
    double pdd_rho0 = 1.0;  // relative to the curvature scale of the scattering subproblem
    double pdd_scale = 0.8;
    double bisection_tol = 1e-8;
    int bisection_max_iters = 100;
    int restarts = 1;
    /// Abort a run when the BCD objective decreases by more than 1e-8.
    bool strict_monotone = false;

    bool operator==(const SolverParams&) const = default;
};

/// Full experiment description. External units: degrees, dBm, meters.
/// Derived fields (suffix `_w`, `_rad`, `si_gain`) are filled by validate().
struct ScenarioConfig {
    int users = 3;
    int antennas = 1;
    std::vector<double> user_angles_deg{30.0, 90.0, 150.0};
    std::vector<double> user_distances_m;  // empty: 35 m each
    RisArchitecture ris;
    double pathloss_ref_db = -30.0;
    double exponent_ris = 2.2;
    double exponent_direct = 3.3;
    double rician_kappa = 5.0;  // +inf for pure line of sight
    std::vector<double> tx_power_dbm;  // empty: 20 dBm each
    double noise_dbm = -80.0;
    double residual_si_gain = -1.0;  // negative: derive as noise / mean transmit power
    std::vector<double> weights;     // empty: 1/K each
    bool structural_scattering = true;
    bool direct_links = false;
    double user_departure_deg = 90.0;
    SolverParams solver;
    std::uint64_t seed = 1;
    int trials = 1;

    // derived
    std::vector<double> user_angles_rad;
    std::vector<double> tx_power_w;
    double noise_w = 0.0;
    double si_gain = 0.0;

    bool operator==(const ScenarioConfig&) const = default;
};

class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Checks every invariant and fills derived fields. Throws ConfigError naming the
/// first offending field. validate(validate(c)) == validate(c).
ScenarioConfig validate(ScenarioConfig config);

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);
double db_to_linear(double db);

struct TrialSeed {
    int trial_index = 0;
    std::uint64_t derived_seed = 0;
};

/// splitmix64 over a Weyl-sequence counter; injective in `trial` for fixed `seed`.
TrialSeed derive_trial_seed(std::uint64_t seed, int trial);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Flat "key = value" config documents.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues to_key_values(const ScenarioConfig& config);
std::string serialize_config(const ScenarioConfig& config);
ScenarioConfig parse_config(const std::string& text, ScenarioConfig base = {});
ScenarioConfig load_config(const std::string& path, ScenarioConfig base = {});
/// Applies one key/value pair; unknown keys throw ConfigError.
void apply_setting(ScenarioConfig& config, const std::string& key, const std::string& value);

}  // namespace bdris
