// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "bdris/driver.hpp"

namespace bdris {

enum class Experiment {
    elements,
    moving_user,
    group_size,
    antennas,
    users,
    rate_region,
    beampatterns,
    security_power,
    convergence,
};

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& s);
const std::vector<Experiment>& all_experiments();

/// Architecture relative to the element count: group_size 0 means fully connected.
struct ArmSpec {
    Reciprocity reciprocity = Reciprocity::non_reciprocal;
    int group_size = 0;

    RisArchitecture resolve(int elements) const;
};

/// "NR", "R", "D", "NR-g4", "R-g2" (comma-separated lists accepted by parse_arms).
ArmSpec parse_arm(const std::string& s);
std::vector<ArmSpec> parse_arms(const std::string& list);
std::string arm_spec_label(const ArmSpec& a);

struct SweepSpec {
    Experiment experiment = Experiment::elements;
    std::vector<double> swept_values;  // empty: experiment default
    KeyValues fixed_overrides;
    int trials = 1;
    std::vector<ArmSpec> arms;         // empty: NR, R, D
    int mover = 2;                     // moving_user: index of the user that moves
};

/// Default swept values per experiment.
std::vector<double> default_sweep(Experiment e, const ScenarioConfig& cfg);

/// Checks the spec against the base config; throws ConfigError on a bad spec.
void validate_spec(const SweepSpec& spec, const ScenarioConfig& cfg);

/// A column-typed result table. Doubles are printed with %.17g, so every export is
/// byte-reproducible.
class Table {
public:
    using Cell = std::variant<long long, double, std::string>;

    Table() = default;
    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add(std::vector<Cell> row);
    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t size() const { return rows_.size(); }
    const std::vector<Cell>& row(std::size_t i) const { return rows_[i]; }
    int column(const std::string& name) const;
    double number(std::size_t row, const std::string& col) const;
    std::string text(std::size_t row, const std::string& col) const;

    std::string to_csv() const;
    std::string to_json() const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

std::string format_cell(const Table::Cell& c);

struct SweepResult {
    Experiment experiment = Experiment::elements;
    ScenarioConfig base;
    SweepSpec spec;
    std::map<std::string, Table> tables;
};

/// Runs one study. Every table is a pure function of (spec, cfg).
///  trials:   one row per (arm, value, trial)
///  summary:  mean and stderr per (arm, value)
///  paired:   paired differences between arms per value
/// plus experiment-specific tables (rate_region: region; beampatterns: patterns and peaks;
/// convergence: bcd and pdd traces).
SweepResult run_sweep(const SweepSpec& spec, const ScenarioConfig& cfg);

/// Weight vectors on the uniform barycentric grid of the K-simplex with the given step.
std::vector<std::vector<double>> simplex_grid(int users, double step);

/// |sum_{n=0}^{M-1} exp(j n pi (cos a + cos b))|, the structural term for pure LoS users.
double structural_scattering_probe(double angle_a_deg, double angle_b_deg, int elements);

/// Both sides of the channel-strength bound for N = 1:
///  value = |h_k^T (Phi - I) h_{k-1}|^2, bound = (||h_k|| ||h_{k-1}|| + |h_k^T h_{k-1}|)^2.
struct BoundCheck {
    double value = 0.0;
    double bound = 0.0;
};
BoundCheck structural_bound(const CVec& h_k, const CVec& h_km1, const CMat& phi);

struct EqualityConditionFixture {
    CVec h_km1, h_k;
    Complex beta;
    CMat phi_constructed;
};

/// Unitary Phi mapping h_{k-1}/||h_{k-1}|| to beta h_k^* / ||h_k||, with beta chosen so
/// the reflected term and the structural term add in phase. Attains the bound.
EqualityConditionFixture build_equality_fixture(const CVec& h_km1, const CVec& h_k);

/// Git-style blob hash: SHA-1 of "blob <len>\0" + data, lowercase hex.
std::string git_blob_sha1(const std::string& data);

enum class ExportFormat { csv, json };
ExportFormat parse_format(const std::string& s);

/// Writes one file per table (<experiment>_<table>.csv|json) plus manifest.json with the
/// resolved config, the spec, the input hash and the seed. Returns the written paths.
std::vector<std::string> export_results(const SweepResult& r, ExportFormat fmt,
                                        const std::string& dir);

/// Manifest text (JSON). Its "config" object is a flat key/value map accepted by
/// parse_config after joining as "key = value" lines.
std::string manifest_json(const SweepResult& r);
ScenarioConfig config_from_manifest(const std::string& manifest_text);

}  // namespace bdris
