// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "bdris/beamformers.hpp"
#include "bdris/scattering.hpp"

namespace bdris {

struct InitialState {
    BeamformerState bf;
    SurrogateState sur;
    RisState ris;
    CMat phi;
};

/// Deterministic starting point for the scattering matrix: I, or -I when structural
/// scattering is modeled (Phi - I would vanish at I and leave no channel to start from).
/// Both are unitary, symmetric and diagonal.
CMat initial_phi(const ScenarioConfig& cfg);

/// Random feasible scattering matrix for extra restarts: Haar unitary blocks
/// (U U^T for reciprocal groups), uniform phases for the diagonal class.
CMat random_feasible_phi(const RisArchitecture& arch, RandomStream& rng);

/// Beamformers matched to Phi: w_k is the principal left singular vector of
/// Htilde_{k,k-1}, p_k = sqrt(P_{k-1}) v / ||v|| with v = Htilde_{k,k-1}^H w_k.
/// iota and tau are at their closed-form values.
InitialState initialize(const ScenarioConfig& cfg, const ChannelSet& ch, const CMat& phi);
InitialState initialize(const ScenarioConfig& cfg, const ChannelSet& ch);

class MonotonicityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OptimizerReport {
    std::vector<double> objective_trace;  // f_tau at the end of each iteration
    std::vector<double> sum_rate_trace;   // f_o at the end of each iteration
    bool converged = false;
    int iterations_used = 0;
    std::vector<std::vector<PddTraceRow>> pdd_traces;
    RateReport final_rates;
    double wall_time_s = 0.0;

    double start_objective = 0.0;        // f_o at the initial point
    double max_tightness_gap = 0.0;      // max |f_tau - f_o| right after the iota/tau updates
    double max_monotone_violation = 0.0; // max (v_{t-1} - v_t), positive means a decrease
    int pdd_nonconverged = 0;            // scattering solves that ended above 1e3 eps
    int rejected_phi_updates = 0;        // scattering solves that would have lowered f_tau
    int restart_used = 0;
    CMat phi;
    BeamformerState bf;
};

/// Block coordinate ascent: iota, tau, precoders, combiners, scattering matrix, repeated
/// until the relative change of f_tau falls below bcd_rel_tol.
OptimizerReport run(const ScenarioConfig& cfg, const ChannelSet& ch);
OptimizerReport run_from(const ScenarioConfig& cfg, const ChannelSet& ch, const CMat& phi0);

/// Sum of per-user rates (the unweighted "sum-rate").
double sum_rate(const RateReport& r);

struct ArmSummary {
    std::string label;
    RisArchitecture arch;
    std::vector<double> sum_rates;  // one per trial
    double mean = 0.0;
    double stderr_ = 0.0;
};

struct PairedStat {
    std::string first, second;
    double mean_diff = 0.0;  // mean of (first - second)
    double stderr_ = 0.0;
    int n = 0;
};

struct ArchitectureComparison {
    std::vector<ArmSummary> arms;
    std::vector<PairedStat> paired;  // every ordered pair i < j
};

/// Default comparison arms at the config's element count: NR and R fully connected, D.
std::vector<RisArchitecture> default_arms(int elements);

/// Runs every arm on identical channel realizations per trial.
ArchitectureComparison compare_architectures(const ScenarioConfig& cfg,
                                             const std::vector<TrialSeed>& seeds,
                                             const std::vector<RisArchitecture>& arms);

double mean_of(const std::vector<double>& x);
double stderr_of(const std::vector<double>& x);
PairedStat paired_stat(const std::string& a, const std::vector<double>& x, const std::string& b,
                       const std::vector<double>& y);

/// One JSON object per run.
std::string report_json(const OptimizerReport& r, const ScenarioConfig& cfg);

}  // namespace bdris
