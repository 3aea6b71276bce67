// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdris/surrogate.hpp"

namespace bdris {

/// Free-parameter layout of one block Phi_g. Every group shares the same pattern, so
/// the maps are stored as index vectors; the dense 0/1 matrices are built on request.
///
/// Non-reciprocal: phi_g = vec(Phi_g) (column-major), K_g = I.
/// Reciprocal: phi_g stacks, column by column, the diagonal and strictly-lower entries;
/// K_g copies each strictly-lower entry into its mirrored upper slot.
struct ArchitectureMaps {
    int elements = 0;
    int group_size = 0;
    int groups = 0;
    bool reciprocal = false;
    int free_count = 0;              // L
    std::vector<int> vec_to_free;    // size M_g^2: free index feeding each vec(Phi_g) slot
    std::vector<int> free_to_vec;    // size L: canonical (lower) vec slot of each free entry
    std::vector<int> multiplicity;   // size L: 1 (diagonal / NR) or 2 (mirrored pair)

    int offset(int g) const { return g * group_size; }

    /// K_g, M_g^2 x L.
    Eigen::MatrixXd duplication() const;
    /// R_g, M^2 x M_g^2. Dense; intended for small M.
    Eigen::MatrixXd placement(int g) const;

    CVec extract(const CMat& block) const;
    CMat reconstruct(const CVec& free) const;
    CMat assemble(const std::vector<CMat>& blocks) const;
    std::vector<CMat> split(const CMat& phi) const;
};

ArchitectureMaps build_maps(const RisArchitecture& arch);

/// f_tau(Phi) = const + 2 Re Tr(C Phi) - Tr(A Phi B Phi^H), C = C1 - C2 + C3 - C4 + C5.
/// With u_k = H_ref,k^* w_k, v_i = H_ref,i-1 p_i and a_k = alpha_k |tau_k|^2 / ln 2:
///  A  = sum_k a_k u_k u_k^H
///  B  = sum_i v_i v_i^H
///  C1 = sum_k alpha_k sqrt(1+iota_k) tau_k^* / ln 2 . v_k u_k^H
///  C2 = sum_k a_k (w_k^H H_SI,k p_{k+1})^* v_{k+1} u_k^H
///  C3 = s B A                     (s = 1 with structural scattering, else 0)
///  C4 = sum_k a_k sum_i (w_k^H D_{k,i-1}^T p_i)^* v_i u_k^H   (D: direct links, all i)
///  C5 = sum_k a_k (w_k^H D_{k,k}^T p_{k+1})^* v_{k+1} u_k^H   (the i = k+1 term of C4)
struct TraceFormCoefficients {
    CMat A, B, C1, C2, C3, C4, C5;

    CMat linear() const { return C1 - C2 + C3 - C4 + C5; }
    /// Phi-dependent part of f_tau.
    double value(const CMat& phi) const;
    bool finite() const;
};

TraceFormCoefficients assemble_trace_form(const BeamformerState& bf, const SurrogateState& sur,
                                          const ChannelSet& ch, const ScenarioConfig& cfg);

/// PDD variables. Everything is per group, M_g x M_g.
struct RisState {
    std::vector<CMat> phi_groups;
    std::vector<CMat> psi_groups;
    std::vector<CMat> lambda_groups;
    double rho = 1e-2;

    static RisState from_phi(const ArchitectureMaps& maps, const CMat& phi, double rho);
    double gap() const;  // max_g ||Phi_g - Psi_g||_inf (entrywise)
};

/// Quadratic model of the group-g augmented Lagrangian in the free parameters:
///  phi^H Delta phi - 2 Re{phi^H delta} + const.
/// Delta = K^H (B_gg^T kron A_gg) K + (1/2rho) K^H K.
/// delta = K^H vec(C_gg^H - (A Phi_rest B)_gg + (1/2rho) Psi_g - Lambda_g / 2), where Phi_rest
/// holds the other groups' current blocks.
struct GroupSubproblem {
    int group = 0;
    CMat a_block, b_block;
    double penalty = 0.0;  // 1/(2 rho)
    CVec delta;

    CMat dense_delta(const ArchitectureMaps& maps) const;
    double model(const ArchitectureMaps& maps, const CVec& free) const;
};

GroupSubproblem assemble_group_subproblem(int g, const TraceFormCoefficients& coeffs,
                                          const ArchitectureMaps& maps, const RisState& state);

struct GroupSolve {
    CVec free;
    CMat block;
    bool regularized = false;
};

/// Dense solve of Delta phi = delta via Cholesky; falls back to a ridge of
/// 1e-12 tr(Delta)/L when Delta is not numerically positive definite.
GroupSolve update_phi_group(const ArchitectureMaps& maps, const CMat& Delta, const CVec& delta);

/// Nearest unitary to rho Lambda_g + Phi_g (polar factor). A zero target yields I.
CMat update_psi_group(int g, const RisState& state);
CMat nearest_unitary(const CMat& target, bool* degenerate = nullptr);

class PddError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OuterBranch { dual, penalty };

/// One outer PDD step: dual ascent when gap < eps_outer, else rho <- c rho.
OuterBranch pdd_outer_update(RisState& state, double eps_outer, double c);

struct PddTraceRow {
    int outer_iter = 0;
    int inner_iter = 0;
    double augmented_lagrangian = 0.0;
    double gap = 0.0;
    double rho = 0.0;
};

struct ScatteringResult {
    CMat phi;        // blkdiag of the unitary copies, exactly feasible
    RisState state;
    std::vector<PddTraceRow> trace;
    int outer_iters = 0;
    double final_gap = 0.0;
    bool converged = false;   // gap <= eps
    bool acceptable = false;  // gap <= 1e3 eps; anything worse is reported as non-converged
    double objective_scale = 1.0;
    std::vector<std::string> notes;
};

/// Augmented Lagrangian in the objective's units:
///  Tr(A Phi B Phi^H) - 2 Re Tr(C Phi) + sum_g ||Phi_g - Psi_g + rho Lambda_g||_F^2 / (2 rho).
double augmented_lagrangian(const TraceFormCoefficients& coeffs, const ArchitectureMaps& maps,
                            const RisState& state);

/// Two-loop PDD on the scattering block with the other BCD blocks frozen. `phi` is the
/// current (feasible) scattering matrix used as the starting point.
ScatteringResult optimize_scattering(const BeamformerState& bf, const SurrogateState& sur,
                                     const ChannelSet& ch, const ScenarioConfig& cfg,
                                     const CMat& phi);

/// Same, starting from explicit coefficients (already in the units the solver should use).
ScatteringResult optimize_scattering(const TraceFormCoefficients& coeffs,
                                     const ArchitectureMaps& maps, const SolverParams& params,
                                     const CMat& phi);

void write_pdd_trace(std::ostream& out, const std::vector<PddTraceRow>& rows);

}  // namespace bdris
