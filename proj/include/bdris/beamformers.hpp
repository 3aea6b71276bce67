// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "bdris/surrogate.hpp"

namespace bdris {

/// Quadratic forms penalizing precoder p_k in f_tau.
///  zeta1: sum over receivers j != k-1 of alpha_j |tau_j|^2 Htilde_{j,k-1}^H w_j w_j^H Htilde_{j,k-1}
///         (every receiver that sees p_k through a composite channel, already weighted)
///  zeta2: X^H w_{k-1} w_{k-1}^H X with X = H_SI,k-1 + Hbar_{k-1} (loop at the transmitting user)
struct PrecoderQuadratics {
    CMat zeta1;
    CMat zeta2;
};

/// xi_k = X p_{k+1} p_{k+1}^H X^H + sum_{i != k+1} Htilde_{k,i-1} p_i p_i^H Htilde_{k,i-1}^H + sigma^2 I
/// with X = H_SI,k + Hbar_k.
struct CombinerQuadratic {
    CMat xi;
};

struct PrecoderUpdate {
    CVec precoder;
    double mu = 0.0;
    int bisection_steps = 0;
};

struct CombinerUpdate {
    CVec combiner;
    double raw_norm = 0.0;  // norm of the unconstrained solution before normalization
    bool updated = false;
};

struct BisectionParams {
    double tol = 1e-8;
    int max_doublings = 100;
};

class BisectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

PrecoderQuadratics build_zeta(int k, const BeamformerState& bf, const SurrogateState& sur,
                              const EffectiveChannels& eff, const ChannelSet& ch,
                              const ScenarioConfig& cfg);

/// Maximizes the p_k part of f_tau subject to ||p_k||^2 <= P_{k-1}:
///  p_k = (zeta1 + alpha_{k-1} |tau_{k-1}|^2 zeta2 + mu I)^{-1} alpha_k sqrt(1+iota_k) tau_k Htilde_{k,k-1}^H w_k
/// with mu = 0 when the unconstrained solution is feasible, otherwise found by bisection.
PrecoderUpdate update_precoder(int k, const BeamformerState& bf, const SurrogateState& sur,
                               const EffectiveChannels& eff, const ChannelSet& ch,
                               const ScenarioConfig& cfg);

/// Core of update_precoder for an explicit Hermitian PSD system; exposed for testing.
PrecoderUpdate solve_power_constrained(const CMat& quad, const CVec& rhs, double budget,
                                       const BisectionParams& params);

CombinerQuadratic build_xi(int k, const BeamformerState& bf, const EffectiveChannels& eff,
                           const ChannelSet& ch, double noise_w);

/// Unconstrained maximizer (|tau_k|^2 xi_k)^{-1} sqrt(1+iota_k) tau_k^* Htilde_{k,k-1} p_k,
/// normalized to unit norm. Left unchanged when tau_k = 0 or the solution vanishes.
CombinerUpdate update_combiner(int k, const BeamformerState& bf, const SurrogateState& sur,
                               const EffectiveChannels& eff, const ChannelSet& ch,
                               const ScenarioConfig& cfg);

}  // namespace bdris
