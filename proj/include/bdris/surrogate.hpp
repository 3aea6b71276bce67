// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "bdris/metrics.hpp"

namespace bdris {

/// Fractional-programming auxiliaries: iota (Lagrangian dual transform) and tau
/// (quadratic transform), one per user.
struct SurrogateState {
    std::vector<double> iota;
    std::vector<Complex> tau;
};

/// Gamma_k = I_k + |w_k^H Htilde_{k,k-1} p_k|^2 (received power excluding noise).
double gamma_total(int k, const BeamformerState& bf, const EffectiveChannels& eff,
                   const ChannelSet& ch);

/// iota_k = gamma_k.
std::vector<double> update_iota(const BeamformerState& bf, const EffectiveChannels& eff,
                                const ChannelSet& ch, const ScenarioConfig& cfg);

/// tau_k = sqrt(1 + iota_k) w_k^H Htilde_{k,k-1} p_k / (Gamma_k + ||w_k||^2 sigma^2).
std::vector<Complex> update_tau(const BeamformerState& bf, const EffectiveChannels& eff,
                                const ChannelSet& ch, const std::vector<double>& iota,
                                const ScenarioConfig& cfg);

// Both transformed objectives are in bits. The non-logarithmic terms carry a 1/ln 2
// factor so that iota = gamma is the exact maximizer and f_tau <= f_iota <= f_o holds
// for every (iota, tau), with equality at the closed-form updates.
double eval_f_iota(const BeamformerState& bf, const EffectiveChannels& eff, const ChannelSet& ch,
                   const std::vector<double>& iota, const ScenarioConfig& cfg);
double eval_f_tau(const BeamformerState& bf, const EffectiveChannels& eff, const ChannelSet& ch,
                  const SurrogateState& sur, const ScenarioConfig& cfg);

}  // namespace bdris
