// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "bdris/channel.hpp"
#include "bdris/config.hpp"
#include "bdris/types.hpp"

namespace bdris {

/// p_k is applied at user k-1 and carries the symbol destined for user k;
/// w_k is user k's receive combiner.
struct BeamformerState {
    std::vector<CVec> precoders;
    std::vector<CVec> combiners;
    std::vector<double> last_mu;
};

struct RateReport {
    std::vector<double> per_user_sinr;
    std::vector<double> per_user_rate;  // bits/s/Hz
    double weighted_sum = 0.0;
    std::vector<double> other_user_power;  // watts
};

/// w_k^H Htilde_{k,k-1} p_k
Complex desired_amplitude(int k, const BeamformerState& bf, const EffectiveChannels& eff);
/// w_k^H (H_SI,k + Hbar_k) p_{k+1}: self plus loop interference at user k.
Complex loop_amplitude(int k, const BeamformerState& bf, const EffectiveChannels& eff,
                       const ChannelSet& ch);

double other_user_power(int k, const BeamformerState& bf, const EffectiveChannels& eff);
double interference_power(int k, const BeamformerState& bf, const EffectiveChannels& eff,
                          const ChannelSet& ch);
double sinr(int k, const BeamformerState& bf, const EffectiveChannels& eff, const ChannelSet& ch,
            double noise_w);
RateReport weighted_sum_rate(const BeamformerState& bf, const EffectiveChannels& eff,
                             const ChannelSet& ch, const ScenarioConfig& cfg);

/// Impinging/reflected angular responses for single-antenna users.
///  impinging_k(theta) = |h_{k+1}^T S a(theta)|^2, reflected_k(theta) = |a(theta)^T S h_k|^2
/// with S = Phi, or Phi - I when `structural` is set (an extension; the classic pattern is
/// defined without structural scattering). All patterns share one normalizer so that the
/// global maximum is 1.
struct BeampatternSet {
    std::vector<double> grid_deg;
    std::vector<std::vector<double>> impinging;
    std::vector<std::vector<double>> reflected;
    double normalizer = 1.0;  // pre-normalization global maximum
    bool structural = false;
};

std::vector<double> default_beam_grid();  // 0..180 deg in 0.25 deg steps
BeampatternSet beampatterns(const CMat& phi, const ChannelSet& ch,
                            const std::vector<double>& grid_deg, bool structural = false);

}  // namespace bdris
