// SPDX-License-Identifier: Apache-2.0
#include "bdris/surrogate.hpp"

#include <cmath>

namespace bdris {

double gamma_total(int k, const BeamformerState& bf, const EffectiveChannels& eff,
                   const ChannelSet& ch) {
    return interference_power(k, bf, eff, ch) + std::norm(desired_amplitude(k, bf, eff));
}

std::vector<double> update_iota(const BeamformerState& bf, const EffectiveChannels& eff,
                                const ChannelSet& ch, const ScenarioConfig& cfg) {
    std::vector<double> iota(bf.precoders.size());
    for (std::size_t k = 0; k < iota.size(); ++k)
        iota[k] = sinr(static_cast<int>(k), bf, eff, ch, cfg.noise_w);
    return iota;
}

std::vector<Complex> update_tau(const BeamformerState& bf, const EffectiveChannels& eff,
                                const ChannelSet& ch, const std::vector<double>& iota,
                                const ScenarioConfig& cfg) {
    std::vector<Complex> tau(bf.precoders.size());
    for (std::size_t i = 0; i < tau.size(); ++i) {
        const int k = static_cast<int>(i);
        const double denom = gamma_total(k, bf, eff, ch) + bf.combiners[k].squaredNorm() * cfg.noise_w;
        tau[k] = denom > 0.0 ? std::sqrt(1.0 + iota[k]) * desired_amplitude(k, bf, eff) / denom
                             : Complex{};
    }
    return tau;
}

double eval_f_iota(const BeamformerState& bf, const EffectiveChannels& eff, const ChannelSet& ch,
                   const std::vector<double>& iota, const ScenarioConfig& cfg) {
    double f = 0.0;
    for (std::size_t i = 0; i < iota.size(); ++i) {
        const int k = static_cast<int>(i);
        const double denom = gamma_total(k, bf, eff, ch) + bf.combiners[k].squaredNorm() * cfg.noise_w;
        const double ratio = denom > 0.0 ? std::norm(desired_amplitude(k, bf, eff)) / denom : 0.0;
        f += cfg.weights[k] *
             (std::log2(1.0 + iota[k]) + (-iota[k] + (1.0 + iota[k]) * ratio) / kLn2);
    }
    return f;
}

double eval_f_tau(const BeamformerState& bf, const EffectiveChannels& eff, const ChannelSet& ch,
                  const SurrogateState& sur, const ScenarioConfig& cfg) {
    double f = 0.0;
    for (std::size_t i = 0; i < sur.iota.size(); ++i) {
        const int k = static_cast<int>(i);
        const double iota = sur.iota[k];
        const Complex tau = sur.tau[k];
        const double denom = gamma_total(k, bf, eff, ch) + bf.combiners[k].squaredNorm() * cfg.noise_w;
        const double linear = 2.0 * std::sqrt(1.0 + iota) *
                              (std::conj(tau) * desired_amplitude(k, bf, eff)).real();
        f += cfg.weights[k] *
             (std::log2(1.0 + iota) + (-iota + linear - std::norm(tau) * denom) / kLn2);
    }
    return f;
}

}  // namespace bdris
