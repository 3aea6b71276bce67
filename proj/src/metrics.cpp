// SPDX-License-Identifier: Apache-2.0
#include "bdris/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace bdris {

Complex desired_amplitude(int k, const BeamformerState& bf, const EffectiveChannels& eff) {
    const int users = static_cast<int>(bf.precoders.size());
    return bf.combiners[k].dot(eff.h_tilde[k][prev_user(k, users)] * bf.precoders[k]);
}

Complex loop_amplitude(int k, const BeamformerState& bf, const EffectiveChannels& eff,
                       const ChannelSet& ch) {
    const int users = static_cast<int>(bf.precoders.size());
    return bf.combiners[k].dot((ch.h_si[k] + eff.h_bar[k]) * bf.precoders[next_user(k, users)]);
}

double other_user_power(int k, const BeamformerState& bf, const EffectiveChannels& eff) {
    const int users = static_cast<int>(bf.precoders.size());
    const int skip = next_user(k, users);
    double total = 0.0;
    for (int i = 0; i < users; ++i) {
        if (i == k || i == skip) continue;
        total += std::norm(bf.combiners[k].dot(eff.h_tilde[k][prev_user(i, users)] * bf.precoders[i]));
    }
    return total;
}

double interference_power(int k, const BeamformerState& bf, const EffectiveChannels& eff,
                          const ChannelSet& ch) {
    return other_user_power(k, bf, eff) + std::norm(loop_amplitude(k, bf, eff, ch));
}

double sinr(int k, const BeamformerState& bf, const EffectiveChannels& eff, const ChannelSet& ch,
            double noise_w) {
    const double signal = std::norm(desired_amplitude(k, bf, eff));
    const double denom = interference_power(k, bf, eff, ch) + bf.combiners[k].squaredNorm() * noise_w;
    return denom > 0.0 ? signal / denom : 0.0;
}

RateReport weighted_sum_rate(const BeamformerState& bf, const EffectiveChannels& eff,
                             const ChannelSet& ch, const ScenarioConfig& cfg) {
    const int users = static_cast<int>(bf.precoders.size());
    RateReport r;
    r.per_user_sinr.resize(users);
    r.per_user_rate.resize(users);
    r.other_user_power.resize(users);
    for (int k = 0; k < users; ++k) {
        r.per_user_sinr[k] = sinr(k, bf, eff, ch, cfg.noise_w);
        r.per_user_rate[k] = std::log2(1.0 + r.per_user_sinr[k]);
        r.weighted_sum += cfg.weights[k] * r.per_user_rate[k];
        r.other_user_power[k] = other_user_power(k, bf, eff);
    }
    return r;
}

std::vector<double> default_beam_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 720; ++i) grid.push_back(0.25 * i);
    return grid;
}

BeampatternSet beampatterns(const CMat& phi, const ChannelSet& ch,
                            const std::vector<double>& grid_deg, bool structural) {
    if (ch.antennas != 1)
        throw std::invalid_argument("beampatterns: defined for single-antenna users only");
    const int users = ch.users, m = ch.elements;
    CMat s = phi;
    if (structural) s.diagonal().array() -= 1.0;

    BeampatternSet out;
    out.grid_deg = grid_deg;
    out.structural = structural;
    out.impinging.assign(users, std::vector<double>(grid_deg.size()));
    out.reflected.assign(users, std::vector<double>(grid_deg.size()));

    double peak = 0.0;
    for (int k = 0; k < users; ++k) {
        // row vector h_{k+1}^T S and column vector S h_k
        const CVec rx = s.transpose() * ch.h_ref[next_user(k, users)].col(0);
        const CVec tx = s * ch.h_ref[k].col(0);
        for (std::size_t g = 0; g < grid_deg.size(); ++g) {
            const CVec a = steering_vector(deg_to_rad(grid_deg[g]), m);
            out.impinging[k][g] = std::norm((rx.transpose() * a).value());
            out.reflected[k][g] = std::norm((a.transpose() * tx).value());
            peak = std::max({peak, out.impinging[k][g], out.reflected[k][g]});
        }
    }
    out.normalizer = peak;
    if (peak > 0.0) {
        for (int k = 0; k < users; ++k) {
            for (auto& v : out.impinging[k]) v /= peak;
            for (auto& v : out.reflected[k]) v /= peak;
        }
    }
    return out;
}

}  // namespace bdris
