// SPDX-License-Identifier: Apache-2.0
// Shared fixtures and brute-force reference computations for the test binaries.
#pragma once

#include <cmath>
#include <vector>

#include "bdris/driver.hpp"

namespace bdris::testing {

inline ScenarioConfig small_config(int users, int antennas, int elements,
                                   Connectivity conn = Connectivity::fully_connected,
                                   Reciprocity rec = Reciprocity::non_reciprocal,
                                   int group_size = 0, bool structural = true,
                                   bool direct = false, std::uint64_t seed = 7) {
    ScenarioConfig c;
    c.users = users;
    c.antennas = antennas;
    c.user_angles_deg.clear();
    for (int k = 0; k < users; ++k) c.user_angles_deg.push_back(30.0 + 120.0 * k / std::max(1, users - 1));
    c.ris.elements = elements;
    c.ris.connectivity = conn;
    c.ris.reciprocity = rec;
    if (conn == Connectivity::fully_connected) c.ris.group_size = elements;
    else if (conn == Connectivity::diagonal) c.ris.group_size = 1;
    else c.ris.group_size = group_size;
    c.structural_scattering = structural;
    c.direct_links = direct;
    c.seed = seed;
    return validate(c);
}

/// Random precoders inside the power budget and random unit-norm combiners.
inline BeamformerState random_beamformers(const ScenarioConfig& cfg, RandomStream& rng) {
    BeamformerState bf;
    const int users = cfg.users, n = cfg.antennas;
    for (int k = 0; k < users; ++k) {
        CVec p = rng.complex_normal(n, 1);
        p *= std::sqrt(cfg.tx_power_w[prev_user(k, users)] * rng.uniform()) / p.norm();
        bf.precoders.push_back(p);
        CVec w = rng.complex_normal(n, 1);
        bf.combiners.push_back(w / w.norm());
    }
    bf.last_mu.assign(users, 0.0);
    return bf;
}

inline CMat haar(int n, RandomStream& rng) {
    RisArchitecture a{n, n, Connectivity::fully_connected, Reciprocity::non_reciprocal};
    return random_feasible_phi(a, rng);
}

/// SINRs written out term by term from the raw channels; no EffectiveChannels involved.
inline std::vector<double> reference_sinr(const ChannelSet& ch, const BeamformerState& bf,
                                          const CMat& phi, bool structural, double noise) {
    const int users = ch.users;
    CMat s = phi;
    if (structural)
        for (int m = 0; m < phi.rows(); ++m) s(m, m) -= 1.0;
    auto through = [&](int rx, int tx, const CVec& p, bool self) {
        // w_rx^H (D + h_ref[rx]^T S h_ref[tx]) p
        Complex acc{};
        const CVec& w = bf.combiners[rx];
        for (int a = 0; a < ch.antennas; ++a)
            for (int b = 0; b < ch.antennas; ++b) {
                Complex hv = self ? ch.h_si[rx](a, b) : ch.h_dir[rx][tx](b, a);
                for (int m1 = 0; m1 < ch.elements; ++m1)
                    for (int m2 = 0; m2 < ch.elements; ++m2)
                        hv += ch.h_ref[rx](m1, a) * s(m1, m2) * ch.h_ref[tx](m2, b);
                acc += std::conj(w(a)) * hv * p(b);
            }
        return acc;
    };
    std::vector<double> out(users);
    for (int k = 0; k < users; ++k) {
        const int prev = (k + users - 1) % users, next = (k + 1) % users;
        const double sig = std::norm(through(k, prev, bf.precoders[k], false));
        double den = noise * bf.combiners[k].squaredNorm();
        den += std::norm(through(k, k, bf.precoders[next], true));
        for (int i = 0; i < users; ++i) {
            if (i == k || i == next) continue;
            den += std::norm(through(k, (i + users - 1) % users, bf.precoders[i], false));
        }
        out[k] = sig / den;
    }
    return out;
}

inline double reference_rate(const ChannelSet& ch, const BeamformerState& bf, const CMat& phi,
                             const ScenarioConfig& cfg) {
    const auto g = reference_sinr(ch, bf, phi, cfg.structural_scattering, cfg.noise_w);
    double f = 0.0;
    for (int k = 0; k < cfg.users; ++k) f += cfg.weights[k] * std::log2(1.0 + g[k]);
    return f;
}

inline double unitarity_error(const CMat& phi) {
    return (phi.adjoint() * phi - CMat::Identity(phi.rows(), phi.cols())).norm();
}

}  // namespace bdris::testing
