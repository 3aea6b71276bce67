// SPDX-License-Identifier: Apache-2.0
#include "bdris/beamformers.hpp"

#include <cmath>
#include <limits>

namespace bdris {

PrecoderQuadratics build_zeta(int k, const BeamformerState& bf, const SurrogateState& sur,
                              const EffectiveChannels& eff, const ChannelSet& ch,
                              const ScenarioConfig& cfg) {
    const int users = static_cast<int>(bf.precoders.size());
    const int n = ch.antennas;
    const int tx = prev_user(k, users);  // the user that radiates p_k

    PrecoderQuadratics q{CMat::Zero(n, n), CMat::Zero(n, n)};
    for (int j = 0; j < users; ++j) {
        if (j == tx) continue;
        const double weight = cfg.weights[j] * std::norm(sur.tau[j]);
        if (weight == 0.0) continue;
        const CVec g = eff.h_tilde[j][tx].adjoint() * bf.combiners[j];
        q.zeta1.noalias() += weight * g * g.adjoint();
    }
    const CVec l = (ch.h_si[tx] + eff.h_bar[tx]).adjoint() * bf.combiners[tx];
    q.zeta2 = l * l.adjoint();
    return q;
}

PrecoderUpdate solve_power_constrained(const CMat& quad, const CVec& rhs, double budget,
                                       const BisectionParams& params) {
    const Eigen::Index n = rhs.size();
    PrecoderUpdate out{CVec::Zero(n), 0.0, 0};
    if (rhs.squaredNorm() == 0.0 || !(budget > 0.0)) return out;

    const Eigen::SelfAdjointEigenSolver<CMat> eig(quad);
    const RVec lambda = eig.eigenvalues().cwiseMax(0.0);
    const CVec c = eig.eigenvectors().adjoint() * rhs;
    const RVec c2 = c.cwiseAbs2();

    auto norm2 = [&](double mu) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (c2(i) == 0.0) continue;
            const double d = lambda(i) + mu;
            if (d <= 0.0) return std::numeric_limits<double>::infinity();
            s += c2(i) / (d * d);
        }
        return s;
    };
    auto solution = [&](double mu) {
        CVec y(n);
        for (Eigen::Index i = 0; i < n; ++i)
            y(i) = c2(i) == 0.0 ? Complex{} : c(i) / (lambda(i) + mu);
        return CVec(eig.eigenvectors() * y);
    };

    // Negligible eigenvalues count as singular directions.
    const double floor = 1e-14 * std::max(1.0, lambda.maxCoeff());
    bool singular = false;
    for (Eigen::Index i = 0; i < n; ++i)
        if (c2(i) > 0.0 && lambda(i) <= floor) singular = true;
    if (!singular && norm2(0.0) <= budget) {
        out.precoder = solution(0.0);
        return out;
    }

    double lo = 0.0, hi = 1.0;
    int doublings = 0;
    while (norm2(hi) > budget) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > params.max_doublings)
            throw BisectionError("update_precoder: power constraint not bracketed");
    }
    int steps = 0;
    for (; steps < 400; ++steps) {
        const double v = norm2(hi);
        if (budget - v <= params.tol * budget) break;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (norm2(mid) > budget) lo = mid;
        else hi = mid;
    }
    out.precoder = solution(hi);
    out.mu = hi;
    out.bisection_steps = steps + doublings;
    return out;
}

PrecoderUpdate update_precoder(int k, const BeamformerState& bf, const SurrogateState& sur,
                               const EffectiveChannels& eff, const ChannelSet& ch,
                               const ScenarioConfig& cfg) {
    const int users = static_cast<int>(bf.precoders.size());
    const int tx = prev_user(k, users);
    const PrecoderQuadratics q = build_zeta(k, bf, sur, eff, ch, cfg);
    const CMat quad = q.zeta1 + cfg.weights[tx] * std::norm(sur.tau[tx]) * q.zeta2;
    const CVec rhs = cfg.weights[k] * std::sqrt(1.0 + sur.iota[k]) * sur.tau[k] *
                     (eff.h_tilde[k][tx].adjoint() * bf.combiners[k]);
    return solve_power_constrained(quad, rhs, cfg.tx_power_w[tx],
                                   {cfg.solver.bisection_tol, cfg.solver.bisection_max_iters});
}

CombinerQuadratic build_xi(int k, const BeamformerState& bf, const EffectiveChannels& eff,
                           const ChannelSet& ch, double noise_w) {
    const int users = static_cast<int>(bf.precoders.size());
    const int n = ch.antennas;
    const int nxt = next_user(k, users);
    CombinerQuadratic out{noise_w * CMat::Identity(n, n)};
    const CVec loop = (ch.h_si[k] + eff.h_bar[k]) * bf.precoders[nxt];
    out.xi.noalias() += loop * loop.adjoint();
    for (int i = 0; i < users; ++i) {
        if (i == nxt) continue;
        const CVec r = eff.h_tilde[k][prev_user(i, users)] * bf.precoders[i];
        out.xi.noalias() += r * r.adjoint();
    }
    return out;
}

CombinerUpdate update_combiner(int k, const BeamformerState& bf, const SurrogateState& sur,
                               const EffectiveChannels& eff, const ChannelSet& ch,
                               const ScenarioConfig& cfg) {
    const int users = static_cast<int>(bf.precoders.size());
    CombinerUpdate out{bf.combiners[k], 0.0, false};
    const Complex tau = sur.tau[k];
    if (std::norm(tau) == 0.0) return out;

    const CombinerQuadratic q = build_xi(k, bf, eff, ch, cfg.noise_w);
    const CVec rhs = std::sqrt(1.0 + sur.iota[k]) * std::conj(tau) *
                     (eff.h_tilde[k][prev_user(k, users)] * bf.precoders[k]);
    const CVec raw = CMat(std::norm(tau) * q.xi).ldlt().solve(rhs);
    const double nrm = raw.norm();
    if (!(nrm > 0.0) || !raw.allFinite()) return out;
    out.combiner = raw / nrm;
    out.raw_norm = nrm;
    out.updated = true;
    return out;
}

}  // namespace bdris
