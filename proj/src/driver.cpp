// SPDX-License-Identifier: Apache-2.0
#include "bdris/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

namespace bdris {

CMat initial_phi(const ScenarioConfig& cfg) {
    const int m = cfg.ris.elements;
    return cfg.structural_scattering ? CMat(-CMat::Identity(m, m)) : CMat(CMat::Identity(m, m));
}

namespace {

CMat haar_unitary(int n, RandomStream& rng) {
    const CMat z = rng.complex_normal(n, n);
    Eigen::HouseholderQR<CMat> qr(z);
    CMat q = qr.householderQ();
    const CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        const Complex d = r(j, j);
        if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
    }
    return q;
}

CVec principal_left(const CMat& h) {
    const Eigen::JacobiSVD<CMat> svd(h, Eigen::ComputeFullU);
    CVec u = svd.matrixU().col(0);
    if (svd.singularValues().size() == 0 || svd.singularValues()(0) == 0.0) {
        u = CVec::Zero(h.rows());
        u(0) = 1.0;
    }
    return u;
}

void check_finite(const BeamformerState& bf, const SurrogateState& sur, const CMat& phi) {
    for (const auto& p : bf.precoders)
        if (!p.allFinite()) throw NumericalError("precoder", "non-finite entry");
    for (const auto& w : bf.combiners)
        if (!w.allFinite()) throw NumericalError("combiner", "non-finite entry");
    for (double v : sur.iota)
        if (!std::isfinite(v)) throw NumericalError("iota", "non-finite entry");
    for (const auto& v : sur.tau)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw NumericalError("tau", "non-finite entry");
    if (!phi.allFinite()) throw NumericalError("scattering", "non-finite entry");
}

}  // namespace

CMat random_feasible_phi(const RisArchitecture& arch, RandomStream& rng) {
    const int m = arch.elements, mg = arch.group_size;
    CMat phi = CMat::Zero(m, m);
    for (int g = 0; g < arch.groups(); ++g) {
        CMat block;
        if (mg == 1) {
            block = CMat::Constant(1, 1, std::polar(1.0, 2.0 * kPi * rng.uniform()));
        } else {
            const CMat u = haar_unitary(mg, rng);
            block = arch.reciprocal() ? CMat(u * u.transpose()) : u;
        }
        if (arch.reciprocal()) block = (0.5 * (block + block.transpose())).eval();
        phi.block(g * mg, g * mg, mg, mg) = block;
    }
    return phi;
}

InitialState initialize(const ScenarioConfig& cfg, const ChannelSet& ch, const CMat& phi) {
    const int users = ch.users;
    InitialState s;
    s.phi = phi;
    s.ris = RisState::from_phi(build_maps(cfg.ris), phi, cfg.solver.pdd_rho0);
    const EffectiveChannels eff = effective_channels(ch, phi, cfg.structural_scattering);
    s.bf.precoders.resize(users);
    s.bf.combiners.resize(users);
    s.bf.last_mu.assign(users, 0.0);
    for (int k = 0; k < users; ++k) {
        const CMat& h = eff.h_tilde[k][prev_user(k, users)];
        s.bf.combiners[k] = principal_left(h);
        CVec v = h.adjoint() * s.bf.combiners[k];
        if (!(v.norm() > 0.0)) {
            v = CVec::Zero(ch.antennas);
            v(0) = 1.0;
        }
        s.bf.precoders[k] = std::sqrt(cfg.tx_power_w[prev_user(k, users)]) * v / v.norm();
    }
    s.sur.iota = update_iota(s.bf, eff, ch, cfg);
    s.sur.tau = update_tau(s.bf, eff, ch, s.sur.iota, cfg);
    return s;
}

InitialState initialize(const ScenarioConfig& cfg, const ChannelSet& ch) {
    return initialize(cfg, ch, initial_phi(cfg));
}

OptimizerReport run_from(const ScenarioConfig& cfg, const ChannelSet& ch, const CMat& phi0) {
    const auto t0 = std::chrono::steady_clock::now();
    const int users = ch.users;
    InitialState st = initialize(cfg, ch, phi0);
    BeamformerState& bf = st.bf;
    SurrogateState& sur = st.sur;
    CMat phi = st.phi;
    EffectiveChannels eff = effective_channels(ch, phi, cfg.structural_scattering);

    OptimizerReport rep;
    rep.start_objective = weighted_sum_rate(bf, eff, ch, cfg).weighted_sum;
    double prev = rep.start_objective;

    for (int t = 1; t <= cfg.solver.bcd_max_iters; ++t) {
        // fractional-programming auxiliaries
        sur.iota = update_iota(bf, eff, ch, cfg);
        sur.tau = update_tau(bf, eff, ch, sur.iota, cfg);
        const double fo = weighted_sum_rate(bf, eff, ch, cfg).weighted_sum;
        double ft = eval_f_tau(bf, eff, ch, sur, cfg);
        rep.max_tightness_gap = std::max(rep.max_tightness_gap, std::abs(ft - fo));

        // precoders; the bisection lands within its tolerance of the optimum, so keep the
        // previous block if the objective would dip
        {
            BeamformerState next = bf;
            for (int k = 0; k < users; ++k) {
                const PrecoderUpdate u = update_precoder(k, bf, sur, eff, ch, cfg);
                next.precoders[k] = u.precoder;
                next.last_mu[k] = u.mu;
            }
            const double fn = eval_f_tau(next, eff, ch, sur, cfg);
            if (fn >= ft) {
                bf = std::move(next);
                ft = fn;
            }
        }

        // combiners; tau absorbs the normalization so f_tau is unchanged by it
        for (int k = 0; k < users; ++k) {
            const CombinerUpdate u = update_combiner(k, bf, sur, eff, ch, cfg);
            if (!u.updated) continue;
            bf.combiners[k] = u.combiner;
            sur.tau[k] *= u.raw_norm;
        }
        ft = eval_f_tau(bf, eff, ch, sur, cfg);

        // scattering matrix
        check_finite(bf, sur, phi);
        ScatteringResult sr = optimize_scattering(bf, sur, ch, cfg, phi);
        if (!sr.acceptable) ++rep.pdd_nonconverged;
        const EffectiveChannels cand = effective_channels(ch, sr.phi, cfg.structural_scattering);
        const double fn = eval_f_tau(bf, cand, ch, sur, cfg);
        if (fn >= ft) {
            phi = sr.phi;
            eff = cand;
            ft = fn;
        } else {
            ++rep.rejected_phi_updates;
        }
        rep.pdd_traces.push_back(std::move(sr.trace));
        check_finite(bf, sur, phi);

        rep.objective_trace.push_back(ft);
        rep.sum_rate_trace.push_back(weighted_sum_rate(bf, eff, ch, cfg).weighted_sum);
        rep.iterations_used = t;
        const double drop = prev - ft;
        rep.max_monotone_violation = std::max(rep.max_monotone_violation, drop);
        if (cfg.solver.strict_monotone && drop > 1e-8)
            throw MonotonicityError("objective decreased by " + std::to_string(drop) +
                                    " at iteration " + std::to_string(t));
        if (std::abs(ft - prev) <= cfg.solver.bcd_rel_tol * std::abs(ft)) {
            rep.converged = true;
            break;
        }
        prev = ft;
    }

    rep.final_rates = weighted_sum_rate(bf, eff, ch, cfg);
    rep.phi = phi;
    rep.bf = bf;
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

OptimizerReport run(const ScenarioConfig& cfg, const ChannelSet& ch) {
    OptimizerReport best = run_from(cfg, ch, initial_phi(cfg));
    for (int r = 1; r < cfg.solver.restarts; ++r) {
        RandomStream rng(mix_seed(cfg.seed, 0x7265737461727400ULL + r));
        OptimizerReport rep = run_from(cfg, ch, random_feasible_phi(cfg.ris, rng));
        rep.restart_used = r;
        if (rep.final_rates.weighted_sum > best.final_rates.weighted_sum) best = std::move(rep);
    }
    return best;
}

double sum_rate(const RateReport& r) {
    double s = 0.0;
    for (double v : r.per_user_rate) s += v;
    return s;
}

std::vector<RisArchitecture> default_arms(int elements) {
    return {
        {elements, elements, Connectivity::fully_connected, Reciprocity::non_reciprocal},
        {elements, elements, Connectivity::fully_connected, Reciprocity::reciprocal},
        {elements, 1, Connectivity::diagonal, Reciprocity::reciprocal},
    };
}

double mean_of(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double stderr_of(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    const double m = mean_of(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

PairedStat paired_stat(const std::string& a, const std::vector<double>& x, const std::string& b,
                       const std::vector<double>& y) {
    std::vector<double> d(std::min(x.size(), y.size()));
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = x[i] - y[i];
    return {a, b, mean_of(d), stderr_of(d), static_cast<int>(d.size())};
}

ArchitectureComparison compare_architectures(const ScenarioConfig& cfg,
                                             const std::vector<TrialSeed>& seeds,
                                             const std::vector<RisArchitecture>& arms) {
    ArchitectureComparison out;
    for (const auto& arch : arms) {
        ScenarioConfig c = cfg;
        c.ris = arch;
        c = validate(c);
        ArmSummary s;
        s.label = arm_label(c.ris);
        s.arch = c.ris;
        for (const auto& seed : seeds) {
            const ChannelSet ch = sample_channels(c, seed);
            s.sum_rates.push_back(sum_rate(run(c, ch).final_rates));
        }
        s.mean = mean_of(s.sum_rates);
        s.stderr_ = stderr_of(s.sum_rates);
        out.arms.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < out.arms.size(); ++i)
        for (std::size_t j = i + 1; j < out.arms.size(); ++j)
            out.paired.push_back(paired_stat(out.arms[i].label, out.arms[i].sum_rates,
                                             out.arms[j].label, out.arms[j].sum_rates));
    return out;
}

std::string report_json(const OptimizerReport& r, const ScenarioConfig& cfg) {
    nlohmann::ordered_json j;
    j["arm"] = arm_label(cfg.ris);
    j["converged"] = r.converged;
    j["iterations_used"] = r.iterations_used;
    j["objective_trace"] = r.objective_trace;
    j["sum_rate_trace"] = r.sum_rate_trace;
    j["per_user_rate"] = r.final_rates.per_user_rate;
    j["per_user_sinr"] = r.final_rates.per_user_sinr;
    j["weighted_sum_rate"] = r.final_rates.weighted_sum;
    j["sum_rate"] = sum_rate(r.final_rates);
    j["other_user_power_w"] = r.final_rates.other_user_power;
    j["pdd_nonconverged"] = r.pdd_nonconverged;
    j["rejected_phi_updates"] = r.rejected_phi_updates;
    std::vector<int> outer;
    for (const auto& tr : r.pdd_traces) outer.push_back(tr.empty() ? 0 : tr.back().outer_iter);
    j["pdd_outer_iterations"] = outer;
    j["wall_time_s"] = r.wall_time_s;
    return j.dump();
}

}  // namespace bdris
