// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../support.hpp"

using namespace bdris;
using namespace bdris::testing;

namespace {

struct Instance {
    ScenarioConfig cfg;
    ChannelSet ch;
    BeamformerState bf;
    CMat phi;
    EffectiveChannels eff;
};

Instance make(int antennas, int elements, std::uint64_t seed) {
    Instance s;
    s.cfg = small_config(3, antennas, elements, Connectivity::fully_connected,
                         Reciprocity::non_reciprocal, 0, true, true);
    s.cfg.weights = {0.2, 0.5, 0.3};
    s.cfg = validate(s.cfg);
    s.ch = sample_channels(s.cfg, derive_trial_seed(seed, 0));
    RandomStream rng(seed + 100);
    s.bf = random_beamformers(s.cfg, rng);
    s.phi = haar(elements, rng);
    s.eff = effective_channels(s.ch, s.phi, true);
    return s;
}

SurrogateState optimal(const Instance& s) {
    SurrogateState sur;
    sur.iota = update_iota(s.bf, s.eff, s.ch, s.cfg);
    sur.tau = update_tau(s.bf, s.eff, s.ch, sur.iota, s.cfg);
    return sur;
}

}  // namespace

TEST_CASE("iota is the SINR and is nonnegative") {
    const Instance s = make(2, 4, 1);
    const auto iota = update_iota(s.bf, s.eff, s.ch, s.cfg);
    for (int k = 0; k < 3; ++k) {
        CHECK(iota[k] == sinr(k, s.bf, s.eff, s.ch, s.cfg.noise_w));
        CHECK(iota[k] >= 0.0);
    }
    Instance z = s;
    for (auto& p : z.bf.precoders) p.setZero();
    for (double v : update_iota(z.bf, z.eff, z.ch, z.cfg)) CHECK(v == 0.0);
    for (int k = 0; k < 3; ++k) CHECK(gamma_total(k, z.bf, z.eff, z.ch) == 0.0);
}

TEST_CASE("gamma is interference plus desired power") {
    const Instance s = make(2, 4, 2);
    for (int k = 0; k < 3; ++k) {
        const double expect = interference_power(k, s.bf, s.eff, s.ch) + std::norm(desired_amplitude(k, s.bf, s.eff));
        CHECK(std::abs(gamma_total(k, s.bf, s.eff, s.ch) - expect) <= 1e-12 * expect);
    }
}

TEST_CASE("dual transform is tight at iota = gamma") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Instance s = make(1 + seed % 2, 4, seed);
        const double fo = reference_rate(s.ch, s.bf, s.phi, s.cfg);
        const auto iota = update_iota(s.bf, s.eff, s.ch, s.cfg);
        CHECK(std::abs(eval_f_iota(s.bf, s.eff, s.ch, iota, s.cfg) - fo) <= 1e-10 * (1.0 + std::abs(fo)));
        // any other iota is no better
        RandomStream rng(seed);
        for (int t = 0; t < 50; ++t) {
            std::vector<double> other(3);
            for (int k = 0; k < 3; ++k) other[k] = iota[k] * (0.1 + 3.0 * rng.uniform());
            CHECK(eval_f_iota(s.bf, s.eff, s.ch, other, s.cfg) <= fo + 1e-12);
        }
    }
}

TEST_CASE("tightness chain f_tau = f_iota = f_o") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Instance s = make(1 + seed % 2, 4 + 4 * (seed % 2), seed);
        const SurrogateState sur = optimal(s);
        const double fo = reference_rate(s.ch, s.bf, s.phi, s.cfg);
        const double fi = eval_f_iota(s.bf, s.eff, s.ch, sur.iota, s.cfg);
        const double ft = eval_f_tau(s.bf, s.eff, s.ch, sur, s.cfg);
        CHECK(std::abs(ft - fi) <= 1e-9 * std::abs(fi));
        CHECK(std::abs(ft - fo) <= 1e-9 * std::abs(fo));
    }
}

TEST_CASE("all-zero state gives zero surrogate") {
    Instance s = make(2, 4, 3);
    for (auto& p : s.bf.precoders) p.setZero();
    SurrogateState sur{{0.0, 0.0, 0.0}, {Complex{}, Complex{}, Complex{}}};
    CHECK(eval_f_tau(s.bf, s.eff, s.ch, sur, s.cfg) == 0.0);
    const auto tau = update_tau(s.bf, s.eff, s.ch, sur.iota, s.cfg);
    for (const auto& t : tau) CHECK(t == Complex{});
}

TEST_CASE("tau maximizes the quadratic transform") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Instance s = make(2, 4, seed);
        const SurrogateState sur = optimal(s);
        const double best = eval_f_tau(s.bf, s.eff, s.ch, sur, s.cfg);

        // central differences along Re and Im of every tau_k
        for (int k = 0; k < 3; ++k) {
            const double h = 1e-4 * std::max(std::abs(sur.tau[k]), 1e-3);
            double g2 = 0.0;
            for (Complex dir : {Complex(1, 0), Complex(0, 1)}) {
                SurrogateState a = sur, b = sur;
                a.tau[k] += h * dir;
                b.tau[k] -= h * dir;
                const double d = (eval_f_tau(s.bf, s.eff, s.ch, a, s.cfg) - eval_f_tau(s.bf, s.eff, s.ch, b, s.cfg)) / (2 * h);
                g2 += d * d;
            }
            // derivative units are bits per unit tau; scale by |tau| to compare with f
            CHECK(std::sqrt(g2) * std::abs(sur.tau[k]) < 1e-6 * (1.0 + std::abs(best)));
        }

        RandomStream rng(seed * 7);
        for (int t = 0; t < 200; ++t) {
            SurrogateState probe = sur;
            for (int k = 0; k < 3; ++k) probe.tau[k] += std::abs(sur.tau[k]) * rng.complex_normal();
            CHECK(eval_f_tau(s.bf, s.eff, s.ch, probe, s.cfg) <= best + 1e-12);
        }
    }
}

TEST_CASE("scalar toy matches a grid search over tau") {
    // one real channel coefficient per link, single antenna
    Instance s = make(1, 2, 4);
    const SurrogateState sur = optimal(s);
    const double best = eval_f_tau(s.bf, s.eff, s.ch, sur, s.cfg);
    // grid over a window around the closed form for user 0, then a local polish
    double grid_best = -1e300;
    Complex arg{};
    const Complex t0 = sur.tau[0];
    const double r = 2.0 * std::abs(t0);
    for (int i = -100; i <= 100; ++i)
        for (int j = -100; j <= 100; ++j) {
            SurrogateState p = sur;
            p.tau[0] = t0 + Complex(r * i / 100.0, r * j / 100.0);
            const double v = eval_f_tau(s.bf, s.eff, s.ch, p, s.cfg);
            if (v > grid_best) {
                grid_best = v;
                arg = p.tau[0];
            }
        }
    double step = r / 100.0;
    for (int it = 0; it < 60; ++it, step *= 0.5)
        for (Complex d : {Complex(1, 0), Complex(-1, 0), Complex(0, 1), Complex(0, -1)}) {
            SurrogateState p = sur;
            p.tau[0] = arg + step * d;
            const double v = eval_f_tau(s.bf, s.eff, s.ch, p, s.cfg);
            if (v > grid_best) {
                grid_best = v;
                arg = p.tau[0];
            }
        }
    CHECK(std::abs(arg - t0) <= 1e-6 * std::abs(t0));
    CHECK(grid_best <= best + 1e-12);
}
