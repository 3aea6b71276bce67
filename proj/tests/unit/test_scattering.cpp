// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "../support.hpp"

using namespace bdris;
using namespace bdris::testing;

namespace {

struct Instance {
    ScenarioConfig cfg;
    ChannelSet ch;
    BeamformerState bf;
    SurrogateState sur;
};

Instance make(Connectivity conn, Reciprocity rec, int elements, int group, std::uint64_t seed,
              bool structural = true, bool direct = true, int antennas = 2) {
    Instance s;
    s.cfg = small_config(3, antennas, elements, conn, rec, group, structural, direct);
    s.cfg.weights = {0.25, 0.45, 0.3};
    s.cfg = validate(s.cfg);
    s.ch = sample_channels(s.cfg, derive_trial_seed(seed, 0));
    RandomStream rng(seed + 1000);
    s.bf = random_beamformers(s.cfg, rng);
    const EffectiveChannels eff = effective_channels(s.ch, random_feasible_phi(s.cfg.ris, rng), structural);
    s.sur.iota = update_iota(s.bf, eff, s.ch, s.cfg);
    s.sur.tau = update_tau(s.bf, eff, s.ch, s.sur.iota, s.cfg);
    return s;
}

double direct_ftau(const Instance& s, const CMat& phi) {
    return eval_f_tau(s.bf, effective_channels(s.ch, phi, s.cfg.structural_scattering), s.ch, s.sur, s.cfg);
}

// Curvature normalization used by the solver, so tests see O(1) coefficients.
TraceFormCoefficients normalized(TraceFormCoefficients tf) {
    const double la = Eigen::SelfAdjointEigenSolver<CMat>(tf.A).eigenvalues().maxCoeff();
    const double lb = Eigen::SelfAdjointEigenSolver<CMat>(tf.B).eigenvalues().maxCoeff();
    for (CMat* m : {&tf.A, &tf.C1, &tf.C2, &tf.C3, &tf.C4, &tf.C5}) *m /= la * lb;
    return tf;
}

CMat random_group_block(const ArchitectureMaps& maps, RandomStream& rng) {
    return maps.reconstruct(rng.complex_normal(maps.free_count, 1));
}

}  // namespace

TEST_CASE("duplication map for two-element groups") {
    const ArchitectureMaps r = build_maps({4, 2, Connectivity::group_connected, Reciprocity::reciprocal});
    Eigen::MatrixXd expect(4, 3);
    expect << 1, 0, 0,
              0, 1, 0,
              0, 1, 0,
              0, 0, 1;
    CHECK(r.free_count == 3);
    CHECK(r.duplication() == expect);

    CMat blk(2, 2);
    blk << Complex(1, 1), Complex(2, -1), Complex(2, -1), Complex(3, 0.5);
    const CVec f = r.extract(blk);
    CHECK(f(0) == blk(0, 0));
    CHECK(f(1) == blk(1, 0));
    CHECK(f(2) == blk(1, 1));

    const ArchitectureMaps nr = build_maps({4, 2, Connectivity::group_connected, Reciprocity::non_reciprocal});
    CHECK(nr.duplication() == Eigen::MatrixXd::Identity(4, 4));
}

TEST_CASE("maps are pure selections that round-trip and place blocks") {
    RandomStream rng(4);
    for (bool rec : {false, true})
        for (int mg : {1, 2, 3, 6}) {
            const RisArchitecture arch{6, mg, mg == 6 ? Connectivity::fully_connected : (mg == 1 ? Connectivity::diagonal : Connectivity::group_connected),
                                       rec ? Reciprocity::reciprocal : Reciprocity::non_reciprocal};
            const ArchitectureMaps maps = build_maps(arch);
            const Eigen::MatrixXd k = maps.duplication();
            CHECK(maps.free_count == (maps.reciprocal ? mg * (mg + 1) / 2 : mg * mg));
            for (int i = 0; i < k.rows(); ++i) CHECK(k.row(i).sum() <= 1.0);
            for (int j = 0; j < k.cols(); ++j) CHECK(k.col(j).sum() >= 1.0);

            std::vector<CMat> blocks;
            Eigen::VectorXcd stacked = Eigen::VectorXcd::Zero(36);
            for (int g = 0; g < maps.groups; ++g) {
                CMat b = random_group_block(maps, rng);
                CHECK((maps.reconstruct(maps.extract(b)) - b).norm() == 0.0);
                const Eigen::MatrixXd r = maps.placement(g);
                for (int i = 0; i < r.rows(); ++i) CHECK(r.row(i).sum() <= 1.0);
                for (int j = 0; j < r.cols(); ++j) CHECK(r.col(j).sum() == 1.0);
                stacked += r.cast<Complex>() * Eigen::Map<const Eigen::VectorXcd>(b.data(), b.size());
                blocks.push_back(b);
            }
            const CMat full = maps.assemble(blocks);
            CHECK((stacked - Eigen::Map<const Eigen::VectorXcd>(full.data(), full.size())).norm() == 0.0);
            const auto back = maps.split(full);
            for (int g = 0; g < maps.groups; ++g) CHECK(back[g] == blocks[g]);
        }

    // index enumeration for M = 4, two groups of two
    const ArchitectureMaps m4 = build_maps({4, 2, Connectivity::group_connected, Reciprocity::non_reciprocal});
    const Eigen::MatrixXd r1 = m4.placement(1);
    CHECK(r1(2 + 4 * 2, 0) == 1.0);
    CHECK(r1(3 + 4 * 2, 1) == 1.0);
    CHECK(r1(2 + 4 * 3, 2) == 1.0);
    CHECK(r1(3 + 4 * 3, 3) == 1.0);
}

TEST_CASE("trace form coefficients match their sums") {
    const Instance s = make(Connectivity::fully_connected, Reciprocity::non_reciprocal, 4, 4, 3);
    const TraceFormCoefficients tf = assemble_trace_form(s.bf, s.sur, s.ch, s.cfg);
    CMat a = CMat::Zero(4, 4), b = CMat::Zero(4, 4);
    for (int k = 0; k < 3; ++k) {
        const double wk = s.cfg.weights[k] * std::norm(s.sur.tau[k]) / std::log(2.0);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                Complex ui{}, uj{}, vi{}, vj{};
                for (int n = 0; n < 2; ++n) {
                    ui += std::conj(s.ch.h_ref[k](i, n)) * s.bf.combiners[k](n);
                    uj += std::conj(s.ch.h_ref[k](j, n)) * s.bf.combiners[k](n);
                    vi += s.ch.h_ref[(k + 2) % 3](i, n) * s.bf.precoders[k](n);
                    vj += s.ch.h_ref[(k + 2) % 3](j, n) * s.bf.precoders[k](n);
                }
                a(i, j) += wk * ui * std::conj(uj);
                b(i, j) += vi * std::conj(vj);
            }
    }
    CHECK((tf.A - a).norm() <= 1e-12 * a.norm());
    CHECK((tf.B - b).norm() <= 1e-12 * b.norm());
    CHECK((tf.C3 - tf.B * tf.A).norm() <= 1e-12 * tf.C3.norm());
    CHECK((tf.A - tf.A.adjoint()).norm() <= 1e-12 * tf.A.norm());
    CHECK(Eigen::SelfAdjointEigenSolver<CMat>(tf.B).eigenvalues().minCoeff() >= -1e-10 * tf.B.norm());
    CHECK(tf.finite());
}

TEST_CASE("zero tau leaves only B") {
    Instance s = make(Connectivity::fully_connected, Reciprocity::non_reciprocal, 4, 4, 5);
    for (auto& t : s.sur.tau) t = 0.0;
    const TraceFormCoefficients tf = assemble_trace_form(s.bf, s.sur, s.ch, s.cfg);
    CHECK(tf.A.isZero(0.0));
    CHECK(tf.C1.isZero(0.0));
    CHECK(tf.C2.isZero(0.0));
    CHECK(tf.C3.isZero(0.0));
    CHECK(tf.C4.isZero(0.0));
    CHECK(tf.C5.isZero(0.0));
    CHECK(!tf.B.isZero(0.0));
}

TEST_CASE("trace form agrees with direct evaluation on every architecture") {
    struct Combo { Connectivity conn; Reciprocity rec; int group; };
    const Combo combos[] = {
        {Connectivity::fully_connected, Reciprocity::non_reciprocal, 8},
        {Connectivity::fully_connected, Reciprocity::reciprocal, 8},
        {Connectivity::group_connected, Reciprocity::non_reciprocal, 2},
        {Connectivity::group_connected, Reciprocity::reciprocal, 4},
        {Connectivity::diagonal, Reciprocity::reciprocal, 1},
        {Connectivity::diagonal, Reciprocity::non_reciprocal, 1},
    };
    for (const Combo& c : combos)
        for (bool structural : {true, false})
            for (int antennas : {1, 2}) {
                const Instance s = make(c.conn, c.rec, 8, c.group, 11 + antennas, structural, true, antennas);
                const TraceFormCoefficients tf = assemble_trace_form(s.bf, s.sur, s.ch, s.cfg);
                RandomStream rng(99);
                double worst = 0.0;
                for (int t = 0; t < 100; ++t) {
                    const CMat p1 = random_feasible_phi(s.cfg.ris, rng), p2 = random_feasible_phi(s.cfg.ris, rng);
                    const double f1 = direct_ftau(s, p1), f2 = direct_ftau(s, p2);
                    const double err = std::abs((f1 - f2) - (tf.value(p1) - tf.value(p2))) / (1.0 + std::abs(f1));
                    worst = std::max(worst, err);
                }
                CAPTURE(arm_label(s.cfg.ris));
                CAPTURE(structural);
                CHECK(worst <= 1e-8);
            }
}

TEST_CASE("group quadratic model matches the augmented Lagrangian up to a constant") {
    for (bool rec : {false, true}) {
        const Instance s = make(Connectivity::group_connected, rec ? Reciprocity::reciprocal : Reciprocity::non_reciprocal, 6, 3, 21);
        const TraceFormCoefficients tf = normalized(assemble_trace_form(s.bf, s.sur, s.ch, s.cfg));
        const ArchitectureMaps maps = build_maps(s.cfg.ris);
        RandomStream rng(5);
        RisState st = RisState::from_phi(maps, random_feasible_phi(s.cfg.ris, rng), 0.3);
        for (int g = 0; g < maps.groups; ++g) st.lambda_groups[g] = random_group_block(maps, rng);
        st.psi_groups[1] = random_feasible_phi({3, 3, Connectivity::fully_connected, s.cfg.ris.reciprocity}, rng);

        for (int g = 0; g < maps.groups; ++g) {
            const GroupSubproblem sp = assemble_group_subproblem(g, tf, maps, st);
            const CMat d = sp.dense_delta(maps);
            CHECK((d - d.adjoint()).norm() <= 1e-12 * d.norm());
            std::vector<double> diffs;
            double spread_scale = 0.0;
            for (int t = 0; t < 100; ++t) {
                const CVec free = rng.complex_normal(maps.free_count, 1);
                RisState probe = st;
                probe.phi_groups[g] = maps.reconstruct(free);
                const double model = sp.model(maps, free);
                diffs.push_back(model - augmented_lagrangian(tf, maps, probe));
                spread_scale = std::max(spread_scale, std::abs(model));
            }
            const double offset = mean_of(diffs);
            for (double v : diffs) CHECK(std::abs(v - offset) <= 1e-10 * (1.0 + spread_scale));
        }
    }
}

TEST_CASE("changing another group moves delta but not Delta") {
    const Instance s = make(Connectivity::group_connected, Reciprocity::non_reciprocal, 4, 2, 8);
    const TraceFormCoefficients tf = normalized(assemble_trace_form(s.bf, s.sur, s.ch, s.cfg));
    const ArchitectureMaps maps = build_maps(s.cfg.ris);
    RandomStream rng(6);
    RisState st = RisState::from_phi(maps, random_feasible_phi(s.cfg.ris, rng), 0.5);
    const GroupSubproblem a = assemble_group_subproblem(0, tf, maps, st);
    st.phi_groups[1] = haar(2, rng);
    const GroupSubproblem b = assemble_group_subproblem(0, tf, maps, st);
    CHECK((a.dense_delta(maps) - b.dense_delta(maps)).norm() == 0.0);
    CHECK((a.delta - b.delta).norm() > 1e-6 * a.delta.norm());
}

TEST_CASE("large rho recovers the unconstrained maximizer of the trace form") {
    const Instance s = make(Connectivity::fully_connected, Reciprocity::non_reciprocal, 2, 2, 13, true, false, 1);
    const TraceFormCoefficients tf = normalized(assemble_trace_form(s.bf, s.sur, s.ch, s.cfg));
    const ArchitectureMaps maps = build_maps(s.cfg.ris);
    const RisState st = RisState::from_phi(maps, CMat::Identity(2, 2), 1e12);
    const GroupSubproblem sp = assemble_group_subproblem(0, tf, maps, st);
    const GroupSolve sol = update_phi_group(maps, sp.dense_delta(maps), sp.delta);
    // stationarity of 2 Re Tr(C Phi) - Tr(A Phi B Phi^H): C^H = A Phi B
    const CMat expect = tf.A.inverse() * tf.linear().adjoint() * tf.B.inverse();
    CHECK((sol.block - expect).norm() <= 1e-6 * expect.norm());
}

TEST_CASE("group linear solve") {
    const ArchitectureMaps maps = build_maps({4, 2, Connectivity::group_connected, Reciprocity::non_reciprocal});
    RandomStream rng(31);
    SUBCASE("identity system with zero right-hand side") {
        const GroupSolve s = update_phi_group(maps, CMat::Identity(4, 4), CVec::Zero(4));
        CHECK(s.free.isZero(0.0));
        CHECK(!s.regularized);
    }
    SUBCASE("diagonal system divides element-wise") {
        CMat d = CMat::Zero(4, 4);
        d.diagonal() << 2.0, 4.0, 0.5, 8.0;
        const CVec r = rng.complex_normal(4, 1);
        const GroupSolve s = update_phi_group(maps, d, r);
        for (int i = 0; i < 4; ++i) CHECK(std::abs(s.free(i) - r(i) / d(i, i)) <= 1e-15 * std::abs(r(i) / d(i, i)));
    }
    SUBCASE("random positive definite system") {
        for (int t = 0; t < 20; ++t) {
            const CMat g = rng.complex_normal(4, 4);
            const CMat d = g * g.adjoint() + 0.1 * CMat::Identity(4, 4);
            const CVec r = rng.complex_normal(4, 1);
            const GroupSolve s = update_phi_group(maps, d, r);
            CHECK((d * s.free - r).norm() <= 1e-9 * r.norm());
        }
    }
    SUBCASE("singular system falls back to a ridge") {
        const CVec v = rng.complex_normal(4, 1);
        const CMat d = v * v.adjoint();
        const GroupSolve s = update_phi_group(maps, d, v);
        CHECK(s.regularized);
        CHECK(s.free.allFinite());
    }
}

TEST_CASE("nearest unitary") {
    RandomStream rng(41);
    const CMat u = haar(3, rng);
    CHECK((nearest_unitary(u) - u).norm() <= 1e-12);

    const CMat z = CMat::Constant(1, 1, std::polar(2.5, 0.7));
    CHECK(std::abs(nearest_unitary(z)(0, 0) - std::polar(1.0, 0.7)) <= 1e-15);

    bool degenerate = false;
    CHECK(nearest_unitary(CMat::Zero(2, 2), &degenerate) == CMat::Identity(2, 2));
    CHECK(degenerate);

    for (int t = 0; t < 5; ++t) {
        const CMat target = rng.complex_normal(2, 2);
        const CMat best = nearest_unitary(target);
        CHECK(unitarity_error(best) <= 1e-12);
        const double d = (best - target).norm();
        for (int p = 0; p < 10000; ++p) CHECK((haar(2, rng) - target).norm() >= d - 1e-12);
    }
    // ill-conditioned targets take the SVD path and stay unitary
    CMat ill = haar(4, rng) * CVec::LinSpaced(4, 1e-9, 1.0).cast<Complex>().asDiagonal() * haar(4, rng);
    CHECK(unitarity_error(nearest_unitary(ill)) <= 1e-10);

    // psi update with zero dual and a unitary phi returns phi
    const ArchitectureMaps maps = build_maps({3, 3, Connectivity::fully_connected, Reciprocity::non_reciprocal});
    const RisState st = RisState::from_phi(maps, u, 0.1);
    CHECK((update_psi_group(0, st) - u).norm() <= 1e-12);
}

TEST_CASE("outer update branches") {
    const ArchitectureMaps maps = build_maps({4, 2, Connectivity::group_connected, Reciprocity::non_reciprocal});
    RandomStream rng(51);
    RisState st = RisState::from_phi(maps, random_feasible_phi({4, 2, Connectivity::group_connected, Reciprocity::non_reciprocal}, rng), 1e-2);
    st.lambda_groups[0] = haar(2, rng);
    const CMat lambda0 = st.lambda_groups[0];

    CHECK(pdd_outer_update(st, 1e-6, 0.8) == OuterBranch::dual);
    CHECK(st.lambda_groups[0] == lambda0);
    CHECK(st.rho == 1e-2);

    st.phi_groups[1](0, 0) += 0.5;
    for (int i = 0; i < 5; ++i) CHECK(pdd_outer_update(st, 1e-6, 0.8) == OuterBranch::penalty);
    CHECK(st.rho == doctest::Approx(3.2768e-3).epsilon(1e-12));

    // dual step adds (Phi - Psi) / rho
    RisState d = st;
    const double rho = d.rho;
    CHECK(pdd_outer_update(d, 1.0, 0.8) == OuterBranch::dual);
    CHECK((d.lambda_groups[1] - (st.lambda_groups[1] + (st.phi_groups[1] - st.psi_groups[1]) / rho)).norm() <= 1e-12);

    RisState runaway = st;
    runaway.rho = 1.1e-12;
    CHECK_THROWS_AS(pdd_outer_update(runaway, 1e-6, 0.8), PddError);
}

TEST_CASE("scattering solve returns feasible matrices with a descending inner loop") {
    struct Combo { Connectivity conn; Reciprocity rec; int group; };
    const Combo combos[] = {
        {Connectivity::fully_connected, Reciprocity::non_reciprocal, 8},
        {Connectivity::fully_connected, Reciprocity::reciprocal, 8},
        {Connectivity::group_connected, Reciprocity::non_reciprocal, 4},
        {Connectivity::group_connected, Reciprocity::reciprocal, 2},
        {Connectivity::diagonal, Reciprocity::reciprocal, 1},
    };
    for (const Combo& c : combos) {
        const Instance s = make(c.conn, c.rec, 8, c.group, 61);
        const CMat start = initial_phi(s.cfg);
        const ScatteringResult r = optimize_scattering(s.bf, s.sur, s.ch, s.cfg, start);
        CAPTURE(arm_label(s.cfg.ris));
        CHECK(r.converged);
        CHECK(r.final_gap <= s.cfg.solver.pdd_eps);
        CHECK(unitarity_error(r.phi) <= 10.0 * s.cfg.solver.pdd_eps * 8);
        if (s.cfg.ris.reciprocal()) CHECK((r.phi - r.phi.transpose()).cwiseAbs().maxCoeff() == 0.0);
        if (c.conn == Connectivity::diagonal)
            for (int i = 0; i < 8; ++i) {
                CHECK(std::abs(std::abs(r.phi(i, i)) - 1.0) <= 1e-10);
                for (int j = 0; j < 8; ++j)
                    if (i != j) CHECK(r.phi(i, j) == Complex{});
            }
        // block structure outside the groups is exactly zero
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                if (i / c.group != j / c.group) CHECK(r.phi(i, j) == Complex{});
        for (std::size_t i = 1; i < r.trace.size(); ++i)
            if (r.trace[i].outer_iter == r.trace[i - 1].outer_iter)
                CHECK(r.trace[i].augmented_lagrangian <= r.trace[i - 1].augmented_lagrangian + 1e-9);
    }
}

TEST_CASE("trace dump format") {
    std::ostringstream out;
    write_pdd_trace(out, {{1, 2, 0.5, 1e-3, 1.0}});
    CHECK(out.str() == "outer_iter,inner_iter,augmented_lagrangian,gap,rho\n1,2,0.5,0.001,1\n");
}
