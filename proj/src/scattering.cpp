// SPDX-License-Identifier: Apache-2.0
#include "bdris/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace bdris {

// ---------------------------------------------------------------- maps

Eigen::MatrixXd ArchitectureMaps::duplication() const {
    const int slots = group_size * group_size;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(slots, free_count);
    for (int s = 0; s < slots; ++s) k(s, vec_to_free[s]) = 1.0;
    return k;
}

Eigen::MatrixXd ArchitectureMaps::placement(int g) const {
    const int mg = group_size, m = elements, o = offset(g);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m * m, mg * mg);
    for (int b = 0; b < mg; ++b)
        for (int a = 0; a < mg; ++a) r((o + a) + m * (o + b), a + mg * b) = 1.0;
    return r;
}

CVec ArchitectureMaps::extract(const CMat& block) const {
    CVec out(free_count);
    for (int f = 0; f < free_count; ++f)
        out(f) = block(free_to_vec[f] % group_size, free_to_vec[f] / group_size);
    return out;
}

CMat ArchitectureMaps::reconstruct(const CVec& free) const {
    CMat out(group_size, group_size);
    for (int s = 0; s < group_size * group_size; ++s)
        out(s % group_size, s / group_size) = free(vec_to_free[s]);
    return out;
}

CMat ArchitectureMaps::assemble(const std::vector<CMat>& blocks) const {
    CMat out = CMat::Zero(elements, elements);
    for (int g = 0; g < groups; ++g)
        out.block(offset(g), offset(g), group_size, group_size) = blocks[g];
    return out;
}

std::vector<CMat> ArchitectureMaps::split(const CMat& phi) const {
    std::vector<CMat> out(groups);
    for (int g = 0; g < groups; ++g)
        out[g] = phi.block(offset(g), offset(g), group_size, group_size);
    return out;
}

ArchitectureMaps build_maps(const RisArchitecture& arch) {
    ArchitectureMaps maps;
    maps.elements = arch.elements;
    maps.group_size = arch.group_size;
    maps.groups = arch.groups();
    maps.reciprocal = arch.reciprocal() && arch.group_size > 1;
    const int mg = arch.group_size;
    maps.vec_to_free.assign(mg * mg, -1);
    if (!maps.reciprocal) {
        for (int s = 0; s < mg * mg; ++s) {
            maps.vec_to_free[s] = s;
            maps.free_to_vec.push_back(s);
            maps.multiplicity.push_back(1);
        }
    } else {
        for (int j = 0; j < mg; ++j) {
            for (int i = j; i < mg; ++i) {
                const int f = static_cast<int>(maps.free_to_vec.size());
                maps.vec_to_free[i + mg * j] = f;
                maps.vec_to_free[j + mg * i] = f;
                maps.free_to_vec.push_back(i + mg * j);
                maps.multiplicity.push_back(i == j ? 1 : 2);
            }
        }
    }
    maps.free_count = static_cast<int>(maps.free_to_vec.size());
    return maps;
}

// ---------------------------------------------------------------- trace form

double TraceFormCoefficients::value(const CMat& phi) const {
    const CMat c = linear();
    const double lin = 2.0 * c.transpose().cwiseProduct(phi).sum().real();
    const double quad = (A * phi * B).cwiseProduct(phi.conjugate()).sum().real();
    return lin - quad;
}

bool TraceFormCoefficients::finite() const {
    return A.allFinite() && B.allFinite() && C1.allFinite() && C2.allFinite() &&
           C3.allFinite() && C4.allFinite() && C5.allFinite();
}

TraceFormCoefficients assemble_trace_form(const BeamformerState& bf, const SurrogateState& sur,
                                          const ChannelSet& ch, const ScenarioConfig& cfg) {
    const int users = ch.users, m = ch.elements;
    TraceFormCoefficients tf;
    tf.A = tf.B = tf.C1 = tf.C2 = tf.C4 = tf.C5 = CMat::Zero(m, m);

    std::vector<CVec> u(users), v(users);
    for (int k = 0; k < users; ++k) {
        u[k] = ch.h_ref[k].conjugate() * bf.combiners[k];
        v[k] = ch.h_ref[prev_user(k, users)] * bf.precoders[k];
        tf.B.noalias() += v[k] * v[k].adjoint();
    }
    for (int k = 0; k < users; ++k) {
        const int nxt = next_user(k, users);
        const CVec& w = bf.combiners[k];
        const double a = cfg.weights[k] * std::norm(sur.tau[k]) / kLn2;
        const Complex lin = cfg.weights[k] * std::sqrt(1.0 + sur.iota[k]) * std::conj(sur.tau[k]) / kLn2;
        tf.A.noalias() += a * u[k] * u[k].adjoint();
        tf.C1.noalias() += lin * v[k] * u[k].adjoint();
        if (a == 0.0) continue;
        const Complex si = w.dot(ch.h_si[k] * bf.precoders[nxt]);
        tf.C2.noalias() += a * std::conj(si) * v[nxt] * u[k].adjoint();
        for (int i = 0; i < users; ++i) {
            const Complex d = w.dot(ch.h_dir[k][prev_user(i, users)].transpose() * bf.precoders[i]);
            tf.C4.noalias() += a * std::conj(d) * v[i] * u[k].adjoint();
        }
        const Complex d5 = w.dot(ch.h_dir[k][k].transpose() * bf.precoders[nxt]);
        tf.C5.noalias() += a * std::conj(d5) * v[nxt] * u[k].adjoint();
    }
    tf.C3 = cfg.structural_scattering ? CMat(tf.B * tf.A) : CMat::Zero(m, m);
    return tf;
}

// ---------------------------------------------------------------- PDD state

RisState RisState::from_phi(const ArchitectureMaps& maps, const CMat& phi, double rho) {
    RisState s;
    s.phi_groups = maps.split(phi);
    s.psi_groups = s.phi_groups;
    for (const auto& b : s.phi_groups) s.lambda_groups.push_back(CMat::Zero(b.rows(), b.cols()));
    s.rho = rho;
    return s;
}

double RisState::gap() const {
    double g = 0.0;
    for (std::size_t i = 0; i < phi_groups.size(); ++i)
        g = std::max(g, (phi_groups[i] - psi_groups[i]).cwiseAbs().maxCoeff());
    return g;
}

namespace {

// (A Phi_rest B)_gg: coupling of group g with every other group's current block.
CMat coupling(int g, const CMat& A, const CMat& B, const ArchitectureMaps& maps,
              const std::vector<CMat>& blocks) {
    const int mg = maps.group_size, o = maps.offset(g);
    CMat t = CMat::Zero(mg, mg);
    for (int h = 0; h < maps.groups; ++h) {
        if (h == g) continue;
        const int oh = maps.offset(h);
        t.noalias() += A.block(o, oh, mg, mg) * blocks[h] * B.block(oh, o, mg, mg);
    }
    return t;
}

CVec fold_free(const ArchitectureMaps& maps, const CMat& d) {
    CVec out = CVec::Zero(maps.free_count);
    const int mg = maps.group_size;
    for (int s = 0; s < mg * mg; ++s) out(maps.vec_to_free[s]) += d(s % mg, s / mg);
    return out;
}

CMat group_rhs(int g, const TraceFormCoefficients& coeffs, const CMat& clin,
               const ArchitectureMaps& maps, const RisState& state) {
    const int mg = maps.group_size, o = maps.offset(g);
    const double pen = 0.5 / state.rho;
    return clin.block(o, o, mg, mg).adjoint() -
           coupling(g, coeffs.A, coeffs.B, maps, state.phi_groups) +
           pen * state.psi_groups[g] - 0.5 * state.lambda_groups[g];
}

// K^H (B^T kron A) K for one group.
CMat kron_quadratic(const ArchitectureMaps& maps, const CMat& a, const CMat& b) {
    const int mg = maps.group_size, slots = mg * mg;
    CMat h = CMat::Zero(maps.free_count, maps.free_count);
    for (int r2 = 0; r2 < slots; ++r2) {
        const int a2 = r2 % mg, b2 = r2 / mg, q = maps.vec_to_free[r2];
        for (int r1 = 0; r1 < slots; ++r1) {
            const int a1 = r1 % mg, b1 = r1 / mg;
            h(maps.vec_to_free[r1], q) += b(b2, b1) * a(a1, a2);
        }
    }
    return h;
}

// Factorization of Delta(c) = H + c K^H K that stays valid as c = 1/(2 rho) changes.
struct GroupSolver {
    bool kron = false;
    CMat U, V;          // non-reciprocal: eigenvectors of A_gg and B_gg
    RVec a, b;
    CMat W;             // reciprocal: eigenvectors of D^-1/2 H D^-1/2
    RVec lambda;
    RVec inv_sqrt_mult;

    GroupSolver(const ArchitectureMaps& maps, const CMat& ag, const CMat& bg) {
        if (!maps.reciprocal) {
            kron = true;
            Eigen::SelfAdjointEigenSolver<CMat> ea(ag), eb(bg);
            U = ea.eigenvectors();
            a = ea.eigenvalues().cwiseMax(0.0);
            V = eb.eigenvectors();
            b = eb.eigenvalues().cwiseMax(0.0);
            return;
        }
        inv_sqrt_mult.resize(maps.free_count);
        for (int f = 0; f < maps.free_count; ++f)
            inv_sqrt_mult(f) = 1.0 / std::sqrt(static_cast<double>(maps.multiplicity[f]));
        CMat h = kron_quadratic(maps, ag, bg);
        h = inv_sqrt_mult.asDiagonal() * h * inv_sqrt_mult.asDiagonal();
        h = 0.5 * (h + h.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<CMat> eh(h);
        W = eh.eigenvectors();
        lambda = eh.eigenvalues().cwiseMax(0.0);
    }

    CVec solve(const ArchitectureMaps& maps, const CMat& rhs, double c) const {
        if (kron) {
            CMat y = U.adjoint() * rhs * V;
            for (Eigen::Index j = 0; j < y.cols(); ++j)
                for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, j) /= a(i) * b(j) + c;
            const CMat x = U * y * V.adjoint();
            return Eigen::Map<const CVec>(x.data(), x.size());
        }
        const CVec d = inv_sqrt_mult.asDiagonal() * fold_free(maps, rhs);
        CVec y = W.adjoint() * d;
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) /= lambda(i) + c;
        return inv_sqrt_mult.asDiagonal() * (W * y);
    }
};

}  // namespace

CMat GroupSubproblem::dense_delta(const ArchitectureMaps& maps) const {
    CMat d = kron_quadratic(maps, a_block, b_block);
    for (int f = 0; f < maps.free_count; ++f) d(f, f) += penalty * maps.multiplicity[f];
    return d;
}

double GroupSubproblem::model(const ArchitectureMaps& maps, const CVec& free) const {
    const CMat d = dense_delta(maps);
    return free.dot(d * free).real() - 2.0 * free.dot(delta).real();
}

GroupSubproblem assemble_group_subproblem(int g, const TraceFormCoefficients& coeffs,
                                          const ArchitectureMaps& maps, const RisState& state) {
    const int mg = maps.group_size, o = maps.offset(g);
    GroupSubproblem sp;
    sp.group = g;
    sp.a_block = coeffs.A.block(o, o, mg, mg);
    sp.b_block = coeffs.B.block(o, o, mg, mg);
    sp.penalty = 0.5 / state.rho;
    sp.delta = fold_free(maps, group_rhs(g, coeffs, coeffs.linear(), maps, state));
    return sp;
}

GroupSolve update_phi_group(const ArchitectureMaps& maps, const CMat& Delta, const CVec& delta) {
    GroupSolve out;
    Eigen::LLT<CMat> llt(Delta);
    if (llt.info() == Eigen::Success) {
        out.free = llt.solve(delta);
    }
    if (llt.info() != Eigen::Success || !out.free.allFinite()) {
        const double l = static_cast<double>(Delta.rows());
        const double ridge = 1e-12 * std::max(Delta.trace().real(), 0.0) / l;
        CMat reg = Delta;
        reg.diagonal().array() += ridge > 0.0 ? ridge : 1e-300;
        out.free = reg.completeOrthogonalDecomposition().solve(delta);
        out.regularized = true;
    }
    out.block = maps.reconstruct(out.free);
    return out;
}

CMat nearest_unitary(const CMat& target, bool* degenerate) {
    const Eigen::Index n = target.rows();
    if (degenerate) *degenerate = false;
    if (target.cwiseAbs().maxCoeff() == 0.0) {
        if (degenerate) *degenerate = true;
        return CMat::Identity(n, n);
    }
    if (n == 1) {
        const Complex z = target(0, 0);
        return CMat::Constant(1, 1, z / std::abs(z));
    }
    // T (T^H T)^{-1/2} through a Hermitian eigensolve when T is well conditioned; the
    // unitarity error grows like cond(T)^2, so anything harder goes through the SVD.
    const Eigen::SelfAdjointEigenSolver<CMat> eig(target.adjoint() * target);
    const RVec lam = eig.eigenvalues();
    if (lam(0) > 1e-4 * lam(n - 1)) {
        const CMat& v = eig.eigenvectors();
        return target * v * lam.cwiseSqrt().cwiseInverse().asDiagonal() * v.adjoint();
    }
    Eigen::BDCSVD<CMat> svd(target, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

CMat update_psi_group(int g, const RisState& state) {
    return nearest_unitary(state.rho * state.lambda_groups[g] + state.phi_groups[g]);
}

OuterBranch pdd_outer_update(RisState& state, double eps_outer, double c) {
    if (state.gap() < eps_outer) {
        for (std::size_t g = 0; g < state.phi_groups.size(); ++g)
            state.lambda_groups[g] += (state.phi_groups[g] - state.psi_groups[g]) / state.rho;
        return OuterBranch::dual;
    }
    state.rho *= c;
    if (state.rho < 1e-12)
        throw PddError("pdd: penalty parameter fell below 1e-12 without closing the gap");
    return OuterBranch::penalty;
}

double augmented_lagrangian(const TraceFormCoefficients& coeffs, const ArchitectureMaps& maps,
                            const RisState& state) {
    double l = -coeffs.value(maps.assemble(state.phi_groups));
    for (int g = 0; g < maps.groups; ++g)
        l += (state.phi_groups[g] - state.psi_groups[g] + state.rho * state.lambda_groups[g])
                 .squaredNorm() /
             (2.0 * state.rho);
    return l;
}

namespace {

// Symmetric blocks come out of the SVD symmetric only to rounding; mirror the lower
// triangle so the returned matrix is exactly symmetric.
CMat exact_class(const ArchitectureMaps& maps, const CMat& block) {
    return maps.reciprocal ? maps.reconstruct(maps.extract(block)) : block;
}

}  // namespace

ScatteringResult optimize_scattering(const TraceFormCoefficients& coeffs,
                                     const ArchitectureMaps& maps, const SolverParams& params,
                                     const CMat& phi) {
    ScatteringResult res;
    RisState& st = res.state;
    st = RisState::from_phi(maps, phi, params.pdd_rho0);
    const CMat clin = coeffs.linear();
    const int mg = maps.group_size;

    std::vector<GroupSolver> solvers;
    solvers.reserve(maps.groups);
    for (int g = 0; g < maps.groups; ++g) {
        const int o = maps.offset(g);
        solvers.emplace_back(maps, coeffs.A.block(o, o, mg, mg), coeffs.B.block(o, o, mg, mg));
    }

    double eta = std::numeric_limits<double>::infinity();
    for (int outer = 1; outer <= params.pdd_outer_max; ++outer) {
        double prev = std::numeric_limits<double>::quiet_NaN();
        for (int inner = 1; inner <= params.pdd_inner_max; ++inner) {
            const double c = 0.5 / st.rho;
            for (int g = 0; g < maps.groups; ++g) {
                const CMat rhs = group_rhs(g, coeffs, clin, maps, st);
                st.phi_groups[g] = maps.reconstruct(solvers[g].solve(maps, rhs, c));
                bool degenerate = false;
                st.psi_groups[g] = exact_class(
                    maps, nearest_unitary(st.rho * st.lambda_groups[g] + st.phi_groups[g], &degenerate));
                if (degenerate) res.notes.push_back("zero procrustes target, psi set to identity");
            }
            const double lag = augmented_lagrangian(coeffs, maps, st);
            if (!std::isfinite(lag)) throw NumericalError("scattering", "non-finite augmented Lagrangian");
            res.trace.push_back({outer, inner, lag, st.gap(), st.rho});
            if (inner > 1 && std::abs(lag - prev) <= params.pdd_inner_tol * std::max(1.0, std::abs(lag))) break;
            prev = lag;
        }
        res.outer_iters = outer;
        const double gap = st.gap();
        res.final_gap = gap;
        if (gap <= params.pdd_eps) {
            res.converged = true;
            break;
        }
        if (outer == params.pdd_outer_max) break;
        if (!std::isfinite(eta)) eta = gap;
        pdd_outer_update(st, eta, params.pdd_scale);
        eta = 0.9 * std::min(eta, gap);
    }
    res.acceptable = res.final_gap <= 1e3 * params.pdd_eps;

    std::vector<CMat> blocks(maps.groups);
    for (int g = 0; g < maps.groups; ++g) blocks[g] = st.psi_groups[g];
    res.phi = maps.assemble(blocks);
    return res;
}

ScatteringResult optimize_scattering(const BeamformerState& bf, const SurrogateState& sur,
                                     const ChannelSet& ch, const ScenarioConfig& cfg,
                                     const CMat& phi) {
    TraceFormCoefficients tf = assemble_trace_form(bf, sur, ch, cfg);
    if (!tf.finite()) throw NumericalError("scattering", "non-finite trace-form coefficients");

    // Express the objective relative to its curvature so that rho is dimensionless.
    const double la = Eigen::SelfAdjointEigenSolver<CMat>(tf.A, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double lb = Eigen::SelfAdjointEigenSolver<CMat>(tf.B, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    double scale = la * lb;
    if (!(scale > 0.0)) scale = tf.linear().cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) scale = 1.0;
    for (CMat* m : {&tf.A, &tf.C1, &tf.C2, &tf.C3, &tf.C4, &tf.C5}) *m /= scale;

    ScatteringResult res = optimize_scattering(tf, build_maps(cfg.ris), cfg.solver, phi);
    res.objective_scale = scale;
    return res;
}

void write_pdd_trace(std::ostream& out, const std::vector<PddTraceRow>& rows) {
    out << "outer_iter,inner_iter,augmented_lagrangian,gap,rho\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g\n", r.outer_iter, r.inner_iter,
                      r.augmented_lagrangian, r.gap, r.rho);
        out << buf;
    }
}

}  // namespace bdris
