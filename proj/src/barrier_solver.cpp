// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Log-barrier path-following method for small dense conic programs.
//
// Equality rows are eliminated first (singletons by substitution, the rest
// through an orthonormal null-space basis). A phase-I problem that shifts
// every cone by s * e finds a strictly interior point; phase II then follows
// the central path  min t * (-c^T x) + F(x)  with damped Newton steps.
// Barriers: -log s (nonneg), -log(t^2 - |u|^2) (SOC),
// -log(y log(z/y) - x) - log y - log z (exponential).

#include "nomaee/cone.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace nomaee::cone {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DenseBlock
{
    ConeKind kind = ConeKind::Nonnegative;
    std::vector<int> support;
    Eigen::MatrixXd a; // rows x support.size()
    Eigen::VectorXd b;

    Eigen::VectorXd slack(const Eigen::VectorXd& z) const
    {
        Eigen::VectorXd zs(static_cast<Eigen::Index>(support.size()));
        for (std::size_t j = 0; j < support.size(); ++j)
            zs[static_cast<Eigen::Index>(j)] = z[support[j]];
        return a * zs + b;
    }
};

double barrier_degree(const DenseBlock& blk)
{
    switch (blk.kind) {
    case ConeKind::Nonnegative: return static_cast<double>(blk.b.size());
    case ConeKind::SecondOrder: return 2.0;
    case ConeKind::Exponential: return 3.0;
    case ConeKind::Zero: break;
    }
    return 0.0;
}

double soc_gap(const Eigen::VectorXd& s)
{
    const double t = s[0];
    const double u = s.tail(s.size() - 1).norm();
    return (t - u) * (t + u);
}

double exp_psi(const Eigen::VectorXd& s) { return s[1] * std::log(s[2] / s[1]) - s[0]; }

bool interior(ConeKind kind, const Eigen::VectorXd& s)
{
    if (!s.allFinite())
        return false;
    switch (kind) {
    case ConeKind::Nonnegative: return (s.array() > 0.0).all();
    case ConeKind::SecondOrder: return s[0] > 0.0 && s[0] > s.tail(s.size() - 1).norm();
    case ConeKind::Exponential: return s[1] > 0.0 && s[2] > 0.0 && exp_psi(s) > 0.0;
    case ConeKind::Zero: break;
    }
    return false;
}

// Assumes `s` is interior.
double barrier_value(ConeKind kind, const Eigen::VectorXd& s)
{
    switch (kind) {
    case ConeKind::Nonnegative: return -s.array().log().sum();
    case ConeKind::SecondOrder: return -std::log(soc_gap(s));
    case ConeKind::Exponential: return -std::log(exp_psi(s)) - std::log(s[1]) - std::log(s[2]);
    case ConeKind::Zero: break;
    }
    return 0.0;
}

void barrier_derivatives(ConeKind kind, const Eigen::VectorXd& s, Eigen::VectorXd& g, Eigen::MatrixXd& h)
{
    const auto n = s.size();
    g.resize(n);
    h.setZero(n, n);
    switch (kind) {
    case ConeKind::Nonnegative:
        g = -s.cwiseInverse();
        h.diagonal() = s.cwiseInverse().cwiseAbs2();
        return;
    case ConeKind::SecondOrder: {
        const double q = soc_gap(s);
        Eigen::VectorXd v = -s;
        v[0] = s[0];
        g = (-2.0 / q) * v;
        h.diagonal().setConstant(2.0 / q);
        h(0, 0) = -2.0 / q;
        h.noalias() += (4.0 / (q * q)) * v * v.transpose();
        return;
    }
    case ConeKind::Exponential: {
        const double y = s[1], z = s[2];
        const double psi = exp_psi(s);
        Eigen::Vector3d dpsi(-1.0, std::log(z / y) - 1.0, y / z);
        Eigen::Matrix3d d2psi = Eigen::Matrix3d::Zero();
        d2psi(1, 1) = -1.0 / y;
        d2psi(1, 2) = d2psi(2, 1) = 1.0 / z;
        d2psi(2, 2) = -y / (z * z);
        g = -dpsi / psi;
        g[1] -= 1.0 / y;
        g[2] -= 1.0 / z;
        h = dpsi * dpsi.transpose() / (psi * psi) - d2psi / psi;
        h(1, 1) += 1.0 / (y * y);
        h(2, 2) += 1.0 / (z * z);
        return;
    }
    case ConeKind::Zero: break;
    }
}

struct PathProblem
{
    int dim = 0;
    std::vector<DenseBlock> blocks;
    Eigen::VectorXd q; // minimise q^T z
    double nu = 0.0;

    bool interior_at(const Eigen::VectorXd& z) const
    {
        for (const auto& blk : blocks)
            if (!interior(blk.kind, blk.slack(z)))
                return false;
        return true;
    }

    double barrier_at(const Eigen::VectorXd& z) const
    {
        double f = 0.0;
        for (const auto& blk : blocks) {
            const Eigen::VectorXd s = blk.slack(z);
            if (!interior(blk.kind, s))
                return kInf;
            f += barrier_value(blk.kind, s);
        }
        return f;
    }

    void derivatives(const Eigen::VectorXd& z, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const
    {
        grad.setZero(dim);
        hess.setZero(dim, dim);
        Eigen::VectorXd gb;
        Eigen::MatrixXd hb;
        for (const auto& blk : blocks) {
            barrier_derivatives(blk.kind, blk.slack(z), gb, hb);
            const Eigen::VectorXd ga = blk.a.transpose() * gb;
            const Eigen::MatrixXd ha = blk.a.transpose() * hb * blk.a;
            for (std::size_t r = 0; r < blk.support.size(); ++r) {
                const auto ir = static_cast<Eigen::Index>(r);
                grad[blk.support[r]] += ga[ir];
                for (std::size_t c = 0; c < blk.support.size(); ++c)
                    hess(blk.support[r], blk.support[c]) += ha(ir, static_cast<Eigen::Index>(c));
            }
        }
    }
};

enum class PathOutcome
{
    Converged,
    EarlyExit,
    IterLimit,
    NumericalError
};

struct PathState
{
    Eigen::VectorXd z;
    double t = 1.0;
    double nu = 0.0;
    int newton_steps = 0;
    int rounds = 0;
};

// Newton system solved after symmetric diagonal scaling. Rounding can make the
// scaled Hessian slightly indefinite far out on the path; a growing diagonal
// shift restores positive pivots.
bool newton_direction(const Eigen::MatrixXd& hess, const Eigen::VectorXd& grad, Eigen::VectorXd& dz)
{
    const Eigen::VectorXd d = hess.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd hs = d.asDiagonal() * hess * d.asDiagonal();
    const Eigen::VectorXd rhs = -(d.asDiagonal() * grad);
    Eigen::LDLT<Eigen::MatrixXd> ldlt;
    for (double shift = 0.0; shift <= 1e-2; shift = shift == 0.0 ? 1e-14 : shift * 100.0) {
        Eigen::MatrixXd h = hs;
        h.diagonal().array() += shift;
        ldlt.compute(h);
        if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
            continue;
        const Eigen::VectorXd y = ldlt.solve(rhs);
        if (!y.allFinite())
            continue;
        dz = d.asDiagonal() * y;
        return true;
    }
    return false;
}

// Newton steps after which one centring counts as stalled.
constexpr int kCentreStepCap = 200;

// Centres at state.t.
PathOutcome centre(const PathProblem& p, PathState& st, int max_steps, const std::function<bool(const Eigen::VectorXd&)>& stop)
{
    Eigen::VectorXd grad, dz;
    Eigen::MatrixXd hess;
    double prev_lambda2 = kInf;
    for (int local = 0;; ++local) {
        if (stop && stop(st.z))
            return PathOutcome::EarlyExit;
        if (st.newton_steps >= max_steps)
            return PathOutcome::IterLimit;
        if (local >= kCentreStepCap)
            return PathOutcome::NumericalError;
        p.derivatives(st.z, grad, hess);
        grad += st.t * p.q;
        if (!newton_direction(hess, grad, dz))
            return PathOutcome::NumericalError;
        const double lambda2 = -grad.dot(dz);
        if (!std::isfinite(lambda2) || lambda2 < 0.0)
            return PathOutcome::NumericalError;
        if (lambda2 <= 1e-10)
            return PathOutcome::Converged;
        // Rounding floor: the decrement has stopped shrinking.
        if (lambda2 < 1e-6 && lambda2 > 0.5 * prev_lambda2)
            return PathOutcome::Converged;
        prev_lambda2 = lambda2;
        ++st.newton_steps;

        const double f0 = p.barrier_at(st.z);
        const double slope = grad.dot(dz);
        double alpha = lambda2 < 0.0625 ? 1.0 : 1.0 / (1.0 + std::sqrt(lambda2));
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            const Eigen::VectorXd trial = st.z + alpha * dz;
            const double f1 = p.barrier_at(trial);
            if (std::isfinite(f1)) {
                const double decrease = st.t * alpha * p.q.dot(dz) + (f1 - f0);
                if (lambda2 < 1e-6 || decrease <= 0.25 * alpha * slope) {
                    st.z = trial;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted)
            return lambda2 < 1e-5 ? PathOutcome::Converged : PathOutcome::NumericalError;
    }
}

// Initial barrier weight that best balances the objective against the barrier gradient.
double initial_weight(const PathProblem& p, const Eigen::VectorXd& z)
{
    Eigen::VectorXd grad, hq, hg;
    Eigen::MatrixXd hess;
    p.derivatives(z, grad, hess);
    if (!newton_direction(hess, -p.q, hq) || !newton_direction(hess, -grad, hg))
        return 1.0;
    const double qhq = p.q.dot(hq);
    if (!(qhq > 0.0))
        return 1.0;
    const double t0 = -p.q.dot(hg) / qhq;
    if (!std::isfinite(t0) || t0 <= 0.0)
        return 1.0;
    return std::clamp(t0, 1e-6, 1e6);
}

// Accepted relative gap when the last centring step breaks down.
constexpr double kLooseGap = 1e-6;

struct PathSettings
{
    double tol = 1e-8;
    int max_steps = 2000;
    double mu = 20.0;
};

PathOutcome follow_path(const PathProblem& p, PathState& st, const PathSettings& set,
                        const std::function<bool(const Eigen::VectorXd&)>& stop)
{
    st.t = initial_weight(p, st.z);
    st.nu = p.nu;
    for (;;) {
        ++st.rounds;
        const Eigen::VectorXd last = st.z;
        const PathOutcome out = centre(p, st, set.max_steps, stop);
        if (out == PathOutcome::NumericalError && st.rounds > 1) {
            // Late failure: fall back to the previous centre when its gap is already small.
            const double t_prev = st.t / set.mu;
            if (p.nu / t_prev <= kLooseGap * (1.0 + std::abs(p.q.dot(last)))) {
                st.z = last;
                st.t = t_prev;
                return PathOutcome::Converged;
            }
        }
        if (out != PathOutcome::Converged)
            return out;
        if (p.nu / st.t <= set.tol * (1.0 + std::abs(p.q.dot(st.z))))
            return PathOutcome::Converged;
        st.t *= set.mu;
    }
}

// Affine substitution x = base + M z, with M either a column selection or dense.
struct Reduction
{
    int n = 0;
    int m = 0;
    Eigen::VectorXd base;
    std::vector<int> free_pos; // x index -> position among free variables, or -1
    bool dense = false;
    Eigen::VectorXd free_base; // particular solution in free coordinates
    Eigen::MatrixXd basis;     // free coordinates = free_base + basis * z
    std::vector<int> free_vars;

    Eigen::VectorXd expand(const Eigen::VectorXd& z) const
    {
        Eigen::VectorXd x = base;
        Eigen::VectorXd f = dense ? Eigen::VectorXd(free_base + basis * z) : z;
        for (std::size_t k = 0; k < free_vars.size(); ++k)
            x[free_vars[k]] = f[static_cast<Eigen::Index>(k)];
        return x;
    }

    Eigen::VectorXd reduce(const Eigen::VectorXd& x) const
    {
        Eigen::VectorXd f(static_cast<Eigen::Index>(free_vars.size()));
        for (std::size_t k = 0; k < free_vars.size(); ++k)
            f[static_cast<Eigen::Index>(k)] = x[free_vars[k]];
        if (!dense)
            return f;
        return basis.transpose() * (f - free_base);
    }

    DenseBlock transform(const ConeBlock& blk) const
    {
        DenseBlock out;
        out.kind = blk.kind;
        const auto rows = static_cast<Eigen::Index>(blk.dim());
        out.b.resize(rows);
        if (!dense) {
            std::vector<int> support;
            for (const auto& row : blk.rows)
                for (const auto& t : row.terms())
                    if (free_pos[t.index] >= 0)
                        support.push_back(free_pos[t.index]);
            std::sort(support.begin(), support.end());
            support.erase(std::unique(support.begin(), support.end()), support.end());
            out.support = support;
            out.a.setZero(rows, static_cast<Eigen::Index>(support.size()));
            for (Eigen::Index r = 0; r < rows; ++r) {
                const auto& row = blk.rows[static_cast<std::size_t>(r)];
                double offset = row.constant();
                for (const auto& t : row.terms()) {
                    const int fp = free_pos[t.index];
                    if (fp < 0) {
                        offset += t.coeff * base[t.index];
                    } else {
                        const auto col = std::lower_bound(support.begin(), support.end(), fp) - support.begin();
                        out.a(r, col) += t.coeff;
                    }
                }
                out.b[r] = offset;
            }
            return out;
        }
        const auto nf = static_cast<Eigen::Index>(free_vars.size());
        Eigen::MatrixXd af = Eigen::MatrixXd::Zero(rows, nf);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto& row = blk.rows[static_cast<std::size_t>(r)];
            double offset = row.constant();
            for (const auto& t : row.terms()) {
                const int fp = free_pos[t.index];
                if (fp < 0)
                    offset += t.coeff * base[t.index];
                else
                    af(r, fp) += t.coeff;
            }
            out.b[r] = offset;
        }
        out.b += af * free_base;
        out.a = af * basis;
        out.support.resize(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j)
            out.support[static_cast<std::size_t>(j)] = j;
        return out;
    }
};

// Returns false when the equality rows are inconsistent.
bool build_reduction(const ConicProgram& p, Reduction& red)
{
    red.n = p.var_count;
    red.base = Eigen::VectorXd::Zero(p.var_count);
    std::vector<bool> fixed(static_cast<std::size_t>(p.var_count), false);
    std::vector<const AffineForm*> eq;
    for (const auto& blk : p.blocks)
        if (blk.kind == ConeKind::Zero)
            for (const auto& row : blk.rows)
                eq.push_back(&row);

    const double eq_tol = 1e-9;
    std::vector<bool> used(eq.size(), false);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t e = 0; e < eq.size(); ++e) {
            if (used[e])
                continue;
            double offset = eq[e]->constant();
            int free_index = -1;
            double free_coeff = 0.0;
            int free_count = 0;
            for (const auto& t : eq[e]->terms()) {
                if (fixed[static_cast<std::size_t>(t.index)]) {
                    offset += t.coeff * red.base[t.index];
                } else if (t.index != free_index) {
                    ++free_count;
                    free_index = t.index;
                    free_coeff = t.coeff;
                }
            }
            if (free_count == 0) {
                used[e] = true;
                if (std::abs(offset) > eq_tol * (1.0 + std::abs(eq[e]->constant())))
                    return false;
            } else if (free_count == 1) {
                used[e] = true;
                red.base[free_index] = -offset / free_coeff;
                fixed[static_cast<std::size_t>(free_index)] = true;
                changed = true;
            }
        }
    }

    red.free_pos.assign(static_cast<std::size_t>(p.var_count), -1);
    for (int j = 0; j < p.var_count; ++j)
        if (!fixed[static_cast<std::size_t>(j)]) {
            red.free_pos[static_cast<std::size_t>(j)] = static_cast<int>(red.free_vars.size());
            red.free_vars.push_back(j);
        }
    const auto nf = static_cast<Eigen::Index>(red.free_vars.size());

    std::vector<std::size_t> rest;
    for (std::size_t e = 0; e < eq.size(); ++e)
        if (!used[e])
            rest.push_back(e);
    if (rest.empty()) {
        red.m = static_cast<int>(nf);
        return true;
    }

    Eigen::MatrixXd emat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rest.size()), nf);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(rest.size()));
    for (std::size_t r = 0; r < rest.size(); ++r) {
        const auto ir = static_cast<Eigen::Index>(r);
        double offset = eq[rest[r]]->constant();
        for (const auto& t : eq[rest[r]]->terms()) {
            if (fixed[static_cast<std::size_t>(t.index)])
                offset += t.coeff * red.base[t.index];
            else
                emat(ir, red.free_pos[static_cast<std::size_t>(t.index)]) += t.coeff;
        }
        rhs[ir] = -offset;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(emat, Eigen::ComputeFullV | Eigen::ComputeThinU);
    svd.setThreshold(1e-12);
    const auto rank = svd.rank();
    red.free_base = svd.solve(rhs);
    if ((emat * red.free_base - rhs).norm() > eq_tol * (1.0 + rhs.norm()))
        return false;
    red.dense = true;
    red.m = static_cast<int>(nf - rank);
    red.basis = svd.matrixV().rightCols(nf - rank);
    return true;
}

// Smallest shift s with slack + s * e interior, plus a unit margin.
double required_shift(const DenseBlock& blk, const Eigen::VectorXd& s)
{
    switch (blk.kind) {
    case ConeKind::Nonnegative: return -s.minCoeff() + 1.0;
    case ConeKind::SecondOrder: return s.tail(s.size() - 1).norm() - s[0] + 1.0;
    case ConeKind::Exponential: {
        double shift = 1.0;
        for (int k = 0; k < 200; ++k) {
            Eigen::VectorXd v = s;
            v[0] -= shift;
            v[1] += shift;
            v[2] += shift;
            if (interior(ConeKind::Exponential, v))
                return shift;
            shift *= 2.0;
        }
        return kInf;
    }
    case ConeKind::Zero: break;
    }
    return 0.0;
}

Eigen::VectorXd shift_direction(const DenseBlock& blk)
{
    Eigen::VectorXd e = Eigen::VectorXd::Zero(blk.b.size());
    switch (blk.kind) {
    case ConeKind::Nonnegative: e.setOnes(); break;
    case ConeKind::SecondOrder: e[0] = 1.0; break;
    case ConeKind::Exponential: e << -1.0, 1.0, 1.0; break;
    case ConeKind::Zero: break;
    }
    return e;
}

DenseBlock ball_block(int dim, double radius)
{
    DenseBlock ball;
    ball.kind = ConeKind::SecondOrder;
    ball.support.resize(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j)
        ball.support[static_cast<std::size_t>(j)] = j;
    ball.a = Eigen::MatrixXd::Zero(dim + 1, dim);
    ball.a.bottomRows(dim).setIdentity();
    ball.b = Eigen::VectorXd::Zero(dim + 1);
    ball.b[0] = radius;
    return ball;
}

SolveResult finish(const ConicProgram& program, const Reduction& red, const Eigen::VectorXd& z, SolveStatus status,
                   const PathState& st)
{
    SolveResult r;
    r.status = status;
    r.x = red.expand(z);
    r.objective = program.objective.dot(r.x);
    r.stats.newton_steps = st.newton_steps;
    r.stats.centering_rounds = st.rounds;
    r.stats.gap_bound = st.t > 0.0 ? st.nu / st.t : kInf;
    r.stats.max_violation = max_violation(program, r.x);
    return r;
}

} // namespace

SolveResult solve(const ConicProgram& program, const SolverOptions& options)
{
    program.validate();
    Reduction red;
    PathState none;
    none.t = 0.0;
    if (!build_reduction(program, red)) {
        SolveResult r;
        r.status = SolveStatus::Infeasible;
        r.x = Eigen::VectorXd::Zero(program.var_count);
        return r;
    }

    std::vector<DenseBlock> blocks;
    double nu = 0.0;
    for (const auto& blk : program.blocks) {
        if (blk.kind == ConeKind::Zero)
            continue;
        blocks.push_back(red.transform(blk));
        nu += barrier_degree(blocks.back());
    }
    const int m = red.m;

    Eigen::VectorXd q(m);
    {
        // c^T x = c^T base + (c restricted to free vars)^T f
        Eigen::VectorXd cf(static_cast<Eigen::Index>(red.free_vars.size()));
        for (std::size_t k = 0; k < red.free_vars.size(); ++k)
            cf[static_cast<Eigen::Index>(k)] = program.objective[red.free_vars[k]];
        q = red.dense ? Eigen::VectorXd(-(red.basis.transpose() * cf)) : Eigen::VectorXd(-cf);
    }

    if (m == 0) {
        const Eigen::VectorXd z;
        const Eigen::VectorXd x = red.expand(z);
        const double viol = max_violation(program, x);
        return finish(program, red, z, viol <= options.tol ? SolveStatus::Optimal : SolveStatus::Infeasible, none);
    }

    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    if (options.start && options.start->size() == program.var_count)
        z = red.reduce(*options.start);
    if (z.norm() >= 0.5 * options.bound_radius)
        z *= 0.5 * options.bound_radius / z.norm();

    PathProblem phase2;
    phase2.dim = m;
    phase2.blocks = blocks;
    phase2.blocks.push_back(ball_block(m, options.bound_radius));
    phase2.q = q;
    phase2.nu = nu + 2.0;

    PathSettings settings;
    settings.tol = options.tol;
    settings.max_steps = options.max_iters;

    PathState st;
    if (!phase2.interior_at(z)) {
        // Phase I over (z, s): every block shifted by s * e, s >= -1, minimise s.
        double s0 = 0.0;
        for (const auto& blk : blocks)
            s0 = std::max(s0, required_shift(blk, blk.slack(z)));
        if (!std::isfinite(s0))
            return finish(program, red, z, SolveStatus::NumericalError, st);

        PathProblem phase1;
        phase1.dim = m + 1;
        for (const auto& blk : blocks) {
            DenseBlock shifted = blk;
            shifted.support.push_back(m);
            shifted.a.conservativeResize(Eigen::NoChange, shifted.a.cols() + 1);
            shifted.a.col(shifted.a.cols() - 1) = shift_direction(blk);
            phase1.blocks.push_back(std::move(shifted));
        }
        DenseBlock floor;
        floor.kind = ConeKind::Nonnegative;
        floor.support = {m};
        floor.a = Eigen::MatrixXd::Ones(1, 1);
        floor.b = Eigen::VectorXd::Ones(1);
        phase1.blocks.push_back(floor);
        phase1.blocks.push_back(ball_block(m, options.bound_radius));
        phase1.q = Eigen::VectorXd::Zero(m + 1);
        phase1.q[m] = 1.0;
        phase1.nu = nu + 3.0;

        PathState p1;
        p1.z.resize(m + 1);
        p1.z.head(m) = z;
        p1.z[m] = s0;
        const PathSettings& s1 = settings;
        const auto found = [&](const Eigen::VectorXd& zz) {
            return zz[m] < 0.0 && phase2.interior_at(zz.head(m));
        };
        const PathOutcome out = follow_path(phase1, p1, s1, found);
        st.newton_steps = p1.newton_steps;
        st.rounds = p1.rounds;
        z = p1.z.head(m);
        if (out == PathOutcome::IterLimit)
            return finish(program, red, z, SolveStatus::IterLimit, st);
        if (out != PathOutcome::EarlyExit) {
            // Converged (or stalled) with s* >= 0: no strictly feasible point.
            const bool certified = p1.z[m] - phase1.nu / p1.t > 0.0;
            return finish(program, red, z,
                          certified || out == PathOutcome::Converged ? SolveStatus::Infeasible : SolveStatus::NumericalError,
                          st);
        }
    }

    st.z = z;
    const PathOutcome out = follow_path(phase2, st, settings, {});
    SolveStatus status = SolveStatus::Optimal;
    if (out == PathOutcome::IterLimit)
        status = SolveStatus::IterLimit;
    else if (out == PathOutcome::NumericalError)
        status = SolveStatus::NumericalError;
    if (st.z.norm() >= (1.0 - 1e-3) * options.bound_radius)
        status = SolveStatus::Unbounded;
    return finish(program, red, st.z, status, st);
}

} // namespace nomaee::cone
