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

#include "nomaee/sca.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>

namespace nomaee::sca {

using cone::AffineForm;
using cone::ComplexAffineForm;

const char* to_string(Design design)
{
    switch (design) {
    case Design::GeeMax: return "gee-max";
    case Design::Mmee: return "mmee";
    case Design::Pf: return "pf";
    }
    return "?";
}

Design parse_design(std::string_view name)
{
    if (name == "gee-max")
        return Design::GeeMax;
    if (name == "mmee")
        return Design::Mmee;
    if (name == "pf")
        return Design::Pf;
    throw std::invalid_argument("unknown design '" + std::string(name) + "'");
}

const char* to_string(Termination t)
{
    switch (t) {
    case Termination::Tolerance: return "converged";
    case Termination::Stalled: return "stalled";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::SolverFailure: return "solver_failure";
    case Termination::Infeasible: return "infeasible";
    }
    return "?";
}

VariableLayout VariableLayout::for_design(Design design, int num_users, int num_antennas)
{
    VariableLayout l;
    l.num_antennas = num_antennas;
    l.num_users = num_users;
    int next = 0;
    auto take = [&next](int count) {
        const int first = next;
        next += count;
        return first;
    };
    l.w = take(2 * num_antennas * num_users);
    if (design != Design::GeeMax) {
        l.alpha = take(1);
        l.beta = take(num_users);
    }
    l.delta = take(num_users);
    l.tau = take(num_users);
    l.rho = take(num_users * (num_users + 1) / 2);
    if (design == Design::Pf) {
        l.mu = take(num_users);
        l.varsigma = take(num_users);
    }
    if (design == Design::GeeMax)
        l.power = take(1);
    l.count = next;
    return l;
}

ComplexAffineForm channel_response(const VariableLayout& layout, const CVector& h, int i)
{
    // conj(c + jd) (a + jb) = (ca + db) + j(cb - da)
    ComplexAffineForm z;
    for (int n = 0; n < layout.num_antennas; ++n) {
        const double c = h[n].real();
        const double d = h[n].imag();
        z.re.add(layout.w_re(i, n), c);
        z.re.add(layout.w_im(i, n), d);
        z.im.add(layout.w_im(i, n), c);
        z.im.add(layout.w_re(i, n), -d);
    }
    return z;
}

AffineForm taylor_abs2_lb(cplx z_ref, const ComplexAffineForm& z)
{
    // 2 Re(z_ref) Re(z) + 2 Im(z_ref) Im(z) - |z_ref|^2
    AffineForm f = 2.0 * z_ref.real() * z.re;
    f += 2.0 * z_ref.imag() * z.im;
    f.add_constant(-std::norm(z_ref));
    return f;
}

ComplexAffineForm rotate(const ComplexAffineForm& z, double phase)
{
    const double c = std::cos(phase);
    const double s = std::sin(phase);
    return {c * z.re + s * z.im, c * z.im - s * z.re};
}

namespace {

cplx response_value(const CVector& h, const CVector& w) { return h.dot(w); }

// rows [Re z_1, Im z_1, ..., Re z_{i-1}, Im z_{i-1}, sigma_k] for receiver k
std::vector<AffineForm> interference_rows(const VariableLayout& layout, const SystemScenario& s, int i, int k)
{
    std::vector<AffineForm> rows;
    for (int j = 0; j < i; ++j) {
        auto z = channel_response(layout, s.channels[static_cast<std::size_t>(k)], j);
        rows.push_back(std::move(z.re));
        rows.push_back(std::move(z.im));
    }
    rows.emplace_back(std::sqrt(s.noise_vars[static_cast<std::size_t>(k)]));
    return rows;
}

ComplexAffineForm signal_term(const VariableLayout& layout, const SystemScenario& s, int i, int k,
                              const Beamformers* reference)
{
    const CVector& hk = s.channels[static_cast<std::size_t>(k)];
    auto z = channel_response(layout, hk, i);
    if (reference == nullptr)
        return z;
    const cplx at = response_value(hk, reference->vectors[static_cast<std::size_t>(i)]);
    return std::abs(at) > 0.0 ? rotate(z, std::arg(at)) : z;
}

// f >= ||u||^2 as the SOC ((f/c + c)/2, (f/c - c)/2, u); c balances the rows.
void add_square_bound(cone::ProgramBuilder& builder, const AffineForm& f, const std::vector<AffineForm>& u, double c)
{
    AffineForm top = (0.5 / c) * f;
    top.add_constant(0.5 * c);
    AffineForm bottom = (0.5 / c) * f;
    bottom.add_constant(-0.5 * c);
    std::vector<AffineForm> rows{std::move(top), std::move(bottom)};
    rows.insert(rows.end(), u.begin(), u.end());
    builder.add_soc(std::move(rows));
}

void add_square_bound(cone::ProgramBuilder& builder, const AffineForm& f, const ComplexAffineForm& z, double c)
{
    add_square_bound(builder, f, std::vector<AffineForm>{z.re, z.im}, c);
}

double clamped_tau(const ScaState& state, int i, const ScaOptions& options)
{
    const double tau = std::max(state.tau[static_cast<std::size_t>(i)], 1.0 + options.tau_clamp);
    if (!(tau > 1.0 + 1e-9))
        throw DegenerateExpansion("tau^(n) of user " + std::to_string(i + 1) + " is too close to 1 for linearisation");
    return tau;
}

double delta_upper_bound(const SystemScenario& s)
{
    double hmax = 0.0;
    for (const auto& h : s.channels)
        hmax = std::max(hmax, h.squaredNorm());
    const double smin = *std::min_element(s.noise_vars.begin(), s.noise_vars.end());
    return std::log2(1.0 + s.p_available * hmax / smin);
}

void add_power_budget(cone::ProgramBuilder& builder, const VariableLayout& layout, const SystemScenario& s)
{
    std::vector<AffineForm> rows{AffineForm(std::sqrt(s.p_available))};
    for (int i = 0; i < layout.num_users; ++i)
        for (int n = 0; n < 2 * layout.num_antennas; ++n)
            rows.push_back(AffineForm::variable(layout.w + i * 2 * layout.num_antennas + n));
    builder.add_soc(std::move(rows));
}

void add_min_rates(cone::ProgramBuilder& builder, const VariableLayout& layout, const SystemScenario& s,
                   const ScaState& state)
{
    for (int i = 0; i < layout.num_users; ++i)
        add_soc_min_rate(builder, layout, s, i, &state.w);
}

Eigen::VectorXd expansion_point(const VariableLayout& layout, const ScaState& state)
{
    Eigen::VectorXd x = Eigen::VectorXd::Zero(layout.count);
    for (int i = 0; i < layout.num_users; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        for (int n = 0; n < layout.num_antennas; ++n) {
            x[layout.w_re(i, n)] = state.w.vectors[ui][n].real();
            x[layout.w_im(i, n)] = state.w.vectors[ui][n].imag();
        }
        if (layout.beta >= 0)
            x[layout.beta + i] = state.beta[ui];
        x[layout.delta + i] = state.delta[ui];
        x[layout.tau + i] = state.tau[ui];
        for (int k = 0; k <= i; ++k)
            x[layout.rho_at(i, k)] = state.rho[ui][static_cast<std::size_t>(k)];
        if (layout.mu >= 0) {
            x[layout.mu + i] = state.mu[ui];
            x[layout.varsigma + i] = state.varsigma[ui];
        }
    }
    if (layout.alpha >= 0)
        x[layout.alpha] = layout.mu >= 0 ? 0.0 : state.alpha;
    if (layout.power >= 0)
        x[layout.power] = state.w.total_power();
    return x;
}

} // namespace

void add_soc_min_rate(cone::ProgramBuilder& builder, const VariableLayout& layout, const SystemScenario& s, int i,
                      const Beamformers* reference)
{
    const double eta = s.sinr_thresholds[static_cast<std::size_t>(i)];
    if (eta <= 0.0)
        return;
    const double scale = 1.0 / std::sqrt(eta);
    for (int k = 0; k <= i; ++k) {
        std::vector<AffineForm> rows{scale * signal_term(layout, s, i, k, reference).re};
        auto rest = interference_rows(layout, s, i, k);
        rows.insert(rows.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
        builder.add_soc(std::move(rows));
    }
}

void add_sic_chain(cone::ProgramBuilder& builder, const VariableLayout& layout, const SystemScenario& s,
                   const ScaState& state, SicForm form)
{
    const int k_users = layout.num_users;
    for (int rx = 0; rx < k_users; ++rx) {
        const CVector& h = s.channels[static_cast<std::size_t>(rx)];
        for (int j = 0; j + 1 < k_users; ++j) {
            const cplx ref_hi = response_value(h, state.w.vectors[static_cast<std::size_t>(j + 1)]);
            const AffineForm f_hi = taylor_abs2_lb(ref_hi, channel_response(layout, h, j + 1));
            if (form == SicForm::Linear) {
                const cplx ref_lo = response_value(h, state.w.vectors[static_cast<std::size_t>(j)]);
                builder.add_nonneg(f_hi - taylor_abs2_lb(ref_lo, channel_response(layout, h, j)));
            } else {
                // |h^H w|^2 <= ||h||^2 P_ava sets the scale of both sides
                const double c = std::max(h.norm() * std::sqrt(s.p_available), 1e-12);
                add_square_bound(builder, f_hi, channel_response(layout, h, j), c);
            }
        }
    }
}

void add_rate_ladder(cone::ProgramBuilder& builder, const VariableLayout& layout, const SystemScenario& s,
                     const ScaState& state, int i, const ScaOptions& options)
{
    const auto ui = static_cast<std::size_t>(i);
    const int delta = layout.delta + i;
    const int tau = layout.tau + i;
    cone::encode_exp2(builder, delta, tau, 0.0, delta_upper_bound(s));

    const double tau0 = clamped_tau(state, i, options);
    const double root = std::sqrt(tau0 - 1.0);
    for (int k = 0; k <= i; ++k) {
        const int rho = layout.rho_at(i, k);
        std::vector<AffineForm> rows{AffineForm::variable(rho)};
        auto rest = interference_rows(layout, s, i, k);
        rows.insert(rows.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
        builder.add_soc(std::move(rows));

        // Re(h_k^H w_i) >= root rho0 + rho0 / (2 root) (tau - tau0) + root (rho - rho0)
        const double rho0 = state.rho[ui][static_cast<std::size_t>(k)];
        AffineForm row = signal_term(layout, s, i, k, &state.w).re;
        row.add(tau, -rho0 / (2.0 * root));
        row.add(rho, -root);
        row.add_constant(-root * rho0 + rho0 / (2.0 * root) * tau0 + root * rho0);
        builder.add_nonneg(std::move(row));
    }
}

void add_ee_floor(cone::ProgramBuilder& builder, const VariableLayout& layout, const SystemScenario& s,
                  const ScaState& state, FloorVar floor, int i, const ScaOptions& options)
{
    const auto ui = static_cast<std::size_t>(i);
    const int beta = layout.beta + i;

    std::vector<AffineForm> rows{AffineForm::variable(beta)};
    const double inv_sqrt_eff = 1.0 / std::sqrt(s.amp_efficiency);
    for (int n = 0; n < layout.num_antennas; ++n)
        rows.push_back(AffineForm::variable(layout.w_re(i, n), inv_sqrt_eff));
    for (int n = 0; n < layout.num_antennas; ++n)
        rows.push_back(AffineForm::variable(layout.w_im(i, n), inv_sqrt_eff));
    rows.emplace_back(std::sqrt(s.power_loss_per_user[ui]));
    builder.add_soc(std::move(rows));

    add_rate_ladder(builder, layout, s, state, i, options);

    // delta_i >= theta0 beta0^2 + beta0^2 (theta - theta0) + 2 beta0 theta0 (beta - beta0)
    const double beta0 = state.beta[ui];
    const double theta0 = floor.value;
    AffineForm row = AffineForm::variable(layout.delta + i);
    row.add(floor.index, -beta0 * beta0);
    row.add(beta, -2.0 * beta0 * theta0);
    row.add_constant(2.0 * theta0 * beta0 * beta0);
    builder.add_nonneg(std::move(row));
}

namespace {

Subproblem start_subproblem(Design design, const SystemScenario& s, const ScaState& state, const ScaOptions& options)
{
    Subproblem sp{cone::ProgramBuilder(options.backend),
                  VariableLayout::for_design(design, s.num_users, s.num_antennas), {}};
    sp.builder.add_variables(sp.layout.count);
    sp.expansion_point = expansion_point(sp.layout, state);
    add_sic_chain(sp.builder, sp.layout, s, state, options.sic_form);
    add_power_budget(sp.builder, sp.layout, s);
    add_min_rates(sp.builder, sp.layout, s, state);
    return sp;
}

} // namespace

Subproblem build_mmee_subproblem(const SystemScenario& s, const ScaState& state, const ScaOptions& options)
{
    Subproblem sp = start_subproblem(Design::Mmee, s, state, options);
    sp.builder.maximize(AffineForm::variable(sp.layout.alpha));
    for (int i = 0; i < s.num_users; ++i)
        add_ee_floor(sp.builder, sp.layout, s, state, {sp.layout.alpha, state.alpha}, i, options);
    return sp;
}

Subproblem build_pf_subproblem(const SystemScenario& s, const ScaState& state, const ScaOptions& options)
{
    for (double m : state.mu)
        if (!(m > 0.0))
            throw ZeroEEInitialization("proportional-fair subproblem needs every EE_i > 0 at the expansion point");
    Subproblem sp = start_subproblem(Design::Pf, s, state, options);
    AffineForm objective;
    for (int i = 0; i < s.num_users; ++i)
        objective.add(sp.layout.varsigma + i, 1.0);
    sp.builder.maximize(objective);
    // alpha has no role here; it stays in the layout pinned at zero.
    sp.builder.add_zero(AffineForm::variable(sp.layout.alpha));
    for (int i = 0; i < s.num_users; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        add_ee_floor(sp.builder, sp.layout, s, state, {sp.layout.mu + i, state.mu[ui]}, i, options);
        cone::encode_exp2(sp.builder, sp.layout.varsigma + i, sp.layout.mu + i, state.varsigma[ui] - 16.0,
                          state.varsigma[ui] + 16.0);
    }
    return sp;
}

Subproblem build_dinkelbach_subproblem(const SystemScenario& s, const ScaState& state, double lambda,
                                       const ScaOptions& options)
{
    if (!(lambda >= 0.0))
        throw std::invalid_argument("Dinkelbach parameter must be nonnegative");
    Subproblem sp = start_subproblem(Design::GeeMax, s, state, options);
    const auto& l = sp.layout;
    AffineForm objective;
    for (int i = 0; i < s.num_users; ++i)
        objective.add(l.delta + i, 1.0);
    objective.add(l.power, -lambda / s.amp_efficiency);
    sp.builder.maximize(objective);

    // t >= sum_i ||w_i||^2, scaled by the budget so that t / c^2 stays below one
    std::vector<AffineForm> stacked;
    for (int v = 0; v < 2 * l.num_antennas * l.num_users; ++v)
        stacked.push_back(AffineForm::variable(l.w + v));
    add_square_bound(sp.builder, AffineForm::variable(l.power), stacked, std::sqrt(s.p_available));

    for (int i = 0; i < s.num_users; ++i)
        add_rate_ladder(sp.builder, l, s, state, i, options);
    return sp;
}

Beamformers extract_beamformers(const VariableLayout& layout, const Eigen::VectorXd& x)
{
    Beamformers w = Beamformers::zeros(layout.num_users, layout.num_antennas);
    for (int i = 0; i < layout.num_users; ++i)
        for (int n = 0; n < layout.num_antennas; ++n)
            w.vectors[static_cast<std::size_t>(i)][n] = cplx(x[layout.w_re(i, n)], x[layout.w_im(i, n)]);
    return w;
}

ScaState initialize(const SystemScenario& s, const ScaOptions& options)
{
    (void)options;
    s.validate();
    const auto k_users = static_cast<std::size_t>(s.num_users);
    std::vector<CVector> dir(k_users);
    for (std::size_t i = 0; i < k_users; ++i) {
        const double norm = s.channels[i].norm();
        if (!(norm > 0.0))
            throw InfeasibleScenario("user " + std::to_string(i + 1) + " has a zero channel");
        dir[i] = s.channels[i] / norm;
    }
    // gain[k][j] = |h_k^H u_j|^2
    std::vector<std::vector<double>> gain(k_users, std::vector<double>(k_users));
    for (std::size_t k = 0; k < k_users; ++k)
        for (std::size_t j = 0; j < k_users; ++j)
            gain[k][j] = std::norm(s.channels[k].dot(dir[j]));

    const double floor = 1e-9 * s.p_available;
    std::vector<double> p(k_users, 0.0);
    for (int pass = 0; pass < 50; ++pass) {
        bool changed = false;
        for (std::size_t i = 0; i < k_users; ++i) {
            // SINR of message i at every k <= i is linear in p_i.
            double need = floor;
            for (std::size_t k = 0; k <= i; ++k) {
                double interference = s.noise_vars[k];
                for (std::size_t j = 0; j < i; ++j)
                    interference += p[j] * gain[k][j];
                if (s.sinr_thresholds[i] > 0.0) {
                    if (!(gain[k][i] > 0.0))
                        throw InfeasibleScenario("matched filter of user " + std::to_string(i + 1) + " is orthogonal to a decoder");
                    need = std::max(need, s.sinr_thresholds[i] * interference / gain[k][i]);
                }
            }
            // |h_r^H w_i|^2 >= |h_r^H w_{i-1}|^2 at every receiver r
            if (i > 0)
                for (std::size_t r = 0; r < k_users; ++r) {
                    if (!(gain[r][i] > 0.0))
                        throw InfeasibleScenario("ordered-power chain cannot hold with matched filters");
                    need = std::max(need, p[i - 1] * gain[r][i - 1] / gain[r][i]);
                }
            if (need > p[i]) {
                p[i] = need;
                changed = true;
            }
        }
        if (!changed)
            break;
    }
    double total = 0.0;
    for (double pi : p)
        total += pi;
    if (total > s.p_available)
        throw InfeasibleScenario("minimum-power initialisation needs " + std::to_string(total) + " W > P_ava = " +
                                 std::to_string(s.p_available) + " W");

    ScaState state;
    state.w.vectors.resize(k_users);
    for (std::size_t i = 0; i < k_users; ++i)
        state.w.vectors[i] = std::sqrt(p[i]) * dir[i];
    return state;
}

double true_objective(const SystemScenario& s, const Beamformers& w, Design design)
{
    const Metrics m = metrics(s, w);
    switch (design) {
    case Design::Mmee: return m.min_ee();
    case Design::GeeMax: return m.gee;
    case Design::Pf: {
        double sum = 0.0;
        for (double ee : m.per_user_ee)
            sum += std::log2(ee);
        return sum;
    }
    }
    return 0.0;
}

void update_slacks(const SystemScenario& s, ScaState& state, Design design)
{
    const auto k_users = static_cast<std::size_t>(s.num_users);
    const Metrics m = metrics(s, state.w);
    state.beta.assign(k_users, 0.0);
    state.delta.assign(k_users, 0.0);
    state.tau.assign(k_users, 0.0);
    state.mu.assign(k_users, 0.0);
    state.varsigma.assign(k_users, 0.0);
    state.rho.assign(k_users, {});
    for (std::size_t i = 0; i < k_users; ++i) {
        state.beta[i] = std::sqrt(m.per_user_power[i] / s.amp_efficiency + s.power_loss_per_user[i]);
        state.delta[i] = m.per_user_rate[i];
        state.tau[i] = 1.0 + m.per_user_sinr[i];
        state.mu[i] = m.per_user_ee[i];
        state.varsigma[i] = std::log2(m.per_user_ee[i]);
        state.rho[i].resize(i + 1);
        for (std::size_t k = 0; k <= i; ++k) {
            double interference = s.noise_vars[k];
            for (std::size_t j = 0; j < i; ++j)
                interference += std::norm(s.channels[k].dot(state.w.vectors[j]));
            state.rho[i][k] = std::sqrt(interference);
        }
    }
    state.alpha = m.min_ee();
    state.objective_trace.push_back(true_objective(s, state.w, design));
}

namespace {

// Rotates every w_i so that h_i^H w_i is real and nonnegative.
void normalise_phases(const SystemScenario& s, Beamformers& w)
{
    for (std::size_t i = 0; i < w.vectors.size(); ++i) {
        const cplx z = s.channels[i].dot(w.vectors[i]);
        if (std::abs(z) > 0.0)
            w.vectors[i] *= std::polar(1.0, -std::arg(z));
    }
}

struct Loop
{
    std::function<Subproblem(const ScaState&)> build;
    std::function<double(const Beamformers&)> objective;
    /// Scale-free improvement of the true objective.
    std::function<double(double before, double after, const Beamformers& at)> progress;
};

void dump_subproblem(const ScaOptions& options, Design design, int index, const Subproblem& sp)
{
    if (options.dump_dir.empty())
        return;
    std::filesystem::create_directories(options.dump_dir);
    const auto path = std::filesystem::path(options.dump_dir) /
                      (options.dump_prefix + to_string(design) + "_" + std::to_string(index) + ".txt");
    std::ofstream os(path);
    cone::write_program(os, sp.builder.program());
    std::ofstream ss(path.string() + ".start");
    ss.precision(17);
    for (double v : sp.expansion_point) ss << v << "\n";
}

// Runs build -> solve -> damped update until the progress drops below eps.
Termination sca_loop(const SystemScenario& s, ScaState& state, Design design, const Loop& loop,
                     const ScaOptions& options, DesignResult& result, std::vector<double>* trace)
{
    double current = loop.objective(state.w);
    for (int it = 0; it < options.max_outer; ++it) {
        Subproblem sp;
        try {
            sp = loop.build(state);
        } catch (const DegenerateExpansion& e) {
            result.message = e.what();
            result.failed_iteration = result.subproblems;
            return Termination::SolverFailure;
        }
        dump_subproblem(options, design, result.subproblems, sp);
        cone::SolverOptions so;
        so.tol = options.solver_tol;
        so.max_iters = options.solver_max_iters;
        so.start = sp.expansion_point;
        const cone::SolveResult sol = cone::solve(sp.builder, so);
        ++result.subproblems;
        result.subproblem_statuses.push_back(sol.status);
        if (!sol.optimal()) {
            result.message = std::string("subproblem solver returned ") + cone::to_string(sol.status);
            result.failed_iteration = result.subproblems - 1;
            return Termination::SolverFailure;
        }
        const Beamformers candidate = extract_beamformers(sp.layout, sol.x);

        bool accepted = false;
        double next = current;
        Beamformers w_next;
        for (double gamma = 1.0; gamma >= 0.125; gamma *= 0.5) {
            w_next = state.w;
            for (std::size_t i = 0; i < w_next.vectors.size(); ++i)
                w_next.vectors[i] += gamma * (candidate.vectors[i] - state.w.vectors[i]);
            if (!check_feasibility(s, w_next, options.step_feas_tol).ok())
                continue;
            next = loop.objective(w_next);
            if (std::isfinite(next) && loop.progress(current, next, state.w) >= -options.eps) {
                accepted = true;
                break;
            }
        }
        if (!accepted)
            return Termination::Stalled;

        normalise_phases(s, w_next);
        const double gain = loop.progress(current, next, state.w);
        state.w = std::move(w_next);
        update_slacks(s, state, design);
        ++state.iter;
        if (trace != nullptr)
            trace->push_back(next);
        current = next;
        if (std::abs(gain) < options.eps)
            return Termination::Tolerance;
    }
    return Termination::MaxIterations;
}

double relative_change(double before, double after)
{
    return (after - before) / std::max(std::abs(before), std::numeric_limits<double>::min());
}

} // namespace

DesignResult run_design(const SystemScenario& s, Design design, const ScaOptions& options)
{
    DesignResult result;
    result.design = design;
    ScaState state;
    try {
        if (!s.is_ordered())
            throw std::invalid_argument("run_design: users must be ordered by channel strength");
        state = initialize(s, options);
    } catch (const InfeasibleScenario& e) {
        result.w = Beamformers::zeros(s.num_users, s.num_antennas);
        result.metrics = metrics(s, result.w);
        result.termination = Termination::Infeasible;
        result.message = e.what();
        return result;
    }
    update_slacks(s, state, design);
    result.trace.push_back(state.objective_trace.back());

    Termination term = Termination::MaxIterations;
    if (design == Design::Mmee || design == Design::Pf) {
        if (design == Design::Pf)
            for (double m : state.mu)
                if (!(m > 0.0))
                    throw ZeroEEInitialization("initial point gives a user zero energy efficiency");
        Loop loop;
        loop.objective = [&](const Beamformers& w) { return true_objective(s, w, design); };
        if (design == Design::Mmee) {
            loop.build = [&](const ScaState& st) { return build_mmee_subproblem(s, st, options); };
            loop.progress = [](double a, double b, const Beamformers&) { return relative_change(a, b); };
        } else {
            loop.build = [&](const ScaState& st) { return build_pf_subproblem(s, st, options); };
            // already logarithmic, so differences are relative
            loop.progress = [](double a, double b, const Beamformers&) { return b - a; };
        }
        term = sca_loop(s, state, design, loop, options, result, &result.trace);
        result.iterations = state.iter;
    } else {
        // Dinkelbach: lambda <- sum R / (P / eps0 + P_l), inner SCA on sum R - lambda * D.
        double lambda = state.objective_trace.back();
        int outer = 0;
        for (; outer < options.max_outer; ++outer) {
            Loop loop;
            loop.build = [&, lambda](const ScaState& st) { return build_dinkelbach_subproblem(s, st, lambda, options); };
            loop.objective = [&, lambda](const Beamformers& w) {
                const Metrics m = metrics(s, w);
                return m.sum_rate() - lambda * (w.total_power() / s.amp_efficiency + s.total_power_loss());
            };
            loop.progress = [&](double a, double b, const Beamformers& at) {
                const double scale = std::max(metrics(s, at).sum_rate(), std::numeric_limits<double>::min());
                return (b - a) / scale;
            };
            const Termination inner = sca_loop(s, state, design, loop, options, result, nullptr);
            if (inner == Termination::SolverFailure) {
                term = inner;
                break;
            }
            const double gee = metrics(s, state.w).gee;
            result.trace.push_back(gee);
            const double rel = relative_change(lambda, gee);
            lambda = gee;
            if (std::abs(rel) < options.eps) {
                term = Termination::Tolerance;
                ++outer;
                break;
            }
        }
        result.iterations = outer;
    }

    result.termination = term;
    result.converged = term == Termination::Tolerance || term == Termination::Stalled;
    result.w = state.w;
    result.metrics = metrics(s, state.w, s.bandwidth_hz);
    return result;
}

} // namespace nomaee::sca
