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

#ifndef NOMAEE_SCA_HPP
#define NOMAEE_SCA_HPP

#include "nomaee/cone.hpp"
#include "nomaee/model.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nomaee::sca {

enum class Design
{
    GeeMax,
    Mmee,
    Pf
};

const char* to_string(Design design);
/// Accepts "gee-max", "mmee", "pf"; throws std::invalid_argument otherwise.
Design parse_design(std::string_view name);

class InfeasibleScenario : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class DegenerateExpansion : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class ZeroEEInitialization : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Current SCA iterate: beamformers plus every slack of the convexified problem.
struct ScaState
{
    Beamformers w;
    double alpha = 0.0;
    std::vector<double> beta;
    std::vector<double> delta;
    std::vector<double> tau;
    /// rho[i][k] for k <= i.
    std::vector<std::vector<double>> rho;
    std::vector<double> mu;
    std::vector<double> varsigma;
    int iter = 0;
    std::vector<double> objective_trace;
};

/// How the ordered-power constraint |h_i^H w_K|^2 >= ... >= |h_i^H w_1|^2 is convexified.
enum class SicForm
{
    /// f_{i,K} >= ... >= f_{i,1} with every term replaced by its tangent minorant.
    Linear,
    /// f_{i,j+1} >= |h_i^H w_j|^2: tangent minorant on the left, exact convex term on
    /// the right, so every solution satisfies the original chain.
    Restricted
};

struct ScaOptions
{
    double eps = 1e-3;
    int max_outer = 100;
    SicForm sic_form = SicForm::Restricted;
    /// tau^(n) is raised to at least 1 + tau_clamp before linearising.
    double tau_clamp = 1e-6;
    double solver_tol = 1e-8;
    int solver_max_iters = 2000;
    cone::BackendCapabilities backend;
    /// Feasibility tolerance for accepting an iterate.
    double step_feas_tol = 1e-9;
    /// When non-empty, every subproblem is written to <dump_dir>/<dump_prefix><design>_<n>.txt.
    std::string dump_dir;
    std::string dump_prefix;
};

/// Index map from optimisation quantities to conic program variables.
/// Beamformer w_i occupies 2N reals: the N real parts, then the N imaginary parts.
struct VariableLayout
{
    int num_antennas = 0;
    int num_users = 0;
    int w = 0;
    int alpha = -1;
    int beta = -1;
    int delta = -1;
    int tau = -1;
    int rho = -1;
    int mu = -1;
    int varsigma = -1;
    int power = -1;
    int count = 0;

    int w_re(int i, int n) const { return w + i * 2 * num_antennas + n; }
    int w_im(int i, int n) const { return w + i * 2 * num_antennas + num_antennas + n; }
    int rho_at(int i, int k) const { return rho + i * (i + 1) / 2 + k; }

    static VariableLayout for_design(Design design, int num_users, int num_antennas);
};

/// h^H w_i as a pair of real affine forms in the layout's beamformer variables.
cone::ComplexAffineForm channel_response(const VariableLayout& layout, const CVector& h, int i);

/// First-order expansion of |z|^2 at z_ref:
/// |z_ref|^2 + 2 [Re z_ref, Im z_ref] . [Re z - Re z_ref, Im z - Im z_ref]; never exceeds |z|^2.
cone::AffineForm taylor_abs2_lb(cplx z_ref, const cone::ComplexAffineForm& z);

/// Rotates z by exp(-j phase): Re/Im parts of e^{-j phase} z.
cone::ComplexAffineForm rotate(const cone::ComplexAffineForm& z, double phase);

/// Minimum-SINR constraint of user i as SOC blocks, one per decoding user k <= i.
/// With `reference` the signal term uses Re(e^{-j arg(h_k^H w_i^ref)} h_k^H w_i),
/// which is tight at the reference point; without it, plain Re(h_k^H w_i).
void add_soc_min_rate(cone::ProgramBuilder& builder, const VariableLayout& layout, const SystemScenario& s, int i,
                      const Beamformers* reference = nullptr);

void add_sic_chain(cone::ProgramBuilder& builder, const VariableLayout& layout, const SystemScenario& s,
                   const ScaState& state, SicForm form);

/// Floor variable of the EE constraint: alpha (MMEE) or mu_i (PF), with its value at the expansion point.
struct FloorVar
{
    int index = -1;
    double value = 0.0;
};

/// Rate ladder of user i: tau_i >= 2^delta_i, the rho SOCs and the linearised
/// |h_k^H w_i|^2 >= (tau_i - 1) rho_{i,k}^2.
void add_rate_ladder(cone::ProgramBuilder& builder, const VariableLayout& layout, const SystemScenario& s,
                     const ScaState& state, int i, const ScaOptions& options = {});

/// add_rate_ladder plus beta_i >= ||[w_i / sqrt(eps0), sqrt(P_l,i)]|| and the
/// linearised delta_i >= theta beta_i^2.
void add_ee_floor(cone::ProgramBuilder& builder, const VariableLayout& layout, const SystemScenario& s,
                  const ScaState& state, FloorVar floor, int i, const ScaOptions& options = {});

struct Subproblem
{
    cone::ProgramBuilder builder;
    VariableLayout layout;
    /// The expansion point (w^(n), slacks^(n)) in program coordinates.
    Eigen::VectorXd expansion_point;
};

Subproblem build_mmee_subproblem(const SystemScenario& s, const ScaState& state, const ScaOptions& options = {});
Subproblem build_pf_subproblem(const SystemScenario& s, const ScaState& state, const ScaOptions& options = {});
Subproblem build_dinkelbach_subproblem(const SystemScenario& s, const ScaState& state, double lambda,
                                       const ScaOptions& options = {});

Beamformers extract_beamformers(const VariableLayout& layout, const Eigen::VectorXd& x);

/// Minimum-power start: matched-filter directions, powers raised until every
/// SINR threshold and the ordered-power chain hold. Slacks are set tight.
ScaState initialize(const SystemScenario& s, const ScaOptions& options = {});

/// Exact objective of a design (minimum EE, sum of log2 EE, or GEE).
double true_objective(const SystemScenario& s, const Beamformers& w, Design design);

/// Sets every slack to its tight value at state.w and appends the design's true objective.
void update_slacks(const SystemScenario& s, ScaState& state, Design design);

enum class Termination
{
    Tolerance,
    Stalled,
    MaxIterations,
    SolverFailure,
    Infeasible
};

const char* to_string(Termination t);

struct DesignResult
{
    Design design = Design::Mmee;
    Beamformers w;
    Metrics metrics;
    int iterations = 0;
    int subproblems = 0;
    bool converged = false;
    Termination termination = Termination::MaxIterations;
    std::vector<double> trace;
    std::vector<cone::SolveStatus> subproblem_statuses;
    /// Iteration at which the solver failed, or -1.
    int failed_iteration = -1;
    std::string message;
};

DesignResult run_design(const SystemScenario& s, Design design, const ScaOptions& options = {});

} // namespace nomaee::sca

#endif // NOMAEE_SCA_HPP
