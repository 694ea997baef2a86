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

#ifndef NOMAEE_CONE_HPP
#define NOMAEE_CONE_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nomaee::cone {

struct Term
{
    int index;
    double coeff;
};

/// Real affine expression  sum_j coeff_j x_j + constant  over program variables.
class AffineForm
{
public:
    AffineForm() = default;
    explicit AffineForm(double constant) : constant_(constant) {}

    static AffineForm variable(int index, double coeff = 1.0);

    AffineForm& add(int index, double coeff);
    AffineForm& add_constant(double c)
    {
        constant_ += c;
        return *this;
    }
    AffineForm& operator+=(const AffineForm& other);
    AffineForm& operator-=(const AffineForm& other);
    AffineForm& operator*=(double s);

    const std::vector<Term>& terms() const { return terms_; }
    double constant() const { return constant_; }
    double coeff(int index) const;

    double evaluate(std::span<const double> x) const;
    double evaluate(const Eigen::VectorXd& x) const;

    /// Sorts terms by index and merges duplicates.
    void compact();

private:
    std::vector<Term> terms_;
    double constant_ = 0.0;
};

AffineForm operator+(AffineForm a, const AffineForm& b);
AffineForm operator-(AffineForm a, const AffineForm& b);
AffineForm operator*(double s, AffineForm a);

/// Real and imaginary parts of a complex affine expression.
struct ComplexAffineForm
{
    AffineForm re;
    AffineForm im;
};

enum class ConeKind
{
    Zero,        // rows == 0
    Nonnegative, // rows >= 0
    SecondOrder, // rows[0] >= ||rows[1..]||
    Exponential  // (x, y, z): y exp(x / y) <= z, y > 0 (closure)
};

const char* to_string(ConeKind kind);

struct ConeBlock
{
    ConeKind kind = ConeKind::Nonnegative;
    std::vector<AffineForm> rows;

    std::size_t dim() const { return rows.size(); }
};

/// maximize objective^T x  subject to  every block's rows lying in its cone.
struct ConicProgram
{
    int var_count = 0;
    Eigen::VectorXd objective;
    std::vector<ConeBlock> blocks;

    /// Throws std::invalid_argument on dimension or index errors.
    void validate() const;
};

enum class SolveStatus
{
    Optimal,
    Infeasible,
    Unbounded,
    NumericalError,
    IterLimit
};

const char* to_string(SolveStatus status);

struct SolverStats
{
    int newton_steps = 0;
    int centering_rounds = 0;
    int cut_rounds = 0;
    double gap_bound = 0.0;
    double max_violation = 0.0;
};

struct SolveResult
{
    SolveStatus status = SolveStatus::NumericalError;
    Eigen::VectorXd x;
    double objective = 0.0;
    SolverStats stats;

    bool optimal() const { return status == SolveStatus::Optimal; }
};

struct SolverOptions
{
    double tol = 1e-8;
    int max_iters = 2000;
    /// Optional starting point; used for phase I when it is not strictly interior.
    std::optional<Eigen::VectorXd> start;
    /// Implicit ball ||x|| <= bound_radius; reaching it reports Unbounded.
    double bound_radius = 1e6;
};

struct BackendCapabilities
{
    bool has_exp_cone = true;
    /// Grid size for the tangent-cut encoding of tau >= 2^delta.
    int exp_cut_grid = 33;
    double exp_cut_violation_tol = 1e-6;
    int exp_cut_max_rounds = 60;
};

/// A pair (delta, tau) constrained by tau >= 2^delta through tangent cuts.
struct Exp2Link
{
    int delta = -1;
    int tau = -1;
    double lo = 0.0;
    double hi = 0.0;
};

class ProgramBuilder
{
public:
    explicit ProgramBuilder(BackendCapabilities caps = {}) : caps_(caps) {}

    int add_variable();
    /// Returns the index of the first of `count` new variables.
    int add_variables(int count);
    int var_count() const { return program_.var_count; }

    void maximize(const AffineForm& objective);

    void add_zero(AffineForm row);
    void add_nonneg(AffineForm row);
    void add_soc(std::vector<AffineForm> rows);
    void add_exp(AffineForm x, AffineForm y, AffineForm z);
    void add_block(ConeBlock block);

    void add_exp2_link(const Exp2Link& link) { exp2_links_.push_back(link); }

    const ConicProgram& program() const { return program_; }
    ConicProgram& program() { return program_; }
    const BackendCapabilities& capabilities() const { return caps_; }
    const std::vector<Exp2Link>& exp2_links() const { return exp2_links_; }

private:
    BackendCapabilities caps_;
    ConicProgram program_;
    std::vector<Exp2Link> exp2_links_;
};

/// Lower tangent of 2^delta at g evaluated at delta: 2^g (1 + ln2 (delta - g)).
double exp2_tangent(double g, double delta);

/// Appends tau >= 2^delta. Uses the exponential cone (ln2 delta, 1, tau) when the
/// backend supports it; otherwise tangent cuts on a uniform grid over [lo, hi]
/// plus the box lo - 1 <= delta <= hi + 1 and a link refined after each solve. Throws std::invalid_argument when the
/// fallback is needed and the range is not finite.
void encode_exp2(ProgramBuilder& builder, int delta, int tau, double lo, double hi);

/// Dense barrier path-following backend.
SolveResult solve(const ConicProgram& program, const SolverOptions& options = {});
SolveResult solve(const ConicProgram& program, double tol, int max_iters);

/// Solves a built program, running the tangent-cut refinement loop when the
/// builder carries exp2 links.
SolveResult solve(const ProgramBuilder& builder, const SolverOptions& options = {});

/// Largest violation of any cone block at x (0 when feasible).
double max_violation(const ConicProgram& program, const Eigen::VectorXd& x);

/// Plain-text dump: one section per cone block, dense rows, decimal floats.
void write_program(std::ostream& os, const ConicProgram& program);
ConicProgram read_program(std::istream& is);

class ParseError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace nomaee::cone

#endif // NOMAEE_CONE_HPP
