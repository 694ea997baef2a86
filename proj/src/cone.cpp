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

#include "nomaee/cone.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace nomaee::cone {

AffineForm AffineForm::variable(int index, double coeff)
{
    AffineForm f;
    f.add(index, coeff);
    return f;
}

AffineForm& AffineForm::add(int index, double coeff)
{
    if (coeff != 0.0)
        terms_.push_back({index, coeff});
    return *this;
}

AffineForm& AffineForm::operator+=(const AffineForm& other)
{
    terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
    constant_ += other.constant_;
    compact();
    return *this;
}

AffineForm& AffineForm::operator-=(const AffineForm& other)
{
    for (const auto& t : other.terms_)
        terms_.push_back({t.index, -t.coeff});
    constant_ -= other.constant_;
    compact();
    return *this;
}

AffineForm& AffineForm::operator*=(double s)
{
    for (auto& t : terms_)
        t.coeff *= s;
    constant_ *= s;
    if (s == 0.0)
        terms_.clear();
    return *this;
}

double AffineForm::coeff(int index) const
{
    double c = 0.0;
    for (const auto& t : terms_)
        if (t.index == index)
            c += t.coeff;
    return c;
}

double AffineForm::evaluate(std::span<const double> x) const
{
    double v = constant_;
    for (const auto& t : terms_)
        v += t.coeff * x[static_cast<std::size_t>(t.index)];
    return v;
}

double AffineForm::evaluate(const Eigen::VectorXd& x) const
{
    return evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

void AffineForm::compact()
{
    std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) { return a.index < b.index; });
    std::vector<Term> merged;
    merged.reserve(terms_.size());
    for (const auto& t : terms_) {
        if (!merged.empty() && merged.back().index == t.index)
            merged.back().coeff += t.coeff;
        else
            merged.push_back(t);
    }
    std::erase_if(merged, [](const Term& t) { return t.coeff == 0.0; });
    terms_ = std::move(merged);
}

AffineForm operator+(AffineForm a, const AffineForm& b)
{
    a += b;
    return a;
}

AffineForm operator-(AffineForm a, const AffineForm& b)
{
    a -= b;
    return a;
}

AffineForm operator*(double s, AffineForm a)
{
    a *= s;
    return a;
}

const char* to_string(ConeKind kind)
{
    switch (kind) {
    case ConeKind::Zero: return "zero";
    case ConeKind::Nonnegative: return "nonneg";
    case ConeKind::SecondOrder: return "soc";
    case ConeKind::Exponential: return "exp";
    }
    return "?";
}

const char* to_string(SolveStatus status)
{
    switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalError: return "numerical_error";
    case SolveStatus::IterLimit: return "iter_limit";
    }
    return "?";
}

void ConicProgram::validate() const
{
    if (var_count < 0)
        throw std::invalid_argument("conic program: negative variable count");
    if (objective.size() != var_count)
        throw std::invalid_argument("conic program: objective length must equal var_count");
    for (const auto& block : blocks) {
        if (block.rows.empty())
            throw std::invalid_argument("conic program: empty cone block");
        if (block.kind == ConeKind::SecondOrder && block.dim() < 2)
            throw std::invalid_argument("conic program: second-order block needs dim >= 2");
        if (block.kind == ConeKind::Exponential && block.dim() != 3)
            throw std::invalid_argument("conic program: exponential block needs dim 3");
        for (const auto& row : block.rows)
            for (const auto& t : row.terms())
                if (t.index < 0 || t.index >= var_count)
                    throw std::invalid_argument("conic program: variable index out of range");
    }
}

int ProgramBuilder::add_variable() { return add_variables(1); }

int ProgramBuilder::add_variables(int count)
{
    const int first = program_.var_count;
    program_.var_count += count;
    program_.objective.conservativeResize(program_.var_count);
    program_.objective.tail(count).setZero();
    return first;
}

void ProgramBuilder::maximize(const AffineForm& objective)
{
    program_.objective.setZero();
    for (const auto& t : objective.terms())
        program_.objective[t.index] += t.coeff;
}

void ProgramBuilder::add_zero(AffineForm row) { add_block({ConeKind::Zero, {std::move(row)}}); }

void ProgramBuilder::add_nonneg(AffineForm row) { add_block({ConeKind::Nonnegative, {std::move(row)}}); }

void ProgramBuilder::add_soc(std::vector<AffineForm> rows) { add_block({ConeKind::SecondOrder, std::move(rows)}); }

void ProgramBuilder::add_exp(AffineForm x, AffineForm y, AffineForm z)
{
    add_block({ConeKind::Exponential, {std::move(x), std::move(y), std::move(z)}});
}

void ProgramBuilder::add_block(ConeBlock block)
{
    for (auto& row : block.rows)
        row.compact();
    program_.blocks.push_back(std::move(block));
}

double exp2_tangent(double g, double delta) { return std::exp2(g) * (1.0 + std::numbers::ln2 * (delta - g)); }

namespace {

// tau - 2^g ln2 delta >= 2^g (1 - ln2 g)
AffineForm tangent_cut(int delta, int tau, double g)
{
    const double slope = std::exp2(g) * std::numbers::ln2;
    AffineForm row = AffineForm::variable(tau);
    row.add(delta, -slope);
    row.add_constant(-(std::exp2(g) - slope * g));
    return row;
}

} // namespace

void encode_exp2(ProgramBuilder& builder, int delta, int tau, double lo, double hi)
{
    if (builder.capabilities().has_exp_cone) {
        builder.add_exp(AffineForm::variable(delta, std::numbers::ln2), AffineForm(1.0), AffineForm::variable(tau));
        return;
    }
    if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
        throw std::invalid_argument("encode_exp2: tangent-cut fallback needs a finite delta range");
    const int m = std::max(2, builder.capabilities().exp_cut_grid);
    for (int j = 0; j < m; ++j) {
        const double g = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(m - 1);
        builder.add_nonneg(tangent_cut(delta, tau, g));
    }
    // Without a box delta and tau could recede together along the cuts. The unit
    // margin keeps points on the ends of [lo, hi] strictly interior.
    builder.add_nonneg(AffineForm::variable(delta) + AffineForm(1.0 - lo));
    builder.add_nonneg(AffineForm(hi + 1.0) - AffineForm::variable(delta));
    builder.add_exp2_link({delta, tau, lo, hi});
}

namespace {

double block_violation(const ConeBlock& block, const Eigen::VectorXd& x)
{
    std::vector<double> v(block.dim());
    for (std::size_t r = 0; r < block.dim(); ++r)
        v[r] = block.rows[r].evaluate(x);
    switch (block.kind) {
    case ConeKind::Zero: {
        double m = 0.0;
        for (double e : v)
            m = std::max(m, std::abs(e));
        return m;
    }
    case ConeKind::Nonnegative: {
        double m = 0.0;
        for (double e : v)
            m = std::max(m, -e);
        return m;
    }
    case ConeKind::SecondOrder: {
        double norm2 = 0.0;
        for (std::size_t r = 1; r < v.size(); ++r)
            norm2 += v[r] * v[r];
        return std::max(0.0, std::sqrt(norm2) - v[0]);
    }
    case ConeKind::Exponential: {
        const double ex = v[0], ey = v[1], ez = v[2];
        if (ey > 0.0) {
            const double lhs = ey * std::exp(std::min(ex / ey, 700.0));
            return std::max({0.0, lhs - ez});
        }
        return std::max({0.0, -ey, ex, -ez});
    }
    }
    return 0.0;
}

} // namespace

double max_violation(const ConicProgram& program, const Eigen::VectorXd& x)
{
    double m = 0.0;
    for (const auto& block : program.blocks)
        m = std::max(m, block_violation(block, x));
    return m;
}

SolveResult solve(const ConicProgram& program, double tol, int max_iters)
{
    SolverOptions options;
    options.tol = tol;
    options.max_iters = max_iters;
    return solve(program, options);
}

SolveResult solve(const ProgramBuilder& builder, const SolverOptions& options)
{
    const auto& links = builder.exp2_links();
    if (links.empty())
        return solve(builder.program(), options);

    const auto& caps = builder.capabilities();
    ConicProgram program = builder.program();
    SolverOptions opts = options;
    SolveResult result;
    for (int round = 0; round <= caps.exp_cut_max_rounds; ++round) {
        result = solve(program, opts);
        result.stats.cut_rounds = round;
        if (!result.optimal())
            return result;
        double worst = 0.0;
        std::vector<ConeBlock> cuts;
        for (const auto& link : links) {
            const double d = result.x[link.delta];
            const double violation = std::exp2(d) - result.x[link.tau];
            worst = std::max(worst, violation);
            if (violation > caps.exp_cut_violation_tol)
                cuts.push_back({ConeKind::Nonnegative, {tangent_cut(link.delta, link.tau, d)}});
        }
        result.stats.max_violation = std::max(result.stats.max_violation, worst);
        if (cuts.empty()) {
            result.stats.max_violation = worst;
            return result;
        }
        for (auto& c : cuts)
            program.blocks.push_back(std::move(c));
        // The previous optimum violates the new cuts; restart phase I from it anyway.
        opts.start = result.x;
    }
    result.status = SolveStatus::IterLimit;
    return result;
}

void write_program(std::ostream& os, const ConicProgram& program)
{
    const auto old_flags = os.flags();
    const auto old_precision = os.precision();
    os << std::setprecision(17);
    os << "conic-program 1\n";
    os << "vars " << program.var_count << "\n";
    os << "objective";
    for (int j = 0; j < program.var_count; ++j)
        os << ' ' << program.objective[j];
    os << "\n";
    os << "blocks " << program.blocks.size() << "\n";
    std::vector<double> dense(static_cast<std::size_t>(program.var_count));
    for (const auto& block : program.blocks) {
        os << "block " << to_string(block.kind) << ' ' << block.dim() << "\n";
        for (const auto& row : block.rows) {
            std::fill(dense.begin(), dense.end(), 0.0);
            for (const auto& t : row.terms())
                dense[static_cast<std::size_t>(t.index)] += t.coeff;
            for (double c : dense)
                os << c << ' ';
            os << "| " << row.constant() << "\n";
        }
    }
    os << "end\n";
    os.flags(old_flags);
    os.precision(old_precision);
}

namespace {

void expect_token(std::istream& is, const std::string& expected)
{
    std::string token;
    if (!(is >> token) || token != expected)
        throw ParseError("conic dump: expected '" + expected + "', got '" + token + "'");
}

ConeKind parse_kind(const std::string& s)
{
    if (s == "zero")
        return ConeKind::Zero;
    if (s == "nonneg")
        return ConeKind::Nonnegative;
    if (s == "soc")
        return ConeKind::SecondOrder;
    if (s == "exp")
        return ConeKind::Exponential;
    throw ParseError("conic dump: unknown cone kind '" + s + "'");
}

template <typename T>
T read_value(std::istream& is, const char* what)
{
    T v{};
    if (!(is >> v))
        throw ParseError(std::string("conic dump: could not read ") + what);
    return v;
}

} // namespace

ConicProgram read_program(std::istream& is)
{
    ConicProgram p;
    expect_token(is, "conic-program");
    if (read_value<int>(is, "format version") != 1)
        throw ParseError("conic dump: unsupported format version");
    expect_token(is, "vars");
    p.var_count = read_value<int>(is, "variable count");
    if (p.var_count < 0)
        throw ParseError("conic dump: negative variable count");
    expect_token(is, "objective");
    p.objective.resize(p.var_count);
    for (int j = 0; j < p.var_count; ++j)
        p.objective[j] = read_value<double>(is, "objective coefficient");
    expect_token(is, "blocks");
    const auto nblocks = read_value<std::size_t>(is, "block count");
    for (std::size_t b = 0; b < nblocks; ++b) {
        expect_token(is, "block");
        ConeBlock block;
        block.kind = parse_kind(read_value<std::string>(is, "cone kind"));
        const auto rows = read_value<std::size_t>(is, "row count");
        for (std::size_t r = 0; r < rows; ++r) {
            AffineForm row;
            for (int j = 0; j < p.var_count; ++j)
                row.add(j, read_value<double>(is, "row coefficient"));
            expect_token(is, "|");
            row.add_constant(read_value<double>(is, "row offset"));
            block.rows.push_back(std::move(row));
        }
        p.blocks.push_back(std::move(block));
    }
    expect_token(is, "end");
    p.validate();
    return p;
}

} // namespace nomaee::cone
