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

#include "nomaee/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <thread>

namespace nomaee::oracle {

const char* to_string(Objective objective)
{
    switch (objective) {
    case Objective::MinEE: return "min-ee";
    case Objective::SumLogEE: return "sum-log-ee";
    case Objective::GEE: return "gee";
    }
    return "?";
}

Objective parse_objective(std::string_view name)
{
    if (name == "min-ee")
        return Objective::MinEE;
    if (name == "sum-log-ee")
        return Objective::SumLogEE;
    if (name == "gee")
        return Objective::GEE;
    throw std::invalid_argument("unknown oracle objective '" + std::string(name) + "'");
}

double objective_value(const Metrics& m, Objective objective)
{
    switch (objective) {
    case Objective::MinEE: return m.min_ee();
    case Objective::GEE: return m.gee;
    case Objective::SumLogEE: {
        double sum = 0.0;
        for (double ee : m.per_user_ee) {
            if (!(ee > 0.0))
                return -std::numeric_limits<double>::infinity();
            sum += std::log2(ee);
        }
        return sum;
    }
    }
    return 0.0;
}

double Axis::at(int j) const
{
    if (j == points - 1)
        return hi;
    return lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(points - 1);
}

GridSpec GridSpec::uniform(const SystemScenario& s, int power_points, int angle_points)
{
    GridSpec g;
    for (int i = 0; i < s.num_users; ++i)
        g.power.push_back({0.0, s.p_available, power_points});
    if (s.num_antennas == 2)
        for (int i = 0; i < s.num_users; ++i)
            g.angle.push_back({0.0, std::numbers::pi, angle_points});
    return g;
}

GridSpec GridSpec::refined() const
{
    GridSpec g = *this;
    for (auto& a : g.power)
        a.points = 2 * a.points - 1;
    for (auto& a : g.angle)
        a.points = 2 * a.points - 1;
    return g;
}

std::size_t GridSpec::size() const
{
    std::size_t n = 1;
    for (const auto& a : power)
        n *= static_cast<std::size_t>(std::max(a.points, 0));
    for (const auto& a : angle)
        n *= static_cast<std::size_t>(std::max(a.points, 0));
    return n;
}

void GridSpec::validate(const SystemScenario& s) const
{
    s.validate();
    if (s.num_users > 3)
        throw std::invalid_argument("grid oracle supports at most three users");
    if (s.num_antennas == 2) {
        for (const auto& h : s.channels)
            for (int n = 0; n < 2; ++n)
                if (h[n].imag() != 0.0)
                    throw std::invalid_argument("grid oracle with two antennas needs real channels");
        if (angle.size() != static_cast<std::size_t>(s.num_users))
            throw std::invalid_argument("grid oracle needs one angle axis per user");
    } else if (s.num_antennas != 1) {
        throw std::invalid_argument("grid oracle supports one antenna, or two with real channels");
    } else if (!angle.empty()) {
        throw std::invalid_argument("angle axes given for a single-antenna scenario");
    }
    if (power.size() != static_cast<std::size_t>(s.num_users))
        throw std::invalid_argument("grid oracle needs one power axis per user");
    for (const auto& a : power)
        if (a.points < 2 || !(a.lo >= 0.0) || a.hi < a.lo || a.hi > s.p_available)
            throw std::invalid_argument("power axis must have >= 2 points inside [0, P_ava]");
    for (const auto& a : angle)
        if (a.points < 2 || !std::isfinite(a.lo) || !std::isfinite(a.hi) || a.hi < a.lo)
            throw std::invalid_argument("angle axis must have >= 2 points and a finite range");
    const std::size_t dims = power.size() + angle.size();
    if (!axis_order.empty()) {
        std::vector<int> sorted = axis_order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t a = 0; a < dims; ++a)
            if (sorted.size() != dims || sorted[a] != static_cast<int>(a))
                throw std::invalid_argument("axis_order must be a permutation of the grid axes");
    }
    double total = 1.0;
    for (const auto& a : power)
        total *= a.points;
    for (const auto& a : angle)
        total *= a.points;
    if (total > 1e7)
        throw std::invalid_argument("grid has more than 1e7 points");
    if (chunk_size == 0)
        throw std::invalid_argument("chunk_size must be positive");
}

namespace {

struct Candidate
{
    double value = -std::numeric_limits<double>::infinity();
    std::size_t index = std::numeric_limits<std::size_t>::max();
    std::size_t evaluated = 0;
    std::size_t feasible = 0;

    bool better(double v, std::size_t i) const { return v > value || (v == value && i < index); }
};

class Grid
{
public:
    Grid(const SystemScenario& s, Objective objective, const GridSpec& spec) : s_(s), objective_(objective)
    {
        for (const auto& a : spec.power)
            axes_.push_back(a);
        for (const auto& a : spec.angle)
            axes_.push_back(a);
        const std::size_t dims = axes_.size();
        order_ = spec.axis_order;
        if (order_.empty())
            for (std::size_t a = 0; a < dims; ++a)
                order_.push_back(static_cast<int>(a));
        // natural index: last axis fastest
        natural_stride_.assign(dims, 1);
        for (std::size_t a = dims; a-- > 1;)
            natural_stride_[a - 1] = natural_stride_[a] * static_cast<std::size_t>(axes_[a].points);
        visit_stride_.assign(dims, 1);
        for (std::size_t v = dims; v-- > 1;)
            visit_stride_[v - 1] =
                visit_stride_[v] * static_cast<std::size_t>(axes_[static_cast<std::size_t>(order_[v])].points);
    }

    std::size_t dims() const { return axes_.size(); }

    // Position q in visiting order -> per-axis indices.
    void decode(std::size_t q, std::vector<int>& j) const
    {
        for (std::size_t v = 0; v < order_.size(); ++v) {
            const auto a = static_cast<std::size_t>(order_[v]);
            j[a] = static_cast<int>(q / visit_stride_[v]);
            q %= visit_stride_[v];
        }
    }

    void decode_natural(std::size_t idx, std::vector<int>& j) const
    {
        for (std::size_t a = 0; a < axes_.size(); ++a) {
            j[a] = static_cast<int>(idx / natural_stride_[a]);
            idx %= natural_stride_[a];
        }
    }

    std::size_t natural(const std::vector<int>& j) const
    {
        std::size_t idx = 0;
        for (std::size_t a = 0; a < j.size(); ++a)
            idx += static_cast<std::size_t>(j[a]) * natural_stride_[a];
        return idx;
    }

    Beamformers beamformers(const std::vector<int>& j) const
    {
        const auto k = static_cast<std::size_t>(s_.num_users);
        Beamformers w = Beamformers::zeros(s_.num_users, s_.num_antennas);
        for (std::size_t i = 0; i < k; ++i) {
            const double amp = std::sqrt(axes_[i].at(j[i]));
            if (s_.num_antennas == 1) {
                w.vectors[i][0] = amp;
            } else {
                const double a = axes_[k + i].at(j[k + i]);
                w.vectors[i][0] = amp * std::cos(a);
                w.vectors[i][1] = amp * std::sin(a);
            }
        }
        return w;
    }

    /// Objective at a grid point, or nullopt-like -inf flag through `ok`.
    double evaluate(const std::vector<int>& j, bool& ok) const
    {
        ok = false;
        if (s_.num_antennas == 1) {
            // single antenna: the SIC chain is p_1 <= p_2 <= ... <= p_K
            for (std::size_t i = 0; i + 1 < static_cast<std::size_t>(s_.num_users); ++i)
                if (axes_[i + 1].at(j[i + 1]) < axes_[i].at(j[i]))
                    return 0.0;
        }
        const Beamformers w = beamformers(j);
        if (!check_feasibility(s_, w, 0.0).ok())
            return 0.0;
        const double v = objective_value(metrics(s_, w), objective_);
        if (std::isnan(v) || v == -std::numeric_limits<double>::infinity())
            return 0.0;
        ok = true;
        return v;
    }

    const Axis& axis(std::size_t a) const { return axes_[a]; }

private:
    const SystemScenario& s_;
    Objective objective_;
    std::vector<Axis> axes_;
    std::vector<int> order_;
    std::vector<std::size_t> natural_stride_;
    std::vector<std::size_t> visit_stride_;
};

Candidate scan_chunk(const Grid& grid, std::size_t begin, std::size_t end)
{
    Candidate best;
    std::vector<int> j(grid.dims());
    for (std::size_t q = begin; q < end; ++q) {
        grid.decode(q, j);
        ++best.evaluated;
        bool ok = false;
        const double v = grid.evaluate(j, ok);
        if (!ok)
            continue;
        ++best.feasible;
        const std::size_t idx = grid.natural(j);
        if (best.better(v, idx)) {
            best.value = v;
            best.index = idx;
        }
    }
    return best;
}

} // namespace

GridResult grid_optimize(const SystemScenario& s, Objective objective, const GridSpec& spec, int parallelism)
{
    spec.validate(s);
    const Grid grid(s, objective, spec);
    const std::size_t total = spec.size();
    const std::size_t chunks = (total + spec.chunk_size - 1) / spec.chunk_size;
    std::vector<Candidate> partial(chunks);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c = next++; c < chunks; c = next++)
            partial[c] = scan_chunk(grid, c * spec.chunk_size, std::min(total, (c + 1) * spec.chunk_size));
    };
    const int threads = std::clamp(parallelism, 1, static_cast<int>(std::max<std::size_t>(chunks, 1)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }

    Candidate best;
    for (const auto& c : partial) {
        best.evaluated += c.evaluated;
        best.feasible += c.feasible;
        if (c.feasible > 0 && best.better(c.value, c.index)) {
            best.value = c.value;
            best.index = c.index;
        }
    }
    if (best.feasible == 0)
        throw NoFeasiblePoint("no grid point satisfies the scenario constraints");

    GridResult r;
    r.value = best.value;
    r.evaluated = best.evaluated;
    r.feasible = best.feasible;
    std::vector<int> j(grid.dims());
    grid.decode_natural(best.index, j);
    r.w = grid.beamformers(j);
    for (std::size_t a = 0; a < grid.dims(); ++a)
        r.point.push_back(grid.axis(a).at(j[a]));
    for (std::size_t a = 0; a < grid.dims(); ++a)
        for (int step : {-1, 1}) {
            std::vector<int> n = j;
            n[a] += step;
            if (n[a] < 0 || n[a] >= grid.axis(a).points)
                continue;
            bool ok = false;
            const double v = grid.evaluate(n, ok);
            if (ok)
                r.cell_variation = std::max(r.cell_variation, std::abs(v - r.value));
        }
    return r;
}

double pf_lhs(const std::vector<double>& ee_star, const std::vector<double>& ee)
{
    if (ee_star.size() != ee.size())
        throw std::invalid_argument("pf_lhs: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < ee.size(); ++i)
        sum += (ee[i] - ee_star[i]) / ee_star[i];
    return sum;
}

PfReport pf_condition_check(const SystemScenario& s, const std::vector<double>& ee_star, int trials,
                            std::uint64_t rng_seed)
{
    s.validate();
    if (ee_star.size() != static_cast<std::size_t>(s.num_users))
        throw std::invalid_argument("pf_condition_check: one EE* per user required");
    for (double e : ee_star)
        if (!(e > 0.0))
            throw std::invalid_argument("pf_condition_check: EE* must be positive");

    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    PfReport rep;
    rep.max_lhs = -std::numeric_limits<double>::infinity();
    const int max_attempts = 1000 * std::max(trials, 1);
    const auto k_users = static_cast<std::size_t>(s.num_users);
    while (rep.samples < trials && rep.attempts < max_attempts) {
        ++rep.attempts;
        Beamformers w = Beamformers::zeros(s.num_users, s.num_antennas);
        for (std::size_t i = 0; i < k_users; ++i) {
            CVector d(s.num_antennas);
            if (s.num_antennas == 1) {
                d[0] = 1.0;
            } else {
                for (int n = 0; n < s.num_antennas; ++n)
                    d[n] = cplx(gauss(rng), gauss(rng));
                d.normalize();
            }
            w.vectors[i] = std::sqrt(s.p_available * unit(rng)) * d;
        }
        if (!check_feasibility(s, w, 0.0).ok())
            continue;
        ++rep.samples;
        const Metrics m = metrics(s, w);
        const double lhs = pf_lhs(ee_star, m.per_user_ee);
        if (lhs > rep.max_lhs) {
            rep.max_lhs = lhs;
            rep.worst_ee = m.per_user_ee;
        }
    }
    if (rep.samples == 0)
        rep.max_lhs = 0.0;
    rep.violated = rep.max_lhs > 1e-3;
    return rep;
}

} // namespace nomaee::oracle
