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

#ifndef NOMAEE_ORACLE_HPP
#define NOMAEE_ORACLE_HPP

#include "nomaee/model.hpp"

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace nomaee::oracle {

enum class Objective
{
    MinEE,
    SumLogEE,
    GEE
};

const char* to_string(Objective objective);
Objective parse_objective(std::string_view name);

/// Exact objective value; SumLogEE is -inf when some EE_i is zero.
double objective_value(const Metrics& m, Objective objective);

/// Inclusive uniform axis lo, lo + h, ..., hi with `points` values.
struct Axis
{
    double lo = 0.0;
    double hi = 0.0;
    int points = 2;

    double at(int j) const;
};

/// Exhaustive grid over per-user powers and, for two real antennas, per-user
/// beam angles: w_i = sqrt(p_i) [cos a_i, sin a_i].
struct GridSpec
{
    std::vector<Axis> power;
    /// Empty for N = 1.
    std::vector<Axis> angle;
    /// Visiting order of the axes (powers first, then angles); empty means natural.
    std::vector<int> axis_order;
    std::size_t chunk_size = 1u << 15;

    /// Powers on [0, P_ava]; angles on [0, pi] when the scenario has two antennas.
    static GridSpec uniform(const SystemScenario& s, int power_points, int angle_points = 0);

    /// Same ranges with 2 * points - 1 values per axis, a superset of this grid.
    GridSpec refined() const;

    std::size_t size() const;
    void validate(const SystemScenario& s) const;
};

struct GridResult
{
    Beamformers w;
    double value = 0.0;
    /// Axis coordinates of the maximiser (powers then angles).
    std::vector<double> point;
    /// Largest |objective change| to a feasible neighbouring grid point.
    double cell_variation = 0.0;
    std::size_t evaluated = 0;
    std::size_t feasible = 0;
};

class NoFeasiblePoint : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Brute-force maximiser over the grid, keeping only points that pass
/// check_feasibility at zero tolerance. Ties go to the smallest natural index,
/// so the result does not depend on axis order, chunking or parallelism.
GridResult grid_optimize(const SystemScenario& s, Objective objective, const GridSpec& grid, int parallelism = 1);

/// sum_i (EE_i - EE_i*) / EE_i*.
double pf_lhs(const std::vector<double>& ee_star, const std::vector<double>& ee);

struct PfReport
{
    double max_lhs = 0.0;
    bool violated = false;
    /// Feasible alternatives actually evaluated.
    int samples = 0;
    int attempts = 0;
    std::vector<double> worst_ee;
};

/// Samples feasible beamformer sets (random powers in [0, P_ava] and random
/// directions, rejection on check_feasibility) and reports the largest
/// proportional-fairness left-hand side. Violated when max_lhs > 1e-3.
PfReport pf_condition_check(const SystemScenario& s, const std::vector<double>& ee_star, int trials,
                            std::uint64_t rng_seed);

} // namespace nomaee::oracle

#endif // NOMAEE_ORACLE_HPP
