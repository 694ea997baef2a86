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

#ifndef NOMAEE_HARNESS_HPP
#define NOMAEE_HARNESS_HPP

#include "nomaee/model.hpp"
#include "nomaee/sca.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nomaee::harness {

/// Physical and algorithmic defaults of the reference simulation setup.
struct ScenarioTemplate
{
    int num_antennas = 3;
    int num_users = 3;
    std::vector<double> distances_m{1.0, 5.5, 25.0};
    double path_loss_exp = 2.0;
    /// Per-user values; a single entry applies to every user.
    std::vector<double> noise_vars{2.0};
    std::vector<double> sinr_thresholds{1e-3};
    std::vector<double> power_loss_dbm{45.0};
    double amp_efficiency = 0.65;
    double bandwidth_hz = 1e6;
    Fading fading = Fading::Rayleigh;

    void validate() const;
};

struct SweepConfig
{
    ScenarioTemplate scenario;
    double eps = 1e-3;
    int max_outer = 100;
    std::vector<sca::Design> designs{sca::Design::GeeMax, sca::Design::Mmee, sca::Design::Pf};
    std::vector<double> tx_snr_db{0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
    /// When set, the last user's distance sweeps these values.
    std::optional<std::vector<double>> d3_sweep_m;
    int trials = 200;
    std::uint64_t base_seed = 1;
    std::string output_dir = "results";
    int parallelism = 1;
    /// When false, solve_ms is written as 0 so repeated runs are byte-identical.
    bool timing = true;
    /// Channel redraws for a trial whose minimum-power start is infeasible.
    int resample_limit = 10;
    /// When non-empty, every subproblem is written below this directory.
    std::string dump_dir;

    void validate() const;
};

class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

SweepConfig parse_config(std::string_view toml_text, std::string_view source = "<string>");
SweepConfig load_config(const std::string& path);
/// TOML text of the reference defaults; parse_config of it returns SweepConfig{}.
std::string default_config_toml();

/// "a:b:step" (inclusive) or "x,y,z".
std::vector<double> parse_value_list(std::string_view text);

std::uint64_t splitmix64(std::uint64_t x);
/// Seed of trial t: base ^ splitmix64(t). Redraw r > 0 uses splitmix64(seed + r).
std::uint64_t trial_seed(std::uint64_t base, int trial, int redraw = 0);

/// FNV-1a over the bytes of every channel coefficient.
std::uint64_t channel_hash(const std::vector<CVector>& channels);

/// Ordered scenario for one channel draw; d3 overrides the last user's distance.
/// `permutation`, when given, receives the configuration index of each ordered user.
SystemScenario build_scenario(const ScenarioTemplate& t, std::uint64_t seed, double tx_snr_db,
                              std::optional<double> d3_m = std::nullopt,
                              std::vector<std::size_t>* permutation = nullptr);

struct SweepRow
{
    sca::Design design = sca::Design::Mmee;
    int trial = 0;
    std::uint64_t seed = 0;
    double tx_snr_db = 0.0;
    double d3_m = 0.0;
    /// 1-based user label in configuration order; 0 is the summary row.
    int user = 0;
    double rate_bpshz = 0.0;
    double power_w = 0.0;
    double ee_bits_per_joule = 0.0;
    double gee = 0.0;
    int iterations = 0;
    std::string status;
    double solve_ms = 0.0;
    std::uint64_t channel_hash = 0;

    bool summary() const { return user == 0; }
    bool feasible() const { return status != "infeasible"; }
};

struct SweepTable
{
    std::vector<SweepRow> rows;
    int num_users = 0;
};

struct SweepFiles
{
    std::string csv;
    std::string channels;
};

/// Runs every (trial, TX-SNR, d3, design) combination. Designs within a trial
/// share one channel draw. Writes CSV files under output_dir when it is non-empty.
SweepTable run_sweep(const SweepConfig& cfg, SweepFiles* files = nullptr);

/// Canonical order: design, d3, TX-SNR, trial, user (summary last).
void sort_rows(std::vector<SweepRow>& rows, const std::vector<sca::Design>& design_order);

extern const char* const kCsvHeader;
void write_csv(std::ostream& os, const SweepTable& table, bool with_comment = true);

enum class PlotMode
{
    WeakestUserEE,
    GEE,
    DistanceSweep
};

const char* to_string(PlotMode mode);

class EmptySelection : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct SeriesPoint
{
    double x = 0.0;
    double mean = 0.0;
    double stderr_ = 0.0;
    int count = 0;
};

/// Mean and standard error over feasible summary rows, keyed by TX-SNR
/// (WeakestUserEE, GEE) or by d3 (DistanceSweep).
std::map<sca::Design, std::vector<SeriesPoint>> summarize(const SweepTable& table, PlotMode mode,
                                                          std::optional<sca::Design> only = std::nullopt);

/// One whitespace-delimited file per design: "<mode>_<design>.dat". Returns the paths.
std::vector<std::string> emit_plot_data(const SweepTable& table, PlotMode mode, const std::string& out_dir,
                                        std::optional<sca::Design> only = std::nullopt);

} // namespace nomaee::harness

#endif // NOMAEE_HARNESS_HPP
