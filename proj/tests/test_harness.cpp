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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nomaee/harness.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace nomaee;
using namespace nomaee::harness;
namespace fs = std::filesystem;

namespace {

SweepConfig small_config()
{
    SweepConfig cfg;
    cfg.trials = 3;
    cfg.tx_snr_db = {10.0};
    cfg.output_dir.clear();
    cfg.timing = false;
    return cfg;
}

std::string read_file(const fs::path& p)
{
    std::ifstream is(p);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::string without_comment(const std::string& text)
{
    return text.rfind('#', 0) == 0 ? text.substr(text.find('\n') + 1) : text;
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("nomaee_test_harness_" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("default TOML reproduces the built-in defaults")
{
    const SweepConfig a = parse_config(default_config_toml());
    const SweepConfig b;
    CHECK(a.scenario.num_antennas == b.scenario.num_antennas);
    CHECK(a.scenario.num_users == b.scenario.num_users);
    CHECK(a.scenario.distances_m == b.scenario.distances_m);
    CHECK(a.scenario.noise_vars == b.scenario.noise_vars);
    CHECK(a.scenario.sinr_thresholds == b.scenario.sinr_thresholds);
    CHECK(a.scenario.power_loss_dbm == b.scenario.power_loss_dbm);
    CHECK(a.scenario.amp_efficiency == b.scenario.amp_efficiency);
    CHECK(a.scenario.bandwidth_hz == b.scenario.bandwidth_hz);
    CHECK(a.eps == b.eps);
    CHECK(a.max_outer == b.max_outer);
    CHECK(a.designs == b.designs);
    CHECK(a.tx_snr_db == b.tx_snr_db);
    CHECK_FALSE(a.d3_sweep_m.has_value());
    CHECK(a.trials == b.trials);
    CHECK(a.base_seed == b.base_seed);
    CHECK(a.output_dir == b.output_dir);
    CHECK(a.parallelism == b.parallelism);
    CHECK(a.timing == b.timing);
    CHECK(a.resample_limit == b.resample_limit);
}

TEST_CASE("config parsing accepts per-user arrays and rejects mistakes")
{
    const auto cfg = parse_config(R"(
[scenario]
users = 2
antennas = 2
distances_m = [2.0, 8.0]
noise_variance_w = [1.0, 3.0]
power_loss_dbm = 30.0
[sweep]
designs = ["pf"]
d3_sweep_m = [4.0, 6.0]
)");
    CHECK(cfg.scenario.noise_vars == std::vector<double>{1.0, 3.0});
    CHECK(cfg.designs == std::vector<sca::Design>{sca::Design::Pf});
    REQUIRE(cfg.d3_sweep_m.has_value());
    CHECK(cfg.d3_sweep_m->size() == 2);

    CHECK_THROWS_AS(parse_config("[scenario]\nuser = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[scenario]\nusers = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[sweep]\ndesigns = [\"best\"]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[sweep]\ntrials = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[scenario\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[algorithm]\nepsilon = \"small\"\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/nomaee.toml"), IoError);
}

TEST_CASE("value lists")
{
    CHECK(parse_value_list("0:30:5") == std::vector<double>{0, 5, 10, 15, 20, 25, 30});
    CHECK(parse_value_list("5,10, 25") == std::vector<double>{5, 10, 25});
    CHECK(parse_value_list("0:1:0.25").size() == 5);
    CHECK(parse_value_list("7") == std::vector<double>{7});
    CHECK_THROWS_AS(parse_value_list("1:0:1"), ConfigError);
    CHECK_THROWS_AS(parse_value_list("0:5"), ConfigError);
    CHECK_THROWS_AS(parse_value_list("a,b"), ConfigError);
    CHECK_THROWS_AS(parse_value_list("1,,2"), ConfigError);
}

TEST_CASE("scenario construction converts units and orders users")
{
    const ScenarioTemplate t;
    std::vector<std::size_t> perm;
    const auto s = build_scenario(t, 42, 20.0, std::nullopt, &perm);
    CHECK(s.is_ordered());
    CHECK(s.power_loss_per_user[0] == doctest::Approx(31.6228).epsilon(1e-5));
    CHECK(s.p_available == doctest::Approx(200.0));
    CHECK(s.bandwidth_hz == 1e6);
    CHECK(std::set<std::size_t>(perm.begin(), perm.end()).size() == 3);

    const auto far = build_scenario(t, 42, 20.0, 5.0);
    CHECK(channel_hash(far.channels) != channel_hash(s.channels));
    CHECK(channel_hash(build_scenario(t, 42, 20.0).channels) == channel_hash(s.channels));
    CHECK(trial_seed(1, 0) != trial_seed(1, 1));
    CHECK(trial_seed(1, 2, 1) != trial_seed(1, 2));
}

TEST_CASE("sweep emits one row per user plus a summary")
{
    const auto cfg = small_config();
    const auto table = run_sweep(cfg);
    const std::size_t per_design = static_cast<std::size_t>(cfg.trials) * (cfg.scenario.num_users + 1);
    REQUIRE(table.rows.size() == cfg.designs.size() * per_design);

    std::map<std::pair<int, int>, std::set<std::uint64_t>> hashes;
    for (const auto& r : table.rows) {
        if (!r.summary())
            CHECK(r.user <= cfg.scenario.num_users);
        if (r.summary() && r.feasible()) {
            CHECK(r.gee > 0.0);
            CHECK(r.ee_bits_per_joule > 0.0);
        }
        CHECK(r.solve_ms == 0.0);
        hashes[{r.trial, static_cast<int>(r.tx_snr_db)}].insert(r.channel_hash);
    }
    // every design of a trial sees the same channel draw
    for (const auto& [key, hs] : hashes)
        CHECK(hs.size() == 1);
    CHECK(table.rows.front().design == cfg.designs.front());

    std::set<int> labels;
    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.scenario.num_users) + 1; ++i)
        labels.insert(table.rows[i].user);
    CHECK(labels == std::set<int>{0, 1, 2, 3});
}

TEST_CASE("sweep output is deterministic and independent of parallelism")
{
    auto cfg = small_config();
    cfg.trials = 2;
    cfg.designs = {sca::Design::Mmee, sca::Design::GeeMax};
    const auto d1 = scratch("det1");
    const auto d2 = scratch("det2");
    cfg.output_dir = d1.string();
    SweepFiles f1;
    run_sweep(cfg, &f1);
    cfg.output_dir = d2.string();
    cfg.parallelism = 3;
    SweepFiles f2;
    run_sweep(cfg, &f2);

    const auto a = read_file(f1.csv);
    const auto b = read_file(f2.csv);
    CHECK(a.rfind("# ", 0) == 0);
    CHECK(without_comment(a) == without_comment(b));
    CHECK(without_comment(a).rfind(kCsvHeader, 0) == 0);
    CHECK(read_file(f1.channels) == read_file(f2.channels));
    CHECK_FALSE(fs::exists(d1 / "sweep.csv.partial"));
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("plot data for the distance sweep")
{
    auto cfg = small_config();
    cfg.trials = 1;
    cfg.tx_snr_db = {20.0};
    cfg.d3_sweep_m = std::vector<double>{5, 10, 15, 20, 25};
    cfg.designs = {sca::Design::Mmee};
    const auto table = run_sweep(cfg);
    const auto dir = scratch("plot");
    const auto paths = emit_plot_data(table, PlotMode::DistanceSweep, dir.string());
    REQUIRE(paths.size() == 1);
    CHECK(fs::path(paths[0]).filename() == "distance_sweep_mmee.dat");
    std::ifstream is(paths[0]);
    std::string line;
    int rows = 0;
    while (std::getline(is, line))
        if (!line.empty() && line[0] != '#')
            ++rows;
    CHECK(rows == 5);

    CHECK_THROWS_AS(emit_plot_data(table, PlotMode::GEE, dir.string(), sca::Design::Pf), EmptySelection);
    CHECK_THROWS_AS(summarize(table, PlotMode::GEE), std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("summary statistics")
{
    SweepTable t;
    for (double v : {1.0, 2.0, 3.0}) {
        SweepRow r;
        r.design = sca::Design::Pf;
        r.tx_snr_db = 10.0;
        r.ee_bits_per_joule = v;
        r.gee = 2.0 * v;
        r.status = "tolerance";
        t.rows.push_back(r);
    }
    SweepRow bad = t.rows.front();
    bad.status = "infeasible";
    bad.ee_bits_per_joule = 100.0;
    t.rows.push_back(bad);
    const auto s = summarize(t, PlotMode::WeakestUserEE);
    REQUIRE(s.at(sca::Design::Pf).size() == 1);
    const auto p = s.at(sca::Design::Pf)[0];
    CHECK(p.count == 3);
    CHECK(p.mean == doctest::Approx(2.0));
    CHECK(p.stderr_ == doctest::Approx(1.0 / std::sqrt(3.0)));
    CHECK(summarize(t, PlotMode::GEE).at(sca::Design::Pf)[0].mean == doctest::Approx(4.0));
}
