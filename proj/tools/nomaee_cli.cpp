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
//
// nomaee: energy-efficiency beamforming designs for downlink MISO NOMA.
//
//   nomaee init-config [--out FILE]
//   nomaee run    [--config FILE] [--design D] [--snr X] [--seed N] ...
//   nomaee sweep  [--config FILE] [--design D] [--snr LIST] [--trials N] ...
//   nomaee oracle [--config FILE] [--design D] [--users K] [--points P] ...
//
// Exit codes: 0 success, 1 usage, 2 IO, 3 internal.

#include "nomaee/harness.hpp"
#include "nomaee/oracle.hpp"
#include "nomaee/sca.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace nomaee;

namespace {

enum Exit
{
    kOk = 0,
    kUsage = 1,
    kIo = 2,
    kInternal = 3
};

struct Common
{
    std::string config;
    std::string design = "all";
    std::string snr;
    int trials = 0;
    std::int64_t seed = -1;
    std::string d3_sweep;
    std::string out;
    int parallelism = 0;
    bool dump = false;
    std::string dump_dir = "subproblems";
    bool no_timing = false;
};

std::vector<sca::Design> designs_of(const std::string& name)
{
    if (name == "all")
        return {sca::Design::GeeMax, sca::Design::Mmee, sca::Design::Pf};
    try {
        return {sca::parse_design(name)};
    } catch (const std::invalid_argument& e) {
        throw harness::ConfigError(e.what());
    }
}

// Config file first, then command-line overrides.
harness::SweepConfig resolve(const Common& c)
{
    harness::SweepConfig cfg = c.config.empty() ? harness::SweepConfig{} : harness::load_config(c.config);
    if (c.design != "all" || c.config.empty())
        cfg.designs = designs_of(c.design);
    if (!c.snr.empty())
        cfg.tx_snr_db = harness::parse_value_list(c.snr);
    if (c.trials > 0)
        cfg.trials = c.trials;
    if (c.seed >= 0)
        cfg.base_seed = static_cast<std::uint64_t>(c.seed);
    if (!c.d3_sweep.empty())
        cfg.d3_sweep_m = harness::parse_value_list(c.d3_sweep);
    if (!c.out.empty())
        cfg.output_dir = c.out;
    if (c.parallelism > 0)
        cfg.parallelism = c.parallelism;
    if (c.dump)
        cfg.dump_dir = c.dump_dir;
    if (c.no_timing)
        cfg.timing = false;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* app, Common& c, bool sweep_flags)
{
    app->add_option("--config", c.config, "TOML configuration file");
    app->add_option("--design", c.design, "gee-max, mmee, pf or all")
        ->check(CLI::IsMember({"gee-max", "mmee", "pf", "all"}));
    app->add_option("--snr", c.snr, "TX-SNR in dB: \"a:b:step\" or a comma list");
    app->add_option("--seed", c.seed, "base seed")->check(CLI::NonNegativeNumber);
    app->add_flag("--dump-subproblems", c.dump, "write every convex subproblem as text");
    app->add_option("--dump-dir", c.dump_dir, "directory for --dump-subproblems")->capture_default_str();
    if (sweep_flags) {
        app->add_option("--trials", c.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
        app->add_option("--d3-sweep", c.d3_sweep, "distances of the last user in m (comma list)");
        app->add_option("--out", c.out, "output directory");
        app->add_option("--parallelism", c.parallelism, "concurrent trials")->check(CLI::PositiveNumber);
        app->add_flag("--no-timing", c.no_timing, "write solve_ms as 0 for reproducible files");
    }
}

std::optional<double> last_distance(const harness::SweepConfig& cfg)
{
    if (cfg.d3_sweep_m)
        return cfg.d3_sweep_m->front();
    return std::nullopt;
}

void print_result(const SystemScenario& s, const std::vector<std::size_t>& perm, const sca::DesignResult& r)
{
    std::printf("%s: %s after %d iterations\n", sca::to_string(r.design), sca::to_string(r.termination), r.iterations);
    if (!r.message.empty())
        std::printf("  %s\n", r.message.c_str());
    std::printf("  %-5s %12s %12s %12s %14s\n", "user", "sinr", "rate b/s/Hz", "power W", "EE bits/J");
    for (std::size_t i = 0; i < perm.size(); ++i)
        std::printf("  %-5zu %12.6g %12.6g %12.6g %14.6g\n", perm[i] + 1, r.metrics.per_user_sinr[i],
                    r.metrics.per_user_rate[i] / s.bandwidth_hz, r.metrics.per_user_power[i],
                    r.metrics.per_user_ee[i]);
    std::printf("  min EE %.6g bits/J, GEE %.6g bits/J, total power %.6g W\n", r.metrics.min_ee(), r.metrics.gee,
                r.w.total_power());
}

int cmd_init(const std::string& out)
{
    const std::string text = harness::default_config_toml();
    if (out == "-") {
        std::cout << text;
        return kOk;
    }
    std::ofstream os(out);
    os << text;
    if (!os)
        throw harness::IoError("cannot write '" + out + "'");
    std::printf("wrote %s\n", out.c_str());
    return kOk;
}

int cmd_run(const Common& c)
{
    const auto cfg = resolve(c);
    std::vector<std::size_t> perm;
    const std::uint64_t seed = harness::trial_seed(cfg.base_seed, 0);
    const auto s = harness::build_scenario(cfg.scenario, seed, cfg.tx_snr_db.front(), last_distance(cfg), &perm);
    std::printf("seed %llu, TX-SNR %g dB, P_ava %g W, channel hash %016llx\n", static_cast<unsigned long long>(seed),
                cfg.tx_snr_db.front(), s.p_available,
                static_cast<unsigned long long>(harness::channel_hash(s.channels)));
    sca::ScaOptions opts;
    opts.eps = cfg.eps;
    opts.max_outer = cfg.max_outer;
    opts.dump_dir = cfg.dump_dir;
    for (sca::Design d : cfg.designs)
        print_result(s, perm, sca::run_design(s, d, opts));
    return kOk;
}

int cmd_sweep(const Common& c)
{
    auto cfg = resolve(c);
    if (cfg.output_dir.empty())
        cfg.output_dir = "results";
    harness::SweepFiles files;
    const auto table = harness::run_sweep(cfg, &files);
    std::printf("wrote %s (%zu rows) and %s\n", files.csv.c_str(), table.rows.size(), files.channels.c_str());

    std::vector<harness::PlotMode> modes;
    const bool distance = cfg.d3_sweep_m && cfg.d3_sweep_m->size() > 1;
    if (!distance)
        modes = {harness::PlotMode::WeakestUserEE, harness::PlotMode::GEE};
    else if (cfg.tx_snr_db.size() == 1)
        modes = {harness::PlotMode::DistanceSweep};
    else
        std::fprintf(stderr, "warning: no plot data for a distance sweep over several TX-SNR points\n");
    for (auto mode : modes) {
        try {
            for (const auto& p : harness::emit_plot_data(table, mode, cfg.output_dir))
                std::printf("wrote %s\n", p.c_str());
        } catch (const harness::EmptySelection& e) {
            std::fprintf(stderr, "warning: %s\n", e.what());
        }
    }
    return kOk;
}

oracle::Objective objective_for(sca::Design d)
{
    switch (d) {
    case sca::Design::Mmee: return oracle::Objective::MinEE;
    case sca::Design::Pf: return oracle::Objective::SumLogEE;
    case sca::Design::GeeMax: return oracle::Objective::GEE;
    }
    return oracle::Objective::MinEE;
}

int cmd_oracle(const Common& c, int users, int antennas, int points, int angle_points, int threads)
{
    auto cfg = resolve(c);
    auto& t = cfg.scenario;
    if (users > 0 && users != t.num_users) {
        t.num_users = users;
        t.distances_m.resize(static_cast<std::size_t>(users), t.distances_m.back());
    }
    t.num_antennas = antennas;
    cfg.validate();
    std::vector<std::size_t> perm;
    auto s = harness::build_scenario(t, harness::trial_seed(cfg.base_seed, 0), cfg.tx_snr_db.front(),
                                     last_distance(cfg), &perm);
    if (antennas == 2) {
        // the two-antenna grid parameterises real beamformers, so keep the real part of the draw
        for (auto& h : s.channels)
            h = h.real().cast<cplx>();
        order_scenario(s);
    }
    sca::ScaOptions opts;
    opts.eps = cfg.eps;
    opts.max_outer = cfg.max_outer;
    opts.dump_dir = cfg.dump_dir;
    const auto grid = oracle::GridSpec::uniform(s, points, antennas == 2 ? angle_points : 0);
    std::printf("grid of %zu points, P_ava %g W\n", grid.size(), s.p_available);
    int rc = kOk;
    for (sca::Design d : cfg.designs) {
        const auto obj = objective_for(d);
        const auto g = oracle::grid_optimize(s, obj, grid, threads);
        const auto r = sca::run_design(s, d, opts);
        const double v = oracle::objective_value(metrics(s, r.w), obj);
        const double slack = std::max(0.02 * std::abs(g.value), g.cell_variation);
        const bool ok = v >= g.value - slack;
        std::printf("%s: %s %.8g, grid %.8g (cell variation %.3g), %s\n", sca::to_string(d), oracle::to_string(obj), v,
                    g.value, g.cell_variation, ok ? "agrees" : "below grid");
        if (!ok)
            rc = kInternal;
    }
    return rc;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Energy-efficiency beamforming designs for downlink MISO NOMA"};
    app.require_subcommand(1);

    std::string init_out = "nomaee.toml";
    auto* init = app.add_subcommand("init-config", "write the reference configuration as TOML");
    init->add_option("--out", init_out, "output file, - for stdout")->capture_default_str();

    Common run_opts;
    auto* run = app.add_subcommand("run", "solve one channel draw and print metrics");
    add_common(run, run_opts, false);
    run->add_option("--d3-sweep", run_opts.d3_sweep, "distance of the last user in m (first value is used)");

    Common sweep_opts;
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep, writes CSV and plot data");
    add_common(sweep, sweep_opts, true);

    Common oracle_opts;
    oracle_opts.snr = "10";
    int users = 2;
    int antennas = 1;
    int points = 200;
    int angle_points = 32;
    int threads = 1;
    auto* orc = app.add_subcommand("oracle", "compare a design with the grid-search optimum");
    add_common(orc, oracle_opts, false);
    orc->add_option("--users", users, "number of users (at most 3)")->capture_default_str()->check(CLI::Range(1, 3));
    orc->add_option("--antennas", antennas, "1 or 2")->capture_default_str()->check(CLI::Range(1, 2));
    orc->add_option("--points", points, "grid points per power axis")->capture_default_str()->check(CLI::Range(2, 100000));
    orc->add_option("--angle-points", angle_points, "grid points per angle axis")
        ->capture_default_str()
        ->check(CLI::Range(2, 10000));
    orc->add_option("--parallelism", threads, "grid worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    orc->add_option("--d3-sweep", oracle_opts.d3_sweep, "distance of the last user in m (first value is used)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*init)
            return cmd_init(init_out);
        if (*run)
            return cmd_run(run_opts);
        if (*sweep)
            return cmd_sweep(sweep_opts);
        if (*orc)
            return cmd_oracle(oracle_opts, users, antennas, points, angle_points, threads);
    } catch (const harness::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const harness::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kIo;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kInternal;
    }
    return kUsage;
}
