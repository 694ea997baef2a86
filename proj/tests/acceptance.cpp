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
// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
//   acceptance [--trials N] [--out DIR] [--only LIST]
//
// --trials overrides the 200 Monte Carlo trials of criteria 3 to 5 and is
// meant for quick local runs; the printed lines then say so. The lines are
// also written to DIR/summary.txt.

#include "nomaee/cone.hpp"
#include "nomaee/harness.hpp"
#include "nomaee/oracle.hpp"
#include "nomaee/sca.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace nomaee;
using sca::Design;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[2048];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Two-user single-antenna draw: distances, TX-SNR and fading are random.
SystemScenario random_pair(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> near(1.0, 5.0);
    std::uniform_real_distribution<double> far(5.5, 25.0);
    std::uniform_real_distribution<double> snr(0.0, 30.0);
    for (;;) {
        harness::ScenarioTemplate t;
        t.num_antennas = 1;
        t.num_users = 2;
        t.distances_m = {near(rng), far(rng)};
        const auto s = harness::build_scenario(t, rng(), snr(rng));
        try {
            (void)sca::initialize(s);
            return s;
        } catch (const sca::InfeasibleScenario&) {
        }
    }
}

SystemScenario random_single_user(std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SystemScenario s;
    s.num_antennas = 1 + static_cast<int>(u(rng) * 3.0);
    s.num_users = 1;
    CVector h(s.num_antennas);
    for (int n = 0; n < s.num_antennas; ++n)
        h[n] = cplx(g(rng), g(rng));
    s.channels = {h};
    s.noise_vars = {0.5 + 2.0 * u(rng)};
    s.p_available = 1.0 + 50.0 * u(rng);
    s.amp_efficiency = 0.3 + 0.7 * u(rng);
    s.power_loss_per_user = {0.5 + 5.0 * u(rng)};
    s.sinr_thresholds = {1e-3};
    return s;
}

// Feasible Table-I draw for trial t.
SystemScenario table1(int t, double snr_db)
{
    const harness::ScenarioTemplate tpl;
    for (int redraw = 0;; ++redraw) {
        const auto s = harness::build_scenario(tpl, harness::trial_seed(0xACCE55, t, redraw), snr_db);
        try {
            (void)sca::initialize(s);
            return s;
        } catch (const sca::InfeasibleScenario&) {
        }
    }
}

Outcome oracle_equivalence()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    int failures = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (int n = 0; n < 20; ++n) {
        const auto s = random_pair(rng);
        const auto grid = oracle::GridSpec::uniform(s, 400);
        for (auto [d, obj] : {std::pair{Design::Mmee, oracle::Objective::MinEE},
                              std::pair{Design::Pf, oracle::Objective::SumLogEE}}) {
            const auto g = oracle::grid_optimize(s, obj, grid);
            const auto r = sca::run_design(s, d);
            const double v = oracle::objective_value(metrics(s, r.w), obj);
            const double slack = std::max(0.02 * std::abs(g.value), g.cell_variation);
            worst = std::min(worst, (v - g.value + slack) / std::max(slack, 1e-300));
            if (v < g.value - slack) {
                ++failures;
                std::printf("  scenario %d %s: %.10g below grid %.10g - %.3g\n", n, sca::to_string(d), v, g.value,
                            slack);
            }
        }
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && secs < 300.0,
            fmt("40 runs on 20 K=2/N=1 draws, 400x400 grid; %d below grid; smallest margin %.3g of the slack; "
                "%.1f s (limit 300 s)",
                failures, worst, secs)};
}

Outcome sca_sanity()
{
    const auto t0 = Clock::now();
    int runs = 0;
    int passed = 0;
    int not_converged = 0;
    int non_monotone = 0;
    int infeasible = 0;
    int too_long = 0;
    std::map<std::string, int> endings;
    for (int t = 0; t < 100; ++t) {
        const auto s = table1(t, 5.0 * (t % 7));
        for (Design d : {Design::GeeMax, Design::Mmee, Design::Pf}) {
            ++runs;
            const auto r = sca::run_design(s, d);
            bool ok = r.converged;
            if (!r.converged) {
                ++not_converged;
                ++endings[std::string(sca::to_string(d)) + " " + sca::to_string(r.termination)];
            }
            bool mono = true;
            for (std::size_t k = 1; k < r.trace.size(); ++k) {
                const double prev = r.trace[k - 1];
                const double slack = d == Design::Pf ? 1e-3 : 1e-3 * std::abs(prev);
                mono = mono && r.trace[k] >= prev - slack;
            }
            if (!mono)
                ++non_monotone;
            const bool feas = check_feasibility(s, r.w, 1e-6).ok();
            if (!feas)
                ++infeasible;
            if (r.iterations > 100)
                ++too_long;
            ok = ok && mono && feas && r.iterations <= 100;
            passed += ok ? 1 : 0;
        }
    }
    const double secs = seconds_since(t0);
    const double rate = static_cast<double>(passed) / runs;
    std::string ends;
    for (const auto& [what, n] : endings)
        ends += fmt("%s%s x%d", ends.empty() ? " (" : ", ", what.c_str(), n);
    if (!ends.empty())
        ends += ")";
    return {rate >= 0.95 && secs < 900.0,
            fmt("%d/%d runs pass (%.1f%%, target 95%%); not converged %d%s, non-monotone %d, infeasible %d, "
                "over 100 iterations %d; %.1f s (limit 900 s)",
                passed, runs, 100.0 * rate, not_converged, ends.c_str(), non_monotone, infeasible, too_long, secs)};
}

double mean_at(const std::map<Design, std::vector<harness::SeriesPoint>>& series, Design d, double x)
{
    for (const auto& p : series.at(d))
        if (std::abs(p.x - x) < 1e-9)
            return p.mean;
    return std::numeric_limits<double>::quiet_NaN();
}

int count_at(const std::map<Design, std::vector<harness::SeriesPoint>>& series, Design d, double x)
{
    for (const auto& p : series.at(d))
        if (std::abs(p.x - x) < 1e-9)
            return p.count;
    return 0;
}

int count_status(const harness::SweepTable& table, const char* status)
{
    int n = 0;
    for (const auto& r : table.rows)
        n += r.summary() && r.status == status ? 1 : 0;
    return n;
}

Outcome fig2_trend(const harness::SweepTable& table, double secs, int trials)
{
    const auto ee = harness::summarize(table, harness::PlotMode::WeakestUserEE);
    const double mm = mean_at(ee, Design::Mmee, 20.0);
    const double pf = mean_at(ee, Design::Pf, 20.0);
    const double gm = mean_at(ee, Design::GeeMax, 20.0);
    const bool ok = mm >= pf && pf >= gm && mm >= 3.0 * gm && secs < 1800.0;
    return {ok, fmt("mean weakest-user EE at 20 dB over %d trials (%d feasible): MMEE %.2f, PF %.2f, GEE-Max %.2f "
                    "bits/J; MMEE/GEE-Max %.2f (need >= 3); sweep %.1f s (limit 1800 s)",
                    trials, count_at(ee, Design::Mmee, 20.0), mm, pf, gm, mm / gm, secs)};
}

Outcome fig3_trend(const harness::SweepTable& table)
{
    const auto gee = harness::summarize(table, harness::PlotMode::GEE);
    bool ok = true;
    std::string detail = "mean GEE (bits/J)";
    for (double snr : {10.0, 20.0, 30.0}) {
        const double gm = mean_at(gee, Design::GeeMax, snr);
        const double pf = mean_at(gee, Design::Pf, snr);
        const double mm = mean_at(gee, Design::Mmee, snr);
        ok = ok && gm >= 0.99 * pf && pf >= 0.99 * mm;
        detail += fmt("; %g dB: GEE-Max %.1f, PF %.1f, MMEE %.1f", snr, gm, pf, mm);
    }
    return {ok, detail + "; 1% slack per margin"};
}

Outcome fig4_trend(const harness::SweepTable& table, double secs, int trials)
{
    const auto ee = harness::summarize(table, harness::PlotMode::DistanceSweep);
    bool ok = true;
    std::string detail = fmt("%d trials at 20 dB", trials);
    for (Design d : {Design::GeeMax, Design::Mmee, Design::Pf}) {
        const auto& pts = ee.at(d);
        int inversions = 0;
        bool within = true;
        detail += std::string("; ") + sca::to_string(d) + ":";
        for (std::size_t j = 0; j < pts.size(); ++j) {
            detail += fmt(" %.1f", pts[j].mean);
            if (j > 0 && pts[j].mean > pts[j - 1].mean) {
                ++inversions;
                within = within && pts[j].mean <= 1.02 * pts[j - 1].mean;
            }
        }
        ok = ok && pts.size() == 5 && (inversions == 0 || (inversions == 1 && within));
        detail += fmt(" (%d inversions)", inversions);
    }
    return {ok, detail + fmt("; sweep %.1f s", secs)};
}

Outcome pf_condition()
{
    std::mt19937_64 rng(606);
    double worst = -std::numeric_limits<double>::infinity();
    int violated = 0;
    for (int n = 0; n < 20; ++n) {
        const auto s = random_pair(rng);
        const auto r = sca::run_design(s, Design::Pf);
        const auto star = metrics(s, r.w).per_user_ee;
        const auto rep = oracle::pf_condition_check(s, star, 10000, 7000 + static_cast<std::uint64_t>(n));
        worst = std::max(worst, rep.max_lhs);
        if (rep.max_lhs > 1e-3) {
            ++violated;
            std::printf("  scenario %d: max lhs %.4g\n", n, rep.max_lhs);
        }
    }
    return {violated == 0,
            fmt("20 K=2/N=1 draws, 10^4 feasible alternatives each; largest LHS %.3g (limit 1e-3), %d violations",
                worst, violated)};
}

Outcome linearisations()
{
    std::mt19937_64 rng(707);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> scale(-3.0, 3.0);

    const cone::ComplexAffineForm zvar{cone::AffineForm::variable(0), cone::AffineForm::variable(1)};
    double taylor_worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 100000; ++k) {
        const double a = std::pow(10.0, scale(rng));
        const double b = std::pow(10.0, scale(rng));
        const cplx zr(a * g(rng), a * g(rng));
        const Eigen::Vector2d z(b * g(rng), b * g(rng));
        const double lb = sca::taylor_abs2_lb(zr, zvar).evaluate(z);
        const double size = std::max({1.0, z.squaredNorm(), std::norm(zr)});
        taylor_worst = std::max(taylor_worst, (lb - z.squaredNorm()) / size);
    }
    const bool taylor_ok = taylor_worst <= 1e-12;

    // rate-ladder and EE-floor linearisations equal the functions they replace at the expansion point
    double tangency = 0.0;
    for (int t = 0; t < 50; ++t) {
        const auto s = table1(t, 5.0 * (t % 7));
        for (Design d : {Design::Mmee, Design::Pf}) {
            sca::ScaState st = sca::initialize(s);
            sca::update_slacks(s, st, d);
            const auto sp = d == Design::Mmee ? sca::build_mmee_subproblem(s, st) : sca::build_pf_subproblem(s, st);
            const auto& x = sp.expansion_point;
            const auto& l = sp.layout;
            for (int i = 0; i < s.num_users; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                const sca::FloorVar floor =
                    d == Design::Mmee ? sca::FloorVar{l.alpha, st.alpha} : sca::FloorVar{l.mu + i, st.mu[ui]};
                cone::ProgramBuilder b;
                b.add_variables(l.count);
                sca::add_ee_floor(b, l, s, st, floor, i);
                const auto& blocks = b.program().blocks;
                const double theta0 = d == Design::Mmee ? st.alpha : st.mu[ui];
                const double e_true = st.delta[ui] - theta0 * st.beta[ui] * st.beta[ui];
                tangency = std::max(tangency, std::abs(blocks.back().rows[0].evaluate(x) - e_true) /
                                                  std::max(1.0, st.delta[ui]));
                for (int k = 0; k <= i; ++k) {
                    const auto uk = static_cast<std::size_t>(k);
                    const auto& row = blocks[2 + 2 * uk + 1].rows[0];
                    const double self = std::abs(s.channels[uk].dot(st.w.vectors[ui]));
                    const double d_true = self - std::sqrt(st.tau[ui] - 1.0) * st.rho[ui][uk];
                    tangency = std::max(tangency, std::abs(row.evaluate(x) - d_true) / std::max(1.0, self));
                }
            }
        }
    }
    const bool tangency_ok = tangency <= 1e-10;

    // every cut of the fallback encoding lies below 2^delta
    double cut_worst = -std::numeric_limits<double>::infinity();
    std::uniform_real_distribution<double> lo_d(-5.0, 5.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 10000; ++k) {
        cone::BackendCapabilities caps;
        caps.has_exp_cone = false;
        cone::ProgramBuilder b(caps);
        const int delta = b.add_variable();
        const int tau = b.add_variable();
        const double lo = lo_d(rng);
        const double hi = lo + 0.1 + 15.0 * unit(rng);
        cone::encode_exp2(b, delta, tau, lo, hi);
        Eigen::VectorXd x(2);
        x[0] = lo + (hi - lo) * unit(rng);
        x[1] = std::exp2(x[0]);
        cut_worst = std::max(cut_worst, cone::max_violation(b.program(), x) / std::max(1.0, x[1]));
        const double gpt = lo + (hi - lo) * unit(rng);
        cut_worst = std::max(cut_worst, (cone::exp2_tangent(gpt, x[0]) - x[1]) / std::max(1.0, x[1]));
    }
    const bool cuts_ok = cut_worst <= 1e-12;

    return {taylor_ok && tangency_ok && cuts_ok,
            fmt("Taylor bound on 10^5 pairs: worst (lb - |z|^2) %.3g (limit 1e-12); rate and EE-floor tangency on 100 "
                "programs: %.3g (limit 1e-10); fallback cuts on 10^4 samples: worst excess %.3g",
                taylor_worst, tangency, cut_worst)};
}

Outcome single_user()
{
    std::mt19937_64 rng(808);
    double worst = 0.0;
    for (int n = 0; n < 20; ++n) {
        const auto s = random_single_user(rng);
        const double mm = sca::run_design(s, Design::Mmee).metrics.per_user_ee[0];
        const double pf = sca::run_design(s, Design::Pf).metrics.per_user_ee[0];
        const double gm = sca::run_design(s, Design::GeeMax).metrics.per_user_ee[0];
        const double hi = std::max({mm, pf, gm});
        const double lo = std::min({mm, pf, gm});
        worst = std::max(worst, (hi - lo) / hi);
    }
    return {worst <= 1e-3, fmt("20 single-user draws: largest relative EE spread %.3g (limit 1e-3)", worst)};
}

} // namespace

int main(int argc, char** argv)
{
    int trials = 200;
    std::string out = "acceptance_results";
    std::set<int> only;
    for (int a = 1; a < argc; ++a) {
        const std::string arg = argv[a];
        if (arg == "--trials" && a + 1 < argc) {
            trials = std::stoi(argv[++a]);
        } else if (arg == "--out" && a + 1 < argc) {
            out = argv[++a];
        } else if (arg == "--only" && a + 1 < argc) {
            std::stringstream ss(argv[++a]);
            std::string item;
            while (std::getline(ss, item, ','))
                only.insert(std::stoi(item));
        } else {
            std::fprintf(stderr, "usage: acceptance [--trials N] [--out DIR] [--only LIST]\n");
            return 2;
        }
    }
    const bool reduced = trials != 200;
    auto wanted = [&](int c) { return only.empty() || only.count(c) > 0; };

    std::vector<std::pair<int, std::string>> names{
        {1, "oracle equivalence"}, {2, "SCA sanity suite"},     {3, "weakest-user EE trend"},
        {4, "GEE trend"},          {5, "distance trend"},       {6, "proportional-fairness condition"},
        {7, "linearisation suite"}, {8, "single-user equivalence"}};

    std::map<int, std::string> results;
    std::map<int, bool> passed;
    auto record = [&](int c, Outcome o) {
        results[c] = fmt("%s [%d] %s: %s%s", o.pass ? "PASS" : "FAIL", c, names[static_cast<std::size_t>(c - 1)].second.c_str(),
                         o.detail.c_str(), reduced && c >= 3 && c <= 5 ? " (REDUCED TRIALS)" : "");
        passed[c] = o.pass;
        std::printf("%s\n", results[c].c_str());
        std::fflush(stdout);
    };
    auto guarded = [&](int c, const std::function<Outcome()>& f) {
        if (!wanted(c))
            return;
        try {
            record(c, f());
        } catch (const std::exception& e) {
            record(c, {false, std::string("exception: ") + e.what()});
        }
    };

    guarded(7, linearisations);
    guarded(8, single_user);
    guarded(1, oracle_equivalence);
    guarded(6, pf_condition);
    guarded(2, sca_sanity);

    if (wanted(3) || wanted(4)) {
        harness::SweepConfig cfg;
        cfg.trials = trials;
        cfg.tx_snr_db = {10.0, 20.0, 30.0};
        cfg.output_dir = out + "/snr_sweep";
        std::printf("  running the TX-SNR sweep (%d trials x 3 points x 3 designs)\n", trials);
        std::fflush(stdout);
        try {
            const auto t0 = Clock::now();
            const auto table = harness::run_sweep(cfg);
            const double secs = seconds_since(t0);
            std::printf("  %d infeasible trials, %d solver failures\n", count_status(table, "infeasible"),
                        count_status(table, "solver_failure"));
            for (auto mode : {harness::PlotMode::WeakestUserEE, harness::PlotMode::GEE})
                harness::emit_plot_data(table, mode, cfg.output_dir);
            guarded(3, [&] { return fig2_trend(table, secs, trials); });
            guarded(4, [&] { return fig3_trend(table); });
        } catch (const std::exception& e) {
            guarded(3, [&]() -> Outcome { return {false, std::string("exception: ") + e.what()}; });
            guarded(4, [&]() -> Outcome { return {false, std::string("exception: ") + e.what()}; });
        }
    }
    if (wanted(5)) {
        harness::SweepConfig cfg;
        cfg.trials = trials;
        cfg.tx_snr_db = {20.0};
        cfg.d3_sweep_m = std::vector<double>{5.0, 10.0, 15.0, 20.0, 25.0};
        cfg.output_dir = out + "/distance_sweep";
        std::printf("  running the distance sweep (%d trials x 5 distances x 3 designs)\n", trials);
        std::fflush(stdout);
        guarded(5, [&] {
            const auto t0 = Clock::now();
            const auto table = harness::run_sweep(cfg);
            const double secs = seconds_since(t0);
            harness::emit_plot_data(table, harness::PlotMode::DistanceSweep, cfg.output_dir);
            return fig4_trend(table, secs, trials);
        });
    }

    int failed = 0;
    for (const auto& [c, ok] : passed)
        failed += ok ? 0 : 1;
    const std::string total = fmt("%s: %zu criteria run, %d failed", failed == 0 ? "PASS" : "FAIL", results.size(), failed);
    std::printf("%s\n", total.c_str());

    std::filesystem::create_directories(out);
    std::ofstream summary(std::filesystem::path(out) / "summary.txt");
    for (const auto& [c, line] : results)
        summary << line << '\n';
    summary << total << '\n';
    return failed == 0 ? 0 : 1;
}
