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

#include "nomaee/harness.hpp"

#include <toml.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace nomaee::harness {

namespace fs = std::filesystem;

void ScenarioTemplate::validate() const
{
    if (num_antennas < 1 || num_users < 1)
        throw ConfigError("scenario: antennas and users must be positive");
    if (distances_m.size() != static_cast<std::size_t>(num_users))
        throw ConfigError("scenario: need one distance per user");
    for (double d : distances_m)
        if (!(d > 0.0))
            throw ConfigError("scenario: distances must be positive");
    if (!(path_loss_exp >= 0.0))
        throw ConfigError("scenario: path-loss exponent must be nonnegative");
    auto per_user = [&](const std::vector<double>& v, const char* what, bool positive) {
        if (v.size() != 1 && v.size() != static_cast<std::size_t>(num_users))
            throw ConfigError(std::string("scenario: ") + what + " needs one value or one per user");
        for (double x : v)
            if (!std::isfinite(x) || (positive ? !(x > 0.0) : x < 0.0))
                throw ConfigError(std::string("scenario: ") + what + " out of range");
    };
    per_user(noise_vars, "noise_variance_w", true);
    per_user(sinr_thresholds, "sinr_threshold", false);
    if (power_loss_dbm.size() != 1 && power_loss_dbm.size() != static_cast<std::size_t>(num_users))
        throw ConfigError("scenario: power_loss_dbm needs one value or one per user");
    for (double x : power_loss_dbm)
        if (!std::isfinite(x))
            throw ConfigError("scenario: power_loss_dbm must be finite");
    if (!(amp_efficiency > 0.0 && amp_efficiency <= 1.0))
        throw ConfigError("scenario: amp_efficiency must lie in (0, 1]");
    if (!(bandwidth_hz > 0.0))
        throw ConfigError("scenario: bandwidth_hz must be positive");
}

void SweepConfig::validate() const
{
    scenario.validate();
    if (!(eps > 0.0))
        throw ConfigError("algorithm: epsilon must be positive");
    if (max_outer < 1)
        throw ConfigError("algorithm: max_outer must be positive");
    if (designs.empty())
        throw ConfigError("sweep: designs must not be empty");
    if (tx_snr_db.empty())
        throw ConfigError("sweep: tx_snr_db must not be empty");
    for (double v : tx_snr_db)
        if (!std::isfinite(v))
            throw ConfigError("sweep: tx_snr_db must be finite");
    if (d3_sweep_m) {
        if (d3_sweep_m->empty())
            throw ConfigError("sweep: d3_sweep_m must not be empty when given");
        for (double d : *d3_sweep_m)
            if (!(d > 0.0))
                throw ConfigError("sweep: d3_sweep_m values must be positive");
    }
    if (trials < 1)
        throw ConfigError("sweep: trials must be at least 1");
    if (parallelism < 1)
        throw ConfigError("sweep: parallelism must be at least 1");
    if (resample_limit < 0)
        throw ConfigError("sweep: resample_limit must be nonnegative");
}

namespace {

void reject_unknown(const toml::table& t, const std::set<std::string>& known, const std::string& where)
{
    for (const auto& [key, node] : t) {
        (void)node;
        if (!known.count(std::string(key.str())))
            throw ConfigError(where + ": unknown key '" + std::string(key.str()) + "'");
    }
}

double number(const toml::node& n, const std::string& what)
{
    if (auto v = n.value<double>())
        return *v;
    throw ConfigError(what + " must be a number");
}

std::vector<double> numbers(const toml::node& n, const std::string& what)
{
    std::vector<double> out;
    if (const auto* arr = n.as_array()) {
        for (const auto& e : *arr)
            out.push_back(number(e, what));
        return out;
    }
    out.push_back(number(n, what));
    return out;
}

std::int64_t integer(const toml::node& n, const std::string& what)
{
    if (auto v = n.value<std::int64_t>())
        return *v;
    throw ConfigError(what + " must be an integer");
}

} // namespace

SweepConfig parse_config(std::string_view toml_text, std::string_view source)
{
    toml::table root;
    try {
        root = toml::parse(toml_text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e;
        throw ConfigError(os.str());
    }
    reject_unknown(root, {"scenario", "algorithm", "sweep"}, "config");
    SweepConfig cfg;

    if (const auto* sc = root["scenario"].as_table()) {
        reject_unknown(*sc,
                       {"antennas", "users", "distances_m", "path_loss_exponent", "noise_variance_w", "sinr_threshold",
                        "power_loss_dbm", "amp_efficiency", "bandwidth_hz", "fading"},
                       "scenario");
        auto& t = cfg.scenario;
        if (auto* n = sc->get("antennas"))
            t.num_antennas = static_cast<int>(integer(*n, "scenario.antennas"));
        if (auto* n = sc->get("users"))
            t.num_users = static_cast<int>(integer(*n, "scenario.users"));
        if (auto* n = sc->get("distances_m"))
            t.distances_m = numbers(*n, "scenario.distances_m");
        if (auto* n = sc->get("path_loss_exponent"))
            t.path_loss_exp = number(*n, "scenario.path_loss_exponent");
        if (auto* n = sc->get("noise_variance_w"))
            t.noise_vars = numbers(*n, "scenario.noise_variance_w");
        if (auto* n = sc->get("sinr_threshold"))
            t.sinr_thresholds = numbers(*n, "scenario.sinr_threshold");
        if (auto* n = sc->get("power_loss_dbm"))
            t.power_loss_dbm = numbers(*n, "scenario.power_loss_dbm");
        if (auto* n = sc->get("amp_efficiency"))
            t.amp_efficiency = number(*n, "scenario.amp_efficiency");
        if (auto* n = sc->get("bandwidth_hz"))
            t.bandwidth_hz = number(*n, "scenario.bandwidth_hz");
        if (auto* n = sc->get("fading")) {
            const auto f = n->value<std::string>();
            if (!f || *f != "rayleigh")
                throw ConfigError("scenario.fading: only \"rayleigh\" is supported");
        }
    }
    if (const auto* al = root["algorithm"].as_table()) {
        reject_unknown(*al, {"epsilon", "max_outer"}, "algorithm");
        if (auto* n = al->get("epsilon"))
            cfg.eps = number(*n, "algorithm.epsilon");
        if (auto* n = al->get("max_outer"))
            cfg.max_outer = static_cast<int>(integer(*n, "algorithm.max_outer"));
    }
    if (const auto* sw = root["sweep"].as_table()) {
        reject_unknown(*sw,
                       {"designs", "tx_snr_db", "d3_sweep_m", "trials", "base_seed", "output_dir", "parallelism",
                        "timing", "resample_limit"},
                       "sweep");
        if (auto* n = sw->get("designs")) {
            const auto* arr = n->as_array();
            if (arr == nullptr)
                throw ConfigError("sweep.designs must be an array of names");
            cfg.designs.clear();
            for (const auto& e : *arr) {
                const auto name = e.value<std::string>();
                if (!name)
                    throw ConfigError("sweep.designs must be an array of names");
                try {
                    cfg.designs.push_back(sca::parse_design(*name));
                } catch (const std::invalid_argument& err) {
                    throw ConfigError(std::string("sweep.designs: ") + err.what());
                }
            }
        }
        if (auto* n = sw->get("tx_snr_db"))
            cfg.tx_snr_db = numbers(*n, "sweep.tx_snr_db");
        if (auto* n = sw->get("d3_sweep_m")) {
            auto v = numbers(*n, "sweep.d3_sweep_m");
            if (!v.empty())
                cfg.d3_sweep_m = std::move(v);
        }
        if (auto* n = sw->get("trials"))
            cfg.trials = static_cast<int>(integer(*n, "sweep.trials"));
        if (auto* n = sw->get("base_seed")) {
            const auto v = integer(*n, "sweep.base_seed");
            if (v < 0)
                throw ConfigError("sweep.base_seed must be nonnegative");
            cfg.base_seed = static_cast<std::uint64_t>(v);
        }
        if (auto* n = sw->get("output_dir")) {
            const auto v = n->value<std::string>();
            if (!v)
                throw ConfigError("sweep.output_dir must be a string");
            cfg.output_dir = *v;
        }
        if (auto* n = sw->get("parallelism"))
            cfg.parallelism = static_cast<int>(integer(*n, "sweep.parallelism"));
        if (auto* n = sw->get("timing")) {
            const auto v = n->value<bool>();
            if (!v)
                throw ConfigError("sweep.timing must be a boolean");
            cfg.timing = *v;
        }
        if (auto* n = sw->get("resample_limit"))
            cfg.resample_limit = static_cast<int>(integer(*n, "sweep.resample_limit"));
    }
    cfg.validate();
    return cfg;
}

SweepConfig load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str(), path);
}

std::string default_config_toml()
{
    return R"(# Reference simulation setup: three antennas, three users.
[scenario]
antennas = 3
users = 3
distances_m = [1.0, 5.5, 25.0]
path_loss_exponent = 2.0
fading = "rayleigh"
noise_variance_w = 2.0
sinr_threshold = 1e-3
# converted to Watts at load time (45 dBm = 31.6228 W)
power_loss_dbm = 45.0
amp_efficiency = 0.65
bandwidth_hz = 1e6

[algorithm]
epsilon = 0.001
max_outer = 100

[sweep]
designs = ["gee-max", "mmee", "pf"]
tx_snr_db = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
# distance sweep of the last user, e.g. [5.0, 10.0, 15.0, 20.0, 25.0]; empty keeps distances_m
d3_sweep_m = []
trials = 200
base_seed = 1
output_dir = "results"
parallelism = 1
timing = true
resample_limit = 10
)";
}

std::vector<double> parse_value_list(std::string_view text)
{
    auto to_double = [&](std::string_view part) {
        std::string s(part);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used])))
            ++used;
        if (s.empty() || used != s.size() || !std::isfinite(v))
            throw ConfigError("cannot parse number '" + s + "' in '" + std::string(text) + "'");
        return v;
    };
    std::vector<double> out;
    if (text.find(':') != std::string_view::npos) {
        std::vector<double> parts;
        std::size_t start = 0;
        for (;;) {
            const auto colon = text.find(':', start);
            parts.push_back(to_double(text.substr(start, colon - start)));
            if (colon == std::string_view::npos)
                break;
            start = colon + 1;
        }
        if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
            throw ConfigError("range must be a:b:step with a <= b and step > 0");
        const auto n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
        for (long k = 0; k <= n; ++k)
            out.push_back(parts[0] + static_cast<double>(k) * parts[2]);
        return out;
    }
    std::size_t start = 0;
    for (;;) {
        const auto comma = text.find(',', start);
        out.push_back(to_double(text.substr(start, comma - start)));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t base, int trial, int redraw)
{
    const std::uint64_t seed = base ^ splitmix64(static_cast<std::uint64_t>(trial));
    return redraw == 0 ? seed : splitmix64(seed + static_cast<std::uint64_t>(redraw));
}

std::uint64_t channel_hash(const std::vector<CVector>& channels)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& c : channels)
        for (Eigen::Index n = 0; n < c.size(); ++n) {
            mix(c[n].real());
            mix(c[n].imag());
        }
    return h;
}

namespace {

double pick(const std::vector<double>& v, std::size_t i) { return v.size() == 1 ? v[0] : v[i]; }

} // namespace

SystemScenario build_scenario(const ScenarioTemplate& t, std::uint64_t seed, double tx_snr_db, std::optional<double> d3_m,
                              std::vector<std::size_t>* permutation)
{
    ChannelModelConfig ch;
    ch.distances_m = t.distances_m;
    if (d3_m)
        ch.distances_m.back() = *d3_m;
    ch.path_loss_exp = t.path_loss_exp;
    ch.fading = t.fading;
    ch.rng_seed = seed;
    ch.validate();

    SystemScenario s;
    s.num_antennas = t.num_antennas;
    s.num_users = t.num_users;
    s.channels = generate_channels(ch, t.num_antennas);
    const auto k = static_cast<std::size_t>(t.num_users);
    double noise_ref = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        s.noise_vars.push_back(pick(t.noise_vars, i));
        s.sinr_thresholds.push_back(pick(t.sinr_thresholds, i));
        s.power_loss_per_user.push_back(dbm_to_watts(pick(t.power_loss_dbm, i)));
        noise_ref = std::max(noise_ref, s.noise_vars.back());
    }
    // per-user noise differs only when configured so; the budget follows the largest
    s.p_available = p_available_from_tx_snr(tx_snr_db, noise_ref);
    s.amp_efficiency = t.amp_efficiency;
    s.bandwidth_hz = t.bandwidth_hz;
    s.validate();
    auto perm = order_scenario(s);
    if (permutation != nullptr)
        *permutation = std::move(perm);
    return s;
}

const char* const kCsvHeader =
    "design,trial,seed,tx_snr_db,d3_m,user,rate_bpshz,power_w,ee_bits_per_joule,gee,iterations,status,solve_ms";

namespace {

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string csv_line(const SweepRow& r)
{
    std::string line;
    line += sca::to_string(r.design);
    line += ',' + std::to_string(r.trial);
    line += ',' + std::to_string(r.seed);
    line += ',' + fmt(r.tx_snr_db);
    line += ',' + fmt(r.d3_m);
    line += ',' + (r.summary() ? std::string("all") : std::to_string(r.user));
    line += ',' + fmt(r.rate_bpshz);
    line += ',' + fmt(r.power_w);
    line += ',' + fmt(r.ee_bits_per_joule);
    line += ',' + fmt(r.gee);
    line += ',' + std::to_string(r.iterations);
    line += ',' + r.status;
    line += ',' + fmt(r.solve_ms);
    return line;
}

std::string hash_hex(std::uint64_t h)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Task
{
    int trial = 0;
    double snr = 0.0;
    std::optional<double> d3;
};

std::vector<SweepRow> run_task(const SweepConfig& cfg, const Task& task)
{
    const auto& t = cfg.scenario;
    const double d3 = task.d3 ? *task.d3 : t.distances_m.back();
    SystemScenario s;
    std::uint64_t seed = 0;
    bool feasible = false;
    std::vector<std::size_t> perm;
    for (int redraw = 0; redraw <= cfg.resample_limit && !feasible; ++redraw) {
        seed = trial_seed(cfg.base_seed, task.trial, redraw);
        s = build_scenario(t, seed, task.snr, task.d3, &perm);
        try {
            (void)sca::initialize(s);
            feasible = true;
        } catch (const sca::InfeasibleScenario&) {
        }
    }
    const std::uint64_t hash = channel_hash(s.channels);

    std::vector<SweepRow> rows;
    for (sca::Design d : cfg.designs) {
        SweepRow base;
        base.design = d;
        base.trial = task.trial;
        base.seed = seed;
        base.tx_snr_db = task.snr;
        base.d3_m = d3;
        base.channel_hash = hash;
        if (!feasible) {
            base.status = "infeasible";
            for (int u = 0; u <= t.num_users; ++u) {
                SweepRow r = base;
                r.user = u;
                rows.push_back(r);
            }
            continue;
        }
        sca::ScaOptions opts;
        opts.eps = cfg.eps;
        opts.max_outer = cfg.max_outer;
        if (!cfg.dump_dir.empty()) {
            opts.dump_dir = cfg.dump_dir;
            opts.dump_prefix = "t" + std::to_string(task.trial) + "_snr" + fmt(task.snr) + "_d" + fmt(d3) + "_";
        }
        const auto t0 = std::chrono::steady_clock::now();
        const sca::DesignResult res = sca::run_design(s, d, opts);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        base.status = sca::to_string(res.termination);
        base.iterations = res.iterations;
        base.solve_ms = cfg.timing ? ms : 0.0;
        base.gee = res.metrics.gee;
        for (std::size_t i = 0; i < perm.size(); ++i) {
            SweepRow r = base;
            r.user = static_cast<int>(perm[i]) + 1;
            r.rate_bpshz = res.metrics.per_user_rate[i] / s.bandwidth_hz;
            r.power_w = res.w.power(i);
            r.ee_bits_per_joule = res.metrics.per_user_ee[i];
            rows.push_back(r);
        }
        SweepRow sum = base;
        sum.user = 0;
        sum.rate_bpshz = res.metrics.sum_rate() / s.bandwidth_hz;
        sum.power_w = res.w.total_power();
        sum.ee_bits_per_joule = res.metrics.min_ee();
        rows.push_back(sum);
    }
    return rows;
}

void write_channels(std::ostream& os, const std::vector<SweepRow>& rows)
{
    os << "design,trial,seed,tx_snr_db,d3_m,channel_hash\n";
    for (const auto& r : rows)
        if (r.summary())
            os << sca::to_string(r.design) << ',' << r.trial << ',' << r.seed << ',' << fmt(r.tx_snr_db) << ','
               << fmt(r.d3_m) << ',' << hash_hex(r.channel_hash) << '\n';
}

std::string timestamp()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void replace_file(const fs::path& tmp, const fs::path& dst)
{
    std::error_code ec;
    fs::rename(tmp, dst, ec);
    if (ec)
        throw IoError("cannot move '" + tmp.string() + "' to '" + dst.string() + "': " + ec.message());
}

} // namespace

void sort_rows(std::vector<SweepRow>& rows, const std::vector<sca::Design>& design_order)
{
    auto rank = [&](sca::Design d) {
        const auto it = std::find(design_order.begin(), design_order.end(), d);
        return static_cast<int>(it - design_order.begin());
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const SweepRow& a, const SweepRow& b) {
        const int ua = a.summary() ? 1 << 30 : a.user;
        const int ub = b.summary() ? 1 << 30 : b.user;
        return std::tuple(rank(a.design), a.d3_m, a.tx_snr_db, a.trial, ua) <
               std::tuple(rank(b.design), b.d3_m, b.tx_snr_db, b.trial, ub);
    });
}

void write_csv(std::ostream& os, const SweepTable& table, bool with_comment)
{
    if (with_comment)
        os << "# nomaee sweep written " << timestamp() << '\n';
    os << kCsvHeader << '\n';
    for (const auto& r : table.rows)
        os << csv_line(r) << '\n';
}

SweepTable run_sweep(const SweepConfig& cfg, SweepFiles* files)
{
    cfg.validate();
    std::vector<Task> tasks;
    std::vector<std::optional<double>> d3s;
    if (cfg.d3_sweep_m)
        for (double d : *cfg.d3_sweep_m)
            d3s.emplace_back(d);
    else
        d3s.emplace_back(std::nullopt);
    for (const auto& d3 : d3s)
        for (double snr : cfg.tx_snr_db)
            for (int trial = 0; trial < cfg.trials; ++trial)
                tasks.push_back({trial, snr, d3});

    const bool to_disk = !cfg.output_dir.empty();
    fs::path dir(cfg.output_dir);
    std::ofstream partial;
    if (to_disk) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec)
            throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
        partial.open(dir / "sweep.csv.partial");
        if (!partial)
            throw IoError("cannot write '" + (dir / "sweep.csv.partial").string() + "'");
        partial << kCsvHeader << '\n';
    }

    SweepTable table;
    table.num_users = cfg.scenario.num_users;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            std::vector<SweepRow> rows;
            try {
                rows = run_task(cfg, tasks[i]);
            } catch (...) {
                const std::lock_guard lock(mu);
                if (!failure)
                    failure = std::current_exception();
                next = tasks.size();
                return;
            }
            const std::lock_guard lock(mu);
            for (auto& r : rows) {
                if (to_disk)
                    partial << csv_line(r) << '\n';
                table.rows.push_back(std::move(r));
            }
            if (to_disk)
                partial.flush();
        }
    };
    const int threads = std::clamp(cfg.parallelism, 1, static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    if (failure)
        std::rethrow_exception(failure);

    sort_rows(table.rows, cfg.designs);
    if (to_disk) {
        if (!partial)
            throw IoError("write to '" + (dir / "sweep.csv.partial").string() + "' failed");
        partial.close();
        const fs::path csv = dir / "sweep.csv";
        const fs::path chan = dir / "channels.csv";
        {
            std::ofstream os(dir / "sweep.csv.tmp");
            write_csv(os, table);
            if (!os)
                throw IoError("cannot write '" + csv.string() + "'");
        }
        replace_file(dir / "sweep.csv.tmp", csv);
        {
            std::ofstream os(dir / "channels.csv.tmp");
            write_channels(os, table.rows);
            if (!os)
                throw IoError("cannot write '" + chan.string() + "'");
        }
        replace_file(dir / "channels.csv.tmp", chan);
        std::error_code ec;
        fs::remove(dir / "sweep.csv.partial", ec);
        if (files != nullptr) {
            files->csv = csv.string();
            files->channels = chan.string();
        }
    }
    return table;
}

const char* to_string(PlotMode mode)
{
    switch (mode) {
    case PlotMode::WeakestUserEE: return "weakest_user_ee";
    case PlotMode::GEE: return "gee";
    case PlotMode::DistanceSweep: return "distance_sweep";
    }
    return "?";
}

std::map<sca::Design, std::vector<SeriesPoint>> summarize(const SweepTable& table, PlotMode mode,
                                                          std::optional<sca::Design> only)
{
    std::set<double> snrs;
    std::set<double> d3s;
    std::map<sca::Design, std::map<double, std::vector<double>>> groups;
    for (const auto& r : table.rows) {
        if (!r.summary() || !r.feasible() || (only && r.design != *only))
            continue;
        snrs.insert(r.tx_snr_db);
        d3s.insert(r.d3_m);
        const double x = mode == PlotMode::DistanceSweep ? r.d3_m : r.tx_snr_db;
        const double y = mode == PlotMode::GEE ? r.gee : r.ee_bits_per_joule;
        groups[r.design][x].push_back(y);
    }
    if (groups.empty())
        throw EmptySelection(std::string("no feasible rows for plot mode ") + to_string(mode));
    if (mode == PlotMode::DistanceSweep && snrs.size() > 1)
        throw std::invalid_argument("distance sweep plot needs a single TX-SNR point");
    if (mode != PlotMode::DistanceSweep && d3s.size() > 1)
        throw std::invalid_argument("TX-SNR plots need a single distance setting");

    std::map<sca::Design, std::vector<SeriesPoint>> out;
    for (const auto& [design, by_x] : groups)
        for (const auto& [x, ys] : by_x) {
            SeriesPoint p;
            p.x = x;
            p.count = static_cast<int>(ys.size());
            double sum = 0.0;
            for (double y : ys)
                sum += y;
            p.mean = sum / p.count;
            if (p.count > 1) {
                double ss = 0.0;
                for (double y : ys)
                    ss += (y - p.mean) * (y - p.mean);
                p.stderr_ = std::sqrt(ss / (p.count - 1)) / std::sqrt(static_cast<double>(p.count));
            }
            out[design].push_back(p);
        }
    return out;
}

std::vector<std::string> emit_plot_data(const SweepTable& table, PlotMode mode, const std::string& out_dir,
                                        std::optional<sca::Design> only)
{
    const auto series = summarize(table, mode, only);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create '" + out_dir + "': " + ec.message());
    std::vector<std::string> paths;
    for (const auto& [design, points] : series) {
        const fs::path p = fs::path(out_dir) / (std::string(to_string(mode)) + "_" + sca::to_string(design) + ".dat");
        std::ofstream os(p);
        os << "# " << (mode == PlotMode::DistanceSweep ? "d3_m" : "tx_snr_db") << " mean stderr\n";
        for (const auto& pt : points)
            os << fmt(pt.x) << ' ' << fmt(pt.mean) << ' ' << fmt(pt.stderr_) << '\n';
        if (!os)
            throw IoError("cannot write '" + p.string() + "'");
        paths.push_back(p.string());
    }
    return paths;
}

} // namespace nomaee::harness
