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

#include "nomaee/model.hpp"

#include <cmath>
#include <random>

using namespace nomaee;

namespace {

CVector vec(std::initializer_list<cplx> xs)
{
    CVector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (cplx x : xs)
        v[i++] = x;
    return v;
}

// Two users on a real 2-antenna channel, used by several hand-computed cases.
SystemScenario two_user()
{
    SystemScenario s;
    s.num_antennas = 2;
    s.num_users = 2;
    s.channels = {vec({1.0, 0.0}), vec({0.5, 0.0})};
    s.noise_vars = {1.0, 1.0};
    s.p_available = 10.0;
    s.amp_efficiency = 0.65;
    s.power_loss_per_user = {2.0, 2.0};
    s.bandwidth_hz = 1.0;
    s.sinr_thresholds = {1e-3, 1e-3};
    return s;
}

Beamformers two_user_w()
{
    Beamformers w;
    w.vectors = {vec({1.0, 0.0}), vec({2.0, 0.0})};
    return w;
}

SystemScenario random_scenario(std::mt19937_64& rng, int k_users, int n_ant)
{
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    SystemScenario s;
    s.num_antennas = n_ant;
    s.num_users = k_users;
    for (int k = 0; k < k_users; ++k) {
        CVector h(n_ant);
        for (int n = 0; n < n_ant; ++n)
            h[n] = cplx(g(rng), g(rng));
        s.channels.push_back(h);
        s.noise_vars.push_back(u(rng));
        s.power_loss_per_user.push_back(u(rng));
        s.sinr_thresholds.push_back(1e-3);
    }
    s.p_available = 10.0;
    s.amp_efficiency = 0.65;
    return s;
}

Beamformers random_w(std::mt19937_64& rng, int k_users, int n_ant)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Beamformers w = Beamformers::zeros(k_users, n_ant);
    for (auto& v : w.vectors)
        for (int n = 0; n < n_ant; ++n)
            v[n] = cplx(g(rng), g(rng));
    return w;
}

} // namespace

TEST_CASE("unit conversions")
{
    CHECK(dbm_to_watts(45.0) == doctest::Approx(31.6227766).epsilon(1e-9));
    CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0));
    CHECK(db_to_linear(20.0) == doctest::Approx(100.0));
    CHECK(p_available_from_tx_snr(20.0, 2.0) == doctest::Approx(200.0));
}

TEST_CASE("SINR of a message at each decoder")
{
    const auto s = two_user();
    const auto w = two_user_w();
    CHECK(sinr_of_message_at_user(s, w, 1, 0) == doctest::Approx(2.0));
    CHECK(sinr_of_message_at_user(s, w, 1, 1) == doctest::Approx(0.8));
    CHECK(sinr_of_message_at_user(s, w, 0, 0) == doctest::Approx(1.0));
    CHECK(effective_sinr(s, w, 1) == doctest::Approx(0.8));
    CHECK(effective_sinr(s, w, 0) == doctest::Approx(sinr_of_message_at_user(s, w, 0, 0)));

    const auto zero = Beamformers::zeros(2, 2);
    CHECK(sinr_of_message_at_user(s, zero, 1, 0) == 0.0);
    CHECK(effective_sinr(s, zero, 1) == 0.0);
}

TEST_CASE("complex inner product uses the conjugate channel")
{
    SystemScenario s = two_user();
    s.channels[0] = vec({cplx(0.0, 1.0), 0.0});
    Beamformers w = two_user_w();
    w.vectors[0] = vec({cplx(0.0, 1.0), 0.0});
    // conj(j) * j = 1
    CHECK(sinr_of_message_at_user(s, w, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("rates, energy efficiency and GEE")
{
    const auto s = two_user();
    const auto w = two_user_w();
    const auto m = metrics(s, w);
    CHECK(m.per_user_rate[0] == doctest::Approx(1.0));
    CHECK(m.per_user_rate[1] == doctest::Approx(0.847997).epsilon(1e-6));
    CHECK(m.per_user_ee[0] == doctest::Approx(0.28261).epsilon(1e-5));
    CHECK(m.gee == doctest::Approx(0.15805).epsilon(1e-4));
    CHECK(m.min_ee() == doctest::Approx(std::min(m.per_user_ee[0], m.per_user_ee[1])));

    const auto scaled = metrics(s, w, 1e6);
    CHECK(scaled.per_user_rate[1] == doctest::Approx(0.847997e6).epsilon(1e-6));
    CHECK(scaled.gee == doctest::Approx(1e6 * m.gee));

    const auto zero = metrics(s, Beamformers::zeros(2, 2));
    CHECK(zero.gee == 0.0);
    CHECK(zero.per_user_ee[0] == 0.0);
    CHECK(zero.per_user_rate[1] == 0.0);
}

TEST_CASE("single user GEE equals its EE")
{
    SystemScenario s;
    s.num_antennas = 1;
    s.num_users = 1;
    s.channels = {vec({cplx(0.3, -0.4)})};
    s.noise_vars = {0.5};
    s.p_available = 3.0;
    s.amp_efficiency = 0.8;
    s.power_loss_per_user = {1.5};
    s.sinr_thresholds = {0.0};
    Beamformers w;
    w.vectors = {vec({cplx(1.0, 1.0)})};
    const auto m = metrics(s, w);
    CHECK(m.gee == doctest::Approx(m.per_user_ee[0]).epsilon(1e-14));
}

TEST_CASE("feasibility report")
{
    const auto s = two_user();
    const auto w = two_user_w();
    const auto rep = check_feasibility(s, w, 0.0);
    CHECK(rep.sic_ok);
    CHECK(rep.power_ok);
    CHECK(rep.rate_ok);
    // 4 - 1 at user 1, 1 - 0.25 at user 2
    CHECK(rep.sic_margin == doctest::Approx(0.75));
    CHECK(rep.power_margin == doctest::Approx(5.0));

    const auto zero = check_feasibility(s, Beamformers::zeros(2, 2), 0.0);
    CHECK_FALSE(zero.rate_ok);

    Beamformers equal;
    equal.vectors = {vec({1.0, 0.0}), vec({1.0, 0.0})};
    CHECK(check_feasibility(s, equal, 0.0).sic_ok);

    Beamformers reversed;
    reversed.vectors = {vec({2.0, 0.0}), vec({1.0, 0.0})};
    const auto bad = check_feasibility(s, reversed, 0.0);
    CHECK_FALSE(bad.sic_ok);
    CHECK(bad.sic_margin < 0.0);

    SystemScenario tight = s;
    tight.p_available = 4.0;
    CHECK_FALSE(check_feasibility(tight, w, 1e-9).power_ok);
    CHECK(check_feasibility(tight, w, 1.0).power_ok);
}

TEST_CASE("scenario validation")
{
    auto s = two_user();
    CHECK_NOTHROW(s.validate());
    s.amp_efficiency = 1.5;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = two_user();
    s.noise_vars.pop_back();
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = two_user();
    s.sinr_thresholds[0] = -1.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    CHECK_THROWS_AS(metrics(two_user(), Beamformers{}), std::invalid_argument);
    CHECK_THROWS_AS(check_feasibility(two_user(), Beamformers::zeros(2, 3), 0.0), std::invalid_argument);
    CHECK(two_user().min_rate(0) == doctest::Approx(std::log2(1.001)));
}

TEST_CASE("effective SINR never increases when a decoder is added")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = random_scenario(rng, 3, 2);
        const auto w = random_w(rng, 3, 2);
        for (std::size_t i = 0; i < 3; ++i) {
            double running = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k <= i; ++k) {
                const double next = std::min(running, sinr_of_message_at_user(s, w, i, k));
                CHECK(next <= running);
                running = next;
            }
            CHECK(effective_sinr(s, w, i) == doctest::Approx(running).epsilon(1e-15));
        }
    }
}

TEST_CASE("SINR is invariant to a common noise and power scale")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        auto s = random_scenario(rng, 3, 3);
        auto w = random_w(rng, 3, 3);
        const double c = scale(rng);
        auto s2 = s;
        for (auto& v : s2.noise_vars)
            v *= c;
        auto w2 = w;
        for (auto& v : w2.vectors)
            v *= std::sqrt(c);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t k = 0; k <= i; ++k)
                CHECK(sinr_of_message_at_user(s2, w2, i, k) ==
                      doctest::Approx(sinr_of_message_at_user(s, w, i, k)).epsilon(1e-12));
    }
}

TEST_CASE("EE times attributed power recovers the rate")
{
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = random_scenario(rng, 3, 2);
        const auto w = random_w(rng, 3, 2);
        const auto m = metrics(s, w);
        for (std::size_t i = 0; i < 3; ++i) {
            const double back = m.per_user_ee[i] * (w.power(i) / s.amp_efficiency + s.power_loss_per_user[i]);
            CHECK(std::abs(back - m.per_user_rate[i]) <= 1e-12 * std::max(1.0, m.per_user_rate[i]));
        }
    }
}

TEST_CASE("SIC chain built with equality passes at zero tolerance")
{
    // Same direction for every user and equal powers: every adjacent gap is zero.
    auto s = two_user();
    s.channels = {vec({1.0, 0.5}), vec({0.5, 0.25})};
    Beamformers w;
    w.vectors = {vec({0.6, 0.3}), vec({0.6, 0.3})};
    const auto rep = check_feasibility(s, w, 0.0);
    CHECK(rep.sic_ok);
    CHECK(rep.sic_margin == 0.0);
}

TEST_CASE("channel generation")
{
    ChannelModelConfig cfg;
    cfg.distances_m = {1.0, 5.5, 25.0};
    cfg.path_loss_exp = 2.0;
    cfg.rng_seed = 42;
    const auto h = generate_channels(cfg, 3);
    const auto v = draw_fading(42, 3, 3);
    REQUIRE(h.size() == 3);
    const double expect[] = {1.0, 1.0 / 30.25, 1.0 / 625.0};
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(h[i].squaredNorm() == doctest::Approx(expect[i] * v[i].squaredNorm()).epsilon(1e-12));

    const auto again = generate_channels(cfg, 3);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(again[i] == h[i]);

    cfg.path_loss_exp = 0.0;
    const auto raw = generate_channels(cfg, 3);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(raw[i] == v[i]);

    cfg.rng_seed = 43;
    CHECK(generate_channels(cfg, 3)[0] != h[0]);

    ChannelModelConfig bad;
    bad.distances_m = {1.0, -2.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("fading draws have unit variance per entry")
{
    const auto v = draw_fading(7, 20000, 1);
    double mean_re = 0.0;
    double power = 0.0;
    for (const auto& x : v) {
        mean_re += x[0].real();
        power += std::norm(x[0]);
    }
    mean_re /= static_cast<double>(v.size());
    power /= static_cast<double>(v.size());
    CHECK(std::abs(mean_re) < 0.02);
    CHECK(power == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("user ordering")
{
    const auto two = order_users({vec({0.5}), vec({1.0})});
    CHECK(two.permutation == std::vector<std::size_t>{1, 0});
    CHECK(two.channels[0][0] == cplx(1.0));

    const auto ties = order_users({vec({1.0}), vec({-1.0}), vec({cplx(0.0, 1.0)})});
    CHECK(ties.permutation == std::vector<std::size_t>{0, 1, 2});

    auto s = two_user();
    std::swap(s.channels[0], s.channels[1]);
    s.noise_vars = {3.0, 1.0};
    s.power_loss_per_user = {5.0, 2.0};
    CHECK_FALSE(s.is_ordered());
    const auto perm = order_scenario(s);
    CHECK(perm == std::vector<std::size_t>{1, 0});
    CHECK(s.is_ordered());
    CHECK(s.noise_vars[0] == 1.0);
    CHECK(s.power_loss_per_user[1] == 5.0);
}

TEST_CASE("distance order survives fading in most draws")
{
    ChannelModelConfig cfg;
    cfg.distances_m = {1.0, 5.5, 25.0};
    int kept = 0;
    const int draws = 1000;
    for (int seed = 0; seed < draws; ++seed) {
        cfg.rng_seed = static_cast<std::uint64_t>(seed);
        const auto ordered = order_users(generate_channels(cfg, 3));
        kept += ordered.permutation == std::vector<std::size_t>{0, 1, 2} ? 1 : 0;
    }
    const double fraction = static_cast<double>(kept) / draws;
    MESSAGE("distance order kept in " << fraction << " of draws");
    CHECK(fraction >= 0.95);
}
