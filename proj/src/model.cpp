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

#include "nomaee/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace nomaee {

namespace {

void require(bool condition, const std::string& what)
{
    if (!condition)
        throw std::invalid_argument(what);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

} // namespace

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double p_available_from_tx_snr(double tx_snr_db, double noise_var) { return noise_var * db_to_linear(tx_snr_db); }

void SystemScenario::validate() const
{
    require(num_antennas >= 1, "scenario: num_antennas must be >= 1");
    require(num_users >= 1, "scenario: num_users must be >= 1");
    const auto k = static_cast<std::size_t>(num_users);
    require(channels.size() == k, "scenario: need one channel per user");
    require(noise_vars.size() == k, "scenario: need one noise variance per user");
    require(power_loss_per_user.size() == k, "scenario: need one power loss per user");
    require(sinr_thresholds.size() == k, "scenario: need one SINR threshold per user");
    for (const auto& h : channels) {
        require(h.size() == num_antennas, "scenario: channel length must equal num_antennas");
        require(h.allFinite(), "scenario: channel entries must be finite");
    }
    for (std::size_t i = 0; i < k; ++i) {
        require(std::isfinite(noise_vars[i]) && noise_vars[i] > 0.0, "scenario: noise variances must be positive");
        require(finite_nonneg(power_loss_per_user[i]), "scenario: power losses must be nonnegative");
        require(finite_nonneg(sinr_thresholds[i]), "scenario: SINR thresholds must be nonnegative");
    }
    require(finite_nonneg(p_available), "scenario: p_available must be nonnegative");
    require(std::isfinite(amp_efficiency) && amp_efficiency > 0.0 && amp_efficiency <= 1.0,
            "scenario: amp_efficiency must lie in (0, 1]");
    require(std::isfinite(bandwidth_hz) && bandwidth_hz > 0.0, "scenario: bandwidth must be positive");
}

bool SystemScenario::is_ordered() const
{
    for (std::size_t i = 1; i < channels.size(); ++i)
        if (channels[i].squaredNorm() > channels[i - 1].squaredNorm())
            return false;
    return true;
}

double SystemScenario::total_power_loss() const
{
    return std::accumulate(power_loss_per_user.begin(), power_loss_per_user.end(), 0.0);
}

double SystemScenario::min_rate(std::size_t i) const { return std::log2(1.0 + sinr_thresholds[i]); }

double Beamformers::total_power() const
{
    double p = 0.0;
    for (const auto& v : vectors)
        p += v.squaredNorm();
    return p;
}

Beamformers Beamformers::zeros(int num_users, int num_antennas)
{
    Beamformers w;
    w.vectors.assign(static_cast<std::size_t>(num_users), CVector::Zero(num_antennas));
    return w;
}

void ChannelModelConfig::validate() const
{
    require(!distances_m.empty(), "channel model: need at least one distance");
    for (double d : distances_m)
        require(std::isfinite(d) && d > 0.0, "channel model: distances must be positive");
    require(std::isfinite(path_loss_exp) && path_loss_exp >= 0.0, "channel model: path loss exponent must be >= 0");
}

double Metrics::min_ee() const
{
    if (per_user_ee.empty())
        return 0.0;
    return *std::min_element(per_user_ee.begin(), per_user_ee.end());
}

double Metrics::sum_rate() const { return std::accumulate(per_user_rate.begin(), per_user_rate.end(), 0.0); }

std::vector<CVector> draw_fading(std::uint64_t seed, std::size_t num_users, int num_antennas)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    std::vector<CVector> v(num_users, CVector(num_antennas));
    for (auto& vi : v)
        for (int n = 0; n < num_antennas; ++n) {
            const double re = normal(rng);
            const double im = normal(rng);
            vi[n] = cplx(re, im);
        }
    return v;
}

std::vector<CVector> generate_channels(const ChannelModelConfig& config, int num_antennas)
{
    config.validate();
    require(num_antennas >= 1, "generate_channels: num_antennas must be >= 1");
    auto h = draw_fading(config.rng_seed, config.distances_m.size(), num_antennas);
    for (std::size_t i = 0; i < h.size(); ++i)
        h[i] *= std::sqrt(std::pow(config.distances_m[i], -config.path_loss_exp));
    return h;
}

OrderedChannels order_users(const std::vector<CVector>& channels)
{
    OrderedChannels out;
    out.permutation.resize(channels.size());
    std::iota(out.permutation.begin(), out.permutation.end(), std::size_t{0});
    std::stable_sort(out.permutation.begin(), out.permutation.end(), [&](std::size_t a, std::size_t b) {
        return channels[a].squaredNorm() > channels[b].squaredNorm();
    });
    out.channels.reserve(channels.size());
    for (std::size_t idx : out.permutation)
        out.channels.push_back(channels[idx]);
    return out;
}

std::vector<std::size_t> order_scenario(SystemScenario& s)
{
    auto ordered = order_users(s.channels);
    auto permute = [&](std::vector<double>& field) {
        std::vector<double> sorted;
        sorted.reserve(field.size());
        for (std::size_t idx : ordered.permutation)
            sorted.push_back(field[idx]);
        field = std::move(sorted);
    };
    s.channels = std::move(ordered.channels);
    permute(s.noise_vars);
    permute(s.power_loss_per_user);
    permute(s.sinr_thresholds);
    return ordered.permutation;
}

namespace {

void require_shape(const SystemScenario& s, const Beamformers& w)
{
    if (w.vectors.size() != static_cast<std::size_t>(s.num_users) || s.channels.size() != w.vectors.size())
        throw std::invalid_argument("beamformers: need one vector per user");
    for (const auto& v : w.vectors)
        if (v.size() != s.num_antennas)
            throw std::invalid_argument("beamformers: vector length must equal the antenna count");
}

} // namespace

double sinr_of_message_at_user(const SystemScenario& s, const Beamformers& w, std::size_t i, std::size_t k)
{
    const CVector& hk = s.channels[k];
    const double signal = std::norm(hk.dot(w.vectors[i]));
    double interference = s.noise_vars[k];
    for (std::size_t j = 0; j < i; ++j)
        interference += std::norm(hk.dot(w.vectors[j]));
    return signal / interference;
}

double effective_sinr(const SystemScenario& s, const Beamformers& w, std::size_t i)
{
    double sinr = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= i; ++k)
        sinr = std::min(sinr, sinr_of_message_at_user(s, w, i, k));
    return sinr;
}

Metrics metrics(const SystemScenario& s, const Beamformers& w, double bandwidth)
{
    require_shape(s, w);
    const auto k = static_cast<std::size_t>(s.num_users);
    Metrics m;
    m.per_user_sinr.resize(k);
    m.per_user_rate.resize(k);
    m.per_user_power.resize(k);
    m.per_user_ee.resize(k);
    double total_power = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        m.per_user_sinr[i] = effective_sinr(s, w, i);
        m.per_user_rate[i] = bandwidth * std::log2(1.0 + m.per_user_sinr[i]);
        m.per_user_power[i] = w.power(i);
        m.per_user_ee[i] = m.per_user_rate[i] / (m.per_user_power[i] / s.amp_efficiency + s.power_loss_per_user[i]);
        total_power += m.per_user_power[i];
    }
    m.gee = m.sum_rate() / (total_power / s.amp_efficiency + s.total_power_loss());
    return m;
}

FeasibilityReport check_feasibility(const SystemScenario& s, const Beamformers& w, double tol)
{
    require_shape(s, w);
    const auto k = static_cast<std::size_t>(s.num_users);
    FeasibilityReport r;
    r.sic_margin = std::numeric_limits<double>::infinity();
    r.rate_margin = std::numeric_limits<double>::infinity();
    for (std::size_t rx = 0; rx < k; ++rx) {
        const CVector& h = s.channels[rx];
        for (std::size_t j = 0; j + 1 < k; ++j) {
            const double slack = std::norm(h.dot(w.vectors[j + 1])) - std::norm(h.dot(w.vectors[j]));
            r.sic_margin = std::min(r.sic_margin, slack);
        }
    }
    for (std::size_t i = 0; i < k; ++i)
        r.rate_margin = std::min(r.rate_margin, effective_sinr(s, w, i) - s.sinr_thresholds[i]);
    r.power_margin = s.p_available - w.total_power();

    r.sic_ok = r.sic_margin >= -tol;
    r.rate_ok = r.rate_margin >= -tol;
    r.power_ok = r.power_margin >= -tol;
    return r;
}

} // namespace nomaee
