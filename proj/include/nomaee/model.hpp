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

#ifndef NOMAEE_MODEL_HPP
#define NOMAEE_MODEL_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace nomaee {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;

// Unit conversions. Transmit power is normalised to the noise floor:
// TX-SNR(dB) = 10 log10(P_ava / sigma^2).
double db_to_linear(double db);
double dbm_to_watts(double dbm);
double p_available_from_tx_snr(double tx_snr_db, double noise_var);

/// One downlink MISO NOMA problem instance. Users are indexed 0..K-1 with
/// user 0 the strongest; `order_users` produces that ordering.
struct SystemScenario
{
    int num_antennas = 0;
    int num_users = 0;
    std::vector<CVector> channels;
    std::vector<double> noise_vars;
    double p_available = 0.0;
    double amp_efficiency = 1.0;
    std::vector<double> power_loss_per_user;
    double bandwidth_hz = 1.0;
    std::vector<double> sinr_thresholds;

    /// Throws std::invalid_argument on inconsistent sizes or out-of-range values.
    void validate() const;

    /// True when ||h_0||^2 >= ||h_1||^2 >= ... holds.
    bool is_ordered() const;

    double total_power_loss() const;
    double min_rate(std::size_t i) const;
};

struct Beamformers
{
    std::vector<CVector> vectors;

    double power(std::size_t i) const { return vectors[i].squaredNorm(); }
    double total_power() const;
    std::size_t num_users() const { return vectors.size(); }

    static Beamformers zeros(int num_users, int num_antennas);
};

enum class Fading
{
    Rayleigh
};

struct ChannelModelConfig
{
    std::vector<double> distances_m;
    double path_loss_exp = 2.0;
    Fading fading = Fading::Rayleigh;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

struct Metrics
{
    std::vector<double> per_user_sinr;
    std::vector<double> per_user_rate;
    std::vector<double> per_user_power;
    std::vector<double> per_user_ee;
    double gee = 0.0;

    double min_ee() const;
    double sum_rate() const;
};

struct OrderedChannels
{
    std::vector<CVector> channels;
    /// permutation[sorted index] = original index (0-based).
    std::vector<std::size_t> permutation;
};

struct FeasibilityReport
{
    bool sic_ok = true;
    bool power_ok = true;
    bool rate_ok = true;
    /// Worst (smallest) slack of each constraint family; negative means violated.
    double sic_margin = 0.0;
    double power_margin = 0.0;
    double rate_margin = 0.0;

    bool ok() const { return sic_ok && power_ok && rate_ok; }
};

/// Unit-variance small-scale fading of K users, without path loss. Pure in (seed, K, N).
std::vector<CVector> draw_fading(std::uint64_t seed, std::size_t num_users, int num_antennas);

/// h_i = sqrt(d_i^-kappa) v_i with v_i ~ CN(0, I).
std::vector<CVector> generate_channels(const ChannelModelConfig& config, int num_antennas);

OrderedChannels order_users(const std::vector<CVector>& channels);

/// Reorders the per-user fields of a scenario by channel strength; returns the permutation.
std::vector<std::size_t> order_scenario(SystemScenario& s);

/// SINR with which the message of user i is decoded at user k (k <= i).
double sinr_of_message_at_user(const SystemScenario& s, const Beamformers& w, std::size_t i, std::size_t k);

/// min over k <= i of the SINR of message i at user k.
double effective_sinr(const SystemScenario& s, const Beamformers& w, std::size_t i);

/// Exact metrics. Rates are log2(1 + SINR) times `bandwidth`; optimisation uses 1.
Metrics metrics(const SystemScenario& s, const Beamformers& w, double bandwidth = 1.0);

FeasibilityReport check_feasibility(const SystemScenario& s, const Beamformers& w, double tol);

} // namespace nomaee

#endif // NOMAEE_MODEL_HPP
