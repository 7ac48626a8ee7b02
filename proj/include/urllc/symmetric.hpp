/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The urllc-alloc Authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "urllc/bandwidth_search.hpp"
#include "urllc/channel.hpp"
#include "urllc/error.hpp"
#include "urllc/qos.hpp"
#include "urllc/rng.hpp"

namespace urllc {

/// Closed-form optimal policy for identical users at per-user bandwidth W.
struct SymmetricPolicy {
    double bandwidth_hz = 0.0;
    double eta = 1.0; // 1 / (1 + theta W tau / (u ln 2))
    UserQoS qos;
    double alpha = 0.0;
    double max_power_w = 0.0;
    double noise_psd_w_per_hz = 0.0;
    double tx_duration_s = 0.0;
    double packet_bits = 0.0;
    int num_users = 0;
};

inline double symmetric_eta(double bandwidth_hz, const UserQoS& qos, double tx_duration_s, double packet_bits) {
    return 1.0 / (1.0 + qos.theta * bandwidth_hz * tx_duration_s / (packet_bits * std::numbers::ln2));
}

inline SymmetricPolicy make_symmetric_policy(const ScenarioConfig& cfg, const UserQoS& qos, double bandwidth_hz) {
    if (!is_symmetric(cfg)) throw invalid_input("symmetric policy requires identical users");
    if (!(bandwidth_hz > 0.0)) throw invalid_input("symmetric policy: bandwidth must be positive");
    SymmetricPolicy p;
    p.bandwidth_hz = bandwidth_hz;
    p.qos = qos;
    p.alpha = large_scale_gain(cfg.users.front().distance_m);
    p.max_power_w = cfg.max_power_w;
    p.noise_psd_w_per_hz = cfg.noise_psd_w_per_hz;
    p.tx_duration_s = cfg.tx_duration_s;
    p.packet_bits = cfg.packet_bits;
    p.num_users = cfg.num_users();
    p.eta = symmetric_eta(bandwidth_hz, qos, cfg.tx_duration_s, cfg.packet_bits);
    return p;
}

/// KKT power allocation for one draw, written into `power`:
///   P_k = (N0 W / (alpha g_k)) ( (alpha g_k Pmax/(N0 W) + g_k sum_i 1/g_i)
///                                / (g_k^(1-eta) sum_i g_i^(eta-1)) - 1 ).
/// No sign check; returns the index of the most negative entry or -1. A
/// single user gets the whole budget exactly.
inline int optimal_power_raw(const SymmetricPolicy& policy, std::span<const double> g, std::span<double> power) {
    if (g.size() != power.size() || g.size() != static_cast<std::size_t>(policy.num_users))
        throw invalid_input("optimal_power: gain vector length differs from user count");
    if (g.size() == 1) {
        if (!(g[0] > 0.0) || !std::isfinite(g[0])) throw invalid_input("optimal_power: gains must be positive and finite");
        power[0] = policy.max_power_w;
        return -1;
    }
    const double noise_w = policy.noise_psd_w_per_hz * policy.bandwidth_hz;
    double inv_sum = 0.0, pow_sum = 0.0;
    for (double gk : g) {
        if (!(gk > 0.0) || !std::isfinite(gk)) throw invalid_input("optimal_power: gains must be positive and finite");
        inv_sum += 1.0 / gk;
        pow_sum += std::pow(gk, policy.eta - 1.0);
    }
    int worst = -1;
    double worst_p = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double gk = g[k];
        const double num = policy.alpha * gk * policy.max_power_w / noise_w + gk * inv_sum;
        const double den = std::pow(gk, 1.0 - policy.eta) * pow_sum;
        power[k] = noise_w / (policy.alpha * gk) * (num / den - 1.0);
        if (power[k] < worst_p) {
            worst_p = power[k];
            worst = static_cast<int>(k);
        }
    }
    return worst;
}

/// Checked variant: throws infeasible_draw when any P_k < -1e-9 Pmax.
inline std::vector<double> optimal_power(const SymmetricPolicy& policy, std::span<const double> g) {
    std::vector<double> p(g.size());
    const int worst = optimal_power_raw(policy, g, p);
    if (worst >= 0 && p[static_cast<std::size_t>(worst)] < -1e-9 * policy.max_power_w)
        throw infeasible_draw("optimal_power: negative power for user " + std::to_string(worst),
                              static_cast<std::size_t>(worst), p[static_cast<std::size_t>(worst)]);
    return p;
}

inline std::vector<double> optimal_power(const SymmetricPolicy& policy, const ChannelSample& s) {
    return optimal_power(policy, std::span<const double>(s.g));
}

inline double total_bandwidth(const SymmetricPolicy& policy) { return policy.num_users * policy.bandwidth_hz; }

/// QoS residual of the closed-form policy at per-user bandwidth W, averaged
/// over users and draws. Negative closed-form powers are clamped to zero
/// here (counted by the evaluator, never reached at Nt >= 8 in practice).
inline double symmetric_batch_residual(const ScenarioConfig& cfg, const UserQoS& qos, double bandwidth_hz,
                                       const Eigen::MatrixXd& gains) {
    const SymmetricPolicy policy = make_symmetric_policy(cfg, qos, bandwidth_hz);
    const auto k = static_cast<std::size_t>(gains.cols());
    std::vector<double> g(k), p(k);
    double acc = 0.0;
    for (Eigen::Index n = 0; n < gains.rows(); ++n) {
        for (std::size_t i = 0; i < k; ++i) g[i] = gains(n, static_cast<Eigen::Index>(i));
        optimal_power_raw(policy, g, p);
        for (std::size_t i = 0; i < k; ++i) {
            const double s = achievable_rate(bandwidth_hz, std::max(p[i], 0.0), policy.alpha, g[i], qos, cfg);
            acc += qos_lhs_sample(s, qos);
        }
    }
    return acc / static_cast<double>(gains.rows() * gains.cols()) - qos.qos_rhs();
}

struct SymmetricSolution {
    SymmetricPolicy policy;
    BandwidthSearchResult search;
    double initial_bandwidth_hz = 0.0;
};

/// Stochastic-approximation search for the per-user bandwidth W* at which
/// the closed-form policy meets the QoS constraint with equality. Starts from
/// the Shannon warm start; draws come from `rng`.
inline SymmetricSolution solve_bandwidth(const ScenarioConfig& cfg, const UserQoS& qos, Rng& rng,
                                         const BandwidthSearchOptions& opt = {}) {
    cfg.validate();
    if (!is_symmetric(cfg)) throw invalid_input("solve_bandwidth: scenario is not symmetric");
    const double alpha = large_scale_gain(cfg.users.front().distance_m);
    SymmetricSolution sol;
    sol.initial_bandwidth_hz = shannon_warm_start(alpha, cfg.max_power_w / cfg.num_users(), qos, cfg);

    BatchResidualFn residual = [&](const std::vector<double>& w, const Eigen::MatrixXd& g) {
        return std::vector<double>{symmetric_batch_residual(cfg, qos, w.front(), g)};
    };
    BatchSamplerFn sampler = [&](std::size_t n) { return sample_gain_batch(rng, cfg, n); };
    sol.search = stochastic_bandwidth_search({sol.initial_bandwidth_hz}, {qos.qos_rhs()}, residual, sampler, opt);
    sol.policy = make_symmetric_policy(cfg, qos, sol.search.bandwidth.front());
    return sol;
}

} // namespace urllc
