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

#include <cmath>
#include <numbers>
#include <vector>

#include "urllc/channel.hpp"
#include "urllc/error.hpp"

namespace urllc {

/// Per-user QoS targets derived from (a_k, D^q_max, eps_max).
struct UserQoS {
    double theta = 0.0;        // QoS exponent
    double eff_bandwidth = 0.0; // packets/frame
    double eps_c = 0.0;        // decoding error target
    double eps_q = 0.0;        // queueing violation target
    int queue_budget_frames = 0;
    double qinv_c = 0.0;       // Q^{-1}(eps_c)

    /// Right-hand side of the linearised QoS constraint, exp(-theta * B^E).
    double qos_rhs() const { return std::exp(-theta * eff_bandwidth); }
};

/// Gaussian tail probability Q(z) = P{N(0,1) > z}.
inline double gaussian_q(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// Inverse Gaussian Q-function on (0, 0.5), Newton steps safeguarded by a
/// bisection bracket on erfc.
inline double gaussian_q_inv(double p) {
    if (!(p > 0.0 && p < 0.5)) throw invalid_input("gaussian_q_inv: p must lie in (0, 0.5)");
    double lo = 0.0, hi = 40.0;
    double z = std::sqrt(-2.0 * std::log(p)); // upper-ish starting guess
    for (int it = 0; it < 200; ++it) {
        const double f = gaussian_q(z) - p;
        if (f > 0.0) lo = z; else hi = z;
        if (f == 0.0 || hi - lo < 1e-15 * hi) break;
        const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        double next = z + f / pdf;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - z) <= 1e-16 * z) { z = next; break; }
        z = next;
    }
    return z;
}

/// theta = ln[1 - ln(eps_max/2) / (a D^q_max)].
inline double qos_exponent(double arrival_rate, int queue_budget_frames, double eps_max) {
    if (!(arrival_rate > 0.0)) throw invalid_input("qos_exponent: arrival rate must be positive");
    if (queue_budget_frames < 1) throw invalid_input("qos_exponent: queueing budget must be >= 1 frame");
    if (!(eps_max > 0.0 && eps_max < 1.0)) throw invalid_input("qos_exponent: eps_max must lie in (0, 1)");
    return std::log1p(-std::log(eps_max / 2.0) / (arrival_rate * queue_budget_frames));
}

/// Effective bandwidth of a Poisson source, (a/theta)(e^theta - 1).
inline double effective_bandwidth(double arrival_rate, double theta) {
    if (!(arrival_rate > 0.0)) throw invalid_input("effective_bandwidth: arrival rate must be positive");
    if (!(theta > 0.0)) throw invalid_input("effective_bandwidth: theta must be positive");
    if (theta < 1e-8) return arrival_rate * (1.0 + theta / 2.0 + theta * theta / 6.0);
    return arrival_rate * std::expm1(theta) / theta;
}

/// Even split eps_c = eps_q = eps_max / 2.
inline UserQoS make_user_qos(double arrival_rate, int queue_budget_frames, double eps_max) {
    UserQoS q;
    q.queue_budget_frames = queue_budget_frames;
    q.theta = qos_exponent(arrival_rate, queue_budget_frames, eps_max);
    q.eff_bandwidth = effective_bandwidth(arrival_rate, q.theta);
    q.eps_c = eps_max / 2.0;
    q.eps_q = eps_max / 2.0;
    q.qinv_c = gaussian_q_inv(q.eps_c);
    return q;
}

inline std::vector<UserQoS> make_qos(const ScenarioConfig& cfg) {
    cfg.validate();
    std::vector<UserQoS> out;
    out.reserve(cfg.users.size());
    for (const auto& u : cfg.users)
        out.push_back(make_user_qos(u.arrival_rate, cfg.queue_budget_frames(), cfg.eps_max));
    return out;
}

/// V = 1 - (1 + snr)^-2. Diagnostics only; the rate model uses V = 1.
inline double channel_dispersion(double snr) {
    if (!(snr >= 0.0)) throw invalid_input("channel_dispersion: snr must be non-negative");
    const double r = 1.0 / (1.0 + snr);
    return 1.0 - r * r;
}

namespace detail {
inline double nats_to_packets(double bandwidth_hz, const ScenarioConfig& cfg) {
    return cfg.tx_duration_s * bandwidth_hz / (cfg.packet_bits * std::numbers::ln2);
}
inline double snr(double bandwidth_hz, double power_w, double alpha, double g, const ScenarioConfig& cfg) {
    return alpha * g * power_w / (cfg.noise_psd_w_per_hz * bandwidth_hz);
}
} // namespace detail

/// Finite-blocklength service rate (packets/frame) with V = 1:
///   s = (tau W / (u ln 2)) [ln(1 + alpha g P / (N0 W)) - Q^{-1}(eps_c) / sqrt(tau W)].
/// Not clamped; deep fades give s < 0.
inline double achievable_rate(double bandwidth_hz, double power_w, double alpha, double g,
                              const UserQoS& qos, const ScenarioConfig& cfg) {
    if (!(bandwidth_hz > 0.0)) throw invalid_input("achievable_rate: bandwidth must be positive");
    const double blocklen = cfg.tx_duration_s * bandwidth_hz;
    return detail::nats_to_packets(bandwidth_hz, cfg) *
           (std::log1p(detail::snr(bandwidth_hz, power_w, alpha, g, cfg)) - qos.qinv_c / std::sqrt(blocklen));
}

/// Same rate with the exact dispersion V(snr) instead of V = 1.
inline double achievable_rate_exact_dispersion(double bandwidth_hz, double power_w, double alpha, double g,
                                               const UserQoS& qos, const ScenarioConfig& cfg) {
    if (!(bandwidth_hz > 0.0)) throw invalid_input("achievable_rate: bandwidth must be positive");
    const double snr = detail::snr(bandwidth_hz, power_w, alpha, g, cfg);
    const double blocklen = cfg.tx_duration_s * bandwidth_hz;
    return detail::nats_to_packets(bandwidth_hz, cfg) *
           (std::log1p(snr) - std::sqrt(channel_dispersion(snr) / blocklen) * qos.qinv_c);
}

/// ds/dP = tau alpha g / (u ln2 N0 (1 + snr)).
inline double rate_d_power(double bandwidth_hz, double power_w, double alpha, double g, const ScenarioConfig& cfg) {
    const double snr = detail::snr(bandwidth_hz, power_w, alpha, g, cfg);
    return cfg.tx_duration_s * alpha * g /
           (cfg.packet_bits * std::numbers::ln2 * cfg.noise_psd_w_per_hz * (1.0 + snr));
}

/// ds/dW = (tau / (u ln2)) [ln(1+snr) - snr/(1+snr) - Q^{-1}(eps_c) / (2 sqrt(tau W))].
inline double rate_d_bandwidth(double bandwidth_hz, double power_w, double alpha, double g,
                               const UserQoS& qos, const ScenarioConfig& cfg) {
    const double snr = detail::snr(bandwidth_hz, power_w, alpha, g, cfg);
    const double blocklen = cfg.tx_duration_s * bandwidth_hz;
    return cfg.tx_duration_s / (cfg.packet_bits * std::numbers::ln2) *
           (std::log1p(snr) - snr / (1.0 + snr) - qos.qinv_c / (2.0 * std::sqrt(blocklen)));
}

struct RateWithDerivatives {
    double rate = 0.0; // s
    double d_power = 0.0;
    double d_bandwidth = 0.0;
};

/// achievable_rate, rate_d_power and rate_d_bandwidth in one pass.
inline RateWithDerivatives rate_with_derivatives(double bandwidth_hz, double power_w, double alpha, double g,
                                                 const UserQoS& qos, const ScenarioConfig& cfg) {
    if (!(bandwidth_hz > 0.0)) throw invalid_input("achievable_rate: bandwidth must be positive");
    const double snr = detail::snr(bandwidth_hz, power_w, alpha, g, cfg);
    const double blocklen = cfg.tx_duration_s * bandwidth_hz;
    const double scale = cfg.tx_duration_s / (cfg.packet_bits * std::numbers::ln2);
    const double ln1p = std::log1p(snr);
    const double penalty = qos.qinv_c / std::sqrt(blocklen);
    RateWithDerivatives r;
    r.rate = scale * bandwidth_hz * (ln1p - penalty);
    r.d_power = scale * alpha * g / (cfg.noise_psd_w_per_hz * (1.0 + snr));
    r.d_bandwidth = scale * (ln1p - snr / (1.0 + snr) - 0.5 * penalty);
    return r;
}

/// Per-draw integrand of the QoS constraint, exp(-theta s).
inline double qos_lhs_sample(double rate, const UserQoS& qos) { return std::exp(-qos.theta * rate); }

/// Bandwidth at which the dispersion-free Shannon rate at mean SNR
/// (g = Nt, equal power share) equals B^E. Used as a warm start.
inline double shannon_warm_start(double alpha, double power_w, const UserQoS& qos, const ScenarioConfig& cfg) {
    const double target = qos.eff_bandwidth;
    const double mean_g = static_cast<double>(cfg.num_antennas);
    auto rate = [&](double w) { return detail::nats_to_packets(w, cfg) * std::log1p(detail::snr(w, power_w, alpha, mean_g, cfg)); };
    double lo = 1e-3, hi = 1.0;
    while (rate(hi) < target) {
        hi *= 2.0;
        if (hi > 1e15) throw invalid_input("shannon_warm_start: target rate unreachable");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (rate(mid) < target ? lo : hi) = mid;
    }
    return hi;
}

} // namespace urllc
