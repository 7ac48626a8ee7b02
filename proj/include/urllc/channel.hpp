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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "urllc/error.hpp"
#include "urllc/rng.hpp"
#include "urllc/units.hpp"

namespace urllc {

struct UserSpec {
    double distance_m = 250.0;
    double arrival_rate = 0.2; // packets/frame, Poisson

    bool operator==(const UserSpec&) const = default;
};

/// Physical-layer and QoS constants of one scenario drop. Defaults are the
/// reference simulation parameters; `users` is empty until a drop is made.
struct ScenarioConfig {
    int num_antennas = 8;
    double max_power_w = units::dbm_to_watts(43.0);
    double noise_psd_w_per_hz = units::dbm_to_watts(-173.0);
    double frame_s = 1e-4;
    double tx_duration_s = 5e-5;
    double packet_bits = 160.0;
    int delay_bound_frames = 10;
    int tx_delay_frames = 1;
    int decode_delay_frames = 1;
    double eps_max = 1e-5;

    // Drop geometry used by make_symmetric / make_road.
    double cell_radius_m = 250.0;
    double road_min_m = 50.0;
    double default_arrival_rate = 0.2;

    std::vector<UserSpec> users;
    std::uint64_t seed = 1;

    int num_users() const { return static_cast<int>(users.size()); }
    int queue_budget_frames() const { return delay_bound_frames - tx_delay_frames - decode_delay_frames; }

    void validate() const {
        if (users.empty()) throw invalid_input("scenario has no users");
        if (num_antennas < 1) throw invalid_input("num_antennas must be >= 1");
        if (!(max_power_w > 0.0)) throw invalid_input("max power must be positive");
        if (!(noise_psd_w_per_hz > 0.0)) throw invalid_input("noise PSD must be positive");
        if (!(tx_duration_s > 0.0)) throw invalid_input("DL transmission duration must be positive");
        if (!(frame_s >= tx_duration_s)) throw invalid_input("frame shorter than DL transmission");
        if (!(packet_bits > 0.0)) throw invalid_input("packet size must be positive");
        if (queue_budget_frames() < 1)
            throw invalid_input("delay bound leaves no queueing budget (Dmax - Dt - Dc < 1)");
        if (!(eps_max > 0.0 && eps_max < 1.0)) throw invalid_input("eps_max must lie in (0, 1)");
        for (const auto& u : users) {
            if (!(u.distance_m > 0.0)) throw invalid_input("user distance must be positive");
            if (!(u.arrival_rate > 0.0)) throw invalid_input("user arrival rate must be positive");
        }
    }
};

/// Path loss 35.3 + 37.6 lg(d) dB, returned as a linear gain.
inline double large_scale_gain(double distance_m) {
    if (!(distance_m > 0.0)) throw invalid_input("large_scale_gain: distance must be positive");
    return std::pow(10.0, -(35.3 + 37.6 * std::log10(distance_m)) / 10.0);
}

inline std::vector<double> large_scale_gains(const ScenarioConfig& cfg) {
    std::vector<double> out;
    out.reserve(cfg.users.size());
    for (const auto& u : cfg.users) out.push_back(large_scale_gain(u.distance_m));
    return out;
}

/// One frame's small-scale gains, one entry per user.
struct ChannelSample {
    std::vector<double> g;
};

/// Beamforming gain of an Nt-antenna MRT link with unit-power Rayleigh
/// taps: sum of Nt unit exponentials, i.e. Gamma(Nt, 1).
inline ChannelSample sample_gains(Rng& rng, const ScenarioConfig& cfg) {
    ChannelSample s;
    s.g.resize(cfg.users.size());
    for (auto& v : s.g) v = rng.gamma_integer_shape(cfg.num_antennas);
    return s;
}

/// n draws, one per row (user-major within a row, same order as sample_gains).
inline Eigen::MatrixXd sample_gain_batch(Rng& rng, const ScenarioConfig& cfg, std::size_t n) {
    const auto k = static_cast<Eigen::Index>(cfg.users.size());
    Eigen::MatrixXd g(static_cast<Eigen::Index>(n), k);
    for (Eigen::Index r = 0; r < g.rows(); ++r)
        for (Eigen::Index c = 0; c < k; ++c) g(r, c) = rng.gamma_integer_shape(cfg.num_antennas);
    return g;
}

/// All users at the cell edge with the template's arrival rate.
inline ScenarioConfig make_symmetric(const ScenarioConfig& base, int num_users) {
    if (num_users < 1) throw invalid_input("make_symmetric: need at least one user");
    ScenarioConfig cfg = base;
    cfg.users.assign(static_cast<std::size_t>(num_users),
                     UserSpec{base.cell_radius_m, base.default_arrival_rate});
    return cfg;
}

/// Users dropped i.i.d. uniformly along a road, distances in
/// [road_min_m, cell_radius_m].
inline ScenarioConfig make_road(const ScenarioConfig& base, int num_users, Rng& rng) {
    if (num_users < 1) throw invalid_input("make_road: need at least one user");
    ScenarioConfig cfg = base;
    cfg.users.clear();
    for (int k = 0; k < num_users; ++k)
        cfg.users.push_back({rng.uniform(base.road_min_m, base.cell_radius_m), base.default_arrival_rate});
    return cfg;
}

inline bool is_symmetric(const ScenarioConfig& cfg) {
    for (const auto& u : cfg.users)
        if (!(u == cfg.users.front())) return false;
    return !cfg.users.empty();
}

} // namespace urllc
