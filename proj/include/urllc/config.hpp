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

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "urllc/bandwidth_search.hpp"
#include "urllc/channel.hpp"
#include "urllc/error.hpp"
#include "urllc/trainer.hpp"
#include "urllc/units.hpp"

namespace urllc {

/// Everything a CLI run needs, resolved from a JSON file plus flag
/// overrides. See configs/*.json and the README for the schema.
struct RunConfig {
    std::string scenario_type = "symmetric"; // symmetric | road | explicit
    int num_users = 4;
    ScenarioConfig base; // physical constants; users only for "explicit"
    std::uint64_t seed = 1;

    BandwidthSearchOptions solver;
    TrainConfig train;
    // Step schedule of a run started from a checkpoint: "resume" continues
    // from the saved counter t, "restart" starts again at t = 0.
    std::string warm_start_schedule = "resume";

    std::vector<int> sweep_num_users{2, 4, 6, 8};
    std::vector<std::string> sweep_policies{"optimal", "equal_power", "learned"};

    std::size_t study_trials = 100;
    int study_num_users = 8;
    double study_move_m = 2.0;
    unsigned threads = 0; // 0: hardware concurrency

    std::size_t eval_samples = 100000;
    double eval_tolerance = 0.01;

    void validate() const {
        if (scenario_type != "symmetric" && scenario_type != "road" && scenario_type != "explicit")
            throw invalid_input("config: scenario.type must be symmetric, road or explicit");
        if (scenario_type == "explicit") {
            if (base.users.empty()) throw invalid_input("config: explicit scenario needs scenario.users");
        } else if (num_users < 1) {
            throw invalid_input("config: scenario.num_users must be >= 1");
        }
        ScenarioConfig probe = base;
        if (probe.users.empty()) probe.users.assign(1, UserSpec{probe.cell_radius_m, probe.default_arrival_rate});
        probe.validate();
        if (!(base.road_min_m > 0.0 && base.road_min_m <= base.cell_radius_m))
            throw invalid_input("config: need 0 < road_min_m <= cell_radius_m");
        train.validate();
        if (warm_start_schedule != "resume" && warm_start_schedule != "restart")
            throw invalid_input("config: train.warm_start_schedule must be resume or restart");
        if (solver.batch_size < 1 || solver.max_iterations < 1 || solver.verification_draws < 1)
            throw invalid_input("config: solver sizes must be >= 1");
        if (sweep_num_users.empty()) throw invalid_input("config: sweep.num_users is empty");
        for (int k : sweep_num_users)
            if (k < 1) throw invalid_input("config: sweep.num_users entries must be >= 1");
        for (const auto& p : sweep_policies)
            if (p != "optimal" && p != "equal_power" && p != "learned")
                throw invalid_input("config: unknown sweep policy '" + p + "'");
        if (study_trials < 1 || study_num_users < 1) throw invalid_input("config: study sizes must be >= 1");
        if (!(study_move_m >= 0.0)) throw invalid_input("config: study.move_m must be non-negative");
        if (eval_samples < 2) throw invalid_input("config: evaluate.samples must be >= 2");
        if (!(eval_tolerance >= 0.0)) throw invalid_input("config: evaluate.tolerance must be non-negative");
    }
};

namespace detail {

inline void check_keys(const nlohmann::json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw invalid_input("config: '" + where + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw invalid_input("config: unknown key '" + where + "." + it.key() + "'");
}

template <class T>
void read(const nlohmann::json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input("config: bad value for '" + where + "." + key + "': " + e.what());
    }
}

} // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::read;
    RunConfig c;
    detail::check_keys(j, "<root>", {"scenario", "seed", "solver", "train", "sweep", "study", "evaluate"});
    read(j, "seed", c.seed, "<root>");

    if (j.contains("scenario")) {
        const auto& s = j.at("scenario");
        detail::check_keys(s, "scenario",
                           {"type", "num_users", "num_antennas", "max_power_dbm", "noise_psd_dbm_per_hz", "frame_ms",
                            "tx_duration_ms", "packet_bits", "delay_bound_frames", "tx_delay_frames",
                            "decode_delay_frames", "eps_max", "cell_radius_m", "road_min_m", "arrival_rate", "users"});
        auto& b = c.base;
        read(s, "type", c.scenario_type, "scenario");
        read(s, "num_users", c.num_users, "scenario");
        read(s, "num_antennas", b.num_antennas, "scenario");
        double dbm = units::watts_to_dbm(b.max_power_w);
        read(s, "max_power_dbm", dbm, "scenario");
        b.max_power_w = units::dbm_to_watts(dbm);
        double n0 = units::watts_to_dbm(b.noise_psd_w_per_hz);
        read(s, "noise_psd_dbm_per_hz", n0, "scenario");
        b.noise_psd_w_per_hz = units::dbm_to_watts(n0);
        double ms = b.frame_s * 1e3;
        read(s, "frame_ms", ms, "scenario");
        b.frame_s = ms * 1e-3;
        ms = b.tx_duration_s * 1e3;
        read(s, "tx_duration_ms", ms, "scenario");
        b.tx_duration_s = ms * 1e-3;
        read(s, "packet_bits", b.packet_bits, "scenario");
        read(s, "delay_bound_frames", b.delay_bound_frames, "scenario");
        read(s, "tx_delay_frames", b.tx_delay_frames, "scenario");
        read(s, "decode_delay_frames", b.decode_delay_frames, "scenario");
        read(s, "eps_max", b.eps_max, "scenario");
        read(s, "cell_radius_m", b.cell_radius_m, "scenario");
        read(s, "road_min_m", b.road_min_m, "scenario");
        read(s, "arrival_rate", b.default_arrival_rate, "scenario");
        if (s.contains("users")) {
            const auto& us = s.at("users");
            if (!us.is_array()) throw invalid_input("config: scenario.users must be an array");
            for (const auto& u : us) {
                detail::check_keys(u, "scenario.users[]", {"distance_m", "arrival_rate"});
                UserSpec spec{b.cell_radius_m, b.default_arrival_rate};
                read(u, "distance_m", spec.distance_m, "scenario.users[]");
                read(u, "arrival_rate", spec.arrival_rate, "scenario.users[]");
                b.users.push_back(spec);
            }
        }
    }

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        detail::check_keys(s, "solver",
                           {"batch_size", "max_iterations", "schedule_decay", "window", "window_tolerance",
                            "verification_draws", "verification_tolerance"});
        auto& o = c.solver;
        read(s, "batch_size", o.batch_size, "solver");
        read(s, "max_iterations", o.max_iterations, "solver");
        read(s, "schedule_decay", o.schedule_decay, "solver");
        read(s, "window", o.window, "solver");
        read(s, "window_tolerance", o.window_tolerance, "solver");
        read(s, "verification_draws", o.verification_draws, "solver");
        read(s, "verification_tolerance", o.verification_tolerance, "solver");
    }

    if (j.contains("train")) {
        const auto& s = j.at("train");
        detail::check_keys(s, "train",
                           {"batch_size", "eval_batch_size", "draws_per_frame", "iterations_per_frame", "max_frames", "schedule_decay",
                            "param_rate", "bandwidth_rate", "multiplier_rate", "zeta_tolerance", "xi_tolerance",
                            "confidence_z", "qos_margin", "debounce", "initial_multiplier", "max_param_step",
                            "warm_start_schedule"});
        auto& t = c.train;
        read(s, "batch_size", t.batch_size, "train");
        read(s, "eval_batch_size", t.eval_batch_size, "train");
        read(s, "draws_per_frame", t.draws_per_frame, "train");
        read(s, "iterations_per_frame", t.iterations_per_frame, "train");
        read(s, "max_frames", t.max_frames, "train");
        read(s, "schedule_decay", t.schedule_decay, "train");
        read(s, "param_rate", t.param_rate, "train");
        read(s, "bandwidth_rate", t.bandwidth_rate, "train");
        read(s, "multiplier_rate", t.multiplier_rate, "train");
        read(s, "zeta_tolerance", t.zeta_tolerance, "train");
        read(s, "xi_tolerance", t.xi_tolerance, "train");
        read(s, "confidence_z", t.confidence_z, "train");
        read(s, "qos_margin", t.qos_margin, "train");
        read(s, "debounce", t.debounce, "train");
        read(s, "max_param_step", t.max_param_step, "train");
        read(s, "warm_start_schedule", c.warm_start_schedule, "train");
        if (s.contains("initial_multiplier")) {
            if (s.at("initial_multiplier").is_null()) {
                t.initial_multiplier.reset();
            } else {
                double v = 0.0;
                read(s, "initial_multiplier", v, "train");
                t.initial_multiplier = v;
            }
        }
    }

    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        detail::check_keys(s, "sweep", {"num_users", "policies"});
        read(s, "num_users", c.sweep_num_users, "sweep");
        read(s, "policies", c.sweep_policies, "sweep");
    }
    if (j.contains("study")) {
        const auto& s = j.at("study");
        detail::check_keys(s, "study", {"trials", "num_users", "move_m", "threads"});
        read(s, "trials", c.study_trials, "study");
        read(s, "num_users", c.study_num_users, "study");
        read(s, "move_m", c.study_move_m, "study");
        read(s, "threads", c.threads, "study");
    }
    if (j.contains("evaluate")) {
        const auto& s = j.at("evaluate");
        detail::check_keys(s, "evaluate", {"samples", "tolerance"});
        read(s, "samples", c.eval_samples, "evaluate");
        read(s, "tolerance", c.eval_tolerance, "evaluate");
    }
    if (c.scenario_type == "explicit") c.num_users = static_cast<int>(c.base.users.size());
    c.validate();
    return c;
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw invalid_input("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

/// Fully resolved snapshot (same schema as the input file).
inline nlohmann::json to_json(const RunConfig& c) {
    const auto& b = c.base;
    nlohmann::json users = nlohmann::json::array();
    for (const auto& u : b.users) users.push_back({{"distance_m", u.distance_m}, {"arrival_rate", u.arrival_rate}});
    nlohmann::json scenario = {{"type", c.scenario_type},
                               {"num_users", c.num_users},
                               {"num_antennas", b.num_antennas},
                               {"max_power_dbm", units::watts_to_dbm(b.max_power_w)},
                               {"noise_psd_dbm_per_hz", units::watts_to_dbm(b.noise_psd_w_per_hz)},
                               {"frame_ms", b.frame_s * 1e3},
                               {"tx_duration_ms", b.tx_duration_s * 1e3},
                               {"packet_bits", b.packet_bits},
                               {"delay_bound_frames", b.delay_bound_frames},
                               {"tx_delay_frames", b.tx_delay_frames},
                               {"decode_delay_frames", b.decode_delay_frames},
                               {"eps_max", b.eps_max},
                               {"cell_radius_m", b.cell_radius_m},
                               {"road_min_m", b.road_min_m},
                               {"arrival_rate", b.default_arrival_rate}};
    if (c.scenario_type == "explicit") scenario["users"] = users;
    const auto& o = c.solver;
    const auto& t = c.train;
    nlohmann::json train = {{"batch_size", t.batch_size},
                            {"eval_batch_size", t.eval_batch_size},
                            {"draws_per_frame", t.draws_per_frame},
                            {"iterations_per_frame", t.iterations_per_frame},
                            {"max_frames", t.max_frames},
                            {"schedule_decay", t.schedule_decay},
                            {"param_rate", t.param_rate},
                            {"bandwidth_rate", t.bandwidth_rate},
                            {"multiplier_rate", t.multiplier_rate},
                            {"zeta_tolerance", t.zeta_tolerance},
                            {"xi_tolerance", t.xi_tolerance},
                            {"confidence_z", t.confidence_z},
                            {"qos_margin", t.qos_margin},
                            {"debounce", t.debounce},
                            {"max_param_step", t.max_param_step},
                            {"warm_start_schedule", c.warm_start_schedule}};
    train["initial_multiplier"] = t.initial_multiplier ? nlohmann::json(*t.initial_multiplier) : nlohmann::json(nullptr);
    return {{"scenario", scenario},
            {"seed", c.seed},
            {"solver",
             {{"batch_size", o.batch_size},
              {"max_iterations", o.max_iterations},
              {"schedule_decay", o.schedule_decay},
              {"window", o.window},
              {"window_tolerance", o.window_tolerance},
              {"verification_draws", o.verification_draws},
              {"verification_tolerance", o.verification_tolerance}}},
            {"train", train},
            {"sweep", {{"num_users", c.sweep_num_users}, {"policies", c.sweep_policies}}},
            {"study",
             {{"trials", c.study_trials},
              {"num_users", c.study_num_users},
              {"move_m", c.study_move_m},
              {"threads", c.threads}}},
            {"evaluate", {{"samples", c.eval_samples}, {"tolerance", c.eval_tolerance}}}};
}

} // namespace urllc
