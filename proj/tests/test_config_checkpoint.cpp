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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracle_values.hpp"
#include "urllc/checkpoint.hpp"
#include "urllc/config.hpp"

using namespace urllc;
using nlohmann::json;

namespace {

std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "urllc_test_config_checkpoint";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

TrainState small_state() {
    Rng rng(1);
    TrainState s;
    s.params = init_power_net(rng, 3, 8);
    s.bandwidth = {1.5e5, 2.25e5, 1.0 / 3.0};
    s.multiplier = {0.0, 1.25, 7e3};
    s.t = 420;
    return s;
}

} // namespace

TEST(Config, EmptyDocumentGivesReferenceDefaults) {
    const RunConfig c = parse_config(json::object());
    EXPECT_EQ(c.scenario_type, "symmetric");
    EXPECT_NEAR(c.base.max_power_w, oracle::max_power_w, 1e-12);
    EXPECT_NEAR(c.base.noise_psd_w_per_hz / oracle::noise_psd_w_per_hz, 1.0, 1e-12);
    EXPECT_EQ(c.train.batch_size, 100u);
    EXPECT_EQ(c.solver.max_iterations, 1000u);
    EXPECT_EQ(c.eval_samples, 100000u);
    EXPECT_EQ(c.study_trials, 100u);
    EXPECT_EQ(c.warm_start_schedule, "resume");
    ASSERT_TRUE(c.train.initial_multiplier.has_value());
}

TEST(Config, ReadsUnitsAndSections) {
    const json j = json::parse(R"({
        "seed": 77,
        "scenario": {"type": "explicit", "max_power_dbm": 40, "frame_ms": 0.2, "tx_duration_ms": 0.1,
                     "users": [{"distance_m": 100}, {"distance_m": 200, "arrival_rate": 0.5}]},
        "solver": {"batch_size": 64, "max_iterations": 500},
        "train": {"param_rate": 5, "draws_per_frame": 4, "qos_margin": 0.02, "initial_multiplier": null,
                  "warm_start_schedule": "restart"},
        "sweep": {"num_users": [1, 3], "policies": ["learned"]},
        "study": {"trials": 7, "move_m": 1.5, "threads": 2},
        "evaluate": {"samples": 1234, "tolerance": 0.02}
    })");
    const RunConfig c = parse_config(j);
    EXPECT_EQ(c.seed, 77u);
    EXPECT_NEAR(c.base.max_power_w, 10.0, 1e-12);
    EXPECT_NEAR(c.base.frame_s, 2e-4, 1e-18);
    EXPECT_NEAR(c.base.tx_duration_s, 1e-4, 1e-18);
    ASSERT_EQ(c.base.users.size(), 2u);
    EXPECT_EQ(c.num_users, 2);
    EXPECT_DOUBLE_EQ(c.base.users[0].arrival_rate, 0.2);
    EXPECT_DOUBLE_EQ(c.base.users[1].arrival_rate, 0.5);
    EXPECT_EQ(c.solver.batch_size, 64u);
    EXPECT_DOUBLE_EQ(c.train.param_rate, 5.0);
    EXPECT_EQ(c.train.draws_per_frame, 4u);
    EXPECT_DOUBLE_EQ(c.train.qos_margin, 0.02);
    EXPECT_FALSE(c.train.initial_multiplier.has_value());
    EXPECT_EQ(c.warm_start_schedule, "restart");
    EXPECT_EQ(c.sweep_num_users, (std::vector<int>{1, 3}));
    EXPECT_EQ(c.study_trials, 7u);
    EXPECT_EQ(c.threads, 2u);
    EXPECT_EQ(c.eval_samples, 1234u);
}

TEST(Config, RejectsUnknownKeysWithTheirPath) {
    for (const char* text : {R"({"sede": 1})", R"({"scenario": {"num_user": 3}})", R"({"train": {"lr": 1}})",
                             R"({"scenario": {"type": "explicit", "users": [{"dist": 3}]}})"}) {
        try {
            parse_config(json::parse(text));
            FAIL() << text;
        } catch (const invalid_input& e) {
            EXPECT_NE(std::string(e.what()).find("unknown key"), std::string::npos) << e.what();
        }
    }
}

TEST(Config, RejectsInvalidValues) {
    for (const char* text : {
             R"({"scenario": {"type": "ring"}})",
             R"({"scenario": {"type": "explicit"}})",
             R"({"scenario": {"num_users": 0}})",
             R"({"scenario": {"delay_bound_frames": 2}})",
             R"({"scenario": {"road_min_m": 300}})",
             R"({"train": {"batch_size": "big"}})",
             R"({"train": {"initial_multiplier": "one"}})",
             R"({"train": {"warm_start_schedule": "sometimes"}})",
             R"({"sweep": {"policies": ["oracle"]}})",
             R"({"sweep": {"num_users": []}})",
             R"({"evaluate": {"samples": 1}})",
             R"({"study": {"move_m": -1}})",
             R"([1, 2])",
         })
        EXPECT_THROW(parse_config(json::parse(text)), invalid_input) << text;
}

TEST(Config, JsonRoundTrip) {
    const json j = json::parse(R"({"seed": 5, "scenario": {"type": "explicit", "users": [{"distance_m": 90}]},
                                   "train": {"initial_multiplier": null, "max_frames": 17}})");
    const RunConfig a = parse_config(j);
    const RunConfig b = parse_config(to_json(a));
    EXPECT_EQ(to_json(a), to_json(b));
    EXPECT_EQ(b.base.users, a.base.users);
    EXPECT_EQ(b.train.max_frames, 17u);
    EXPECT_FALSE(b.train.initial_multiplier.has_value());
    EXPECT_NEAR(b.base.max_power_w, a.base.max_power_w, 1e-12);
}

TEST(Config, LoadFileErrors) {
    EXPECT_THROW(load_config_file(temp_path("absent.json")), invalid_input);
    const std::string bad = temp_path("bad.json");
    std::ofstream(bad) << "{ not json";
    EXPECT_THROW(load_config_file(bad), invalid_input);
    const std::string ok = temp_path("ok.json");
    std::ofstream(ok) << R"({"seed": 9})";
    EXPECT_EQ(load_config_file(ok).seed, 9u);
}

TEST(Checkpoint, RoundTripIsExact) {
    const TrainState s = small_state();
    const std::string path = temp_path("net.mlp");
    save_checkpoint(path, s);
    const TrainState r = load_checkpoint(path);
    EXPECT_EQ(r.params.flatten(), s.params.flatten());
    EXPECT_EQ(r.params.input_scale, s.params.input_scale);
    EXPECT_EQ(r.bandwidth, s.bandwidth);
    EXPECT_EQ(r.multiplier, s.multiplier);
    EXPECT_EQ(r.t, s.t);
}

TEST(Checkpoint, CorruptSidecarsAreRejected) {
    const TrainState s = small_state();
    const std::string path = temp_path("corrupt.mlp");
    save_checkpoint(path, s);
    const std::string side = checkpoint_sidecar_path(path);
    auto write_side = [&](const std::string& text) { std::ofstream(side) << text; };

    write_side("{ truncated");
    EXPECT_THROW(load_checkpoint(path), invalid_input);
    write_side(R"({"format": "something-else", "version": 1, "bandwidth_hz": [1,1,1], "multiplier": [0,0,0], "t": 0})");
    EXPECT_THROW(load_checkpoint(path), invalid_input);
    write_side(R"({"format": "urllc-train-state", "version": 1, "bandwidth_hz": [1,1], "multiplier": [0,0,0], "t": 0})");
    EXPECT_THROW(load_checkpoint(path), invalid_input);
    write_side(R"({"format": "urllc-train-state", "version": 1, "bandwidth_hz": [1,-1,1], "multiplier": [0,0,0], "t": 0})");
    EXPECT_THROW(load_checkpoint(path), invalid_input);
    write_side(R"({"format": "urllc-train-state", "version": 1, "bandwidth_hz": [1,1,1], "multiplier": [0,-2,0], "t": 0})");
    EXPECT_THROW(load_checkpoint(path), invalid_input);
    write_side(R"({"format": "urllc-train-state", "version": 1, "bandwidth_hz": [1,1,1], "multiplier": [0,0,0]})");
    EXPECT_THROW(load_checkpoint(path), invalid_input);
    std::filesystem::remove(side);
    EXPECT_THROW(load_checkpoint(path), invalid_input);
    EXPECT_THROW(load_checkpoint(temp_path("never_written.mlp")), invalid_input);
}
