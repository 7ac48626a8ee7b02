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

#include <fstream>
#include <string>
#include <vector>

#include "urllc/error.hpp"
#include "urllc/mlp.hpp"
#include "urllc/trainer.hpp"

namespace urllc {

/// A training checkpoint is two files: the network at `path` (text format of
/// save_mlp) and a JSON sidecar at `path + ".state.json"` holding
///   {"format": "urllc-train-state", "version": 1,
///    "bandwidth_hz": [...], "multiplier": [...], "t": <int>}
inline std::string checkpoint_sidecar_path(const std::string& path) { return path + ".state.json"; }

inline void save_checkpoint(const std::string& path, const TrainState& state) {
    save_mlp_file(path, state.params);
    nlohmann::json j = {{"format", "urllc-train-state"},
                        {"version", 1},
                        {"bandwidth_hz", state.bandwidth},
                        {"multiplier", state.multiplier},
                        {"t", state.t}};
    std::ofstream os(checkpoint_sidecar_path(path));
    if (!os) throw invalid_input("cannot open '" + checkpoint_sidecar_path(path) + "' for writing");
    os << j.dump(2) << '\n';
}

inline TrainState load_checkpoint(const std::string& path) {
    TrainState st;
    st.params = load_mlp_file(path);
    const std::string side = checkpoint_sidecar_path(path);
    std::ifstream is(side);
    if (!is) throw invalid_input("checkpoint sidecar '" + side + "' is missing");
    try {
        nlohmann::json j;
        is >> j;
        if (j.at("format").get<std::string>() != "urllc-train-state" || j.at("version").get<int>() != 1)
            throw invalid_input("checkpoint sidecar '" + side + "' has an unsupported format");
        st.bandwidth = j.at("bandwidth_hz").get<std::vector<double>>();
        st.multiplier = j.at("multiplier").get<std::vector<double>>();
        st.t = j.at("t").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input("checkpoint sidecar '" + side + "' is corrupt: " + e.what());
    }
    const auto k = static_cast<std::size_t>(st.params.num_outputs());
    if (st.bandwidth.size() != k || st.multiplier.size() != k)
        throw invalid_input("checkpoint sidecar '" + side + "' does not match the network's user count");
    for (double w : st.bandwidth)
        if (!(w > 0.0) || !std::isfinite(w)) throw invalid_input("checkpoint: bandwidths must be positive");
    for (double l : st.multiplier)
        if (!(l >= 0.0) || !std::isfinite(l)) throw invalid_input("checkpoint: multipliers must be non-negative");
    return st;
}

} // namespace urllc
