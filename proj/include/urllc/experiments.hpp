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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "urllc/channel.hpp"
#include "urllc/config.hpp"
#include "urllc/evaluator.hpp"
#include "urllc/qos.hpp"
#include "urllc/rng.hpp"
#include "urllc/symmetric.hpp"
#include "urllc/trainer.hpp"

namespace urllc {

/// Random-stream identifiers; every consumer draws from
/// Rng(mix_seed(master seed, stream)) so runs are reproducible and streams
/// never overlap.
namespace streams {
inline constexpr std::uint64_t drop = 1;
inline constexpr std::uint64_t solver = 2;
inline constexpr std::uint64_t train = 3;
inline constexpr std::uint64_t evaluate = 4;
inline constexpr std::uint64_t common_sample = 5;
inline constexpr std::uint64_t baseline = 6;
inline constexpr std::uint64_t study = 7;
// Offset separating per-K / per-trial sub-streams.
inline constexpr std::uint64_t stride = 1000003;
} // namespace streams

inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
    return mix_seed(master, stream * streams::stride + index);
}

/// Users of a K-user run. Road drops reuse one stream for every K, so the
/// first K users of a larger drop coincide with the K-user drop.
inline ScenarioConfig drop_scenario(const RunConfig& c, int num_users) {
    if (c.scenario_type == "symmetric") return make_symmetric(c.base, num_users);
    if (c.scenario_type == "road") {
        Rng rng(stream_seed(c.seed, streams::drop));
        return make_road(c.base, num_users, rng);
    }
    ScenarioConfig cfg = c.base;
    if (num_users != cfg.num_users())
        throw invalid_input("explicit scenario has " + std::to_string(cfg.num_users()) + " users, not " +
                            std::to_string(num_users));
    return cfg;
}

// --- sweep ----------------------------------------------------------------------

/// One (K, policy) result.
///   total_bandwidth_hz: bandwidth meeting every QoS constraint with equality
///                       on a common sample shared by all policies at this K
///   stderr_hz:          its standard error
///   stderr_vs_equal_hz: standard error of (this - equal_power), paired on the
///                       common sample; NaN when no equal-power row exists
///   raw_bandwidth_hz:   output of the policy's own procedure (stochastic
///                       bandwidth search, or training)
///   xi, xi_max:         QoS relative error at raw_bandwidth_hz on
///                       independent fresh draws
struct SweepRow {
    int num_users = 0;
    std::string policy;
    double total_bandwidth_hz = 0.0;
    double xi = 0.0;
    double xi_max = 0.0;
    double raw_bandwidth_hz = 0.0;
    double stderr_hz = 0.0;
    double stderr_vs_equal_hz = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    std::size_t iterations = 0; // search iterations or training frames
    std::size_t violation_draws = 0;
    bool qos_pass = false;
};

using ProgressFn = std::function<void(const std::string&)>;

inline std::vector<SweepRow> run_sweep(const RunConfig& c, const ProgressFn& progress = {}) {
    c.validate();
    std::vector<SweepRow> rows;
    for (int K : c.sweep_num_users) {
        const ScenarioConfig cfg = drop_scenario(c, K);
        const auto qos = make_qos(cfg);
        Rng crn(stream_seed(c.seed, streams::common_sample, static_cast<std::uint64_t>(K)));
        const Eigen::MatrixXd sample = sample_gain_batch(crn, cfg, c.eval_samples);

        std::vector<SweepRow> at_k;
        std::vector<CalibratedBandwidth> calib;
        auto finish = [&](SweepRow row, const PolicyHandle& handle) {
            Rng ev(stream_seed(c.seed, streams::evaluate, static_cast<std::uint64_t>(K)));
            const EvalReport rep = evaluate(handle, cfg, qos, c.eval_samples, ev, c.eval_tolerance);
            row.num_users = K;
            row.raw_bandwidth_hz = rep.total_bandwidth_hz;
            row.xi = rep.xi;
            row.xi_max = rep.xi_max;
            row.violation_draws = rep.violation_draws;
            row.qos_pass = rep.all_pass();
            const CalibratedBandwidth cb = calibrate_on_sample(handle, cfg, qos, sample);
            row.total_bandwidth_hz = cb.total_hz;
            row.stderr_hz = cb.stderr_hz();
            at_k.push_back(row);
            calib.push_back(cb);
            if (progress)
                progress("K=" + std::to_string(K) + " " + row.policy + ": " + std::to_string(row.total_bandwidth_hz) +
                         " Hz");
        };

        for (const auto& name : c.sweep_policies) {
            SweepRow row;
            row.policy = name;
            if (name == "optimal") {
                if (!is_symmetric(cfg)) throw invalid_input("sweep: the optimal policy needs a symmetric scenario");
                Rng rng(stream_seed(c.seed, streams::solver, static_cast<std::uint64_t>(K)));
                const SymmetricSolution sol = solve_bandwidth(cfg, qos.front(), rng, c.solver);
                row.converged = true;
                row.iterations = sol.search.iterations;
                finish(row, symmetric_optimal_handle(cfg, qos.front(), sol.policy.bandwidth_hz));
            } else if (name == "equal_power") {
                Rng rng(stream_seed(c.seed, streams::baseline, static_cast<std::uint64_t>(K)));
                const EqualPowerSolution sol = equal_power_policy(cfg, qos, rng, c.solver);
                row.converged = true;
                row.iterations = sol.search.iterations;
                finish(row, sol.policy);
            } else {
                Rng rng(stream_seed(c.seed, streams::train, static_cast<std::uint64_t>(K)));
                const TrainResult tr = train(make_training_problem(cfg), c.train, rng);
                row.converged = tr.converged;
                row.iterations = tr.frames;
                finish(row, learned_handle(cfg, tr.state.params, tr.state.bandwidth));
            }
        }
        const auto eq = std::find_if(at_k.begin(), at_k.end(), [](const SweepRow& r) { return r.policy == "equal_power"; });
        if (eq != at_k.end()) {
            const auto& ref = calib[static_cast<std::size_t>(eq - at_k.begin())];
            for (std::size_t i = 0; i < at_k.size(); ++i) at_k[i].stderr_vs_equal_hz = paired_stderr_hz(calib[i], ref);
        }
        rows.insert(rows.end(), at_k.begin(), at_k.end());
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "K,policy,total_bandwidth_hz,xi,xi_max,raw_bandwidth_hz,stderr_hz,stderr_vs_equal_hz,converged,iterations,"
          "violation_draws,qos_pass\n";
    os.precision(12);
    for (const auto& r : rows)
        os << r.num_users << ',' << r.policy << ',' << r.total_bandwidth_hz << ',' << r.xi << ',' << r.xi_max << ','
           << r.raw_bandwidth_hz << ',' << r.stderr_hz << ',' << r.stderr_vs_equal_hz << ',' << (r.converged ? 1 : 0)
           << ',' << r.iterations << ',' << r.violation_draws << ',' << (r.qos_pass ? 1 : 0) << '\n';
}

// --- convergence study ------------------------------------------------------------

struct StudyRow {
    std::size_t trial = 0;
    bool pretrained = false;
    std::size_t frames_to_converge = 0; // frames run; max_frames when unconverged
    bool converged = false;
    std::string status; // converged | unconverged | diverged | skipped
};

/// Users keep their drop but each moves move_m metres along the road in a
/// random direction, clamped to the road segment.
inline ScenarioConfig move_users(const ScenarioConfig& cfg, double move_m, Rng& rng) {
    ScenarioConfig out = cfg;
    for (auto& u : out.users) {
        const double dir = rng.uniform() < 0.5 ? -1.0 : 1.0;
        u.distance_m = std::clamp(u.distance_m + dir * move_m, cfg.road_min_m, cfg.cell_radius_m);
    }
    return out;
}

/// Called once per finished training run of the study with the run's row,
/// its scenario and final state. Invoked from worker threads, possibly
/// concurrently; the callee synchronises its own state.
using StudyObserver = std::function<void(const StudyRow&, const ScenarioConfig&, const TrainState&)>;

/// One trial: a fresh road drop trained from random weights (cold), then the
/// users move and training restarts from the cold run's weights, bandwidths
/// and multipliers (pre-trained). The pre-trained run restarts the step
/// schedule at t = 0 so the moved users' bandwidths can adapt quickly.
inline std::pair<StudyRow, StudyRow> run_study_trial(const RunConfig& c, std::size_t trial,
                                                     const StudyObserver& observer = {}) {
    Rng drop(stream_seed(c.seed, streams::study, 3 * trial));
    const ScenarioConfig cold_cfg = make_road(c.base, c.study_num_users, drop);
    StudyRow cold{trial, false, 0, false, ""}, warm{trial, true, 0, false, ""};

    Rng rng_cold(stream_seed(c.seed, streams::study, 3 * trial + 1));
    std::optional<TrainState> pre;
    try {
        const TrainResult r = train(make_training_problem(cold_cfg), c.train, rng_cold);
        cold.frames_to_converge = r.frames;
        cold.converged = r.converged;
        cold.status = r.converged ? "converged" : "unconverged";
        pre = r.state;
        if (observer) observer(cold, cold_cfg, r.state);
    } catch (const divergence_error&) {
        cold.frames_to_converge = c.train.max_frames;
        cold.status = "diverged";
    }
    if (!pre) {
        warm.frames_to_converge = c.train.max_frames;
        warm.status = "skipped";
        return {cold, warm};
    }
    pre->t = 0;
    const ScenarioConfig moved = move_users(cold_cfg, c.study_move_m, drop);
    Rng rng_warm(stream_seed(c.seed, streams::study, 3 * trial + 2));
    try {
        const TrainResult r = train(make_training_problem(moved), c.train, rng_warm, pre);
        warm.frames_to_converge = r.frames;
        warm.converged = r.converged;
        warm.status = r.converged ? "converged" : "unconverged";
        if (observer) observer(warm, moved, r.state);
    } catch (const divergence_error&) {
        warm.frames_to_converge = c.train.max_frames;
        warm.status = "diverged";
    }
    return {cold, warm};
}

/// All trials, spread over worker threads; rows are ordered by trial, cold
/// before pre-trained, independent of the thread count.
inline std::vector<StudyRow> run_convergence_study(const RunConfig& c, const ProgressFn& progress = {},
                                                   const StudyObserver& observer = {}) {
    c.validate();
    const std::size_t n = c.study_trials;
    std::vector<std::pair<StudyRow, StudyRow>> out(n);
    unsigned workers = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                out[i] = run_study_trial(c, i, observer);
                if (progress) {
                    std::lock_guard<std::mutex> lock(mu);
                    progress("trial " + std::to_string(i) + ": cold " + std::to_string(out[i].first.frames_to_converge) +
                             ", pre-trained " + std::to_string(out[i].second.frames_to_converge));
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    std::vector<StudyRow> rows;
    for (const auto& [a, b] : out) {
        rows.push_back(a);
        rows.push_back(b);
    }
    return rows;
}

/// Nearest-rank percentile: the smallest value with at least p% of the
/// sample at or below it (rank ceil(p/100 * n), 1-based).
inline double nearest_rank_percentile(std::vector<double> values, double p) {
    if (values.empty()) throw invalid_input("percentile of an empty sample");
    if (!(p > 0.0 && p <= 100.0)) throw invalid_input("percentile must lie in (0, 100]");
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
    return values[std::max<std::size_t>(rank, 1) - 1];
}

struct StudySummary {
    bool pretrained = false;
    std::size_t trials = 0;
    std::size_t converged = 0;
    double median = 0.0;
    double p99_9 = 0.0;
    double p99_99 = 0.0;
};

/// Percentiles over frames_to_converge; unconverged trials count at the
/// frame budget (right-censored).
inline std::vector<StudySummary> summarize_study(const std::vector<StudyRow>& rows) {
    std::vector<StudySummary> out;
    for (bool pre : {false, true}) {
        std::vector<double> v;
        StudySummary s;
        s.pretrained = pre;
        for (const auto& r : rows)
            if (r.pretrained == pre) {
                v.push_back(static_cast<double>(r.frames_to_converge));
                s.converged += r.converged ? 1 : 0;
            }
        s.trials = v.size();
        if (!v.empty()) {
            s.median = nearest_rank_percentile(v, 50.0);
            s.p99_9 = nearest_rank_percentile(v, 99.9);
            s.p99_99 = nearest_rank_percentile(v, 99.99);
        }
        out.push_back(s);
    }
    return out;
}

inline void write_study_csv(std::ostream& os, const std::vector<StudyRow>& rows) {
    os << "trial,pretrained,frames_to_converge,converged,status\n";
    for (const auto& r : rows)
        os << r.trial << ',' << (r.pretrained ? 1 : 0) << ',' << r.frames_to_converge << ',' << (r.converged ? 1 : 0)
           << ',' << r.status << '\n';
}

inline void write_study_summary_csv(std::ostream& os, const std::vector<StudySummary>& s) {
    os << "pretrained,trials,converged,median_frames,p99_9_frames,p99_99_frames\n";
    for (const auto& r : s)
        os << (r.pretrained ? 1 : 0) << ',' << r.trials << ',' << r.converged << ',' << r.median << ',' << r.p99_9
           << ',' << r.p99_99 << '\n';
}

} // namespace urllc
