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
#include <cstddef>
#include <deque>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "urllc/error.hpp"

namespace urllc {

/// Per-coordinate QoS residual mean_n exp(-theta s) - exp(-theta B^E) for a
/// bandwidth vector W evaluated on a batch of gain draws (rows).
using BatchResidualFn = std::function<std::vector<double>(const std::vector<double>& bandwidth,
                                                          const Eigen::MatrixXd& gains)>;
using BatchSamplerFn = std::function<Eigen::MatrixXd(std::size_t rows)>;

struct BandwidthSearchOptions {
    std::size_t batch_size = 100;
    std::size_t max_iterations = 1000;
    double schedule_decay = 0.1;          // phi(t) = c / (1 + decay t)
    double first_step_fraction = 0.1;     // |first move| <= this * W0
    std::size_t pilot_draws = 2000;       // slope estimate for the step gain c
    std::size_t window = 50;
    double window_tolerance = 1e-3;       // mean |dW| / W over the window
    std::size_t verification_draws = 100000;
    double verification_tolerance = 0.01; // |residual| / rhs
    double floor_hz = 1.0;
};

struct BandwidthTraceRow {
    std::size_t t = 0;
    std::vector<double> bandwidth;
    std::vector<double> residual;
};

struct BandwidthSearchResult {
    std::vector<double> bandwidth;
    std::vector<BandwidthTraceRow> trace;
    std::vector<double> verified_relative_residual;
    std::size_t iterations = 0;
    std::vector<double> step_gain;
};

namespace detail {

inline bool verified(const std::vector<double>& rel, double tol) {
    return std::all_of(rel.begin(), rel.end(), [tol](double r) { return std::abs(r) < tol; });
}

inline std::vector<double> bandwidth_column(const std::vector<BandwidthTraceRow>& trace) {
    std::vector<double> w;
    w.reserve(trace.size());
    for (const auto& row : trace) w.push_back(row.bandwidth.front());
    return w;
}

} // namespace detail

/// Projected stochastic approximation
///   W^(t+1) = max(floor, W^(t) + phi(t) * residual(W^(t); fresh batch))
/// run independently on every coordinate. The QoS residual decreases in W,
/// so a violated constraint (residual > 0) grows the bandwidth.
///
/// The gain c of phi(t) = c / (1 + decay t) is set per coordinate from a
/// common-random-number slope estimate at W0 (one Newton step) and capped so
/// the first move is at most first_step_fraction * W0. A coordinate is done
/// once the windowed mean |update| drops below window_tolerance * W; the whole
/// vector is then checked on verification_draws fresh draws.
inline BandwidthSearchResult stochastic_bandwidth_search(std::vector<double> bandwidth, const std::vector<double>& rhs,
                                                         const BatchResidualFn& residual_fn,
                                                         const BatchSamplerFn& sampler,
                                                         const BandwidthSearchOptions& opt) {
    const std::size_t dim = bandwidth.size();
    if (dim == 0 || rhs.size() != dim) throw invalid_input("bandwidth search: dimension mismatch");
    for (double w : bandwidth)
        if (!(w > 0.0)) throw invalid_input("bandwidth search: initial bandwidth must be positive");

    BandwidthSearchResult out;

    // Step gain from a two-sided slope on a shared pilot batch.
    {
        const Eigen::MatrixXd pilot = sampler(opt.pilot_draws);
        constexpr double h = 0.01;
        std::vector<double> up = bandwidth, down = bandwidth;
        for (std::size_t i = 0; i < dim; ++i) {
            up[i] *= 1.0 + h;
            down[i] *= 1.0 - h;
        }
        const auto r0 = residual_fn(bandwidth, pilot);
        const auto rp = residual_fn(up, pilot);
        const auto rm = residual_fn(down, pilot);
        out.step_gain.resize(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            const double slope = (rp[i] - rm[i]) / (2.0 * h * bandwidth[i]);
            double gain = slope < 0.0 ? -1.0 / slope : opt.first_step_fraction * bandwidth[i] / rhs[i];
            if (std::abs(r0[i]) > 0.0) gain = std::min(gain, opt.first_step_fraction * bandwidth[i] / std::abs(r0[i]));
            out.step_gain[i] = gain;
        }
    }

    std::vector<std::deque<double>> moves(dim);
    std::vector<double> move_sums(dim, 0.0);

    for (std::size_t t = 0; t < opt.max_iterations; ++t) {
        const Eigen::MatrixXd batch = sampler(opt.batch_size);
        const auto residual = residual_fn(bandwidth, batch);
        out.trace.push_back({t, bandwidth, residual});

        const double phi = 1.0 / (1.0 + opt.schedule_decay * static_cast<double>(t));
        bool settled = true;
        for (std::size_t i = 0; i < dim; ++i) {
            const double next = std::max(opt.floor_hz, bandwidth[i] + phi * out.step_gain[i] * residual[i]);
            const double rel_move = std::abs(next - bandwidth[i]) / next;
            bandwidth[i] = next;
            moves[i].push_back(rel_move);
            move_sums[i] += rel_move;
            if (moves[i].size() > opt.window) {
                move_sums[i] -= moves[i].front();
                moves[i].pop_front();
            }
            if (moves[i].size() < opt.window || move_sums[i] / static_cast<double>(opt.window) >= opt.window_tolerance)
                settled = false;
        }
        out.iterations = t + 1;

        if (settled) {
            const Eigen::MatrixXd check = sampler(opt.verification_draws);
            const auto r = residual_fn(bandwidth, check);
            out.verified_relative_residual.resize(dim);
            for (std::size_t i = 0; i < dim; ++i) out.verified_relative_residual[i] = r[i] / rhs[i];
            if (detail::verified(out.verified_relative_residual, opt.verification_tolerance)) {
                out.bandwidth = bandwidth;
                return out;
            }
            // Not there yet: restart the window and keep iterating.
            for (std::size_t i = 0; i < dim; ++i) {
                moves[i].clear();
                move_sums[i] = 0.0;
            }
        }
    }
    throw convergence_error("bandwidth search did not converge within " + std::to_string(opt.max_iterations) +
                                " iterations",
                            detail::bandwidth_column(out.trace));
}

/// Sample-average root: per coordinate, solve residual(W) = 0 on one frozen
/// batch by bracketed secant (Illinois). Coordinates must be decoupled, i.e.
/// residual i depends on W_i only. Used to compare policies on common
/// random numbers, where the differences are far below the stochastic
/// search's noise.
inline std::vector<double> refine_bandwidth_on_sample(std::vector<double> bandwidth, const BatchResidualFn& residual_fn,
                                                      const Eigen::MatrixXd& sample, double rel_tol = 1e-10) {
    const std::size_t dim = bandwidth.size();
    std::vector<double> lo(dim), hi(dim), flo(dim), fhi(dim);
    auto eval = [&](const std::vector<double>& w) { return residual_fn(w, sample); };

    // Bracket: residual decreasing in W, so need f(lo) > 0 > f(hi).
    lo = bandwidth;
    hi = bandwidth;
    flo = eval(lo);
    fhi = flo;
    for (int expand = 0; expand < 200; ++expand) {
        bool done = true;
        for (std::size_t i = 0; i < dim; ++i) {
            if (flo[i] <= 0.0) { lo[i] *= 0.9; done = false; }
            if (fhi[i] >= 0.0) { hi[i] *= 1.1; done = false; }
        }
        if (done) break;
        const auto fl = eval(lo);
        const auto fh = eval(hi);
        for (std::size_t i = 0; i < dim; ++i) {
            flo[i] = fl[i];
            fhi[i] = fh[i];
        }
    }
    for (std::size_t i = 0; i < dim; ++i)
        if (!(flo[i] > 0.0 && fhi[i] < 0.0)) throw invalid_input("refine_bandwidth_on_sample: could not bracket root");

    std::vector<int> side(dim, 0);
    for (int it = 0; it < 200; ++it) {
        std::vector<double> mid(dim);
        bool done = true;
        for (std::size_t i = 0; i < dim; ++i) {
            mid[i] = (lo[i] * fhi[i] - hi[i] * flo[i]) / (fhi[i] - flo[i]);
            if (!(mid[i] > lo[i] && mid[i] < hi[i])) mid[i] = 0.5 * (lo[i] + hi[i]);
            if (hi[i] - lo[i] > rel_tol * hi[i]) done = false;
        }
        if (done) break;
        const auto fm = eval(mid);
        for (std::size_t i = 0; i < dim; ++i) {
            if (hi[i] - lo[i] <= rel_tol * hi[i]) continue;
            if (fm[i] == 0.0) {
                lo[i] = hi[i] = mid[i];
            } else if (fm[i] > 0.0) {
                lo[i] = mid[i];
                flo[i] = fm[i];
                if (side[i] == 1) fhi[i] *= 0.5;
                side[i] = 1;
            } else {
                hi[i] = mid[i];
                fhi[i] = fm[i];
                if (side[i] == -1) flo[i] *= 0.5;
                side[i] = -1;
            }
        }
    }
    for (std::size_t i = 0; i < dim; ++i) bandwidth[i] = 0.5 * (lo[i] + hi[i]);
    return bandwidth;
}

/// CSV with columns t,W,residual (first coordinate; symmetric runs have one).
inline void write_bandwidth_trace_csv(std::ostream& os, const std::vector<BandwidthTraceRow>& trace) {
    os << "t,W,residual\n";
    os.precision(17);
    for (const auto& row : trace) os << row.t << ',' << row.bandwidth.front() << ',' << row.residual.front() << '\n';
}

} // namespace urllc
