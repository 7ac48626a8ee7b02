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
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "urllc/channel.hpp"
#include "urllc/error.hpp"
#include "urllc/mlp.hpp"
#include "urllc/qos.hpp"
#include "urllc/rng.hpp"

namespace urllc {

/// Scenario constants the trainer needs on every step.
struct TrainingProblem {
    ScenarioConfig scenario;
    std::vector<double> alpha;
    std::vector<UserQoS> qos;
    // Per-user Shannon warm start; also the unit for bandwidth and multiplier steps.
    std::vector<double> reference_bandwidth;

    int num_users() const { return static_cast<int>(alpha.size()); }
};

inline TrainingProblem make_training_problem(const ScenarioConfig& cfg) {
    cfg.validate();
    TrainingProblem p;
    p.scenario = cfg;
    p.alpha = large_scale_gains(cfg);
    p.qos = make_qos(cfg);
    const double share = cfg.max_power_w / cfg.num_users();
    for (int k = 0; k < cfg.num_users(); ++k)
        p.reference_bandwidth.push_back(shannon_warm_start(p.alpha[static_cast<std::size_t>(k)], share,
                                                           p.qos[static_cast<std::size_t>(k)], cfg));
    return p;
}

/// Step sizes follow phi(t) = 1 / (1 + decay t), multiplied per variable group:
///   weights:      param_rate / mean(W_ref)
///   bandwidth k:  bandwidth_rate * W_ref_k
///   multiplier k: multiplier_rate * W_ref_k
/// so every group moves in units natural to it (W in Hz, lambda in Hz per
/// unit QoS residual, weights dimensionless).
struct TrainConfig {
    std::size_t batch_size = 100;
    std::size_t eval_batch_size = 10000;
    // New window rows per frame; 0 replaces the whole window. A one-row
    // sliding window lets the 10 inner iterations fit the shared rows, so
    // the constraint holds on the window but not on fresh channels.
    std::size_t draws_per_frame = 0;
    int iterations_per_frame = 10;
    std::size_t max_frames = 5000;
    double schedule_decay = 0.1;
    double param_rate = 20.0;
    double bandwidth_rate = 0.3;
    double multiplier_rate = 1.0;
    double max_param_step = 0.05; // cap on any single weight change per step; <= 0 disables
    double zeta_tolerance = 0.01; // relative to sum W
    double xi_tolerance = 0.01;   // user average, and every user's upper confidence bound
    double confidence_z = 3.0;    // standard errors added to each user's estimate
    // Multipliers ascend on mean exp(-theta s) - (1 - qos_margin) exp(-theta B^E).
    // Reusing each batch for several steps lets the network fit it, so the
    // batch residual reads low; the margin keeps the fixed point feasible on
    // fresh channels. xi is always measured against the untightened target.
    double qos_margin = 0.01;
    int debounce = 3;
    double bandwidth_floor_hz = 1.0;
    // Unset: lambda_k starts where dL/dW_k = 0 for the initial weights and W.
    std::optional<double> initial_multiplier = 1.0;
    double divergence_factor = 1e3;

    void validate() const {
        if (batch_size < 1 || eval_batch_size < 1) throw invalid_input("train: batch sizes must be >= 1");
        if (iterations_per_frame < 1) throw invalid_input("train: iterations_per_frame must be >= 1");
        if (draws_per_frame > batch_size)
            throw invalid_input("train: draws_per_frame must lie in [0, batch_size]");
        if (!(zeta_tolerance > 0.0 && xi_tolerance > 0.0)) throw invalid_input("train: tolerances must be positive");
        if (!(qos_margin >= 0.0 && qos_margin < 1.0)) throw invalid_input("train: qos_margin must lie in [0, 1)");
        if (!(confidence_z >= 0.0)) throw invalid_input("train: confidence_z must be non-negative");
        if (initial_multiplier && !(*initial_multiplier >= 0.0))
            throw invalid_input("train: initial multiplier must be non-negative");
        if (!(schedule_decay >= 0.0)) throw invalid_input("train: schedule decay must be non-negative");
        if (debounce < 1) throw invalid_input("train: debounce must be >= 1");
        if (!(bandwidth_floor_hz > 0.0)) throw invalid_input("train: bandwidth floor must be positive");
        if (!(param_rate >= 0.0 && bandwidth_rate >= 0.0 && multiplier_rate >= 0.0))
            throw invalid_input("train: rates must be non-negative");
    }
};

struct TrainState {
    MlpParams params;
    std::vector<double> bandwidth;  // Hz
    std::vector<double> multiplier; // lambda_k >= 0
    std::size_t t = 0;
    double zeta = 0.0;
    double xi = 0.0;
};

struct LossEvaluation {
    double loss = 0.0;
    Eigen::MatrixXd grad_power;          // dL/dP, batch x K
    std::vector<double> grad_bandwidth;  // dL/dW_k
    std::vector<double> residual;        // mean exp(-theta s) - exp(-theta B^E)
    std::vector<double> mean_lhs;        // mean exp(-theta s)
    std::vector<double> lhs_stderr;      // standard error of mean_lhs
};

/// Sampled Lagrangian for a fixed power matrix (rows = draws):
///   L = (1/N) sum_n sum_k [W_k + lambda_k (exp(-theta_k s_kn) - exp(-theta_k B^E_k))].
inline LossEvaluation lagrangian_for_power(const TrainingProblem& prob, const std::vector<double>& bandwidth,
                                           const std::vector<double>& multiplier, const Eigen::MatrixXd& power,
                                           const Eigen::MatrixXd& gains) {
    const auto K = static_cast<std::size_t>(prob.num_users());
    if (bandwidth.size() != K || multiplier.size() != K) throw invalid_input("lagrangian: state/user count mismatch");
    if (gains.cols() != static_cast<Eigen::Index>(K) || power.rows() != gains.rows() || power.cols() != gains.cols())
        throw invalid_input("lagrangian: batch shape mismatch");
    if (gains.rows() == 0) throw invalid_input("lagrangian: empty batch");
    const auto& cfg = prob.scenario;
    const double inv_n = 1.0 / static_cast<double>(gains.rows());

    LossEvaluation ev;
    ev.grad_power = Eigen::MatrixXd::Zero(gains.rows(), gains.cols());
    ev.grad_bandwidth.assign(K, 0.0);
    ev.residual.assign(K, 0.0);
    ev.mean_lhs.assign(K, 0.0);
    ev.lhs_stderr.assign(K, 0.0);

    for (std::size_t k = 0; k < K; ++k) {
        const auto& q = prob.qos[k];
        const double w = bandwidth[k];
        if (!(w > 0.0)) throw invalid_input("lagrangian: bandwidth must be positive");
        double lhs = 0.0, lhs_sq = 0.0, d_w = 0.0;
        for (Eigen::Index n = 0; n < gains.rows(); ++n) {
            const auto kk = static_cast<Eigen::Index>(k);
            const double g = gains(n, kk), p = power(n, kk);
            const RateWithDerivatives rd = rate_with_derivatives(w, p, prob.alpha[k], g, q, cfg);
            const double e = qos_lhs_sample(rd.rate, q);
            const double ds_dp = rd.d_power;
            const double ds_dw = rd.d_bandwidth;
            if (!std::isfinite(e) || !std::isfinite(ds_dp) || !std::isfinite(ds_dw))
                throw numeric_error("lagrangian: non-finite value for user " + std::to_string(k) + " draw " +
                                        std::to_string(n),
                                    k, static_cast<std::size_t>(n));
            lhs += e;
            lhs_sq += e * e;
            d_w += -q.theta * ds_dw * e;
            ev.grad_power(n, kk) = -inv_n * multiplier[k] * q.theta * ds_dp * e;
        }
        ev.mean_lhs[k] = lhs * inv_n;
        if (gains.rows() > 1) {
            const double n = static_cast<double>(gains.rows());
            const double var = std::max(0.0, (lhs_sq - n * ev.mean_lhs[k] * ev.mean_lhs[k]) / (n - 1.0));
            ev.lhs_stderr[k] = std::sqrt(var / n);
        }
        ev.residual[k] = ev.mean_lhs[k] - q.qos_rhs();
        ev.grad_bandwidth[k] = 1.0 + multiplier[k] * d_w * inv_n;
        ev.loss += w + multiplier[k] * ev.residual[k];
    }
    return ev;
}

struct BatchLoss {
    LossEvaluation eval;
    ForwardResult net;
};

/// Lagrangian of the learned policy P = Pmax * N(g; w) on one batch, with
/// dL/dP for backpropagation.
inline BatchLoss batch_loss(const TrainingProblem& prob, const TrainState& state, const Eigen::MatrixXd& gains) {
    BatchLoss out;
    out.net = forward(state.params, gains);
    const Eigen::MatrixXd power = prob.scenario.max_power_w * out.net.fractions;
    out.eval = lagrangian_for_power(prob, state.bandwidth, state.multiplier, power, gains);
    return out;
}

inline MlpGradient param_gradient(const TrainingProblem& prob, const TrainState& state, const BatchLoss& bl) {
    return backward(state.params, bl.net.trace, prob.scenario.max_power_w * bl.eval.grad_power);
}

inline double schedule(const TrainConfig& cfg, std::size_t t) {
    return 1.0 / (1.0 + cfg.schedule_decay * static_cast<double>(t));
}

/// One primal-dual SGD step: descent on weights and bandwidths, projected
/// ascent on multipliers, all from the same batch gradient.
inline TrainState step(const TrainingProblem& prob, const TrainState& state, const Eigen::MatrixXd& gains,
                       const TrainConfig& cfg) {
    const BatchLoss bl = batch_loss(prob, state, gains);
    const MlpGradient grad = param_gradient(prob, state, bl);
    const double phi = schedule(cfg, state.t);
    const auto K = static_cast<std::size_t>(prob.num_users());

    double mean_ref = 0.0;
    for (double w : prob.reference_bandwidth) mean_ref += w;
    mean_ref /= static_cast<double>(K);

    TrainState next = state;
    double scale = phi * cfg.param_rate / mean_ref;
    if (cfg.max_param_step > 0.0) {
        double largest = 0.0;
        for (const auto& l : grad.layers)
            largest = std::max({largest, l.weight.cwiseAbs().maxCoeff(), l.bias.cwiseAbs().maxCoeff()});
        if (scale * largest > cfg.max_param_step) scale = cfg.max_param_step / largest;
    }
    next.params.axpy(-scale, grad);
    for (std::size_t k = 0; k < K; ++k) {
        const double ref = prob.reference_bandwidth[k];
        next.bandwidth[k] =
            std::max(cfg.bandwidth_floor_hz, state.bandwidth[k] - phi * cfg.bandwidth_rate * ref * bl.eval.grad_bandwidth[k]);
        const double residual = bl.eval.residual[k] + cfg.qos_margin * prob.qos[k].qos_rhs();
        next.multiplier[k] = std::max(0.0, state.multiplier[k] + phi * cfg.multiplier_rate * ref * residual);
    }
    next.t = state.t + 1;
    return next;
}

struct ConvergenceStats {
    double zeta = 0.0;         // Hz
    double xi = 0.0;           // user average
    double xi_max = 0.0;       // worst user
    double xi_max_upper = 0.0; // worst user, mean + z standard errors
};

/// Mean reference bandwidth: the unit in which bandwidths and multipliers
/// are measured when their gradients enter zeta.
inline double convergence_unit_hz(const TrainingProblem& prob) {
    double u = 0.0;
    for (double w : prob.reference_bandwidth) u += w;
    return u / static_cast<double>(prob.reference_bandwidth.size());
}

/// On a held-out batch:
///   zeta = |mean grad_w L|_1 + U (sum_k |dL/dW_k| + sum_k |dL/dlambda_k|)
///   xi   = sum_k [mean exp(theta_k (B^E_k - s_k)) - 1]^+ / K
/// with U = convergence_unit_hz(prob). Measuring W and lambda in units of U
/// (rather than Hz) is what keeps the bandwidth and multiplier terms
/// visible next to the 1% * sum W threshold. The multiplier term uses the
/// tightened target (see TrainConfig::qos_margin). xi_max_upper adds z
/// standard errors to each user's estimate before taking the worst user.
inline ConvergenceStats convergence_stats(const TrainingProblem& prob, const TrainState& state,
                                          const Eigen::MatrixXd& eval_gains, double z = 3.0, double margin = 0.0) {
    const BatchLoss bl = batch_loss(prob, state, eval_gains);
    const MlpGradient grad = param_gradient(prob, state, bl);
    const double unit = convergence_unit_hz(prob);
    ConvergenceStats cs;
    double dual = 0.0, xi = 0.0;
    for (std::size_t k = 0; k < bl.eval.residual.size(); ++k) {
        dual += std::abs(bl.eval.grad_bandwidth[k]) + std::abs(bl.eval.residual[k] + margin * prob.qos[k].qos_rhs());
        const double err = std::max(0.0, bl.eval.mean_lhs[k] / prob.qos[k].qos_rhs() - 1.0);
        xi += err;
        cs.xi_max = std::max(cs.xi_max, err);
        const double upper = (bl.eval.mean_lhs[k] + z * bl.eval.lhs_stderr[k]) / prob.qos[k].qos_rhs() - 1.0;
        cs.xi_max_upper = std::max(cs.xi_max_upper, upper);
    }
    cs.zeta = grad.l1_norm() + unit * dual;
    cs.xi = xi / static_cast<double>(bl.eval.residual.size());
    return cs;
}

inline bool is_converged(const ConvergenceStats& cs, const TrainState& state, const TrainConfig& cfg) {
    double sum_w = 0.0;
    for (double w : state.bandwidth) sum_w += w;
    return cs.zeta < cfg.zeta_tolerance * sum_w && cs.xi < cfg.xi_tolerance && cs.xi_max_upper < cfg.xi_tolerance;
}

struct HistoryRow {
    std::size_t frame = 0;
    std::size_t t = 0;
    double sum_bandwidth_hz = 0.0;
    double zeta = 0.0;
    double xi = 0.0;
    std::vector<double> multiplier;
    std::vector<double> bandwidth;
};

class divergence_error : public std::runtime_error {
public:
    divergence_error(const std::string& what, std::vector<HistoryRow> history)
        : std::runtime_error(what), history_(std::move(history)) {}
    const std::vector<HistoryRow>& history() const noexcept { return history_; }

private:
    std::vector<HistoryRow> history_;
};

struct TrainResult {
    TrainState state;
    std::vector<HistoryRow> history;
    bool converged = false;
    std::size_t frames = 0; // frames run; equals frames-to-converge when converged
};

/// lambda_k = 1 / (theta_k mean(ds/dW exp(-theta s))): the multiplier that
/// zeroes dL/dW_k for the given weights and bandwidths on `gains`.
inline std::vector<double> stationary_multiplier(const TrainingProblem& prob, const TrainState& state,
                                                 const Eigen::MatrixXd& gains) {
    TrainState probe = state;
    probe.multiplier.assign(state.bandwidth.size(), 1.0);
    const BatchLoss bl = batch_loss(prob, probe, gains);
    std::vector<double> out;
    for (std::size_t k = 0; k < bl.eval.grad_bandwidth.size(); ++k) {
        const double slope = 1.0 - bl.eval.grad_bandwidth[k]; // theta mean(ds/dW e)
        out.push_back(slope > 0.0 ? 1.0 / slope : prob.reference_bandwidth[k]);
    }
    return out;
}

inline TrainState initial_train_state(const TrainingProblem& prob, const TrainConfig& cfg, Rng& rng,
                                      const Eigen::MatrixXd& gains) {
    TrainState s;
    s.params = init_power_net(rng, prob.num_users(), prob.scenario.num_antennas);
    s.bandwidth = prob.reference_bandwidth;
    if (cfg.initial_multiplier)
        s.multiplier.assign(static_cast<std::size_t>(prob.num_users()), *cfg.initial_multiplier);
    else
        s.multiplier = stationary_multiplier(prob, s, gains);
    return s;
}

/// Frame-driven training. Each frame draws_per_frame new channel draws
/// replace the oldest rows of an N_b-row window (all rows when 0), the window is used for
/// iterations_per_frame steps, and (zeta, xi) are measured on a fresh
/// evaluation batch. Converged once both thresholds hold on `debounce`
/// consecutive frames. `init` (e.g. a checkpoint) resumes weights, W,
/// lambda and the schedule counter t.
inline TrainResult train(const TrainingProblem& prob, const TrainConfig& cfg, Rng& rng,
                         std::optional<TrainState> init = std::nullopt) {
    cfg.validate();
    const auto K = static_cast<std::size_t>(prob.num_users());
    TrainResult res;
    Eigen::MatrixXd window = sample_gain_batch(rng, prob.scenario, cfg.batch_size);
    res.state = init ? *init : initial_train_state(prob, cfg, rng, window);
    auto& st = res.state;
    if (st.bandwidth.size() != K || st.multiplier.size() != K ||
        st.params.num_inputs() != static_cast<Eigen::Index>(K) || st.params.num_outputs() != static_cast<Eigen::Index>(K))
        throw invalid_input("train: initial state does not match the scenario's user count");

    double ref_sum = 0.0;
    for (double w : prob.reference_bandwidth) ref_sum += w;

    int streak = 0;
    std::size_t next_row = 0;
    const std::size_t new_rows = cfg.draws_per_frame == 0 ? cfg.batch_size : cfg.draws_per_frame;
    for (std::size_t frame = 1; frame <= cfg.max_frames; ++frame) {
        for (std::size_t d = 0; d < new_rows; ++d) {
            const ChannelSample fresh = sample_gains(rng, prob.scenario);
            const auto row = static_cast<Eigen::Index>(next_row);
            for (std::size_t k = 0; k < K; ++k) window(row, static_cast<Eigen::Index>(k)) = fresh.g[k];
            next_row = (next_row + 1) % cfg.batch_size;
        }

        for (int it = 0; it < cfg.iterations_per_frame; ++it) st = step(prob, st, window, cfg);

        const ConvergenceStats cs = convergence_stats(prob, st, sample_gain_batch(rng, prob.scenario, cfg.eval_batch_size),
                                                      cfg.confidence_z, cfg.qos_margin);
        st.zeta = cs.zeta;
        st.xi = cs.xi;
        double sum_w = 0.0;
        for (double w : st.bandwidth) sum_w += w;
        res.history.push_back({frame, st.t, sum_w, cs.zeta, cs.xi, st.multiplier, st.bandwidth});
        res.frames = frame;

        bool diverged = !std::isfinite(sum_w) || sum_w > cfg.divergence_factor * ref_sum || !st.params.all_finite();
        for (std::size_t k = 0; k < K; ++k)
            if (!std::isfinite(st.multiplier[k]) || st.multiplier[k] > cfg.divergence_factor * prob.reference_bandwidth[k])
                diverged = true;
        if (diverged) throw divergence_error("train: diverged at frame " + std::to_string(frame), res.history);

        streak = is_converged(cs, st, cfg) ? streak + 1 : 0;
        if (streak >= cfg.debounce) {
            res.converged = true;
            break;
        }
    }
    return res;
}

inline void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& history) {
    const std::size_t K = history.empty() ? 0 : history.front().bandwidth.size();
    os << "frame,t,sumW_hz,zeta,xi";
    for (std::size_t k = 1; k <= K; ++k) os << ",lambda_" << k;
    for (std::size_t k = 1; k <= K; ++k) os << ",W_" << k;
    os << '\n';
    os.precision(17);
    for (const auto& h : history) {
        os << h.frame << ',' << h.t << ',' << h.sum_bandwidth_hz << ',' << h.zeta << ',' << h.xi;
        for (double l : h.multiplier) os << ',' << l;
        for (double w : h.bandwidth) os << ',' << w;
        os << '\n';
    }
}

} // namespace urllc
