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
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "urllc/bandwidth_search.hpp"
#include "urllc/channel.hpp"
#include "urllc/error.hpp"
#include "urllc/mlp.hpp"
#include "urllc/qos.hpp"
#include "urllc/rng.hpp"
#include "urllc/symmetric.hpp"

namespace urllc {

/// Power rule: gains (rows = draws, columns = users) and the bandwidth
/// vector in, transmit powers in W out. Rules may return slightly negative
/// entries (the closed form does on rare draws); the evaluator counts those
/// draws and clamps the powers to zero.
using PowerRule = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& gains, const std::vector<double>& bandwidth)>;

struct PolicyHandle {
    std::string name;
    PowerRule power;
    std::vector<double> bandwidth; // Hz per user
    // True when the rule ignores the bandwidth argument, so per-user
    // bandwidths can be calibrated independently.
    bool bandwidth_independent = true;
};

inline PolicyHandle equal_power_handle(const ScenarioConfig& cfg, std::vector<double> bandwidth) {
    const double share = cfg.max_power_w / cfg.num_users();
    return {"equal_power",
            [share](const Eigen::MatrixXd& g, const std::vector<double>&) {
                return Eigen::MatrixXd::Constant(g.rows(), g.cols(), share);
            },
            std::move(bandwidth), true};
}

/// Closed-form optimal power for a symmetric scenario; the common bandwidth
/// is bandwidth[0].
inline PolicyHandle symmetric_optimal_handle(const ScenarioConfig& cfg, const UserQoS& qos, double bandwidth_hz) {
    const int k = cfg.num_users();
    return {"optimal",
            [cfg, qos](const Eigen::MatrixXd& g, const std::vector<double>& w) {
                const SymmetricPolicy policy = make_symmetric_policy(cfg, qos, w.front());
                Eigen::MatrixXd p(g.rows(), g.cols());
                std::vector<double> gr(static_cast<std::size_t>(g.cols())), pr(gr.size());
                for (Eigen::Index n = 0; n < g.rows(); ++n) {
                    for (Eigen::Index i = 0; i < g.cols(); ++i) gr[static_cast<std::size_t>(i)] = g(n, i);
                    optimal_power_raw(policy, gr, pr);
                    for (Eigen::Index i = 0; i < g.cols(); ++i) p(n, i) = pr[static_cast<std::size_t>(i)];
                }
                return p;
            },
            std::vector<double>(static_cast<std::size_t>(k), bandwidth_hz), false};
}

inline PolicyHandle learned_handle(const ScenarioConfig& cfg, MlpParams params, std::vector<double> bandwidth) {
    const double pmax = cfg.max_power_w;
    return {"learned",
            [params = std::move(params), pmax](const Eigen::MatrixXd& g, const std::vector<double>&) {
                return Eigen::MatrixXd(pmax * forward_fractions(params, g));
            },
            std::move(bandwidth), true};
}

struct EvalReport {
    std::string policy;
    std::size_t samples = 0;
    std::vector<double> bandwidth;          // Hz per user
    std::vector<double> mean_lhs;           // E{exp(-theta s)}
    std::vector<double> lhs_stderr;
    std::vector<double> rhs;                // exp(-theta B^E)
    std::vector<double> effective_capacity; // -ln(mean_lhs) / theta, packets/frame
    std::vector<double> eff_bandwidth;      // B^E
    std::vector<bool> pass_constraint;      // mean_lhs <= rhs (1 + tol)
    std::vector<bool> pass_capacity;        // C^E >= B^E - ln(1 + tol) / theta
    double xi = 0.0;                        // mean_k [mean_lhs / rhs - 1]^+
    double xi_max = 0.0;
    double total_bandwidth_hz = 0.0;
    std::size_t violation_draws = 0;        // draws on which the rule returned a negative power
    double tolerance = 0.0;

    bool all_pass() const {
        return std::all_of(pass_constraint.begin(), pass_constraint.end(), [](bool b) { return b; });
    }
};

namespace detail {

/// Powers for one chunk, validated: finite, sum <= Pmax (1 + 1e-9). Returns
/// clamped powers and counts draws with negative entries.
inline Eigen::MatrixXd checked_power(const PolicyHandle& policy, const ScenarioConfig& cfg, const Eigen::MatrixXd& g,
                                     std::size_t& negative_draws, std::size_t row_offset) {
    Eigen::MatrixXd p = policy.power(g, policy.bandwidth);
    if (p.rows() != g.rows() || p.cols() != g.cols()) throw invalid_input("evaluate: power rule returned wrong shape");
    for (Eigen::Index n = 0; n < p.rows(); ++n) {
        double sum = 0.0;
        bool negative = false;
        for (Eigen::Index i = 0; i < p.cols(); ++i) {
            const double v = p(n, i);
            if (!std::isfinite(v))
                throw numeric_error("evaluate: policy '" + policy.name + "' returned a non-finite power at draw " +
                                        std::to_string(row_offset + static_cast<std::size_t>(n)),
                                    static_cast<std::size_t>(i), row_offset + static_cast<std::size_t>(n));
            if (v < 0.0) negative = true;
            sum += std::max(v, 0.0);
        }
        if (sum > cfg.max_power_w * (1.0 + 1e-9))
            throw numeric_error("evaluate: policy '" + policy.name + "' exceeds the power budget at draw " +
                                    std::to_string(row_offset + static_cast<std::size_t>(n)),
                                0, row_offset + static_cast<std::size_t>(n));
        if (negative) ++negative_draws;
    }
    return p.cwiseMax(0.0);
}

} // namespace detail

/// Monte-Carlo QoS check of a policy on n_samples fresh draws (processed in
/// chunks). Sums are accumulated per chunk and then across chunks.
inline EvalReport evaluate(const PolicyHandle& policy, const ScenarioConfig& cfg, const std::vector<UserQoS>& qos,
                           std::size_t n_samples, Rng& rng, double tol = 0.01) {
    cfg.validate();
    const auto K = static_cast<std::size_t>(cfg.num_users());
    if (qos.size() != K || policy.bandwidth.size() != K) throw invalid_input("evaluate: user count mismatch");
    for (double w : policy.bandwidth)
        if (!(w > 0.0)) throw invalid_input("evaluate: bandwidths must be positive");
    if (n_samples < 2) throw invalid_input("evaluate: need at least two samples");
    const std::vector<double> alpha = large_scale_gains(cfg);

    std::vector<double> sum(K, 0.0), sum_sq(K, 0.0);
    EvalReport rep;
    rep.policy = policy.name;
    rep.tolerance = tol;
    constexpr std::size_t chunk = 20000;
    for (std::size_t done = 0; done < n_samples;) {
        const std::size_t rows = std::min(chunk, n_samples - done);
        const Eigen::MatrixXd g = sample_gain_batch(rng, cfg, rows);
        const Eigen::MatrixXd p = detail::checked_power(policy, cfg, g, rep.violation_draws, done);
        for (std::size_t k = 0; k < K; ++k) {
            double s1 = 0.0, s2 = 0.0;
            const auto kk = static_cast<Eigen::Index>(k);
            for (Eigen::Index n = 0; n < g.rows(); ++n) {
                const double e = qos_lhs_sample(
                    achievable_rate(policy.bandwidth[k], p(n, kk), alpha[k], g(n, kk), qos[k], cfg), qos[k]);
                s1 += e;
                s2 += e * e;
            }
            sum[k] += s1;
            sum_sq[k] += s2;
        }
        done += rows;
    }
    rep.samples = n_samples;
    const double n = static_cast<double>(n_samples);
    for (std::size_t k = 0; k < K; ++k) {
        const double mean = sum[k] / n;
        const double var = std::max(0.0, (sum_sq[k] - n * mean * mean) / (n - 1.0));
        rep.mean_lhs.push_back(mean);
        rep.lhs_stderr.push_back(std::sqrt(var / n));
        rep.rhs.push_back(qos[k].qos_rhs());
        rep.eff_bandwidth.push_back(qos[k].eff_bandwidth);
        const double ce = -std::log(mean) / qos[k].theta;
        rep.effective_capacity.push_back(ce);
        rep.pass_constraint.push_back(mean <= rep.rhs.back() * (1.0 + tol));
        rep.pass_capacity.push_back(ce >= qos[k].eff_bandwidth - std::log1p(tol) / qos[k].theta);
        const double err = std::max(0.0, mean / rep.rhs.back() - 1.0);
        rep.xi += err / static_cast<double>(K);
        rep.xi_max = std::max(rep.xi_max, err);
    }
    rep.bandwidth = policy.bandwidth;
    rep.total_bandwidth_hz = std::accumulate(policy.bandwidth.begin(), policy.bandwidth.end(), 0.0);
    return rep;
}

/// Per-user CSV: user,mean_lhs,stderr,rhs,effective_capacity,effective_bandwidth,pass
inline void write_eval_report_csv(std::ostream& os, const EvalReport& r) {
    os << "user,bandwidth_hz,mean_lhs,stderr,rhs,effective_capacity,effective_bandwidth,pass\n";
    os.precision(17);
    for (std::size_t k = 0; k < r.mean_lhs.size(); ++k)
        os << k + 1 << ',' << r.bandwidth[k] << ',' << r.mean_lhs[k] << ',' << r.lhs_stderr[k] << ','
           << r.rhs[k] << ',' << r.effective_capacity[k] << ',' << r.eff_bandwidth[k] << ','
           << (r.pass_constraint[k] ? 1 : 0) << '\n';
}

// --- bandwidth calibration ----------------------------------------------------

namespace detail {

/// Per-draw exp(-theta s) for user k at bandwidth w and fixed powers.
inline Eigen::VectorXd lhs_column(const ScenarioConfig& cfg, const UserQoS& q, double alpha, double w,
                                  const Eigen::MatrixXd& g, const Eigen::MatrixXd& p, Eigen::Index k) {
    Eigen::VectorXd e(g.rows());
    for (Eigen::Index n = 0; n < g.rows(); ++n)
        e(n) = qos_lhs_sample(achievable_rate(w, std::max(p(n, k), 0.0), alpha, g(n, k), q, cfg), q);
    return e;
}

} // namespace detail

/// Per-user QoS residual of a policy's power rule as a function of W, for the
/// stochastic bandwidth search. Rules that depend on W (the closed form) use
/// the common bandwidth W[0] and return one residual averaged over users.
inline BatchResidualFn policy_residual_fn(const PolicyHandle& policy, const ScenarioConfig& cfg,
                                          const std::vector<UserQoS>& qos) {
    const std::vector<double> alpha = large_scale_gains(cfg);
    return [policy, cfg, qos, alpha](const std::vector<double>& w, const Eigen::MatrixXd& g) {
        const auto K = static_cast<std::size_t>(g.cols());
        if (policy.bandwidth_independent) {
            const Eigen::MatrixXd p = policy.power(g, w);
            std::vector<double> r(K);
            for (std::size_t k = 0; k < K; ++k) {
                const auto kk = static_cast<Eigen::Index>(k);
                r[k] = detail::lhs_column(cfg, qos[k], alpha[k], w[k], g, p, kk).mean() - qos[k].qos_rhs();
            }
            return r;
        }
        const std::vector<double> common(K, w.front());
        const Eigen::MatrixXd p = policy.power(g, common);
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            acc += detail::lhs_column(cfg, qos[k], alpha[k], w.front(), g, p, kk).mean() - qos[k].qos_rhs();
        }
        return std::vector<double>{acc / static_cast<double>(K)};
    };
}

/// Bandwidth at which a power rule meets every QoS constraint with equality
/// on one fixed sample (sample-average root). Comparing policies on the same
/// sample removes most of the Monte-Carlo noise from their difference.
struct CalibratedBandwidth {
    std::vector<double> bandwidth;
    double total_hz = 0.0;
    // Per-draw influence on total_hz (delta method): the calibrated total
    // moves by mean(influence) - E{influence} to first order.
    Eigen::VectorXd influence;

    double stderr_hz() const {
        const auto n = static_cast<double>(influence.size());
        if (n < 2) return 0.0;
        const double mean = influence.mean();
        return std::sqrt((influence.array() - mean).square().sum() / (n - 1.0) / n);
    }
};

/// Standard error of a.total_hz - b.total_hz when both were calibrated on the
/// same sample.
inline double paired_stderr_hz(const CalibratedBandwidth& a, const CalibratedBandwidth& b) {
    if (a.influence.size() != b.influence.size()) throw invalid_input("paired_stderr_hz: samples differ");
    CalibratedBandwidth d;
    d.influence = a.influence - b.influence;
    return d.stderr_hz();
}

inline CalibratedBandwidth calibrate_on_sample(const PolicyHandle& policy, const ScenarioConfig& cfg,
                                               const std::vector<UserQoS>& qos, const Eigen::MatrixXd& sample) {
    const auto K = static_cast<std::size_t>(cfg.num_users());
    if (sample.cols() != static_cast<Eigen::Index>(K) || sample.rows() < 2)
        throw invalid_input("calibrate_on_sample: sample shape does not match the scenario");
    const std::vector<double> alpha = large_scale_gains(cfg);
    CalibratedBandwidth out;
    constexpr double h = 1e-4; // relative step for the slope dE/dW

    if (policy.bandwidth_independent) {
        const Eigen::MatrixXd p = policy.power(sample, policy.bandwidth).cwiseMax(0.0);
        BatchResidualFn fn = [&](const std::vector<double>& w, const Eigen::MatrixXd& g) {
            std::vector<double> r(K);
            for (std::size_t k = 0; k < K; ++k)
                r[k] = detail::lhs_column(cfg, qos[k], alpha[k], w[k], g, p, static_cast<Eigen::Index>(k)).mean() -
                       qos[k].qos_rhs();
            return r;
        };
        out.bandwidth = refine_bandwidth_on_sample(policy.bandwidth, fn, sample);
        out.influence = Eigen::VectorXd::Zero(sample.rows());
        for (std::size_t k = 0; k < K; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            const double w = out.bandwidth[k];
            const double slope = (detail::lhs_column(cfg, qos[k], alpha[k], w * (1 + h), sample, p, kk).mean() -
                                  detail::lhs_column(cfg, qos[k], alpha[k], w * (1 - h), sample, p, kk).mean()) /
                                 (2.0 * h * w);
            out.influence -= detail::lhs_column(cfg, qos[k], alpha[k], w, sample, p, kk) / slope;
        }
    } else {
        BatchResidualFn fn = policy_residual_fn(policy, cfg, qos);
        const double w = refine_bandwidth_on_sample({policy.bandwidth.front()}, fn, sample).front();
        out.bandwidth.assign(K, w);
        auto per_draw = [&](double ww) {
            const Eigen::MatrixXd p = policy.power(sample, std::vector<double>(K, ww));
            Eigen::VectorXd e = Eigen::VectorXd::Zero(sample.rows());
            for (std::size_t k = 0; k < K; ++k)
                e += detail::lhs_column(cfg, qos[k], alpha[k], ww, sample, p, static_cast<Eigen::Index>(k));
            return Eigen::VectorXd(e / static_cast<double>(K));
        };
        const double slope = (per_draw(w * (1 + h)).mean() - per_draw(w * (1 - h)).mean()) / (2.0 * h * w);
        out.influence = -static_cast<double>(K) * per_draw(w) / slope;
    }
    out.total_hz = std::accumulate(out.bandwidth.begin(), out.bandwidth.end(), 0.0);
    return out;
}

// --- baselines ------------------------------------------------------------------

struct EqualPowerSolution {
    PolicyHandle policy;
    BandwidthSearchResult search;
};

/// Equal power P_k = Pmax / K with each W_k found by the stochastic
/// bandwidth search under that fixed power rule.
inline EqualPowerSolution equal_power_policy(const ScenarioConfig& cfg, const std::vector<UserQoS>& qos, Rng& rng,
                                             const BandwidthSearchOptions& opt = {}) {
    cfg.validate();
    const auto K = static_cast<std::size_t>(cfg.num_users());
    if (qos.size() != K) throw invalid_input("equal_power_policy: user count mismatch");
    const std::vector<double> alpha = large_scale_gains(cfg);
    std::vector<double> w0(K), rhs(K);
    for (std::size_t k = 0; k < K; ++k) {
        w0[k] = shannon_warm_start(alpha[k], cfg.max_power_w / static_cast<double>(K), qos[k], cfg);
        rhs[k] = qos[k].qos_rhs();
    }
    EqualPowerSolution sol;
    sol.policy = equal_power_handle(cfg, w0);
    BatchSamplerFn sampler = [&](std::size_t n) { return sample_gain_batch(rng, cfg, n); };
    sol.search = stochastic_bandwidth_search(w0, rhs, policy_residual_fn(sol.policy, cfg, qos), sampler, opt);
    sol.policy.bandwidth = sol.search.bandwidth;
    return sol;
}

} // namespace urllc
