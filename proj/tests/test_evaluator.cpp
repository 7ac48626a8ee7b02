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

#include <cmath>
#include <limits>
#include <sstream>

#include "oracle_values.hpp"
#include "urllc/evaluator.hpp"

using namespace urllc;

namespace {

ScenarioConfig scenario(int k) { return make_symmetric(ScenarioConfig{}, k); }

PolicyHandle custom_handle(PowerRule rule, std::vector<double> w) { return {"custom", std::move(rule), std::move(w), true}; }

} // namespace

TEST(Evaluator, MatchesAnIndependentSampleMean) {
    const ScenarioConfig cfg = scenario(2);
    const auto qos = make_qos(cfg);
    const PolicyHandle h = equal_power_handle(cfg, {1.9e5, 2.1e5});
    Rng a(1);
    const EvalReport rep = evaluate(h, cfg, qos, 50000, a);

    Rng b(1);
    const Eigen::MatrixXd g = sample_gain_batch(b, cfg, 50000);
    for (std::size_t k = 0; k < 2; ++k) {
        double s1 = 0.0, s2 = 0.0;
        for (Eigen::Index n = 0; n < g.rows(); ++n) {
            const double e = std::exp(-oracle::theta * achievable_rate(h.bandwidth[k], cfg.max_power_w / 2,
                                                                       oracle::alpha_250, g(n, static_cast<Eigen::Index>(k)),
                                                                       qos[k], cfg));
            s1 += e;
            s2 += e * e;
        }
        const double mean = s1 / 50000.0;
        const double se = std::sqrt((s2 / 50000.0 - mean * mean) * 50000.0 / 49999.0 / 50000.0);
        EXPECT_NEAR(rep.mean_lhs[k] / mean, 1.0, 1e-12);
        EXPECT_NEAR(rep.lhs_stderr[k] / se, 1.0, 1e-6);
        EXPECT_NEAR(rep.rhs[k], oracle::rhs, 1e-12);
    }
    EXPECT_EQ(rep.samples, 50000u);
    EXPECT_DOUBLE_EQ(rep.total_bandwidth_hz, 4e5);
    EXPECT_EQ(rep.violation_draws, 0u);
}

TEST(Evaluator, CapacityAndConstraintChecksAgree) {
    // C^E >= B^E - ln(1+tol)/theta is the log of mean <= rhs (1+tol).
    const ScenarioConfig cfg = scenario(1);
    const auto qos = make_qos(cfg);
    for (double w = 1.5e5; w < 1.9e5; w += 2.5e3) {
        Rng rng(2);
        const EvalReport rep = evaluate(equal_power_handle(cfg, {w}), cfg, qos, 5000, rng);
        EXPECT_EQ(rep.pass_capacity[0], rep.pass_constraint[0]) << w;
        EXPECT_NEAR(rep.effective_capacity[0], -std::log(rep.mean_lhs[0]) / oracle::theta, 1e-14);
        EXPECT_EQ(rep.all_pass(), rep.pass_constraint[0]);
        EXPECT_NEAR(rep.xi, std::max(0.0, rep.mean_lhs[0] / rep.rhs[0] - 1.0), 1e-15);
    }
}

TEST(Evaluator, StandardErrorShrinksWithRootN) {
    const ScenarioConfig cfg = scenario(1);
    const auto qos = make_qos(cfg);
    const PolicyHandle h = equal_power_handle(cfg, {1.7e5});
    Rng a(3), b(4);
    const double se_small = evaluate(h, cfg, qos, 10000, a).lhs_stderr[0];
    const double se_large = evaluate(h, cfg, qos, 160000, b).lhs_stderr[0];
    EXPECT_NEAR(se_large / se_small, 0.25, 0.025);
}

TEST(Evaluator, CountsAndClampsNegativePowers) {
    const ScenarioConfig cfg = scenario(2);
    const auto qos = make_qos(cfg);
    int calls = 0;
    const PolicyHandle h = custom_handle(
        [&calls, &cfg](const Eigen::MatrixXd& g, const std::vector<double>&) {
            ++calls;
            Eigen::MatrixXd p = Eigen::MatrixXd::Constant(g.rows(), 2, cfg.max_power_w / 2);
            for (Eigen::Index n = 0; n < g.rows(); n += 3) p(n, 1) = -1e-3;
            return p;
        },
        {2e5, 2e5});
    Rng rng(5);
    const EvalReport rep = evaluate(h, cfg, qos, 45000, rng);
    // Chunks of 20000, 20000, 5000 rows; each marks rows 0, 3, 6, ...
    EXPECT_EQ(calls, 3);
    EXPECT_EQ(rep.violation_draws, 6667u + 6667u + 1667u);
    EXPECT_GT(rep.mean_lhs[1], rep.mean_lhs[0]);
}

TEST(Evaluator, RejectsInvalidPowers) {
    const ScenarioConfig cfg = scenario(2);
    const auto qos = make_qos(cfg);
    Rng rng(6);
    const PolicyHandle nan_rule = custom_handle(
        [](const Eigen::MatrixXd& g, const std::vector<double>&) {
            Eigen::MatrixXd p = Eigen::MatrixXd::Ones(g.rows(), 2);
            p(7, 0) = std::numeric_limits<double>::quiet_NaN();
            return p;
        },
        {2e5, 2e5});
    EXPECT_THROW(evaluate(nan_rule, cfg, qos, 100, rng), numeric_error);
    const PolicyHandle over = custom_handle(
        [&cfg](const Eigen::MatrixXd& g, const std::vector<double>&) {
            return Eigen::MatrixXd::Constant(g.rows(), 2, 0.51 * cfg.max_power_w);
        },
        {2e5, 2e5});
    EXPECT_THROW(evaluate(over, cfg, qos, 100, rng), numeric_error);
    const PolicyHandle shape = custom_handle(
        [](const Eigen::MatrixXd& g, const std::vector<double>&) { return Eigen::MatrixXd::Ones(g.rows(), 3); },
        {2e5, 2e5});
    EXPECT_THROW(evaluate(shape, cfg, qos, 100, rng), invalid_input);
    EXPECT_THROW(evaluate(equal_power_handle(cfg, {2e5}), cfg, qos, 100, rng), invalid_input);
    EXPECT_THROW(evaluate(equal_power_handle(cfg, {2e5, 0.0}), cfg, qos, 100, rng), invalid_input);
    EXPECT_THROW(evaluate(equal_power_handle(cfg, {2e5, 2e5}), cfg, qos, 1, rng), invalid_input);
}

TEST(Evaluator, CalibrationSolvesTheSampleEquation) {
    const ScenarioConfig cfg = scenario(3);
    const auto qos = make_qos(cfg);
    Rng rng(7);
    const Eigen::MatrixXd sample = sample_gain_batch(rng, cfg, 20000);
    const PolicyHandle eq = equal_power_handle(cfg, {2e5, 2e5, 2e5});
    const CalibratedBandwidth cb = calibrate_on_sample(eq, cfg, qos, sample);
    const auto r = policy_residual_fn(eq, cfg, qos)(cb.bandwidth, sample);
    for (double v : r) EXPECT_NEAR(v / oracle::rhs, 0.0, 1e-9);
    EXPECT_NEAR(cb.total_hz, cb.bandwidth[0] + cb.bandwidth[1] + cb.bandwidth[2], 1e-6);
    EXPECT_EQ(cb.influence.size(), 20000);
    EXPECT_GT(cb.stderr_hz(), 0.0);
}

TEST(Evaluator, OptimalNeedsLessBandwidthThanEqualPower) {
    const ScenarioConfig cfg = scenario(4);
    const auto qos = make_qos(cfg);
    Rng rng(8);
    const Eigen::MatrixXd sample = sample_gain_batch(rng, cfg, 100000);
    const CalibratedBandwidth opt =
        calibrate_on_sample(symmetric_optimal_handle(cfg, qos.front(), 2e5), cfg, qos, sample);
    const CalibratedBandwidth eq =
        calibrate_on_sample(equal_power_handle(cfg, std::vector<double>(4, 2e5)), cfg, qos, sample);
    const double se = paired_stderr_hz(opt, eq);
    EXPECT_LT(opt.total_hz, eq.total_hz - 3.0 * se);
    // The paired error is far below either policy's own error.
    EXPECT_LT(se, 0.1 * opt.stderr_hz());
    // Against the independent reference: combined noise of both estimates.
    const double ref = 4.0 * oracle::symmetric_w_k4;
    EXPECT_NEAR(opt.total_hz / ref, 1.0, 5.0 * opt.stderr_hz() / ref + 1e-3);
}

TEST(Evaluator, SingleUserPoliciesCoincide) {
    const ScenarioConfig cfg = scenario(1);
    const auto qos = make_qos(cfg);
    Rng rng(9);
    const Eigen::MatrixXd sample = sample_gain_batch(rng, cfg, 20000);
    const CalibratedBandwidth opt =
        calibrate_on_sample(symmetric_optimal_handle(cfg, qos.front(), 2e5), cfg, qos, sample);
    const CalibratedBandwidth eq = calibrate_on_sample(equal_power_handle(cfg, {2e5}), cfg, qos, sample);
    EXPECT_NEAR(opt.total_hz / eq.total_hz, 1.0, 1e-9);
    EXPECT_LT(paired_stderr_hz(opt, eq), 1e-3 * opt.stderr_hz());
}

TEST(Evaluator, EqualPowerSearchConverges) {
    ScenarioConfig cfg = scenario(2);
    cfg.users[1].distance_m = 120.0;
    const auto qos = make_qos(cfg);
    Rng rng(10);
    const EqualPowerSolution sol = equal_power_policy(cfg, qos, rng);
    EXPECT_LE(sol.search.iterations, 1000u);
    ASSERT_EQ(sol.policy.bandwidth.size(), 2u);
    EXPECT_LT(sol.policy.bandwidth[1], sol.policy.bandwidth[0]); // the nearer user needs less
    Rng ev(11);
    const EvalReport rep = evaluate(sol.policy, cfg, qos, 100000, ev);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(rep.mean_lhs[k] / rep.rhs[k], 1.0, 0.02);
}

TEST(Evaluator, StandardErrorOfKnownInfluence) {
    CalibratedBandwidth a;
    a.influence = Eigen::VectorXd(4);
    a.influence << 1.0, 3.0, 5.0, 7.0; // sample variance 20/3
    EXPECT_NEAR(a.stderr_hz(), std::sqrt(20.0 / 3.0 / 4.0), 1e-15);
    CalibratedBandwidth b = a;
    EXPECT_EQ(paired_stderr_hz(a, b), 0.0);
    b.influence = Eigen::VectorXd::Zero(3);
    EXPECT_THROW(paired_stderr_hz(a, b), invalid_input);
}

TEST(Evaluator, ReportCsvLayout) {
    EvalReport r;
    r.bandwidth = {2.0};
    r.mean_lhs = {0.5};
    r.lhs_stderr = {0.01};
    r.rhs = {0.25};
    r.effective_capacity = {1.5};
    r.eff_bandwidth = {0.75};
    r.pass_constraint = {false};
    std::ostringstream os;
    write_eval_report_csv(os, r);
    EXPECT_EQ(os.str(), "user,bandwidth_hz,mean_lhs,stderr,rhs,effective_capacity,effective_bandwidth,pass\n"
                        "1,2,0.5,0.01,0.25,1.5,0.75,0\n");
}
