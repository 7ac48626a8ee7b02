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
#include <set>

#include "oracle_values.hpp"
#include "urllc/error.hpp"
#include "urllc/rng.hpp"
#include "urllc/units.hpp"

using namespace urllc;

TEST(Units, DbmConversionsMatchReference) {
    EXPECT_NEAR(units::dbm_to_watts(43.0), oracle::max_power_w, 1e-12 * oracle::max_power_w);
    EXPECT_NEAR(units::dbm_to_watts(-173.0), oracle::noise_psd_w_per_hz, 1e-12 * oracle::noise_psd_w_per_hz);
    EXPECT_NEAR(units::watts_to_dbm(units::dbm_to_watts(12.5)), 12.5, 1e-12);
    EXPECT_NEAR(units::linear_to_db(units::db_to_linear(-37.0)), -37.0, 1e-12);
    EXPECT_DOUBLE_EQ(units::db_to_linear(10.0), 10.0);
}

TEST(Rng, SameSeedGivesSameStream) {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        EXPECT_EQ(x, b.uniform());
        differs = differs || x != c.uniform();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, UniformStaysInHalfOpenUnitInterval) {
    Rng r(7);
    double sum = 0.0;
    constexpr int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    // mean 1/2, standard error sqrt(1/12/n)
    EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, GammaEightMatchesReferenceCdf) {
    Rng r(11);
    constexpr int n = 200000;
    int below4 = 0, below8 = 0, below12 = 0;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = r.gamma_integer_shape(8);
        ASSERT_GT(g, 0.0);
        below4 += g <= 4.0;
        below8 += g <= 8.0;
        below12 += g <= 12.0;
        sum += g;
        sum_sq += g * g;
    }
    auto within = [](int count, double p) {
        const double se = std::sqrt(p * (1.0 - p) / n);
        return std::abs(static_cast<double>(count) / n - p) < 5.0 * se;
    };
    EXPECT_TRUE(within(below4, oracle::gamma8_cdf_4));
    EXPECT_TRUE(within(below8, oracle::gamma8_cdf_8));
    EXPECT_TRUE(within(below12, oracle::gamma8_cdf_12));
    const double mean = sum / n;
    EXPECT_NEAR(mean, 8.0, 5.0 * std::sqrt(8.0 / n));
    EXPECT_NEAR(sum_sq / n - mean * mean, 8.0, 0.15); // variance 8; sd of estimate ~0.035
}

TEST(Rng, GammaWithLongChunksStaysFinite) {
    Rng r(3);
    for (int i = 0; i < 1000; ++i) {
        const double g = r.gamma_integer_shape(64);
        ASSERT_TRUE(std::isfinite(g));
        ASSERT_GT(g, 0.0);
    }
}

TEST(Rng, ExponentialAndNormalMoments) {
    Rng r(5);
    constexpr int n = 200000;
    double se = 0.0, sn = 0.0, sn2 = 0.0;
    for (int i = 0; i < n; ++i) {
        se += r.exponential();
        const double z = r.normal();
        sn += z;
        sn2 += z * z;
    }
    EXPECT_NEAR(se / n, 1.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(sn / n, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(sn2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(Rng, MixSeedSeparatesStreams) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t master : {0ULL, 1ULL, 2ULL})
        for (std::uint64_t s = 0; s < 100; ++s) seen.insert(mix_seed(master, s));
    EXPECT_EQ(seen.size(), 300u);
    EXPECT_EQ(mix_seed(9, 4), mix_seed(9, 4));
}
