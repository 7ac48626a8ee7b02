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

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace urllc {

/// Seedable random stream with a fixed, platform-independent output.
///
/// The engine is std::mt19937_64, whose output sequence is pinned by the C++
/// standard. The std::*_distribution adaptors are not (each standard library
/// uses its own algorithm), so all variates are derived here from raw 64-bit
/// words:
///   - uniform:      top 53 bits scaled to [0, 1)
///   - exponential:  -log(1 - U)
///   - normal:       Box-Muller, cosine branch only (one word pair per draw)
///   - gamma(n, 1):  sum of n unit exponentials (integer shape only), taken
///                   as -log of a product of (1 - U) factors; one log per
///                   16 factors, each factor >= 2^-53 so no underflow
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential() { return -std::log1p(-uniform()); }

    double normal() {
        // 1 - U keeps the log argument in (0, 1].
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double gamma_integer_shape(int shape) {
        double acc = 0.0;
        for (int done = 0; done < shape;) {
            double prod = 1.0;
            for (int j = 0; j < 16 && done < shape; ++j, ++done) prod *= 1.0 - uniform();
            acc -= std::log(prod);
        }
        return acc;
    }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent child seeds
/// (per trial, per worker) from one master seed.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace urllc
