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

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace urllc {

// Bad argument, malformed config, or shape mismatch.
class invalid_input : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised by the symmetric closed form when a draw pushes some user's power
// below zero (interior KKT solution does not exist for that draw).
class infeasible_draw : public std::runtime_error {
public:
    infeasible_draw(const std::string& what, std::size_t user, double power)
        : std::runtime_error(what), user_(user), power_(power) {}

    std::size_t user() const noexcept { return user_; }
    double power() const noexcept { return power_; }

private:
    std::size_t user_;
    double power_;
};

// Non-finite value inside a loss/gradient evaluation.
class numeric_error : public std::runtime_error {
public:
    numeric_error(const std::string& what, std::size_t user, std::size_t draw)
        : std::runtime_error(what), user_(user), draw_(draw) {}

    std::size_t user() const noexcept { return user_; }
    std::size_t draw() const noexcept { return draw_; }

private:
    std::size_t user_;
    std::size_t draw_;
};

// Stochastic bandwidth iteration ran out of iterations; carries the W trace.
class convergence_error : public std::runtime_error {
public:
    convergence_error(const std::string& what, std::vector<double> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}

    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

} // namespace urllc
