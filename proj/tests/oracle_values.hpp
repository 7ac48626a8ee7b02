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

// Reference values frozen from tests/oracle/compute_oracles.py (scipy and
// mpmath, no code shared with the library). Rerun the script to regenerate.
namespace oracle {

inline constexpr double max_power_w = 19.952623149688797;        // 43 dBm
inline constexpr double noise_psd_w_per_hz = 5.011872336272725e-21; // -173 dBm/Hz
inline constexpr double alpha_250 = 2.8427951601967117e-13;
inline constexpr double alpha_50 = 1.2074600864055268e-10;
inline constexpr double theta = 2.1551049129027833;
inline constexpr double eff_bandwidth = 0.7079743874910365;
inline constexpr double rhs = 0.21745592760409824;
inline constexpr double qinv_5e6 = 4.417173413469022;
inline constexpr double qinv_0_1 = 1.2815515655446004;
inline constexpr double q_1_5 = 0.06680720126885807;

// Rate at W = 2e5 Hz, P = Pmax/4, g = 8, d = 250 m.
inline constexpr double snr_ref = 11317.37137689091;
inline constexpr double rate_ref = 0.7156984306569824;
inline constexpr double rate_exact_dispersion_ref = 0.7156984311485702;
inline constexpr double dispersion_ref = 0.9999999921939358;
inline constexpr double lhs_ref = 0.21386609073140975;

// Regularised lower incomplete gamma P(8, x).
inline constexpr double gamma8_cdf_4 = 0.0511336157928473;
inline constexpr double gamma8_cdf_8 = 0.5470391905130058;
inline constexpr double gamma8_cdf_12 = 0.9104955031598242;

// Shannon warm start for K = 4 users at 250 m, equal power share.
inline constexpr double shannon_start_k4 = 164819.22740846942;

// Closed-form power at W = 2e5 Hz, d = 250 m, g = (6, 11).
inline constexpr double eta_2e5 = 0.8372948206297949;
inline constexpr double closed_form_p0 = 10.467741130955694;
inline constexpr double closed_form_p1 = 9.484882018733105;

// Per-user bandwidth of the closed-form policy meeting the constraint with
// equality (2e6 total draws per K, numpy generator, users at 250 m).
inline constexpr double symmetric_w_k1 = 168948.22429502336;
inline constexpr double symmetric_w_k2 = 183002.21812865318;
inline constexpr double symmetric_w_k4 = 199723.20864313262;
inline constexpr double symmetric_w_k8 = 220003.62119191443;

} // namespace oracle
