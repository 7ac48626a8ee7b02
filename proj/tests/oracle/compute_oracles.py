# SPDX-FileCopyrightText: Copyright (c) 2026 The urllc-alloc Authors. All rights reserved.
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Independent reference values for the unit tests.

Written against scipy/mpmath only (no code shared with the C++ library).
Run:  python3 tests/oracle/compute_oracles.py
The printed numbers are frozen in the C++ tests.
"""
import math

import mpmath as mp
import numpy as np
from scipy import optimize, special, stats

mp.mp.dps = 40

# Reference simulation constants.
P_MAX = 10 ** ((43 - 30) / 10)          # W
N0 = 10 ** ((-173 - 30) / 10)           # W/Hz
TAU = 0.05e-3                           # s
U_BITS = 160
D_Q = 10 - 1 - 1                        # frames
EPS = 1e-5
A = 0.2


def path_gain(d):
    return 10 ** (-(35.3 + 37.6 * math.log10(d)) / 10)


def theta_of(a, dq, eps):
    # exp(-theta B^E dq) = eps/2 with B^E = (a/theta)(e^theta - 1)
    # -> a (e^theta - 1) dq = ln(2/eps)
    return float(mp.log(1 + mp.log(2 / mp.mpf(eps)) / (a * dq)))


def eff_bw(a, th):
    return a / th * math.expm1(th)


def rate(W, P, alpha, g, qinv):
    snr = alpha * g * P / (N0 * W)
    return TAU * W / (U_BITS * math.log(2)) * (math.log1p(snr) - qinv / math.sqrt(TAU * W))


def symmetric_bandwidth(K, alpha, th, be, qinv, rng, draws):
    g = rng.gamma(8.0, 1.0, size=(draws, K))
    rhs = math.exp(-th * be)

    def residual(W):
        eta = 1 / (1 + th * W * TAU / (U_BITS * math.log(2)))
        c = alpha * P_MAX / (N0 * W) + (1 / g).sum(axis=1, keepdims=True)
        S = (g ** (eta - 1)).sum(axis=1, keepdims=True)
        P = np.maximum(N0 * W / alpha * (g ** (eta - 1) * c / S - 1 / g), 0.0)
        snr = alpha * g * P / (N0 * W)
        s = TAU * W / (U_BITS * math.log(2)) * (np.log1p(snr) - qinv / math.sqrt(TAU * W))
        return np.exp(-th * s).mean() - rhs

    return optimize.brentq(residual, 5e4, 1e6, xtol=1e-3)


def main():
    print("alpha(250) =", repr(path_gain(250.0)))
    print("alpha(50)  =", repr(path_gain(50.0)))
    th = theta_of(A, D_Q, EPS)
    be = eff_bw(A, th)
    print("theta      =", repr(th))
    print("B^E        =", repr(be))
    print("rhs        =", repr(math.exp(-th * be)))
    qinv = float(-mp.sqrt(2) * mp.erfinv(2 * mp.mpf(EPS / 2) - 1))
    print("Qinv(5e-6) =", repr(qinv), " scipy:", repr(stats.norm.isf(EPS / 2)))
    print("Qinv(0.1)  =", repr(stats.norm.isf(0.1)))
    print("Q(1.5)     =", repr(stats.norm.sf(1.5)))

    alpha = path_gain(250.0)
    W, P, g = 2.0e5, P_MAX / 4, 8.0
    s = rate(W, P, alpha, g, qinv)
    snr = alpha * g * P / (N0 * W)
    print("snr(W=2e5,P=Pmax/4,g=8,d=250) =", repr(snr))
    print("rate                           =", repr(s))
    print("dispersion V(snr)              =", repr(1 - (1 + snr) ** -2))
    print("exp(-theta s)                  =", repr(math.exp(-th * s)))
    # Exact-dispersion rate
    V = 1 - (1 + snr) ** -2
    s_exact = TAU * W / (U_BITS * math.log(2)) * (math.log1p(snr) - math.sqrt(V / (TAU * W)) * qinv)
    print("rate (exact dispersion)        =", repr(s_exact))

    # Gamma(8,1) CDF at a few points (regularised lower incomplete gamma).
    for x in (4.0, 8.0, 12.0):
        print(f"Gamma(8,1) cdf({x}) =", repr(special.gammainc(8, x)))

    # Shannon warm start: tau W/(u ln2) ln(1 + alpha Nt P/(N0 W)) = B^E, P = Pmax/4.
    f = lambda w: TAU * w / (U_BITS * math.log(2)) * math.log1p(alpha * 8 * (P_MAX / 4) / (N0 * w)) - be
    lo, hi = 1.0, 1e9
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        (lo, hi) = (mid, hi) if f(mid) < 0 else (lo, mid)
    print("shannon warm start (K=4, d=250) =", repr(hi))

    # Closed-form optimum, K = 2, g = (6, 11), W = 2e5.
    eta = 1 / (1 + th * W * TAU / (U_BITS * math.log(2)))
    gs = [6.0, 11.0]
    c = alpha * P_MAX / (N0 * W) + sum(1 / x for x in gs)
    S = sum(x ** (eta - 1) for x in gs)
    Ps = [N0 * W / alpha * (x ** (eta - 1) * c / S - 1 / x) for x in gs]
    print("eta(W=2e5) =", repr(eta))
    print("closed-form P(g=(6,11)) =", [repr(p) for p in Ps], "sum =", repr(sum(Ps)))

    # Symmetric optimum: per-user bandwidth at which the closed-form policy
    # meets the QoS constraint with equality (sample-average root).
    rng = np.random.default_rng(20261016)
    for K in (1, 2, 4, 8):
        w = symmetric_bandwidth(K, alpha, th, be, qinv, rng, draws=2_000_000 // K)
        print(f"symmetric W* K={K}:", repr(w))

    # Softmax of (ln 3, 0).
    e = [3.0, 1.0]
    print("softmax(ln3, 0) =", [x / sum(e) for x in e])


if __name__ == "__main__":
    main()
