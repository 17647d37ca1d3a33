# Copyright 2026 The grader-audit Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Independent reference values frozen into the C++ test suites.

Run with: python3 tests/oracles/compute_oracles.py
Uses mpmath at 50 digits; none of this shares code with the C++ library.
"""
import itertools
import math

import mpmath as mp

mp.mp.dps = 50


def sigmoid(x):
    return 1 / (1 + mp.e ** (-x))


def ordered_logistic_mid():
    # K=3, c=(-1, 1), phi=0, score=2
    return mp.log(sigmoid(1) - sigmoid(-1))


def standardize(raw):
    n = len(raw)
    m = mp.fsum(raw) / n
    sd = mp.sqrt(mp.fsum((r - m) ** 2 for r in raw) / (n - 1))
    return [(r - m) / sd for r in raw]


def waic(ll):
    s = len(ll)
    n = len(ll[0])
    pointwise = []
    p_total = 0
    for i in range(n):
        col = [mp.mpf(ll[d][i]) for d in range(s)]
        lpd = mp.log(mp.fsum(mp.e ** v for v in col) / s)
        mean = mp.fsum(col) / s
        var = mp.fsum((v - mean) ** 2 for v in col) / s
        pointwise.append(lpd - var)
        p_total += var
    elpd = mp.fsum(pointwise)
    mean = elpd / n
    var_i = mp.fsum((e - mean) ** 2 for e in pointwise) / (n - 1)
    return elpd, p_total, mp.sqrt(n * var_i)


def alpha_bruteforce(table, metric):
    """Pair-enumeration route: D_o from within-unit ordered pairs weighted by
    1/(m_u - 1); D_e from all ordered pairs of distinct positions in the pool."""
    units = [[v for v in row if v is not None] for row in table]
    units = [u for u in units if len(u) >= 2]
    pool = [v for u in units for v in u]
    n = len(pool)
    freq = {}
    for v in pool:
        freq[v] = freq.get(v, 0) + 1
    values = sorted(freq)

    def delta2(a, b):
        if metric == "interval":
            return mp.mpf(a - b) ** 2
        lo, hi = min(a, b), max(a, b)
        inner = mp.fsum(freq[g] for g in values if lo <= g <= hi)
        return (inner - mp.mpf(freq[a] + freq[b]) / 2) ** 2

    d_o = mp.mpf(0)
    for u in units:
        m = len(u)
        for i, j in itertools.permutations(range(m), 2):
            d_o += delta2(u[i], u[j]) / (m - 1)
    d_o /= n
    d_e = mp.mpf(0)
    for i, j in itertools.permutations(range(n), 2):
        d_e += delta2(pool[i], pool[j])
    d_e /= n * (n - 1)
    return 1 - d_o / d_e


TABLE_4x2 = [[1, 1], [2, 3], [3, 3], [4, 2]]
TABLE_5x3 = [[1, 2, 1], [3, 3, None], [2, 2, 3], [4, 4, 4], [1, None, None], [2, 4, 3]]
WAIC_LL = [[-1.0, -2.0, -0.5], [-1.5, -1.0, -0.7]]


def main():
    print("ordered_logistic K=3 mid:", mp.nstr(ordered_logistic_mid(), 20))
    print("half_cauchy(1) at 1:", mp.nstr(mp.log(1 / mp.pi), 20))
    print("std normal logpdf 0:", mp.nstr(-mp.log(2 * mp.pi) / 2, 20))
    print("standardize [10,-10]:", [mp.nstr(v, 20) for v in standardize([10, -10])])
    e, p, se = waic(WAIC_LL)
    print("waic elpd/p/se:", mp.nstr(e, 20), mp.nstr(p, 20), mp.nstr(se, 20))
    for name, tab in (("4x2", TABLE_4x2), ("5x3", TABLE_5x3)):
        for metric in ("ordinal", "interval"):
            print(f"alpha {name} {metric}:", mp.nstr(alpha_bruteforce(tab, metric), 20))
    gaps = [-4.07, -3.25, -2.39, -1.28, -0.20, 1.29, 3.11, 4.71, 5.60, 6.22]
    print("reference gaps:", [round(b - a, 2) for a, b in zip(gaps, gaps[1:])])


if __name__ == "__main__":
    main()
