# Copyright 2026 The boundedplay Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Independent oracles for the numerical kernels.

Run once with scipy/mpmath/numpy available; the outputs are frozen under
tests/fixtures/ and the C++ tests never call back into Python.
"""
import csv
import os

import mpmath
import numpy as np
from scipy.stats import chi2, chi2_contingency

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "..", "fixtures")
mpmath.mp.dps = 50


def gamma_q_spots():
    points = [(2, 3), (0.5, 0.25), (0.5, 2.0), (1, 0.0), (1, 0.7), (1, 5.0),
              (2.5, 1.0), (3, 10.0), (4.5, 4.5), (10, 3.0), (10, 25.0),
              (0.1, 0.01), (30, 28.0), (100, 90.0), (1.5, 40.0), (2, 60.0 / 2)]
    with open(os.path.join(FIXTURES, "gamma_q_oracle.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["a", "x", "q"])
        for a, x in points:
            q = mpmath.gammainc(a, x, mpmath.inf, regularized=True)
            w.writerow([repr(float(a)), repr(float(x)), mpmath.nstr(q, 20)])


def chi_square_tables():
    rng = np.random.default_rng(20240517)
    with open(os.path.join(FIXTURES, "chi_square_oracle.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["c00", "c01", "c02", "c10", "c11", "c12", "c20", "c21", "c22",
                    "statistic", "df", "p_value"])
        for k in range(20):
            # Mix of balanced and skewed tables; small counts included.
            scale = [3, 8, 15, 40][k % 4]
            probs = rng.dirichlet(np.ones(9) * (0.7 if k % 3 == 0 else 3.0))
            counts = rng.multinomial(scale * 9, probs).reshape(3, 3) + 1
            stat, p, df, _ = chi2_contingency(counts, correction=False)
            w.writerow(list(counts.flatten()) + [repr(float(stat)), df, repr(float(p))])
    print("diag p", repr(float(chi2.sf(60.0, 4))))


def markov_oracle():
    # Stationary per-round payoffs of two outcome-conditioned transition bots,
    # built here from first principles with numpy's eigen-decomposition.
    payoff = np.array([[2, 1, 4], [3, 2, 1], [0, 3, 2]], dtype=float)
    third = 1.0 / 3.0
    tables = {
        "wslu": {"win": [0.8, 0.1, 0.1], "tie": [third] * 3, "lose": [0.1, 0.8, 0.1]},
        "wdls": {"win": [0.1, 0.1, 0.8], "tie": [third] * 3, "lose": [0.8, 0.1, 0.1]},
    }

    def outcome(a, b):
        if a == b:
            return "tie"
        return "win" if (a - b) % 3 == 1 else "lose"  # paper beats rock: 1 vs 0

    def nxt(table, a, o):
        dist = np.zeros(3)
        stay, up, down = table[o]
        dist[a] += stay
        dist[(a + 1) % 3] += up
        dist[(a + 2) % 3] += down
        return dist

    rows = []
    for na, ta in tables.items():
        for nb, tb in tables.items():
            T = np.zeros((9, 9))
            for a in range(3):
                for b in range(3):
                    da = nxt(ta, a, outcome(a, b))
                    db = nxt(tb, b, outcome(b, a))
                    T[a * 3 + b] = np.outer(da, db).flatten()
            w, v = np.linalg.eig(T.T)
            pi = np.real(v[:, np.argmin(np.abs(w - 1))])
            pi /= pi.sum()
            ua = sum(pi[a * 3 + b] * payoff[a, b] for a in range(3) for b in range(3))
            ub = sum(pi[a * 3 + b] * payoff[b, a] for a in range(3) for b in range(3))
            rows.append([na, nb, repr(float(ua)), repr(float(ub))])
    with open(os.path.join(FIXTURES, "markov_oracle.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["policy_a", "policy_b", "payoff_a", "payoff_b"])
        w.writerows(rows)


if __name__ == "__main__":
    gamma_q_spots()
    chi_square_tables()
    markov_oracle()
