"""Independent oracles shared by the unit and acceptance suites.

These deliberately avoid the closed forms under test: the divergence
minimization runs a generic constrained optimizer over explicit displacement
patterns, and the order-sup oracle is a dense grid sweep.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import minimize

from smoothcert.scoring import renyi_robustness_divergence, top_k_set


def violation_patterns(m: np.ndarray, k: int, k0: int):
    """All ways to displace exactly k0 of m's top-k with outside entries."""
    top = list(top_k_set(m, k))
    outside = [i for i in range(m.size) if i not in set(top)]
    for drop in itertools.combinations(top, k0):
        for enter in itertools.combinations(outside, k0):
            new_top = (set(top) - set(drop)) | set(enter)
            yield sorted(new_top)


def brute_force_min_divergence(
    m: np.ndarray, k: int, k0: int, alpha: float, restarts: int = 50, seed: int = 0
) -> float:
    """Min over violating maps q of R_alpha(q || m) by constrained search.

    For each admissible new top-k set K, minimizes sum q^alpha m^(1-alpha)
    over the simplex subject to min(q[K]) >= max(q[not K]), from random
    starting points; returns the best divergence found across patterns.
    """
    rng = np.random.default_rng(seed)
    n = m.size
    patterns = list(violation_patterns(m, k, k0))
    per_pattern = max(1, restarts // len(patterns))
    best = math.inf

    for new_top in patterns:
        not_top = [i for i in range(n) if i not in set(new_top)]

        def objective(x):
            q = np.abs(x) + 1e-12
            q = q / q.sum()
            return float(np.sum(q**alpha * m ** (1.0 - alpha)))

        cons = [
            {
                "type": "ineq",
                "fun": (
                    lambda x, i=i, j=j: (np.abs(x) + 1e-12)[i] / np.sum(np.abs(x) + 1e-12)
                    - (np.abs(x) + 1e-12)[j] / np.sum(np.abs(x) + 1e-12)
                ),
            }
            for i in new_top
            for j in not_top
        ]
        for _ in range(per_pattern):
            x0 = rng.dirichlet(np.ones(n))
            res = minimize(
                objective, x0, method="SLSQP", constraints=cons,
                options={"maxiter": 250, "ftol": 1e-14},
            )
            if res.fun > 0:
                value = math.log(res.fun) / (alpha - 1.0)
                best = min(best, value)
    return best


def brute_force_min_divergence_exact_eval(
    m: np.ndarray, q: np.ndarray, alpha: float
) -> float:
    return renyi_robustness_divergence(q, m, alpha)


def dense_alpha_sup(objective, n_points: int = 100_000, alpha_max: float = 1e3):
    """Dense log-grid sweep over the divergence order; returns (value, alpha)."""
    offsets = np.logspace(-6, math.log10(alpha_max - 1.0), n_points)
    best_v, best_a = -math.inf, None
    for a in 1.0 + offsets:
        v = objective(a)
        if v > best_v:
            best_v, best_a = v, a
    return best_v, best_a
