"""Built-in oracle suites: each re-derives a guarantee by independent means.

Three suites back the toolkit's central claims:

* divergence closed forms vs. adaptive quadrature on a (shape, shift, order)
  grid;
* tightness of the closed-form worst-case witness against the budget formula
  on random maps;
* validity of the finite-sample certificate under resampling against a
  large-sample reference map.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .certify import TopKSpec, eps_robust, worst_case_map
from .concentration import finite_sample_certificate
from .gnd import (
    ONE_PLUS,
    GndParams,
    eps_alpha_laplace,
    eps_gaussian,
    eps_kl_gnd,
    numeric_renyi_divergence,
)
from .scoring import build_scoring_vector, rank_rescale, renyi_robustness_divergence
from .smoothing import sample_rng

__all__ = [
    "SuiteReport",
    "divergence_suite",
    "witness_suite",
    "concentration_suite",
    "run_all",
]

DIVERGENCE_GRID = {
    "shapes": (1, 2, 4, 10),
    "shifts": (0.1, 0.5, 1.0, 2.0, 3.0),
    "alphas": (ONE_PLUS, 1.5, 2.0, 5.0, 20.0),
}


@dataclass(frozen=True)
class SuiteReport:
    name: str
    passed: bool
    checks: int
    worst: float
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.checks} checks, worst {self.worst:.3g} ({self.detail})"


def _closed_form(b: int, t: float, alpha):
    if b == 1 and alpha != ONE_PLUS:
        return eps_alpha_laplace(t, alpha)
    if b == 2:
        return eps_gaussian(t, 1.0 if alpha == ONE_PLUS else alpha)
    if b % 2 == 0 and alpha == ONE_PLUS:
        return eps_kl_gnd(b, t)
    return None


def divergence_suite(rel_tol: float = 1e-6) -> SuiteReport:
    """Closed forms must match quadrature within ``rel_tol`` over the grid."""
    worst = 0.0
    detail = ""
    checks = 0
    for b, t, alpha in itertools.product(
        DIVERGENCE_GRID["shapes"], DIVERGENCE_GRID["shifts"], DIVERGENCE_GRID["alphas"]
    ):
        cf = _closed_form(b, t, alpha)
        if cf is None:
            continue
        q = numeric_renyi_divergence(GndParams(0.0, 1.0, b), t, alpha)
        rel = abs(cf - q) / max(abs(q), 1e-300)
        checks += 1
        if rel > worst:
            worst = rel
            detail = f"b={b}, t={t}, alpha={alpha}"
    return SuiteReport("divergence-vs-quadrature", worst <= rel_tol, checks, worst, detail)


def _random_simplex_map(rng: np.random.Generator, n: int) -> np.ndarray:
    p = rng.dirichlet(np.full(n, 1.5))
    return np.maximum(p, 1e-12) / np.sum(np.maximum(p, 1e-12))


def witness_suite(trials: int = 1000, tol: float = 1e-9, seed: int = 2024) -> SuiteReport:
    """R_alpha(witness || m) must equal the budget within ``tol``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    detail = ""
    for trial in range(trials):
        n = int(rng.integers(3, 9))
        m = _random_simplex_map(rng, n)
        k = int(rng.integers(1, n - 1))
        beta = float(rng.choice([0.5, 0.75, 1.0]))
        try:
            spec = TopKSpec(k=k, beta=beta, n=n)
        except ValueError:
            continue
        alpha = float(rng.choice([1.25, 2.0, 4.0, 8.0]))
        eps = eps_robust(m, spec, alpha)
        wit = worst_case_map(m, spec, alpha)
        gap = abs(renyi_robustness_divergence(wit.m_tilde, m, alpha) - eps)
        if gap > worst:
            worst = gap
            detail = f"trial {trial}: n={n}, k={k}, beta={beta}, alpha={alpha}"
    return SuiteReport("witness-tightness", worst <= tol, trials, worst, detail)


def fixed_synthetic_interpreter(n: int = 32, seed: int = 7):
    """Deterministic nonlinear map used by the resampling experiment."""
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(n, n)) / math.sqrt(n)

    def interpret(pixels: np.ndarray, label: int = 0) -> np.ndarray:
        return np.abs(w @ pixels)

    return interpret


def concentration_suite(
    runs: int = 1000,
    t_samples: int = 50,
    confidence: float = 0.95,
    n: int = 32,
    t_reference: int = 100_000,
    seed: int = 11,
) -> SuiteReport:
    """Failure rate of the lower bound under resampling must stay <= 1 - confidence.

    A failure is a run whose ``eps_lower`` exceeds the budget of the
    reference (large-sample) map.
    """
    interpret = fixed_synthetic_interpreter(n)
    v = build_scoring_vector(n, n / 4.0, 0.25)
    x = np.linspace(0.1, 0.9, n)
    sigma = 0.15
    params = GndParams(0.0, sigma, 2)
    spec = TopKSpec(k=n // 4, beta=0.75, n=n)
    alpha = 2.0

    def sampled_map(t_count: int, stream: int) -> np.ndarray:
        acc = np.zeros(n)
        rng = sample_rng(seed, stream)
        for _ in range(t_count):
            noise = params.sigma * rng.standard_normal(n)
            acc += rank_rescale(interpret(x + noise), v)
        return acc / t_count

    reference = sampled_map(t_reference, 0)
    eps_true = eps_robust(reference, spec, alpha)
    failures = 0
    for run in range(1, runs + 1):
        m_hat = sampled_map(t_samples, run)
        bound = finite_sample_certificate(m_hat, spec, alpha, t_samples, confidence)
        if eps_true < bound.eps_lower:
            failures += 1
    rate = failures / runs
    return SuiteReport(
        "concentration-resampling",
        rate <= (1.0 - confidence),
        runs,
        rate,
        f"{failures}/{runs} failures, eps_true={eps_true:.4g}",
    )


def run_all(fast: bool = False) -> list[SuiteReport]:
    reports = [
        divergence_suite(),
        witness_suite(trials=200 if fast else 1000),
        concentration_suite(runs=100 if fast else 1000, t_reference=20_000 if fast else 100_000),
    ]
    return reports
