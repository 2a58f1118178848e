"""Rank-weight scoring vectors, top-k sets/overlap, and simplex divergences."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

from .gnd import ONE_PLUS

__all__ = [
    "ScoringVector",
    "build_scoring_vector",
    "rank_rescale",
    "descending_order",
    "top_k_set",
    "top_k_overlap",
    "renyi_robustness_divergence",
]

# Floor applied to raw sigmoid weights before normalization so every entry of
# the scoring vector (and hence of any smoothed map) stays strictly positive.
_WEIGHT_FLOOR = 1e-300

_NORM_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ScoringVector:
    """Nonincreasing rank weights: w_j is the mass granted to rank j.

    Invariants: w_1 >= ... >= w_n > 0, sum(w) == 1, every w_j <= 1.
    """

    weights: np.ndarray
    k_star: float
    eta: float
    z: float = field(default=1.0)  # raw normalizer before rescaling to sum 1

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def build_scoring_vector(n: int, k_star: float, eta: float) -> ScoringVector:
    """Sigmoid rank weights w_j = (1/Z) / (1 + exp(eta * (j - k_star)))."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if eta <= 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    ranks = np.arange(1, n + 1, dtype=float)
    raw = expit(-eta * (ranks - k_star))
    raw = np.maximum(raw, _WEIGHT_FLOOR)
    z = float(np.sum(raw))
    return ScoringVector(weights=raw / z, k_star=k_star, eta=eta, z=z)


def descending_order(scores: np.ndarray) -> np.ndarray:
    """Indices of ``scores`` sorted by descending value, ties by ascending index."""
    return np.argsort(-np.asarray(scores, dtype=float), kind="stable")


def rank_rescale(raw_scores: np.ndarray, v: ScoringVector) -> np.ndarray:
    """Replace each entry by the weight of its descending rank.

    The output is a permutation of ``v.weights``, so it sums to exactly
    ``sum(v.weights)``.
    """
    raw_scores = np.asarray(raw_scores, dtype=float)
    if raw_scores.shape[0] != v.n:
        raise ValueError(f"length mismatch: map has {raw_scores.shape[0]}, scoring vector {v.n}")
    out = np.empty(v.n, dtype=float)
    out[descending_order(raw_scores)] = v.weights
    return out


def top_k_set(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest entries (ties by ascending index), in rank order."""
    scores = np.asarray(scores, dtype=float)
    n = scores.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k must be in [1, {n}], got {k}")
    return descending_order(scores)[:k]


def top_k_overlap(a: np.ndarray, b: np.ndarray, k: int) -> float:
    """|top_k(a) & top_k(b)| / k."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    inter = np.intersect1d(top_k_set(a, k), top_k_set(b, k), assume_unique=True)
    return inter.size / k


def _as_simplex(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0):
        raise ValueError(f"{name} must be strictly positive")
    s = float(np.sum(p))
    if abs(s - 1.0) > _NORM_TOL:
        raise ValueError(f"{name} must sum to 1 within {_NORM_TOL}, got {s}")
    return p / s


def renyi_robustness_divergence(p: np.ndarray, q: np.ndarray, alpha) -> float:
    """Order-alpha Renyi divergence between two strictly positive maps.

    Inputs must sum to 1 within 1e-6 and are renormalized before use.
    ``alpha = ONE_PLUS`` gives the KL limit sum p ln(p/q); ``alpha = inf``
    gives max ln(p/q).
    """
    p = _as_simplex(p, "p")
    q = _as_simplex(q, "q")
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    log_ratio = np.log(p) - np.log(q)
    if alpha == ONE_PLUS:
        return float(np.sum(p * log_ratio))
    if alpha == math.inf:
        return float(np.max(log_ratio))
    if not (alpha > 1):
        raise ValueError(f"alpha must be > 1, ONE_PLUS, or inf, got {alpha}")
    return float(logsumexp(alpha * np.log(p) + (1.0 - alpha) * np.log(q))) / (alpha - 1.0)
