"""Finite-sample lower-confidence certificates for the divergence budget.

When the smoothed map is a T-sample Monte-Carlo estimate, each coordinate
concentrates around its expectation (Hoeffding plus a union bound over the n
coordinates, sample values lying in [0, 1]).  A first-order growth constant
for ``phi(m) = 2 k0 psi(m) - sum of boundary entries`` converts the
per-coordinate radius into a budget correction, giving a lower bound on the
expectation-level ``eps_robust`` that holds with the requested confidence.
The correction is subtractive, so the bound never exceeds the plug-in value,
and it vanishes as T grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .certify import (
    RobustnessCertificate,
    TopKSpec,
    _clamped_values,
    _solve_threshold,
    _sorted_raw,
    certified_attack_size,
    select_shape,
)
from .gnd import ONE_PLUS
from .types import SmoothedMap

__all__ = [
    "ConcentrationBound",
    "phi_value",
    "lipschitz_constant",
    "gradient_l1_budget",
    "delta_coordinate",
    "finite_sample_certificate",
    "certify_max_attack_lower",
]


def _solution_and_clamped(m, spec: TopKSpec, alpha):
    ms = _sorted_raw(m)
    if spec.n != ms.size:
        raise ValueError(f"spec is for n={spec.n}, map has {ms.size}")
    sol = _solve_threshold(ms, spec, alpha)
    return sol, _clamped_values(ms, spec, sol.upper_clamped, sol.lower_clamped)


def phi_value(m, spec: TopKSpec, alpha) -> float:
    """phi = (#tied) * gamma - (sum of tied entries); eps_robust = -ln(1 + phi).

    gamma is the tied-threshold value of the cheapest violation; the tied
    set is the 2*k0 boundary entries whenever their power mean lies between
    the k-th and (k+1)-th sorted values (always for k0 = 1).
    """
    return _solution_and_clamped(m, spec, alpha)[0].phi


def lipschitz_constant(m, spec: TopKSpec, alpha) -> float:
    """Signed sum of dphi/dm over the tied set: gamma^a * sum(m^-a) - #tied.

    Nonnegative by power-mean monotonicity (zero on a tied boundary).
    """
    sol, clamped = _solution_and_clamped(m, spec, alpha)
    if clamped.size == 0:
        return 0.0
    a = 1.0 if alpha == ONE_PLUS else float(alpha)
    with np.errstate(over="ignore"):
        c = math.exp(
            min(700.0, a * math.log(sol.gamma) + float(logsumexp(-a * np.log(clamped))))
        ) - clamped.size
    assert c > -1e-9, f"growth constant should be nonnegative, got {c}"
    return max(0.0, c)


def gradient_l1_budget(m, spec: TopKSpec, alpha) -> float:
    """l1 norm of the tied-set gradient of phi: sum |gamma^a m^-a - 1|.

    This is the constant the concavity argument actually yields for
    perturbations of mixed sign with ||m - m_hat||_inf <= delta; it dominates
    :func:`lipschitz_constant`, which is the signed sum of the same terms.
    """
    sol, clamped = _solution_and_clamped(m, spec, alpha)
    if clamped.size == 0:
        return 0.0
    a = 1.0 if alpha == ONE_PLUS else float(alpha)
    with np.errstate(over="ignore"):
        terms = np.exp(np.minimum(700.0, a * (math.log(sol.gamma) - np.log(clamped)))) - 1.0
    return float(np.sum(np.abs(terms)))


def delta_coordinate(n: int, t_samples: int, confidence: float) -> float:
    """Per-coordinate Hoeffding radius: sqrt(ln(n / (1 - confidence)) / (2 T))."""
    if not (0.0 < confidence < 1.0):
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    if t_samples < 1:
        raise ValueError(f"t_samples must be >= 1, got {t_samples}")
    return math.sqrt(math.log(n / (1.0 - confidence)) / (2.0 * t_samples))


@dataclass(frozen=True)
class ConcentrationBound:
    t_samples: int
    confidence: float
    delta_coord: float
    lipschitz_c: float
    eps_lower: float
    phi_hat: float
    psi_hat: float


def finite_sample_certificate(
    m, spec: TopKSpec, alpha, t_samples: int, confidence: float
) -> ConcentrationBound:
    """Lower-confidence bound on the expectation-level divergence budget.

    ``eps_lower = -ln(1 + phi(m_hat) + delta_coord * C)`` where C is the
    first-order growth constant at the estimate.  With probability at least
    ``confidence`` over the T noise draws, every coordinate of the estimate
    is within ``delta_coord`` of its expectation, under which the budget of
    the expected map is at least ``eps_lower``.
    """
    scores = m.scores if isinstance(m, SmoothedMap) else np.asarray(m, dtype=float)
    n = scores.size
    delta = delta_coordinate(n, t_samples, confidence)
    sol, _ = _solution_and_clamped(scores, spec, alpha)
    phi_hat = sol.phi
    psi_hat = sol.gamma
    c = lipschitz_constant(scores, spec, alpha)
    arg = 1.0 + phi_hat + delta * c
    eps_lower = -math.log(arg) if arg > 0 else -math.inf
    return ConcentrationBound(
        t_samples=t_samples,
        confidence=confidence,
        delta_coord=delta,
        lipschitz_c=c,
        eps_lower=eps_lower,
        phi_hat=phi_hat,
        psi_hat=psi_hat,
    )


def certify_max_attack_lower(
    m,
    spec: TopKSpec,
    sigma: float,
    d_prior: float,
    t_samples: int,
    confidence: float,
    n: int | None = None,
) -> RobustnessCertificate:
    """Finite-sample analogue of ``certify_max_attack``.

    The corrected budget replaces the plug-in budget inside the noise-family
    dispatch and the maximization over the divergence order is redone, since
    the correction shifts the optimum.  The certified size never exceeds the
    plug-in certificate's.
    """
    scores = m.scores if isinstance(m, SmoothedMap) else np.asarray(m, dtype=float)
    if n is None:
        n = scores.size

    def eps_low(alpha) -> float:
        return finite_sample_certificate(scores, spec, alpha, t_samples, confidence).eps_lower

    size, alpha_star, eps_at, penalty, secondary = certified_attack_size(
        eps_low, sigma, d_prior, n
    )
    return RobustnessCertificate(
        mode="max_attack_size",
        d_prior=d_prior,
        d_star=select_shape(d_prior, n),
        sigma=sigma,
        k=spec.k,
        beta=spec.beta,
        attack_size=size,
        alpha_star=alpha_star,
        eps_robust_value=max(0.0, eps_at),
        dimension_penalty_applied=penalty,
        secondary_attack_size=secondary,
        sample_count=t_samples,
        confidence=confidence,
        eps_lower=eps_at,
    )
