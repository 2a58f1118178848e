"""Certified top-k stability of positive normalized attribution maps.

Given a map m on the simplex and a requirement that any perturbed map keep at
least a beta fraction of m's top-k indices, there is a largest divergence
budget ``eps_robust`` such that every map within that Renyi divergence of m
still satisfies the overlap requirement.  The minimizer (the cheapest
violating map) keeps coordinates proportional to m except for a set it ties
at a single threshold; generically that set is the 2*k0 sorted entries
straddling rank k, where k0 = floor((1-beta)*k) + 1 is the smallest number of
displacements that breaks the overlap requirement, and the threshold is
their (1-alpha)-power mean.  When that power mean does not separate the
boundary (possible for k0 >= 2) the tied set adjusts; the solve below
handles both regimes exactly, and the unit suite checks it against a
constrained-search oracle.

Combining ``eps_robust`` with the shift divergences of the noise actually
used for smoothing yields a certified maximum attack size per noise family,
optionally maximized over the divergence order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .gnd import ONE_PLUS, GndKl, LaplaceRenyi, invert_divergence
from .scoring import descending_order
from .types import SmoothedMap

__all__ = [
    "InfeasibleSpecError",
    "TopKSpec",
    "k0_and_boundary",
    "select_shape",
    "eps_robust",
    "worst_case_map",
    "WorstCaseSolution",
    "RobustnessCertificate",
    "certify_max_attack",
    "certify_beta",
    "ALPHA_GRID_POINTS",
    "ALPHA_MAX",
]

# floor((1-beta)*k) is evaluated with an absolute guard so that values that
# are integers in exact arithmetic (e.g. 0.1 * 2500) do not round down.
_FLOOR_GUARD = 1e-9

ALPHA_GRID_POINTS = 200
ALPHA_MAX = 1e3
_ALPHA_MIN_OFFSET = 1e-6
_GOLDEN_REL_TOL = 1e-6


class InfeasibleSpecError(ValueError):
    """k + k0 exceeds the map length: the overlap requirement cannot be broken."""


@dataclass(frozen=True)
class TopKSpec:
    """Overlap requirement (k, beta) with its derived boundary quantities.

    ``k0`` is the minimum number of top-k displacements that violates the
    requirement; ``boundary_ranks`` are the 2*k0 one-based sorted ranks
    {k-k0+1, ..., k+k0} over which the cheapest violating map ties.
    """

    k: int
    beta: float
    n: int
    k0: int = field(init=False)
    boundary_ranks: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        if not (0.0 < self.beta <= 1.0):
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")
        if not (1 <= self.k <= self.n):
            raise ValueError(f"k must be in [1, {self.n}], got {self.k}")
        k0 = int(math.floor((1.0 - self.beta) * self.k + _FLOOR_GUARD)) + 1
        object.__setattr__(self, "k0", k0)
        object.__setattr__(self, "boundary_ranks", tuple(range(self.k - k0 + 1, self.k + k0 + 1)))
        if self.k + k0 > self.n:
            raise InfeasibleSpecError(
                f"k + k0 = {self.k + k0} exceeds n = {self.n}; "
                f"the requirement cannot be violated"
            )


def k0_and_boundary(k: int, beta: float, n: int) -> TopKSpec:
    return TopKSpec(k=k, beta=beta, n=n)


def shape_cap(n: int) -> int:
    """Largest useful even shape, 2 * ceil(ln(n) / 2)."""
    return 2 * math.ceil(math.log(n) / 2.0)


def select_shape(d_prior: float, n: int) -> int:
    """Noise shape for a defender expecting attacks of norm order <= d_prior.

    1 for d_prior = 1; otherwise d_prior rounded up to the next even integer,
    capped at 2 * ceil(ln(n) / 2).
    """
    if not (d_prior >= 1):
        raise ValueError(f"d_prior must be in [1, inf], got {d_prior}")
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if d_prior == 1:
        return 1
    cap = shape_cap(n)
    if d_prior <= cap:
        return 2 * math.ceil(d_prior / 2.0)
    return cap


_NORM_TOL = 1e-6


def _normalized_scores(m) -> np.ndarray:
    scores = m.scores if isinstance(m, SmoothedMap) else np.asarray(m, dtype=float)
    if np.any(scores <= 0.0):
        raise ValueError("map entries must be strictly positive")
    total = float(np.sum(scores))
    if abs(total - 1.0) > _NORM_TOL:
        raise ValueError(f"map must sum to 1 within {_NORM_TOL}, got {total}")
    return scores / total


def _sorted_scores(m) -> np.ndarray:
    return np.sort(_normalized_scores(m))[::-1]


def _sorted_raw(m) -> np.ndarray:
    """Sorted positive scores without the sum-to-1 gate (phi and its
    derivatives treat coordinates as free; phi is homogeneous of degree 1)."""
    scores = m.scores if isinstance(m, SmoothedMap) else np.asarray(m, dtype=float)
    if np.any(scores <= 0.0):
        raise ValueError("map entries must be strictly positive")
    return np.sort(scores)[::-1]


def _boundary_slice(spec: TopKSpec) -> slice:
    return slice(spec.k - spec.k0, spec.k + spec.k0)


def _power_mean(values: np.ndarray, alpha) -> float:
    """(1-alpha)-power mean; alpha -> 1+ gives the geometric mean.

    Tied inputs short-circuit to the common value so that tied boundaries
    (uniform maps in particular) cancel exactly downstream.
    """
    if np.ptp(values) == 0.0:
        return float(values[0])
    logs = np.log(values)
    if alpha == ONE_PLUS:
        return math.exp(float(np.mean(logs)))
    p = 1.0 - alpha
    return math.exp((float(logsumexp(p * logs)) - math.log(values.size)) / p)


@dataclass(frozen=True)
class _ThresholdSolution:
    """KKT solution of the cheapest overlap violation.

    The violating map keeps free coordinates proportional to m and ties the
    clamped ones at a common threshold; ``gamma`` is the threshold in m's
    scale (the power mean of the clamped entries), ``phi`` the resulting
    budget via eps = -ln(1 + phi).
    """

    phi: float
    gamma: float
    upper_clamped: int  # suffix of (kept ranks ++ entering ranks)
    lower_clamped: int  # prefix of (dropped ranks ++ trailing ranks)


def _upper_lower_ranks(spec: TopKSpec) -> tuple[np.ndarray, np.ndarray]:
    """0-based sorted ranks that must end at or above / below the threshold.

    Upper side: the kept top ranks plus the k0 entering ranks; lower side:
    the k0 dropped ranks plus everything past the boundary.  Each side is
    descending in value.
    """
    k, k0, n = spec.k, spec.k0, spec.n
    upper = np.concatenate([np.arange(0, k - k0), np.arange(k, k + k0)])
    lower = np.concatenate([np.arange(k - k0, k), np.arange(k + k0, n)])
    return upper, lower


def _clamped_values(ms: np.ndarray, spec: TopKSpec, u: int, lo: int) -> np.ndarray:
    upper, lower = _upper_lower_ranks(spec)
    parts = []
    if u > 0:
        parts.append(ms[upper[upper.size - u :]])
    if lo > 0:
        parts.append(ms[lower[:lo]])
    return np.concatenate(parts) if parts else np.empty(0)


def _solve_threshold(ms: np.ndarray, spec: TopKSpec, alpha) -> _ThresholdSolution:
    """Fixed point of the active-set condition for the tied threshold.

    The cheapest violating map pins at the threshold exactly the entries the
    proportional solution would place on the wrong side of it, and the
    threshold is the power mean of those entries.  When the power mean of
    the 2*k0 boundary entries already lies between the k-th and (k+1)-th
    sorted values, the clamped set is exactly the boundary; otherwise the
    set adjusts (only possible for k0 >= 2).
    """
    upper, lower = _upper_lower_ranks(spec)
    upper_vals = ms[upper]
    lower_vals = ms[lower]
    u, lo = spec.k0, spec.k0
    seen = set()
    for _ in range(4 * spec.n + 8):
        clamped = _clamped_values(ms, spec, u, lo)
        if clamped.size == 0:
            # proportional map already violates via ties
            return _ThresholdSolution(phi=0.0, gamma=float(ms[spec.k - 1]), upper_clamped=0,
                                      lower_clamped=0)
        gamma = _power_mean(clamped, alpha)
        u2 = int(np.count_nonzero(upper_vals < gamma))
        lo2 = int(np.count_nonzero(lower_vals > gamma))
        if (u2, lo2) == (u, lo):
            phi = math.fsum([gamma] * clamped.size + [-float(x) for x in clamped])
            return _ThresholdSolution(phi=phi, gamma=gamma, upper_clamped=u, lower_clamped=lo)
        if (u2, lo2) in seen:
            break  # cycle: fall through to the exhaustive scan
        seen.add((u2, lo2))
        u, lo = u2, lo2
    return _scan_threshold(ms, spec, alpha, upper_vals, lower_vals)


def _scan_threshold(ms, spec, alpha, upper_vals, lower_vals) -> _ThresholdSolution:
    """Exhaustive fallback: test every candidate active set for consistency.

    The clamp counts are monotone step functions of the threshold, so probing
    the sorted values, the midpoints between them, and points beyond both
    extremes realizes every possible (upper, lower) clamp-count pair.
    """
    distinct = np.unique(ms)
    probes = np.concatenate(
        [distinct, 0.5 * (distinct[1:] + distinct[:-1]), [distinct[0] / 2.0, distinct[-1] * 2.0]]
    )
    candidates = {(int(np.count_nonzero(upper_vals < g)), int(np.count_nonzero(lower_vals > g)))
                  for g in probes}
    candidates.add((spec.k0, spec.k0))
    best = None
    for u, lo in candidates:
        clamped = _clamped_values(ms, spec, u, lo)
        if clamped.size == 0:
            continue
        gamma = _power_mean(clamped, alpha)
        if (
            int(np.count_nonzero(upper_vals < gamma)) == u
            and int(np.count_nonzero(lower_vals > gamma)) == lo
        ):
            phi = math.fsum([gamma] * clamped.size + [-float(x) for x in clamped])
            if best is None or phi < best.phi:
                best = _ThresholdSolution(phi=phi, gamma=gamma, upper_clamped=u, lower_clamped=lo)
    if best is None:
        raise RuntimeError("threshold solve failed to find a consistent active set")
    return best


def _phi(ms_sorted: np.ndarray, spec: TopKSpec, alpha) -> tuple[float, float]:
    """(phi, gamma) of the cheapest violation; eps_robust = -ln(1 + phi)."""
    sol = _solve_threshold(ms_sorted, spec, alpha)
    return sol.phi, sol.gamma


def eps_robust(m, spec: TopKSpec, alpha) -> float:
    """Largest divergence budget compatible with the overlap requirement.

    ``-ln(2 k0 psi + sum of off-boundary sorted entries)`` where psi is the
    (1-alpha)-power mean of the 2*k0 boundary entries (geometric mean in the
    alpha -> 1+ limit); the map is renormalized so this equals
    ``-ln(1 + phi)``.  Nonnegative; exactly zero on the uniform map;
    nondecreasing in alpha by power-mean monotonicity.
    """
    ms = _sorted_scores(m)
    if spec.n != ms.size:
        raise ValueError(f"spec is for n={spec.n}, map has {ms.size}")
    phi, _ = _phi(ms, spec, alpha)
    return max(0.0, -math.log1p(phi))


@dataclass(frozen=True, eq=False)
class WorstCaseSolution:
    m_tilde: np.ndarray
    m_breve: float
    eps_at_alpha: float


def worst_case_map(m, spec: TopKSpec, alpha) -> WorstCaseSolution:
    """Cheapest violating map: ties the boundary entries at the power mean.

    The witness q has ``R_alpha(q || m) == eps_robust(m, spec, alpha)`` and
    its boundary-ranked entries are exactly equal, so an infinitesimal bump
    of the entering entries breaks the beta-top-k requirement.
    """
    scores = _normalized_scores(m)
    order = descending_order(scores)
    ms = scores[order]
    sol = _solve_threshold(ms, spec, alpha)
    denom = 1.0 + sol.phi
    tilde_sorted = ms / denom
    upper, lower = _upper_lower_ranks(spec)
    if sol.upper_clamped:
        tilde_sorted[upper[upper.size - sol.upper_clamped :]] = sol.gamma / denom
    if sol.lower_clamped:
        tilde_sorted[lower[: sol.lower_clamped]] = sol.gamma / denom
    m_tilde = np.empty_like(scores)
    m_tilde[order] = tilde_sorted
    return WorstCaseSolution(
        m_tilde=m_tilde, m_breve=sol.gamma, eps_at_alpha=max(0.0, -math.log1p(sol.phi))
    )


def _sup_over_alpha(objective) -> tuple[float, float]:
    """Maximize ``objective(alpha)`` over alpha in [1 + 1e-6, ALPHA_MAX].

    Log-spaced 200-point grid in (alpha - 1) followed by golden-section
    refinement around the best grid point; returns (best value, best alpha).
    """
    offsets = np.logspace(
        math.log10(_ALPHA_MIN_OFFSET), math.log10(ALPHA_MAX - 1.0), ALPHA_GRID_POINTS
    )
    alphas = 1.0 + offsets
    values = np.array([objective(a) for a in alphas])
    i = int(np.argmax(values))
    lo = math.log(offsets[max(i - 1, 0)])
    hi = math.log(offsets[min(i + 1, offsets.size - 1)])

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    fc = objective(1.0 + math.exp(c))
    fd = objective(1.0 + math.exp(d))
    while (hi - lo) > _GOLDEN_REL_TOL:
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - inv_phi * (hi - lo)
            fc = objective(1.0 + math.exp(c))
        else:
            lo, c, fc = c, d, fd
            d = lo + inv_phi * (hi - lo)
            fd = objective(1.0 + math.exp(d))
    mid = 1.0 + math.exp(0.5 * (lo + hi))
    f_mid = objective(mid)
    candidates = [(f_mid, mid), (float(values[i]), float(alphas[i]))]
    return max(candidates)


@dataclass(frozen=True)
class RobustnessCertificate:
    """Outcome of a certification query, serializable to a flat document.

    ``mode`` is "max_attack_size" (beta given, L certified) or "max_beta"
    (L given, beta certified); ``alpha_star`` is the divergence order the
    bound was evaluated at, the string "1+" for the alpha -> 1+ limit.
    """

    mode: str
    d_prior: float
    d_star: int
    sigma: float
    k: int
    beta: float
    attack_size: float
    alpha_star: object
    eps_robust_value: float
    dimension_penalty_applied: bool
    secondary_attack_size: float | None = None  # KL-route bound recorded at d_prior == 2
    map_digest: str | None = None
    sample_count: int | None = None
    confidence: float | None = None
    eps_lower: float | None = None


def certified_attack_size(
    eps_fn, sigma: float, d_prior: float, n: int
) -> tuple[float, object, float, bool, float | None]:
    """Dispatch the noise-family bound on a divergence-budget function.

    ``eps_fn(alpha)`` must accept finite alpha > 1 and ONE_PLUS and return a
    budget >= 0.  Returns (L, alpha_star, eps_at_star, penalty_applied,
    secondary_L) where secondary_L is the KL-route value recorded when
    d_prior == 2.
    """
    if not (d_prior >= 1):
        raise ValueError(f"d_prior must be in [1, inf], got {d_prior}")
    d_star = select_shape(d_prior, n)
    if d_prior == 1:

        def objective(alpha: float) -> float:
            return invert_divergence(LaplaceRenyi(alpha), max(0.0, eps_fn(alpha)))

        best, alpha_star = _sup_over_alpha(objective)
        return sigma * best, alpha_star, eps_fn(alpha_star), False, None

    if d_prior <= 2.0:

        def objective(alpha: float) -> float:
            return math.sqrt(2.0 * max(0.0, eps_fn(alpha)) / alpha)

        best, alpha_star = _sup_over_alpha(objective)
        secondary = None
        if d_prior == 2.0:
            # The alpha -> 1+ KL route also covers d = 2; record it alongside
            # the (tighter) Gaussian bound.
            secondary = sigma * invert_divergence(GndKl(2), max(0.0, eps_fn(ONE_PLUS)))
        return sigma * best, alpha_star, eps_fn(alpha_star), False, secondary

    penalty = d_prior > shape_cap(n)
    eps_kl = max(0.0, eps_fn(ONE_PLUS))
    t = invert_divergence(GndKl(d_star), eps_kl)
    scale = math.exp(-1.0) if penalty else 1.0
    return sigma * scale * t, ONE_PLUS, eps_kl, penalty, None


def certify_max_attack(
    m, spec: TopKSpec, sigma: float, d_prior: float, n: int | None = None
) -> RobustnessCertificate:
    """Certified maximum attack size for a given overlap requirement.

    Uses the Laplace route for d_prior = 1, the Gaussian route for
    d_prior in (1, 2], and the even-shape KL route for d_prior in (2, inf]
    (with an e^-1 size penalty when d_prior exceeds the shape cap).  The
    certified size scales linearly in sigma.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    scores = m.scores if isinstance(m, SmoothedMap) else np.asarray(m, dtype=float)
    if n is None:
        n = scores.size
    size, alpha_star, eps_at, penalty, secondary = certified_attack_size(
        lambda alpha: eps_robust(scores, spec, alpha), sigma, d_prior, n
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
        eps_robust_value=eps_at,
        dimension_penalty_applied=penalty,
        secondary_attack_size=secondary,
    )


def certify_beta(
    m, k: int, attack_size: float, sigma: float, d_prior: float, n: int | None = None
) -> RobustnessCertificate:
    """Largest beta on the grid {j/k} certified against the given attack size.

    Binary search over j: the certified attack size is nonincreasing in beta,
    and specs whose violation is combinatorially impossible (k + k0 > n)
    certify vacuously.  Returns beta = 0 when even beta = 1/k fails.
    """
    if attack_size < 0:
        raise ValueError(f"attack_size must be >= 0, got {attack_size}")
    scores = m.scores if isinstance(m, SmoothedMap) else np.asarray(m, dtype=float)
    if n is None:
        n = scores.size

    def evaluate(j: int):
        try:
            spec = TopKSpec(k=k, beta=j / k, n=n)
        except InfeasibleSpecError:
            return True, None  # cannot be violated at any size
        cert = certify_max_attack(scores, spec, sigma, d_prior, n)
        return cert.attack_size >= attack_size, cert

    lo, hi = 0, k  # invariant: j <= lo certified (j = 0 vacuous), j > hi not
    while lo < hi:
        mid = (lo + hi + 1) // 2
        ok, _ = evaluate(mid)
        if ok:
            lo = mid
        else:
            hi = mid - 1
    beta = lo / k
    best_cert = evaluate(lo)[1] if lo > 0 else None
    if best_cert is not None:
        return RobustnessCertificate(
            mode="max_beta",
            d_prior=d_prior,
            d_star=best_cert.d_star,
            sigma=sigma,
            k=k,
            beta=beta,
            attack_size=attack_size,
            alpha_star=best_cert.alpha_star,
            eps_robust_value=best_cert.eps_robust_value,
            dimension_penalty_applied=best_cert.dimension_penalty_applied,
            secondary_attack_size=best_cert.secondary_attack_size,
        )
    # Either nothing certifies (beta = 0) or only vacuous specs do.
    return RobustnessCertificate(
        mode="max_beta",
        d_prior=d_prior,
        d_star=select_shape(d_prior, n),
        sigma=sigma,
        k=k,
        beta=beta,
        attack_size=attack_size,
        alpha_star=ONE_PLUS,
        eps_robust_value=0.0 if beta == 0.0 else math.inf,
        dimension_penalty_applied=False,
    )
