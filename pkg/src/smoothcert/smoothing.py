"""Noise-vote smoothing of a base attribution method.

For each of T samples, perturb the image with i.i.d. generalized normal
noise, run the base interpreter on the noisy input, replace scores by their
rank weights, and average the T rank-weight maps.  Entries of the result are
strictly positive and sum to 1; the whole procedure is a deterministic
function of (interpreter, image, config) including its seed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .certify import select_shape
from .gnd import GndParams, sample_noise
from .scoring import ScoringVector, build_scoring_vector, rank_rescale
from .types import Image, MapProvenance, SmoothedMap

__all__ = ["SmoothingConfig", "InterpreterFailure", "smooth", "expected_map_reference", "sample_rng"]


class InterpreterFailure(RuntimeError):
    """Base interpreter raised while evaluating one noisy sample."""


@dataclass(frozen=True)
class SmoothingConfig:
    samples: int = 50
    sigma: float = 0.1
    d_prior: float = float("inf")
    seed: int = 0
    k_star: float | None = None  # defaults to n/4 at smoothing time
    eta: float = 1e-4
    d_star: int | None = None  # derived from (d_prior, n) unless pinned

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not (self.d_prior >= 1):
            raise ValueError(f"d_prior must be in [1, inf], got {self.d_prior}")


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent per-sample stream derived from (seed, sample index)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _resolve(config: SmoothingConfig, n: int) -> tuple[int, ScoringVector]:
    d_star = select_shape(config.d_prior, n)
    if config.d_star is not None and config.d_star != d_star:
        raise ValueError(
            f"configured d_star={config.d_star} inconsistent with rule value {d_star} "
            f"for d_prior={config.d_prior}, n={n}"
        )
    k_star = config.k_star if config.k_star is not None else n / 4.0
    return d_star, build_scoring_vector(n, k_star, config.eta)


def _aggregate(interpreter, image: Image, noise_rows, v: ScoringVector, threads: int) -> np.ndarray:
    """Average of rank-rescaled noisy maps; reduction order fixed by index."""
    t_total = len(noise_rows)

    def one(t: int) -> np.ndarray:
        try:
            raw = interpreter(image.pixels + noise_rows[t], image.label)
        except Exception as exc:
            raise InterpreterFailure(f"base interpreter failed on sample {t}") from exc
        return rank_rescale(np.asarray(raw, dtype=float), v)

    if threads <= 1:
        scaled = [one(t) for t in range(t_total)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scaled = list(pool.map(one, range(t_total)))
    return np.add.reduce(np.stack(scaled), axis=0) / t_total


def smooth(interpreter, image: Image, config: SmoothingConfig, threads: int = 1) -> SmoothedMap:
    """Run the full rank-vote smoothing pipeline on one image.

    ``interpreter`` must be callable as ``interpreter(pixels, label)`` and
    return a length-n score vector; a file-backed provider cannot serve here
    because the noisy inputs must be evaluated fresh.
    """
    if not callable(interpreter):
        raise TypeError(
            "interpreter must be callable on (pixels, label); file-backed maps "
            "cannot be evaluated at noisy inputs"
        )
    d_star, v = _resolve(config, image.n)
    params = GndParams(0.0, config.sigma, d_star)
    noise_rows = [
        sample_noise(params, image.n, sample_rng(config.seed, t)) for t in range(config.samples)
    ]
    scores = _aggregate(interpreter, image, noise_rows, v, threads)
    return SmoothedMap(
        scores=scores,
        dims=image.dims,
        sample_count=config.samples,
        provenance=MapProvenance(sigma=config.sigma, d_star=d_star, seed=config.seed),
    )


def expected_map_reference(
    interpreter, image: Image, config: SmoothingConfig, t_ref: int = 100_000, threads: int = 1
) -> SmoothedMap:
    """Large-sample stand-in for the expectation of the smoothed map."""
    return smooth(interpreter, image, replace(config, samples=t_ref), threads=threads)
