"""Shared domain containers: images, raw maps, smoothed maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Image", "RawMap", "SmoothedMap", "MapProvenance", "unconstrained_image"]

_SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Image:
    """Flattened (row-major, channel-interleaved) image in [0, 1] with a label."""

    pixels: np.ndarray
    dims: tuple[int, int, int]
    label: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "pixels", np.asarray(self.pixels, dtype=float))
        h, w, c = self.dims
        if self.pixels.shape != (h * w * c,):
            raise ValueError(f"pixels length {self.pixels.shape} != h*w*c for dims {self.dims}")
        if np.any(self.pixels < 0.0) or np.any(self.pixels > 1.0):
            raise ValueError("pixel intensities must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True, eq=False)
class RawMap:
    """Unconstrained attribution scores, one per pixel."""

    scores: np.ndarray
    dims: tuple[int, int, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=float))
        h, w, c = self.dims
        if self.scores.shape != (h * w * c,):
            raise ValueError(f"scores length {self.scores.shape} != h*w*c for dims {self.dims}")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("attribution scores must be finite")

    @property
    def n(self) -> int:
        return self.scores.shape[0]


def unconstrained_image(pixels: np.ndarray, dims: tuple[int, int, int], label: int = 0) -> Image:
    """Image whose intensities may exit [0, 1].

    Adversarially perturbed inputs are additive and unclipped (clipping would
    break the norm accounting certificates are stated in), so this bypasses
    the range check of the regular constructor; shape is still validated.
    """
    pixels = np.asarray(pixels, dtype=float)
    h, w, c = dims
    if pixels.shape != (h * w * c,):
        raise ValueError(f"pixels length {pixels.shape} != h*w*c for dims {dims}")
    img = object.__new__(Image)
    object.__setattr__(img, "pixels", pixels)
    object.__setattr__(img, "dims", tuple(int(d) for d in dims))
    object.__setattr__(img, "label", int(label))
    return img


@dataclass(frozen=True)
class MapProvenance:
    sigma: float
    d_star: int
    seed: int


@dataclass(frozen=True, eq=False)
class SmoothedMap:
    """Rank-vote average: strictly positive entries that sum to 1."""

    scores: np.ndarray
    dims: tuple[int, int, int]
    sample_count: int
    provenance: MapProvenance | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=float))
        h, w, c = self.dims
        if self.scores.shape != (h * w * c,):
            raise ValueError(f"scores length {self.scores.shape} != h*w*c for dims {self.dims}")
        if np.any(self.scores <= 0.0) or np.any(self.scores > 1.0):
            raise ValueError("smoothed scores must lie in (0, 1]")
        total = float(np.sum(self.scores))
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"smoothed scores must sum to 1 within {_SUM_TOL}, got {total}")

    @property
    def n(self) -> int:
        return self.scores.shape[0]
