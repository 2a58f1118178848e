"""Gradient saliency extraction from torch models, written as RRSM files.

The exporter owns no interpretation math: per image it computes the gradient
of the target class score with respect to the input pixels and writes it
bit-exactly in the interchange format.  Per-image failures are logged and
the job continues; the job as a whole fails if any image failed.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .rrsm import write

log = logging.getLogger("saliency_exporter")

__all__ = ["ExportJob", "ExportOutcome", "IdentityModel", "load_model", "load_image", "export_maps"]


class IdentityModel(torch.nn.Module):
    """score = sum of pixels, for every class; its input gradient is all ones."""

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x.sum().reshape(1)


def load_model(reference: str) -> torch.nn.Module:
    """Resolve a model reference: the builtin "identity" or a TorchScript path."""
    if reference == "identity":
        return IdentityModel()
    model = torch.jit.load(reference, map_location="cpu")
    model.eval()
    return model


def load_image(path: str | Path) -> tuple[np.ndarray, tuple[int, int, int]]:
    """Read a .npy (h, w, c) array or a raster image into float64 [0, 1]."""
    path = Path(path)
    if path.suffix == ".npy":
        arr = np.load(path).astype(float)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError(f"{path}: expected (h, w, c) array, got shape {arr.shape}")
        return arr, arr.shape
    from PIL import Image as PilImage

    with PilImage.open(path) as img:
        arr = np.asarray(img, dtype=float) / 255.0
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr, arr.shape


@dataclass(frozen=True)
class ExportJob:
    model_reference: str
    image_paths: tuple
    labels: tuple  # one per image, or a single label applied to all
    output_dir: str
    absolute: bool = True

    def __post_init__(self) -> None:
        if not self.image_paths:
            raise ValueError("no images to export")
        labels = tuple(self.labels)
        if len(labels) == 1:
            labels = labels * len(self.image_paths)
        if len(labels) != len(self.image_paths):
            raise ValueError(
                f"{len(self.labels)} labels for {len(self.image_paths)} images"
            )
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "image_paths", tuple(self.image_paths))


@dataclass
class ExportOutcome:
    written: list = field(default_factory=list)
    failed: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failed


def gradient_map(model: torch.nn.Module, pixels: np.ndarray, label: int) -> np.ndarray:
    """d(score[label]) / d(input), as float64 in the image's (h, w, c) layout."""
    x = torch.tensor(pixels, dtype=torch.float64, requires_grad=True)
    scores = model(x)
    scores = scores.reshape(-1)
    if not (0 <= label < scores.numel()):
        raise ValueError(f"label {label} out of range for {scores.numel()} outputs")
    scores[label].backward()
    return x.grad.detach().numpy()


def export_maps(job: ExportJob) -> ExportOutcome:
    model = load_model(job.model_reference)
    out_dir = Path(job.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outcome = ExportOutcome()
    for path, label in zip(job.image_paths, job.labels):
        try:
            pixels, dims = load_image(path)
            grad = gradient_map(model, pixels, int(label))
            if job.absolute:
                grad = np.abs(grad)
            target = out_dir / (Path(path).stem + ".rrsm")
            write(target, grad.reshape(-1), dims)
            outcome.written.append(str(target))
        except Exception as exc:
            log.error("export failed for %s: %s", path, exc)
            outcome.failed.append((str(path), f"{type(exc).__name__}: {exc}"))
    return outcome
