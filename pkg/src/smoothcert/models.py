"""Tiny differentiable models and pluggable attribution providers.

Every model exposes deterministic ``forward`` class scores, an analytic
``input_gradient`` (reverse mode, written out by hand), and -- where second
derivatives have a closed form -- an analytic Hessian-vector product used by
the attack.  Activations are restricted to smooth ones (tanh, softplus) so
the attack objective stays differentiable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mapio import read_map
from .types import Image, RawMap

__all__ = [
    "LinearModel",
    "QuadraticModel",
    "MlpModel",
    "ConvModel",
    "GradientInterpreter",
    "FileBackedInterpreter",
    "random_model",
]


def _checked_label(label: int, n_classes: int) -> int:
    if not (0 <= label < n_classes):
        raise ValueError(f"label {label} out of range for {n_classes} classes")
    return int(label)


class LinearModel:
    """scores = W x + b; the input gradient is the label's weight row."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray | None = None):
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.ndim != 2:
            raise ValueError("weights must be (n_classes, n_inputs)")
        self.bias = (
            np.zeros(self.weights.shape[0]) if bias is None else np.asarray(bias, dtype=float)
        )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("model weights must be finite")

    @property
    def n_inputs(self) -> int:
        return self.weights.shape[1]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = self._check(x)
        return self.weights @ x + self.bias

    def input_gradient(self, x: np.ndarray, label: int) -> np.ndarray:
        self._check(x)
        return self.weights[_checked_label(label, self.n_classes)].copy()

    def score_hvp(self, x: np.ndarray, label: int, v: np.ndarray) -> np.ndarray:
        self._check(x)
        _checked_label(label, self.n_classes)
        return np.zeros(self.n_inputs)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_inputs,):
            raise ValueError(f"expected input of shape ({self.n_inputs},), got {x.shape}")
        return x


class QuadraticModel:
    """scores_c = x^T A_c x for symmetric matrices A_c (stacked (C, n, n))."""

    def __init__(self, mats: np.ndarray):
        mats = np.asarray(mats, dtype=float)
        if mats.ndim == 2:
            mats = mats[None]
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValueError("mats must be (n_classes, n, n)")
        # Symmetrize so gradient = 2 A x holds exactly.
        self.mats = 0.5 * (mats + np.transpose(mats, (0, 2, 1)))

    @property
    def n_inputs(self) -> int:
        return self.mats.shape[1]

    @property
    def n_classes(self) -> int:
        return self.mats.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.einsum("i,cij,j->c", x, self.mats, x)

    def input_gradient(self, x: np.ndarray, label: int) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 2.0 * self.mats[_checked_label(label, self.n_classes)] @ x

    def score_hvp(self, x: np.ndarray, label: int, v: np.ndarray) -> np.ndarray:
        return 2.0 * self.mats[_checked_label(label, self.n_classes)] @ np.asarray(v, float)


def _tanh(a):
    return np.tanh(a)


def _tanh_d(a):
    t = np.tanh(a)
    return 1.0 - t * t


def _tanh_dd(a):
    t = np.tanh(a)
    return -2.0 * t * (1.0 - t * t)


def _softplus(a):
    return np.logaddexp(0.0, a)


def _softplus_d(a):
    return 1.0 / (1.0 + np.exp(-a))


def _softplus_dd(a):
    s = _softplus_d(a)
    return s * (1.0 - s)


_ACTIVATIONS = {
    "tanh": (_tanh, _tanh_d, _tanh_dd),
    "softplus": (_softplus, _softplus_d, _softplus_dd),
}


class MlpModel:
    """Fully connected net with smooth activations and an analytic HVP."""

    def __init__(self, layers: list[tuple[np.ndarray, np.ndarray]], activation: str = "tanh"):
        """``layers`` is [(W1, b1), ..., (Wout, bout)]; the last pair is the
        linear readout to class scores, all earlier pairs are activated."""
        if activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {sorted(_ACTIVATIONS)}, got {activation}")
        if not layers:
            raise ValueError("need at least the readout layer")
        self.layers = [(np.asarray(w, float), np.asarray(b, float)) for w, b in layers]
        self.activation = activation

    @property
    def n_inputs(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def n_classes(self) -> int:
        return self.layers[-1][0].shape[0]

    def _hidden_pass(self, x: np.ndarray):
        act, _, _ = _ACTIVATIONS[self.activation]
        hs = [np.asarray(x, float)]
        pre = []
        for w, b in self.layers[:-1]:
            a = w @ hs[-1] + b
            pre.append(a)
            hs.append(act(a))
        return hs, pre

    def forward(self, x: np.ndarray) -> np.ndarray:
        hs, _ = self._hidden_pass(x)
        w_out, b_out = self.layers[-1]
        return w_out @ hs[-1] + b_out

    def input_gradient(self, x: np.ndarray, label: int) -> np.ndarray:
        _, dact, _ = _ACTIVATIONS[self.activation]
        _, pre = self._hidden_pass(x)
        w_out, _ = self.layers[-1]
        g = w_out[_checked_label(label, self.n_classes)]
        for (w, _), a in zip(reversed(self.layers[:-1]), reversed(pre)):
            g = w.T @ (g * dact(a))
        return g

    def score_hvp(self, x: np.ndarray, label: int, v: np.ndarray) -> np.ndarray:
        """Hessian-vector product of the label score, forward-over-reverse."""
        _, dact, ddact = _ACTIVATIONS[self.activation]
        _, pre = self._hidden_pass(x)
        hidden = self.layers[:-1]
        w_out, _ = self.layers[-1]
        _checked_label(label, self.n_classes)

        # Forward tangent of the pre-activations along direction v.
        a_dot = []
        h_dot = np.asarray(v, float)
        for (w, _), a in zip(hidden, pre):
            ad = w @ h_dot
            a_dot.append(ad)
            h_dot = dact(a) * ad

        # Reverse pass carrying (value, tangent) of dscore/da per layer.
        g = w_out[label]
        g_dot = np.zeros_like(g)
        for (w, _), a, ad in zip(reversed(hidden), reversed(pre), reversed(a_dot)):
            u = g * dact(a)
            u_dot = g_dot * dact(a) + g * ddact(a) * ad
            g = w.T @ u
            g_dot = w.T @ u_dot
        return g_dot


class ConvModel:
    """One valid 2-D convolution, tanh, global average pool, linear readout.

    Weights: kernels (filters, c, k, k), kernel bias (filters,), readout
    (n_classes, filters) + bias.  Input is a flattened (h, w, c) image.
    """

    def __init__(
        self,
        kernels: np.ndarray,
        kernel_bias: np.ndarray,
        readout: np.ndarray,
        readout_bias: np.ndarray,
        dims: tuple[int, int, int],
    ):
        self.kernels = np.asarray(kernels, float)
        self.kernel_bias = np.asarray(kernel_bias, float)
        self.readout = np.asarray(readout, float)
        self.readout_bias = np.asarray(readout_bias, float)
        self.dims = tuple(int(d) for d in dims)
        h, w, c = self.dims
        kf, kc, kh, kw = self.kernels.shape
        if kc != c or kh > h or kw > w:
            raise ValueError("kernel incompatible with input dims")

    @property
    def n_inputs(self) -> int:
        h, w, c = self.dims
        return h * w * c

    @property
    def n_classes(self) -> int:
        return self.readout.shape[0]

    def _forward_parts(self, x: np.ndarray):
        h, w, c = self.dims
        img = np.asarray(x, float).reshape(h, w, c)
        kf, _, kh, kw = self.kernels.shape
        win = np.lib.stride_tricks.sliding_window_view(img, (kh, kw), axis=(0, 1))
        # win: (oh, ow, c, kh, kw)
        pre = np.einsum("xychw,fchw->fxy", win, self.kernels) + self.kernel_bias[:, None, None]
        act = np.tanh(pre)
        pooled = act.mean(axis=(1, 2))
        scores = self.readout @ pooled + self.readout_bias
        return img, pre, act, pooled, scores

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self._forward_parts(x)[-1]

    def input_gradient(self, x: np.ndarray, label: int) -> np.ndarray:
        h, w, c = self.dims
        img, pre, act, _, _ = self._forward_parts(x)
        kf, _, kh, kw = self.kernels.shape
        oh, ow = pre.shape[1], pre.shape[2]
        wrow = self.readout[_checked_label(label, self.n_classes)]
        # dscore/dpre[f, x, y] = wrow[f]/(oh*ow) * (1 - tanh^2)
        dpre = (wrow[:, None, None] / (oh * ow)) * (1.0 - act * act)
        grad = np.zeros((h, w, c))
        for f in range(kf):
            for dx in range(kh):
                for dy in range(kw):
                    grad[dx : dx + oh, dy : dy + ow, :] += np.einsum(
                        "xy,c->xyc", dpre[f], self.kernels[f, :, dx, dy]
                    )
        return grad.reshape(-1)


def random_model(kind: str, n_inputs: int, n_classes: int, seed, hidden: tuple[int, ...] = (16,),
                 activation: str = "tanh", dims: tuple[int, int, int] | None = None):
    """Deterministically initialized model of the given architecture."""
    rng = np.random.default_rng(seed)
    if kind == "linear":
        return LinearModel(rng.normal(size=(n_classes, n_inputs)) / math.sqrt(n_inputs))
    if kind == "quadratic":
        mats = rng.normal(size=(n_classes, n_inputs, n_inputs)) / n_inputs
        return QuadraticModel(mats)
    if kind == "mlp":
        sizes = (n_inputs, *hidden, n_classes)
        layers = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            layers.append(
                (
                    rng.normal(size=(fan_out, fan_in)) * (1.5 / math.sqrt(fan_in)),
                    rng.normal(size=fan_out) * 0.1,
                )
            )
        return MlpModel(layers, activation=activation)
    if kind == "conv":
        if dims is None:
            raise ValueError("conv model needs explicit (h, w, c) dims")
        h, w, c = dims
        filters, k = 4, 3
        return ConvModel(
            kernels=rng.normal(size=(filters, c, k, k)) / (k * math.sqrt(c)),
            kernel_bias=rng.normal(size=filters) * 0.1,
            readout=rng.normal(size=(n_classes, filters)),
            readout_bias=rng.normal(size=n_classes) * 0.1,
            dims=dims,
        )
    raise ValueError(f"unknown model kind {kind!r}")


@dataclass(frozen=True)
class GradientInterpreter:
    """Attribution = gradient of the labeled class score w.r.t. the pixels.

    ``signed=False`` (the default) takes absolute values, the usual saliency
    convention; ``signed=True`` keeps raw gradients.
    """

    model: object
    signed: bool = False

    def raw_map(self, pixels: np.ndarray, label: int) -> np.ndarray:
        g = self.model.input_gradient(pixels, label)
        return g if self.signed else np.abs(g)

    def __call__(self, pixels: np.ndarray, label: int) -> np.ndarray:
        return self.raw_map(pixels, label)

    def attribution_of_image(self, image: Image) -> RawMap:
        return RawMap(scores=self.raw_map(image.pixels, image.label), dims=image.dims)


@dataclass(frozen=True)
class FileBackedInterpreter:
    """Serves precomputed attribution maps from disk, keyed by image id.

    This provider cannot evaluate at perturbed inputs, so it is usable only
    for certification and metrics on already-computed maps; it deliberately
    does not implement the callable protocol the smoother requires.
    """

    directory: str

    def load(self, image_id: str) -> RawMap:
        return load_saliency(self.directory, image_id)


def load_saliency(directory: str, image_id: str) -> RawMap:
    """Read ``<directory>/<image_id>.rrsm`` into a RawMap."""
    import os

    scores, dims = read_map(os.path.join(directory, f"{image_id}.rrsm"))
    return RawMap(scores=scores, dims=dims)
