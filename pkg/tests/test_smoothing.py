import math

import numpy as np
import pytest

from smoothcert.models import GradientInterpreter, LinearModel, random_model
from smoothcert.scoring import build_scoring_vector, rank_rescale
from smoothcert.smoothing import (
    InterpreterFailure,
    SmoothingConfig,
    _aggregate,
    expected_map_reference,
    sample_rng,
    smooth,
)
from smoothcert.types import Image


def make_image(n_side=6, seed=0):
    rng = np.random.default_rng(seed)
    return Image(
        pixels=rng.uniform(0, 1, n_side * n_side), dims=(n_side, n_side, 1), label=0
    )


def hoeffding_band(n, t, miss=0.01):
    return math.sqrt(math.log(2 * n / miss) / (2 * t))


def test_constant_interpreter_reduces_to_rank_rescale():
    img = make_image()
    fixed = np.sin(np.arange(img.n) * 1.7)

    def interp(pixels, label):
        return fixed

    cfg = SmoothingConfig(samples=7, sigma=0.5, seed=3, eta=0.2)
    out = smooth(interp, img, cfg)
    v = build_scoring_vector(img.n, img.n / 4.0, 0.2)
    # equality up to the rounding of averaging T identical rows
    assert np.allclose(out.scores, rank_rescale(fixed, v), rtol=2e-15, atol=0)


def test_linear_model_is_noise_independent():
    img = make_image()
    model = LinearModel(np.random.default_rng(1).normal(size=(3, img.n)))
    interp = GradientInterpreter(model)
    outs = [
        smooth(interp, img, SmoothingConfig(samples=t, sigma=s, seed=seed, eta=0.2)).scores
        for t, s, seed in [(1, 0.1, 0), (20, 0.7, 5), (3, 2.0, 11)]
    ]
    assert np.allclose(outs[0], outs[1], rtol=2e-15, atol=0)
    assert np.allclose(outs[1], outs[2], rtol=2e-15, atol=0)
    ref = expected_map_reference(interp, img, SmoothingConfig(samples=5, sigma=0.1, eta=0.2), t_ref=9)
    assert np.allclose(ref.scores, outs[0], rtol=2e-15, atol=0)


def test_smooth_output_contract():
    img = make_image()
    interp = GradientInterpreter(random_model("mlp", img.n, 3, 4))
    out = smooth(interp, img, SmoothingConfig(samples=40, sigma=0.1, seed=8, eta=0.15))
    assert out.scores.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(out.scores > 0)
    assert out.sample_count == 40
    assert out.provenance.sigma == 0.1
    assert out.provenance.d_star == 4  # cap for n = 36


def test_smooth_deterministic_and_thread_invariant():
    img = make_image()
    interp = GradientInterpreter(random_model("mlp", img.n, 3, 4))
    cfg = SmoothingConfig(samples=24, sigma=0.2, seed=123, eta=0.15)
    a = smooth(interp, img, cfg)
    b = smooth(interp, img, cfg)
    c = smooth(interp, img, cfg, threads=5)
    assert np.array_equal(a.scores, b.scores)
    assert np.array_equal(a.scores, c.scores)
    d = smooth(interp, img, SmoothingConfig(samples=24, sigma=0.2, seed=124, eta=0.15))
    assert not np.array_equal(a.scores, d.scores)


def test_sample_rng_streams_are_independent_of_schedule():
    draws_a = [sample_rng(7, t).standard_normal(4) for t in range(5)]
    draws_b = [sample_rng(7, t).standard_normal(4) for t in reversed(range(5))]
    for t in range(5):
        assert np.array_equal(draws_a[t], draws_b[4 - t])


def test_permutation_equivariance_with_shared_noise():
    img = make_image()
    n = img.n
    model = random_model("mlp", n, 3, seed=2)
    base = GradientInterpreter(model)
    rng = np.random.default_rng(0)
    perm = rng.permutation(n)
    inv = np.argsort(perm)
    v = build_scoring_vector(n, n / 4.0, 0.15)
    noise = [rng.normal(scale=0.1, size=n) for _ in range(9)]

    def conjugated(pixels, label):
        return np.asarray(base(pixels[inv], label))[perm]

    img_p = Image(pixels=img.pixels[perm], dims=img.dims, label=0)
    noise_p = [row[perm] for row in noise]
    out = _aggregate(base, img, noise, v, threads=1)
    out_p = _aggregate(conjugated, img_p, noise_p, v, threads=1)
    assert np.array_equal(out_p, out[perm])


def test_concentration_to_reference():
    img = make_image(5)
    interp = GradientInterpreter(random_model("mlp", img.n, 3, 6))
    cfg = SmoothingConfig(samples=50, sigma=0.15, seed=0, eta=0.2)
    ref = expected_map_reference(interp, img, cfg, t_ref=20_000)
    hits = 0
    trials = 100
    band = hoeffding_band(img.n, 50) + hoeffding_band(img.n, 20_000)
    for trial in range(trials):
        got = smooth(interp, img, SmoothingConfig(samples=50, sigma=0.15, seed=1000 + trial, eta=0.2))
        if np.max(np.abs(got.scores - ref.scores)) <= band:
            hits += 1
    assert hits >= 99


def test_two_seed_reference_agreement():
    img = make_image(5)
    interp = GradientInterpreter(random_model("mlp", img.n, 3, 6))
    t_ref = 20_000
    a = smooth(interp, img, SmoothingConfig(samples=t_ref, sigma=0.15, seed=1, eta=0.2))
    b = smooth(interp, img, SmoothingConfig(samples=t_ref, sigma=0.15, seed=2, eta=0.2))
    assert np.max(np.abs(a.scores - b.scores)) <= 2 * hoeffding_band(img.n, t_ref)


def test_small_vs_large_sample_gap_within_band():
    img = make_image()
    interp = GradientInterpreter(random_model("mlp", img.n, 3, 4))
    small = smooth(interp, img, SmoothingConfig(samples=50, sigma=0.1, seed=5, eta=0.15))
    large = smooth(interp, img, SmoothingConfig(samples=5000, sigma=0.1, seed=6, eta=0.15))
    assert np.max(np.abs(small.scores - large.scores)) <= hoeffding_band(img.n, 50)


def test_interpreter_failure_carries_sample_index():
    img = make_image()
    calls = {"count": 0}

    def flaky(pixels, label):
        calls["count"] += 1
        if calls["count"] == 3:
            raise RuntimeError("boom")
        return pixels

    with pytest.raises(InterpreterFailure, match="sample 2"):
        smooth(flaky, img, SmoothingConfig(samples=5, sigma=0.1, seed=0))


def test_file_backed_provider_rejected():
    from smoothcert.models import FileBackedInterpreter

    img = make_image()
    with pytest.raises(TypeError, match="noisy"):
        smooth(FileBackedInterpreter("/nowhere"), img, SmoothingConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        SmoothingConfig(samples=0)
    with pytest.raises(ValueError):
        SmoothingConfig(sigma=0.0)
    with pytest.raises(ValueError):
        SmoothingConfig(d_prior=0.5)
    img = make_image()
    interp = GradientInterpreter(random_model("linear", img.n, 3, 0))
    bad = SmoothingConfig(samples=2, d_prior=2.0, d_star=6)
    with pytest.raises(ValueError, match="inconsistent"):
        smooth(interp, img, bad)
