"""Acceptance suite: one test per exit criterion, at its stated tolerance.

Each test prints a single PASS line on success (run with -v or -s to see
them); tolerances and workloads are pinned here, not configurable.
"""

import itertools
import math
import time

import numpy as np
import pytest

import smoothcert as sc
from smoothcert.certify import TopKSpec, certify_max_attack, eps_robust, worst_case_map
from smoothcert.concentration import phi_value
from smoothcert.evaluation import SweepSpec, run_one_cell, run_sweep, synthetic_case, probe_model
from smoothcert.gnd import ONE_PLUS, GndParams, numeric_renyi_divergence
from smoothcert.selftest import _closed_form, concentration_suite
from smoothcert.scoring import renyi_robustness_divergence, top_k_overlap, top_k_set

from _oracles import brute_force_min_divergence, dense_alpha_sup


def _ok(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


def random_simplex(rng, n, floor=1e-9):
    p = rng.dirichlet(np.full(n, 1.2))
    p = np.maximum(p, floor)
    return p / p.sum()


def test_divergence_oracle_agreement():
    start = time.monotonic()
    worst = 0.0
    for b, t, alpha in itertools.product(
        (1, 2, 4, 10), (0.1, 0.5, 1.0, 2.0, 3.0), (ONE_PLUS, 1.5, 2.0, 5.0, 20.0)
    ):
        closed = _closed_form(b, t, alpha)
        if closed is None:
            continue
        numeric = numeric_renyi_divergence(GndParams(0.0, 1.0, b), t, alpha)
        worst = max(worst, abs(closed - numeric) / max(abs(numeric), 1e-300))
    elapsed = time.monotonic() - start
    assert worst <= 1e-6, f"worst relative gap {worst}"
    assert elapsed < 60.0, f"grid took {elapsed:.1f}s"
    _ok(f"divergence closed forms match quadrature (worst rel {worst:.2e}, {elapsed:.1f}s)")


def test_witness_tightness():
    start = time.monotonic()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(3, 9))
        m = random_simplex(rng, n)
        k = int(rng.integers(1, n - 1))
        beta = float(rng.choice([0.5, 0.75, 1.0]))
        try:
            spec = TopKSpec(k=k, beta=beta, n=n)
        except ValueError:
            continue
        alpha = float(rng.choice([1.25, 2.0, 4.0, 8.0]))
        sol = worst_case_map(m, spec, alpha)
        gap = abs(
            renyi_robustness_divergence(sol.m_tilde, m, alpha) - eps_robust(m, spec, alpha)
        )
        worst = max(worst, gap)
    elapsed = time.monotonic() - start
    assert worst <= 1e-9, f"worst tightness gap {worst}"
    assert elapsed < 30.0, f"took {elapsed:.1f}s"
    _ok(f"witness tightness within 1e-9 on 1000 maps (worst {worst:.2e}, {elapsed:.1f}s)")


def test_witness_minimality_against_brute_force():
    rng = np.random.default_rng(7)
    worst_undercut = 0.0
    for instance in range(100):
        n = int(rng.integers(4, 7))
        m = random_simplex(rng, n, floor=1e-3)
        k = int(rng.integers(1, min(3, n - 1) + 1))
        beta = 1.0 if k == 1 else float(rng.choice([1.0, 0.5]))
        try:
            spec = TopKSpec(k=k, beta=beta, n=n)
        except ValueError:
            continue
        alpha = float(rng.choice([1.5, 2.0, 3.0]))
        closed = eps_robust(m, spec, alpha)
        found = brute_force_min_divergence(
            m, k=k, k0=spec.k0, alpha=alpha, restarts=50, seed=instance
        )
        worst_undercut = max(worst_undercut, closed - found)
    assert worst_undercut <= 1e-4, f"brute force undercut the budget by {worst_undercut}"
    _ok(f"constrained search never undercuts the budget (worst gap {worst_undercut:.2e})")


def test_budget_phi_identity():
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(300):
        n = int(rng.integers(4, 12))
        m = random_simplex(rng, n)
        k = int(rng.integers(1, n - 1))
        spec = TopKSpec(k=k, beta=1.0, n=n)
        alpha = float(rng.choice([1.5, 2.0, 6.0])) if rng.random() < 0.8 else ONE_PLUS
        gap = abs(eps_robust(m, spec, alpha) - (-math.log1p(phi_value(m, spec, alpha))))
        worst = max(worst, gap)
    assert worst <= 1e-12
    _ok(f"budget equals -ln(1 + phi) within 1e-12 (worst {worst:.2e})")


SIGMA_SPEC = SweepSpec(
    axis="sigma", values=(0.05, 0.1, 0.15, 0.2, 0.3), repetitions=3, seed=0,
    attack_size=0.01, samples=50, attack_iterations=60, attack_lr=0.01, k=9,
)
L_SPEC = SweepSpec(
    axis="L", values=(0.005, 0.01, 0.02, 0.04), repetitions=3, seed=0,
    sigma=0.3, samples=50, attack_iterations=60, attack_lr=0.01, k=9,
)


def test_table_structure_and_directions():
    rng = np.random.default_rng(3)
    m = random_simplex(rng, 36)
    spec = TopKSpec(k=9, beta=0.75, n=36)
    # exact linear scaling in the noise level
    for d_prior in (1.0, 2.0, math.inf):
        base = certify_max_attack(m, spec, 0.1, d_prior, 36).attack_size
        for scale in (0.25, 3.0, 11.0):
            got = certify_max_attack(m, spec, 0.1 * scale, d_prior, 36).attack_size
            assert got == pytest.approx(scale * base, rel=1e-12)
    # uniform map certifies nothing
    uniform = np.full(36, 1 / 36)
    for d_prior in (1.0, 2.0, math.inf):
        assert certify_max_attack(uniform, spec, 0.3, d_prior, 36).attack_size == 0.0
    # certified beta directions on desk-scale sweeps
    sigma_rows = run_sweep(SIGMA_SPEC).rows
    betas_sigma = [r.beta_theory for r in sigma_rows]
    assert all(b >= a - 1e-12 for a, b in zip(betas_sigma, betas_sigma[1:]))
    assert betas_sigma[-1] > betas_sigma[0]
    l_rows = run_sweep(L_SPEC).rows
    betas_l = [r.beta_theory for r in l_rows]
    assert all(b <= a + 1e-12 for a, b in zip(betas_l, betas_l[1:]))
    assert betas_l[-1] < betas_l[0]
    _ok(
        "certified size linear in sigma, zero on uniform; certified beta "
        f"rises with sigma {[round(b, 3) for b in betas_sigma]} and falls "
        f"with attack size {[round(b, 3) for b in betas_l]}"
    )


def test_soundness_theoretical_below_experimental():
    violations = 0
    total = 0
    for spec in (SIGMA_SPEC, L_SPEC):
        for value in spec.values:
            for rep in range(spec.repetitions):
                beta_exp, beta_theory, _, _ = run_one_cell(spec, value, rep)
                total += 1
                violations += beta_theory > beta_exp + 0.05
    assert violations / total <= 0.01, f"{violations}/{total} unsound cells"
    _ok(f"certified beta <= measured beta + 0.05 on {total - violations}/{total} cells")


def test_concentration_validity():
    start = time.monotonic()
    report = concentration_suite(runs=1000, t_samples=50, confidence=0.95, t_reference=100_000)
    elapsed = time.monotonic() - start
    assert report.passed, report.line()
    assert elapsed < 600.0, f"took {elapsed:.1f}s"
    _ok(f"finite-sample bound valid under resampling ({report.detail}, {elapsed:.1f}s)")


def test_attack_sanity():
    # zero budget and linear models return the clean image
    linear = sc.GradientInterpreter(sc.LinearModel(np.random.default_rng(0).normal(size=(2, 6))))
    img6 = sc.Image(pixels=np.full(6, 0.5), dims=(6, 1, 1), label=0)
    res = sc.topk_attack(linear, img6, sc.AttackConfig(k=2, budget=0.1, iterations=10))
    assert np.array_equal(res.x_adv.pixels, img6.pixels) and res.achieved_overlap == 1.0
    quad = sc.GradientInterpreter(sc.QuadraticModel(np.diag([1.0, 0.95, 0.1, 0.05])[None]))
    img4 = sc.Image(pixels=np.array([1.0, 1.0, 0.5, 0.5]), dims=(4, 1, 1), label=0)
    res0 = sc.topk_attack(quad, img4, sc.AttackConfig(k=1, budget=0.0, iterations=5))
    assert np.array_equal(res0.x_adv.pixels, img4.pixels)
    # budget respected at every iterate
    mlp = sc.GradientInterpreter(sc.random_model("mlp", 16, 3, 9, hidden=(12,)))
    img16 = sc.Image(pixels=np.random.default_rng(4).uniform(0, 1, 16), dims=(4, 4, 1), label=1)
    for norm_d in (2.0, math.inf):
        r = sc.topk_attack(
            mlp, img16,
            sc.AttackConfig(k=4, budget=0.05, norm_d=norm_d, lr=0.02, iterations=50,
                            record_iterates=True),
        )
        diffs = r.iterates - img16.pixels
        norms = (
            np.max(np.abs(diffs), axis=1) if norm_d == math.inf
            else np.linalg.norm(diffs, axis=1)
        )
        assert np.all(norms <= 0.05 + 1e-9)
    # corner-search oracle on the quadratic toy
    cfg = sc.AttackConfig(k=1, budget=0.5, lr=0.05, iterations=40)
    best_attack = sc.topk_attack(quad, img4, cfg).objective_trace.max()
    targets = top_k_set(quad(img4.pixels, 0), 1)
    best_corner = max(
        -float(np.sum(quad(img4.pixels + 0.5 * np.array(s), 0)[targets]))
        for s in itertools.product((-1.0, 1.0), repeat=4)
    )
    assert abs(best_attack - best_corner) <= 0.05 * abs(best_corner)
    _ok(
        "attack honors degenerate cases, stays inside the ball, and matches "
        f"the corner oracle ({best_attack:.4f} vs {best_corner:.4f})"
    )


def test_defense_direction_transfer_attack():
    start = time.monotonic()
    wins = 0
    seeds = 100
    for seed in range(seeds):
        image, mask = synthetic_case(seed, 6, 6, 1)
        model = probe_model(image, mask, seed, (24,))
        interp = sc.GradientInterpreter(model)
        k = image.n // 4
        cfg = sc.SmoothingConfig(samples=50, sigma=0.15, seed=seed, k_star=float(k), eta=0.15)
        adv = sc.topk_attack(
            interp, image, sc.AttackConfig(k=k, budget=0.05, lr=0.01, iterations=150)
        )
        base_overlap = adv.achieved_overlap
        m_clean = sc.smooth(interp, image, cfg)
        m_adv = sc.smooth(interp, adv.x_adv, cfg)
        smoothed_overlap = top_k_overlap(m_clean.scores, m_adv.scores, k)
        wins += smoothed_overlap >= base_overlap
    elapsed = time.monotonic() - start
    assert wins >= 70, f"smoothed map at least as robust on only {wins}/{seeds} seeds"
    assert elapsed < 300.0, f"took {elapsed:.1f}s"
    _ok(f"smoothing defends the transfer attack on {wins}/{seeds} seeds ({elapsed:.1f}s)")


def test_exact_overlap_example():
    assert top_k_overlap(np.array([1.0, 2.0, 3.0]), np.array([2.0, 1.0, 2.0]), 2) == 0.5
    _ok("top-2 overlap of (1,2,3) vs (2,1,2) is exactly 0.5")


def test_gradient_checks_per_architecture():
    rng = np.random.default_rng(55)
    cases = [
        ("linear", {}),
        ("quadratic", {}),
        ("mlp", {"hidden": (7,)}),
        ("mlp", {"hidden": (9, 5), "activation": "softplus"}),
        ("conv", {"dims": (5, 5, 1)}),
    ]
    worst = 0.0
    for kind, kwargs in cases:
        for trial in range(100):
            n = 25 if kind == "conv" else int(rng.integers(3, 9))
            model = sc.random_model(kind, n, 3, seed=trial, **kwargs)
            x = rng.uniform(0, 1, n)
            label = int(rng.integers(0, 3))
            analytic = model.input_gradient(x, label)
            h = 1e-5
            numeric = np.empty(n)
            for j in range(n):
                xp = x.copy()
                xp[j] += h
                up = model.forward(xp)[label]
                xp[j] -= 2 * h
                dn = model.forward(xp)[label]
                numeric[j] = (up - dn) / (2 * h)
            worst = max(worst, float(np.max(np.abs(analytic - numeric))))
    assert worst <= 1e-6
    _ok(f"analytic gradients match central differences (worst {worst:.2e})")


def test_determinism_across_runs_and_threads(tmp_path):
    from smoothcert.cli import main
    import json

    def run(args):
        return main([str(a) for a in args])

    maps = [tmp_path / f"m{i}.rrsm" for i in range(3)]
    for threads, path in zip((1, 1, 4), maps):
        code = run(
            ["--threads", threads, "smooth", "--synthetic", 5, "--samples", 30,
             "--sigma", "0.15", "--seed", 11, "--out", path]
        )
        assert code == 0
    assert maps[0].read_bytes() == maps[1].read_bytes() == maps[2].read_bytes()

    certs = [tmp_path / f"c{i}.json" for i in range(2)]
    for path in certs:
        assert run(
            ["certify", "--map", maps[0], "--k", 9, "--beta", "0.75", "--sigma", "0.15",
             "--d-prior", "inf", "--out", path]
        ) == 0
    assert certs[0].read_bytes() == certs[1].read_bytes()

    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "axis": "sigma", "values": [0.1, 0.2], "repetitions": 1, "seed": 2,
        "samples": 10, "attack_iterations": 6, "k": 6,
    }))
    csvs = [tmp_path / f"s{i}.csv" for i in range(3)]
    for threads, path in zip((1, 1, 4), csvs):
        assert run(["--threads", threads, "sweep", "--spec", spec_path, "--out", path]) == 0
    assert csvs[0].read_bytes() == csvs[1].read_bytes() == csvs[2].read_bytes()
    _ok("smooth, certify, and sweep outputs are byte-identical across runs and thread counts")
