"""Command-line surface: smooth / certify / attack / eval / sweep / selftest.

Exit status: 0 on success, 2 on argument or input validation errors, 1 on
internal failures.  Every subcommand is deterministic given its --seed, and
output bytes do not depend on --threads.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys

import numpy as np

from . import __version__
from .attack import AttackConfig, topk_attack
from .certify import (
    InfeasibleSpecError,
    RobustnessCertificate,
    TopKSpec,
    certify_beta,
    certify_max_attack,
)
from .concentration import certify_max_attack_lower
from .evaluation import (
    PointingGameCase,
    SweepSpec,
    pointing_score,
    run_sweep,
    synthetic_case,
)
from .mapio import MapFormatError, encode_map, read_map, write_map
from .models import GradientInterpreter, random_model
from .scoring import top_k_overlap
from .smoothing import SmoothingConfig, smooth
from .types import Image, unconstrained_image

SCHEMA_VERSION = 1


class CliValidationError(ValueError):
    pass


def _parse_d_prior(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    value = float(text)
    if value < 1:
        raise CliValidationError(f"--d-prior must be >= 1 or inf, got {text}")
    return value


def _load_image(args) -> Image:
    if args.image is not None:
        arr = np.load(args.image)
        if arr.ndim == 1:
            arr = arr[:, None, None]
        if arr.ndim != 3:
            raise CliValidationError(f"image array must be (h, w, c), got shape {arr.shape}")
        flat = arr.reshape(-1).astype(float)
        if np.min(flat) < 0.0 or np.max(flat) > 1.0:
            # adversarially perturbed inputs may exit [0, 1]; accept them
            return unconstrained_image(flat, arr.shape, args.label)
        return Image(pixels=flat, dims=arr.shape, label=args.label)
    image, _ = synthetic_case(args.synthetic, args.height, args.width, args.channels)
    return Image(pixels=image.pixels, dims=image.dims, label=args.label)


def _build_interpreter(args, image: Image) -> GradientInterpreter:
    hidden = tuple(int(h) for h in args.hidden.split(",")) if args.hidden else (16,)
    model = random_model(
        args.model,
        image.n,
        args.classes,
        args.model_seed,
        hidden=hidden,
        dims=image.dims if args.model == "conv" else None,
    )
    return GradientInterpreter(model, signed=args.signed)


def _add_image_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--image", help="input image as a .npy (h, w, c) array in [0, 1]")
    p.add_argument("--synthetic", type=int, default=0,
                   help="generate a synthetic scene from this seed when no --image is given")
    p.add_argument("--height", type=int, default=6)
    p.add_argument("--width", type=int, default=6)
    p.add_argument("--channels", type=int, default=1)
    p.add_argument("--label", type=int, default=0)
    p.add_argument("--model", choices=["linear", "mlp", "conv", "quadratic"], default="mlp")
    p.add_argument("--model-seed", type=int, default=0)
    p.add_argument("--hidden", default="16", help="comma-separated hidden sizes for mlp")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--signed", action="store_true", help="keep raw gradient signs")


def _finite_or_str(x: float):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else "-inf"
    return x


def certificate_document(cert: RobustnessCertificate) -> dict:
    """Flat certificate document with a fixed key order."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "mode": cert.mode,
        "d_prior": "inf" if cert.d_prior == math.inf else cert.d_prior,
        "d_star": cert.d_star,
        "sigma": cert.sigma,
        "T": cert.sample_count,
        "k": cert.k,
        "beta": cert.beta,
        "L": _finite_or_str(cert.attack_size),
        "alpha_star": cert.alpha_star if isinstance(cert.alpha_star, str) else float(cert.alpha_star),
        "eps_robust": _finite_or_str(cert.eps_robust_value),
    }
    if cert.confidence is not None:
        doc["eps_lower"] = _finite_or_str(cert.eps_lower)
        doc["confidence"] = cert.confidence
    doc["dimension_penalty_applied"] = cert.dimension_penalty_applied
    doc["map_digest"] = cert.map_digest
    doc["toolkit_version"] = __version__
    if cert.secondary_attack_size is not None:
        doc["kl_route_L"] = _finite_or_str(cert.secondary_attack_size)
    return doc


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w") as fh:
            fh.write(text)


def cmd_smooth(args) -> int:
    image = _load_image(args)
    interpreter = _build_interpreter(args, image)
    cfg = SmoothingConfig(
        samples=args.samples,
        sigma=args.sigma,
        d_prior=args.d_prior,
        seed=args.seed,
        k_star=args.k_star,
        eta=args.eta,
    )
    smap = smooth(interpreter, image, cfg, threads=args.threads)
    blob = write_map(args.out, smap.scores, smap.dims)
    sys.stdout.write(
        f"wrote {args.out}: n={smap.n}, T={smap.sample_count}, "
        f"sha256={hashlib.sha256(blob).hexdigest()}\n"
    )
    return 0


def cmd_certify(args) -> int:
    values, dims = read_map(args.map)
    digest = hashlib.sha256(encode_map(values, dims)).hexdigest()
    total = float(np.sum(values))
    if np.any(values <= 0.0) or abs(total - 1.0) > 1e-4:
        raise CliValidationError(
            "certify needs a smoothed map: strictly positive entries summing to 1"
        )
    scores = values / total
    n = scores.size
    if args.beta is not None:
        spec = TopKSpec(k=args.k, beta=args.beta, n=n)
        if args.confidence is not None:
            if args.samples is None:
                raise CliValidationError("--confidence needs --samples (the map's T)")
            cert = certify_max_attack_lower(
                scores, spec, args.sigma, args.d_prior, args.samples, args.confidence, n
            )
        else:
            cert = certify_max_attack(scores, spec, args.sigma, args.d_prior, n)
    else:
        if args.attack_size is None:
            raise CliValidationError("provide either --beta or --attack-size")
        cert = certify_beta(scores, args.k, args.attack_size, args.sigma, args.d_prior, n)
    doc = certificate_document(cert)
    doc["map_digest"] = digest
    if args.samples is not None:
        doc["T"] = args.samples
    _emit(json.dumps(doc, indent=2, allow_nan=False) + "\n", args.out)
    return 0


def cmd_attack(args) -> int:
    image = _load_image(args)
    interpreter = _build_interpreter(args, image)
    cfg = AttackConfig(
        k=args.k,
        budget=args.attack_size,
        norm_d=args.norm,
        lr=args.lr,
        iterations=args.iterations,
        gradient_mode=args.gradient_mode,
        enforce_label=args.enforce_label,
    )
    result = topk_attack(interpreter, image, cfg)
    np.save(args.out_image, result.x_adv.pixels.reshape(image.dims))
    trace_doc = {
        "objective_trace": [float(v) for v in result.objective_trace],
        "achieved_overlap": result.achieved_overlap,
        "iterations_run": result.iterations_run,
        "label_flipped": result.label_flipped,
        "step_normalization": result.step_normalization,
        "budget": cfg.budget,
        "norm_d": "inf" if cfg.norm_d == math.inf else cfg.norm_d,
    }
    _emit(json.dumps(trace_doc, indent=2) + "\n", args.out_trace)
    sys.stdout.write(
        f"overlap after attack: {result.achieved_overlap:.4f} "
        f"(label_flipped={result.label_flipped})\n"
    )
    return 0


def cmd_eval(args) -> int:
    if args.metric == "overlap":
        a, _ = read_map(args.map_a)
        b, _ = read_map(args.map_b)
        sys.stdout.write(f"{top_k_overlap(a, b, args.k):.10g}\n")
        return 0
    values, _ = read_map(args.map_a)
    mask = np.load(args.mask).reshape(-1).astype(bool)
    score = pointing_score(
        PointingGameCase(map_scores=values, object_mask=mask, k=args.k, tau=args.tau)
    )
    sys.stdout.write(f"hard={score.hard:+d} soft={score.soft:.10g}\n")
    return 0


def cmd_sweep(args) -> int:
    with open(args.spec) as fh:
        raw = json.load(fh)
    raw.setdefault("timing", args.timing)
    if "values" in raw:
        raw["values"] = tuple(raw["values"])
    if "hidden" in raw:
        raw["hidden"] = tuple(raw["hidden"])
    spec = SweepSpec(**raw)
    result = run_sweep(spec)
    _emit(result.to_csv(), args.out)
    errors = [r.error for r in result.rows if r.error]
    for err in errors:
        sys.stderr.write(f"sweep cell failed: {err}\n")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_all

    reports = run_all(fast=args.fast)
    ok = True
    for rep in reports:
        sys.stdout.write(rep.line() + "\n")
        ok = ok and rep.passed
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smoothcert",
        description="Noise-smoothed attribution maps with certified top-k robustness.",
    )
    parser.add_argument("--threads", type=int, default=1, help="worker cap for sample evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("smooth", help="smooth one image's attribution map")
    _add_image_model_flags(p)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--d-prior", type=_parse_d_prior, default=math.inf)
    p.add_argument("--eta", type=float, default=1e-4,
                   help="rank-weight decay; the default suits very large n, "
                        "use ~0.1 for desk-scale maps")
    p.add_argument("--k-star", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output map file (.rrsm)")
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("certify", help="certify a smoothed map file")
    p.add_argument("--map", required=True)
    p.add_argument("--d-prior", type=_parse_d_prior, default=math.inf)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--attack-size", type=float, default=None)
    p.add_argument("--confidence", type=float, default=None)
    p.add_argument("--samples", type=int, default=None, help="T used to build the map")
    p.add_argument("--out", default=None, help="certificate JSON path (default stdout)")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("attack", help="attack the top-k attributions of one image")
    _add_image_model_flags(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--attack-size", type=float, default=8.0 / 256.0)
    p.add_argument("--norm", type=_parse_d_prior, default=math.inf)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--iterations", type=int, default=300)
    p.add_argument("--gradient-mode", choices=["analytic", "finite_difference"],
                   default="analytic")
    p.add_argument("--enforce-label", action="store_true")
    p.add_argument("--out-image", required=True, help="adversarial image (.npy)")
    p.add_argument("--out-trace", default=None, help="objective trace JSON (default stdout)")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("eval", help="overlap and pointing-game metrics")
    ev = p.add_subparsers(dest="metric", required=True)
    po = ev.add_parser("overlap")
    po.add_argument("--map-a", required=True)
    po.add_argument("--map-b", required=True)
    po.add_argument("--k", type=int, required=True)
    po.set_defaults(func=cmd_eval, metric="overlap")
    pp = ev.add_parser("pointing")
    pp.add_argument("--map", dest="map_a", required=True, help="attribution map (.rrsm)")
    pp.add_argument("--mask", required=True, help="object mask (.npy, boolean)")
    pp.add_argument("--k", type=int, required=True)
    pp.add_argument("--tau", type=float, default=0.5)
    pp.set_defaults(func=cmd_eval, metric="pointing")

    p = sub.add_parser("sweep", help="run a sweep spec (JSON) to CSV")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.add_argument("--timing", action="store_true",
                   help="record wall time per cell (off by default so bytes are reproducible)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("selftest", help="run the built-in oracle suites")
    p.add_argument("--fast", action="store_true")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: usage errors exit 2, --help exits 0
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (CliValidationError, MapFormatError, InfeasibleSpecError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except Exception as exc:  # internal failure
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
