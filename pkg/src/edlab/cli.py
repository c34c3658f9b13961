"""Command line entry point ``edlab``.

Exit codes: 0 success, 2 configuration error, 3 numerical contract violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from .convex_body import DomainError, parse_body
from .ecdf import EmpiricalCDF
from .fourier import QuadratureError, exact_coefficient, fourier_rows
from .harness import (ConfigError, ExperimentConfig, derive_rng, fmt, load_config,
                      run_experiment)
from .lattice import ConsistencyError

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _pair(text):
    try:
        v = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two numbers, got {text!r}") from None
    if len(v) != 2:
        raise argparse.ArgumentTypeError(f"expected two numbers, got {text!r}")
    return v


def _ints(text):
    return tuple(int(t) for t in text.split(","))


def _floats(text):
    return tuple(float(t) for t in text.split(","))


def _emit(obj, out):
    line = json.dumps(obj, sort_keys=True, default=lambda v: float(fmt(v)))
    if out:
        with open(out, "a") as fh:
            fh.write(line + "\n")
    else:
        print(line)


def _csv(header, rows, out):
    lines = [",".join(header)] + [",".join(fmt(v) if isinstance(v, float) else str(v) for v in r)
                                  for r in rows]
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_fourier(a):
    body = parse_body(a.body)
    rows = fourier_rows(body, a.r, a.kmax)
    if a.method == "quadrature":
        s = math.sqrt(a.r)
        rows = [(k1, k2, exact_coefficient(body, a.r, (k1, k2), "quadrature", a.tol).real / s, d, g)
                for k1, k2, _, d, g in rows]
    _csv(["k1", "k2", "ck", "dk", "gk"], rows, a.out)


def cmd_discrepancy(a):
    from .ergodic import ActionConfig, delta_ladder, discrepancy_direct

    body = parse_body(a.body)
    cfg = ActionConfig(a.r, a.x, a.alpha, a.N, eps=a.eps)
    rec = {"r": cfg.r, "x": cfg.x, "alpha": cfg.alpha, "N": cfg.N, "eps": cfg.eps}
    if a.mode == "direct":
        rec["discrepancy"] = discrepancy_direct(cfg, body)
    else:
        rec.update(delta_ladder(cfg, body))
    _emit(rec, a.out)


def cmd_smooth(a):
    from .smooth import AxisSeries, cocycle_residual, sample_limit_d1

    body = parse_body(a.body)
    if a.mode == "cocycle":
        series = AxisSeries(body, a.r, a.kmax)
        rng = derive_rng(a.seed, 10)
        rows = []
        for _ in range(a.samples):
            x, al = rng.random(2), rng.random(2)
            n = int(rng.integers(0, max(a.N, 1)))
            rows.append((float(x[0]), float(x[1]), float(al[0]), float(al[1]), n,
                         cocycle_residual(series, x, al, n)))
        _csv(["x1", "x2", "alpha1", "alpha2", "n", "residual"], rows, a.out)
    else:
        vals = np.sort(sample_limit_d1(body, a.r, a.samples, derive_rng(a.seed, 3), a.kmax))
        _csv(["d1_limit"], [(float(v),) for v in vals], a.out)


def cmd_lattice(a):
    from .ergodic import ActionConfig, axis_nodes
    from .lattice import axis_to_frame, flow_lattice, frame_to_axis, haar_sample, mean_inverse_height

    if a.mode == "reduce":
        _emit(flow_lattice(a.N, a.alpha[0]).to_dict(), a.out)
    elif a.mode == "correspond":
        cfg = ActionConfig(0.1, (0.0, 0.0), a.alpha, a.N, eps=a.eps)
        rec = {"N": a.N, "alpha": cfg.alpha, "eps": a.eps}
        for i in range(2):
            fr = flow_lattice(a.N, cfg.alpha[i])
            k = axis_nodes(cfg, i, "S_hat")
            m = axis_to_frame(fr, cfg.alpha[i], a.N, k)
            back = frame_to_axis(fr, cfg.alpha[i], m)
            rec[f"axis{i + 1}"] = {"frame": fr.to_dict(), "nodes": int(k.size),
                                   "roundtrip": bool(np.array_equal(back, k)),
                                   "max_norm": float(np.hypot(m[:, 0], m[:, 1]).max()) if k.size else 0.0}
        _emit(rec, a.out)
    else:
        y = []
        for j in range(a.samples):
            fr = haar_sample(derive_rng(a.seed, 6, j))
            y.append(fr.provenance[3])
        y = np.array(y)
        _emit({"samples": a.samples, "mean_inverse_height": float(np.mean(1 / y)),
               "quadrature": mean_inverse_height()}, a.out)


def cmd_limit_law(a):
    from .limit_law import TruncationPolicy, sample_limit_values

    body = parse_body(a.body)
    pol = TruncationPolicy(eps=a.eps, pcheck_max=a.pcheck_max, z_max=a.z_max)
    F = EmpiricalCDF(sample_limit_values(body, pol, a.samples, a.seed))
    q = F.quantiles(512)
    rows = [("sample", float(v), "") for v in F.values] + [("cdf", float(z), float(F(z))) for z in q]
    _csv(["kind", "z", "F"], rows, a.out)


def _pipeline(name):
    def run(a):
        overrides = {"seed": a.seed, "out": a.out, "samples": a.samples,
                     "N": a.N, "eps": a.eps, "body": a.body}
        if a.config:
            cfg = load_config(a.config, pipeline=name, **overrides)
        else:
            overrides = {k: v for k, v in overrides.items() if v is not None}
            overrides.setdefault("body", "disk")
            cfg = ExperimentConfig(pipeline=name, **overrides)
        res = run_experiment(cfg)
        _emit({"pipeline": name, "out": cfg.out, "result": res["result"], "outputs": res["outputs"]},
              None)
    return run


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="key=value configuration file")
        sp.add_argument("--out", help="output path")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("fourier", help="Fourier coefficient table")
    sp.add_argument("--body", default="disk")
    sp.add_argument("--r", type=float, default=0.3)
    sp.add_argument("--kmax", type=int, default=8)
    sp.add_argument("--method", choices=("bessel", "quadrature"), default="bessel")
    sp.add_argument("--tol", type=float, default=1e-10, help="quadrature error target")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_fourier)

    sp = sub.add_parser("discrepancy", help="direct count or truncation ladder")
    sp.add_argument("--body", default="disk")
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--x", type=_pair, required=True)
    sp.add_argument("--alpha", type=_pair, required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--mode", choices=("direct", "ladder"), default="direct")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_discrepancy)

    sp = sub.add_parser("smooth-part", help="cocycle residuals or axis limit samples")
    sp.add_argument("--body", default="disk")
    sp.add_argument("--r", type=float, default=0.3)
    sp.add_argument("--N", type=int, default=1024)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--kmax", type=int, default=200)
    sp.add_argument("--mode", choices=("cocycle", "limit-cdf"), default="cocycle")
    common(sp)
    sp.set_defaults(func=cmd_smooth)

    sp = sub.add_parser("lattice", help="flowed frames, node correspondence, Haar checks")
    sp.add_argument("--N", type=int, default=1024)
    sp.add_argument("--alpha", type=_pair, default=(0.0, 0.0))
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--mode", choices=("reduce", "correspond", "haar-test"), default="reduce")
    common(sp)
    sp.set_defaults(func=cmd_lattice)

    sp = sub.add_parser("limit-law", help="Monte Carlo samples of the limit functional")
    sp.add_argument("--body", default="disk")
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--pcheck-max", type=int, default=20)
    sp.add_argument("--z-max", type=float, default=10.0)
    sp.add_argument("--samples", type=int, default=200)
    common(sp)
    sp.set_defaults(func=cmd_limit_law)

    for name in ("theorem1a", "theorem1b", "phases", "en-measure"):
        sp = sub.add_parser(name, help=f"run the {name} pipeline")
        sp.add_argument("--body")
        sp.add_argument("--N", type=_ints)
        sp.add_argument("--eps", type=_floats)
        sp.add_argument("--samples", type=int)
        sp.add_argument("--config")
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int)
        sp.set_defaults(func=_pipeline(name))
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        a.func(a)
    except (ConfigError, DomainError) as e:
        print(f"edlab: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConsistencyError, QuadratureError, ArithmeticError) as e:
        print(f"edlab: numerical contract violated: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
