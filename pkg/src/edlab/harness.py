"""Experiment plumbing: seeded samplers, statistics and reproducible run bundles."""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import platform
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import stats

from .convex_body import ConvexBody, DomainError, parse_body, support
from .ecdf import EmpiricalCDF, dkw_bound, ks_distance
from .ergodic import ActionConfig, delta_ladder_batch, in_E_N, product_discrepancy
from .lattice import Y_CUT, flow_lattice, gamma_phase, haar_sample_pair
from .limit_law import TruncationPolicy, sample_limit_values

__all__ = ["EmpiricalCDF", "ks_distance", "dkw_bound", "ConfigError", "ExperimentConfig",
           "derive_rng", "finite_n_d2_sample", "finite_n_d2_values", "en_measure", "equidistribution_gap",
           "phase_uniformity_test", "run_experiment", "replay", "load_config", "parse_config"]

log = logging.getLogger(__name__)

# first spawn-key component of each random stream
STREAM_FINITE, STREAM_LIMIT, STREAM_D1, STREAM_D1_LIMIT, STREAM_EN, STREAM_PHASE, STREAM_HAAR = range(7)


class ConfigError(ValueError):
    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def derive_rng(master: int, *key: int) -> np.random.Generator:
    """Independent generator reproducible from ``(master, key)``."""
    return np.random.default_rng(np.random.SeedSequence(int(master), spawn_key=tuple(key)))


def fmt(v) -> str:
    return format(float(v), ".17g")


# --- configuration ---------------------------------------------------------------

PIPELINES = ("theorem1a", "theorem1b", "phases", "en-measure", "limit-law")


@dataclass
class ExperimentConfig:
    pipeline: str
    body: str
    r_interval: tuple = (0.2, 0.4)
    N: tuple = (512,)
    eps: tuple = (0.1,)
    samples: int = 2000
    limit_samples: int | None = None
    seed: int = 0
    out: str = "edlab_out"
    r: float = 0.3
    z_max: float = 10.0
    pcheck_max: int = 20
    kmax: int = 4096
    mode: str = "exact-split"
    exclude_en: bool = False

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ConfigError("pipeline", f"unknown pipeline {self.pipeline!r}; choose from {PIPELINES}")
        try:
            body = parse_body(self.body)
        except DomainError as e:
            raise ConfigError("body", str(e)) from None
        a, b = self.r_interval
        if not 0.0 < a < b < body.r0:
            raise ConfigError("r_interval", f"need 0 < a < b < {body.r0}")
        if not 0.0 < self.r < body.r0:
            raise ConfigError("r", f"need 0 < r < {body.r0}")
        if any(n < 1 for n in self.N):
            raise ConfigError("N", "entries must be >= 1")
        if any(not 0 < e < 1 for e in self.eps):
            raise ConfigError("eps", "entries must lie in (0, 1)")
        if self.samples < 100 and self.pipeline in ("theorem1a", "theorem1b"):
            raise ConfigError("samples", "KS-bearing runs need at least 100 samples")
        if self.mode not in ("exact-split", "ladder"):
            raise ConfigError("mode", "must be exact-split or ladder")

    @property
    def body_obj(self) -> ConvexBody:
        return parse_body(self.body)

    @property
    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(eps=self.eps[0], pcheck_max=self.pcheck_max, z_max=self.z_max)


def _convert(name, raw, typ):
    raw = raw.strip()
    try:
        if name in ("r_interval",):
            v = tuple(float(t) for t in raw.split(","))
            if len(v) != 2:
                raise ValueError("expected a,b")
            return v
        if name == "N":
            return tuple(int(t) for t in raw.split(","))
        if name == "eps":
            return tuple(float(t) for t in raw.split(","))
        if name == "exclude_en":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError("expected a boolean")
            return raw.lower() in ("true", "1", "yes")
        if name == "limit_samples":
            return None if raw.lower() == "none" else int(raw)
        if typ in ("int",):
            return int(raw)
        if typ in ("float",):
            return float(raw)
        return raw
    except ValueError as e:
        raise ConfigError(name, f"cannot parse {raw!r} ({e})") from None


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """``key = value`` lines; ``#`` starts a comment.  Keys are the config fields."""
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        if not eq:
            raise ConfigError(key or f"line {lineno}", "expected key = value")
        if key not in types:
            raise ConfigError(key, "unknown field")
        values[key] = _convert(key, raw, types[key])
    values.update({k: v for k, v in overrides.items() if v is not None})
    for req in ("pipeline", "body"):
        if req not in values:
            raise ConfigError(req, "missing required field")
    return ExperimentConfig(**values)


def load_config(path: str, **overrides) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e.strerror}") from None
    return parse_config(text, **overrides)


# --- finite-N sampling ----------------------------------------------------------------

def finite_n_d2_values(body: ConvexBody, r_interval, N: int, n_samples: int, seed: int,
                       mode: str = "exact-split", eps: float = 0.1, exclude_en: bool = False,
                       max_resample: int = 100):
    """Draws of ``D_{C,2}/(r^{1/2} N^{1/2})`` with ``(r, x, a)`` uniform.

    ``exact-split`` subtracts the exact axis part from the direct count;
    ``ladder`` evaluates the linearised large-node sum instead.  With
    ``exclude_en`` a draw whose rotation lies in ``E_N`` is redrawn (at most
    ``max_resample`` times; the counts are returned).
    """
    a, b = r_interval
    out = np.empty(n_samples)
    redraws = 0
    exhausted = 0
    hits = 0
    for j in range(n_samples):
        rng = derive_rng(seed, STREAM_FINITE, N, j)
        r = rng.uniform(a, b)
        x = rng.random(2)
        al = rng.random(2)
        inside = in_E_N(al, N, eps)
        hits += inside
        tries = 0
        while exclude_en and inside:
            if tries == max_resample:
                exhausted += 1
                break
            al = rng.random(2)
            redraws += 1
            tries += 1
            inside = in_E_N(al, N, eps)
        cfg = ActionConfig(r, tuple(x), tuple(al), N, eps=eps)
        if mode == "exact-split":
            out[j] = product_discrepancy(cfg, body) / math.sqrt(r * N)
        elif mode == "ladder":
            out[j] = delta_ladder_batch([cfg], body, members=("delta_prime",)).delta_prime[0]
        else:
            raise ValueError(mode)
    info = {"en_hits": int(hits), "en_rate": hits / n_samples, "redraws": redraws,
            "exhausted": exhausted, "en_bound": 2 * eps**0.25}
    return out, info


def finite_n_d2_sample(config: ExperimentConfig, N: int | None = None):
    N = config.N[0] if N is None else N
    vals, info = finite_n_d2_values(config.body_obj, config.r_interval, N, config.samples,
                                    config.seed, config.mode, config.eps[0], config.exclude_en)
    return EmpiricalCDF(vals, seeds=(config.seed, STREAM_FINITE, N)), info


# --- E_N, equidistribution, phases ------------------------------------------------------

def en_measure(N: int, eps: float, draws: int, seed: int) -> dict:
    """Monte Carlo measure of ``E_N`` and its standard error."""
    rng = derive_rng(seed, STREAM_EN, N)
    al = rng.random((draws, 2))
    hits = np.fromiter((in_E_N(a, N, eps) for a in al), dtype=bool, count=draws)
    p = hits.mean()
    sigma = math.sqrt(max(p * (1 - p), 0.0) / draws)
    bound = 2 * eps**0.25
    return {"N": N, "eps": eps, "draws": draws, "measure": float(p), "sigma": sigma,
            "bound": bound, "within": bool(p <= bound + 3 * sigma)}


def frame_norm(frame) -> float:
    return float(math.sqrt(frame.e1 @ frame.e1 + frame.e2 @ frame.e2))


def decay_observable(frames) -> float:
    """``exp(-|e(L_1)| - |e(L_2)|)`` with ``|e(L)|`` the norm of the frame in R^4."""
    return math.exp(-frame_norm(frames[0]) - frame_norm(frames[1]))


def equidistribution_gap(Ns, n_samples: int, seed: int) -> dict:
    """``|mean over a of Phi(L(N, a))  -  Haar mean of Phi|`` for each ``N``.

    The same rotation draws and Haar draws are reused across ``N``.
    """
    rng = derive_rng(seed, STREAM_PHASE, 0)
    al = rng.random((n_samples, 2))
    haar = np.array([decay_observable(haar_sample_pair(derive_rng(seed, STREAM_HAAR, j)))
                     for j in range(n_samples)])
    out = {"haar_mean": float(haar.mean()), "haar_se": float(haar.std(ddof=1) / math.sqrt(n_samples))}
    for N in Ns:
        vals = np.array([decay_observable((flow_lattice(N, a[0]), flow_lattice(N, a[1]))) for a in al])
        out[int(N)] = {"mean": float(vals.mean()), "gap": float(abs(vals.mean() - haar.mean()))}
    return out


INDEX_A = ((1, 1), (1, 0), (1, 0))
INDEX_B = ((1, -1), (0, 1), (1, 1))


def _index_phase(body, r, N, frames, index):
    p, m1, m2 = index
    X = np.array([p[0] * frames[0].vectors([m1])[0, 0], p[1] * frames[1].vectors([m2])[0, 0]])
    return float(np.mod(r * N * support(body, X), 1.0))


def phase_uniformity_test(body: ConvexBody, r_interval, Ns, n_samples: int, seed: int,
                          bins: int = 8) -> dict:
    """Uniformity of ``r N P(X_{p,m}) mod 1`` and of the phases ``N x_i e_{j1}`` for
    uniform ``(r, x, a)``, and bin-independence of two distinct indices."""
    report = {}
    for N in Ns:
        rng = derive_rng(seed, STREAM_PHASE, 1, N)
        A = np.empty(n_samples)
        B = np.empty(n_samples)
        G = np.empty((n_samples, 4))
        for j in range(n_samples):
            r = rng.uniform(*r_interval)
            x = rng.random(2)
            al = rng.random(2)
            frames = (flow_lattice(N, al[0]), flow_lattice(N, al[1]))
            A[j] = _index_phase(body, r, N, frames, INDEX_A)
            B[j] = _index_phase(body, r, N, frames, INDEX_B)
            cfg = ActionConfig(r, tuple(x), tuple(al), N)
            G[j] = np.concatenate([gamma_phase(cfg, i, frames[i]) for i in range(2)])
        h, _, _ = np.histogram2d(A, B, bins=bins, range=[[0, 1], [0, 1]])
        chi = stats.chisquare(h.ravel())
        report[int(N)] = {
            "ks_index_a": float(stats.kstest(A, "uniform").statistic),
            "ks_index_b": float(stats.kstest(B, "uniform").statistic),
            "chi2_pair": float(chi.statistic),
            "chi2_pair_pvalue": float(chi.pvalue),
            "ks_gamma": [float(stats.kstest(G[:, c], "uniform").statistic) for c in range(4)],
        }
    return report


# --- run bundles ---------------------------------------------------------------------

def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row) + "\n")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1, default=_jsonable)
        fh.write("\n")


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(fmt(v))
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v))


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def cdf_rows(F: EmpiricalCDF, n: int = 512):
    z = F.quantiles(n)
    return [(v, F(v)) for v in z]


def _run_theorem1a(cfg, out):
    from .smooth import sample_finite_d1, sample_limit_d1

    body = cfg.body_obj
    N = cfg.N[0]
    fin = sample_finite_d1(body, cfg.r, N, cfg.samples, derive_rng(cfg.seed, STREAM_D1, N))
    n_lim = cfg.limit_samples or cfg.samples
    lim = sample_limit_d1(body, cfg.r, n_lim, derive_rng(cfg.seed, STREAM_D1_LIMIT), cfg.kmax)
    F, G = EmpiricalCDF(fin), EmpiricalCDF(lim)
    _write_csv(os.path.join(out, "finite.csv"), ["d1_over_N"], [(v,) for v in F.values])
    _write_csv(os.path.join(out, "limit.csv"), ["d1_limit"], [(v,) for v in G.values])
    res = {"N": N, "ks": ks_distance(F, G), "ks_reflection": ks_distance(G, G.reflect())}
    _write_json(os.path.join(out, "summary.json"), res)
    return res


def _run_theorem1b(cfg, out):
    body = cfg.body_obj
    n_lim = cfg.limit_samples or cfg.samples
    lim = EmpiricalCDF(sample_limit_values(body, cfg.policy, n_lim, cfg.seed))
    _write_csv(os.path.join(out, "limit.csv"), ["L"], [(v,) for v in lim.values])
    res = {"ks": {}, "en_rate": {}}
    for N in cfg.N:
        vals, info = finite_n_d2_values(body, cfg.r_interval, N, cfg.samples, cfg.seed, cfg.mode,
                                        cfg.eps[0], cfg.exclude_en)
        F = EmpiricalCDF(vals)
        _write_csv(os.path.join(out, f"finite_N{N}.csv"), ["d2_normalised"], [(v,) for v in F.values])
        res["ks"][N] = ks_distance(F, lim)
        res["en_rate"][N] = info["en_rate"]
    _write_json(os.path.join(out, "summary.json"), res)
    return res


def _run_limit_law(cfg, out):
    body = cfg.body_obj
    vals = sample_limit_values(body, cfg.policy, cfg.samples, cfg.seed)
    F = EmpiricalCDF(vals)
    _write_csv(os.path.join(out, "samples.csv"), ["L"], [(v,) for v in F.values])
    _write_csv(os.path.join(out, "cdf.csv"), ["z", "F"], cdf_rows(F))
    return {"samples": F.count, "median": float(np.median(vals))}


def _run_phases(cfg, out):
    res = phase_uniformity_test(cfg.body_obj, cfg.r_interval, cfg.N, cfg.samples, cfg.seed)
    _write_json(os.path.join(out, "phases.json"), res)
    return res


def _run_en(cfg, out):
    rows = [en_measure(N, e, cfg.samples, cfg.seed) for N in cfg.N for e in cfg.eps]
    _write_csv(os.path.join(out, "en_measure.csv"), ["N", "eps", "draws", "measure", "sigma", "bound"],
               [(r["N"], float(r["eps"]), r["draws"], r["measure"], r["sigma"], r["bound"]) for r in rows])
    return {"rows": rows}


_RUNNERS = {"theorem1a": _run_theorem1a, "theorem1b": _run_theorem1b, "limit-law": _run_limit_law,
            "phases": _run_phases, "en-measure": _run_en}


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run the named pipeline into ``cfg.out`` and write ``manifest.jsonl`` beside the outputs."""
    from . import __version__
    from .kernels import BACKEND

    os.makedirs(cfg.out, exist_ok=True)
    t0 = time.perf_counter()
    result = _RUNNERS[cfg.pipeline](cfg, cfg.out)
    wall = time.perf_counter() - t0
    outputs = sorted(f for f in os.listdir(cfg.out) if f != "manifest.jsonl")
    digests = {f: sha256(os.path.join(cfg.out, f)) for f in outputs}
    manifest = {
        "config": asdict(cfg),
        "versions": {"edlab": __version__, "numpy": np.__version__,
                     "python": platform.python_version(), "backend": BACKEND},
        "y_cut": Y_CUT,
        "wall_time_s": wall,
        "outputs": digests,
    }
    with open(os.path.join(cfg.out, "manifest.jsonl"), "a") as fh:
        fh.write(json.dumps(manifest, sort_keys=True, default=_jsonable) + "\n")
    return {"result": result, "outputs": digests, "manifest": manifest}


def replay(manifest_path: str, out: str | None = None) -> dict:
    """Re-run the last manifest entry (optionally into another directory)."""
    with open(manifest_path) as fh:
        entry = json.loads(fh.read().strip().splitlines()[-1])
    conf = entry["config"]
    for key in ("r_interval", "N", "eps"):
        conf[key] = tuple(conf[key])
    if out is not None:
        conf["out"] = out
    return run_experiment(ExperimentConfig(**conf))
