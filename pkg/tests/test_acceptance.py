"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Seeds are fixed in advance; no criterion is tuned after the fact.
"""
import math
import time

import numpy as np
import pytest

from edlab.convex_body import ConvexBody
from edlab.ecdf import EmpiricalCDF, ks_distance
from edlab.ergodic import (ActionConfig, axis_nodes, delta_ladder_batch, dirichlet_cosine_sum,
                           discrepancy_direct, fourier_reconstruction, in_E_N, node_terms)
from edlab.harness import (STREAM_D1, STREAM_D1_LIMIT, derive_rng, en_measure,
                           equidistribution_gap, finite_n_d2_values)
from edlab.lattice import axis_to_frame, flow_lattice, frame_to_axis, haar_sample_pair
from edlab.limit_law import (TruncationPolicy, evaluate_L, evaluate_L_reference, q_box_sum,
                             sample_limit_values, sample_phase)
from edlab.smooth import AxisSeries, cocycle_residual, sample_finite_d1, sample_limit_d1

DISK = ConvexBody.disk()
ELL = ConvexBody.ellipse(1.0, 0.7)


def test_criterion_01_dirichlet_identity(criterion):
    rng = np.random.default_rng(101)
    A = rng.uniform(-50, 50, 10_000)
    B = rng.uniform(-50, 50, 10_000)
    N = rng.integers(1, 101, 10_000)
    t0 = time.perf_counter()
    fast = np.array([dirichlet_cosine_sum(a, b, int(n)) for a, b, n in zip(A, B, N)])
    elapsed = time.perf_counter() - t0
    direct = np.array([np.cos(a + np.arange(n) * b).sum() for a, b, n in zip(A, B, N)])
    err = float(np.max(np.abs(fast - direct)))
    ok = err < 1e-10 and elapsed < 1.0
    criterion(1, ok, f"max abs error {err:.2e} (< 1e-10), runtime {elapsed:.2f} s (< 1 s)")
    assert ok


def test_criterion_02_cocycle_identity(criterion):
    rng = np.random.default_rng(102)
    series = AxisSeries(ELL, 0.3, 200)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        x, a = rng.random(2), rng.random(2)
        worst = max(worst, cocycle_residual(series, x, a, int(rng.integers(0, 1000))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 10
    criterion(2, ok, f"max residual {worst:.2e} (< 1e-9), runtime {elapsed:.2f} s (< 10 s)")
    assert ok


def test_criterion_03_fourier_reconstruction(criterion):
    rng = derive_rng(3, 0)
    t0 = time.perf_counter()
    cfgs = [ActionConfig(0.3, tuple(rng.random(2)), tuple(rng.random(2)), 64) for _ in range(200)]
    direct = np.array([discrepancy_direct(c, DISK) for c in cfgs])
    rec = fourier_reconstruction(cfgs, DISK, 256)
    elapsed = time.perf_counter() - t0
    rel = float(np.sqrt(np.mean((direct - rec) ** 2) / np.mean(direct**2)))
    ok = rel < 0.05 and elapsed < 300
    criterion(3, ok, f"RMS relative error {rel:.4f} (< 0.05), runtime {elapsed:.1f} s")
    assert ok


def test_criterion_04_node_frame_roundtrip(criterion):
    eps, want, budget = 0.1, 100, 20_000
    found, uniform_ok, uniform_nodes, bad_integral = {}, True, 0, 0
    for N in 2 ** np.arange(6, 13):
        N = int(N)
        rng = derive_rng(4, N)
        draws = rng.random((budget, 2))
        outside = [a for a in draws if not in_E_N(a, N, eps)][:want]
        found[N] = len(outside)
        # the mapping itself, on the first uniform draws regardless of membership
        for al in list(outside) + list(draws[:want]):
            cfg = ActionConfig(0.3, (0.0, 0.0), tuple(al), N, eps=eps)
            for i in range(2):
                fr = flow_lattice(N, cfg.alpha[i])
                k = axis_nodes(cfg, i, "S_hat")
                try:
                    m = axis_to_frame(fr, cfg.alpha[i], N, k, check=1e-6)
                except ArithmeticError:
                    bad_integral += 1
                    uniform_ok = False
                    continue
                uniform_nodes += k.size
                uniform_ok &= bool(np.array_equal(frame_to_axis(fr, cfg.alpha[i], m), k))
    enough = all(v == want for v in found.values())
    ok = enough and uniform_ok and bad_integral == 0
    criterion(4, ok, f"alpha outside E_N found per N: {found} (need {want} from {budget} draws); "
                     f"roundtrip on {uniform_nodes} axis nodes exact={uniform_ok}, "
                     f"non-integral frames={bad_integral}")
    assert ok


def test_criterion_05_exceptional_set_measure(criterion):
    rows = [en_measure(1024, eps, 100_000, seed=5) for eps in (0.1, 0.01)]
    ok = all(r["within"] for r in rows)
    detail = "; ".join(f"eps={r['eps']}: |E_N|={r['measure']:.4f} +- {r['sigma']:.4f}, "
                       f"bound {r['bound']:.4f}" for r in rows)
    criterion(5, ok, detail)
    assert ok


def test_criterion_06_equidistribution(criterion):
    rep = equidistribution_gap([16, 256, 4096], 10_000, seed=6)
    gaps = [rep[N]["gap"] for N in (16, 256, 4096)]
    ok = gaps[2] < 0.02 and gaps[0] > gaps[1] > gaps[2]
    criterion(6, ok, f"gaps at N=16,256,4096: {gaps[0]:.5f}, {gaps[1]:.5f}, {gaps[2]:.5f} "
                     f"(Haar mean {rep['haar_mean']:.5f} +- {rep['haar_se']:.5f})")
    assert ok


def test_criterion_07_ladder_budgets(criterion):
    rng = derive_rng(7, 0)
    pts = rng.random((500, 2, 2))
    rms = {}
    for eps in (0.1, 0.05):
        cfgs = [ActionConfig(0.3, tuple(p[0]), tuple(p[1]), 1024, eps=eps) for p in pts]
        r = delta_ladder_batch(cfgs, DISK, members=("delta1", "delta2", "delta3"))
        rms[eps] = (float(np.sqrt(np.mean((r.delta1 - r.delta2) ** 2))),
                    float(np.sqrt(np.mean((r.delta2 - r.delta3) ** 2))))
    ok = True
    parts = []
    for j, name in enumerate(("D1-D2", "D2-D3")):
        C = rms[0.1][j] / math.sqrt(0.1)
        cap = math.sqrt(2) * C * math.sqrt(0.05)
        ok &= rms[0.05][j] <= cap
        parts.append(f"{name}: {rms[0.1][j]:.4f} -> {rms[0.05][j]:.4f} (cap {cap:.4f})")
    criterion(7, ok, "; ".join(parts))
    assert ok


def test_criterion_08_axis_limit_law(criterion):
    N = 1024
    fin = EmpiricalCDF(sample_finite_d1(DISK, 0.3, N, 2000, derive_rng(1, STREAM_D1, N)))
    lim = EmpiricalCDF(sample_limit_d1(DISK, 0.3, 2000, derive_rng(1, STREAM_D1_LIMIT), kmax=4096))
    ks = ks_distance(fin, lim)
    ks_ref = ks_distance(lim, lim.reflect())
    ok = ks < 0.08 and ks_ref < 0.05
    criterion(8, ok, f"KS(finite, limit) {ks:.4f} (< 0.08), KS(limit, reflection) {ks_ref:.4f} (< 0.05)")
    assert ok


def test_criterion_09_product_limit_law(criterion):
    t0 = time.perf_counter()
    lim = EmpiricalCDF(sample_limit_values(DISK, TruncationPolicy(eps=0.1), 2000, seed=9))
    ks = {}
    for N in (64, 512):
        vals, _ = finite_n_d2_values(DISK, (0.2, 0.4), N, 2000, seed=9, eps=0.1)
        ks[N] = ks_distance(EmpiricalCDF(vals), lim)
    elapsed = time.perf_counter() - t0
    ok = ks[512] < 0.1 and ks[512] < ks[64] and elapsed < 7200
    criterion(9, ok, f"KS at N=64 {ks[64]:.4f}, N=512 {ks[512]:.4f} (< 0.1 and decreasing), "
                     f"runtime {elapsed:.0f} s")
    assert ok


def test_criterion_10_functional_dual_implementation(criterion):
    rng = np.random.default_rng(110)
    pol = TruncationPolicy()
    worst = 0.0
    for j in range(10):
        frames, phase = haar_sample_pair(rng), sample_phase(rng)
        body = (DISK, ELL)[j % 2]
        worst = max(worst, abs(evaluate_L(body, frames, phase, pol)
                               - evaluate_L_reference(body, frames, phase, pol)))
    ok = worst < 1e-9
    criterion(10, ok, f"max |kernel - literal sum| {worst:.2e} (< 1e-9)")
    assert ok


def test_criterion_11_node_values_match_linearised_terms(criterion):
    rng = np.random.default_rng(111)
    worst, nodes = 0.0, 0
    for _ in range(100):
        cfg = ActionConfig(rng.uniform(0.2, 0.4), tuple(rng.random(2)), tuple(rng.random(2)),
                           int(rng.integers(32, 513)))
        total, k1, k2 = q_box_sum(cfg, ELL, 10)
        K1, K2 = np.meshgrid(k1, k2, indexing="ij")
        g = node_terms(cfg, ELL, K1.ravel(), K2.ravel(), kind="g").sum()
        worst = max(worst, abs(total - g))
        nodes += K1.size
    ok = worst < 1e-9
    criterion(11, ok, f"max |sum q - sum g| {worst:.2e} over {nodes} nodes (< 1e-9)")
    assert ok
