"""The limit functional on pairs of lattices and its finite-N node counterpart.

For a pair of unimodular lattices, phases ``theta`` on two tori and a field of
uniform phases ``b`` indexed by ``(p, m1, m2)``, the functional is a sum over
pairs of lattice vectors ``v_i = pc * p_i * (m_i, e(L_i))``::

    K^{-1/2}(X/R) cos(2 pi pc sum_i p_i (m_i, theta_i)) sin(2 pi (|pc| b - 1/8))
        * prod_i sin(pi pc p_i Z_i) / (pi^3 |pc|^{7/2} R^{3/2} prod_i p_i Z_i)

with ``X_i, Z_i`` the coordinates of the primitive vectors scaled by ``p_i``
and ``R = |X|``.  ``|pc|`` enters the ``b``-phase: on the finite-N side that
phase is ``r N P(pc X) = |pc| r N P(X)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from . import kernels
from .convex_body import ConvexBody, inv_sqrt_curvature, support
from .ecdf import EmpiricalCDF
from .ergodic import ActionConfig
from .lattice import (LatticeFrame, Region, ShortVectorIndex, Y_CUT, gamma_phase,
                      haar_sample_pair, region_vectors)


@dataclass(frozen=True)
class PhasePoint:
    """``theta`` (rows are the two torus points) and the seed of the ``b`` field.

    ``b`` at index ``(p, m1, m2)`` is a counter-based hash of the seed, shifted
    by ``b_shift`` mod 1.
    """

    theta: np.ndarray
    b_seed: int
    b_shift: float = 0.0

    def __post_init__(self):
        th = np.mod(np.asarray(self.theta, dtype=np.float64).reshape(2, 2), 1.0)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "b_seed", int(self.b_seed) % 2**64)

    def b(self, p, m1, m2) -> np.ndarray:
        keys = np.column_stack([np.atleast_2d(p), np.atleast_2d(m1), np.atleast_2d(m2)])
        return np.mod(kernels.hash_uniform(self.b_seed, keys) + self.b_shift, 1.0)


@dataclass(frozen=True)
class TruncationPolicy:
    """Finite index set for the functional.

    Pairs of full vectors are kept when each lies in the window
    ``eps^3 < |X| < 1/eps``, ``|X|^{3/4} |Z| < eps^-2``, ``|Z| <= z_max``,
    has frame coordinates of norm at most ``k_eps`` (if set) and ``|pc| <= pcheck_max``.
    """

    eps: float = 0.1
    pcheck_max: int = 20
    z_max: float = 10.0
    k_eps: float | None = None

    @property
    def region(self) -> Region:
        return Region(self.eps, self.z_max)

    def vectors(self, frame: LatticeFrame):
        m, xz = region_vectors(frame, self.region)
        if self.k_eps is not None:
            keep = np.hypot(m[:, 0], m[:, 1]) <= self.k_eps
            m, xz = m[keep], xz[keep]
        return m, xz


def evaluate_L(body: ConvexBody, frames, phase: PhasePoint, policy: TruncationPolicy,
               return_count: bool = False):
    """Truncated functional via the pair kernel."""
    vs = [policy.vectors(f) for f in frames]
    value, count = kernels.lattice_pair_sum(vs[0][0], vs[0][1], vs[1][0], vs[1][1], phase.theta,
                                            phase.b_seed, policy.pcheck_max, body.a, body.b,
                                            phase.b_shift)
    return (value, count) if return_count else value


def _primitive_candidates(frame: LatticeFrame, policy: TruncationPolicy):
    """Primitive ``m`` (first nonzero coordinate positive) with the largest
    multiple ``t`` for which ``t m`` can still lie in the window."""
    sig = np.linalg.svd(frame.basis, compute_uv=False).min()
    zb = policy.region.z_bound
    vmax = math.hypot(1.0 / policy.eps, zb)
    B = int(math.ceil(vmax / sig))
    out = []
    for a in range(0, B + 1):
        for b in range(-B, B + 1):
            if (a == 0 and b <= 0) or math.gcd(a, b) != 1:
                continue
            X = a * frame.e1[0] + b * frame.e2[0]
            Z = a * frame.e1[1] + b * frame.e2[1]
            tmax = int(min(1.0 / (policy.eps * abs(X)) if X else math.inf,
                           zb / abs(Z) if Z else math.inf, 10**6))
            if tmax >= 1:
                out.append((a, b, X, Z, tmax))
    return out


def _window_members(cands, t, policy):
    """Candidates whose ``t``-multiple is in the window (and within ``k_eps``)."""
    reg = policy.region
    rows = [c for c in cands if c[4] >= t]
    if not rows:
        return None
    arr = np.array(rows, dtype=np.float64)
    xz = t * arr[:, 2:4]
    keep = reg.contains(xz)
    if policy.k_eps is not None:
        keep &= t * np.hypot(arr[:, 0], arr[:, 1]) <= policy.k_eps
    if not keep.any():
        return None
    return arr[keep]


def evaluate_L_reference(body: ConvexBody, frames, phase: PhasePoint,
                         policy: TruncationPolicy) -> float:
    """Literal triple sum over ``pc``, primitive ``p`` and primitive ``m``.

    Written independently of the pair kernel: it walks the index set in the
    factored form and evaluates each term from the primitive-vector formula.
    """
    cands = [_primitive_candidates(f, policy) for f in frames]
    tmax = [max((c[4] for c in cs), default=0) for cs in cands]
    total = 0.0
    th = phase.theta
    for pc in range(1, policy.pcheck_max + 1):
        for p1 in range(1, tmax[0] // pc + 1):
            L1 = _window_members(cands[0], pc * p1, policy)
            if L1 is None:
                continue
            for p2 in range(-(tmax[1] // pc), tmax[1] // pc + 1):
                if p2 == 0 or math.gcd(p1, p2) != 1:
                    continue
                L2 = _window_members(cands[1], pc * abs(p2), policy)
                if L2 is None:
                    continue
                A = np.repeat(L1, len(L2), axis=0)
                Bv = np.tile(L2, (len(L1), 1))
                m1 = A[:, :2].astype(np.int64)
                m2 = Bv[:, :2].astype(np.int64)
                X = np.column_stack([p1 * A[:, 2], p2 * Bv[:, 2]])
                pz = np.column_stack([p1 * A[:, 3], p2 * Bv[:, 3]])
                R = np.hypot(X[:, 0], X[:, 1])
                u = X / R[:, None]
                kinv = inv_sqrt_curvature(body, u)
                b = phase.b(np.tile([p1, p2], (len(A), 1)), m1, m2)
                proj = p1 * (m1 @ th[0]) + p2 * (m2 @ th[1])
                for s in (1, -1):
                    c = s * pc
                    num = np.ones(len(A))
                    for i in range(2):
                        z = pz[:, i]
                        small = np.abs(z) < 1e-8
                        num = num * np.where(small, math.pi * c, np.sin(math.pi * c * z)
                                             / np.where(small, 1.0, z))
                    # sin(pi c z)/z carries c; divide by c^2 to match the 7/2 power
                    term = (kinv * np.cos(2 * math.pi * c * proj)
                            * np.sin(2 * math.pi * (pc * b - 0.125)) * num
                            / (c * c * pc**1.5 * R**1.5 * math.pi**3))
                    total += float(term.sum())
    return total


def pcheck_tail_bound(body: ConvexBody, frames, policy: TruncationPolicy) -> float:
    """Bound on the terms dropped by ``|pc| <= pcheck_max`` at fixed primitive indices.

    Per index, ``|term| <= pc^{-7/2} A prod_i min(pi pc, 1/|p_i Z_i|)`` with
    ``A = K^{-1/2} / (pi^3 R^{3/2})``; the sum over ``pc`` is done with Hurwitz zeta
    in the three regimes of the two minima.
    """
    P = policy.pcheck_max
    vs = [policy.vectors(f)[1] for f in frames]
    if len(vs[0]) == 0 or len(vs[1]) == 0:
        return 0.0
    X = np.column_stack([np.repeat(vs[0][:, 0], len(vs[1])), np.tile(vs[1][:, 0], len(vs[0]))])
    Z = np.column_stack([np.repeat(vs[0][:, 1], len(vs[1])), np.tile(vs[1][:, 1], len(vs[0]))])
    R = np.hypot(X[:, 0], X[:, 1])
    amp = inv_sqrt_curvature(body, X / R[:, None]) / (math.pi**3 * R**1.5)
    with np.errstate(divide="ignore"):
        c = 1.0 / np.abs(Z)
    # switch points: pi pc < c_i  <=>  pc < c_i / pi
    t = np.sort(np.floor(c / math.pi), axis=1)
    lo, hi = np.maximum(t[:, 0], P), np.maximum(t[:, 1], P)

    def zsum(s, a, b):
        # sum_{n=a+1}^{b} n^{-s}, with b possibly infinite
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        head = zeta(s, a + 1)
        tail = np.where(np.isfinite(b), zeta(s, np.where(np.isfinite(b), b, 0) + 1), 0.0)
        return np.where(b > a, head - tail, 0.0)

    cs = np.sort(c, axis=1)[:, ::-1]  # cs[:,0] >= cs[:,1]
    both = math.pi**2 * zsum(1.5, P, lo)  # both factors pi pc
    one = math.pi * cs[:, 0] * zsum(2.5, lo, hi)  # only the larger bound still above pi pc
    none = cs[:, 0] * cs[:, 1] * zsum(3.5, hi, np.inf)
    return float(2.0 * np.sum(amp * (both + one + none)))


def q_values(cfg: ActionConfig, body: ConvexBody, pc, p, m1, m2, frames, gammas) -> np.ndarray:
    """Finite-N node values for arrays of factored indices."""
    pc = np.asarray(pc, dtype=np.int64)
    p = np.atleast_2d(np.asarray(p, dtype=np.int64))
    m = [np.atleast_2d(np.asarray(v, dtype=np.int64)) for v in (m1, m2)]
    N = cfg.N
    XZ = [frames[i].vectors(m[i]) for i in range(2)]
    X = np.column_stack([p[:, 0] * XZ[0][:, 0], p[:, 1] * XZ[1][:, 0]])
    pz = np.column_stack([p[:, 0] * XZ[0][:, 1], p[:, 1] * XZ[1][:, 1]])
    R = np.hypot(X[:, 0], X[:, 1])
    apc = np.abs(pc)
    d = (inv_sqrt_curvature(body, X / R[:, None])
         * np.sin(2 * math.pi * (apc * np.mod(cfg.r * N * support(body, X), 1.0) - 0.125)) / math.pi**3)
    proj = sum(p[:, i] * (m[i] @ gammas[i]) for i in range(2))
    arg = 2 * math.pi * np.mod(pc * proj, 1.0) + math.pi * (N - 1) / N * pc * pz.sum(axis=1)
    num = np.ones(len(pc))
    for i in range(2):
        z = pz[:, i]
        small = np.abs(z) < 1e-8
        num = num * np.where(small, math.pi * pc, np.sin(math.pi * pc * z) / np.where(small, 1.0, z))
    return d * np.cos(arg) * num / (apc**3.5 * R**1.5)


def node_q(cfg: ActionConfig, body: ConvexBody, index: ShortVectorIndex, frames, gammas=None) -> float:
    """Finite-N value at one factored index of the flowed lattice pair."""
    if gammas is None:
        gammas = [gamma_phase(cfg, i, frames[i]) for i in range(2)]
    return float(q_values(cfg, body, [index.pcheck], [index.p], [index.m1], [index.m2],
                          frames, gammas)[0])


def sample_phase(rng) -> PhasePoint:
    return PhasePoint(rng.random((2, 2)), int(rng.integers(0, 2**63)))


def sample_seed(master: int, index: int) -> np.random.SeedSequence:
    """Independent stream for sample ``index`` of a run seeded by ``master``."""
    return np.random.SeedSequence(master, spawn_key=(index,))


def sample_limit_values(body: ConvexBody, policy: TruncationPolicy, n_samples: int, seed: int,
                        start: int = 0, y_cut: float = Y_CUT) -> np.ndarray:
    out = np.empty(n_samples)
    for j in range(n_samples):
        rng = np.random.default_rng(sample_seed(seed, start + j))
        frames = haar_sample_pair(rng, y_cut)
        out[j] = evaluate_L(body, frames, sample_phase(rng), policy)
    return out


def sample_limit_cdf(body: ConvexBody, policy: TruncationPolicy, n_samples: int, seed: int,
                     start: int = 0) -> EmpiricalCDF:
    """Empirical law of the functional under Haar frames, uniform ``theta`` and ``b``."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    vals = sample_limit_values(body, policy, n_samples, seed, start)
    return EmpiricalCDF(vals, seeds=(seed, start, n_samples))


def q_box_sum(cfg: ActionConfig, body: ConvexBody, K: float, frames=None):
    """Sum of node values over all pairs with ``|m_i| <= K``, and the matching nodes.

    Returns ``(total, k1, k2)`` where ``k1 x k2`` is the node set ``U`` covered by the box.
    """
    from .lattice import box_nodes, flow_lattice, prime_decompose

    if frames is None:
        frames = tuple(flow_lattice(cfg.N, a) for a in cfg.alpha)
    gammas = [gamma_phase(cfg, i, frames[i]) for i in range(2)]
    (m1, k1), (m2, k2) = (box_nodes(frames[i], cfg.alpha[i], K) for i in range(2))
    idx = [prime_decompose(a, b) for a in m1 for b in m2]
    if not idx:
        return 0.0, k1, k2
    vals = q_values(cfg, body, [s.pcheck for s in idx], [s.p for s in idx],
                    [s.m1 for s in idx], [s.m2 for s in idx], frames, gammas)
    return float(np.sum(vals)), k1, k2
