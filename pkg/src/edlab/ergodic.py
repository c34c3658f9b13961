"""Discrepancy of the coordinate-wise rotation action and its Fourier-node ladder.

The orbit is ``(x_1 + n_1 a_1, x_2 + n_2 a_2)`` for ``0 <= n_i < N``.  The
all-nonzero-coordinate part of the Fourier expansion, normalised by
``r^{1/2} N^{1/2}``, is a sum over nodes ``k`` of::

    f(k) = c_k cos(2 pi (k,x) + pi (N-1) sum_i {k_i a_i}) prod_i D_N({k_i a_i}) / N^{1/2}

with ``D_N(u) = sin(pi N u) / sin(pi u)``.  The ladder restricts this sum to
the rectangle, the small-divisor set and its large-``k`` part, then swaps in
the asymptotic coefficient and linearised divisors.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .convex_body import ConvexBody, DomainError, slice_length, volume
from .fourier import coefficients, main_coefficient

log = logging.getLogger(__name__)

_REL = 1e-12


class ResonanceError(ArithmeticError):
    """A node whose small divisor vanishes."""


@dataclass(frozen=True)
class ActionConfig:
    r: float
    x: tuple
    alpha: tuple
    N: int
    eps: float = 0.1
    # thresholds of the small-divisor set and of E_N; None means the displayed defaults
    s_bound: float | None = None
    en_bound: float | None = None

    def __post_init__(self):
        if self.N < 1:
            raise DomainError("N must be >= 1")
        if not 0.0 < self.eps < 1.0:
            raise DomainError("eps must lie in (0, 1)")
        if self.r <= 0.0:
            raise DomainError("r must be positive")
        object.__setattr__(self, "x", tuple(float(v) % 1.0 for v in self.x))
        object.__setattr__(self, "alpha", tuple(float(v) % 1.0 for v in self.alpha))

    @property
    def divisor_bound(self) -> float:
        """Upper bound on ``|k|^{3/4} |{k a}|`` defining the small-divisor set."""
        if self.s_bound is not None:
            return self.s_bound
        return 1.0 / (self.eps**2 * self.N**0.25)

    @property
    def exclusion_bound(self) -> float:
        if self.en_bound is not None:
            return self.en_bound
        return self.eps**0.5 / self.N**0.25

    @property
    def k_upper(self) -> int:
        """Largest ``k`` with ``k < N/eps``."""
        return _largest_below(self.N / self.eps)

    @property
    def k_lower(self) -> int:
        """Smallest ``k`` with ``k > N eps^3``."""
        bound = self.N * self.eps**3
        k = math.floor(bound * (1 + _REL)) + 1
        return max(k, 1)


def _largest_below(bound: float) -> int:
    k = math.ceil(bound * (1 - _REL)) - 1
    return max(k, 0)


@dataclass(frozen=True)
class SignedFraction:
    value: float
    l: int


def signed_fraction(k: int, alpha: float) -> SignedFraction:
    """``{k a} = k a + l`` with the unique integer ``l`` putting it in ``(-1/2, 1/2]``."""
    v = np.longdouble(k) * np.longdouble(alpha)
    l = -math.ceil(float(v - np.longdouble(0.5)))
    # ceil in long double: float() of v - 1/2 only loses sub-ulp digits, fix up at the edges
    val = v + l
    if val > 0.5:
        l -= 1
    elif val <= -0.5:
        l += 1
    return SignedFraction(float(v + l), int(l))


def signed_frac(k, alpha) -> np.ndarray:
    """Vectorised ``{k a}`` in ``(-1/2, 1/2]``, computed in extended precision."""
    v = np.asarray(k, dtype=np.longdouble) * np.longdouble(alpha)
    out = v - np.ceil(v - np.longdouble(0.5))
    return out.astype(np.float64)


def signed_frac_index(k, alpha) -> np.ndarray:
    """The integers ``l`` with ``{k a} = k a + l``."""
    v = np.asarray(k, dtype=np.longdouble) * np.longdouble(alpha)
    return (-np.ceil(v - np.longdouble(0.5))).astype(np.int64)


def dirichlet_cosine_sum(A: float, B: float, N: int) -> float:
    """``sum_{n=0}^{N-1} cos(A + n B)``; direct sum near the removable singularity."""
    if N < 1:
        raise DomainError("N must be >= 1")
    # reducing first keeps the half-angle arguments small near B = 0 mod 2 pi
    A = math.remainder(A, 2.0 * math.pi)
    B = math.remainder(B, 2.0 * math.pi)
    s = math.sin(B / 2.0)
    if abs(s) > 1e-12:
        return math.cos(A + (N - 1) * B / 2.0) * math.sin(N * B / 2.0) / s
    return float(np.cos(A + np.arange(N) * B).sum())


def _dirichlet_ratio(fr, N):
    """``sin(pi N u)/sin(pi u)`` with the resonant entries (u == 0) set to 0."""
    den = np.sin(np.pi * fr)
    res = den == 0.0
    out = np.sin(np.pi * N * fr) / np.where(res, 1.0, den)
    out[res] = 0.0
    return out, res


# --- direct counting ---------------------------------------------------------

def orbit_hits(cfg: ActionConfig, body: ConvexBody) -> int:
    body.check_scale(cfg.r)
    return kernels.orbit_count(cfg.x[0], cfg.x[1], cfg.alpha[0], cfg.alpha[1], cfg.N,
                               cfg.r * body.a, cfg.r * body.b)


def discrepancy_direct(cfg: ActionConfig, body: ConvexBody) -> float:
    """Visits of the orbit to ``C_r`` minus ``N^2 Vol(C_r)``."""
    return orbit_hits(cfg, body) - cfg.N**2 * volume(body, cfg.r)


def axis_discrepancy(cfg: ActionConfig, body: ConvexBody) -> float:
    """Exact ``D_{C,1}``: the part of the expansion with exactly one nonzero node coordinate.

    The axis series in ``x_i`` sums to the chord length of ``C_r`` minus its
    area, so ``D_{C,1} = N sum_n [w_1(x_1 + n a_1) + w_2(x_2 + n a_2) - 2 Vol]``.
    """
    n = np.arange(cfg.N, dtype=np.float64)
    w1 = slice_length(body, cfg.r, cfg.x[0] + n * cfg.alpha[0], axis=0)
    w2 = slice_length(body, cfg.r, cfg.x[1] + n * cfg.alpha[1], axis=1)
    vol = volume(body, cfg.r)
    return cfg.N * (float(w1.sum()) + float(w2.sum()) - 2.0 * cfg.N * vol)


def product_discrepancy(cfg: ActionConfig, body: ConvexBody) -> float:
    """Exact ``D_{C,2} = D_C - D_{C,1}``."""
    return discrepancy_direct(cfg, body) - axis_discrepancy(cfg, body)


# --- single nodes -----------------------------------------------------------

def node_term_f(cfg: ActionConfig, body: ConvexBody, k, c_k: float | None = None) -> float:
    k1, k2 = int(k[0]), int(k[1])
    if k1 == 0 or k2 == 0:
        raise DomainError("node needs both coordinates nonzero")
    f1 = signed_fraction(k1, cfg.alpha[0]).value
    f2 = signed_fraction(k2, cfg.alpha[1]).value
    s1, s2 = math.sin(math.pi * f1), math.sin(math.pi * f2)
    if s1 == 0.0 or s2 == 0.0:
        raise ResonanceError(f"resonant node k={(k1, k2)}")
    if c_k is None:
        c_k = float(coefficients(body, cfg.r, k1, k2)) / math.sqrt(cfg.r)
    N = cfg.N
    phase = 2 * math.pi * (k1 * cfg.x[0] + k2 * cfg.x[1]) + math.pi * (N - 1) * (f1 + f2)
    num = math.cos(phase) * math.sin(math.pi * N * f1) * math.sin(math.pi * N * f2)
    return c_k * num / (math.sqrt(N) * s1 * s2)


def node_terms(cfg: ActionConfig, body: ConvexBody, k1, k2, kind: str = "f") -> np.ndarray:
    """Vectorised node terms; ``kind`` is ``f`` (exact), ``check`` (asymptotic
    coefficient) or ``g`` (asymptotic coefficient and linearised divisors).

    Resonant nodes contribute 0.
    """
    k1 = np.asarray(k1, dtype=np.int64)
    k2 = np.asarray(k2, dtype=np.int64)
    N = cfg.N
    f1 = signed_frac(k1, cfg.alpha[0])
    f2 = signed_frac(k2, cfg.alpha[1])
    x_phase = 2 * np.pi * (np.mod(k1 * cfg.x[0], 1.0) + np.mod(k2 * cfg.x[1], 1.0))
    phase = x_phase + np.pi * (N - 1) * (f1 + f2)
    num = np.cos(phase) * np.sin(np.pi * N * f1) * np.sin(np.pi * N * f2)
    if kind == "f":
        coef = coefficients(body, cfg.r, k1, k2) / math.sqrt(cfg.r)
        den = np.sin(np.pi * f1) * np.sin(np.pi * f2)
    elif kind == "check":
        coef = main_coefficient(body, cfg.r, k1, k2)
        den = np.sin(np.pi * f1) * np.sin(np.pi * f2)
    elif kind == "g":
        coef = main_coefficient(body, cfg.r, k1, k2)
        den = np.pi**2 * f1 * f2
    else:
        raise ValueError(kind)
    res = den == 0.0
    out = coef * num / (math.sqrt(N) * np.where(res, 1.0, den))
    out[res] = 0.0
    return out


def g_term(cfg: ActionConfig, body: ConvexBody, k) -> float:
    """Node term with the asymptotic coefficient and linearised divisors."""
    return float(node_terms(cfg, body, [k[0]], [k[1]], kind="g")[0])


# --- the exceptional set E_N -------------------------------------------------

def min_divisor_score(alpha: float, M: int) -> float:
    """``min_{1 <= n <= M} n^{3/4} ||n a||``, exact for the binary value of ``alpha``.

    The minimiser is a continued-fraction denominator: for ``q_j <= n < q_{j+1}``
    both ``n^{3/4} >= q_j^{3/4}`` and ``||n a|| >= ||q_j a||``.
    """
    alpha = float(alpha) % 1.0
    if M < 1:
        return math.inf
    num, den = alpha.as_integer_ratio()
    best = min(alpha, 1.0 - alpha)  # n = 1
    # Euclid on num/den; |q_j num - p_j den| equals the next remainder
    q_prev, q = 0, 1
    a, b = den, num  # we expand num/den = [0; a1, a2, ...]
    while b:
        quo, rem = divmod(a, b)
        q_prev, q = q, quo * q + q_prev
        if q > M:
            break
        # distance of q*alpha to the nearest integer equals rem/den
        best = min(best, q**0.75 * (rem / den))
        a, b = b, rem
    return best


def min_divisor_score_brute(alpha: float, M: int) -> float:
    n = np.arange(1, M + 1, dtype=np.float64)
    frac = np.abs(signed_frac(np.arange(1, M + 1), alpha))
    return float((n**0.75 * frac).min())


def in_E_N(alpha, N: int, eps: float, method: str = "cf", bound: float | None = None) -> bool:
    """Whether some ``1 <= |n| <= N/eps`` has ``|n|^{3/4} |{n a_i}| < eps^{1/2}/N^{1/4}``."""
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    thr = eps**0.5 / N**0.25 if bound is None else bound
    M = math.floor(N / eps * (1 + _REL))
    score = min_divisor_score if method == "cf" else min_divisor_score_brute
    return any(score(a, M) < thr for a in np.atleast_1d(alpha))


# --- node sets ---------------------------------------------------------------

def axis_nodes(cfg: ActionConfig, i: int, which: str = "S") -> np.ndarray:
    """Signed values of ``k_i`` admissible in ``S`` or ``S_hat`` (sorted)."""
    K = cfg.k_upper
    k = np.arange(1, K + 1, dtype=np.int64)
    if which == "rect":
        keep = np.ones(k.size, bool)
    else:
        keep = k**0.75 * np.abs(signed_frac(k, cfg.alpha[i])) < cfg.divisor_bound
        neg_keep = k**0.75 * np.abs(signed_frac(-k, cfg.alpha[i])) < cfg.divisor_bound
        if which == "S_hat":
            keep &= k >= cfg.k_lower
            neg_keep &= k >= cfg.k_lower
        elif which != "S":
            raise ValueError(which)
        return np.concatenate([-k[neg_keep][::-1], k[keep]])
    return np.concatenate([-k[::-1], k])


def node_set(cfg: ActionConfig, which: str = "S", brute: bool = False) -> np.ndarray:
    """Nodes ``(k_1, k_2)`` of ``S(N, a)`` or ``S_hat(N, a)`` in lexicographic order.

    Both sets are products of per-coordinate conditions; ``brute`` scans the
    full rectangle instead and is the oracle for the product construction.
    """
    if which not in ("S", "S_hat"):
        raise ValueError(which)
    if in_E_N(cfg.alpha, cfg.N, cfg.eps, bound=cfg.exclusion_bound):
        log.warning("alpha=%s lies in E_N (N=%d, eps=%g)", cfg.alpha, cfg.N, cfg.eps)
    if brute:
        K = cfg.k_upper
        r = np.arange(-K, K + 1, dtype=np.int64)
        r = r[r != 0]
        k1, k2 = np.meshgrid(r, r, indexing="ij")
        k1, k2 = k1.ravel(), k2.ravel()
        keep = np.ones(k1.size, bool)
        for kk, a in ((k1, cfg.alpha[0]), (k2, cfg.alpha[1])):
            ak = np.abs(kk)
            keep &= ak.astype(float)**0.75 * np.abs(signed_frac(kk, a)) < cfg.divisor_bound
            if which == "S_hat":
                keep &= ak > cfg.N * cfg.eps**3 * (1 + _REL)
        return np.column_stack([k1[keep], k2[keep]])
    a1 = axis_nodes(cfg, 0, which)
    a2 = axis_nodes(cfg, 1, which)
    k1, k2 = np.meshgrid(a1, a2, indexing="ij")
    return np.column_stack([k1.ravel(), k2.ravel()])


# --- the truncation ladder ----------------------------------------------------

@dataclass
class LadderResult:
    """Normalised sums: ``delta`` is the exact ``D_{C,2}/(r^{1/2} N^{1/2})``;
    ``delta1`` the rectangle ``|k_i| < N/eps``, ``delta2`` the small-divisor set,
    ``delta3`` its large-``k`` part, ``delta_check`` the latter with the
    asymptotic coefficient and ``delta_prime`` with linearised divisors too.
    """

    delta: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray
    delta3: np.ndarray
    delta_check: np.ndarray
    delta_prime: np.ndarray
    skipped: int = 0
    sizes: dict = field(default_factory=dict)


def _axis_vectors(cfgs, i, K):
    """Folded node weights for coordinate ``i``; columns are configurations."""
    k = np.arange(1, K + 1, dtype=np.int64)
    S = len(cfgs)
    u = np.zeros((K, S))
    u_lin = np.zeros((K, S))
    m_s = np.zeros((K, S), bool)
    skipped = 0
    for s, cfg in enumerate(cfgs):
        fr = signed_frac(k, cfg.alpha[i])
        N = cfg.N
        D, res = _dirichlet_ratio(fr, N)
        skipped += int(res.sum())
        phi = 2 * np.pi * np.mod(k * cfg.x[i], 1.0) + np.pi * (N - 1) * fr
        cphi = 2.0 * np.cos(phi) / N**0.25
        u[:, s] = cphi * D
        lin = np.where(res, 0.0, np.sin(np.pi * N * fr) / (np.pi * np.where(res, 1.0, fr)))
        u_lin[:, s] = cphi * lin
        m_s[:, s] = k**0.75 * np.abs(fr) < cfg.divisor_bound
    return k, u, u_lin, m_s, skipped


def delta_ladder_batch(cfgs, body: ConvexBody, block: int = 512,
                       members=("delta1", "delta2", "delta3", "delta_check", "delta_prime"),
                       ) -> LadderResult:
    """Ladder for many configurations sharing ``(r, N, eps)``.

    Every member is a bilinear form ``u_1^T C u_2`` over positive nodes: the
    coefficient is even in each coordinate, so the four sign patterns of a
    node fold into ``4 cos(phi_1) cos(phi_2)``.  The coefficient matrix is
    generated in row blocks and never held whole.
    """
    cfgs = list(cfgs)
    r, N, eps = cfgs[0].r, cfgs[0].N, cfgs[0].eps
    if any((c.r, c.N, c.eps) != (r, N, eps) for c in cfgs):
        raise ValueError("batched ladder needs a common (r, N, eps)")
    body.check_scale(r)
    K = cfgs[0].k_upper
    k_lo = cfgs[0].k_lower
    S = len(cfgs)
    _, u1, l1, s1, sk1 = _axis_vectors(cfgs, 0, K)
    k, u2, l2, s2, sk2 = _axis_vectors(cfgs, 1, K)
    big = (k >= k_lo)[:, None]
    h1, h2 = s1 & big, s2 & big
    want_c = [m for m in ("delta1", "delta2", "delta3") if m in members]
    want_d = [m for m in ("delta_check", "delta_prime") if m in members]
    masks = {"delta1": (None, None), "delta2": (s1, s2), "delta3": (h1, h2)}

    def side(m):
        if m in masks:
            a, b = masks[m]
            return (u1, u2) if a is None else (u1 * a, u2 * b)
        lin = m == "delta_prime"
        return ((l1 if lin else u1) * h1, (l2 if lin else u2) * h2)

    sides = {m: side(m) for m in want_c + want_d}
    out = {m: np.zeros(S) for m in members}
    RC = np.hstack([sides[m][1] for m in want_c]) if want_c else None
    RD = np.hstack([sides[m][1] for m in want_d]) if want_d else None
    del u2, l2
    rs = math.sqrt(r)
    for i0 in range(0, K, block):
        rows = k[i0:i0 + block]
        if want_c:
            C = coefficients(body, r, rows[:, None], k[None, :]) / rs
            T = C @ RC
            for j, m in enumerate(want_c):
                out[m] += np.einsum("ks,ks->s", sides[m][0][i0:i0 + block], T[:, j * S:(j + 1) * S])
        if want_d:
            Dm = main_coefficient(body, r, rows[:, None], k[None, :])
            T = Dm @ RD
            for j, m in enumerate(want_d):
                out[m] += np.einsum("ks,ks->s", sides[m][0][i0:i0 + block], T[:, j * S:(j + 1) * S])
    exact = np.array([product_discrepancy(c, body) for c in cfgs]) / math.sqrt(r * N)
    nan = np.full(S, np.nan)
    return LadderResult(
        delta=exact,
        delta1=out.get("delta1", nan),
        delta2=out.get("delta2", nan),
        delta3=out.get("delta3", nan),
        delta_check=out.get("delta_check", nan),
        delta_prime=out.get("delta_prime", nan),
        skipped=sk1 + sk2,
        sizes={"K": K, "k_lower": k_lo},
    )


def delta_ladder(cfg: ActionConfig, body: ConvexBody, **kw) -> dict:
    """Ladder record for one configuration (see :class:`LadderResult`)."""
    res = delta_ladder_batch([cfg], body, **kw)
    if res.skipped:
        log.warning("skipped %d resonant axis nodes", res.skipped)
    return {
        "delta": float(res.delta[0]),
        "delta1": float(res.delta1[0]),
        "delta2": float(res.delta2[0]),
        "delta3": float(res.delta3[0]),
        "delta_check": float(res.delta_check[0]),
        "delta_prime": float(res.delta_prime[0]),
        "skipped": res.skipped,
    }


def orbit_exponential_sums(x: float, alpha: float, N: int, kmax: int) -> np.ndarray:
    """``2 Re sum_{n<N} e(k (x + n a))`` for ``k = 0..kmax`` (entry 0 is ``N``)."""
    k = np.arange(kmax + 1)
    fr = signed_frac(k, alpha)
    D, res = _dirichlet_ratio(fr, N)
    D[res] = N
    phase = 2 * np.pi * np.mod(k * x, 1.0) + np.pi * (N - 1) * fr
    out = 2.0 * np.cos(phase) * D
    out[0] = N
    return out


def fourier_reconstruction(cfgs, body: ConvexBody, kmax: int) -> np.ndarray:
    """``sum_{0 < max|k_i| <= kmax} coef(k) sum_n e(k . orbit point)`` for each configuration.

    This is the Fourier partial sum of the discrepancy, including the axis
    nodes; for a symmetric body it is a real bilinear form in the per-axis sums.
    """
    cfgs = list(cfgs)
    r = cfgs[0].r
    if any(c.r != r for c in cfgs):
        raise ValueError("configurations must share r")
    k = np.arange(kmax + 1)
    C = coefficients(body, r, k[:, None], k[None, :])
    C[0, 0] = 0.0
    U1 = np.column_stack([orbit_exponential_sums(c.x[0], c.alpha[0], c.N, kmax) for c in cfgs])
    U2 = np.column_stack([orbit_exponential_sums(c.x[1], c.alpha[1], c.N, kmax) for c in cfgs])
    return np.einsum("ks,ks->s", U1, C @ U2)
