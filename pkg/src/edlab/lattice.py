"""Unimodular planar lattices: flowed lattices ``diag(1/N, N) [[1, 0], [a, 1]] Z^2``,
reduced frames, node/coefficient correspondence and Haar sampling.

A flowed lattice is generated by the columns ``(1/N, N a)`` and ``(0, N)``;
the image of ``(k, l)`` is ``(X, Z) = (k/N, N (k a + l))``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .convex_body import DomainError
from .ergodic import ActionConfig, signed_frac_index

log = logging.getLogger(__name__)

Y_CUT = 1e3
_Y0 = math.sqrt(3.0) / 2.0
# Haar mass of the fundamental domain above the cutoff, as a fraction of pi/3
DISCARDED_MASS = (1.0 / Y_CUT) / (math.pi / 3.0)


class ConsistencyError(ArithmeticError):
    """An internal numerical contract failed (non-integral frame coordinates)."""


@dataclass(frozen=True)
class LatticeFrame:
    """Reduced basis ``e1, e2`` of a unimodular lattice.

    ``coeffs`` holds, for flowed lattices, the integer ``(k, l)`` coordinates
    of ``e1`` and ``e2`` (as columns) in the generating basis.
    """

    e1: np.ndarray
    e2: np.ndarray
    provenance: tuple
    coeffs: np.ndarray | None = None

    @property
    def basis(self) -> np.ndarray:
        """Matrix with columns ``e1, e2``."""
        return np.column_stack([self.e1, self.e2])

    @property
    def det(self) -> float:
        return float(self.e1[0] * self.e2[1] - self.e1[1] * self.e2[0])

    def vectors(self, m) -> np.ndarray:
        """Points ``m_1 e1 + m_2 e2`` for integer rows ``m``."""
        m = np.asarray(m, dtype=np.float64)
        return m @ self.basis.T

    def coordinates(self, v) -> np.ndarray:
        """Real frame coordinates of points ``v``."""
        return np.linalg.solve(self.basis, np.asarray(v, dtype=float).T).T

    def to_dict(self) -> dict:
        d = {"e1": self.e1.tolist(), "e2": self.e2.tolist(), "det": self.det,
             "provenance": list(self.provenance)}
        if self.coeffs is not None:
            d["coeffs"] = self.coeffs.tolist()
        return d


def _key(v, norm, tol):
    # ties in norm are broken by positivity of the first, then second, coordinate
    return (round(norm / tol), not v[0] > 0, not v[1] > 0, -v[0], -v[1])


def _lagrange(points, u, v, max_iter=10_000):
    """Gauss-Lagrange reduction on integer coefficient vectors.

    ``points`` maps an integer row vector to its point in the plane.
    """
    pu, pv = points(u), points(v)
    nu, nv = pu @ pu, pv @ pv
    for _ in range(max_iter):
        if nv < nu:
            u, v, pu, pv, nu, nv = v, u, pv, pu, nv, nu
        mu = round(float(pu @ pv) / float(nu))
        if mu == 0:
            return u, v
        v = v - mu * u
        pv = points(v)
        nv = pv @ pv
    raise ConsistencyError("lattice reduction did not converge")


def _canonical(points, u, v, rel=1e-12):
    """Apply the tie-break rule to a Lagrange-reduced coefficient pair."""
    c = np.array([[a, b] for a in range(-2, 3) for b in range(-2, 3) if (a, b) != (0, 0)])
    cand = c[:, :1] * u[None, :] + c[:, 1:] * v[None, :]
    pts = np.array([points(w) for w in cand], dtype=np.float64)
    norms = np.sqrt((pts**2).sum(axis=1))
    tol = rel * norms.min()
    i1 = min(range(len(c)), key=lambda i: _key(pts[i], norms[i], tol))
    # second vector: unit orthogonal index to e1, i.e. unimodular with it
    a1, b1 = c[i1]
    cross = np.abs(a1 * c[:, 1] - b1 * c[:, 0])
    idx = [i for i in range(len(c)) if cross[i] == 1]
    i2 = min(idx, key=lambda i: _key(pts[i], norms[i], tol))
    return cand[i1], cand[i2], pts[i1], pts[i2]


def reduce(basis, det_tol: float = 1e-6) -> LatticeFrame:
    """Reduced frame of the lattice spanned by the rows of ``basis``."""
    B = np.asarray(basis, dtype=np.float64)
    if B.shape != (2, 2):
        raise DomainError("basis must be two plane vectors")
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    if abs(det) < det_tol:
        raise DomainError(f"degenerate basis (det={det:.3g})")
    if abs(abs(det) - 1.0) > det_tol:
        raise DomainError(f"basis is not unimodular (det={det:.12g})")

    def points(c):
        return c[0] * B[0] + c[1] * B[1]

    u, v = _lagrange(points, np.array([1, 0], dtype=np.int64), np.array([0, 1], dtype=np.int64))
    _, _, p1, p2 = _canonical(points, u, v)
    return LatticeFrame(p1, p2, ("basis",))


def flow_point(N: int, alpha: float, c) -> np.ndarray:
    """``(k/N, N (k a + l))`` for integer ``c = (k, l)``, accurate in extended precision."""
    c = np.asarray(c, dtype=np.int64)
    k = c[..., 0].astype(np.longdouble)
    l = c[..., 1].astype(np.longdouble)
    X = k / N
    Z = N * (k * np.longdouble(alpha) + l)
    return np.stack([X, Z], axis=-1).astype(np.float64)


def flow_lattice(N: int, alpha: float) -> LatticeFrame:
    """Reduced frame of ``diag(1/N, N) [[1, 0], [a, 1]] Z^2``."""
    if N < 1:
        raise DomainError("N must be >= 1")
    alpha = float(alpha)

    def points(c):
        return flow_point(N, alpha, c)

    u, v = _lagrange(points, np.array([1, 0], dtype=np.int64), np.array([0, 1], dtype=np.int64))
    c1, c2, p1, p2 = _canonical(points, u, v)
    return LatticeFrame(p1, p2, ("flowed", int(N), alpha), coeffs=np.column_stack([c1, c2]))


# --- node <-> frame coordinates --------------------------------------------------

def _inverse_unimodular(C):
    d = int(C[0, 0] * C[1, 1] - C[0, 1] * C[1, 0])
    if abs(d) != 1:
        raise ConsistencyError("frame coefficient matrix is not unimodular")
    return d * np.array([[C[1, 1], -C[0, 1]], [-C[1, 0], C[0, 0]]], dtype=np.int64)


def axis_to_frame(frame: LatticeFrame, alpha: float, N: int, k, check: float = 1e-6) -> np.ndarray:
    """Frame coordinates ``m`` of the lattice points of nodes ``k`` (vectorised over ``k``)."""
    k = np.atleast_1d(np.asarray(k, dtype=np.int64))
    l = signed_frac_index(k, alpha)
    kl = np.column_stack([k, l])
    m = kl @ _inverse_unimodular(frame.coeffs).T
    # independent float check from the real coordinates
    xz = flow_point(N, alpha, kl)
    real = frame.coordinates(xz)
    err = np.abs(real - m).max() if m.size else 0.0
    if err > check:
        raise ConsistencyError(f"frame coordinates off integers by {err:.3g}")
    return m


def frame_to_axis(frame: LatticeFrame, alpha: float, m) -> np.ndarray:
    """Inverse of :func:`axis_to_frame`; raises when the lattice point is not a node image."""
    m = np.atleast_2d(np.asarray(m, dtype=np.int64))
    kl = m @ frame.coeffs.T
    l = signed_frac_index(kl[:, 0], alpha)
    if np.any(l != kl[:, 1]):
        raise ConsistencyError("lattice point is not the image of a node")
    return kl[:, 0]


def correspondence(cfg: ActionConfig, k, frames=None):
    """``k -> (m1, m2)``: frame coordinates of the two node images."""
    if frames is None:
        frames = tuple(flow_lattice(cfg.N, a) for a in cfg.alpha)
    k = np.atleast_2d(np.asarray(k, dtype=np.int64))
    m1 = axis_to_frame(frames[0], cfg.alpha[0], cfg.N, k[:, 0])
    m2 = axis_to_frame(frames[1], cfg.alpha[1], cfg.N, k[:, 1])
    return m1, m2


def inverse_correspondence(cfg: ActionConfig, m1, m2, frames=None) -> np.ndarray:
    if frames is None:
        frames = tuple(flow_lattice(cfg.N, a) for a in cfg.alpha)
    return np.column_stack([frame_to_axis(frames[0], cfg.alpha[0], m1),
                            frame_to_axis(frames[1], cfg.alpha[1], m2)])


def gamma_phase(cfg: ActionConfig, i: int, frame: LatticeFrame | None = None,
                reduce_mod: bool = True) -> np.ndarray:
    """``N x_i (e1_x, e2_x)``, the first coordinates of the frame scaled by ``N x_i``."""
    if frame is None:
        frame = flow_lattice(cfg.N, cfg.alpha[i])
    g = cfg.N * cfg.x[i] * np.array([frame.e1[0], frame.e2[0]])
    return np.mod(g, 1.0) if reduce_mod else g


# --- prime decomposition ------------------------------------------------------

@dataclass(frozen=True)
class ShortVectorIndex:
    """``(m1, m2) = pcheck * (p1 * n1, p2 * n2)`` with ``n1, n2, p`` primitive and
    the first nonzero coordinate of ``n_i`` and ``p1`` positive."""

    pcheck: int
    p: tuple
    m1: tuple
    m2: tuple

    def recompose(self):
        c, (p1, p2) = self.pcheck, self.p
        return ((c * p1 * self.m1[0], c * p1 * self.m1[1]),
                (c * p2 * self.m2[0], c * p2 * self.m2[1]))


def _prime(v):
    g = math.gcd(int(v[0]), int(v[1]))
    if g == 0:
        raise DomainError("zero vector has no prime decomposition")
    m = (int(v[0]) // g, int(v[1]) // g)
    s = 1 if (m[0] > 0 or (m[0] == 0 and m[1] > 0)) else -1
    return g, (s * m[0], s * m[1]), s


def prime_decompose(m1, m2) -> ShortVectorIndex:
    g1, n1, s1 = _prime(m1)
    g2, n2, s2 = _prime(m2)
    G = math.gcd(g1, g2)
    return ShortVectorIndex(s1 * G, (g1 // G, s1 * s2 * (g2 // G)), n1, n2)


# --- Haar measure on the space of unimodular lattices -----------------------------

def _haar_point(rng, y_cut=Y_CUT, budget=1000):
    """``(x, y)`` in the fundamental domain with density ``dx dy / y^2`` below ``y_cut``."""
    for _ in range(budget):
        x = rng.uniform(-0.5, 0.5)
        u = rng.random()
        y = 1.0 / (1.0 / _Y0 - u * (1.0 / _Y0 - 1.0 / y_cut))
        if x * x + y * y >= 1.0:
            return x, y
    return None


def haar_points(rng, n: int, y_cut: float = Y_CUT):
    """Vectorised draws ``(x, y, phi)``: fundamental-domain point and rotation angle."""
    xs, ys = [], []
    need = n
    while need > 0:
        m = int(need * 1.15) + 16
        x = rng.uniform(-0.5, 0.5, m)
        u = rng.random(m)
        y = 1.0 / (1.0 / _Y0 - u * (1.0 / _Y0 - 1.0 / y_cut))
        ok = x * x + y * y >= 1.0
        xs.append(x[ok][:need])
        ys.append(y[ok][:need])
        need -= xs[-1].size
    return np.concatenate(xs), np.concatenate(ys), rng.uniform(0.0, 2 * math.pi, n)


def haar_sample(seed, y_cut: float = Y_CUT) -> LatticeFrame:
    """Haar-distributed unimodular lattice, as a reduced frame.

    ``seed`` is an int, a ``SeedSequence`` or a ``Generator``.  The cusp above
    ``y_cut`` (``DISCARDED_MASS`` of the total) is not sampled.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    tag = seed if isinstance(seed, int) else None
    pt = _haar_point(rng, y_cut)
    while pt is None:
        log.warning("Haar rejection budget exhausted; drawing a fresh stream")
        rng = np.random.default_rng(rng.integers(2**63))
        pt = _haar_point(rng, y_cut)
    x, y = pt
    s = 1.0 / math.sqrt(y)
    phi = rng.uniform(0.0, 2 * math.pi)
    c, sn = math.cos(phi), math.sin(phi)
    rot = np.array([[c, -sn], [sn, c]])
    e1 = rot @ np.array([s, 0.0])
    e2 = rot @ np.array([x * s, y * s])
    fr = reduce(np.vstack([e1, e2]))
    return LatticeFrame(fr.e1, fr.e2, ("haar", tag, float(x), float(y)))


def haar_sample_pair(seed, y_cut: float = Y_CUT):
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return haar_sample(rng, y_cut), haar_sample(rng, y_cut)


def mean_inverse_height(y_cut: float = Y_CUT) -> float:
    """``E[1/y]`` for the truncated fundamental-domain law, by 2-D quadrature."""
    from scipy import integrate

    def inner(x):
        lo = max(math.sqrt(1.0 - x * x), _Y0)
        return integrate.quad(lambda y: y**-3, lo, y_cut)[0]

    def mass(x):
        lo = max(math.sqrt(1.0 - x * x), _Y0)
        return integrate.quad(lambda y: y**-2, lo, y_cut)[0]

    num = integrate.quad(inner, -0.5, 0.5)[0]
    den = integrate.quad(mass, -0.5, 0.5)[0]
    return num / den


# --- short vectors of a frame ---------------------------------------------------------

@dataclass(frozen=True)
class Region:
    """Window ``eps^3 < |X| < 1/eps``, ``|X|^{3/4} |Z| < eps^-2``, ``|Z| <= z_max``."""

    eps: float
    z_max: float = math.inf

    def contains(self, xz) -> np.ndarray:
        xz = np.asarray(xz, dtype=float)
        ax, az = np.abs(xz[..., 0]), np.abs(xz[..., 1])
        return ((ax > self.eps**3) & (ax < 1.0 / self.eps)
                & (ax**0.75 * az < self.eps**-2) & (az <= self.z_max))

    @property
    def z_bound(self) -> float:
        # |Z| < eps^-2 |X|^{-3/4} and |X| > eps^3
        return min(self.z_max, self.eps**-2 * self.eps**-2.25)


def region_vectors(frame: LatticeFrame, region: Region):
    """All nonzero integer ``m`` with ``m_1 e1 + m_2 e2`` in ``region``, and their points."""
    Binv = np.linalg.inv(frame.basis)
    xm, zb = 1.0 / region.eps, region.z_bound
    corners = np.array([[xm, zb], [xm, -zb], [-xm, zb], [-xm, -zb]]).T
    c = np.abs(Binv @ corners).max(axis=1)
    b1, b2 = int(math.ceil(c[0])), int(math.ceil(c[1]))
    a = np.arange(-b1, b1 + 1)
    b = np.arange(-b2, b2 + 1)
    A, Bm = np.meshgrid(a, b, indexing="ij")
    m = np.column_stack([A.ravel(), Bm.ravel()])
    xz = frame.vectors(m)
    keep = region.contains(xz)
    return m[keep], xz[keep]


def box_nodes(frame: LatticeFrame, alpha: float, K: float):
    """Frame coordinates ``0 < |m| <= K`` whose lattice points are node images, with the nodes."""
    B = int(math.floor(K))
    a = np.arange(-B, B + 1)
    A, Bm = np.meshgrid(a, a, indexing="ij")
    m = np.column_stack([A.ravel(), Bm.ravel()])
    m = m[(np.hypot(m[:, 0], m[:, 1]) <= K) & np.any(m != 0, axis=1)]
    kl = m @ frame.coeffs.T
    ok = (kl[:, 0] != 0) & (signed_frac_index(kl[:, 0], alpha) == kl[:, 1])
    return m[ok], kl[ok, 0]
