"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Both implementations evaluate the same floating-point predicates in the same
order, so results agree bit for bit on orbit counts and to rounding on sums.
"""
from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash_uniform(seed: int, keys) -> np.ndarray:
    """Counter-based uniform draws in [0, 1) keyed by integer rows of ``keys``."""
    keys = np.atleast_2d(np.asarray(keys, dtype=np.int64))
    with np.errstate(over="ignore"):
        h = _mix(np.full(keys.shape[0], np.uint64(seed % 2**64), dtype=np.uint64) + GOLDEN)
        for col in keys.T:
            h = _mix(h ^ (col.astype(np.uint64) + GOLDEN))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def orbit_count(x1, x2, a1, a2, N, ra, rb, chunk=1 << 22):
    n = np.arange(N, dtype=np.float64)
    v = x1 + n * a1
    su = ((v - np.floor(v + 0.5)) / ra) ** 2
    w = x2 + n * a2
    sv = ((w - np.floor(w + 0.5)) / rb) ** 2
    su = su[su <= 1.0]
    rows = max(1, chunk // max(N, 1))
    total = 0
    for s in range(0, su.size, rows):
        total += int(np.count_nonzero(su[s:s + rows, None] + sv[None, :] <= 1.0))
    return total


def _primitive(c):
    g = np.gcd(c[:, 0], c[:, 1])
    m = c // g[:, None]
    neg = (m[:, 0] < 0) | ((m[:, 0] == 0) & (m[:, 1] < 0))
    s = np.where(neg, -1, 1)
    return g, m * s[:, None], s


def lattice_pair_sum(c1, xz1, c2, xz2, theta, seed, pcheck_max, ea, eb, b_shift=0.0,
                     chunk=1 << 18):
    c1 = np.asarray(c1, dtype=np.int64)
    c2 = np.asarray(c2, dtype=np.int64)
    g1, m1, s1 = _primitive(c1)
    g2, m2, s2 = _primitive(c2)

    def sinc_over(z):
        out = np.full(z.shape, np.pi)
        big = np.abs(z) >= 1e-8
        out[big] = np.sin(np.pi * z[big]) / z[big]
        return out

    sz1 = sinc_over(xz1[:, 1])
    sz2 = sinc_over(xz2[:, 1])
    ph1 = c1[:, 0] * theta[0, 0] + c1[:, 1] * theta[0, 1]
    ph2 = c2[:, 0] * theta[1, 0] + c2[:, 1] * theta[1, 1]
    total = 0.0
    count = 0
    n2 = c2.shape[0]
    rows = max(1, chunk // max(n2, 1))
    for s in range(0, c1.shape[0], rows):
        i = np.arange(s, min(s + rows, c1.shape[0]))
        I = np.repeat(i, n2)
        J = np.tile(np.arange(n2), i.size)
        G = np.gcd(g1[I], g2[J])
        pc = s1[I] * G
        keep = np.abs(pc) <= pcheck_max
        I, J, G, pc = I[keep], J[keep], G[keep], pc[keep]
        p1 = g1[I] // G
        p2 = s1[I] * s2[J] * (g2[J] // G)
        keys = np.column_stack([p1, p2, m1[I], m2[J]])
        b = hash_uniform(seed, keys) + b_shift
        X1 = xz1[I, 0]
        X2 = xz2[J, 0]
        R = np.hypot(X1, X2)
        h = np.hypot(ea * X1, eb * X2) / R
        kinv = ea * eb / (h * np.sqrt(h))
        phase = 2.0 * np.pi * (ph1[I] + ph2[J])
        terms = (kinv * np.cos(phase) * np.sin(2.0 * np.pi * (np.abs(pc) * b - 0.125))
                 * sz1[I] * sz2[J] / np.pi**3 / (R * np.sqrt(R)))
        total += float(terms.sum())
        count += int(terms.size)
    return total, count
