# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Mirrors of the numpy versions in ``_fallback``."""
from libc.math cimport floor, sin, cos, sqrt, fabs, hypot, M_PI
from libc.stdint cimport uint64_t, int64_t
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _hash6(uint64_t seed, int64_t k0, int64_t k1, int64_t k2,
                            int64_t k3, int64_t k4, int64_t k5) nogil:
    cdef uint64_t h = _mix(seed + GOLDEN)
    h = _mix(h ^ (<uint64_t>k0 + GOLDEN))
    h = _mix(h ^ (<uint64_t>k1 + GOLDEN))
    h = _mix(h ^ (<uint64_t>k2 + GOLDEN))
    h = _mix(h ^ (<uint64_t>k3 + GOLDEN))
    h = _mix(h ^ (<uint64_t>k4 + GOLDEN))
    h = _mix(h ^ (<uint64_t>k5 + GOLDEN))
    return h


cdef inline int64_t _gcd(int64_t a, int64_t b) nogil:
    cdef int64_t t
    if a < 0:
        a = -a
    if b < 0:
        b = -b
    while b:
        t = a % b
        a = b
        b = t
    return a


def orbit_count(double x1, double x2, double a1, double a2, long N, double ra, double rb):
    """Number of (n1, n2) in [0, N)^2 whose orbit point lies in the ellipse of semi-axes ra, rb."""
    cdef cnp.ndarray[double] su = np.empty(N)
    cdef cnp.ndarray[double] sv = np.empty(N)
    cdef long i, j, total = 0
    cdef double v, w
    for i in range(N):
        v = x1 + (<double>i) * a1
        v = (v - floor(v + 0.5)) / ra
        su[i] = v * v
        w = x2 + (<double>i) * a2
        w = (w - floor(w + 0.5)) / rb
        sv[i] = w * w
    for i in range(N):
        if su[i] > 1.0:
            continue
        for j in range(N):
            if su[i] + sv[j] <= 1.0:
                total += 1
    return total


def lattice_pair_sum(cnp.int64_t[:, ::1] c1, double[:, ::1] xz1,
                     cnp.int64_t[:, ::1] c2, double[:, ::1] xz2,
                     double[:, ::1] theta, uint64_t seed, long pcheck_max,
                     double ea, double eb, double b_shift=0.0):
    """Sum of limit-functional terms over all pairs of full lattice vectors.

    Returns (value, n_terms).
    """
    cdef Py_ssize_t n1 = c1.shape[0], n2 = c2.shape[0], i, j
    cdef int64_t g1, g2, G, s1, s2, pc, p1, p2, m10, m11, m20, m21
    cdef double total = 0.0, X1, Z1, X2, Z2, R, h, kinv, ph1, phase, b, sz1, sz2, apc
    cdef long count = 0
    cdef double inv_pi3 = 1.0 / (M_PI * M_PI * M_PI)
    cdef uint64_t hv
    for i in range(n1):
        g1 = _gcd(c1[i, 0], c1[i, 1])
        m10 = c1[i, 0] // g1
        m11 = c1[i, 1] // g1
        s1 = 1
        if m10 < 0 or (m10 == 0 and m11 < 0):
            s1 = -1
            m10 = -m10
            m11 = -m11
        X1 = xz1[i, 0]
        Z1 = xz1[i, 1]
        if fabs(Z1) < 1e-8:
            sz1 = M_PI
        else:
            sz1 = sin(M_PI * Z1) / Z1
        ph1 = c1[i, 0] * theta[0, 0] + c1[i, 1] * theta[0, 1]
        for j in range(n2):
            g2 = _gcd(c2[j, 0], c2[j, 1])
            G = _gcd(g1, g2)
            pc = s1 * G
            if pc > pcheck_max or pc < -pcheck_max:
                continue
            m20 = c2[j, 0] // g2
            m21 = c2[j, 1] // g2
            s2 = 1
            if m20 < 0 or (m20 == 0 and m21 < 0):
                s2 = -1
                m20 = -m20
                m21 = -m21
            p1 = g1 // G
            p2 = s1 * s2 * (g2 // G)
            hv = _hash6(seed, p1, p2, m10, m11, m20, m21)
            b = <double>(hv >> 11) * (1.0 / 9007199254740992.0) + b_shift
            X2 = xz2[j, 0]
            Z2 = xz2[j, 1]
            if fabs(Z2) < 1e-8:
                sz2 = M_PI
            else:
                sz2 = sin(M_PI * Z2) / Z2
            R = hypot(X1, X2)
            h = hypot(ea * X1, eb * X2) / R
            kinv = ea * eb / (h * sqrt(h))
            phase = 2.0 * M_PI * (ph1 + c2[j, 0] * theta[1, 0] + c2[j, 1] * theta[1, 1])
            apc = <double>(pc if pc > 0 else -pc)
            total += (kinv * cos(phase) * sin(2.0 * M_PI * (apc * b - 0.125))
                      * sz1 * sz2 * inv_pi3 / (R * sqrt(R)))
            count += 1
    return total, count
