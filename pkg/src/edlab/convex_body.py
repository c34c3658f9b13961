"""Analytic symmetric strictly convex bodies: disks and axis-aligned ellipses.

A body ``C`` is centred at the origin; ``C_r`` is its homothety by ``r``.
Every functional used downstream (support function, curvature at a normal,
membership, area, slice widths) has a closed form for this family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Argument outside the domain of a geometric functional."""


@dataclass(frozen=True)
class ConvexBody:
    """Ellipse ``(x/a)^2 + (y/b)^2 <= 1``; a disk when ``a == b``."""

    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind not in ("disk", "ellipse"):
            raise DomainError(f"unknown body kind {self.kind!r}")
        if not (self.a > 0 and self.b > 0):
            raise DomainError("semi-axes must be positive")
        if self.kind == "disk" and self.a != self.b:
            raise DomainError("disk needs equal semi-axes")

    @classmethod
    def disk(cls, radius: float = 1.0) -> "ConvexBody":
        return cls("disk", float(radius), float(radius))

    @classmethod
    def ellipse(cls, a: float, b: float) -> "ConvexBody":
        return cls("ellipse", float(a), float(b))

    @property
    def r0(self) -> float:
        """Largest admissible scale; ``C_r`` sits strictly inside the unit square for r < r0."""
        return 0.499 / max(self.a, self.b)

    def to_text(self) -> str:
        if self.kind == "disk":
            return "disk" if self.a == 1.0 else f"disk:radius={self.a!r}"
        return f"ellipse:a={self.a!r},b={self.b!r}"

    def check_scale(self, r: float) -> None:
        if not (0.0 < r < self.r0):
            raise DomainError(f"scale r={r} outside (0, {self.r0})")

    def boundary_point(self, angle):
        """Boundary point at parameter ``angle`` (x = a cos, y = b sin)."""
        angle = np.asarray(angle, dtype=float)
        return np.stack([self.a * np.cos(angle), self.b * np.sin(angle)], axis=-1)


def parse_body(text: str) -> ConvexBody:
    """Parse ``disk``, ``disk:radius=<f>`` or ``ellipse:a=<f>,b=<f>``."""
    text = text.strip()
    kind, _, rest = text.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise DomainError(f"malformed body parameter {item!r}")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise DomainError(f"body parameter {key.strip()!r} is not a number") from None
    if kind == "disk":
        unknown = set(params) - {"radius"}
        if unknown:
            raise DomainError(f"unknown disk parameters {sorted(unknown)}")
        return ConvexBody.disk(params.get("radius", 1.0))
    if kind == "ellipse":
        if set(params) != {"a", "b"}:
            raise DomainError("ellipse needs exactly a=<float>,b=<float>")
        return ConvexBody.ellipse(params["a"], params["b"])
    raise DomainError(f"unknown body {text!r}")


def support(body: ConvexBody, t) -> np.ndarray | float:
    """Support function ``P(t) = sup_{x in C} (t, x)``; ``t`` has trailing axis 2."""
    t = np.asarray(t, dtype=float)
    val = np.hypot(body.a * t[..., 0], body.b * t[..., 1])
    if np.any(val == 0.0):
        raise DomainError("support function needs a nonzero direction")
    return float(val) if val.ndim == 0 else val


def curvature_at_normal(body: ConvexBody, xi) -> np.ndarray | float:
    """Curvature of the boundary at the point with outer unit normal ``xi``.

    For the ellipse the radius of curvature as a function of the normal is
    ``(ab)^2 / P(xi)^3``.
    """
    xi = np.asarray(xi, dtype=float)
    norm = np.hypot(xi[..., 0], xi[..., 1])
    if np.any(np.abs(norm - 1.0) > 1e-12):
        raise DomainError("normal direction must be a unit vector")
    h = np.hypot(body.a * xi[..., 0], body.b * xi[..., 1])
    val = h**3 / (body.a * body.b) ** 2
    return float(val) if val.ndim == 0 else val


def inv_sqrt_curvature(body: ConvexBody, t) -> np.ndarray:
    """``K^{-1/2}(t/|t|)`` for arbitrary nonzero ``t`` (no unit-norm check)."""
    t = np.asarray(t, dtype=float)
    norm = np.hypot(t[..., 0], t[..., 1])
    h = np.hypot(body.a * t[..., 0], body.b * t[..., 1]) / norm
    return body.a * body.b / h**1.5


def lift(v):
    """Representative of ``v mod 1`` in ``[-1/2, 1/2)``."""
    v = np.asarray(v, dtype=float)
    return v - np.floor(v + 0.5)


def contains(body: ConvexBody, r: float, point) -> np.ndarray | bool:
    """Membership of torus points (lifted to ``[-1/2,1/2)^2``) in the closed body ``C_r``."""
    body.check_scale(r)
    p = lift(point)
    u = p[..., 0] / (r * body.a)
    v = p[..., 1] / (r * body.b)
    inside = u * u + v * v <= 1.0
    return bool(inside) if np.ndim(inside) == 0 else inside


def volume(body: ConvexBody, r: float) -> float:
    body.check_scale(r)
    return math.pi * body.a * body.b * r * r


def slice_length(body: ConvexBody, r: float, u, axis: int = 0) -> np.ndarray:
    """Length of the chord of ``C_r`` cut by the line ``x_axis = u`` (u lifted to the torus).

    ``axis=0`` gives vertical slices (width of the marginal in ``x_1``),
    ``axis=1`` horizontal ones.
    """
    u = lift(u)
    along, across = (body.a, body.b) if axis == 0 else (body.b, body.a)
    s = u / (r * along)
    return 2.0 * r * across * np.sqrt(np.clip(1.0 - s * s, 0.0, None))
