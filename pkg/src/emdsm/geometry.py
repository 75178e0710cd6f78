"""Source-support shapes, directional projections and polarization frames."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SHAPE_KINDS = ("cube", "ball", "ellipsoid")

UNIT_TOL = 1e-9


def _vec3(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {np.shape(v)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_unit(x_hat, tol: float = UNIT_TOL) -> np.ndarray:
    x = _vec3(x_hat, "direction")
    if abs(np.linalg.norm(x) - 1.0) > tol:
        raise ValueError(f"direction {x.tolist()} is not a unit vector (norm {np.linalg.norm(x):.12g})")
    return x


@dataclass(frozen=True)
class SupportShape:
    """Axis-aligned cube, ball or ellipsoid.

    ``half_extents`` holds the cube half-sides, the ball radius repeated three
    times, or the ellipsoid semi-axes.
    """

    kind: str
    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}; expected one of {SHAPE_KINDS}")
        center = _vec3(self.center, "center")
        half = _vec3(self.half_extents, "half_extents")
        if np.any(half <= 0):
            raise ValueError("half_extents must be positive")
        if self.kind == "ball" and not np.all(half == half[0]):
            raise ValueError("a ball needs equal half_extents (the radius)")
        center.setflags(write=False)
        half.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_extents", half)

    @classmethod
    def cube(cls, half, center=(0.0, 0.0, 0.0)) -> "SupportShape":
        half = np.broadcast_to(np.asarray(half, dtype=float), (3,))
        return cls("cube", np.asarray(center, dtype=float), half.copy())

    @classmethod
    def ball(cls, radius: float, center=(0.0, 0.0, 0.0)) -> "SupportShape":
        return cls("ball", np.asarray(center, dtype=float), np.full(3, float(radius)))

    @classmethod
    def ellipsoid(cls, semi_axes, center=(0.0, 0.0, 0.0)) -> "SupportShape":
        return cls("ellipsoid", np.asarray(center, dtype=float), np.asarray(semi_axes, dtype=float))

    @property
    def circumradius(self) -> float:
        """Largest distance from the center to a point of the shape."""
        if self.kind == "cube":
            return float(np.linalg.norm(self.half_extents))
        return float(np.max(self.half_extents))

    def fits_in_ball(self, radius: float) -> bool:
        return float(np.linalg.norm(self.center)) + self.circumradius <= radius

    def volume(self) -> float:
        a = self.half_extents
        if self.kind == "cube":
            return float(8.0 * np.prod(a))
        return float(4.0 / 3.0 * np.pi * np.prod(a))

    def __eq__(self, other):
        if not isinstance(other, SupportShape):
            return NotImplemented
        return (
            self.kind == other.kind
            and np.array_equal(self.center, other.center)
            and np.array_equal(self.half_extents, other.half_extents)
        )

    def __hash__(self):
        return hash((self.kind, tuple(self.center), tuple(self.half_extents)))


def perp_vector(x_hat) -> np.ndarray:
    """Deterministic unit vector orthogonal to ``x_hat``.

    Gram-Schmidt on the coordinate axis where ``|x_hat|`` is smallest (ties go
    to the lowest index), so ``x_hat`` and ``-x_hat`` share the same result.
    """
    x = check_unit(x_hat)
    x = x / np.linalg.norm(x)
    k = int(np.argmin(np.abs(x)))
    e = np.zeros(3)
    e[k] = 1.0
    p = e - np.dot(e, x) * x
    return p / np.linalg.norm(p)


@dataclass(frozen=True)
class ObservationFrame:
    x_hat: np.ndarray
    p_hat: np.ndarray = field(default=None)

    def __post_init__(self):
        x = check_unit(self.x_hat)
        p = perp_vector(x) if self.p_hat is None else check_unit(self.p_hat)
        if abs(np.dot(x, p)) > UNIT_TOL:
            raise ValueError("polarization must be orthogonal to the observation direction")
        x.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "x_hat", x)
        object.__setattr__(self, "p_hat", p)

    @classmethod
    def from_direction(cls, direction) -> "ObservationFrame":
        """Frame for a (possibly unnormalised) direction with the default polarization."""
        d = _vec3(direction, "direction")
        n = np.linalg.norm(d)
        if n == 0:
            raise ValueError("direction must be nonzero")
        return cls(d / n)

    def opposite(self) -> "ObservationFrame":
        return ObservationFrame(-self.x_hat, self.p_hat)

    def is_opposite(self, other: "ObservationFrame", tol: float = UNIT_TOL) -> bool:
        return abs(float(np.dot(self.x_hat, other.x_hat)) + 1.0) <= tol

    def __eq__(self, other):
        if not isinstance(other, ObservationFrame):
            return NotImplemented
        return np.array_equal(self.x_hat, other.x_hat) and np.array_equal(self.p_hat, other.p_hat)

    def __hash__(self):
        return hash((tuple(self.x_hat), tuple(self.p_hat)))


def projection_interval(shape: SupportShape, x_hat) -> tuple[float, float]:
    """Return ``(inf, sup)`` of ``x_hat . y`` over the shape."""
    x = check_unit(x_hat)
    mid = float(np.dot(x, shape.center))
    a = shape.half_extents
    if shape.kind == "cube":
        half = float(np.sum(a * np.abs(x)))
    else:
        half = float(np.sqrt(np.sum((a * x) ** 2)))
    return mid - half, mid + half


def support_contains(shape: SupportShape, y) -> np.ndarray | bool:
    """Closed membership test; accepts a single point or an ``(..., 3)`` array."""
    pts = np.asarray(y, dtype=float)
    d = (pts - shape.center) / shape.half_extents
    if shape.kind == "cube":
        inside = np.all(np.abs(d) <= 1.0, axis=-1)
    else:
        inside = np.sum(d * d, axis=-1) <= 1.0
    if pts.ndim == 1:
        return bool(inside)
    return inside
