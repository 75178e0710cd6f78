"""Far-field synthesis for impulsive and finite-duration current sources.

The electric far field radiated by a current density ``F(y, omega)`` in a
homogeneous medium is

    E(x_hat, omega) = i omega mu (I - x_hat x_hat^T) int_D exp(-i omega x_hat.y / c) F(y, omega) dy.

Impulsive sources use ``F = q(y) J0 exp(i omega t0)``; window sources use
``F = q(y) J0 int tau(t) exp(i omega t) dt``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .data import FarFieldDataset, FrequencyGrid, Medium
from .geometry import ObservationFrame, SupportShape, check_unit

PROFILES = ("constant", "cosine_bump")
DEFAULT_ORDER = 64

__all__ = [
    "Impulse", "Window", "SourceSpec", "FrequencyGrid",
    "spatial_transform", "farfield_ip1", "farfield_ip2", "farfield",
    "farfield_cube_closedform", "synthesize_dataset",
]


@dataclass(frozen=True)
class Impulse:
    t0: float

    def __post_init__(self):
        if not math.isfinite(self.t0):
            raise ValueError("t0 must be finite")

    def time_factor(self, omega):
        return np.exp(1j * np.asarray(omega, dtype=float) * self.t0)


@dataclass(frozen=True)
class Window:
    """Emission over ``[t_min, t_max]`` with profile ``tau``.

    ``tau`` holds samples on ``linspace(t_min, t_max, len(tau))``; ``None``
    means ``tau == 1``.
    """

    t_min: float
    t_max: float
    tau: np.ndarray | None = None

    def __post_init__(self):
        if not (math.isfinite(self.t_min) and math.isfinite(self.t_max)):
            raise ValueError("window bounds must be finite")
        if not self.t_max > self.t_min:
            raise ValueError(f"t_max ({self.t_max}) must exceed t_min ({self.t_min})")
        if self.t_min < 0:
            raise ValueError("t_min must be >= 0")
        if self.tau is not None:
            tau = np.array(self.tau, dtype=float).reshape(-1)
            if tau.size < 2:
                raise ValueError("tau needs at least two samples")
            if np.any(tau < 0) or not np.all(np.isfinite(tau)):
                raise ValueError("tau must be finite and nonnegative")
            tau.setflags(write=False)
            object.__setattr__(self, "tau", tau)

    @property
    def times(self) -> np.ndarray:
        n = 2 if self.tau is None else self.tau.size
        return np.linspace(self.t_min, self.t_max, n)

    def tau_values(self) -> np.ndarray:
        return np.ones(2) if self.tau is None else self.tau

    def time_factor(self, omega):
        """``int tau(t) exp(i omega t) dt``: trapezoid on tau's samples, closed form when tau is 1."""
        omega = np.asarray(omega, dtype=float)
        if self.tau is None:
            w = np.where(omega == 0, 1.0, omega)
            val = (np.exp(1j * w * self.t_max) - np.exp(1j * w * self.t_min)) / (1j * w)
            return np.where(omega == 0, self.t_max - self.t_min, val)
        t = self.times
        dt = t[1] - t[0]
        wts = np.full(t.size, dt)
        wts[0] = wts[-1] = dt / 2
        return np.exp(1j * np.multiply.outer(omega, t)) @ (wts * self.tau)

    def __eq__(self, other):
        if not isinstance(other, Window):
            return NotImplemented
        same_tau = (self.tau is None and other.tau is None) or (
            self.tau is not None and other.tau is not None and np.array_equal(self.tau, other.tau)
        )
        return self.t_min == other.t_min and self.t_max == other.t_max and same_tau

    def __hash__(self):
        return hash((self.t_min, self.t_max, None if self.tau is None else self.tau.tobytes()))


@dataclass(frozen=True)
class SourceSpec:
    shape: SupportShape
    current: np.ndarray
    temporal: Impulse | Window
    profile: str = "constant"
    eps: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        j0 = np.array(self.current, dtype=float).reshape(-1)
        if j0.shape != (3,) or not np.all(np.isfinite(j0)):
            raise ValueError("current amplitude must be a finite 3-vector")
        if not np.any(j0):
            raise ValueError("current amplitude must be nonzero")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown spatial profile {self.profile!r}; expected one of {PROFILES}")
        if not isinstance(self.temporal, (Impulse, Window)):
            raise TypeError("temporal law must be Impulse or Window")
        Medium(self.eps, self.mu)
        j0.setflags(write=False)
        object.__setattr__(self, "current", j0)

    @property
    def medium(self) -> Medium:
        return Medium(self.eps, self.mu)

    @property
    def c(self) -> float:
        return 1.0 / math.sqrt(self.eps * self.mu)

    def profile_values(self, y) -> np.ndarray:
        """Spatial profile ``q`` at points ``y`` (assumed inside the shape)."""
        y = np.asarray(y, dtype=float)
        if self.profile == "constant":
            return np.ones(y.shape[:-1])
        u = (y - self.shape.center) / self.shape.half_extents
        return np.prod(np.cos(0.5 * np.pi * np.clip(u, -1.0, 1.0)), axis=-1)


@lru_cache(maxsize=16)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _rotation_to(n_hat: np.ndarray) -> np.ndarray:
    """Orthogonal matrix whose third column is ``n_hat``."""
    k = int(np.argmin(np.abs(n_hat)))
    e = np.zeros(3)
    e[k] = 1.0
    a = e - np.dot(e, n_hat) * n_hat
    a /= np.linalg.norm(a)
    b = np.cross(n_hat, a)
    return np.column_stack([a, b, n_hat])


def _cube_transform(source: SourceSpec, x_hat, kappa, n_q) -> np.ndarray:
    # Separable tensor Gauss-Legendre: the 3-D rule factorises into 1-D sums.
    t, w = _gauss_legendre(n_q)
    shape = source.shape
    out = np.ones(kappa.shape, dtype=complex)
    for i in range(3):
        a, c0 = shape.half_extents[i], shape.center[i]
        y = c0 + a * t
        q = np.ones_like(t) if source.profile == "constant" else np.cos(0.5 * np.pi * t)
        phase = np.exp(-1j * np.multiply.outer(kappa * x_hat[i], y))
        out *= phase @ (a * w * q)
    return out


def _ellipsoid_transform(source: SourceSpec, x_hat, kappa, n_q) -> np.ndarray:
    # y = center + A u with u in the unit ball; spherical coordinates with the
    # pole along A x_hat, so the phase depends on (r, cos theta) only.
    shape = source.shape
    a = shape.half_extents
    n_vec = a * x_hat
    n_len = float(np.linalg.norm(n_vec))
    rot = _rotation_to(n_vec / n_len)
    t, w = _gauss_legendre(n_q)
    r, wr = 0.5 * (t + 1.0), 0.5 * w * (0.5 * (t + 1.0)) ** 2
    mu_, wmu = t, w
    n_phi = 2 * n_q
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    sin_t = np.sqrt(1.0 - mu_**2)
    if source.profile == "constant":
        q_rm = np.full((n_q, n_q), 2.0 * np.pi)
    else:
        local = np.stack(
            [
                np.multiply.outer(np.multiply.outer(r, sin_t), np.cos(phi)),
                np.multiply.outer(np.multiply.outer(r, sin_t), np.sin(phi)),
                np.multiply.outer(np.multiply.outer(r, mu_), np.ones(n_phi)),
            ],
            axis=-1,
        )
        u = local @ rot.T
        q = np.prod(np.cos(0.5 * np.pi * np.clip(u, -1.0, 1.0)), axis=-1)
        q_rm = q.sum(axis=-1) * (2.0 * np.pi / n_phi)
    weights = (wr[:, None] * wmu[None, :] * q_rm).ravel()
    proj = np.multiply.outer(r, mu_).ravel() * n_len
    jac = float(np.prod(a))
    shift = float(np.dot(x_hat, shape.center))
    out = np.empty(kappa.shape, dtype=complex)
    flat_k = kappa.ravel()
    res = out.reshape(-1)
    step = max(1, 2_000_000 // proj.size)
    for s in range(0, flat_k.size, step):
        kk = flat_k[s:s + step]
        res[s:s + step] = np.exp(-1j * np.multiply.outer(kk, proj)) @ weights
    return jac * np.exp(-1j * kappa * shift) * out


def spatial_transform(source: SourceSpec, x_hat, omega, n_q: int = DEFAULT_ORDER) -> np.ndarray:
    """``int_D exp(-i omega x_hat.y / c) q(y) dy`` for an array of frequencies."""
    x = check_unit(x_hat)
    kappa = np.asarray(omega, dtype=float) / source.c
    if source.shape.kind == "cube":
        return _cube_transform(source, x, kappa, n_q)
    return _ellipsoid_transform(source, x, kappa, n_q)


def _assemble(source: SourceSpec, x_hat, omega, time_factor, n_q) -> np.ndarray:
    omega_arr = np.asarray(omega, dtype=float)
    if np.any(omega_arr <= 0):
        raise ValueError("far-field evaluation needs omega > 0")
    x = check_unit(x_hat)
    transverse = source.current - np.dot(x, source.current) * x
    scalar = 1j * omega_arr * source.mu * time_factor * spatial_transform(source, x, omega_arr, n_q)
    return np.multiply.outer(scalar, transverse)


def farfield_ip1(source: SourceSpec, x_hat, omega, n_q: int = DEFAULT_ORDER) -> np.ndarray:
    """Far field of an impulsive source; ``omega`` scalar or array, result ``(..., 3)``."""
    if not isinstance(source.temporal, Impulse):
        raise ValueError("farfield_ip1 needs an impulsive source; use farfield_ip2 for windows")
    return _assemble(source, x_hat, omega, source.temporal.time_factor(omega), n_q)


def farfield_ip2(source: SourceSpec, x_hat, omega, n_q: int = DEFAULT_ORDER) -> np.ndarray:
    """Far field of a separable finite-duration source."""
    if not isinstance(source.temporal, Window):
        raise ValueError("farfield_ip2 needs a window source; use farfield_ip1 for impulses")
    return _assemble(source, x_hat, omega, source.temporal.time_factor(omega), n_q)


def farfield(source: SourceSpec, x_hat, omega, n_q: int = DEFAULT_ORDER) -> np.ndarray:
    if isinstance(source.temporal, Impulse):
        return farfield_ip1(source, x_hat, omega, n_q)
    return farfield_ip2(source, x_hat, omega, n_q)


def farfield_cube_closedform(half_extents, center, J0, eps, mu, t0, x_hat, omega) -> np.ndarray:
    """Analytic far field of a constant-profile cube with impulsive emission."""
    a = np.broadcast_to(np.asarray(half_extents, dtype=float), (3,))
    center = np.asarray(center, dtype=float)
    J0 = np.asarray(J0, dtype=float)
    x = np.asarray(x_hat, dtype=float)
    omega = np.asarray(omega, dtype=float)
    kappa = omega * math.sqrt(eps * mu)
    factor = np.ones(omega.shape, dtype=complex)
    for i in range(3):
        arg = kappa * a[i] * x[i]
        # 2 sin(kappa a x_i) / (kappa x_i) = 2 a sinc(kappa a x_i / pi)
        factor = factor * (2.0 * a[i] * np.sinc(arg / np.pi))
    factor = factor * np.exp(-1j * kappa * np.dot(x, center))
    transverse = J0 - np.dot(x, J0) * x
    scalar = 1j * omega * mu * np.exp(1j * omega * t0) * factor
    return np.multiply.outer(scalar, transverse)


def synthesize_dataset(source: SourceSpec, frames, grid: FrequencyGrid,
                       n_q: int = DEFAULT_ORDER, threads: int | None = None) -> FarFieldDataset:
    """Far-field data for every frame on the grid.

    The emission times are deliberately not recorded in the metadata.
    """
    frames = tuple(frames)
    if not frames:
        raise ValueError("at least one observation frame is required")
    omega = grid.values

    def one(frame: ObservationFrame):
        return farfield(source, frame.x_hat, omega, n_q)

    if threads is not None and threads > 1 and len(frames) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(one, frames))
    else:
        blocks = [one(f) for f in frames]
    kind = "impulse" if isinstance(source.temporal, Impulse) else "window"
    prov = f"synthetic {kind} source; shape={source.shape.kind}; profile={source.profile}; n_q={n_q}"
    return FarFieldDataset(frames, grid, np.stack(blocks), source.medium, prov)
