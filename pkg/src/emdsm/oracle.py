"""Brute-force ground truth for the indicator pipeline.

Co-area profiles g (impulsive) and h (window), their dense Fourier
transforms, the band-limited 1-D reference the indicator must reproduce,
and a masked midpoint-rule volume oracle. Nothing here calls into the
forward quadrature or the indicator code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import FrequencyGrid
from .forward import Impulse, SourceSpec, Window
from .geometry import ObservationFrame, SupportShape, check_unit, projection_interval

_ACTIVE_TOL = 1e-7


@dataclass(frozen=True)
class Profile1D:
    alphas: np.ndarray
    values: np.ndarray
    support: tuple[float, float]

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if a.shape != v.shape or a.ndim != 1 or a.size < 2:
            raise ValueError("alphas and values must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(a) <= 0):
            raise ValueError("alphas must be strictly increasing")
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "values", v)


def _box_section(shape: SupportShape, x_hat: np.ndarray, s: np.ndarray) -> np.ndarray:
    # d/ds of vol{y in box : n.y <= s}; piecewise-polynomial formula with
    # reflections so every active component of n is positive.
    n = np.abs(x_hat)
    a = shape.half_extents
    sp = s - float(np.dot(x_hat, shape.center))
    active = n > _ACTIVE_TOL
    factor = float(np.prod(2.0 * a[~active]))
    na, aa = n[active], a[active]
    d = na.size
    offset = float(np.dot(na, aa))
    total = np.zeros_like(sp)
    for bits in range(1 << d):
        v = np.array([(bits >> i) & 1 for i in range(d)], dtype=float)
        corner = float(np.dot(na, 2.0 * aa * v))
        arg = sp + offset - corner
        if d == 1:
            term = (arg >= 0).astype(float)
        else:
            term = np.where(arg > 0, arg, 0.0) ** (d - 1)
        total += (-1) ** int(v.sum()) * term
    return factor * total / (math.factorial(d - 1) * float(np.prod(na)))


def _ellipsoid_section(shape: SupportShape, x_hat: np.ndarray, s: np.ndarray) -> np.ndarray:
    a = shape.half_extents
    length = float(np.linalg.norm(a * x_hat))
    d = (s - float(np.dot(x_hat, shape.center))) / length
    return math.pi * float(np.prod(a)) / length * np.clip(1.0 - d * d, 0.0, None)


def _plane_basis(x_hat: np.ndarray):
    k = int(np.argmin(np.abs(x_hat)))
    e = np.zeros(3)
    e[k] = 1.0
    u = e - np.dot(e, x_hat) * x_hat
    u /= np.linalg.norm(u)
    return u, np.cross(x_hat, u)


def _midpoint_section(source: SourceSpec, x_hat: np.ndarray, s: np.ndarray, n: int) -> np.ndarray:
    shape = source.shape
    half = shape.circumradius
    u, v = _plane_basis(x_hat)
    h = 2.0 * half / n
    t = -half + h * (np.arange(n) + 0.5)
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    inplane = T1[..., None] * u + T2[..., None] * v
    out = np.empty(s.shape)
    for idx, si in np.ndenumerate(s):
        base = shape.center + (si - float(np.dot(x_hat, shape.center))) * x_hat
        pts = base + inplane
        d = (pts - shape.center) / shape.half_extents
        if shape.kind == "cube":
            inside = np.all(np.abs(d) <= 1.0, axis=-1)
        else:
            inside = np.sum(d * d, axis=-1) <= 1.0
        q = source.profile_values(pts[inside])
        out[idx] = q.sum() * h * h
    return out


def cross_section_integral(source: SourceSpec, x_hat, s, n_mid: int = 512) -> np.ndarray:
    """Integral of the spatial profile over the plane ``x_hat . y = s`` inside the support."""
    x = check_unit(x_hat)
    s_arr = np.asarray(s, dtype=float)
    if source.profile == "constant":
        if source.shape.kind == "cube":
            return _box_section(source.shape, x, s_arr)
        return _ellipsoid_section(source.shape, x, s_arr)
    return _midpoint_section(source, x, s_arr, n_mid)


def g_profile(source: SourceSpec, frame: ObservationFrame, alpha, n_mid: int = 512) -> np.ndarray:
    """Co-area profile of an impulsive source, Jacobian ``c`` included."""
    if not isinstance(source.temporal, Impulse):
        raise ValueError("g_profile needs an impulsive source")
    c = source.c
    pj = float(np.dot(frame.p_hat, source.current))
    alpha = np.asarray(alpha, dtype=float)
    plane = c * (source.temporal.t0 + alpha)
    return c * pj * cross_section_integral(source, frame.x_hat, plane, n_mid)


def h_profile(source: SourceSpec, frame: ObservationFrame, alpha,
              n_time: int = 2001, n_mid: int = 512) -> np.ndarray:
    """Co-area profile of a separable window source.

    The time integral uses the trapezoid rule; tau is linearly resampled to at
    least ``n_time`` points so a two-sample constant profile is resolved.
    """
    if not isinstance(source.temporal, Window):
        raise ValueError("h_profile needs a window source")
    win = source.temporal
    t_src, tau_src = win.times, win.tau_values()
    n = max(n_time, tau_src.size)
    t = np.linspace(win.t_min, win.t_max, n)
    tau = np.interp(t, t_src, tau_src)
    wts = np.full(n, t[1] - t[0])
    wts[0] = wts[-1] = 0.5 * (t[1] - t[0])
    c = source.c
    pj = float(np.dot(frame.p_hat, source.current))
    alpha = np.asarray(alpha, dtype=float)
    planes = c * (t[:, None] + alpha.reshape(-1)[None, :])
    sec = cross_section_integral(source, frame.x_hat, planes, n_mid)
    out = c * pj * ((wts * tau) @ sec)
    return out.reshape(alpha.shape)


def profile_support(source: SourceSpec, frame: ObservationFrame) -> tuple[float, float]:
    """Supporting interval of g (impulse) or h (window) in the delay variable."""
    lo, hi = projection_interval(source.shape, frame.x_hat)
    c = source.c
    if isinstance(source.temporal, Impulse):
        return lo / c - source.temporal.t0, hi / c - source.temporal.t0
    return lo / c - source.temporal.t_max, hi / c - source.temporal.t_min


def _profile_values(source, frame, alphas, n_mid):
    if isinstance(source.temporal, Impulse):
        return g_profile(source, frame, alphas, n_mid)
    return h_profile(source, frame, alphas, n_mid=n_mid)


def sample_profile(source: SourceSpec, frame: ObservationFrame, n: int = 20001,
                   margin: float = 0.05, n_mid: int = 512) -> Profile1D:
    """Dense samples of the co-area profile over its support plus a small margin.

    The support endpoints are grid nodes carrying the mean of the one-sided
    limits, so a jump there (box profiles) keeps the trapezoid rule second order.
    """
    lo, hi = profile_support(source, frame)
    pad = margin * (hi - lo)
    h = (hi - lo + 2 * pad) / (n - 1)
    m_in = max(2, int(round((hi - lo) / h)) + 1)
    m_out = max(2, int(round(pad / h)) + 1)
    alphas = np.concatenate([
        np.linspace(lo - pad, lo, m_out),
        np.linspace(lo, hi, m_in)[1:],
        np.linspace(hi, hi + pad, m_out)[1:],
    ])
    vals = _profile_values(source, frame, alphas, n_mid)
    eps = 1e-9 * (hi - lo)
    for idx, edge in ((m_out - 1, lo), (m_out + m_in - 2, hi)):
        sides = _profile_values(source, frame, np.array([edge - eps, edge + eps]), n_mid)
        vals[idx] = 0.5 * (sides[0] + sides[1])
    return Profile1D(alphas, vals, (lo, hi))


def profile_transform(profile: Profile1D, omega) -> np.ndarray:
    """``int profile(alpha) exp(-i omega alpha) d alpha`` by the trapezoid rule."""
    a, f = profile.alphas, profile.values
    wts = np.empty(a.size)
    da = np.diff(a)
    wts[0], wts[-1] = 0.5 * da[0], 0.5 * da[-1]
    wts[1:-1] = 0.5 * (da[:-1] + da[1:])
    omega = np.asarray(omega, dtype=float)
    flat = omega.reshape(-1)
    out = np.empty(flat.size, dtype=complex)
    step = max(1, 4_000_000 // a.size)
    for k in range(0, flat.size, step):
        out[k:k + step] = np.exp(-1j * np.multiply.outer(flat[k:k + step], a)) @ (wts * f)
    return out.reshape(omega.shape)


def bandlimited_reference(profile: Profile1D, grid: FrequencyGrid, s) -> np.ndarray:
    """Band-limited reconstruction of the profile at delays ``s``.

    Trapezoid rule on ``[0, omega_max]`` folded to twice the real part; the
    omega = 0 node uses the exact integral of the profile.
    """
    omega = grid.values
    spec = profile_transform(profile, omega)
    dc = float(np.real(profile_transform(profile, np.array([0.0]))[0]))
    s = np.asarray(s, dtype=float)
    phase = np.exp(1j * np.multiply.outer(s, omega))
    return 2.0 * np.real(phase @ (grid.weights() * spec)) + grid.step * dc


def midpoint_volume_transform(shape: SupportShape, x_hat, kappa, n: int = 512) -> complex:
    """Masked midpoint rule on an ``n^3`` grid over the bounding box of a constant profile.

    Evaluates ``int_D exp(-i kappa x_hat.y) dy``. Summation along the third
    axis is done column by column with the geometric-series formula, which
    gives the exact value of the ``n^3`` midpoint sum.
    """
    x = check_unit(x_hat)
    a = shape.half_extents
    c = shape.center
    h = 2.0 * a / n
    g1 = -a[0] + h[0] * (np.arange(n) + 0.5)
    g2 = -a[1] + h[1] * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(g1, g2, indexing="ij")
    if shape.kind == "cube":
        lo = np.zeros(X.shape, dtype=np.int64)
        cnt = np.full(X.shape, n, dtype=np.int64)
    else:
        rem = 1.0 - (X / a[0]) ** 2 - (Y / a[1]) ** 2
        zmax = a[2] * np.sqrt(np.clip(rem, 0.0, None))
        lo = np.ceil((a[2] - zmax) / h[2] - 0.5 - 1e-12).astype(np.int64)
        hi = np.floor((a[2] + zmax) / h[2] - 0.5 + 1e-12).astype(np.int64)
        lo = np.clip(lo, 0, n - 1)
        hi = np.clip(hi, -1, n - 1)
        cnt = np.where(rem >= 0, np.clip(hi - lo + 1, 0, None), 0)
    k3 = kappa * x[2]
    z0 = -a[2] + h[2] * (lo + 0.5)
    ratio = np.exp(-1j * k3 * h[2])
    if abs(1.0 - ratio) < 1e-14:
        col = cnt.astype(complex) * np.exp(-1j * k3 * z0)
    else:
        col = np.exp(-1j * k3 * z0) * (1.0 - ratio ** cnt) / (1.0 - ratio)
    total = np.sum(np.exp(-1j * kappa * (x[0] * X + x[1] * Y)) * col)
    return complex(total * np.prod(h) * np.exp(-1j * kappa * np.dot(x, c)))
