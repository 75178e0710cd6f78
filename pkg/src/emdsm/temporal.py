"""Excitation-time recovery from a sweep of the opposite-direction indicator.

``T(eta)`` is the maximum of the paired indicator over the sampling ball.
Because each factor depends on ``y`` only through ``x_hat . y``, the maximum
is taken over a 1-D grid of projections in ``[-R, R]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import FarFieldDataset, preprocessed
from .indicator import DEFAULT_CLAMP_REL, check_opposite, combine_pair, dc_estimate

# A jump edge blurred by the band limit crosses half height at the true
# edge, and half height clears the noise floor seen at delta = 0.8.
THRESHOLD_IMPULSE = 0.5
# Window profiles are continuous, so every post-clamp value counts.
THRESHOLD_WINDOW = 0.02


class NoSignalError(RuntimeError):
    """The scan never rises above the detection threshold."""


@dataclass(frozen=True)
class SupportInterval:
    eta1: float
    eta2: float

    def __post_init__(self):
        if self.eta1 > self.eta2:
            raise ValueError(f"eta1 ({self.eta1}) exceeds eta2 ({self.eta2})")

    @property
    def width(self) -> float:
        return self.eta2 - self.eta1


@dataclass(frozen=True)
class EtaScan:
    etas: np.ndarray
    values: np.ndarray
    radius: float
    n_points: int
    threshold_rel: float = THRESHOLD_IMPULSE

    def __post_init__(self):
        etas = np.asarray(self.etas, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if etas.shape != vals.shape or etas.ndim != 1:
            raise ValueError("etas and values must be 1-D arrays of equal length")
        if np.any(vals < 0):
            raise ValueError("scan values must be nonnegative")
        object.__setattr__(self, "etas", etas)
        object.__setattr__(self, "values", vals)


def eta_grid(eta_min: float, eta_max: float, step: float) -> np.ndarray:
    if step <= 0 or eta_max < eta_min:
        raise ValueError("need step > 0 and eta_max >= eta_min")
    n = int(round((eta_max - eta_min) / step))
    return eta_min + step * np.arange(n + 1)


def _scan_sums(values, grid, delays, etas) -> np.ndarray:
    # Same folded sum as band_sum on u = delay - eta, with the phase split
    # into an eta factor and a delay factor.
    omega = grid.values
    wv = grid.weights() * np.asarray(values, dtype=complex)
    left = np.exp(-1j * np.multiply.outer(etas, omega)) * wv
    right = np.exp(1j * np.multiply.outer(omega, delays))
    return 2.0 * np.real(left @ right) + grid.step * dc_estimate(values)


def eta_scan(dataset: FarFieldDataset, frame_pair, etas, radius: float = 1.5,
             n_points: int = 601, clamp_rel: float = DEFAULT_CLAMP_REL,
             threshold_rel: float = THRESHOLD_IMPULSE) -> EtaScan:
    etas = np.asarray(etas, dtype=float)
    if etas.ndim != 1 or etas.size == 0:
        raise ValueError("etas must be a nonempty 1-D grid")
    if np.any(np.diff(etas) <= 0):
        raise ValueError("etas must be sorted ascending")
    if radius <= 0 or n_points < 2:
        raise ValueError("need radius > 0 and n_points >= 2")
    i, j = check_opposite(dataset, frame_pair)
    s = np.linspace(-radius, radius, n_points)
    c = dataset.c
    # Frame j looks along -x_hat of frame i, so its delay uses -s.
    a = _scan_sums(preprocessed(dataset, i), dataset.grid, s / c, etas)
    b = _scan_sums(preprocessed(dataset, j), dataset.grid, -s / c, etas)
    values = np.empty(etas.size)
    for k in range(etas.size):
        ak, bk = np.maximum(a[k], 0.0), np.maximum(b[k], 0.0)
        floor = clamp_rel * max(ak.max(), bk.max())
        values[k] = np.max(combine_pair(ak, bk, floor))
    return EtaScan(etas, values, float(radius), int(n_points), threshold_rel)


def detect_support(scan: EtaScan, threshold_rel: float | None = None) -> SupportInterval:
    """First and last grid eta at or above the threshold, refined by linear interpolation."""
    thr = scan.threshold_rel if threshold_rel is None else threshold_rel
    if not 0 < thr < 1:
        raise ValueError("threshold_rel must lie in (0, 1)")
    etas, vals = scan.etas, scan.values
    peak = float(vals.max(initial=0.0))
    if peak <= 0:
        raise NoSignalError("indicator scan is identically zero")
    tau = thr * peak
    above = np.nonzero(vals >= tau)[0]
    i, j = int(above[0]), int(above[-1])
    if i == 0:
        eta1 = float(etas[0])
    else:
        v0, v1 = vals[i - 1], vals[i]
        eta1 = float(etas[i - 1] + (etas[i] - etas[i - 1]) * (tau - v0) / (v1 - v0))
    if j == etas.size - 1:
        eta2 = float(etas[-1])
    else:
        v0, v1 = vals[j], vals[j + 1]
        eta2 = float(etas[j] + (etas[j + 1] - etas[j]) * (v0 - tau) / (v0 - v1))
    return SupportInterval(eta1, eta2)


def recover_t0(interval: SupportInterval) -> float:
    return 0.5 * (interval.eta1 + interval.eta2)


def recover_tmax(interval: SupportInterval, t_min: float) -> float:
    return interval.eta1 + interval.eta2 - t_min


def recover_tmin(interval: SupportInterval, t_max: float) -> float:
    return interval.eta1 + interval.eta2 - t_max


def write_scan(scan: EtaScan, path) -> None:
    path = Path(path)
    lines = [
        f"# threshold_rel = {scan.threshold_rel!r}",
        f"# radius = {scan.radius!r}  n_points = {scan.n_points}",
        "eta, T",
    ]
    lines += [f"{e:.17g}, {v:.17g}" for e, v in zip(scan.etas, scan.values)]
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write scan to {path}: {exc}") from exc


def read_scan(path) -> EtaScan:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if len(lines) < 3 or not lines[0].startswith("# threshold_rel ="):
        raise ValueError(f"{path}: not an eta scan file")
    thr = float(lines[0].split("=", 1)[1])
    meta = lines[1].lstrip("# ").split()
    radius = float(meta[meta.index("radius") + 2])
    n_points = int(meta[meta.index("n_points") + 2])
    rows = np.array([[float(x) for x in ln.split(",")] for ln in lines[3:]]).reshape(-1, 2)
    return EtaScan(rows[:, 0], rows[:, 1], radius, n_points, thr)
