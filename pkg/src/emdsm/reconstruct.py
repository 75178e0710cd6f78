"""Indicator fields on a 3-D sampling grid, masks and file exports."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import FarFieldDataset
from .geometry import SupportShape, check_unit, support_contains
from .indicator import (
    DEFAULT_CLAMP_REL,
    clamp_floor,
    combine_composite,
    combine_pair,
    indicator_I,
)

DEFAULT_ISO = 0.5


@dataclass(frozen=True)
class SamplingGrid:
    """``n`` points per axis spanning ``[-radius, radius]`` (endpoints included)."""

    radius: float = 1.5
    n: int = 64

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("grid radius must be positive")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("grid needs at least 2 points per axis")
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "n", int(self.n))

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.radius, self.radius, self.n)

    @property
    def spacing(self) -> float:
        return 2.0 * self.radius / (self.n - 1)

    def points(self) -> np.ndarray:
        g = self.axis
        return np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1)


@dataclass(frozen=True)
class IndicatorField:
    grid: SamplingGrid
    values: np.ndarray
    normalization: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        n = self.grid.n
        if vals.shape != (n, n, n):
            raise ValueError(f"field shape {vals.shape} does not match grid ({n}, {n}, {n})")
        object.__setattr__(self, "values", vals)


def normalized_field(grid: SamplingGrid, raw) -> IndicatorField:
    raw = np.asarray(raw, dtype=float)
    peak = float(raw.max())
    if peak > 0:
        return IndicatorField(grid, raw / peak, peak)
    return IndicatorField(grid, np.zeros_like(raw), peak)


def evaluate_slab_field(dataset: FarFieldDataset, frame_index: int, eta: float,
                        grid: SamplingGrid) -> IndicatorField:
    """Single-direction indicator on the grid, normalised to a maximum of 1."""
    raw = indicator_I(dataset, frame_index, eta, grid.points())
    return normalized_field(grid, raw)


def evaluate_hull_field(dataset: FarFieldDataset, frame_indices, t0: float, grid: SamplingGrid,
                        clamp_rel: float = DEFAULT_CLAMP_REL) -> IndicatorField:
    """Composite reciprocal indicator over several directions at a known excitation time."""
    frame_indices = list(frame_indices)
    if not frame_indices:
        raise ValueError("need at least one observation direction")
    pts = grid.points()
    fields = np.stack([np.asarray(indicator_I(dataset, k, t0, pts)) for k in frame_indices])
    floor = clamp_floor(clamp_rel, fields)
    return normalized_field(grid, combine_composite(fields, floor))


def evaluate_window_hull_field(dataset: FarFieldDataset, frame_indices, t_min: float, t_max: float,
                               grid: SamplingGrid,
                               clamp_rel: float = DEFAULT_CLAMP_REL) -> IndicatorField:
    """Composite of the per-direction window slab indicators."""
    if not t_max > t_min:
        raise ValueError(f"t_max ({t_max}) must exceed t_min ({t_min})")
    frame_indices = list(frame_indices)
    if not frame_indices:
        raise ValueError("need at least one observation direction")
    pts = grid.points()
    per_dir = []
    for k in frame_indices:
        a = np.asarray(indicator_I(dataset, k, t_min, pts))
        b = np.asarray(indicator_I(dataset, k, t_max, pts))
        per_dir.append(combine_pair(a, b, clamp_floor(clamp_rel, a, b)))
    per_dir = np.stack(per_dir)
    return normalized_field(grid, combine_composite(per_dir, clamp_floor(clamp_rel, per_dir)))


def threshold_mask(field: IndicatorField, iso: float = DEFAULT_ISO) -> np.ndarray:
    return field.values >= iso


def voxelize(shape: SupportShape, grid: SamplingGrid) -> np.ndarray:
    return support_contains(shape, grid.points())


def jaccard(a, b) -> float:
    a, b = np.asarray(a, dtype=bool), np.asarray(b, dtype=bool)
    union = np.count_nonzero(a | b)
    return 1.0 if union == 0 else np.count_nonzero(a & b) / union


def slab_profile(field: IndicatorField, x_hat) -> tuple[np.ndarray, np.ndarray]:
    """Distinct projections ``x_hat . y`` of the grid and the field value on each plane."""
    x = check_unit(x_hat)
    proj = field.grid.points() @ x
    s, first = np.unique(proj.reshape(-1), return_index=True)
    return s, field.values.reshape(-1)[first]


def slab_centroid(field: IndicatorField, x_hat, iso: float = DEFAULT_ISO) -> float:
    """Centroid along ``x_hat`` of the thresholded 1-D slab profile."""
    s, v = slab_profile(field, x_hat)
    keep = v >= iso
    if not np.any(keep):
        raise ValueError("no grid plane reaches the iso level")
    return float(np.mean(s[keep]))


def export_volume(field: IndicatorField, path) -> tuple[Path, Path]:
    """Write ``<name>.f64`` (little-endian doubles, x fastest) and ``<name>.meta.json``."""
    base = Path(path)
    if base.suffix == ".f64":
        base = base.with_suffix("")
    raw_path = base.with_name(base.name + ".f64")
    meta_path = base.with_name(base.name + ".meta.json")
    g = field.grid
    meta = {
        "extents": [[-g.radius, g.radius]] * 3,
        "resolution": g.n,
        "normalization": field.normalization,
        "dtype": "float64-le",
        "order": "x-fastest",
    }
    try:
        field.values.ravel(order="F").astype("<f8").tofile(raw_path)
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot export volume to {base}: {exc}") from exc
    return raw_path, meta_path


def read_volume(path) -> IndicatorField:
    base = Path(path)
    if base.suffix == ".f64":
        base = base.with_suffix("")
    meta = json.loads(base.with_name(base.name + ".meta.json").read_text(encoding="utf-8"))
    grid = SamplingGrid(float(meta["extents"][0][1]), int(meta["resolution"]))
    flat = np.fromfile(base.with_name(base.name + ".f64"), dtype="<f8")
    if flat.size != grid.n**3:
        raise ValueError(f"{base}.f64 holds {flat.size} values, expected {grid.n ** 3}")
    values = flat.reshape((grid.n,) * 3, order="F")
    return IndicatorField(grid, values, float(meta["normalization"]))


def export_slice(field: IndicatorField, axis: int, offset: float, path) -> Path:
    """CSV of the field on the grid plane ``y_axis`` nearest to ``offset`` (axis is 1-based)."""
    if axis not in (1, 2, 3):
        raise ValueError("axis must be 1, 2 or 3")
    g = field.grid
    if abs(offset) > g.radius:
        raise ValueError(f"plane offset {offset} lies outside [-{g.radius}, {g.radius}]")
    k = int(np.argmin(np.abs(g.axis - offset)))
    plane = np.take(field.values, k, axis=axis - 1)
    path = Path(path)
    lines = [f"# axis={axis} offset={float(g.axis[k])!r}"]
    lines += [",".join(format(v, ".17g") for v in row) for row in plane]
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write slice to {path}: {exc}") from exc
    return path


def read_slice(path) -> tuple[int, float, np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    head = dict(kv.split("=") for kv in lines[0].lstrip("# ").split())
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return int(head["axis"]), float(head["offset"]), data
