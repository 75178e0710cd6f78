"""Far-field dataset container, preprocessing, noise injection and text I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import ObservationFrame, UNIT_TOL

FORMAT_TAG = "# dsm-farfield v1"
COLUMNS = "frame_index, omega_index, ReE1, ImE1, ReE2, ImE2, ReE3, ImE3"


class DatasetFormatError(ValueError):
    """Raised when a dataset file does not follow the documented layout."""

    def __init__(self, message: str, line: int | None = None, path=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform positive-frequency grid ``omega_n = n * omega_max / n_omega``, n = 1..n_omega."""

    omega_max: float
    n_omega: int

    def __post_init__(self):
        if not (self.omega_max > 0 and math.isfinite(self.omega_max)):
            raise ValueError("omega_max must be positive and finite")
        if int(self.n_omega) != self.n_omega or self.n_omega < 2:
            raise ValueError("n_omega must be an integer >= 2")
        object.__setattr__(self, "omega_max", float(self.omega_max))
        object.__setattr__(self, "n_omega", int(self.n_omega))

    @property
    def step(self) -> float:
        return self.omega_max / self.n_omega

    @property
    def values(self) -> np.ndarray:
        return self.step * np.arange(1, self.n_omega + 1)

    def weights(self) -> np.ndarray:
        """Trapezoid weights on (0, omega_max]; the omega = 0 node is handled separately."""
        w = np.full(self.n_omega, self.step)
        w[-1] *= 0.5
        return w


@dataclass(frozen=True)
class Medium:
    eps: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not (self.eps > 0 and self.mu > 0):
            raise ValueError("eps and mu must be positive")
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def c(self) -> float:
        return 1.0 / math.sqrt(self.eps * self.mu)


@dataclass(frozen=True)
class FarFieldDataset:
    """Complex far-field 3-vectors for every (frame, frequency) pair.

    ``values`` has shape ``(n_frames, n_omega, 3)``.
    """

    frames: tuple
    grid: FrequencyGrid
    values: np.ndarray
    medium: Medium = field(default_factory=Medium)
    provenance: str = ""

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("a dataset needs at least one frame")
        for f in frames:
            if not isinstance(f, ObservationFrame):
                raise TypeError("frames must be ObservationFrame instances")
        vals = np.array(self.values, dtype=complex)
        expected = (len(frames), self.grid.n_omega, 3)
        if vals.shape != expected:
            raise ValueError(f"values shape {vals.shape} does not match {expected}")
        if "\n" in self.provenance:
            raise ValueError("provenance must be a single line")
        vals.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "values", vals)

    @property
    def c(self) -> float:
        return self.medium.c

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def with_values(self, values, provenance: str | None = None) -> "FarFieldDataset":
        return FarFieldDataset(
            self.frames, self.grid, values, self.medium,
            self.provenance if provenance is None else provenance,
        )

    def scaled(self, factor: complex) -> "FarFieldDataset":
        return self.with_values(self.values * factor)

    def find_opposite(self, index: int) -> int:
        """Index of the frame looking along ``-x_hat`` of frame ``index``."""
        for j, f in enumerate(self.frames):
            if self.frames[index].is_opposite(f):
                return j
        raise ValueError(f"dataset has no frame opposite to frame {index}")

    def opposite_pairs(self) -> list[tuple[int, int]]:
        """All ``(i, j)`` with ``i < j`` and opposite directions, in frame order."""
        pairs, used = [], set()
        for i in range(self.n_frames):
            if i in used:
                continue
            for j in range(i + 1, self.n_frames):
                if j not in used and self.frames[i].is_opposite(self.frames[j]):
                    pairs.append((i, j))
                    used.update((i, j))
                    break
        return pairs

    def __eq__(self, other):
        if not isinstance(other, FarFieldDataset):
            return NotImplemented
        return (
            self.frames == other.frames
            and self.grid == other.grid
            and self.medium == other.medium
            and self.provenance == other.provenance
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def preprocess(value, frame: ObservationFrame, omega, mu: float):
    """Scalar data ``p . E / (i omega mu)`` for one frame.

    ``value`` may be a single 3-vector or an ``(n, 3)`` stack paired with an
    array of ``n`` frequencies.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("preprocess needs omega > 0")
    proj = np.asarray(value, dtype=complex) @ frame.p_hat
    out = proj / (1j * omega * mu)
    return complex(out) if out.ndim == 0 else out


def preprocessed(dataset: FarFieldDataset, frame_index: int) -> np.ndarray:
    """Preprocessed scalar data of one frame on the dataset's frequency grid."""
    frame = dataset.frames[frame_index]
    return preprocess(dataset.values[frame_index], frame, dataset.grid.values, dataset.medium.mu)


@dataclass(frozen=True)
class NoiseSpec:
    delta: float
    seed: int = 0
    complex_noise: bool = True

    def __post_init__(self):
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            raise ValueError("noise level delta must be >= 0")


def add_noise(dataset: FarFieldDataset, spec: NoiseSpec) -> FarFieldDataset:
    """Multiplicative noise ``E (1 + delta xi)`` drawn per frame, frequency and component.

    ``xi`` is standard complex normal (unit total variance) unless
    ``spec.complex_noise`` is false, in which case it is real standard normal.
    """
    if spec.delta == 0:
        return dataset.with_values(dataset.values.copy())
    rng = np.random.default_rng(spec.seed)
    shape = dataset.values.shape
    if spec.complex_noise:
        xi = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    else:
        xi = rng.standard_normal(shape)
    noisy = dataset.values * (1.0 + spec.delta * xi)
    tag = f"noise delta={spec.delta!r} seed={spec.seed}"
    prov = f"{dataset.provenance}; {tag}" if dataset.provenance else tag
    return dataset.with_values(noisy, provenance=prov)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_dataset(dataset: FarFieldDataset, path) -> None:
    path = Path(path)
    lines = [
        FORMAT_TAG,
        f"# eps = {_fmt(dataset.medium.eps)}  mu = {_fmt(dataset.medium.mu)}",
        f"# omega_max = {_fmt(dataset.grid.omega_max)}  n_omega = {dataset.grid.n_omega}",
        f"# provenance = {dataset.provenance}",
        f"# frames = {dataset.n_frames}",
    ]
    for j, f in enumerate(dataset.frames):
        x = " ".join(_fmt(v) for v in f.x_hat)
        p = " ".join(_fmt(v) for v in f.p_hat)
        lines.append(f"# frame {j} : xhat = {x} ; phat = {p}")
    lines.append(COLUMNS)
    for j in range(dataset.n_frames):
        for n in range(dataset.grid.n_omega):
            e = dataset.values[j, n]
            cells = [str(j), str(n + 1)]
            for comp in e:
                cells += [_fmt(comp.real), _fmt(comp.imag)]
            lines.append(", ".join(cells))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write dataset to {path}: {exc}") from exc


def _header_value(line: str, key: str, lineno: int, path) -> str:
    marker = f"{key} ="
    if marker not in line:
        raise DatasetFormatError(f"expected '{key} = ...'", lineno, path)
    rest = line.split(marker, 1)[1].strip()
    return rest.split()[0] if rest else ""


def _parse_floats(text: str, count: int, lineno: int, path) -> np.ndarray:
    try:
        vals = [float(t) for t in text.split()]
    except ValueError:
        raise DatasetFormatError(f"cannot parse numbers in {text!r}", lineno, path) from None
    if len(vals) != count:
        raise DatasetFormatError(f"expected {count} numbers, got {len(vals)}", lineno, path)
    return np.array(vals)


def read_dataset(path) -> FarFieldDataset:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read().split("\n")
    except OSError as exc:
        raise OSError(f"cannot read dataset {path}: {exc}") from exc
    if raw and raw[-1] == "":
        raw.pop()
    lines = list(enumerate(raw, start=1))
    it = iter(lines)

    def next_line(what):
        try:
            return next(it)
        except StopIteration:
            raise DatasetFormatError(f"unexpected end of file while reading {what}", len(raw), path) from None

    no, line = next_line("format tag")
    if line.strip() != FORMAT_TAG:
        raise DatasetFormatError(f"missing '{FORMAT_TAG}' header", no, path)
    try:
        no, line = next_line("medium")
        eps = float(_header_value(line, "eps", no, path))
        mu = float(_header_value(line, "mu", no, path))
        no, line = next_line("grid")
        omega_max = float(_header_value(line, "omega_max", no, path))
        n_omega = int(_header_value(line, "n_omega", no, path))
        medium = Medium(eps, mu)
        grid = FrequencyGrid(omega_max, n_omega)
    except ValueError as exc:
        if isinstance(exc, DatasetFormatError):
            raise
        raise DatasetFormatError(f"malformed header: {exc}", no, path) from None

    provenance = ""
    no, line = next_line("frame count")
    if line.startswith("# provenance ="):
        provenance = line[len("# provenance ="):].strip()
        no, line = next_line("frame count")
    try:
        n_frames = int(_header_value(line, "frames", no, path))
    except ValueError:
        raise DatasetFormatError("malformed frame count", no, path) from None
    if n_frames < 1:
        raise DatasetFormatError("frame count must be positive", no, path)

    frames = []
    for j in range(n_frames):
        no, line = next_line(f"frame {j}")
        head = f"# frame {j} :"
        if not line.startswith(head) or "xhat =" not in line or "; phat =" not in line:
            raise DatasetFormatError(f"malformed frame line, expected '{head} xhat = ... ; phat = ...'", no, path)
        body = line[len(head):]
        xs, ps = body.split("; phat =")
        x = _parse_floats(xs.split("xhat =", 1)[1], 3, no, path)
        p = _parse_floats(ps, 3, no, path)
        if abs(np.linalg.norm(x) - 1.0) > UNIT_TOL or abs(np.linalg.norm(p) - 1.0) > UNIT_TOL:
            raise DatasetFormatError("non-unit direction", no, path)
        try:
            frames.append(ObservationFrame(x, p))
        except ValueError as exc:
            raise DatasetFormatError(str(exc), no, path) from None

    no, line = next_line("column header")
    if [c.strip() for c in line.split(",")] != [c.strip() for c in COLUMNS.split(",")]:
        raise DatasetFormatError("malformed column header", no, path)

    rows = lines[no:]
    expected = n_frames * n_omega
    if len(rows) != expected:
        last = rows[-1][0] if rows else no
        raise DatasetFormatError(
            f"row count {len(rows)} does not match frames x n_omega = {expected}", last, path
        )
    values = np.empty((n_frames, n_omega, 3), dtype=complex)
    for k, (no, line) in enumerate(rows):
        cells = line.split(",")
        if len(cells) != 8:
            raise DatasetFormatError(f"expected 8 columns, got {len(cells)}", no, path)
        try:
            j, n = int(cells[0]), int(cells[1])
            nums = [float(c) for c in cells[2:]]
        except ValueError:
            raise DatasetFormatError("cannot parse data row", no, path) from None
        if (j, n) != (k // n_omega, k % n_omega + 1):
            raise DatasetFormatError(
                f"row ({j}, {n}) out of order; expected ({k // n_omega}, {k % n_omega + 1})", no, path
            )
        values[j, n - 1] = np.array(nums[0::2]) + 1j * np.array(nums[1::2])
    return FarFieldDataset(tuple(frames), grid, values, medium, provenance)
