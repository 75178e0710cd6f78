"""Command-line front end: synthesis, time recovery, reconstruction and noise studies.

Every run is driven by a TOML config; each command-line flag overrides the
config key it mirrors. Exit codes: 0 success, 2 validation error,
3 no signal, 4 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import math
import os
import sys
from pathlib import Path

import numpy as np
import toml

from . import reconstruct as rec
from . import temporal
from .data import (
    DatasetFormatError,
    FrequencyGrid,
    NoiseSpec,
    add_noise,
    read_dataset,
    write_dataset,
)
from .forward import Impulse, SourceSpec, Window, synthesize_dataset
from .geometry import ObservationFrame, SupportShape

EXIT_OK, EXIT_VALIDATION, EXIT_NO_SIGNAL, EXIT_IO = 0, 2, 3, 4
MODES = ("t0", "tmax_given_tmin", "tmin_given_tmax")

DEFAULTS = {
    "source": {
        "shape": "cube",
        "size": [0.5, 0.5, 0.5],
        "center": [0.0, 0.0, 0.0],
        "current": [1.0, 1.0, 1.0],
        "profile": "constant",
        "temporal": "impulse",
        "t0": 3.0,
        "t_min": 0.0,
        "t_max": 1.0,
        "tau": [],
        "eps": 1.0,
        "mu": 1.0,
    },
    "data": {
        "omega_max": 20.0,
        "n_omega": 200,
        "directions": [[0.0, 0.0, 1.0]],
        "pair_opposites": True,
        "quadrature_order": 64,
    },
    "noise": {"delta": 0.0, "seed": 0, "complex": True},
    "time": {
        "mode": "t0",
        "eta_min": 0.0,
        "eta_max": 8.0,
        "eta_step": 0.05,
        # negative means: pick the default for the source kind
        "threshold_rel": -1.0,
        "scan_radius": 1.5,
        "scan_points": 601,
        "clamp_rel": 0.05,
        "t_min": 0.0,
        "t_max": 1.0,
    },
    "grid": {"radius": 1.5, "n": 64, "iso": 0.5},
    "study": {"deltas": [0.3, 0.5, 0.8], "trials": 10, "seed": 0, "tolerance": 0.1},
    "output": {"dir": "out"},
}

# flag name -> (section, key, type); list-valued flags take several values
FLAGS = {
    "shape": ("source", "shape", str),
    "size": ("source", "size", [float]),
    "center": ("source", "center", [float]),
    "current": ("source", "current", [float]),
    "profile": ("source", "profile", str),
    "temporal": ("source", "temporal", str),
    "t0": ("source", "t0", float),
    "src-t-min": ("source", "t_min", float),
    "src-t-max": ("source", "t_max", float),
    "eps": ("source", "eps", float),
    "mu": ("source", "mu", float),
    "omega-max": ("data", "omega_max", float),
    "n-omega": ("data", "n_omega", int),
    "quadrature-order": ("data", "quadrature_order", int),
    "delta": ("noise", "delta", float),
    "seed": ("noise", "seed", int),
    "mode": ("time", "mode", str),
    "eta-min": ("time", "eta_min", float),
    "eta-max": ("time", "eta_max", float),
    "eta-step": ("time", "eta_step", float),
    "threshold-rel": ("time", "threshold_rel", float),
    "scan-points": ("time", "scan_points", int),
    "clamp-rel": ("time", "clamp_rel", float),
    "t-min": ("time", "t_min", float),
    "t-max": ("time", "t_max", float),
    "grid-radius": ("grid", "radius", float),
    "grid-n": ("grid", "n", int),
    "iso": ("grid", "iso", float),
    "deltas": ("study", "deltas", [float]),
    "trials": ("study", "trials", int),
    "base-seed": ("study", "seed", int),
    "out-dir": ("output", "dir", str),
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        path = f"{where}.{key}" if where else key
        if key not in base:
            raise ConfigError(f"{path}: unknown config key")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{path}: expected a table")
            out[key] = _merge(base[key], val, path)
        else:
            out[key] = val
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot read config {path}: {exc}") from exc
        try:
            user = toml.loads(text)
        except toml.TomlDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        cfg = _merge(cfg, user)
    if overrides:
        cfg = _merge(cfg, overrides)
    return cfg


def dump_config(cfg: dict) -> str:
    return toml.dumps(cfg)


def _field(cfg, section, key, fn):
    try:
        return fn(cfg[section][key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from exc


def _floats(n=None):
    def conv(v):
        arr = [float(x) for x in (v if isinstance(v, (list, tuple)) else [v])]
        if n is not None and len(arr) != n:
            raise ValueError(f"expected {n} numbers, got {len(arr)}")
        return arr
    return conv


def build_source(cfg) -> SourceSpec:
    s = cfg["source"]
    size = _field(cfg, "source", "size", _floats())
    center = _field(cfg, "source", "center", _floats(3))
    kind = s["shape"]
    try:
        if kind == "cube":
            shape = SupportShape.cube(size[0] if len(size) == 1 else size, center)
        elif kind == "ball":
            shape = SupportShape.ball(size[0], center)
        elif kind == "ellipsoid":
            shape = SupportShape.ellipsoid(size, center)
        else:
            raise ValueError(f"unknown shape {kind!r}")
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"source.shape/size: {exc}") from exc
    if s["temporal"] == "impulse":
        law = _field(cfg, "source", "t0", lambda v: Impulse(float(v)))
    elif s["temporal"] == "window":
        tau = _field(cfg, "source", "tau", _floats())
        try:
            law = Window(float(s["t_min"]), float(s["t_max"]), tau or None)
        except ValueError as exc:
            raise ConfigError(f"source.t_min/t_max: {exc}") from exc
    else:
        raise ConfigError(f"source.temporal: expected 'impulse' or 'window', got {s['temporal']!r}")
    try:
        return SourceSpec(shape, _field(cfg, "source", "current", _floats(3)), law,
                          profile=s["profile"], eps=float(s["eps"]), mu=float(s["mu"]))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"source: {exc}") from exc


def build_frames(cfg) -> list[ObservationFrame]:
    dirs = cfg["data"]["directions"]
    if not dirs:
        raise ConfigError("data.directions: need at least one direction")
    frames = []
    for k, d in enumerate(dirs):
        try:
            f = ObservationFrame.from_direction(_floats(3)(d))
        except ValueError as exc:
            raise ConfigError(f"data.directions[{k}]: {exc}") from exc
        frames.append(f)
        if cfg["data"]["pair_opposites"]:
            frames.append(f.opposite())
    return frames


def build_grid(cfg) -> FrequencyGrid:
    try:
        return FrequencyGrid(float(cfg["data"]["omega_max"]), int(cfg["data"]["n_omega"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"data.omega_max/n_omega: {exc}") from exc


def sampling_grid(cfg) -> rec.SamplingGrid:
    try:
        return rec.SamplingGrid(float(cfg["grid"]["radius"]), int(cfg["grid"]["n"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid.radius/n: {exc}") from exc


def threshold_for(cfg) -> float:
    thr = float(cfg["time"]["threshold_rel"])
    if thr >= 0:
        return thr
    if cfg["time"]["mode"] == "t0":
        return temporal.THRESHOLD_IMPULSE
    return temporal.THRESHOLD_WINDOW


def _threads(arg) -> int | None:
    if arg is not None:
        return arg
    env = os.environ.get("DSM_THREADS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"DSM_THREADS: {exc}") from exc
    return None


def _out_dir(cfg) -> Path:
    d = Path(cfg["output"]["dir"])
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {d}: {exc}") from exc
    return d


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _default_pair(dataset):
    pairs = dataset.opposite_pairs()
    if not pairs:
        raise ConfigError("dataset holds no pair of opposite directions")
    return pairs[0]


def scan_dataset(dataset, pair, cfg) -> temporal.EtaScan:
    t = cfg["time"]
    try:
        etas = temporal.eta_grid(float(t["eta_min"]), float(t["eta_max"]), float(t["eta_step"]))
    except ValueError as exc:
        raise ConfigError(f"time.eta_min/eta_max/eta_step: {exc}") from exc
    return temporal.eta_scan(dataset, pair, etas, radius=float(t["scan_radius"]),
                             n_points=int(t["scan_points"]), clamp_rel=float(t["clamp_rel"]),
                             threshold_rel=threshold_for(cfg))


def recover_time(dataset, pair, cfg):
    """Scan, detect the interval, and return ``(scan, interval, label, value)``."""
    mode = cfg["time"]["mode"]
    if mode not in MODES:
        raise ConfigError(f"time.mode: expected one of {MODES}, got {mode!r}")
    scan = scan_dataset(dataset, pair, cfg)
    iv = temporal.detect_support(scan)
    if mode == "t0":
        return scan, iv, "t0", temporal.recover_t0(iv)
    if mode == "tmax_given_tmin":
        return scan, iv, "t_max", temporal.recover_tmax(iv, float(cfg["time"]["t_min"]))
    return scan, iv, "t_min", temporal.recover_tmin(iv, float(cfg["time"]["t_max"]))


def cmd_synthesize(args, cfg) -> int:
    source = build_source(cfg)
    frames = build_frames(cfg)
    grid = build_grid(cfg)
    ds = synthesize_dataset(source, frames, grid, n_q=int(cfg["data"]["quadrature_order"]),
                            threads=_threads(args.threads))
    delta = float(cfg["noise"]["delta"])
    if delta > 0:
        ds = add_noise(ds, NoiseSpec(delta, int(cfg["noise"]["seed"]), bool(cfg["noise"]["complex"])))
    path = Path(args.out) if args.out else _out_dir(cfg) / "dataset.txt"
    write_dataset(ds, path)
    for k, f in enumerate(ds.frames):
        pj = float(np.dot(f.p_hat, source.current))
        peak = float(np.max(np.linalg.norm(ds.values[k], axis=-1)))
        print(f"frame {k}: xhat = {' '.join(_fmt(v) for v in f.x_hat)}  "
              f"p.J0 = {pj:.6g}  max|E| = {peak:.6g}")
        if pj <= 0:
            print(f"warning: frame {k} has p.J0 <= 0; indicators change sign", file=sys.stderr)
    print(f"wrote {path} ({ds.n_frames} x {grid.n_omega} rows)")
    return EXIT_OK


def cmd_recover_time(args, cfg) -> int:
    ds = read_dataset(args.dataset)
    pair = tuple(args.pair) if args.pair else _default_pair(ds)
    scan, iv, label, value = recover_time(ds, pair, cfg)
    path = Path(args.scan_out) if args.scan_out else _out_dir(cfg) / "scan.txt"
    temporal.write_scan(scan, path)
    print(f"eta1 = {iv.eta1:.6f}")
    print(f"eta2 = {iv.eta2:.6f}")
    print(f"{label} = {value:.6f}")
    return EXIT_OK


def _write_field(field, name, out: Path):
    rec.export_volume(field, out / name)
    for axis in (1, 2, 3):
        rec.export_slice(field, axis, 0.0, out / f"{name}_y{axis}.csv")


def cmd_reconstruct(args, cfg) -> int:
    ds = read_dataset(args.dataset)
    frames = args.frames if args.frames else list(range(ds.n_frames))
    grid = sampling_grid(cfg)
    window = cfg["source"]["temporal"] == "window" or cfg["time"]["mode"] != "t0"
    if window:
        t_min, t_max = float(cfg["time"]["t_min"]), float(cfg["time"]["t_max"])
        field = rec.evaluate_window_hull_field(ds, frames, t_min, t_max, grid,
                                               float(cfg["time"]["clamp_rel"]))
        print(f"t_min = {t_min:.6f}  t_max = {t_max:.6f}")
    else:
        if args.t0 is not None:
            t0 = args.t0
        else:
            _, _, _, t0 = recover_time(ds, _default_pair(ds), cfg)
            print(f"recovered t0 = {t0:.6f}")
        field = rec.evaluate_hull_field(ds, frames, t0, grid, float(cfg["time"]["clamp_rel"]))
    if not field.normalization > 0:
        raise temporal.NoSignalError("indicator field is identically zero")
    out = _out_dir(cfg)
    _write_field(field, "hull", out)
    mask = rec.threshold_mask(field, float(cfg["grid"]["iso"]))
    print(f"occupied voxels = {int(np.count_nonzero(mask))} of {mask.size}")
    return EXIT_OK


def cmd_slab(args, cfg) -> int:
    ds = read_dataset(args.dataset)
    if not 0 <= args.frame < ds.n_frames:
        raise ConfigError(f"--frame: index {args.frame} out of range")
    field = rec.evaluate_slab_field(ds, args.frame, args.eta, sampling_grid(cfg))
    if not field.normalization > 0:
        raise temporal.NoSignalError("indicator field is identically zero")
    out = _out_dir(cfg)
    _write_field(field, f"slab_f{args.frame}", out)
    center = rec.slab_centroid(field, ds.frames[args.frame].x_hat, float(cfg["grid"]["iso"]))
    print(f"slab centroid along xhat = {center:.6f}")
    return EXIT_OK


def noise_study(dataset, pair, cfg, t0_ref: float) -> list[tuple[float, int, float, bool]]:
    st = cfg["study"]
    rows = []
    for di, delta in enumerate(float(d) for d in st["deltas"]):
        for trial in range(int(st["trials"])):
            seed = int(np.random.SeedSequence([int(st["seed"]), di, trial]).generate_state(1)[0])
            noisy = add_noise(dataset, NoiseSpec(delta, seed, bool(cfg["noise"]["complex"])))
            try:
                _, _, _, t0 = recover_time(noisy, pair, cfg)
                rows.append((delta, trial, t0 - t0_ref, True))
            except temporal.NoSignalError:
                rows.append((delta, trial, math.nan, False))
    return rows


def cmd_noise_study(args, cfg) -> int:
    if cfg["time"]["mode"] != "t0":
        raise ConfigError("time.mode: the noise study recovers t0 only")
    ds = read_dataset(args.dataset)
    pair = tuple(args.pair) if args.pair else _default_pair(ds)
    if args.t0_true is not None:
        t0_ref = args.t0_true
    else:
        _, _, _, t0_ref = recover_time(ds, pair, cfg)
    rows = noise_study(ds, pair, cfg, t0_ref)
    path = Path(args.table_out) if args.table_out else _out_dir(cfg) / "noise_study.csv"
    lines = ["delta,trial,t0_error,success"]
    lines += [f"{_fmt(d)},{k},{_fmt(e)},{int(ok)}" for d, k, e, ok in rows]
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write table to {path}: {exc}") from exc
    tol = float(cfg["study"]["tolerance"])
    for delta in dict.fromkeys(d for d, *_ in rows):
        sub = [r for r in rows if r[0] == delta]
        good = sum(1 for r in sub if r[3] and abs(r[2]) <= tol)
        found = sum(1 for r in sub if r[3])
        print(f"delta = {delta:g}: {good}/{len(sub)} within {tol:g}, {found}/{len(sub)} detected")
    return EXIT_OK


def cmd_export_config(args, cfg) -> int:
    text = dump_config(cfg)
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write config to {args.out}: {exc}") from exc
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _add_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--threads", type=int, help="worker cap (falls back to DSM_THREADS)")
    g = p.add_argument_group("config overrides")
    for flag, (_, _, typ) in FLAGS.items():
        dest = "cfg_" + flag.replace("-", "_")
        if isinstance(typ, list):
            g.add_argument(f"--{flag}", dest=dest, type=typ[0], nargs="+")
        else:
            g.add_argument(f"--{flag}", dest=dest, type=typ)
    g.add_argument("--direction", dest="cfg_direction", type=float, nargs=3, action="append",
                   help="observation direction (repeatable; replaces data.directions)")
    g.add_argument("--no-pair-opposites", dest="cfg_no_pair", action="store_true")


def _overrides(args) -> dict:
    over: dict = {}
    for flag, (section, key, _) in FLAGS.items():
        val = getattr(args, "cfg_" + flag.replace("-", "_"), None)
        if val is not None:
            over.setdefault(section, {})[key] = val
    if getattr(args, "cfg_direction", None):
        over.setdefault("data", {})["directions"] = [list(d) for d in args.cfg_direction]
    if getattr(args, "cfg_no_pair", False):
        over.setdefault("data", {})["pair_opposites"] = False
    return over


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emdsm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="write a synthetic far-field dataset")
    p.add_argument("--out", help="dataset path (default <out-dir>/dataset.txt)")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("recover-time", help="scan eta and recover an emission time")
    p.add_argument("dataset")
    p.add_argument("--pair", type=int, nargs=2, metavar=("I", "J"))
    p.add_argument("--scan-out", help="scan path (default <out-dir>/scan.txt)")
    p.set_defaults(func=cmd_recover_time)

    p = sub.add_parser("reconstruct", help="hull indicator volume and slices")
    p.add_argument("dataset")
    p.add_argument("--frames", type=int, nargs="+", help="frame indices (default: all)")
    p.add_argument("--known-t0", dest="t0", type=float,
                   help="known excitation time (recovered when omitted)")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("slab", help="single-direction slab volume and slices")
    p.add_argument("dataset")
    p.add_argument("--frame", type=int, default=0)
    p.add_argument("--eta", type=float, required=True)
    p.set_defaults(func=cmd_slab)

    p = sub.add_parser("noise-study", help="t0 recovery under seeded multiplicative noise")
    p.add_argument("dataset")
    p.add_argument("--pair", type=int, nargs=2, metavar=("I", "J"))
    p.add_argument("--t0-true", type=float, help="reference t0 (default: recovered from clean data)")
    p.add_argument("--table-out", help="CSV path (default <out-dir>/noise_study.csv)")
    p.set_defaults(func=cmd_noise_study)

    p = sub.add_parser("export-config", help="print or write the effective config")
    p.add_argument("--out", help="TOML path (default: stdout)")
    p.set_defaults(func=cmd_export_config)

    for action in sub.choices.values():
        _add_flags(action)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return args.func(args, cfg)
    except temporal.NoSignalError as exc:
        print(f"error: no signal: {exc}", file=sys.stderr)
        return EXIT_NO_SIGNAL
    except (OSError, DatasetFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
