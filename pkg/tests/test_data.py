import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emdsm.data import (
    DatasetFormatError,
    FarFieldDataset,
    FrequencyGrid,
    Medium,
    NoiseSpec,
    add_noise,
    preprocess,
    read_dataset,
    write_dataset,
)
from emdsm.geometry import ObservationFrame

from conftest import frames_for


def small_dataset(seed=0, n_omega=5):
    rng = np.random.default_rng(seed)
    frames = frames_for([(0, 0, 1), (0, 0, -1), (0.6, 0.8, 0)])
    vals = rng.standard_normal((3, n_omega, 3)) + 1j * rng.standard_normal((3, n_omega, 3))
    return FarFieldDataset(tuple(frames), FrequencyGrid(20.0, n_omega), vals,
                           Medium(2.0, 0.5), "unit test")


def test_preprocess_examples():
    f = ObservationFrame((0, 0, 1), (1, 0, 0))
    assert np.isclose(preprocess(np.array([-2j, 0, 0]), f, np.pi, 1.0), -2 / np.pi)
    assert preprocess(np.array([0, 5, 0]), f, 3.0, 1.0) == 0
    assert preprocess(np.zeros(3), f, 1.0, 1.0) == 0
    with pytest.raises(ValueError):
        preprocess(np.ones(3), f, 0.0, 1.0)


@given(st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10))
def test_preprocess_linear(a, b):
    rng = np.random.default_rng(1)
    u = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    f = ObservationFrame.from_direction((1, 2, 3))
    lhs = preprocess(a * u + b * v, f, 2.0, 1.5)
    rhs = a * preprocess(u, f, 2.0, 1.5) + b * preprocess(v, f, 2.0, 1.5)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


def test_grid_values():
    g = FrequencyGrid(20.0, 200)
    assert g.values[0] == pytest.approx(0.1) and g.values[-1] == pytest.approx(20.0)
    w = g.weights()
    assert w[-1] == pytest.approx(0.05) and w[0] == pytest.approx(0.1)
    with pytest.raises(ValueError):
        FrequencyGrid(20.0, 1)


def test_medium_c():
    assert abs(Medium(2.0, 2.0).c - 0.5) <= 1e-12


def test_noise_zero_is_identity():
    ds = small_dataset()
    out = add_noise(ds, NoiseSpec(0.0, 7))
    assert np.array_equal(out.values, ds.values)


def test_noise_deterministic():
    ds = small_dataset()
    a = add_noise(ds, NoiseSpec(0.3, 42))
    b = add_noise(ds, NoiseSpec(0.3, 42))
    c = add_noise(ds, NoiseSpec(0.3, 43))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_noise_relative_rms():
    ds = small_dataset(n_omega=1200)
    assert ds.values.size >= 1e4
    noisy = add_noise(ds, NoiseSpec(0.5, 3))
    rel = np.abs(noisy.values - ds.values) / np.abs(ds.values)
    assert 0.45 <= np.sqrt(np.mean(rel**2)) <= 0.55


def test_noise_mean_unbiased():
    frames = frames_for([(0, 0, 1)])
    ds = FarFieldDataset(tuple(frames), FrequencyGrid(1.0, 2), np.ones((1, 2, 3), complex),
                         Medium(1, 1))
    draws = np.array([add_noise(ds, NoiseSpec(0.5, s)).values[0, 0, 0] for s in range(10_000)])
    sigma = 0.5 / np.sqrt(10_000)
    assert abs(draws.mean() - 1) <= 3 * sigma * np.sqrt(2)


def test_real_noise_variant():
    ds = small_dataset()
    noisy = add_noise(ds, NoiseSpec(0.4, 1, complex_noise=False))
    ratio = noisy.values / ds.values
    assert np.allclose(ratio.imag, 0, atol=1e-12)


def test_round_trip(tmp_path):
    ds = small_dataset()
    write_dataset(ds, tmp_path / "d.txt")
    back = read_dataset(tmp_path / "d.txt")
    assert back == ds


def _tamper(tmp_path, fn):
    ds = small_dataset()
    p = tmp_path / "d.txt"
    write_dataset(ds, p)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(fn(lines)) + "\n")
    return p


def test_reject_non_unit_direction(tmp_path):
    def bad(lines):
        return [ln.replace("xhat = 0 0 1", "xhat = 0 0 0.9") for ln in lines]
    p = _tamper(tmp_path, bad)
    with pytest.raises(DatasetFormatError, match="non-unit direction") as exc:
        read_dataset(p)
    assert exc.value.line is not None


def test_reject_missing_rows(tmp_path):
    def drop(lines):
        return [ln for ln in lines if ln.startswith("#") or ln.startswith("frame_index")]
    with pytest.raises(DatasetFormatError, match="row"):
        read_dataset(_tamper(tmp_path, drop))


def test_reject_bad_header(tmp_path):
    with pytest.raises(DatasetFormatError):
        read_dataset(_tamper(tmp_path, lambda lines: lines[1:]))


def test_opposite_pairs():
    ds = small_dataset()
    assert ds.opposite_pairs() == [(0, 1)]
    assert ds.find_opposite(1) == 0
    with pytest.raises(ValueError):
        ds.find_opposite(2)


@settings(max_examples=25)
@given(st.lists(st.floats(-1e300, 1e300, allow_nan=False), min_size=6, max_size=6))
def test_round_trip_exact_values(tmp_path_factory, vals):
    frames = frames_for([(0, 0, 1)])
    arr = np.array(vals).reshape(1, 2, 3) * (1 + 0.5j)
    ds = FarFieldDataset(tuple(frames), FrequencyGrid(3.0, 2), arr, Medium(1, 1))
    p = tmp_path_factory.mktemp("rt") / "d.txt"
    write_dataset(ds, p)
    assert read_dataset(p) == ds
