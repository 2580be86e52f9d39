from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tvgsr.datasets import (
    DatasetBundle,
    load_bundle,
    make_observation,
    read_signal_csv,
    save_bundle,
    write_signal_csv,
)
from tvgsr.synth import sample_mask

DATA = Path(__file__).parent / "data"


def test_toy_bundle_values():
    b = load_bundle(DATA / "toy_signal.csv", DATA / "toy_coords.csv")
    assert b.shape == (2, 3)
    np.testing.assert_array_equal(b.signal, [[1.5, -2, 3.25], [0.125, 4, -1e-3]])
    assert b.ids == ("a", "b")
    assert b.name == "toy_signal"


def test_row_mismatch(tmp_path):
    coords = tmp_path / "c.csv"
    coords.write_text("id,x,y\n0,0,0\n")
    with pytest.raises(ValueError, match="mismatch"):
        load_bundle(DATA / "toy_signal.csv", coords)


def test_ragged_and_garbage_rows(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("1,2,3\n4,5\n")
    with pytest.raises(ValueError, match="columns"):
        read_signal_csv(p)
    p.write_text("1,2,x\n")
    with pytest.raises(ValueError, match="unparsable"):
        read_signal_csv(p)


def test_gaps_masked_or_rejected():
    b = load_bundle(DATA / "gappy_signal.csv", DATA / "gappy_coords.csv")
    np.testing.assert_array_equal(b.valid, [[True, False, True], [False, True, True]])
    with pytest.raises(ValueError):
        load_bundle(DATA / "gappy_signal.csv", DATA / "gappy_coords.csv", nan_policy="reject")


def test_gaps_never_observed():
    b = load_bundle(DATA / "gappy_signal.csv", DATA / "gappy_coords.csv")
    mask = sample_mask(2, 3, 1.0, 0, universe=b.valid)
    obs = make_observation(b, mask)
    assert obs.J.sum() == 4
    assert np.all(obs.J[~b.valid] == 0)
    assert np.all(np.isfinite(obs.ground_truth))


@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(-1e300, 1e300, allow_nan=False, allow_infinity=False)))
def test_round_trip_bit_exact(tmp_path_factory, X):
    d = tmp_path_factory.mktemp("rt")
    bundle = DatasetBundle(coords=np.arange(2 * X.shape[0], dtype=float).reshape(-1, 2) / 7,
                           signal=X)
    save_bundle(bundle, d / "s.csv", d / "c.csv")
    back = load_bundle(d / "s.csv", d / "c.csv")
    np.testing.assert_array_equal(back.signal, X)
    np.testing.assert_array_equal(back.coords, bundle.coords)


def test_headerless_signal(tmp_path):
    p = tmp_path / "s.csv"
    write_signal_csv(p, np.eye(2), header=False)
    np.testing.assert_array_equal(read_signal_csv(p), np.eye(2))


def test_make_observation_full_rate():
    b = load_bundle(DATA / "small_signal.csv", DATA / "small_coords.csv")
    obs = make_observation(b, np.ones(b.shape))
    np.testing.assert_array_equal(obs.Y, b.signal)


def test_make_observation_count_determinism_and_immutability():
    b = load_bundle(DATA / "small_signal.csv", DATA / "small_coords.csv")
    before = b.signal.copy()
    n, m = b.shape
    mask = sample_mask(n, m, 0.45, 7, universe=b.valid)
    o1 = make_observation(b, mask, "gaussian:0.1", 7)
    o2 = make_observation(b, mask, "gaussian:0.1", 7)
    assert o1.J.sum() == int(np.floor(0.45 * n * m))
    np.testing.assert_array_equal(o1.Y, o2.Y)
    np.testing.assert_array_equal(b.signal, before)
    assert not b.signal.flags.writeable
    with pytest.raises(ValueError):
        make_observation(b, np.ones((n, m + 1)))
