import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import DATA_ROOT, have_dataset
from tsglyph.dataset import (EmptyDatasetError, FormatError, ParseError, export_dataset,
                             find_dataset, from_arrays, load_dataset, znormalize,
                             znormalize_values)


def _write(path, rows):
    path.write_text("\n".join(rows) + "\n")
    return path


@pytest.fixture
def pair(tmp_path):
    vals = "\t".join(str(v) for v in range(8))
    tr = _write(tmp_path / "X_TRAIN.tsv", [f"1\t{vals}", f"2\t{vals}", f"1\t{vals}"])
    te = _write(tmp_path / "X_TEST.tsv", [f"2\t{vals}"])
    return tr, te


def test_row_parse_and_remap(tmp_path):
    vals = "\t".join(["0.0", "1.0", "2.0"] + ["0"] * 5)
    tr = _write(tmp_path / "a_TRAIN.tsv", [f"1\t{vals}", f"3\t{vals}"])
    te = _write(tmp_path / "a_TEST.tsv", [f"1\t{vals}"])
    ds = load_dataset(tr, te)
    assert ds.train[0].label == 0 and ds.train[1].label == 1
    np.testing.assert_array_equal(ds.train[0].values[:3], [0.0, 1.0, 2.0])
    assert ds.label_names == ["1", "3"]
    assert ds.name == "a"


def test_comma_delimiter(tmp_path):
    vals = ",".join(str(v) for v in range(8))
    tr = _write(tmp_path / "c_TRAIN.csv", [f"0,{vals}", f"1,{vals}"])
    te = _write(tmp_path / "c_TEST.csv", [f"1,{vals}"])
    ds = load_dataset(tr, te)
    assert ds.length == 8 and ds.class_count == 2


def test_ragged_rows_error_names_row(tmp_path):
    tr = _write(tmp_path / "r_TRAIN.tsv", ["0\t" + "\t".join(["1"] * 150), "1\t" + "\t".join(["1"] * 149)])
    te = _write(tmp_path / "r_TEST.tsv", ["0\t" + "\t".join(["1"] * 150)])
    with pytest.raises(FormatError, match="2"):
        load_dataset(tr, te)


def test_non_numeric_field(tmp_path):
    tr = _write(tmp_path / "p_TRAIN.tsv", ["0\t" + "\t".join(["1"] * 7 + ["x"])])
    te = _write(tmp_path / "p_TEST.tsv", ["0\t" + "\t".join(["1"] * 8)])
    with pytest.raises(ParseError):
        load_dataset(tr, te)


def test_empty_file(tmp_path):
    tr = _write(tmp_path / "e_TRAIN.tsv", [])
    te = _write(tmp_path / "e_TEST.tsv", ["0\t" + "\t".join(["1"] * 8)])
    with pytest.raises(EmptyDatasetError):
        load_dataset(tr, te)


def test_short_series_rejected(tmp_path):
    tr = _write(tmp_path / "s_TRAIN.tsv", ["0\t1\t2\t3"])
    te = _write(tmp_path / "s_TEST.tsv", ["0\t1\t2\t3"])
    with pytest.raises(FormatError):
        load_dataset(tr, te)


def test_test_only_label_rejected(tmp_path, pair):
    tr, _ = pair
    vals = "\t".join(str(v) for v in range(8))
    te = _write(tmp_path / "bad_TEST.tsv", [f"9\t{vals}"])
    with pytest.raises(FormatError):
        load_dataset(tr, te)


def test_round_trip(tmp_path, pair):
    ds = load_dataset(*pair)
    ds2 = load_dataset(*export_dataset(ds, tmp_path / "out"))
    assert ds2.label_names == ds.label_names
    for a, b in zip(ds.train + ds.test, ds2.train + ds2.test):
        assert a.label == b.label
        np.testing.assert_array_equal(a.values, b.values)


@pytest.mark.skipif(not have_dataset("GunPoint"), reason="GunPoint files absent")
def test_gunpoint_shape():
    ds = load_dataset(*find_dataset("GunPoint", DATA_ROOT))
    assert len(ds.train) == 50 and len(ds.test) == 150
    assert ds.length == 150 and ds.class_count == 2
    assert set(ds.train_labels()) == set(ds.test_labels()) == {0, 1}


def test_znormalize_hand_value():
    np.testing.assert_allclose(znormalize_values([2.0, 4.0, 6.0]), [-1.2247449, 0.0, 1.2247449], atol=1e-6)


def test_znormalize_constant_warns():
    with pytest.warns(RuntimeWarning):
        out = znormalize_values([5.0, 5.0, 5.0])
    np.testing.assert_array_equal(out, [0.0, 0.0, 0.0])


def test_znormalize_dataset_keeps_labels(rng):
    ds = from_arrays(rng.normal(3, 2, (4, 16)), [0, 1, 0, 1], rng.normal(size=(2, 16)), [1, 0])
    z = znormalize(ds)
    assert [s.label for s in z.train] == [0, 1, 0, 1]
    for s in z.train + z.test:
        assert abs(s.values.mean()) < 1e-6 and abs(s.values.std() - 1) < 1e-6


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(8, 64), elements=st.floats(-1e3, 1e3)))
def test_znormalize_idempotent(x):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        once = znormalize_values(x)
        twice = znormalize_values(once)
    if once.std() > 0.5:
        np.testing.assert_allclose(twice, once, atol=1e-9)
        assert abs(once.mean()) < 1e-6 and abs(once.std() - 1) < 1e-6
