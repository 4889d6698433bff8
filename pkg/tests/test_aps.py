import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsglyph.aps import (PhaseRecord, aps_down, aps_down_backward, aps_down_pinned, aps_up,
                         aps_up_backward, half_length)
from tsglyph.nn import ShapeError, numeric_grad, relative_error


def row(*v):
    return np.array([v], dtype=float)


def test_down_odd_phase():
    out, ph = aps_down(row(1, 5, 2, 7))
    assert ph == 1
    np.testing.assert_array_equal(out, row(5, 7))


def test_down_even_phase():
    out, ph = aps_down(row(9, 0, 9, 0))
    assert ph == 0
    np.testing.assert_array_equal(out, row(9, 9))


def test_down_tie_goes_to_zero():
    assert aps_down(row(1, 1, 1, 1))[1] == 0


def test_norm_over_all_channels():
    s = np.array([[10.0, 0.0, 0.0, 0.0], [0.0, 3.0, 0.0, 3.0]])
    out, ph = aps_down(s)
    assert ph == 0  # 10 vs 6 summed jointly
    np.testing.assert_array_equal(out, s[:, 0::2])


def test_down_odd_length_edge_pad():
    out, ph = aps_down(row(0, 0, 0, 0, 5))
    assert out.shape == (1, 3)
    # padded to [0,0,0,0,5,5]; both components hold one 5, tie -> phase 0
    assert ph == 0
    np.testing.assert_array_equal(out, row(0, 0, 5))


def test_down_too_short():
    with pytest.raises(ShapeError):
        aps_down(row(1.0))


def test_lengths_follow_ceil():
    L = 150
    seen = []
    for _ in range(5):
        L = half_length(L)
        seen.append(L)
    assert seen == [75, 38, 19, 10, 5]


def test_up_examples():
    np.testing.assert_array_equal(aps_up(row(5, 7), 1, 4), row(0, 5, 0, 7))
    np.testing.assert_array_equal(aps_up(row(9, 9), 0, 4), row(9, 0, 9, 0))
    np.testing.assert_array_equal(aps_up(row(9, 9), 0, 3), row(9, 0, 9))
    with pytest.raises(ShapeError):
        aps_up(row(1, 2), 0, 6)


def test_pinned():
    np.testing.assert_array_equal(aps_down_pinned(row(1, 5, 2, 7), 0), row(1, 2))
    s = np.random.default_rng(3).normal(size=(2, 10))
    out, ph = aps_down(s)
    np.testing.assert_array_equal(aps_down_pinned(s, ph), out)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False).filter(lambda v: v != 0), min_size=2, max_size=30))
def test_round_trip_positions(vals):
    s = np.array([vals])
    out, ph = aps_down(s)
    up = aps_up(out, ph, len(vals) + (len(vals) % 2))[:, :len(vals)]
    retained = np.arange(ph, len(vals), 2)
    assert set(np.flatnonzero(up[0])) == set(retained)
    np.testing.assert_array_equal(up[0, retained], s[0, retained])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=30))
def test_norm_preservation(vals):
    s = np.array([vals])
    out, _ = aps_down(s)
    assert np.abs(out).sum() >= np.abs(s).sum() / 2 - 1e-9


def _embedded(pattern, offset, length=128):
    s = np.zeros((1, length))
    s[0, offset:offset + len(pattern)] = pattern
    return s


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 20))
def test_even_shift_law(k2):
    pat = np.random.default_rng(k2).normal(size=9)
    k = 2 * k2
    a, _ = aps_down(_embedded(pat, 30))
    b, _ = aps_down(_embedded(pat, 30 + k))
    np.testing.assert_array_equal(b[0, k // 2:], a[0, :a.shape[1] - k // 2])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 20), st.integers(0, 1000))
def test_odd_shift_law(k2, seed):
    pat = np.random.default_rng(seed).normal(size=9)
    k = 2 * k2 + 1
    a, _ = aps_down(_embedded(pat, 30))
    b, _ = aps_down(_embedded(pat, 30 + k))
    n = a.shape[1]
    ok = []
    for sh in ((k - 1) // 2, (k + 1) // 2):
        ok.append(np.array_equal(b[0, sh:], a[0, :n - sh]))
    assert any(ok)


def test_up_shift_equivariant(rng):
    s = np.zeros((1, 40))
    s[0, 10:15] = rng.normal(size=5)
    k = 3
    a = aps_up(s, 1, 80)
    b = aps_up(np.roll(s, k, axis=1), 1, 80)
    np.testing.assert_array_equal(b[0, 2 * k:], a[0, :80 - 2 * k])


@pytest.mark.parametrize("L", [8, 9])
@pytest.mark.parametrize("phase", [0, 1])
def test_backward_fd(rng, L, phase):
    s = rng.normal(size=(2, L))
    g = rng.normal(size=(2, half_length(L)))
    num = numeric_grad(lambda p: float(np.sum(aps_down_pinned(p["s"], phase) * g)),
                       {"s": s.copy()}, "s", 1e-6)
    assert relative_error(aps_down_backward(g, phase, L), num) < 1e-8
    u = rng.normal(size=(2, half_length(L)))
    gu = rng.normal(size=(2, L))
    num = numeric_grad(lambda p: float(np.sum(aps_up(p["u"], phase, L) * gu)),
                       {"u": u.copy()}, "u", 1e-6)
    assert relative_error(aps_up_backward(gu, phase, half_length(L)), num) < 1e-8


def test_phase_record_round_trip():
    rec = PhaseRecord()
    rec.append(1, 150)
    rec.append(0, 75)
    assert rec.padded == [False, True]
    rec2 = PhaseRecord.from_dict(rec.to_dict())
    assert rec2 == rec
    with pytest.raises(ValueError):
        rec.append(2, 10)
