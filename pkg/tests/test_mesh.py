import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempered_tof.errors import InvalidParameterError
from tempered_tof.mesh import build_graded_mesh, build_l1_table, build_spatial_mesh

from oracles import direct_weights


def test_uniform_points():
    m = build_graded_mesh(4, 1, 1.0)
    np.testing.assert_array_equal(m.points, [0, 0.25, 0.5, 0.75, 1])
    np.testing.assert_array_equal(m.lengths, [0.25] * 4)


def test_quadratic_points():
    m = build_graded_mesh(4, 2, 1.0)
    np.testing.assert_allclose(m.points, [0, 1 / 16, 1 / 4, 9 / 16, 1], rtol=0, atol=1e-16)


def test_cubic_lengths():
    m = build_graded_mesh(5, 3, 1.0)
    assert m.lengths[0] == pytest.approx(0.008, rel=1e-15)
    assert m.lengths[4] == pytest.approx(0.488, rel=1e-15)


@pytest.mark.parametrize("n, r, T", [(0, 1, 1), (4, 0.5, 1), (4, 2, 0), (4, 2, -1)])
def test_invalid_mesh(n, r, T):
    with pytest.raises(InvalidParameterError):
        build_graded_mesh(n, r, T)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 2000), r=st.floats(1.0, 10.0), T=st.floats(1e-3, 1e4))
def test_mesh_invariants(n, r, T):
    m = build_graded_mesh(n, r, T)
    i = np.arange(n + 1)
    np.testing.assert_array_equal(m.points, (i / n) ** r * T)
    assert m.points[0] == 0 and m.points[-1] == T
    assert np.all(np.diff(m.points) > 0)
    assert np.all(m.lengths > 0)
    assert abs(m.lengths.sum() - T) <= 8 * np.spacing(T) * n
    np.testing.assert_allclose(m.lengths, np.diff(m.points), rtol=1e-9, atol=1e-13 * T)


@given(n=st.integers(1, 500), T=st.floats(1e-3, 1e3))
def test_r1_is_uniform(n, T):
    m = build_graded_mesh(n, 1, T)
    assert np.all(np.abs(m.lengths - T / n) <= 4 * np.spacing(T / n))


def test_spatial_mesh():
    s = build_spatial_mesh(8, 2.0)
    assert s.h == 0.25
    np.testing.assert_array_equal(s.points, np.arange(9) * 0.25)
    assert s.points[-1] == 2.0
    with pytest.raises(InvalidParameterError):
        build_spatial_mesh(0, 1.0)


def test_uniform_l1_weights():
    m = build_graded_mesh(12, 1, 1.0)
    tab = build_l1_table(0.5, m)
    for k in range(1, 13):
        j = np.arange(k)
        np.testing.assert_allclose(tab.row(k), np.sqrt(k - j) - np.sqrt(k - j - 1), rtol=1e-13)
        assert tab[k - 1, k] == 1.0


def test_graded_weight_value():
    tab = build_l1_table(0.5, build_graded_mesh(9, 3, 1.0))
    # a[0,2] with k^r = 8, (j+1)^r - j^r = 1
    assert tab[0, 2] == pytest.approx(np.sqrt(8) - np.sqrt(7), rel=1e-14)
    assert tab[0, 2] == pytest.approx(0.182676, abs=5e-7)


def test_alpha_near_one_positive():
    tab = build_l1_table(0.999, build_graded_mesh(50, 1, 1.0))
    for k in range(1, 51):
        row = tab.row(k)
        assert np.all(row > 0)
        j = np.arange(k)
        np.testing.assert_allclose(row, (k - j) ** 0.001 - (k - j - 1.0) ** 0.001, rtol=1e-9)


@pytest.mark.parametrize("r", [1, 2, 3, 7])
@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_weights_match_direct_formula(alpha, r):
    m = build_graded_mesh(40, r, 1.0)
    tab = build_l1_table(alpha, m)
    for k in (1, 2, 7, 40):
        np.testing.assert_allclose(tab.weights(k), direct_weights(m.points, alpha, k, r), rtol=1e-12)


def test_lazy_rows_match_stored():
    m = build_graded_mesh(30, 3, 1.0)
    stored = build_l1_table(0.4, m)
    lazy = build_l1_table(0.4, m, cap=10)
    assert lazy.lazy and not stored.lazy
    for k in range(1, 31):
        np.testing.assert_array_equal(stored.row(k), lazy.row(k))


def test_table_rejects_alpha():
    m = build_graded_mesh(4, 1, 1.0)
    for a in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(InvalidParameterError):
            build_l1_table(a, m)


def test_table_index_errors():
    tab = build_l1_table(0.5, build_graded_mesh(4, 2, 1.0))
    with pytest.raises(IndexError):
        tab.row(0)
    with pytest.raises(IndexError):
        tab[3, 3]


def test_large_grading_does_not_overflow():
    tab = build_l1_table(0.3, build_graded_mesh(5000, 60.0, 1.0), cap=10)
    row = tab.row(5000)
    assert np.all(np.isfinite(row)) and np.all(row > 0)
