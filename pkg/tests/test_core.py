import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatpot.core import (ExponentialPair, Flat, Linear, OutOfRangeError, SampledSeries,
                          Sinusoid, Tabulated, TimeGrid, boundary_eval, make_graded_grid,
                          make_uniform_grid, parse_boundary)


def test_uniform_grid_nodes():
    np.testing.assert_allclose(make_uniform_grid(1, 4).nodes, [0, 0.25, 0.5, 0.75, 1])
    np.testing.assert_allclose(make_uniform_grid(2, 1).nodes, [0, 2])


@pytest.mark.parametrize("T,N", [(0, 4), (-1, 4), (1, 0), (1, 2.5)])
def test_uniform_grid_rejects_bad_arguments(T, N):
    with pytest.raises(ValueError):
        make_uniform_grid(T, N)


def test_graded_grid():
    np.testing.assert_allclose(make_graded_grid(1, 2, 2).nodes, [0, 0.25, 1])
    np.testing.assert_array_equal(make_graded_grid(1, 4, 1).nodes, make_uniform_grid(1, 4).nodes)
    with pytest.raises(ValueError):
        make_graded_grid(1, 3, 0.5)


def test_graded_grid_with_start():
    g = make_graded_grid(2.0, 10, 3.0, start=0.5)
    assert g.start == 0.5 and g.end == 2.0


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid([0.0])
    with pytest.raises(ValueError):
        TimeGrid([0.0, 1.0, 1.0])
    g = TimeGrid([0.0, 0.5, 2.0])
    assert g.N == 2 and g.delta(2, 0) == 2.0
    with pytest.raises(ValueError):
        g.nodes[0] = 3.0


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 100), st.integers(1, 500), st.floats(1, 4))
def test_steps_sum_to_horizon(T, N, gamma):
    g = make_graded_grid(T, N, gamma)
    assert abs(g.steps().sum() - T) <= 1e-12 * T
    assert np.all(np.diff(g.nodes) > 0)


def test_sampled_series_length_checked():
    g = make_uniform_grid(1, 4)
    with pytest.raises(ValueError):
        SampledSeries(g, np.zeros(4))
    s = SampledSeries(g, g.nodes ** 2)
    assert s(0.5) == 0.25
    assert len(s) == 5


def test_closed_form_boundaries():
    assert boundary_eval(Flat(1.0), 3.0) == (1.0, 0.0)
    v, d = boundary_eval(ExponentialPair(1, 2), 0.0)
    assert v == 3.0 and d == 1.0
    v, d = boundary_eval(Sinusoid(0, 0.2, 10), 0.0)
    assert v == 0.0 and d == pytest.approx(2.0)
    v, d = boundary_eval(Linear(1.0, 0.5), 2.0)
    assert v == 2.0 and d == 0.5


def test_boundaries_vectorise():
    t = np.linspace(0, 1, 7)
    for b in (Flat(0.3), Sinusoid(0.1, 0.2, 3), ExponentialPair(1, 1), Linear(0, 1)):
        assert np.shape(b.value(t)) == (7,)
        assert np.shape(b.derivative(t)) == (7,)


def test_tabulated_range():
    tab = Tabulated([0, 1, 2], [0, 1, 4])
    with pytest.raises(OutOfRangeError):
        tab.value(2.5)
    with pytest.raises(OutOfRangeError):
        tab.derivative(-0.1)
    assert tab.value(2.0) == 4.0


def test_tabulated_derivative_second_order():
    errs = []
    for n in (20, 80):
        t = np.linspace(0, 1, n + 1)
        tab = Tabulated(t, 3 * t ** 2 - t)
        errs.append(np.abs(tab.derivative(t) - (6 * t - 1)).max())
    # a quadratic is differentiated exactly by the second-order stencil;
    # compare with a cubic instead, where the truncation error is visible
    errs = []
    for n in (20, 80):
        t = np.linspace(0, 1, n + 1)
        tab = Tabulated(t, t ** 3)
        errs.append(np.abs(tab.derivative(t) - 3 * t ** 2).max())
    assert errs[0] / errs[1] >= 3.5


def test_tabulated_explicit_derivatives():
    tab = Tabulated(make_uniform_grid(1, 2), [0, 1, 2], derivatives=[5, 5, 5])
    assert tab.derivative(0.3) == 5.0


@pytest.mark.parametrize("text,cls", [("flat:1.0", Flat), ("sin:0,0.2,10", Sinusoid),
                                      ("exp:1,1", ExponentialPair), ("lin:0,1", Linear)])
def test_parse_boundary(text, cls):
    assert isinstance(parse_boundary(text), cls)


@pytest.mark.parametrize("text", ["flat:", "sin:1,2", "cosh:1", "flat:a"])
def test_parse_boundary_rejects(text):
    with pytest.raises(ValueError):
        parse_boundary(text)


def test_parse_boundary_file(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("# t,b\n0,1\n0.5,1.5\n1,2\n")
    b = parse_boundary(f"file:{p}")
    assert b.value(0.25) == pytest.approx(1.25)
