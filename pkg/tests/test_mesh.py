import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddecolloc.mesh import OutOfDomainError, PiecewiseFunction, \
    UnsupportedDelayError, build_piecewise_grid, locate_panel, \
    propagate_breakpoints


def test_propagate_discrete_delay():
    got = propagate_breakpoints(lambda t: t - 0.5, (0, 2), initial_breaks=(0.0,))
    assert np.allclose(got, [0.5, 1.0, 1.5], atol=1e-12)
    assert len(got) == 3


def test_propagate_nonlinear_delay():
    got = propagate_breakpoints(lambda t: t ** 2 - 0.25, (0, 1),
                                initial_breaks=(0.0,))
    assert np.allclose(got, [0.5, np.sqrt(3) / 2], atol=1e-12)


def test_propagate_without_delay_keeps_seeds():
    got = propagate_breakpoints(None, (0, 3), initial_breaks=(0.0, 1.2, 2.1))
    assert np.allclose(got, [1.2, 2.1])


def test_propagate_rejects_nonmonotone():
    with pytest.raises(UnsupportedDelayError):
        propagate_breakpoints(lambda t: np.sin(3 * t), (0, 2),
                              initial_breaks=(0.0,))


def test_propagate_max_order_truncates():
    got = propagate_breakpoints(lambda t: t - 0.5, (0, 2), (0.0,), max_order=2)
    assert np.allclose(got, [0.5, 1.0], atol=1e-12)


def test_propagate_is_idempotent():
    first = propagate_breakpoints(lambda t: t - 0.5, (0, 2), (0.0,))
    again = propagate_breakpoints(lambda t: t - 0.5, (0, 2),
                                  tuple([0.0] + list(first)))
    assert np.allclose(again, first, atol=1e-11)


def test_propagate_is_forward_only():
    # tau(t) = 2t would cascade kinks backwards toward 0; those are not traced
    got = propagate_breakpoints(lambda t: 2 * t, (0, 1), (0.5,), max_order=None)
    assert np.allclose(got, [0.5])


@settings(max_examples=25, deadline=None)
@given(p=st.floats(0.05, 0.9), T=st.floats(1.0, 4.0))
def test_propagate_discrete_lag_lattice(p, T):
    got = propagate_breakpoints(lambda t: t - p, (0, T), (0.0,))
    expected = np.arange(p, T, p)
    expected = expected[np.abs(expected - T) > 1e-11 * max(1, T)]
    assert len(got) == len(expected)
    assert np.allclose(got, expected, atol=1e-10)


def test_build_piecewise_grid_shapes():
    g = build_piecewise_grid([0, 0.5, 1], [10, 11])
    assert g.n_panels == 2
    assert g.total_size == 21
    assert g.panels[0].a == 0 and g.panels[0].b == 0.5
    assert g.panels[1].a == 0.5 and g.panels[1].b == 1
    single = build_piecewise_grid([0, 1], [12])
    assert single.n_panels == 1
    uneven = build_piecewise_grid([0, 0.5, np.sqrt(3) / 2, 1], [12, 12, 12])
    widths = np.diff(uneven.breakpoints)
    assert len(set(np.round(widths, 12))) == 3


def test_build_piecewise_grid_validation():
    with pytest.raises(ValueError):
        build_piecewise_grid([0, 1], [10, 11])
    with pytest.raises(ValueError):
        build_piecewise_grid([0, 0.5, 1], [10, 1])
    with pytest.raises(ValueError):
        build_piecewise_grid([0, 0.5, 0.5], [4, 4])


def test_locate_panel_half_open_rule():
    g = build_piecewise_grid([0, 0.5, 1], [4, 4])
    assert locate_panel(g, 0.5) == 0   # interior breakpoint goes left
    assert locate_panel(g, 0.0) == 0   # left edge goes to the first panel
    assert locate_panel(g, 0.75) == 1
    assert locate_panel(g, 1.0) == 1
    with pytest.raises(OutOfDomainError):
        locate_panel(g, -0.1)
    with pytest.raises(OutOfDomainError):
        locate_panel(g, 1.1)


def test_piecewise_function_eval_prefers_left_panel():
    g = build_piecewise_grid([0, 0.5, 1], [6, 6])
    vals = np.concatenate([np.zeros(6), np.ones(6)])  # jump at the interface
    f = PiecewiseFunction(g, vals)
    assert f(0.5)[0] == 0.0
    assert f(0.5 + 1e-12)[0] == pytest.approx(1.0, abs=1e-9)


def test_piecewise_function_interpolates():
    g = build_piecewise_grid([0, 0.5, 1], [12, 13])
    f = PiecewiseFunction(g, np.exp(-g.nodes))
    x = np.linspace(0, 1, 37)
    assert np.abs(f(x) - np.exp(-x)).max() < 1e-12


def test_piecewise_function_length_check():
    g = build_piecewise_grid([0, 1], [5])
    with pytest.raises(ValueError):
        PiecewiseFunction(g, np.zeros(4))
