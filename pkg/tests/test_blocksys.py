import numpy as np
import pytest

from ddecolloc.blocksys import BlockSystem, HistorySpec, MissingHistoryError, \
    block_cumsummat, block_diffmat, border, continuity_rows, delay_block, \
    resampling_rows
from ddecolloc.interp import barymat, cheb_grid, diffmat
from ddecolloc.mesh import build_piecewise_grid
from ddecolloc.solve import lu_solve

ZERO_HISTORY = HistorySpec("explicit", phi=lambda t: 0.0)


def two_panel_grid(nL=10, nR=10, mid=0.5):
    return build_piecewise_grid([0.0, mid, 1.0], [nL, nR])


def test_delay_block_equal_panels_gives_identity_block():
    g = two_panel_grid(10, 10)
    P, h = delay_block(g, lambda t: t - 0.5, ZERO_HISTORY)
    nL = 10
    # the right panel's first node has its delayed argument exactly on the
    # domain's left edge, which the left-limit rule sends to the history;
    # that row is the one bordering overwrites with the continuity condition
    assert np.allclose(P[nL + 1:, :nL], np.eye(10)[1:], atol=1e-13)
    assert np.abs(P[nL, :]).max() == 0.0
    assert np.abs(P[:nL, :]).max() == 0.0  # left panel served by the history
    assert np.abs(P[nL:, nL:]).max() == 0.0
    assert np.abs(h).max() == 0.0


def test_delay_block_single_panel_is_barymat():
    g = build_piecewise_grid([0, 1], [12])
    P, h = delay_block(g, lambda t: t / 2, None)
    panel = g.panels[0]
    assert np.allclose(P, barymat(panel.nodes / 2, panel), atol=1e-15)
    assert np.abs(h).max() == 0.0


def test_delay_block_three_panels_is_block_lower_triangular():
    breaks = [0.0, 0.5, np.sqrt(3) / 2, 1.0]
    g = build_piecewise_grid(breaks, [12, 12, 12])
    P, _ = delay_block(g, lambda t: t ** 2 - 0.25, ZERO_HISTORY)
    off = g.offsets
    for j in range(3):
        for k in range(j + 1, 3):
            assert np.abs(P[off[j]:off[j + 1], off[k]:off[k + 1]]).max() == 0.0
    # unequal widths make the sub-diagonal blocks dense
    sub = P[off[2]:off[3], off[1]:off[2]]
    assert np.count_nonzero(sub) > 0.5 * sub.size


def test_delay_block_history_rhs():
    g = build_piecewise_grid([0, 1], [8])
    hist = HistorySpec("explicit", phi=lambda t: np.cos(t))
    P, h = delay_block(g, lambda t: t - 2.0, hist)  # always in the past
    assert np.abs(P).max() == 0.0
    assert np.allclose(h, np.cos(g.nodes - 2.0), atol=1e-15)


def test_delay_block_constant_history():
    g = build_piecewise_grid([0, 1], [8])
    hist = HistorySpec("constant", value=2.5)
    P, h = delay_block(g, lambda t: t - 3.0, hist)
    assert np.allclose(h, 2.5)


def test_delay_block_periodic_wrap():
    g = build_piecewise_grid([0, 1], [9])
    hist = HistorySpec("periodic", period=1.0)
    P, h = delay_block(g, lambda t: t - 0.3, hist)
    Pref, _ = delay_block(g, lambda t: np.mod(t - 0.3, 1.0), None)
    assert np.allclose(P, Pref, atol=1e-14)
    assert np.abs(h).max() == 0.0


def test_missing_history_raises():
    g = build_piecewise_grid([0, 1], [8])
    with pytest.raises(MissingHistoryError):
        delay_block(g, lambda t: t - 0.5, None)


def test_resampling_rows_boundary_goes_to_history_when_present():
    g = two_panel_grid(6, 6)
    P, h = resampling_rows(g, [0.0], ZERO_HISTORY)
    assert np.abs(P).max() == 0.0
    P2, _ = resampling_rows(g, [0.0], None)
    assert P2[0, 0] == 1.0  # no history: left edge evaluates in panel 0


def test_continuity_rows_first_order():
    g = two_panel_grid(4, 5)
    rows = continuity_rows(g, 1)
    assert len(rows) == 1
    row, bp, d = rows[0]
    expected = np.zeros(9)
    expected[3] = -1.0
    expected[4] = 1.0
    assert np.array_equal(row, expected)
    assert bp == 0.5 and d == 0


def test_continuity_rows_four_panels():
    g = build_piecewise_grid([0, 0.5, 1, 1.5, 2], [4, 4, 4, 4])
    rows = continuity_rows(g, 1)
    assert len(rows) == 3


def test_continuity_rows_second_order():
    g = two_panel_grid(6, 7)
    rows = continuity_rows(g, 2)
    assert len(rows) == 2
    row1 = rows[1][0]
    DL = diffmat(g.panels[0])
    DR = diffmat(g.panels[1])
    assert np.allclose(row1[:6], -DL[-1, :])
    assert np.allclose(row1[6:], DR[0, :])


def test_continuity_order_validation():
    g = two_panel_grid(3, 3)
    with pytest.raises(ValueError):
        continuity_rows(g, 3)


def test_border_replaces_rows_and_records():
    A = np.arange(9.0).reshape(3, 3)
    sys0 = BlockSystem(A, np.zeros(3))
    row = np.array([1.0, 0, 0])
    sys1 = border(sys0, [(0, row, 1.0, "ic")])
    assert np.array_equal(sys1.matrix[0], row)
    assert sys1.rhs[0] == 1.0
    assert sys1.constraint_rows == [(0, "ic")]
    assert np.array_equal(sys0.matrix, A)  # untouched input


def test_border_duplicate_position_rejected():
    sys0 = BlockSystem(np.eye(3), np.zeros(3))
    row = np.ones(3)
    with pytest.raises(ValueError):
        border(sys0, [(1, row, 0.0), (1, row, 0.0)])
    with pytest.raises(ValueError):
        border(sys0, [(7, row, 0.0)])


def test_border_zero_row_makes_system_singular():
    from ddecolloc.solve import SingularMatrixError
    g = cheb_grid(6, 0, 1)
    A = diffmat(g) + np.eye(6)
    sys0 = border(BlockSystem(A, np.zeros(6)), [(0, np.zeros(6), 0.0)])
    with pytest.raises(SingularMatrixError):
        lu_solve(sys0.matrix, sys0.rhs)


# ---------------------------------------------------------------------------
# end-to-end linear solves through the assembly path

def bordered_ivp(A, b, y0):
    n = A.shape[0]
    row = np.zeros(n)
    row[0] = 1.0
    return border(BlockSystem(A, b), [(0, row, y0, "initial value")])


def test_decay_ode_to_machine_precision():
    for n in (12, 16, 20):
        g = cheb_grid(n, 0, 1)
        sys0 = bordered_ivp(diffmat(g) + np.eye(n), np.zeros(n), 1.0)
        y = lu_solve(sys0.matrix, sys0.rhs)
        assert np.abs(y - np.exp(-g.nodes)).max() < 1e-13


def test_pantograph_to_machine_precision():
    n = 20
    g = cheb_grid(n, 0, 1)
    A = diffmat(g) + np.eye(n) + barymat(g.nodes / 2, g)
    sys0 = bordered_ivp(A, np.exp(-g.nodes / 2), 1.0)
    y = lu_solve(sys0.matrix, sys0.rhs)
    assert np.abs(y - np.exp(-g.nodes)).max() < 1e-13


def exact_two_piece(t):
    return np.where(t <= 0.5, np.exp(-t),
                    np.exp(-t + 0.5) * (0.5 - t + np.exp(-0.5)))


def test_two_panel_discrete_delay_solve():
    g = two_panel_grid(20, 20)
    N = g.total_size
    A = block_diffmat(g) + np.eye(N)
    P, h = delay_block(g, lambda t: t - 0.5, ZERO_HISTORY)
    A = A + P
    b = -h
    row0 = np.zeros(N)
    row0[0] = 1.0
    crow, bp, d = continuity_rows(g, 1)[0]
    sys0 = border(BlockSystem(A, b),
                  [(0, row0, 1.0, "ic"), (20, crow, 0.0, "continuity")])
    y = lu_solve(sys0.matrix, sys0.rhs)
    assert np.abs(y - exact_two_piece(g.nodes)).max() < 1e-12
    assert len(sys0.constraint_rows) == 2


def test_single_panel_same_problem_is_only_algebraic():
    g = build_piecewise_grid([0, 1], [40])
    N = 40
    A = block_diffmat(g) + np.eye(N)
    P, h = delay_block(g, lambda t: t - 0.5, ZERO_HISTORY)
    row0 = np.zeros(N)
    row0[0] = 1.0
    sys0 = border(BlockSystem(A + P, -h), [(0, row0, 1.0)])
    y = lu_solve(sys0.matrix, sys0.rhs)
    assert np.abs(y - exact_two_piece(g.nodes)).max() > 1e-6


def test_forward_argument_is_not_lower_triangular_but_still_spectral():
    n = 20
    g = cheb_grid(n, 0, 1)
    P = barymat(1 - g.nodes ** 2, g)
    assert np.abs(np.triu(P, k=1)).max() > 0.1  # mass above the diagonal
    A = diffmat(g) + np.eye(n) + P
    sys0 = bordered_ivp(A, np.exp(g.nodes ** 2 - 1), 1.0)
    y = lu_solve(sys0.matrix, sys0.rhs)
    assert np.abs(y - np.exp(-g.nodes)).max() < 1e-12


def test_block_lower_triangular_for_all_delays_below_t():
    # random increasing delay with tau(t) <= t
    g = build_piecewise_grid([0, 0.4, 1.1, 2.0], [7, 8, 9])
    P, _ = delay_block(g, lambda t: 0.8 * t - 0.1, ZERO_HISTORY)
    off = g.offsets
    for j in range(3):
        for k in range(j + 1, 3):
            assert np.abs(P[off[j]:off[j + 1], off[k]:off[k + 1]]).max() == 0.0


def test_block_cumsummat_integrates_across_panels():
    g = build_piecewise_grid([0, 0.5, 1.2, 2], [9, 10, 11])
    Q = block_cumsummat(g)
    t = g.nodes
    assert np.abs(Q @ np.ones(g.total_size) - t).max() < 1e-13
    assert np.abs(Q @ (3 * t ** 2) - t ** 3).max() < 1e-12
