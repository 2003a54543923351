"""Block collocation systems: per-panel operators, cross-panel delay
resampling, interface continuity rows and boundary bordering.

The delay resampling follows the left-limit convention: a delayed argument
exactly on an interior breakpoint is served by the panel to its left, and one
exactly on the domain's left edge is served by the history function whenever
a history is present.  Each panel's collocation rows therefore represent
one-sided limits from inside that panel, which is what keeps the piecewise
solution spectrally accurate at the breakpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .interp import Grid, barymat, cumsummat, diffmat
from .mesh import PiecewiseGrid, locate_panel


class MissingHistoryError(ValueError):
    """A delayed argument left the domain and no history covers it."""


@dataclass(frozen=True)
class HistorySpec:
    """Prescribed solution values for arguments outside the solve interval.

    mode 'explicit' evaluates ``phi``; 'constant' returns ``value``;
    'periodic' wraps arguments modulo ``period`` back into the domain and
    produces no right-hand-side term.
    """

    mode: str = "explicit"
    phi: object = None
    value: float = 0.0
    period: float | None = None

    def __post_init__(self):
        if self.mode not in ("explicit", "constant", "periodic"):
            raise ValueError(f"unknown history mode {self.mode!r}")
        if self.mode == "explicit" and self.phi is None:
            raise ValueError("explicit history needs phi")
        if self.mode == "periodic" and not (self.period and self.period > 0):
            raise ValueError("periodic history needs a positive period")

    def evaluate(self, tau: float) -> float:
        if self.mode == "constant":
            return self.value
        if self.mode == "explicit":
            return float(self.phi(tau))
        raise ValueError("periodic history has no pointwise values")


@dataclass
class BlockSystem:
    """Assembled square collocation matrix, right-hand side, and a record of
    which rows were overwritten by constraints."""

    matrix: np.ndarray
    rhs: np.ndarray
    constraint_rows: list = field(default_factory=list)


def block_diffmat(g: PiecewiseGrid, order: int = 1) -> np.ndarray:
    """Block-diagonal differentiation matrix over all panels."""
    N = g.total_size
    D = np.zeros((N, N))
    off = g.offsets
    for k, panel in enumerate(g.panels):
        D[off[k]:off[k + 1], off[k]:off[k + 1]] = diffmat(panel, order)
    return D


def block_cumsummat(g: PiecewiseGrid) -> np.ndarray:
    """Integration from T_0: full earlier panels plus the partial current one."""
    N = g.total_size
    Q = np.zeros((N, N))
    off = g.offsets
    panel_Q = [cumsummat(p) for p in g.panels]
    for j in range(g.n_panels):
        rows = slice(off[j], off[j + 1])
        Q[rows, rows] = panel_Q[j]
        for k in range(j):
            cols = slice(off[k], off[k + 1])
            Q[rows, cols] = panel_Q[k][-1, :]  # full integral over panel k
    return Q


def resampling_rows(g: PiecewiseGrid, tau_vals, history: HistorySpec | None):
    """Rows evaluating the piecewise interpolant at the points ``tau_vals``.

    Returns (P, h): an (m, N) matrix and an rhs-contribution vector so that
    the delayed values are P @ y + h.  In-domain points get barycentric rows
    in the panel the left-limit rule selects; points the history must serve
    get a zero row and their history value in h.
    """
    tau_vals = np.atleast_1d(np.asarray(tau_vals, dtype=float))
    m, N = len(tau_vals), g.total_size
    P = np.zeros((m, N))
    h = np.zeros(m)
    off = g.offsets
    t0, tm = g.a, g.b
    wrap = history is not None and history.mode == "periodic"
    for i, tv in enumerate(tau_vals):
        if wrap:
            tv = t0 + np.mod(tv - t0, history.period)
            if tv >= tm:  # mod rounding onto the right edge wraps to the left
                tv = t0
        elif history is not None and tv <= t0:
            h[i] = history.evaluate(tv)
            continue
        elif tv < t0 or tv > tm:
            if history is not None and history.mode == "explicit":
                h[i] = history.evaluate(tv)
                continue
            raise MissingHistoryError(
                f"delayed argument {tv} outside [{t0}, {tm}] and no history given")
        k = locate_panel(g, tv)
        P[i, off[k]:off[k + 1]] = barymat([tv], g.panels[k])[0]
    return P, h


def delay_block(g: PiecewiseGrid, tau, history: HistorySpec | None = None):
    """Delay evaluation operator for the map ``tau`` applied at all nodes.

    The (j, k) block row holds the barycentric row in panel k when the
    delayed node of panel j lands there, and a zero row plus a history
    contribution when the argument falls at or before T_0 (or outside the
    domain for general maps).
    """
    tau_vals = np.asarray([tau(t) for t in g.nodes], dtype=float)
    if not np.all(np.isfinite(tau_vals)):
        raise ValueError("delay map produced non-finite values at the nodes")
    return resampling_rows(g, tau_vals, history)


def continuity_rows(g: PiecewiseGrid, order: int = 1):
    """Interface rows equating left and right derivative values 0..order-1.

    Returns a list of (row, breakpoint, derivative) triples, one per interior
    breakpoint and derivative order, built from the last row of the left
    panel's differentiation matrix and the first row of the right panel's.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if order - 1 > min(g.sizes) - 2:
        raise ValueError("continuity order too high for the panel sizes")
    N = g.total_size
    off = g.offsets
    out = []
    for k in range(g.n_panels - 1):
        left, right = g.panels[k], g.panels[k + 1]
        for d in range(order):
            row = np.zeros(N)
            if d == 0:
                row[off[k + 1] - 1] = -1.0
                row[off[k + 1]] = 1.0
            else:
                row[off[k]:off[k + 1]] = -diffmat(left, d)[-1, :]
                row[off[k + 1]:off[k + 2]] = diffmat(right, d)[0, :]
            out.append((row, g.breakpoints[k + 1], d))
    return out


def border(system: BlockSystem, rows) -> BlockSystem:
    """Overwrite the stated rows with constraint rows (boundary bordering).

    ``rows`` holds (position, row vector, rhs value[, label]) tuples with
    distinct in-range positions.  Returns a new BlockSystem; the input is not
    modified.
    """
    A = system.matrix.copy()
    b = system.rhs.copy()
    record = list(system.constraint_rows)
    seen = set()
    for entry in rows:
        pos, row, rhs_val = entry[0], np.asarray(entry[1], dtype=float), entry[2]
        label = entry[3] if len(entry) > 3 else "constraint"
        if pos in seen:
            raise ValueError(f"duplicate constraint position {pos}")
        if not 0 <= pos < A.shape[0]:
            raise ValueError(f"constraint position {pos} out of range")
        seen.add(pos)
        A[pos, :] = row
        b[pos] = rhs_val
        record.append((pos, label))
    return BlockSystem(A, b, record)
