"""Piecewise domain management: breakpoints, per-panel grids, and propagation
of delay-induced derivative discontinuities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .interp import Grid, barymat, cheb_grid


class UnsupportedDelayError(ValueError):
    """Raised when a delay map cannot be handled automatically (supply
    breakpoints by hand instead)."""


class OutOfDomainError(ValueError):
    """Raised when a point falls outside the piecewise domain."""


@dataclass(frozen=True)
class PiecewiseGrid:
    """Ordered Chebyshev panels covering [T_0, T_m].

    ``breakpoints`` are the m+1 ascending panel edges; panel k spans
    [breakpoints[k], breakpoints[k+1]].
    """

    breakpoints: tuple
    panels: tuple
    sizes: tuple

    @property
    def total_size(self) -> int:
        return sum(self.sizes)

    @property
    def n_panels(self) -> int:
        return len(self.panels)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes)])

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([p.nodes for p in self.panels])

    @property
    def a(self) -> float:
        return self.breakpoints[0]

    @property
    def b(self) -> float:
        return self.breakpoints[-1]


@dataclass(frozen=True)
class PiecewiseFunction:
    """Concatenated per-panel node values on a PiecewiseGrid.

    Evaluation at an interior breakpoint uses the left panel; continuity
    there is the solver's job, so the choice is only observable pre-solve.
    """

    grid: PiecewiseGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if len(v) != self.grid.total_size:
            raise ValueError("value count does not match grid")
        object.__setattr__(self, "values", v)

    def panel_values(self, k: int) -> np.ndarray:
        off = self.grid.offsets
        return self.values[off[k]:off[k + 1]]

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        for i, xv in enumerate(x):
            k = locate_panel(self.grid, xv)
            p = self.grid.panels[k]
            out[i] = (barymat([xv], p) @ self.panel_values(k))[0]
        return out


def build_piecewise_grid(breaks, sizes) -> PiecewiseGrid:
    """Assemble Chebyshev panels between consecutive breakpoints."""
    breaks = [float(x) for x in breaks]
    sizes = [int(s) for s in sizes]
    if len(sizes) != len(breaks) - 1:
        raise ValueError("need one size per panel")
    if any(s < 2 for s in sizes):
        raise ValueError("panel sizes must be >= 2")
    if any(b <= a for a, b in zip(breaks, breaks[1:])):
        raise ValueError("breakpoints must be strictly ascending")
    panels = tuple(cheb_grid(s, a, b)
                   for s, a, b in zip(sizes, breaks, breaks[1:]))
    return PiecewiseGrid(tuple(breaks), panels, tuple(sizes))


def locate_panel(g: PiecewiseGrid, x: float) -> int:
    """Index k of the panel whose half-open span (T_k, T_{k+1}] contains x.

    The left endpoint T_0 maps to panel 0.  Points strictly outside
    [T_0, T_m] raise OutOfDomainError; the caller's history handling, not
    this routine, deals with those.
    """
    breaks = g.breakpoints
    if x < breaks[0] or x > breaks[-1]:
        raise OutOfDomainError(f"{x} outside [{breaks[0]}, {breaks[-1]}]")
    k = int(np.searchsorted(breaks, x, side="left")) - 1
    return max(k, 0)


def propagate_breakpoints(tau, domain, initial_breaks=(0.0,), max_order=None,
                          _generation_cap=1000) -> np.ndarray:
    """Trace delay-propagated discontinuity locations through (T_0, T_m).

    Starting from the seed set (the origin plus any history kinks), each
    generation solves tau(b) = c for every current point c and keeps roots
    strictly inside the open domain.  tau must be continuous and strictly
    increasing over the domain; anything else raises UnsupportedDelayError.
    Only forward propagation is traced (b > c): a kink at c reappears where
    the delayed argument crosses it, and advanced arguments, whose kinks
    would cascade backwards and accumulate, are out of scope.  Returned
    points are sorted, merged with interior seeds and de-duplicated.  With
    ``max_order=None`` propagation runs until no new point appears.
    """
    t0, t1 = float(domain[0]), float(domain[1])
    if not t1 > t0:
        raise ValueError("domain must have positive length")
    scale = max(1.0, abs(t1 - t0))
    dedupe_tol = 1e-11 * scale
    root_tol = 1e-13 * scale
    if tau is None:
        inner = [b for b in initial_breaks if t0 + dedupe_tol < b < t1 - dedupe_tol]
        return np.array(sorted(inner))

    probe = np.linspace(t0, t1, 1024)
    tp = np.asarray([tau(x) for x in probe], dtype=float)
    if not np.all(np.isfinite(tp)) or np.any(np.diff(tp) <= 0):
        raise UnsupportedDelayError(
            "delay map is not strictly increasing on the domain; "
            "supply breakpoints manually")

    def solve_tau_eq(c):
        # bisection for tau(b) = c on [t0, t1]; tau monotone increasing
        if not (tp[0] <= c <= tp[-1]):
            return None
        lo, hi = t0, t1
        flo = tau(lo) - c
        if flo == 0.0:
            return lo
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = tau(mid) - c
            if fm == 0.0:
                return mid
            if np.sign(fm) == np.sign(flo):
                lo, flo = mid, fm
            else:
                hi = mid
            if hi - lo <= root_tol:
                break
        return 0.5 * (lo + hi)

    found: list[float] = []

    def is_new(b):
        return all(abs(b - x) > dedupe_tol for x in found) and \
            t0 + dedupe_tol < b < t1 - dedupe_tol

    frontier = list(initial_breaks)
    for b in frontier:
        if is_new(b):
            found.append(b)
    generations = 0
    while frontier:
        if max_order is not None and generations >= max_order:
            break
        if generations >= _generation_cap:
            raise UnsupportedDelayError(
                "breakpoint propagation did not terminate; delay appears to "
                "accumulate breakpoints (supply max_order)")
        nxt = []
        for c in frontier:
            b = solve_tau_eq(c)
            if b is not None and b > c + dedupe_tol and is_new(b):
                found.append(b)
                nxt.append(b)
        frontier = nxt
        generations += 1
    return np.array(sorted(found))
