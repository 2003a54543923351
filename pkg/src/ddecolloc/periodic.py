"""Fourier collocation for periodic delay problems and limit cycles with
unknown period.

The limit-cycle workflow: integrate the system forward with the step
integrator to land near the cycle, estimate the period from the spacing of
the trajectory's maxima, rescale time to [0, 1] so the frequency becomes an
unknown, and close the rank deficiency from time translation with a phase
condition.  The rescaled equations carry the period as parameter 0 and are
solved by the bordered Newton driver; converged states are mapped back to
[0, T].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .blocksys import HistorySpec
from .exprgraph import ChebContext, DelayEval, Diff, OpExpr, Param, Product, \
    TrigContext, Unknown, is_affine, linearize
from .interp import Grid, SampledFunction, cheb_grid, trig_grid
from .mesh import build_piecewise_grid
from .solve import CollocationProblem, NewtonReport, SingularMatrixError, \
    cond_inf, lu_solve, newton


@dataclass(frozen=True)
class Trajectory:
    """Time series used as initial-guess material for cycle solves."""

    times: np.ndarray
    states: np.ndarray  # (n_times, n_components)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.atleast_2d(np.asarray(self.states, dtype=float))
        if s.shape[0] != len(t):
            s = s.T
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)

    @property
    def n_components(self) -> int:
        return self.states.shape[1]


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Write columns t, y1..yd (shortest round-trip decimals)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"y{j + 1}" for j in range(traj.n_components)])
        for t, row in zip(traj.times, traj.states):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def trajectory_from_csv(path) -> Trajectory:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "t":
            raise ValueError("trajectory CSV must start with a 't' column")
        rows = [[float(x) for x in row] for row in reader if row]
    data = np.array(rows)
    return Trajectory(data[:, 0], data[:, 1:])


# ---------------------------------------------------------------------------
# step integrator (initial guesses only)

def rk4_method_of_steps(rhs, history: HistorySpec, delays, t_end: float,
                        dt: float, y0=None) -> Trajectory:
    """Classical Runge-Kutta for DDEs with discrete lags.

    ``rhs(t, y, Z)`` receives the current state and Z[:, i] = y(t - delays[i]).
    dt must divide every lag and t_end, so delayed stage arguments always fall
    inside fully computed Hermite segments.  Delayed values come from cubic
    Hermite interpolation of the stored past; stored derivatives are one-sided
    at the points where a lag first activates, which keeps each segment's data
    consistent with the smooth piece it lies in.
    """
    delays = [float(s) for s in np.atleast_1d(delays)] if delays is not None else []
    if any(s <= 0 for s in delays):
        raise ValueError("lags must be positive")
    nsteps = round(t_end / dt)
    if abs(nsteps * dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError("dt must divide t_end")
    for s in delays:
        if abs(s / dt - round(s / dt)) > 1e-9:
            raise ValueError("dt must divide each lag")

    def phi(t):
        if history.mode == "constant":
            v = history.value
        else:
            v = history.phi(t)
        return np.atleast_1d(np.asarray(v, dtype=float))

    start = phi(0.0) if y0 is None else np.atleast_1d(np.asarray(y0, dtype=float))
    d = len(start)
    ts = np.arange(nsteps + 1) * dt
    Y = np.empty((nsteps + 1, d))
    Fin = np.empty((nsteps + 1, d))   # derivative entering the node (left limit)
    Fout = np.empty((nsteps + 1, d))  # derivative leaving the node (right limit)
    Y[0] = start

    def past(tq, side="right"):
        if tq < 0.0:
            return phi(tq)
        if tq == 0.0:
            return phi(0.0) if side == "left" else Y[0]
        i = int(np.floor(tq / dt + 1e-9))
        frac = tq / dt - i
        if frac < 1e-12:
            return Y[i]
        s = frac
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * Y[i] + h10 * dt * Fout[i] + h01 * Y[i + 1] + h11 * dt * Fin[i + 1]

    def Z(tq, side="right"):
        if not delays:
            return np.empty((d, 0))
        return np.column_stack([past(tq - s, side) for s in delays])

    Fout[0] = rhs(0.0, Y[0], Z(0.0))
    Fin[0] = Fout[0]
    kink = {round(s / dt) for s in delays}
    for i in range(nsteps):
        t0 = ts[i]
        t1 = ts[i + 1]
        # the step runs through one smooth piece, so its final stage takes
        # the left limit of any delayed value sitting exactly on a kink
        k1 = Fout[i]
        k2 = rhs(t0 + dt / 2, Y[i] + dt / 2 * k1, Z(t0 + dt / 2))
        k3 = rhs(t0 + dt / 2, Y[i] + dt / 2 * k2, Z(t0 + dt / 2))
        k4 = rhs(t1, Y[i] + dt * k3, Z(t1, side="left"))
        Y[i + 1] = Y[i] + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if i + 1 in kink:
            Fin[i + 1] = rhs(t1, Y[i + 1], Z(t1, side="left"))
            Fout[i + 1] = rhs(t1, Y[i + 1], Z(t1, side="right"))
        else:
            Fin[i + 1] = rhs(t1, Y[i + 1], Z(t1))
            Fout[i + 1] = Fin[i + 1]
    return Trajectory(ts, Y)


def estimate_period(traj: Trajectory, component: int = 0):
    """Period estimate from the spacing of prominent maxima in the tail.

    Returns (period, peak times).  Maxima below the midline of the tail's
    range are ignored so ripples do not split a cycle.
    """
    n = len(traj.times)
    tt = traj.times[n // 2:]
    xx = traj.states[n // 2:, component]
    midline = 0.5 * (xx.min() + xx.max())
    peaks = []
    for i in range(1, len(xx) - 1):
        if xx[i] >= xx[i - 1] and xx[i] > xx[i + 1] and xx[i] > midline:
            den = xx[i - 1] - 2 * xx[i] + xx[i + 1]
            off = 0.5 * (xx[i - 1] - xx[i + 1]) / den if den != 0 else 0.0
            peaks.append(tt[i] + off * (tt[1] - tt[0]))
    if len(peaks) < 2:
        raise ValueError("trajectory tail shows fewer than two maxima")
    gaps = np.diff(peaks)
    return float(np.median(gaps)), np.asarray(peaks)


# ---------------------------------------------------------------------------
# periodic problems

@dataclass
class PeriodicProblem:
    """A periodic system on the unit circle with (optionally) unknown period.

    ``system`` holds one expression per component; for unknown-period
    problems they are the rescaled equations with the period as parameter 0
    (see ``lagged`` and ``cycle_equation``).  Exactly one phase condition is
    required when the period is unknown: ('anchor_derivative_zero', comp) or
    ('fix_component_value', comp, value).
    """

    system: list
    n_components: int = 1
    period_unknown: bool = True
    phase_condition: tuple = ("anchor_derivative_zero", 0)


def lagged(child, lag: float) -> DelayEval:
    """Physical delay of size ``lag`` in the rescaled cycle equations: the
    argument theta - lag/T wraps around the unit period, and the period
    parameter gets its analytic column."""
    return DelayEval(child,
                     lambda th, p: th - lag / p[0],
                     {0: lambda th, p: lag / p[0] ** 2})


def cycle_equation(component: int, rhs_expr: OpExpr) -> OpExpr:
    """Rescaled residual D y_c - T * F_c on the unit interval."""
    return Diff(Unknown(component)) - Product(Param(0), rhs_expr)


def solve_periodic_linear(system: OpExpr, g: Grid) -> SampledFunction:
    """Direct solve of a linear periodic scalar equation on a trig grid."""
    ctx = TrigContext(g)
    if not is_affine(system):
        raise ValueError("system is not linear; use the cycle solver")
    lin = linearize(system, ctx, np.zeros(g.size))
    A = lin.jac
    if cond_inf(A) > 1e14:
        raise SingularMatrixError(
            "periodic operator is singular (no periodic solution)")
    u = lu_solve(A, -lin.residual)
    return SampledFunction(g, u)


def _phase_row(ctx, phase_condition, n_params):
    kind = phase_condition[0]
    comp = phase_condition[1]
    row = np.zeros(ctx.N * ctx.d + n_params)
    if kind == "anchor_derivative_zero":
        row[comp * ctx.N:(comp + 1) * ctx.N] = ctx.diff(1)[0, :]
        return row, 0.0
    if kind == "fix_component_value":
        row[comp * ctx.N] = 1.0
        return row, float(phase_condition[2])
    raise ValueError(f"unknown phase condition {kind!r}")


def _initial_states(traj: Trajectory, period: float, nodes01, component: int = 0):
    """Sample one trajectory period onto the unit grid, starting at the last
    complete maximum of the anchor component so the default phase condition
    is nearly satisfied."""
    _, peaks = estimate_period(traj, component)
    usable = [pk for pk in peaks if pk + period <= traj.times[-1] + 1e-12]
    start = usable[-1] if usable else traj.times[-1] - period
    tq = start + nodes01 * period
    cols = [np.interp(tq, traj.times, traj.states[:, j])
            for j in range(traj.n_components)]
    return np.column_stack(cols)


def solve_limit_cycle(p: PeriodicProblem, initial: Trajectory,
                      period_guess: float | None = None, n: int = 129,
                      tol: float = 1e-10, max_iter: int = 40):
    """Limit cycle of an autonomous system by Fourier collocation.

    Returns (states, T, report) where states is a list of SampledFunctions on
    the n-point trig grid of [0, T].
    """
    if not p.period_unknown:
        raise ValueError("cycle solver expects an unknown period")
    anchor = p.phase_condition[1]
    T0 = period_guess if period_guess is not None else \
        estimate_period(initial, anchor)[0]
    g01 = trig_grid(n, 0.0, 1.0)
    ctx = TrigContext(g01, n_components=p.n_components)
    init = _initial_states(initial, T0, g01.nodes, anchor)
    row, rhs_val = _phase_row(ctx, p.phase_condition, 1)
    problem = CollocationProblem(p.system, ctx,
                                 [(None, row, rhs_val, "phase")])

    def guard(y, params):
        if params[0] <= 0:
            raise ValueError("period iterate became nonpositive")

    y, params, report = newton(problem, init.T.reshape(-1), [T0], tol=tol,
                               max_iter=max_iter, guard=guard)
    T = float(params[0])
    gT = trig_grid(n, 0.0, T)
    states = [SampledFunction(gT, y[c * n:(c + 1) * n])
              for c in range(p.n_components)]
    return states, T, report


def solve_limit_cycle_cheb(p: PeriodicProblem, initial: Trajectory,
                           period_guess: float | None = None, n: int = 50,
                           tol: float = 1e-10, max_iter: int = 40):
    """Chebyshev variant of the cycle solver: one polynomial panel on [0, 1]
    with wrap-around delay evaluation, a periodicity row y(0) = y(1) per
    component, and the same phase closure."""
    if not p.period_unknown:
        raise ValueError("cycle solver expects an unknown period")
    anchor = p.phase_condition[1]
    T0 = period_guess if period_guess is not None else \
        estimate_period(initial, anchor)[0]
    grid = build_piecewise_grid([0.0, 1.0], [n])
    ctx = ChebContext(grid, history=HistorySpec(mode="periodic", period=1.0),
                      n_components=p.n_components)
    init = _initial_states(initial, T0, grid.nodes, anchor)
    constraints = []
    for c in range(p.n_components):
        row = np.zeros(ctx.N * ctx.d + 1)
        row[c * n] = 1.0
        row[(c + 1) * n - 1] = -1.0
        constraints.append((c * n, row, 0.0, f"periodicity y{c}(0)=y{c}(1)"))
    row, rhs_val = _phase_row(ctx, p.phase_condition, 1)
    constraints.append((None, row, rhs_val, "phase"))
    problem = CollocationProblem(p.system, ctx, constraints)

    def guard(y, params):
        if params[0] <= 0:
            raise ValueError("period iterate became nonpositive")

    y, params, report = newton(problem, init.T.reshape(-1), [T0], tol=tol,
                               max_iter=max_iter, guard=guard)
    T = float(params[0])
    gT = cheb_grid(n, 0.0, T)
    states = [SampledFunction(gT, y[c * n:(c + 1) * n])
              for c in range(p.n_components)]
    return states, T, report
