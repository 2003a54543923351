"""Registry of runnable example problems spanning every delay type the
library handles: plain ODE baseline, proportional / discrete / nonlinear /
state-dependent / continuous / neutral delays, forward-looking functional
equations, an eigenvalue problem, periodic problems, limit cycles, and a
Schroeder functional equation."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import lambertw

from . import periodic as periodic_mod
from .blocksys import HistorySpec, continuity_rows
from .exprgraph import ChebContext, Const, Cumsum, DelayEval, Diff, Elementwise, \
    NeutralEval, Param, Product, Scale, StateDelayEval, TrigContext, Unknown, \
    Volterra, elem_exp, elem_log, is_affine
from .interp import SampledFunction, cheb_grid, trig_grid
from .mesh import PiecewiseFunction, build_piecewise_grid
from .periodic import PeriodicProblem, Trajectory, cycle_equation, lagged, \
    rk4_method_of_steps, solve_limit_cycle, solve_limit_cycle_cheb, \
    solve_periodic_linear
from .solve import CollocationProblem, assemble, cond_inf, eig_generalized, \
    lu_solve, newton


@dataclass
class RunResult:
    """Uniform output of a single example run."""

    name: str
    category: str
    n_total: int
    t: np.ndarray
    values: np.ndarray
    panel: np.ndarray
    solution: object = None
    error: float | None = None
    rel_error: float | None = None
    cond: float | None = None
    newton: object = None
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExampleSpec:
    """A registered example: how to build and run it at a given size."""

    name: str
    category: str
    summary: str
    default_n: int
    runner: object
    exact: object = None            # exact solution t -> y, when known
    sizes_for: object = None        # n -> per-panel sizes, for multidomain runs

    def run(self, n=None, sizes=None, **opts) -> RunResult:
        return self.runner(self, n=n, sizes=sizes, **opts)


REGISTRY: dict[str, ExampleSpec] = {}


def register(spec: ExampleSpec) -> ExampleSpec:
    if spec.name in REGISTRY:
        raise ValueError(f"duplicate example name {spec.name}")
    REGISTRY[spec.name] = spec
    return spec


def get(name: str) -> ExampleSpec:
    if name not in REGISTRY:
        raise KeyError(f"unknown example {name!r}; see `list`")
    return REGISTRY[name]


def names():
    return sorted(REGISTRY)


# ---------------------------------------------------------------------------
# shared plumbing

def _panel_index(grid) -> np.ndarray:
    out = np.empty(grid.total_size, dtype=int)
    off = grid.offsets
    for k in range(grid.n_panels):
        out[off[k]:off[k + 1]] = k
    return out


def _ivp_constraints(grid, y0: float, order: int = 1):
    """Initial-condition row plus one continuity row block per interface,
    occupying the first row(s) of each panel after the first."""
    N = grid.total_size
    e0 = np.zeros(N)
    e0[0] = 1.0
    cons = [(0, e0, float(y0), "initial value")]
    off = grid.offsets
    if grid.n_panels > 1:
        rows = continuity_rows(grid, order)
        per = order
        for i, (row, bp, d) in enumerate(rows):
            k = i // per
            cons.append((off[k + 1] + d, row, 0.0, f"continuity d^{d} at {bp}"))
    return cons


def _solve_scalar(spec, equation, grid, history, constraints, init=None,
                  params0=(), tol=None, max_iter=25):
    """Drive one scalar collocation problem, affine or not, to a RunResult."""
    ctx = ChebContext(grid, history=history)
    problem = CollocationProblem([equation], ctx, constraints)
    if is_affine(equation) and not len(np.atleast_1d(params0)):
        zero = np.zeros(ctx.N)
        r0, J = assemble(problem, zero, np.zeros(0))
        y = lu_solve(J, -r0)
        report = None
        cond = cond_inf(J)
        params = np.zeros(0)
    else:
        if init is None:
            init = np.zeros(ctx.N)
        y, params, report = newton(problem, init, params0, tol=tol,
                                   max_iter=max_iter)
        cond = report.final_jacobian_cond
    sol = PiecewiseFunction(grid, y)
    res = RunResult(spec.name, spec.category, ctx.N, grid.nodes.copy(), y,
                    _panel_index(grid), solution=sol, cond=cond, newton=report)
    if len(np.atleast_1d(params)):
        res.extras["parameters"] = list(np.atleast_1d(params))
    _attach_error(res, spec)
    return res


def _attach_error(res: RunResult, spec: ExampleSpec):
    if spec.exact is None:
        return
    exact = spec.exact(res.t)
    err = np.abs(res.values - exact)
    res.error = float(err.max())
    scale = np.abs(exact).max()
    res.rel_error = float(err.max() / scale) if scale > 0 else res.error


def _single_panel(n, a, b):
    return build_piecewise_grid([a, b], [n])


# ---------------------------------------------------------------------------
# ODE baseline and linear delay examples

def _run_example1(spec, n=None, sizes=None, **opts):
    n = n or spec.default_n
    grid = _single_panel(n, 0.0, 1.0)
    eq = Diff(Unknown()) + Unknown()
    return _solve_scalar(spec, eq, grid, None, _ivp_constraints(grid, 1.0))


register(ExampleSpec(
    "example1", "ode", "y' = -y, y(0) = 1 on [0,1]", 12, _run_example1,
    exact=lambda t: np.exp(-t)))


def _run_example2(spec, n=None, sizes=None, **opts):
    n = n or spec.default_n
    grid = _single_panel(n, 0.0, 1.0)
    eq = Diff(Unknown()) + Unknown() + DelayEval(Unknown(), lambda t: t / 2) \
        - Const(lambda t: np.exp(-t / 2))
    return _solve_scalar(spec, eq, grid, None, _ivp_constraints(grid, 1.0))


register(ExampleSpec(
    "example2", "dde", "pantograph: y' = -y - y(t/2) + e^{-t/2}", 12,
    _run_example2, exact=lambda t: np.exp(-t)))


def _example3_exact(t):
    t = np.asarray(t)
    return np.where(t <= 0.5, np.exp(-t),
                    np.exp(-t + 0.5) * (0.5 - t + np.exp(-0.5)))


def _discrete_delay_equation():
    return Diff(Unknown()) + Unknown() + DelayEval(Unknown(), lambda t: t - 0.5)


def _run_example3(spec, n=None, sizes=None, **opts):
    sizes = sizes or (spec.sizes_for(n) if n else None) or (10, 11)
    grid = build_piecewise_grid([0.0, 0.5, 1.0], sizes)
    history = HistorySpec("explicit", phi=lambda t: 0.0)
    return _solve_scalar(spec, _discrete_delay_equation(), grid, history,
                         _ivp_constraints(grid, 1.0))


register(ExampleSpec(
    "example3", "dde", "discrete delay on [0,1], two panels meeting at 1/2",
    10, _run_example3, exact=_example3_exact,
    sizes_for=lambda n: (n, n + 1)))


def _run_example3_single(spec, n=None, sizes=None, **opts):
    n = n or spec.default_n
    grid = _single_panel(n, 0.0, 1.0)
    history = HistorySpec("explicit", phi=lambda t: 0.0)
    return _solve_scalar(spec, _discrete_delay_equation(), grid, history,
                         _ivp_constraints(grid, 1.0))


register(ExampleSpec(
    "example3_single_domain", "dde",
    "same problem on one panel: the derivative jump costs the geometric rate",
    40, _run_example3_single, exact=_example3_exact))


def _run_example4(spec, n=None, sizes=None, **opts):
    sizes = sizes or (spec.sizes_for(n) if n else None) or (10, 11, 12, 13)
    grid = build_piecewise_grid([0.0, 0.5, 1.0, 1.5, 2.0], sizes)
    history = HistorySpec("explicit", phi=lambda t: 0.0)
    return _solve_scalar(spec, _discrete_delay_equation(), grid, history,
                         _ivp_constraints(grid, 1.0))


register(ExampleSpec(
    "example4", "dde", "discrete delay on [0,2] with breakpoints 0.5, 1, 1.5",
    10, _run_example4, sizes_for=lambda n: (n, n + 1, n + 2, n + 3)))


def _run_example5(spec, n=None, sizes=None, **opts):
    n = n or spec.default_n
    breaks = [0.0, 0.5, np.sqrt(3.0) / 2.0, 1.0]
    sizes = sizes or (n, n, n)
    grid = build_piecewise_grid(breaks, sizes)
    history = HistorySpec("explicit", phi=lambda t: 0.0)
    eq = Diff(Unknown()) + Unknown() + DelayEval(Unknown(),
                                                 lambda t: t ** 2 - 0.25)
    return _solve_scalar(spec, eq, grid, history, _ivp_constraints(grid, 1.0))


register(ExampleSpec(
    "example5", "dde", "nonlinear delay t^2 - 1/4 with traced breakpoints",
    12, _run_example5, sizes_for=lambda n: (n, n, n)))


# ---------------------------------------------------------------------------
# nonlinear and state-dependent problems

def _run_example6(spec, n=None, sizes=None, tol=None, max_iter=25, **opts):
    n = n or spec.default_n
    grid = _single_panel(n, 0.0, 1.0)
    f = lambda t: np.cos(t) + np.sin(np.sin(t))
    eq = Diff(Unknown()) + StateDelayEval(Unknown()) - Const(f)
    return _solve_scalar(spec, eq, grid, None, _ivp_constraints(grid, 0.0),
                         init=grid.nodes.copy(), tol=tol, max_iter=max_iter)


register(ExampleSpec(
    "example6", "dde", "state-dependent: y' = -y(y(t)) + f, manufactured sin",
    12, _run_example6, exact=np.sin))


def _run_example7(spec, n=None, sizes=None, **opts):
    n = n or spec.default_n
    grid = _single_panel(n, 0.0, 1.0)
    eq = Diff(Unknown()) + Scale(0.5, DelayEval(Unknown(), lambda t: t / 2)) \
        - Volterra(lambda x, s: np.exp(-(x - s) ** 2), Unknown())
    return _solve_scalar(spec, eq, grid, None, _ivp_constraints(grid, 1.0))


register(ExampleSpec(
    "example7", "dde", "proportional plus continuous delay (Volterra term)",
    14, _run_example7))


def _run_example8(spec, n=None, sizes=None, **opts):
    n = n or spec.default_n
    grid = _single_panel(n, 0.0, 1.0)
    eq = Diff(Unknown()) + Unknown() + DelayEval(Unknown(), lambda t: 1 - t ** 2) \
        - Const(lambda t: np.exp(t ** 2 - 1))
    return _solve_scalar(spec, eq, grid, None, _ivp_constraints(grid, 1.0))


register(ExampleSpec(
    "example8", "fde", "forward-looking argument 1 - t^2 (not a delay)", 12,
    _run_example8, exact=lambda t: np.exp(-t)))


def _run_example9(spec, n=None, sizes=None, tol=None, max_iter=25, **opts):
    n = n or spec.default_n
    grid = _single_panel(n, 0.0, 1.0)
    eq = Diff(Unknown()) + StateDelayEval(Unknown())
    return _solve_scalar(spec, eq, grid, None, _ivp_constraints(grid, 1.0),
                         init=np.ones(n), tol=tol, max_iter=max_iter)


register(ExampleSpec(
    "example9", "fde", "y' = -y(y(t)), y(0) = 1: state-dependent and forward",
    12, _run_example9))


# ---------------------------------------------------------------------------
# richer catalogue problems

def _run_chebfun_ex1(spec, n=None, sizes=None, **opts):
    n = n or spec.default_n
    q = 0.5
    grid = _single_panel(n, 0.0, 20.0)
    u = Unknown()
    prop = DelayEval(u, lambda t: q * t)
    volt_tail = DelayEval(Volterra(lambda x, s: x / q - s, u), lambda t: q * t)
    eq = Diff(u) \
        - Const(lambda t: (q * t - t - 10) / 100) * prop \
        - Const(lambda t: (t + 20) * np.exp(-1.0) / 100) \
        - Scale(1 / 100, Cumsum(u)) \
        - Scale(1 / 1000, volt_tail)
    return _solve_scalar(spec, eq, grid, None,
                         _ivp_constraints(grid, np.exp(-1.0)))


register(ExampleSpec(
    "chebfun_ex1", "dde", "proportional and two continuous delays on [0,20]",
    20, _run_chebfun_ex1, exact=lambda t: np.exp(t / 10 - 1)))


def second_consistent_slope() -> float:
    """The other initial slope admitted by the neutral problem, -W(-2 e^-2)."""
    return float(-lambertw(-2.0 * np.exp(-2.0)).real)


def _neutral_equation():
    u = Unknown()
    ud = DelayEval(u, lambda t: t / 2)
    upd = NeutralEval(u, lambda t: t / 2)
    power = Const(lambda t: 2 * np.cos(2 * t)) * \
        elem_exp(Const(lambda t: 2 * np.cos(t)) * elem_log(ud))
    return Diff(u) - power - elem_log(upd) \
        + Const(lambda t: np.log(2 * np.cos(t)) + np.sin(t))


def _run_chebfun_ex2(spec, n=None, sizes=None, slope=2.0, tol=None,
                     max_iter=40, **opts):
    n = n or spec.default_n
    grid = _single_panel(n, 0.0, 0.1)
    init = 1.0 + slope * grid.nodes
    res = _solve_scalar(spec, _neutral_equation(), grid, None,
                        _ivp_constraints(grid, 1.0), init=init, tol=tol,
                        max_iter=max_iter)
    res.extras["slope"] = slope
    return res


register(ExampleSpec(
    "chebfun_ex2", "dde",
    "neutral type with two consistent slopes; this branch has slope 2", 24,
    _run_chebfun_ex2, exact=lambda t: np.exp(np.sin(2 * t))))

register(ExampleSpec(
    "chebfun_ex2_branch2", "dde",
    "neutral type, the ill-conditioned second-slope branch", 24,
    lambda spec, n=None, sizes=None, **opts: _run_chebfun_ex2(
        spec, n=n, slope=second_consistent_slope(), **opts)))


def _run_chebfun_ex4(spec, n=None, sizes=None, tol=None, max_iter=30, **opts):
    n = n or spec.default_n
    grid = _single_panel(n, 0.0, 1.0)
    u = Unknown()
    eq = Diff(u) + u + DelayEval(u, lambda t, p: p[0] * t,
                                 {0: lambda t, p: t}) \
        - Const(lambda t: np.exp(-t / 2))
    cons = _ivp_constraints(grid, 1.0)
    right = np.zeros(n + 1)
    right[n - 1] = 1.0
    cons.append((None, right, 0.25, "right boundary value"))
    ctx = ChebContext(grid)
    problem = CollocationProblem([eq], ctx, cons)
    init = 1.0 + (0.25 - 1.0) * grid.nodes
    y, params, report = newton(problem, init, [0.5], tol=tol, max_iter=max_iter)
    res = RunResult(spec.name, spec.category, n, grid.nodes.copy(), y,
                    _panel_index(grid), solution=PiecewiseFunction(grid, y),
                    cond=report.final_jacobian_cond, newton=report)
    res.extras["parameters"] = [float(params[0])]
    return res


register(ExampleSpec(
    "chebfun_ex4", "dde",
    "two-point problem with the proportional-delay factor unknown", 16,
    _run_chebfun_ex4))


def build_delay_evp(n: int):
    """Bordered pencil for y'' = lam * (-y(t/2)) with Dirichlet conditions."""
    grid = build_piecewise_grid([0.0, 1.0], [n])
    ctx = ChebContext(grid)
    from .interp import barymat, diffmat
    panel = grid.panels[0]
    D = diffmat(panel)
    A = D @ D
    B = -barymat(panel.nodes / 2.0, panel)
    A[0, :] = 0.0
    A[0, 0] = 1.0
    A[-1, :] = 0.0
    A[-1, -1] = 1.0
    B[0, :] = 0.0
    B[-1, :] = 0.0
    return A, B, grid


def _run_chebfun_ex5(spec, n=None, sizes=None, shift=0.0, k=6, **opts):
    n = n or spec.default_n
    A, B, grid = build_delay_evp(n)
    result = eig_generalized(A, B, k=k, shift=shift, grid=grid)
    vecs = np.column_stack([v.values for v in result.eigenvectors]) \
        if result.eigenvectors else np.zeros((n, 0))
    res = RunResult(spec.name, spec.category, n, grid.nodes.copy(), vecs,
                    _panel_index(grid))
    res.extras["eigenvalues"] = [complex(v).real if np.iscomplexobj(result.eigenvalues)
                                 and abs(complex(v).imag) < 1e-9 else v
                                 for v in np.atleast_1d(result.eigenvalues).tolist()]
    return res


register(ExampleSpec(
    "chebfun_ex5", "evp", "delay eigenvalue problem y'' = lam y(t/2), Dirichlet",
    60, _run_chebfun_ex5))


# ---------------------------------------------------------------------------
# periodic problems and limit cycles

def _run_periodic_linear(spec, n=None, sizes=None, **opts):
    n = n or spec.default_n
    g = trig_grid(n, 0.0, 2 * np.pi)
    u = Unknown()
    eq = Diff(u, 2) \
        + Const(np.sin) * NeutralEval(u, lambda t: t - np.pi / np.sqrt(2.0)) \
        + Const(np.cos) * DelayEval(u, lambda t: t - np.pi / 2) \
        - Const(1.0)
    sol = solve_periodic_linear(eq, g)
    res = RunResult(spec.name, spec.category, n, g.nodes.copy(), sol.values,
                    np.zeros(n, dtype=int), solution=sol)
    coeffs = np.abs(np.fft.fft(sol.values)) / n
    res.extras["trailing_coeff_rel"] = float(
        coeffs[n // 2 - 1:n // 2 + 2].max() / coeffs.max())
    return res


register(ExampleSpec(
    "periodic_linear", "periodic",
    "second-order periodic delay equation on [0, 2 pi]", 32,
    _run_periodic_linear))


LOTKA = {"K": 7 / 5, "gamma": 2 / 15, "delta": 1.0, "s": 1.0}


def lotka_volterra_problem(params=LOTKA) -> PeriodicProblem:
    K, gam, dlt, s = params["K"], params["gamma"], params["delta"], params["s"]
    x, y = Unknown(0), Unknown(1)
    yd = lagged(y, s)
    response = Elementwise(lambda u: u / (1 + u), lambda u: (1 + u) ** -2.0, x)
    fx = x - Scale(1 / K, Product(x, x)) - Product(response, yd)
    fy = Scale(-gam, y) + Scale(dlt, Product(response, yd))
    return PeriodicProblem([cycle_equation(0, fx), cycle_equation(1, fy)],
                           n_components=2)


@lru_cache(maxsize=4)
def lotka_volterra_trajectory(t_end=400.0, dt=0.02) -> Trajectory:
    params = LOTKA
    K, gam, dlt, s = params["K"], params["gamma"], params["delta"], params["s"]
    alpha = gam / dlt
    xe = alpha / (1 - alpha)
    ye = (1 - xe / K) * (1 + xe)

    def rhs(t, y, Z):
        x, yy = y
        yd = Z[1, 0]
        hold = x * yd / (1 + x)
        return np.array([x - x * x / K - hold, -gam * yy + dlt * hold])

    history = HistorySpec("explicit",
                          phi=lambda t: np.array([1.2 * xe, 0.9 * ye]))
    return rk4_method_of_steps(rhs, history, [s], t_end, dt)


def _run_lotka(spec, n=None, sizes=None, period_guess=None, tol=1e-10, **opts):
    n = n or spec.default_n
    problem = lotka_volterra_problem()
    traj = lotka_volterra_trajectory()
    states, T, report = solve_limit_cycle(problem, traj, period_guess, n=n,
                                          tol=tol)
    res = RunResult(spec.name, spec.category, 2 * n + 1,
                    states[0].grid.nodes.copy(),
                    np.column_stack([s.values for s in states]),
                    np.zeros(n, dtype=int), solution=states,
                    cond=report.final_jacobian_cond, newton=report)
    res.extras["period"] = T
    return res


register(ExampleSpec(
    "lotka_volterra", "periodic",
    "delayed predator-prey limit cycle with unknown period", 129, _run_lotka))


LOGISTIC = {"lam": 1.7, "s": 1.0}


def delayed_logistic_problem(lam=LOGISTIC["lam"]) -> PeriodicProblem:
    y = Unknown(0)
    f = Product(Const(lam) - lagged(y, LOGISTIC["s"]), y)
    return PeriodicProblem([cycle_equation(0, f)], n_components=1)


@lru_cache(maxsize=4)
def delayed_logistic_trajectory(t_end=200.0, dt=0.01,
                                lam=LOGISTIC["lam"]) -> Trajectory:
    rhs = lambda t, y, Z: np.array([(lam - Z[0, 0]) * y[0]])
    history = HistorySpec("constant", value=0.5)
    return rk4_method_of_steps(rhs, history, [LOGISTIC["s"]], t_end, dt)


def _run_logistic(spec, n=None, sizes=None, period_guess=None, tol=1e-10,
                  cheb=False, **opts):
    n = n or spec.default_n
    problem = delayed_logistic_problem()
    traj = delayed_logistic_trajectory()
    solver = solve_limit_cycle_cheb if cheb else solve_limit_cycle
    states, T, report = solver(problem, traj, period_guess, n=n, tol=tol)
    res = RunResult(spec.name, spec.category, n + 1,
                    states[0].grid.nodes.copy(),
                    states[0].values.copy(), np.zeros(n, dtype=int),
                    solution=states, cond=report.final_jacobian_cond,
                    newton=report)
    res.extras["period"] = T
    return res


register(ExampleSpec(
    "delayed_logistic", "periodic",
    "delayed logistic limit cycle, trigonometric interpolant", 25,
    _run_logistic))

register(ExampleSpec(
    "delayed_logistic_cheb", "periodic",
    "delayed logistic limit cycle, polynomial interpolant with wrap-around",
    50, lambda spec, **opts: _run_logistic(spec, cheb=True, **opts)))


# ---------------------------------------------------------------------------
# functional equation

SCHRODER_LAMBDA = 0.5


def koenigs_oracle(t, lam=SCHRODER_LAMBDA, compositions: int = 40):
    """Iterated-composition solution lam^{-m} f(f(...f(t)...)) of the
    Schroeder equation for f = lam sin."""
    x = np.asarray(t, dtype=float).copy()
    for _ in range(compositions):
        x = lam * np.sin(x)
    return x / lam ** compositions


def _run_schroder(spec, n=None, sizes=None, **opts):
    from .solve import functional_equation
    n = n or spec.default_n
    g = cheb_grid(n, 0.0, np.pi)
    lam = SCHRODER_LAMBDA
    sol = functional_equation(lambda t: lam * np.sin(t), lam, g)
    res = RunResult(spec.name, spec.category, n, g.nodes.copy(),
                    sol.values.copy(), np.zeros(n, dtype=int), solution=sol)
    probe = np.linspace(0.0, 2.0, 401)
    res.error = float(np.abs(sol(probe) - koenigs_oracle(probe)).max())
    res.extras["lambda"] = lam
    return res


register(ExampleSpec(
    "schroder", "functional",
    "u(f(t)) = lam u(t), f = lam sin t, normalised by u'(0) = 1", 30,
    _run_schroder))


# ---------------------------------------------------------------------------
# convergence studies

@dataclass
class ConvergenceRecord:
    n: int
    error: float
    cond: float


def converge(name: str, n_min: int, n_max: int, step: int = 2):
    """Error and conditioning against n, using the exact solution when the
    example has one and the largest run as a proxy otherwise (in proxy mode
    the reference row itself is dropped: its error is zero by construction)."""
    spec = get(name)
    if spec.category in ("evp", "functional") or "logistic" in name \
            or name == "lotka_volterra":
        raise ValueError(f"no convergence rule for {name}")
    ns = list(range(n_min, n_max + 1, step))
    runs = [spec.run(n=n) for n in ns]
    records = []
    if spec.exact is not None:
        for n, r in zip(ns, runs):
            records.append(ConvergenceRecord(r.n_total, r.error, r.cond or np.nan))
    else:
        ref = runs[-1]
        ref_sol = ref.solution
        for n, r in zip(ns[:-1], runs[:-1]):
            err = float(np.abs(ref_sol(r.t) - r.values).max())
            records.append(ConvergenceRecord(r.n_total, err, r.cond or np.nan))
    return records
