"""Operator expression graphs with mechanical residual and Jacobian assembly.

Problems are composed from a closed set of primitive nodes, each of which
knows its discretisation and its Frechet derivative.  The interesting rule is
the state-dependent delay: the value P(g(y); t) y linearises to

    diag(g'(y) . (P(g(y); t) D y)) + P(g(y); t)

because the derivative of the resampled interpolant with respect to the
evaluation point is the resampling of the differentiated interpolant,
P'(tau; t) = P(tau; t) D.  Parameters entering through delay maps contribute
columns by the same rule with d tau / d p in place of g'.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .blocksys import HistorySpec, MissingHistoryError, block_cumsummat, \
    block_diffmat, resampling_rows
from .interp import Grid, TRIG, cumsummat, trig_barymat, trig_diffmat
from .mesh import PiecewiseGrid


# ---------------------------------------------------------------------------
# discretisation contexts

class ChebContext:
    """Chebyshev multidomain discretisation of a d-component system."""

    def __init__(self, grid: PiecewiseGrid, history: HistorySpec | None = None,
                 n_components: int = 1):
        self.grid = grid
        self.history = history
        self.d = n_components
        self.nodes = grid.nodes
        self.N = grid.total_size
        self.a, self.b = grid.a, grid.b
        self.wraps_delays = history is not None and history.mode == "periodic"
        self._diff_cache: dict[int, np.ndarray] = {}
        self._cumsum: np.ndarray | None = None

    def diff(self, order: int = 1) -> np.ndarray:
        if order not in self._diff_cache:
            self._diff_cache[order] = block_diffmat(self.grid, order)
        return self._diff_cache[order]

    def cumsum(self) -> np.ndarray:
        if self._cumsum is None:
            self._cumsum = block_cumsummat(self.grid)
        return self._cumsum

    def delay(self, tau_vals, ignore_history: bool = False):
        history = None if ignore_history else self.history
        return resampling_rows(self.grid, tau_vals, history)


class TrigContext:
    """Fourier discretisation on a uniform periodic grid; delays wrap."""

    def __init__(self, grid: Grid, n_components: int = 1):
        if grid.kind != TRIG:
            raise ValueError("TrigContext needs a trig_uniform grid")
        self.grid = grid
        self.history = None
        self.d = n_components
        self.nodes = grid.nodes
        self.N = grid.size
        self.a, self.b = grid.a, grid.b
        self.wraps_delays = True
        self._diff_cache: dict[int, np.ndarray] = {}

    def diff(self, order: int = 1) -> np.ndarray:
        if order not in self._diff_cache:
            self._diff_cache[order] = trig_diffmat(self.grid, order)
        return self._diff_cache[order]

    def cumsum(self) -> np.ndarray:
        raise ValueError("indefinite integration is not defined on a periodic grid")

    def delay(self, tau_vals, ignore_history: bool = False):
        return trig_barymat(tau_vals, self.grid), np.zeros(len(np.atleast_1d(tau_vals)))


# ---------------------------------------------------------------------------
# expression nodes

class OpExpr:
    """Base expression node.  Supports +, -, * and scalar scaling."""

    def __add__(self, other):
        return Sum([self, _wrap(other)])

    __radd__ = __add__

    def __sub__(self, other):
        return Sum([self, Scale(-1.0, _wrap(other))])

    def __rsub__(self, other):
        return Sum([_wrap(other), Scale(-1.0, self)])

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Scale(float(other), self)
        return Product(self, _wrap(other))

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return Scale(float(other), self)
        return Product(_wrap(other), self)

    def __neg__(self):
        return Scale(-1.0, self)


def _wrap(x) -> "OpExpr":
    if isinstance(x, OpExpr):
        return x
    if isinstance(x, (int, float)):
        return Const(float(x))
    if callable(x):
        return Const(x)
    raise TypeError(f"cannot use {type(x)} in an expression")


def _map_values(fn, t, params=None):
    """Apply a scalar-or-vectorised map to the node vector."""
    try:
        out = fn(t, params) if params is not None else fn(t)
    except TypeError:
        if params is not None:
            try:
                out = fn(t)
            except TypeError:
                out = np.asarray([fn(x) for x in t], dtype=float)
        else:
            out = np.asarray([fn(x) for x in t], dtype=float)
    out = np.asarray(out, dtype=float)
    return np.broadcast_to(out, np.shape(t)).astype(float) if out.ndim == 0 else out


class Unknown(OpExpr):
    def __init__(self, component: int = 0):
        self.component = component


class IndepVar(OpExpr):
    pass


class Const(OpExpr):
    """Known coefficient: a callable of t or a plain number."""

    def __init__(self, fn):
        self.fn = fn


class Param(OpExpr):
    def __init__(self, index: int = 0):
        self.index = index


class Diff(OpExpr):
    def __init__(self, child, order: int = 1):
        self.child = _wrap(child)
        self.order = order


class Cumsum(OpExpr):
    def __init__(self, child):
        self.child = _wrap(child)


class Volterra(OpExpr):
    """Integral from T_0 to t of kernel(t, s) times the child, via the
    elementwise product of the kernel samples with the integration matrix."""

    def __init__(self, kernel, child):
        self.kernel = kernel
        self.child = _wrap(child)


class DelayEval(OpExpr):
    """Evaluate the child's interpolant at tau(t) (or tau(t, params)).

    ``dtau_dparam`` maps a parameter index to d tau / d p as a callable with
    the same signature, enabling analytic parameter columns.
    """

    def __init__(self, child, tau, dtau_dparam: dict | None = None):
        self.child = _wrap(child)
        self.tau = tau
        self.dtau_dparam = dict(dtau_dparam or {})

    def tau_values(self, t, params):
        return _map_values(self.tau, t, params)


class StateDelayEval(OpExpr):
    """The state-dependent term P(g(v); t) v for child values v."""

    def __init__(self, child, g=None, dg=None):
        self.child = _wrap(child)
        self.g = g if g is not None else (lambda u: u)
        self.dg = dg if dg is not None else (lambda u: np.ones_like(u))


class NeutralEval(OpExpr):
    """Delayed derivative: the operator P(tau; t) D applied to the child."""

    def __init__(self, child, tau):
        self.child = _wrap(child)
        self.tau = tau


class Sum(OpExpr):
    def __init__(self, children):
        flat = []
        for c in children:
            c = _wrap(c)
            flat.extend(c.children if isinstance(c, Sum) else [c])
        self.children = flat


class Product(OpExpr):
    def __init__(self, left, right):
        self.left = _wrap(left)
        self.right = _wrap(right)


class Scale(OpExpr):
    def __init__(self, factor: float, child):
        self.factor = float(factor)
        self.child = _wrap(child)


class Elementwise(OpExpr):
    """Pointwise function with user-supplied derivative."""

    def __init__(self, fn, dfn, child):
        self.fn = fn
        self.dfn = dfn
        self.child = _wrap(child)


def elem_exp(child):
    return Elementwise(np.exp, np.exp, child)


def elem_log(child):
    return Elementwise(np.log, lambda u: 1.0 / u, child)


def elem_sin(child):
    return Elementwise(np.sin, np.cos, child)


def elem_cos(child):
    return Elementwise(np.cos, lambda u: -np.sin(u), child)


def elem_pow(child, p: float):
    return Elementwise(lambda u: u ** p, lambda u: p * u ** (p - 1), child)


# ---------------------------------------------------------------------------
# evaluation

@dataclass
class Linearization:
    """First-order model at the expansion point: jac d approximates
    residual(y + d) - residual(y)."""

    jac: np.ndarray        # (N, d*N)
    param_jac: np.ndarray  # (N, P)
    residual: np.ndarray   # (N,)


def discretize(expr: OpExpr, ctx, y, params=()) -> np.ndarray:
    """Residual contribution of the expression at the sampled state y."""
    yf = _flat(y, ctx)
    v, _, _ = _eval(expr, ctx, yf, np.asarray(params, dtype=float), False)
    return v


def linearize(expr: OpExpr, ctx, y, params=()) -> Linearization:
    """Residual plus Jacobian blocks (state and parameter columns)."""
    yf = _flat(y, ctx)
    v, J, Jp = _eval(expr, ctx, yf, np.asarray(params, dtype=float), True)
    return Linearization(J, Jp, v)


def is_affine(expr: OpExpr) -> bool:
    """True when the residual is an affine function of the unknowns and
    parameters, so a single bordered solve is exact."""
    dep_y, dep_p, affine = _props(expr)
    return affine


def _flat(y, ctx) -> np.ndarray:
    values = getattr(y, "values", y)
    yf = np.asarray(values, dtype=float).reshape(-1)
    if len(yf) != ctx.N * ctx.d:
        raise ValueError(f"state has length {len(yf)}, expected {ctx.N * ctx.d}")
    return yf


def _props(e):
    """(depends on y, depends on params, affine jointly in both)."""
    if isinstance(e, Unknown):
        return True, False, True
    if isinstance(e, (IndepVar, Const)):
        return False, False, True
    if isinstance(e, Param):
        return False, True, True
    if isinstance(e, (Diff, Cumsum, Volterra, NeutralEval)):
        return _props(e.child)
    if isinstance(e, Scale):
        return _props(e.child)
    if isinstance(e, DelayEval):
        dy, dp, aff = _props(e.child)
        if e.dtau_dparam:
            return dy, True, not dy  # resampling point moves with params
        return dy, dp, aff
    if isinstance(e, StateDelayEval):
        dy, dp, _ = _props(e.child)
        return True, dp, not dy
    if isinstance(e, Elementwise):
        dy, dp, _ = _props(e.child)
        return dy, dp, not (dy or dp)
    if isinstance(e, Sum):
        parts = [_props(c) for c in e.children]
        return (any(p[0] for p in parts), any(p[1] for p in parts),
                all(p[2] for p in parts))
    if isinstance(e, Product):
        ldy, ldp, laff = _props(e.left)
        rdy, rdp, raff = _props(e.right)
        lconst = not (ldy or ldp)
        rconst = not (rdy or rdp)
        affine = (lconst and raff) or (rconst and laff)
        return ldy or rdy, ldp or rdp, affine
    raise TypeError(f"unknown expression node {type(e)}")


def _eval(e, ctx, y, params, want_jac):
    N, d, P = ctx.N, ctx.d, len(params)
    zJ = (lambda: np.zeros((N, d * N))) if want_jac else (lambda: None)
    zP = (lambda: np.zeros((N, P))) if want_jac else (lambda: None)

    if isinstance(e, Unknown):
        c = e.component
        if not 0 <= c < d:
            raise ValueError(f"component {c} out of range for {d} components")
        v = y[c * N:(c + 1) * N].copy()
        J = zJ()
        if want_jac:
            J[:, c * N:(c + 1) * N] = np.eye(N)
        return v, J, zP()

    if isinstance(e, IndepVar):
        return ctx.nodes.copy(), zJ(), zP()

    if isinstance(e, Const):
        fn = e.fn
        v = np.full(N, float(fn)) if np.isscalar(fn) else \
            np.broadcast_to(np.asarray(fn(ctx.nodes), dtype=float), (N,)).copy()
        return v, zJ(), zP()

    if isinstance(e, Param):
        v = np.full(N, params[e.index])
        Jp = zP()
        if want_jac:
            Jp[:, e.index] = 1.0
        return v, zJ(), Jp

    if isinstance(e, (Diff, Cumsum, Volterra)):
        cv, cJ, cJp = _eval(e.child, ctx, y, params, want_jac)
        if isinstance(e, Diff):
            A = ctx.diff(e.order)
        elif isinstance(e, Cumsum):
            A = ctx.cumsum()
        else:
            t = ctx.nodes
            A = np.asarray(e.kernel(t[:, None], t[None, :]), dtype=float) * ctx.cumsum()
        return A @ cv, (A @ cJ if want_jac else None), (A @ cJp if want_jac else None)

    if isinstance(e, DelayEval):
        cv, cJ, cJp = _eval(e.child, ctx, y, params, want_jac)
        tau_vals = e.tau_values(ctx.nodes, params)
        Pm, h = ctx.delay(tau_vals)
        v = Pm @ cv + h
        if not want_jac:
            return v, None, None
        J = Pm @ cJ
        Jp = Pm @ cJp
        if e.dtau_dparam:
            slope = Pm @ (ctx.diff(1) @ cv)  # interpolant derivative at tau
            for idx, dfn in e.dtau_dparam.items():
                try:
                    dtv = np.asarray(dfn(ctx.nodes, params), dtype=float)
                except TypeError:
                    dtv = np.asarray(dfn(ctx.nodes), dtype=float)
                Jp[:, idx] += np.broadcast_to(dtv, (N,)) * slope
        return v, J, Jp

    if isinstance(e, StateDelayEval):
        cv, cJ, cJp = _eval(e.child, ctx, y, params, want_jac)
        targ = np.asarray(e.g(cv), dtype=float)
        inside = (targ >= ctx.a) & (targ <= ctx.b)
        if not inside.all():
            warnings.warn("state-dependent delay argument clamped to the domain "
                          f"at {np.count_nonzero(~inside)} nodes", RuntimeWarning,
                          stacklevel=2)
            targ = np.clip(targ, ctx.a, ctx.b)
        Pm, _ = ctx.delay(targ, ignore_history=True)
        v = Pm @ cv
        if not want_jac:
            return v, None, None
        gp = np.asarray(e.dg(cv), dtype=float) * inside
        slope = Pm @ (ctx.diff(1) @ cv)
        core = np.diag(gp * slope) + Pm
        return v, core @ cJ, core @ cJp

    if isinstance(e, NeutralEval):
        cv, cJ, cJp = _eval(e.child, ctx, y, params, want_jac)
        tau_vals = _map_values(e.tau, ctx.nodes)
        if not ctx.wraps_delays:
            # without a history, the left endpoint itself still evaluates in
            # the first panel; with one, tau <= a would need the history's
            # derivative, which is unsupported
            low_bad = tau_vals < ctx.a if ctx.history is None else \
                tau_vals <= ctx.a
            if np.any(low_bad) or np.any(tau_vals > ctx.b):
                raise MissingHistoryError(
                    "delayed derivative requires arguments inside the domain")
        Pm, _ = ctx.delay(tau_vals)
        A = Pm @ ctx.diff(1)
        return A @ cv, (A @ cJ if want_jac else None), (A @ cJp if want_jac else None)

    if isinstance(e, Sum):
        v, J, Jp = np.zeros(N), zJ(), zP()
        for c in e.children:
            cv, cJ, cJp = _eval(c, ctx, y, params, want_jac)
            v += cv
            if want_jac:
                J += cJ
                Jp += cJp
        return v, J, Jp

    if isinstance(e, Product):
        lv, lJ, lJp = _eval(e.left, ctx, y, params, want_jac)
        rv, rJ, rJp = _eval(e.right, ctx, y, params, want_jac)
        v = lv * rv
        if not want_jac:
            return v, None, None
        J = rv[:, None] * lJ + lv[:, None] * rJ
        Jp = rv[:, None] * lJp + lv[:, None] * rJp
        return v, J, Jp

    if isinstance(e, Scale):
        cv, cJ, cJp = _eval(e.child, ctx, y, params, want_jac)
        return e.factor * cv, (e.factor * cJ if want_jac else None), \
            (e.factor * cJp if want_jac else None)

    if isinstance(e, Elementwise):
        cv, cJ, cJp = _eval(e.child, ctx, y, params, want_jac)
        v = np.asarray(e.fn(cv), dtype=float)
        if not want_jac:
            return v, None, None
        dv = np.asarray(e.dfn(cv), dtype=float)
        return v, dv[:, None] * cJ, dv[:, None] * cJp

    raise TypeError(f"unknown expression node {type(e)}")
