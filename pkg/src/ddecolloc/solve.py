"""Dense solvers: bordered linear solves, Newton-Raphson with parameter
augmentation, a generalized eigensolver with smoothness validation, and the
Schroeder-type functional equation solver."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exprgraph import ChebContext, TrigContext, linearize
from .interp import Grid, SampledFunction, barymat, cheb_vals2coeffs, diffmat
from .mesh import PiecewiseFunction, PiecewiseGrid


class SingularMatrixError(np.linalg.LinAlgError):
    """The matrix is exactly singular (zero pivot after pivoting)."""


def lu_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b by LU factorisation with partial pivoting."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu, piv = scipy.linalg.lu_factor(A)
        except (scipy.linalg.LinAlgWarning, np.linalg.LinAlgError) as exc:
            raise SingularMatrixError(str(exc)) from exc
    if np.any(np.diag(lu) == 0.0):
        raise SingularMatrixError("zero pivot encountered")
    return scipy.linalg.lu_solve((lu, piv), b)


def cond_inf(A: np.ndarray) -> float:
    """Infinity-norm condition number via the explicit inverse (desk scale)."""
    A = np.asarray(A)
    try:
        Ainv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    return float(np.linalg.norm(A, np.inf) * np.linalg.norm(Ainv, np.inf))


# ---------------------------------------------------------------------------
# Newton-Raphson with bordered constraints and appended parameter rows

@dataclass
class NewtonReport:
    """Per-iteration (residual inf-norm, update inf-norm) pairs of the
    bordered system, recorded before each step."""

    iterations: list = field(default_factory=list)
    converged: bool = False
    final_residual: float = np.inf
    final_jacobian_cond: float = np.nan

    @property
    def residual_norms(self):
        return [r for r, _ in self.iterations]

    @property
    def update_norms(self):
        return [d for _, d in self.iterations]


@dataclass
class CollocationProblem:
    """A discretised problem: one expression per component, the context it is
    discretised on, and affine constraint rows.

    Constraints are (position, row, rhs[, label]) tuples; ``position`` is the
    collocation row the constraint overwrites, or None to append the row
    after all collocation rows (the convention for the extra conditions that
    close parameter-augmented systems).  Rows may have length d*N or d*N+P.
    """

    equations: list
    context: object
    constraints: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.context.N * self.context.d


def assemble(problem: CollocationProblem, y, params):
    ctx = problem.context
    dN = problem.size
    P = len(params)
    lins = [linearize(eq, ctx, y, params) for eq in problem.equations]
    r = np.concatenate([L.residual for L in lins])
    J = np.vstack([np.hstack([L.jac, L.param_jac]) for L in lins])
    extra_r, extra_J = [], []
    state = np.concatenate([y, params])
    for entry in problem.constraints:
        pos, row, rhs_val = entry[0], np.asarray(entry[1], dtype=float), entry[2]
        if len(row) == dN:
            row = np.concatenate([row, np.zeros(P)])
        if len(row) != dN + P:
            raise ValueError("constraint row has the wrong length")
        resid = row @ state - rhs_val
        if pos is None:
            extra_r.append(resid)
            extra_J.append(row)
        else:
            r[pos] = resid
            J[pos] = row
    if extra_r:
        r = np.concatenate([r, extra_r])
        J = np.vstack([J, np.array(extra_J)])
    if J.shape[0] != dN + P:
        raise ValueError(
            f"system is not square: {J.shape[0]} rows for {dN + P} unknowns; "
            "check the constraint count")
    return r, J


def newton(problem: CollocationProblem, initial, params0=(), tol: float | None = None,
           max_iter: int = 25, guard=None):
    """Newton-Raphson on the bordered collocation system.

    Stops when the bordered residual inf-norm drops below the tolerance
    (checked before stepping, so the recorded table is exactly the list of
    steps taken), or when an update inf-norm does.  Returns (values, params,
    report); non-convergence is reported, not raised.
    """
    ctx = problem.context
    y = np.asarray(getattr(initial, "values", initial), dtype=float).reshape(-1).copy()
    params = np.asarray(params0, dtype=float).copy()
    if tol is None:
        tol = 1e-12 * (1.0 + np.abs(y).max())
    report = NewtonReport()
    for k in range(max_iter + 1):
        r, J = assemble(problem, y, params)
        rn = float(np.abs(r).max())
        if rn <= tol:
            report.converged = True
            report.final_residual = rn
            break
        if k == max_iter:
            report.final_residual = rn
            break
        delta = lu_solve(J, r)
        dn = float(np.abs(delta).max())
        report.iterations.append((rn, dn))
        y -= delta[:len(y)]
        if len(params):
            params -= delta[len(y):]
        if guard is not None:
            guard(y, params)
        if dn <= tol:
            r2, _ = assemble(problem, y, params)
            report.converged = True
            report.final_residual = float(np.abs(r2).max())
            break
    report.final_jacobian_cond = cond_inf(J)
    return y, params, report


# ---------------------------------------------------------------------------
# generalized eigenvalue problems

@dataclass
class EigResult:
    eigenvalues: np.ndarray
    eigenvectors: list
    n_used: int


def _coeff_tail_fraction(vec: np.ndarray, grid) -> float:
    """Fraction of Chebyshev-coefficient mass in the top 20 percent of modes,
    maximised over panels; small means the eigenvector is resolved."""
    if isinstance(grid, PiecewiseGrid):
        off = grid.offsets
        segs = [vec[off[k]:off[k + 1]] for k in range(grid.n_panels)]
    else:
        segs = [vec]
    worst = 0.0
    for seg in segs:
        c = np.abs(cheb_vals2coeffs(np.real(seg))) + \
            np.abs(cheb_vals2coeffs(np.imag(seg)))
        mass = c.sum()
        if mass == 0.0:
            continue
        ntop = max(1, int(np.ceil(0.2 * len(seg))))
        worst = max(worst, float(c[-ntop:].sum() / mass))
    return worst


def _rayleigh_refine(A, B, lam, v, steps=3):
    """Inverse iteration with generalized Rayleigh quotients; sharpens pairs
    whose QZ values are rounding-limited."""
    for _ in range(steps):
        try:
            z = np.linalg.solve(A - lam * B, B @ v)
        except np.linalg.LinAlgError:
            break
        nz = np.abs(z).max()
        if not np.isfinite(nz) or nz == 0.0:
            break
        v = z / nz
        denom = v.conj() @ (B @ v)
        if denom == 0.0:
            break
        lam = (v.conj() @ (A @ v)) / denom
    return lam, v


def eig_generalized(A: np.ndarray, B: np.ndarray, k: int = 6, shift: float = 0.0,
                    grid=None, refine: bool = True,
                    smooth_tol: float = 0.10) -> EigResult:
    """k eigenpairs of A v = lam B v nearest the shift.

    The dense pencil is reduced by the QZ algorithm; infinite eigenvalues
    (from constraint rows with zero B rows) drop out.  When a grid is
    supplied, eigenvectors whose top Chebyshev modes hold more than
    ``smooth_tol`` of the coefficient mass are rejected as unresolved, and
    the accepted pairs are sharpened by Rayleigh-quotient iteration.
    Conjugate pairs are kept adjacent; a spectrum that is real to rounding is
    returned real.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A and B must be square matrices of the same size")
    n = A.shape[0]
    lu, _ = scipy.linalg.lu_factor(A - shift * B, check_finite=False)
    if np.any(np.diag(lu) == 0.0):
        raise SingularMatrixError("shift collides with the pencil; perturb it")
    lam, V = scipy.linalg.eig(A, B)
    ok = np.isfinite(lam)
    lam, V = lam[ok], V[:, ok]
    order = np.argsort(np.abs(lam - shift), kind="stable")
    lam, V = lam[order], V[:, order]
    vals, vecs = [], []
    for i in range(len(lam)):
        if len(vals) == k:
            break
        li, vi = lam[i], V[:, i]
        if grid is not None and _coeff_tail_fraction(vi, grid) > smooth_tol:
            continue
        if refine:
            li, vi = _rayleigh_refine(A, B, li, vi)
        vals.append(li)
        vecs.append(vi)
    vals = np.array(vals)
    if len(vals) and np.all(np.abs(vals.imag) <= 1e-10 * (1.0 + np.abs(vals))):
        vals = vals.real
        vecs = [np.real(v) for v in vecs]
    if isinstance(grid, PiecewiseGrid):
        vecs = [PiecewiseFunction(grid, np.real(v)) for v in vecs]
    return EigResult(vals, vecs, n)


# ---------------------------------------------------------------------------
# Schroeder-type functional equations

def functional_equation(f, lam: float, g: Grid) -> SampledFunction:
    """Solve u(f(t)) = lam u(t) with the normalisation u'(a) = 1.

    Discretised as (P(f(t); t) - lam I) u = 0 with the first row bordered by
    the first row of the differentiation matrix and right-hand side 1.  The
    value u(a) = 0 is implied by the homogeneous equation plus the
    normalisation; it is checked, not imposed.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lam must lie in (0, 1)")
    t = g.nodes
    ft = np.asarray([f(x) for x in t], dtype=float)
    pad = 1e-9 * max(1.0, g.length)
    if ft.min() < g.a - pad or ft.max() > g.b + pad:
        raise ValueError("f must map the interval into itself")
    A = barymat(ft, g) - lam * np.eye(g.size)
    A[0, :] = diffmat(g)[0, :]
    rhs = np.zeros(g.size)
    rhs[0] = 1.0
    u = lu_solve(A, rhs)
    if abs(u[0]) > 1e-8 * max(1.0, np.abs(u).max()):
        warnings.warn(f"u(a) = {u[0]:.2e} deviates from 0", RuntimeWarning,
                      stacklevel=2)
    return SampledFunction(g, u)
