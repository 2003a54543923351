"""Barycentric interpolation machinery on Chebyshev and uniform-trigonometric grids.

Everything downstream is built from the operators here: barycentric evaluation
of interpolants, resampling matrices mapping node values to interpolant values
at arbitrary points, pseudospectral differentiation matrices, and indefinite
integration.  All matrices are dense ``numpy`` arrays; all grid objects are
immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CHEBYSHEV = "chebyshev_lobatto"
TRIG = "trig_uniform"


@dataclass(frozen=True)
class Grid:
    """One collocation panel: nodes, barycentric weights and interval.

    ``chebyshev_lobatto`` grids hold the ascending Chebyshev-Gauss-Lobatto
    points mapped to [a, b], with the classical endpoint-halved alternating
    weights.  ``trig_uniform`` grids hold n equispaced nodes on [a, b) with
    node b itself excluded; the stored weights are the alternating signs of
    the trigonometric barycentric kernel.
    """

    a: float
    b: float
    nodes: np.ndarray
    bary_weights: np.ndarray
    kind: str

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "bary_weights",
                           np.asarray(self.bary_weights, dtype=float))
        self.nodes.setflags(write=False)
        self.bary_weights.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class SampledFunction:
    """Values of a function at the nodes of a single grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if len(v) != self.grid.size:
            raise ValueError("value count does not match grid size")
        object.__setattr__(self, "values", v)

    def __call__(self, tau):
        return bary_eval(self, tau)


def cheb_grid(n: int, a: float, b: float) -> Grid:
    """Chebyshev-Gauss-Lobatto grid of n ascending points on [a, b].

    The weights are the explicit alternating pattern (endpoints halved),
    which is invariant under the affine map to [a, b].
    """
    if n < 2:
        raise ValueError("need at least 2 Chebyshev points")
    if not b > a:
        raise ValueError("interval must satisfy b > a")
    k = np.arange(n)
    x = -np.cos(k * np.pi / (n - 1))
    t = a + (b - a) * (x + 1.0) / 2.0
    t[0], t[-1] = a, b  # pin endpoints exactly
    w = np.ones(n)
    w[1::2] = -1.0
    w[0] *= 0.5
    w[-1] *= 0.5
    return Grid(a, b, t, w, CHEBYSHEV)


def trig_grid(n: int, a: float, b: float) -> Grid:
    """n equispaced nodes on [a, b), spacing (b-a)/n, for periodic problems."""
    if n < 2:
        raise ValueError("need at least 2 trigonometric points")
    if not b > a:
        raise ValueError("interval must satisfy b > a")
    t = a + (b - a) * np.arange(n) / n
    w = np.ones(n)
    w[1::2] = -1.0
    return Grid(a, b, t, w, TRIG)


def barymat(tau, g: Grid) -> np.ndarray:
    """Barycentric resampling matrix P(tau; t) for a Chebyshev grid.

    Row j applied to node values gives the interpolant at tau[j].  Rows whose
    point coincides with a node (exact floating-point hit) come out as unit
    rows: the 0/0 entries are detected after the fact and replaced, mirroring
    the usual NaN-patching construction.
    """
    _require_kind(g, CHEBYSHEV)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    t, w = g.nodes, g.bary_weights
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        P = w[None, :] / (tau[:, None] - t[None, :])
        P = P / P.sum(axis=1, keepdims=True)
    return _patch_node_hits(P, tau, t)


def _patch_node_hits(P, tau, t):
    """Replace the 0/0 artefacts of rows whose point sits on (or within
    rounding of) a node: the NaN entry marks the hit and becomes 1, the rest
    of the row becomes 0."""
    P[np.isnan(P)] = 1.0
    bad = ~np.isfinite(P).all(axis=1)
    for i in np.where(bad)[0]:
        P[i] = 0.0
        P[i, np.argmin(np.abs(tau[i] - t))] = 1.0
    return P


def bary_eval(f: SampledFunction, tau) -> np.ndarray:
    """Evaluate the interpolant of f at the points tau (extrapolation allowed)."""
    if f.grid.kind == CHEBYSHEV:
        return barymat(tau, f.grid) @ f.values
    return trig_barymat(tau, f.grid) @ f.values


def diffmat(g: Grid, order: int = 1) -> np.ndarray:
    """Pseudospectral differentiation matrix on a Chebyshev grid.

    Off-diagonal entries are w_k / (w_j (t_j - t_k)); the diagonal is the
    negative row sum, so constants differentiate to exactly zero.  Orders
    above one are returned as matrix powers, trading a little accuracy at
    large n for a single construction path.
    """
    _require_kind(g, CHEBYSHEV)
    if order < 1:
        raise ValueError("order must be >= 1")
    t, w = g.nodes, g.bary_weights
    with np.errstate(divide="ignore", invalid="ignore"):
        D = w[None, :] / (w[:, None] * (t[:, None] - t[None, :]))
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return np.linalg.matrix_power(D, order) if order > 1 else D


def cheb_vals2coeffs(values: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients of the interpolant through ascending Lobatto values."""
    values = np.asarray(values)
    n = len(values)
    if n == 1:
        return values.copy()
    N = n - 1
    j = np.arange(n)
    k = np.arange(n)
    A = np.cos(np.pi * np.outer(k, j) / N) * ((-1.0) ** k)[:, None] * (2.0 / N)
    A[0, :] *= 0.5
    A[-1, :] *= 0.5
    A[:, 0] *= 0.5
    A[:, -1] *= 0.5
    return A @ values


def cheb_coeffs2vals(coeffs: np.ndarray, n: int | None = None) -> np.ndarray:
    """Values at n ascending Lobatto points of a Chebyshev series."""
    coeffs = np.asarray(coeffs)
    if n is None:
        n = len(coeffs)
    N = n - 1
    j = np.arange(n)
    k = np.arange(len(coeffs))
    V = np.cos(np.pi * np.outer(j, k) / N) * ((-1.0) ** k)[None, :]
    return V @ coeffs


def cumsummat(g: Grid) -> np.ndarray:
    """Indefinite integration matrix Q with (Qy)_j = integral of the
    interpolant of y from a to node j.

    Built in coefficient space: transform values to Chebyshev coefficients,
    integrate the series termwise (the antiderivative recurrence), fix the
    constant so the value at the left endpoint is zero, and transform back.
    The antiderivative has one extra degree, which the evaluation step keeps,
    so polynomial integrands up to full degree integrate exactly.
    """
    _require_kind(g, CHEBYSHEV)
    n = g.size
    N = n - 1
    j = np.arange(n)
    k = np.arange(n)
    A = np.cos(np.pi * np.outer(k, j) / N) * ((-1.0) ** k)[:, None] * (2.0 / N)
    A[0, :] *= 0.5
    A[-1, :] *= 0.5
    A[:, 0] *= 0.5
    A[:, -1] *= 0.5
    # termwise integration: b_k = (c_{k-1} - c_{k+1}) / (2k), with c_0 doubled
    B = np.zeros((n + 1, n))
    for kk in range(1, n + 1):
        B[kk, kk - 1] += (2.0 if kk == 1 else 1.0) / (2 * kk)
        if kk + 1 < n:
            B[kk, kk + 1] -= 1.0 / (2 * kk)
    ke = np.arange(n + 1)
    Vx = np.cos(np.pi * np.outer(j, ke) / N) * ((-1.0) ** ke)[None, :]
    Q = Vx @ B @ A
    Q -= Q[0:1, :]
    Q *= (g.b - g.a) / 2.0
    Q[0, :] = 0.0
    return Q


def trig_barymat(tau, g: Grid) -> np.ndarray:
    """Trigonometric barycentric resampling matrix on a uniform periodic grid.

    Uses the cot kernel for an even node count and the csc kernel for an odd
    one, with the kernel argument scaled by pi over the period.  Points are
    reduced modulo the period first, so evaluation wraps; exact node hits
    become unit rows via the same non-finite patching as ``barymat``.
    """
    _require_kind(g, TRIG)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    t = g.nodes
    T = g.length
    taur = g.a + np.mod(tau - g.a, T)
    taur[taur >= g.b] = g.a  # mod rounding can land on the excluded endpoint
    arg = (taur[:, None] - t[None, :]) * (np.pi / T)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        kern = 1.0 / np.tan(arg) if g.size % 2 == 0 else 1.0 / np.sin(arg)
        P = kern * g.bary_weights[None, :]
        P = P / P.sum(axis=1, keepdims=True)
    return _patch_node_hits(P, taur, t)


def trig_diffmat(g: Grid, order: int = 1) -> np.ndarray:
    """Periodic spectral differentiation matrix of the given order.

    Constructed as a circulant from the Fourier symbol (i k)^order; for even
    node counts the Nyquist mode is zeroed on odd orders, the standard
    symmetric choice.
    """
    _require_kind(g, TRIG)
    if order < 1:
        raise ValueError("order must be >= 1")
    n = g.size
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0 and order % 2 == 1:
        k = k.copy()
        k[n // 2] = 0.0
    lam = (1j * k * 2.0 * np.pi / g.length) ** order
    col = np.fft.ifft(lam).real
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return col[idx]


def weighted_resample(tau, g: Grid, b_param: float) -> np.ndarray:
    """Exponentially weighted resampling diag(e^{-b tau/2}) P(tau;t) diag(e^{b t/2}).

    With b_param = 0 this is the plain resampling matrix; at the nodes the
    diagonal factors cancel and the result is the identity for any b.
    """
    if b_param < 0:
        raise ValueError("b_param must be >= 0")
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    P = barymat(tau, g)
    return np.exp(-b_param * tau / 2.0)[:, None] * P * np.exp(b_param * g.nodes / 2.0)[None, :]


def _require_kind(g: Grid, kind: str) -> None:
    if g.kind != kind:
        raise ValueError(f"operation requires a {kind} grid, got {g.kind}")
