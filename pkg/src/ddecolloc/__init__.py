"""Spectral collocation solvers for delay and functional differential
equations: barycentric resampling for delay terms, multidomain breakpoint
handling, Newton linearisation of state-dependent delays, periodic and
limit-cycle solvers, delay eigenvalue problems, and Schroeder-type
functional equations."""

from .blocksys import BlockSystem, HistorySpec, MissingHistoryError, \
    block_cumsummat, block_diffmat, border, continuity_rows, delay_block, \
    resampling_rows
from .exprgraph import ChebContext, Const, Cumsum, DelayEval, Diff, \
    Elementwise, IndepVar, Linearization, NeutralEval, OpExpr, Param, \
    Product, Scale, StateDelayEval, Sum, TrigContext, Unknown, Volterra, \
    discretize, elem_cos, elem_exp, elem_log, elem_pow, elem_sin, is_affine, \
    linearize
from .interp import Grid, SampledFunction, bary_eval, barymat, cheb_grid, \
    cheb_coeffs2vals, cheb_vals2coeffs, cumsummat, diffmat, trig_barymat, \
    trig_diffmat, trig_grid, weighted_resample
from .mesh import OutOfDomainError, PiecewiseFunction, PiecewiseGrid, \
    UnsupportedDelayError, build_piecewise_grid, locate_panel, \
    propagate_breakpoints
from .periodic import PeriodicProblem, Trajectory, cycle_equation, \
    estimate_period, lagged, rk4_method_of_steps, solve_limit_cycle, \
    solve_limit_cycle_cheb, solve_periodic_linear, trajectory_from_csv, \
    trajectory_to_csv
from .solve import CollocationProblem, EigResult, NewtonReport, \
    SingularMatrixError, assemble, cond_inf, eig_generalized, \
    functional_equation, lu_solve, newton

__version__ = "0.1.0"
