import numpy as np
import pytest

from ddecolloc.blocksys import HistorySpec
from ddecolloc.examples import delayed_logistic_problem, \
    delayed_logistic_trajectory, get, lotka_volterra_problem, \
    lotka_volterra_trajectory
from ddecolloc.exprgraph import Const, DelayEval, Diff, TrigContext, Unknown, \
    discretize
from ddecolloc.interp import trig_barymat, trig_diffmat, trig_grid
from ddecolloc.periodic import Trajectory, estimate_period, \
    rk4_method_of_steps, solve_limit_cycle, solve_limit_cycle_cheb, \
    solve_periodic_linear, trajectory_from_csv, trajectory_to_csv
from ddecolloc.solve import SingularMatrixError


# ---------------------------------------------------------------------------
# step integrator

def test_rk4_plain_ode_accuracy():
    traj = rk4_method_of_steps(lambda t, y, Z: -y,
                               HistorySpec("constant", value=1.0), [], 1.0,
                               1e-3)
    assert abs(traj.states[-1, 0] - np.exp(-1.0)) < 1e-10


def exact_two_piece(t):
    return np.where(t <= 0.5, np.exp(-t),
                    np.exp(-t + 0.5) * (0.5 - t + np.exp(-0.5)))


def test_rk4_discrete_delay_matches_closed_form():
    traj = rk4_method_of_steps(lambda t, y, Z: -y - Z[:, 0],
                               HistorySpec("explicit", phi=lambda t: np.array([0.0])),
                               [0.5], 1.0, 1e-3, y0=[1.0])
    err = np.abs(traj.states[:, 0] - exact_two_piece(traj.times)).max()
    assert err < 1e-7


def test_rk4_inactive_delay_behaves_like_ode():
    traj = rk4_method_of_steps(lambda t, y, Z: -y,
                               HistorySpec("constant", value=1.0), [2.0], 1.0,
                               1e-3)
    assert abs(traj.states[-1, 0] - np.exp(-1.0)) < 1e-10


def test_rk4_alignment_validation():
    hist = HistorySpec("constant", value=1.0)
    with pytest.raises(ValueError):
        rk4_method_of_steps(lambda t, y, Z: -y, hist, [0.35], 1.0, 1e-1)
    with pytest.raises(ValueError):
        rk4_method_of_steps(lambda t, y, Z: -y, hist, [], 1.05, 1e-1)


def test_estimate_period_on_synthetic_cycle():
    t = np.linspace(0, 50, 5001)
    traj = Trajectory(t, np.cos(2 * np.pi * t / 3.7)[:, None])
    T, peaks = estimate_period(traj)
    assert abs(T - 3.7) < 1e-3
    assert len(peaks) >= 3


def test_trajectory_csv_roundtrip(tmp_path):
    t = np.linspace(0, 1, 11)
    traj = Trajectory(t, np.column_stack([np.sin(t), np.cos(t)]))
    path = tmp_path / "traj.csv"
    trajectory_to_csv(traj, path)
    header = path.read_text().splitlines()[0]
    assert header == "t,y1,y2"
    back = trajectory_from_csv(path)
    assert np.array_equal(back.times, traj.times)
    assert np.array_equal(back.states, traj.states)


# ---------------------------------------------------------------------------
# linear periodic solve

def periodic_linear_equation():
    u = Unknown()
    from ddecolloc.exprgraph import NeutralEval
    return Diff(u, 2) \
        + Const(np.sin) * NeutralEval(u, lambda t: t - np.pi / np.sqrt(2.0)) \
        + Const(np.cos) * DelayEval(u, lambda t: t - np.pi / 2) \
        - Const(1.0)


def test_periodic_linear_self_convergence():
    g32 = trig_grid(32, 0, 2 * np.pi)
    g64 = trig_grid(64, 0, 2 * np.pi)
    u32 = solve_periodic_linear(periodic_linear_equation(), g32)
    u64 = solve_periodic_linear(periodic_linear_equation(), g64)
    assert np.abs(u64.values[::2] - u32.values).max() < 1e-10


def test_periodic_linear_coefficients_decay():
    res = get("periodic_linear").run(n=32)
    assert res.extras["trailing_coeff_rel"] < 1e-10


def test_periodic_mean_zero_insolvency_flagged():
    # u'' = 1 has no periodic solution: the operator is singular
    g = trig_grid(16, 0, 2 * np.pi)
    eq = Diff(Unknown(), 2) - Const(1.0)
    with pytest.raises(SingularMatrixError):
        solve_periodic_linear(eq, g)


def test_periodic_linear_refinement_stability():
    g16 = trig_grid(16, 0, 2 * np.pi)
    g32 = trig_grid(32, 0, 2 * np.pi)
    u16 = solve_periodic_linear(periodic_linear_equation(), g16)
    u32 = solve_periodic_linear(periodic_linear_equation(), g32)
    assert np.abs(u32.values[::2] - u16.values).max() < 1e-8


# ---------------------------------------------------------------------------
# limit cycles

LV_PERIOD = 30.83847284  # published ten-digit value


@pytest.fixture(scope="module")
def lotka_cycle():
    problem = lotka_volterra_problem()
    traj = lotka_volterra_trajectory()
    return solve_limit_cycle(problem, traj, n=129, tol=1e-10)


def test_lotka_volterra_period(lotka_cycle):
    states, T, report = lotka_cycle
    assert report.converged
    assert abs(T - LV_PERIOD) < 1e-4


def test_lotka_volterra_coefficients_decay(lotka_cycle):
    states, T, report = lotka_cycle
    n = states[0].grid.size
    c = np.abs(np.fft.fft(states[0].values)) / n
    assert c[n // 2] <= 1e-9 * c[1]


def test_lotka_volterra_residual_on_finer_grid(lotka_cycle):
    states, T, report = lotka_cycle
    n = states[0].grid.size
    g1 = trig_grid(n, 0.0, 1.0)
    gf = trig_grid(4 * n, 0.0, 1.0)
    P = trig_barymat(gf.nodes, g1)
    Df = trig_diffmat(gf)
    K, gam, dlt, s = 7 / 5, 2 / 15, 1.0, 1.0
    x = P @ states[0].values
    y = P @ states[1].values
    Pd = trig_barymat(gf.nodes - s / T, gf)
    yd = Pd @ y
    hold = x * yd / (1 + x)
    rx = (Df @ x) / T - (x - x ** 2 / K - hold)
    ry = (Df @ y) / T - (-gam * y + dlt * hold)
    assert max(np.abs(rx).max(), np.abs(ry).max()) < 1e-10


def test_lotka_volterra_translation_invariance():
    # rolling the initial guess around the circle changes the converged node
    # values only by a rotation of phase; the period must not move
    from ddecolloc.exprgraph import TrigContext
    from ddecolloc.periodic import _initial_states, _phase_row
    from ddecolloc.solve import CollocationProblem, newton

    problem = lotka_volterra_problem()
    traj = lotka_volterra_trajectory()
    states1, T1, _ = solve_limit_cycle(problem, traj, n=65, tol=1e-10)

    n = 65
    g01 = trig_grid(n, 0.0, 1.0)
    ctx = TrigContext(g01, n_components=2)
    T0, _ = estimate_period(traj, 0)
    init = np.roll(_initial_states(traj, T0, g01.nodes, 0), 3, axis=0)
    row, rv = _phase_row(ctx, ("anchor_derivative_zero", 0), 1)
    prob = CollocationProblem(problem.system, ctx, [(None, row, rv, "phase")])
    y, params, rep = newton(prob, init.T.reshape(-1), [T0], tol=1e-10,
                            max_iter=40)
    assert rep.converged
    T2 = float(params[0])
    assert abs(T1 - T2) <= 1e-8 * T1
    # same closed curve: every re-solved point lies on the first orbit
    fine = np.linspace(0.0, 1.0, 2048, endpoint=False)
    Pf = trig_barymat(fine, g01)
    c1 = np.column_stack([Pf @ states1[0].values, Pf @ states1[1].values])
    pts = np.column_stack([y[:n], y[n:]])
    for p in pts[::5]:
        assert np.min(np.hypot(*(c1 - p).T)) < 1e-5


LOGISTIC_PERIOD = 4.0964


@pytest.fixture(scope="module")
def logistic_cycles():
    problem = delayed_logistic_problem()
    traj = delayed_logistic_trajectory()
    out = {}
    for n in (25, 40):
        out[n] = solve_limit_cycle(problem, traj, n=n, tol=1e-10)
    return out


def test_delayed_logistic_period(logistic_cycles):
    _, T, report = logistic_cycles[25]
    assert report.converged
    assert abs(T - LOGISTIC_PERIOD) < 1e-3


def test_delayed_logistic_trig_accuracy_vs_refined(logistic_cycles):
    states25, T25, _ = logistic_cycles[25]
    states40, T40, _ = logistic_cycles[40]
    g25 = trig_grid(25, 0.0, 1.0)
    g40 = trig_grid(40, 0.0, 1.0)
    ref = trig_barymat(g25.nodes, g40) @ states40[0].values
    assert np.abs(ref - states25[0].values).max() < 5e-9
    assert abs(T25 - T40) < 1e-8


def test_delayed_logistic_cheb_path_matches(logistic_cycles):
    problem = delayed_logistic_problem()
    traj = delayed_logistic_trajectory()
    states50, T50, rep50 = solve_limit_cycle_cheb(problem, traj, n=50,
                                                  tol=1e-10)
    states70, T70, _ = solve_limit_cycle_cheb(problem, traj, n=70, tol=1e-10)
    assert rep50.converged
    assert abs(T50 - LOGISTIC_PERIOD) < 1e-3
    # polynomial path agrees with itself under refinement and with the trig path
    probe = np.linspace(0.0, 1.0, 101)
    v50 = states50[0](probe * T50)
    v70 = states70[0](probe * T70)
    assert np.abs(v50 - v70).max() < 5e-9
    _, Ttrig, _ = logistic_cycles[25]
    assert abs(T50 - Ttrig) < 1e-9


def test_period_invariant_under_refinement(logistic_cycles):
    _, T25, _ = logistic_cycles[25]
    problem = delayed_logistic_problem()
    traj = delayed_logistic_trajectory()
    _, T41, _ = solve_limit_cycle(problem, traj, n=41, tol=1e-10)
    assert abs(T41 - T25) <= 1e-8 * T25
