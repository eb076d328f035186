"""Tests for the history-sum and predictor-corrector fractional solvers."""

import math
import os
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose

from fracdyn.errors import (
    ConfigError,
    DivergenceError,
    IncommensurableOrdersError,
)
from fracdyn.mlf import ml_one
from fracdyn.solvers import (
    MultiTermSpec,
    SolverConfig,
    SystemSpec,
    Trajectory,
    commensurate_order,
    gl_weights,
    multi_term_to_system,
    read_trajectory_csv,
    solve_abm,
    solve_gl,
    write_trajectory_csv,
)

RELAX = SystemSpec(name="relax", dim=1, field=lambda t, x: -x)
ROTATE = SystemSpec(name="rotate", dim=2,
                    field=lambda t, x: np.array([x[1], -x[0]]))


def exact_gl_weights(alpha, n):
    """Same recurrence run in exact rational arithmetic on the float alpha."""
    a = Fraction(alpha)
    c = [Fraction(1)]
    for k in range(1, n):
        c.append(c[-1] * (1 - (a + 1) / k))
    return np.array([float(v) for v in c])


# -- weights -------------------------------------------------------------


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9, 0.995, 1.0])
def test_gl_weights_match_exact_recurrence(alpha):
    c = gl_weights(alpha, 60)
    assert_allclose(c, exact_gl_weights(alpha, 60), rtol=1e-13, atol=1e-300)


def test_gl_weights_match_signed_binomials():
    # independent route: c_k = (-1)^k * C(alpha, k) via mpmath
    alpha = 0.7
    c = gl_weights(alpha, 30)
    ref = [float((-1) ** k * mpmath.binomial(alpha, k)) for k in range(30)]
    assert_allclose(c, ref, rtol=1e-12)


def test_gl_weights_alpha_one_truncate():
    c = gl_weights(1.0, 10)
    assert c[0] == 1.0 and c[1] == -1.0
    assert np.all(c[2:] == 0.0)


def test_gl_weights_validation():
    with pytest.raises(ConfigError):
        gl_weights(0.0, 5)
    with pytest.raises(ConfigError):
        gl_weights(1.2, 5)
    with pytest.raises(ConfigError):
        gl_weights(0.5, 0)


# -- linear relaxation against the Mittag-Leffler solution ---------------


@pytest.mark.parametrize("alpha", [0.5, 0.8, 1.0])
def test_gl_relaxation_tracks_mittag_leffler(alpha):
    cfg = SolverConfig(alpha=alpha, h=1e-3, t_end=2.0, x0=[1.0])
    traj = solve_gl(RELAX, cfg)
    ref = np.array([ml_one(alpha, -t ** alpha) for t in traj.t])
    rel = np.abs(traj.x[:, 0] - ref) / np.abs(ref)
    assert np.max(rel) < 5e-3


@pytest.mark.parametrize("alpha", [0.5, 0.8, 1.0])
def test_abm_relaxation_tracks_mittag_leffler(alpha):
    cfg = SolverConfig(alpha=alpha, h=1e-3, t_end=2.0, x0=[1.0])
    traj = solve_abm(RELAX, cfg)
    ref = np.array([ml_one(alpha, -t ** alpha) for t in traj.t])
    rel = np.abs(traj.x[:, 0] - ref) / np.abs(ref)
    assert np.max(rel) < 5e-4


def test_zero_field_is_exactly_constant():
    zero = SystemSpec(name="zero", dim=2, field=lambda t, x: np.zeros(2))
    cfg = SolverConfig(alpha=0.7, h=0.01, t_end=1.0, x0=[2.0, -3.0])
    for solver in (solve_gl, solve_abm):
        traj = solver(zero, cfg)
        assert np.all(traj.x == [2.0, -3.0])


@pytest.mark.parametrize("alpha", [0.4, 0.7, 1.0])
def test_abm_exact_on_constant_field(alpha):
    # D^alpha x = 1 has solution t^alpha / Gamma(alpha+1); the corrector's
    # product-integration weights reproduce it to rounding error
    one = SystemSpec(name="one", dim=1, field=lambda t, x: np.ones(1))
    cfg = SolverConfig(alpha=alpha, h=0.01, t_end=1.0, x0=[0.0])
    traj = solve_abm(one, cfg)
    ref = traj.t ** alpha / math.gamma(alpha + 1.0)
    assert_allclose(traj.x[1:, 0], ref[1:], rtol=1e-12)


# -- classical limit alpha = 1 -------------------------------------------


def test_gl_alpha_one_reduces_to_forward_euler():
    h, t_end = 1e-3, 1.0
    cfg = SolverConfig(alpha=1.0, h=h, t_end=t_end, x0=[1.0, 0.0])
    traj = solve_gl(ROTATE, cfg)
    x = np.array([1.0, 0.0])
    for m in range(cfg.n_steps):
        x = x + h * ROTATE.field(m * h, x)
        assert_allclose(traj.x[m + 1], x, rtol=0, atol=1e-12)


def test_abm_alpha_one_reduces_to_heun():
    h, t_end = 1e-3, 1.0
    cfg = SolverConfig(alpha=1.0, h=h, t_end=t_end, x0=[1.0, 0.0])
    traj = solve_abm(ROTATE, cfg)
    x = np.array([1.0, 0.0])
    for m in range(cfg.n_steps):
        t = m * h
        fx = ROTATE.field(t, x)
        pred = x + h * fx
        x = x + 0.5 * h * (fx + ROTATE.field(t + h, pred))
        assert_allclose(traj.x[m + 1], x, rtol=0, atol=1e-12)


def test_abm_alpha_one_rotation_accuracy():
    cfg = SolverConfig(alpha=1.0, h=1e-3, t_end=2 * np.pi, x0=[1.0, 0.0])
    traj = solve_abm(ROTATE, cfg)
    ref = np.c_[np.cos(traj.t), -np.sin(traj.t)]
    assert np.max(np.abs(traj.x - ref)) < 1e-5


def test_gl_error_shrinks_when_step_halves():
    errs = []
    for h in (2e-3, 1e-3):
        cfg = SolverConfig(alpha=0.9, h=h, t_end=2.0, x0=[1.0])
        traj = solve_gl(RELAX, cfg)
        ref = np.array([ml_one(0.9, -t ** 0.9) for t in traj.t])
        errs.append(np.max(np.abs(traj.x[:, 0] - ref) / np.abs(ref)))
    assert errs[1] < errs[0]
    assert 1.2 < errs[0] / errs[1] < 3.0


# -- memory window -------------------------------------------------------


def test_window_at_least_n_steps_is_identical():
    cfg_full = SolverConfig(alpha=0.8, h=1e-2, t_end=3.0, x0=[1.0])
    cfg_win = SolverConfig(alpha=0.8, h=1e-2, t_end=3.0, x0=[1.0],
                           memory_window=10_000)
    full = solve_gl(RELAX, cfg_full)
    win = solve_gl(RELAX, cfg_win)
    assert np.array_equal(full.x, win.x)


def test_short_window_stays_close_on_relaxation():
    # high order => fast-decaying history weights => small truncation effect
    cfg_full = SolverConfig(alpha=0.995, h=1e-3, t_end=20.0, x0=[1.0])
    cfg_win = SolverConfig(alpha=0.995, h=1e-3, t_end=20.0, x0=[1.0],
                           memory_window=1000)
    full = solve_gl(RELAX, cfg_full)
    win = solve_gl(RELAX, cfg_win)
    dev = np.max(np.abs(full.x - win.x))
    assert 0.0 < dev < 1e-2


def test_window_metadata_recorded():
    cfg = SolverConfig(alpha=0.9, h=0.01, t_end=1.0, x0=[1.0],
                       memory_window=50)
    assert solve_gl(RELAX, cfg).memory_window == 50
    assert solve_abm(RELAX, cfg).memory_window == 50


# -- config validation and failure modes ---------------------------------


def test_config_rejects_bad_values():
    ok = dict(alpha=0.9, h=0.01, t_end=1.0, x0=[1.0])
    with pytest.raises(ConfigError):
        SolverConfig(**{**ok, "alpha": 1.2})
    with pytest.raises(ConfigError):
        SolverConfig(**{**ok, "alpha": 0.0})
    with pytest.raises(ConfigError):
        SolverConfig(**{**ok, "h": 0.0})
    with pytest.raises(ConfigError):
        SolverConfig(**{**ok, "t_end": 0.0})
    with pytest.raises(ConfigError):
        SolverConfig(**{**ok, "x0": [np.nan]})
    with pytest.raises(ConfigError):
        SolverConfig(**{**ok, "memory_window": 0})


def test_dimension_mismatch_rejected():
    cfg = SolverConfig(alpha=0.9, h=0.01, t_end=1.0, x0=[1.0, 2.0])
    with pytest.raises(ConfigError):
        solve_gl(RELAX, cfg)


def test_divergence_reports_step_and_time():
    blow = SystemSpec(name="blow", dim=1, field=lambda t, x: x * x)
    cfg = SolverConfig(alpha=1.0, h=0.1, t_end=100.0, x0=[1.0],
                       diverge_bound=1e6)
    with pytest.raises(DivergenceError) as exc:
        solve_gl(blow, cfg)
    assert exc.value.step is not None
    assert exc.value.t == pytest.approx(exc.value.step * 0.1)


def test_deterministic_across_runs():
    cfg = SolverConfig(alpha=0.9, h=1e-3, t_end=1.0, x0=[1.0])
    a = solve_gl(RELAX, cfg)
    b = solve_gl(RELAX, cfg)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.t, b.t)


# -- multi-term reduction ------------------------------------------------


def test_commensurate_order_cases():
    assert commensurate_order((0.9, 0.8)) == pytest.approx(0.1)
    assert commensurate_order((0.5, 0.25)) == pytest.approx(0.25)
    assert commensurate_order((1.0,)) == pytest.approx(1.0)
    with pytest.raises(IncommensurableOrdersError):
        commensurate_order((0.9, 0.9 / np.sqrt(2.0)))


def test_multi_term_spec_validation():
    ok = dict(orders=(0.9, 0.8), coeffs=(1.0, 0.2), rhs=lambda t, x: -x)
    MultiTermSpec(**ok)
    with pytest.raises(ConfigError):
        MultiTermSpec(**{**ok, "coeffs": (1.0,)})
    with pytest.raises(ConfigError):
        MultiTermSpec(**{**ok, "orders": ()}, )
    with pytest.raises(ConfigError):
        MultiTermSpec(**{**ok, "orders": (1.2, 0.8)})
    with pytest.raises(ConfigError):
        MultiTermSpec(**{**ok, "coeffs": (0.0, 0.2)})


def test_chain_marks_observables_and_dimension():
    mt = MultiTermSpec(orders=(0.9, 0.8), coeffs=(1.0, 0.2),
                       rhs=lambda t, x: -x, x0=0.5)
    system, x0 = multi_term_to_system(mt)
    assert system.dim == 9
    assert system.observables == (0, 8)
    assert system.params["base_order"] == pytest.approx(0.1)
    assert x0[0] == 0.5 and np.all(x0[1:] == 0.0)


def test_chain_agrees_with_direct_two_term_discretization():
    """Dual-route check for the commensurate reduction.

    Route A: reduce D^0.9 x + 0.2 D^0.6 x = -x to a base-0.3 chain and
    integrate with the production solver.  Route B: discretize both
    derivative terms directly with their own binomial-weight history sums
    (never building a chain) and solve the resulting one-step recurrence.
    The two discretizations differ at O(h), so agreement is checked at two
    steps and must tighten as h shrinks.
    """
    orders = (0.9, 0.6)
    coeffs = (1.0, 0.2)
    rhs = lambda t, x: -x
    x0 = 1.0

    def direct(h, t_end):
        n = int(round(t_end / h))
        scales = [c * h ** -o for c, o in zip(coeffs, orders)]
        ws = [gl_weights(o, n + 1) for o in orders]
        lead = sum(scales)
        dev = np.zeros(n + 1)
        for m in range(1, n + 1):
            acc = rhs((m - 1) * h, dev[m - 1] + x0)
            for s, w in zip(scales, ws):
                acc -= s * np.dot(w[1:m + 1][::-1], dev[:m])
            dev[m] = acc / lead
        return dev + x0

    mt = MultiTermSpec(orders=orders, coeffs=coeffs, rhs=rhs, x0=x0)
    system, x0_chain = multi_term_to_system(mt)
    sups = []
    for h in (4e-3, 2e-3):
        cfg = SolverConfig(alpha=system.params["base_order"], h=h,
                           t_end=1.0, x0=x0_chain)
        chain = solve_gl(system, cfg).x[:, 0]
        sups.append(np.max(np.abs(chain - direct(h, 1.0))))
    assert sups[1] < 2e-2
    assert sups[1] < sups[0]


# -- trajectory CSV round-trip -------------------------------------------


def test_csv_roundtrip_is_lossless(tmp_path):
    cfg = SolverConfig(alpha=0.9, h=1e-2, t_end=1.0, x0=[1.0, 0.0],
                       memory_window=40)
    traj = solve_abm(ROTATE, cfg)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(traj, str(path))
    back = read_trajectory_csv(str(path))
    assert np.array_equal(back.t, traj.t)
    assert np.array_equal(back.x, traj.x)
    assert back.alpha == traj.alpha
    assert back.h == traj.h
    assert back.system_name == traj.system_name
    assert back.scheme == traj.scheme
    assert back.memory_window == traj.memory_window


def test_csv_write_replaces_atomically(tmp_path):
    cfg = SolverConfig(alpha=0.9, h=0.1, t_end=1.0, x0=[1.0])
    path = tmp_path / "out.csv"
    write_trajectory_csv(solve_gl(RELAX, cfg), str(path))
    first = path.read_bytes()
    write_trajectory_csv(solve_gl(RELAX, cfg), str(path))
    assert path.read_bytes() == first
    # no leftover temp files from the staged write
    assert os.listdir(tmp_path) == ["out.csv"]


def test_csv_full_memory_roundtrips_as_none(tmp_path):
    cfg = SolverConfig(alpha=0.9, h=0.1, t_end=1.0, x0=[1.0])
    path = tmp_path / "full.csv"
    write_trajectory_csv(solve_gl(RELAX, cfg), str(path))
    assert read_trajectory_csv(str(path)).memory_window is None
