import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nesh import checks
from nesh.dos import DosTrace, generate
from nesh.game import DEFAULT_X0, GameSpec, default_game, mixed_pseudogradient, solve_ne
from nesh.quantization import NumericalExhaustion
from nesh.sim import (CASES, DesyncError, ErrorState, control_input, error_state,
                      initial_state, make_context, oracle_step, read_csv, run,
                      scaled_coordinates, step)
from nesh.topology import Topology
from nesh.tuner import DesignParams, synthesize

from conftest import random_connected_graph, random_game


@pytest.fixture(scope="module")
def default_ctx():
    g, topo = default_game(), Topology.preset("cycle", 5)
    return make_context(g, topo, synthesize(g, topo, c_x0=18.0))


@pytest.fixture
def hand_ctx():
    """Two players on one edge with round numbers, for hand-computed steps."""
    g = GameSpec(rho=[1, 1], x_desired=[1, 2], p0=0.5, q0=0)
    design = DesignParams(h=0.25, delta=0.1, gamma1=0.5, theta0=1.0, r_x=5, r_y=5)
    return make_context(g, Topology.preset("path", 2), design, frame="absolute")


def test_control_input(default_ctx):
    g = default_ctx.game
    st_ = initial_state(default_ctx, DEFAULT_X0)
    assert np.array_equal(control_input(st_, g, 0.01, True), np.zeros(5))
    want = -0.01 * mixed_pseudogradient(g, st_.x, st_.y)
    np.testing.assert_array_equal(control_input(st_, g, 0.01, False), want)
    at_ne = initial_state(default_ctx, solve_ne(g))
    at_ne = type(at_ne)(dx=at_ne.dx, dy=np.zeros((5, 5)), dx_hat=at_ne.dx_hat,
                        dy_hat=at_ne.dy_hat, scaling=at_ne.scaling, step_k=0,
                        origin=at_ne.origin)
    assert np.max(np.abs(control_input(at_ne, g, 0.01, False))) < 1e-12


def test_two_steps_by_hand(hand_ctx):
    s0 = initial_state(hand_ctx, [1.0, 2.0])
    s1, rec1 = step(s0, hand_ctx, False, False)
    # P = M x + c with y = 0: [3*1 - 2, 3*2 - 4] = [1, 2]
    np.testing.assert_allclose(s1.x, [0.9, 1.8])
    np.testing.assert_array_equal(s1.y, np.zeros((2, 2)))
    np.testing.assert_array_equal(s1.x_hat, [1.0, 2.0])
    assert rec1.theta == 0.5 and s1.scaling.theta == 0.5
    s2, rec2 = step(s1, hand_ctx, False, False)
    # P_1 = 3*0.9 + 0.5*0 - 2, P_2 = 0.5*0 + 3*1.8 - 4
    np.testing.assert_allclose(s2.x, [0.83, 1.66])
    # y_12 <- 0 - h (0 + (0 - 2)),  y_21 <- 0 - h (0 + (0 - 1))
    np.testing.assert_allclose(s2.y, [[0.0, 0.5], [0.25, 0.0]])
    # symbols with theta = 0.5: x: (-0.34, -0.68) -> (0, -1); y: (1, 0.5) -> (1, 1)
    np.testing.assert_allclose(s2.x_hat, [1.0, 1.5])
    np.testing.assert_allclose(s2.y_hat, [[0.0, 0.5], [0.5, 0.0]])
    assert rec2.theta == 0.25
    assert rec2.max_qarg_x == pytest.approx(0.68)
    assert rec2.max_qarg_y == pytest.approx(1.0)
    assert not rec2.saturated


def test_full_freeze_under_case3(default_ctx):
    s = initial_state(default_ctx, DEFAULT_X0)
    s, _ = step(s, default_ctx, False, False)
    s2, rec = step(s, default_ctx, True, True)
    for name in ("dx", "dy", "dx_hat", "dy_hat"):
        assert np.array_equal(getattr(s2, name), getattr(s, name))
    assert s2.scaling == s.scaling and rec.theta == s.scaling.theta


def test_case2_updates_plant_but_holds_hats(default_ctx):
    s = initial_state(default_ctx, DEFAULT_X0)
    s2, _ = step(s, default_ctx, False, True)
    assert not np.array_equal(s2.dx, s.dx)
    assert np.array_equal(s2.dx_hat, s.dx_hat) and np.array_equal(s2.dy_hat, s.dy_hat)
    assert s2.scaling.theta == s.scaling.theta


@settings(max_examples=25)
@given(seed=st.integers(0, 2**32 - 1), n=st.sampled_from([2, 3, 5]),
       frame=st.sampled_from(["ne", "absolute"]))
def test_oracle_equivalence(seed, n, frame):
    rng = np.random.default_rng(seed)
    g = random_game(rng, n)
    topo = random_connected_graph(rng, n) if n > 2 else Topology.preset("path", 2)
    x0 = rng.uniform(-20, 20, n)
    design = synthesize(g, topo, c_x0=float(np.max(np.abs(x0))))
    ctx = make_context(g, topo, design, frame=frame)
    mask = checks.random_mask(rng, 200, p_dos=float(rng.uniform(0.1, 0.7)))
    assert checks.oracle_deviation(ctx, mask, x0) < 1e-9


def test_oracle_case3_is_identity(default_ctx):
    rng = np.random.default_rng(0)
    err = ErrorState(rng.normal(size=25), rng.normal(size=5), rng.normal(size=5),
                     rng.normal(size=25))
    out = oracle_step(err, 0.3, 3, default_ctx.game, default_ctx.x_star,
                      default_ctx.mats, default_ctx.design)
    assert out is err


def test_oracle_case4_dead_zone_fixpoint(default_ctx):
    rng = np.random.default_rng(1)
    theta = 2.0
    err = ErrorState(rng.normal(size=25), rng.normal(size=5),
                     rng.uniform(-0.9, 0.9, 5), rng.uniform(-0.9, 0.9, 25))
    out = oracle_step(err, theta, 4, default_ctx.game, default_ctx.x_star,
                      default_ctx.mats, default_ctx.design)
    np.testing.assert_array_equal(out.e_x, err.e_x)
    np.testing.assert_array_equal(out.e_y, err.e_y)
    with pytest.raises(ValueError):
        oracle_step(err, theta, 5, default_ctx.game, default_ctx.x_star,
                    default_ctx.mats, default_ctx.design)


def test_case_table():
    assert CASES == {(False, False): 1, (False, True): 2, (True, True): 3, (True, False): 4}


def test_scaled_coordinates():
    z = ErrorState(np.zeros(4), np.zeros(2), np.zeros(2), np.zeros(4))
    *_, pi = scaled_coordinates(z, 0.7)
    assert pi == 0
    rng = np.random.default_rng(2)
    e = ErrorState(*(rng.normal(size=k) for k in (4, 2, 2, 4)))
    beta, chi, xi_x, xi_y, pi = scaled_coordinates(e, 1.0)
    assert np.array_equal(beta, e.y_bar) and np.array_equal(xi_y, e.e_y)
    assert pi == pytest.approx(np.hypot(np.linalg.norm(e.y_bar), np.linalg.norm(e.chi_raw)))
    with pytest.raises(ValueError):
        scaled_coordinates(e, 0.0)


def test_scaled_errors_bounded_at_successes(default_ctx):
    rng = np.random.default_rng(3)
    g1 = default_ctx.design.gamma1
    for _ in range(3):
        mask = checks.random_mask(rng, 400, 0.5)
        s = initial_state(default_ctx, DEFAULT_X0)
        for k in range(400):
            s, _ = step(s, default_ctx, bool(mask[k]), bool(mask[k + 1]))
            if not mask[k + 1]:
                _, _, xi_x, xi_y, _ = scaled_coordinates(error_state(s, default_ctx.x_star),
                                                         s.scaling.theta)
                assert np.max(np.abs(xi_x)) <= 1 / (2 * g1) + 1e-12
                assert np.max(np.abs(xi_y)) <= 1 / (2 * g1) + 1e-12


def test_freeze_and_dual_state(default_ctx):
    rng = np.random.default_rng(4)
    mask = checks.random_mask(rng, 300, 0.5)
    assert checks.freeze_violations(default_ctx, mask, DEFAULT_X0) == 0
    assert checks.dual_sync_ok(default_ctx, mask, DEFAULT_X0)


def test_desync_is_detected(default_ctx):
    s = initial_state(default_ctx, DEFAULT_X0, dual=True)
    bad = type(s)(dx=s.dx, dy=s.dy, dx_hat=s.dx_hat, dy_hat=s.dy_hat, scaling=s.scaling,
                  step_k=0, origin=s.origin, enc_x_hat=s.enc_x_hat + 1e-3,
                  enc_y_hat=s.enc_y_hat)
    with pytest.raises(DesyncError):
        step(bad, default_ctx, False, False)


def test_run_equals_stepwise_loop(default_ctx):
    """Fast-forwarded spans leave the trajectory exactly as plain stepping."""
    trace = generate(0.8, 0.5, 30.0, 9)
    res = run(default_ctx, trace, 0.01, 3000, DEFAULT_X0)
    mask = res.trace.dos
    s = initial_state(default_ctx, DEFAULT_X0)
    for k in range(3000):
        s, rec = step(s, default_ctx, bool(mask[k]), bool(mask[k + 1]))
        assert np.array_equal(res.trace.x[k + 1], rec.x)
        assert res.trace.theta[k + 1] == rec.theta
        assert res.trace.max_qarg_y[k + 1] == rec.max_qarg_y
    assert np.array_equal(res.final_state.dy, s.dy)
    assert res.final_state.scaling.theta == s.scaling.theta


def test_frames_agree(default_ctx):
    g, topo, d = default_ctx.game, default_ctx.topo, default_ctx.design
    mask = checks.random_mask(np.random.default_rng(6), 2000, 0.3)
    a = run(make_context(g, topo, d, "ne"), mask, 0.01, 2000, DEFAULT_X0)
    b = run(make_context(g, topo, d, "absolute"), mask, 0.01, 2000, DEFAULT_X0)
    np.testing.assert_allclose(a.trace.x, b.trace.x, atol=1e-9)


def test_dos_free_run_converges(default_ctx):
    res = run(default_ctx, DosTrace.empty(150.0), 0.01, 15000, DEFAULT_X0)
    err = res.trace.err_ne
    assert err[-1] <= 1e-3 and err[-1] <= err[7500]
    assert res.summary["first_saturation"] is None
    assert res.summary["successes"] == 15001


def test_summary_fields(default_ctx):
    res = run(default_ctx, generate(0.5, 1.0, 10.0, 0), 0.01, 1000, DEFAULT_X0)
    s = res.summary
    assert s["steps"] == 1000 and s["frame"] == "ne"
    assert s["range_x"] == default_ctx.design.r_x + 0.5
    assert s["initial_err_ne"] == pytest.approx(np.linalg.norm(
        np.array(DEFAULT_X0) - default_ctx.x_star))


def test_run_input_validation(default_ctx):
    with pytest.raises(ValueError):
        run(default_ctx, np.zeros(5, dtype=bool), 0.01, 10, DEFAULT_X0)
    with pytest.raises(ValueError):
        run(default_ctx, DosTrace.empty(1.0), 0.01, 1000, DEFAULT_X0)
    with pytest.raises(ValueError):
        initial_state(default_ctx, [1.0, 2.0])
    with pytest.raises(ValueError):
        make_context(default_ctx.game, default_ctx.topo, default_ctx.design, frame="polar")


def test_theta_underflow_aborts_run(default_ctx):
    d = DesignParams(h=default_ctx.design.h, delta=default_ctx.design.delta, gamma1=1e-3,
                     theta0=36.0, r_x=1000, r_y=1000)
    ctx = make_context(default_ctx.game, default_ctx.topo, d)
    with pytest.raises(NumericalExhaustion):
        run(ctx, DosTrace.empty(10.0), 0.01, 1000, DEFAULT_X0)


def test_csv_round_trip(default_ctx, tmp_path):
    res = run(default_ctx, generate(0.5, 1.0, 10.0, 1), 0.01, 1000, DEFAULT_X0)
    path = tmp_path / "out.csv"
    res.trace.write_csv(path, decimation=7)
    header = path.read_text().splitlines()[0]
    assert header == ("k,dos,x_1,x_2,x_3,x_4,x_5,theta,err_ne,max_qarg_x,max_qarg_y,"
                      "saturated")
    cols = read_csv(path)
    assert cols["k"][-1] == 1000 and cols["k"][1] == 7
    rows = cols["k"].astype(int)
    np.testing.assert_array_equal(cols["theta"], res.trace.theta[rows])
    np.testing.assert_array_equal(cols["x_3"], res.trace.x[rows, 2])
    with pytest.raises(ValueError):
        res.trace.write_csv(path, decimation=0)
