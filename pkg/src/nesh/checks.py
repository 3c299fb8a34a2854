"""Invariant suites run by ``nesh verify`` and reused by the test-suite.

Each check returns a plain number (a deviation or a violation count) so the
caller decides on tolerances and reporting.
"""

from __future__ import annotations

import numpy as np

from .sim import (CASES, SimContext, SimTrace, error_state, initial_state, oracle_step,
                  step)


def random_mask(rng: np.random.Generator, steps: int, p_dos: float = 0.4) -> np.ndarray:
    """Bernoulli DoS flags for instants 0..steps; exercises all four cases."""
    return rng.random(steps + 1) < p_dos


def oracle_deviation(ctx: SimContext, mask, x0) -> float:
    """Largest per-component gap between the engine and the case recursion."""
    mask = np.asarray(mask, dtype=bool)
    state = initial_state(ctx, x0)
    worst = 0.0
    for k in range(mask.size - 1):
        now, nxt = bool(mask[k]), bool(mask[k + 1])
        err = error_state(state, ctx.x_star)
        theta = state.scaling.theta
        state, _ = step(state, ctx, now, nxt)
        want = oracle_step(err, theta, CASES[(now, nxt)], ctx.game, ctx.x_star,
                           ctx.mats, ctx.design)
        got = error_state(state, ctx.x_star)
        for name in ("y_bar", "chi_raw", "e_x", "e_y"):
            worst = max(worst, float(np.max(np.abs(getattr(got, name) - getattr(want, name)))))
    return worst


def freeze_violations(ctx: SimContext, mask, x0) -> int:
    """Steps where DoS at k failed to leave x and y exactly unchanged."""
    mask = np.asarray(mask, dtype=bool)
    state = initial_state(ctx, x0)
    bad = 0
    for k in range(mask.size - 1):
        nxt, _ = step(state, ctx, bool(mask[k]), bool(mask[k + 1]))
        if mask[k] and not (np.array_equal(nxt.dx, state.dx)
                            and np.array_equal(nxt.dy, state.dy)):
            bad += 1
        state = nxt
    return bad


def dual_sync_ok(ctx: SimContext, mask, x0) -> bool:
    """Independent encoder and decoder copies stay bit-identical (raises otherwise)."""
    mask = np.asarray(mask, dtype=bool)
    state = initial_state(ctx, x0, dual=True)
    for k in range(mask.size - 1):
        state, _ = step(state, ctx, bool(mask[k]), bool(mask[k + 1]))
    return np.array_equal(state.enc_x_hat, state.dx_hat) and np.array_equal(
        state.enc_y_hat, state.dy_hat)


def theta_identity_error(trace: SimTrace, theta0: float, gamma1: float) -> float:
    """Max relative gap between recorded theta and theta0 * gamma1 ** (successes in 1..k).

    Instant 0 is the first transmission attempt and never rescales theta, so
    it is excluded from the count.
    """
    ts = np.cumsum(~trace.dos) - (~trace.dos[0])
    want = theta0 * np.power(gamma1, ts.astype(float))
    return float(np.max(np.abs(trace.theta - want) / want))


def theta_hold_violations(trace: SimTrace) -> int:
    """Instants under DoS whose theta differs from the previous instant's."""
    held = trace.dos[1:]
    return int(np.count_nonzero(trace.theta[1:][held] != trace.theta[:-1][held]))


__all__ = ["dual_sync_ok", "freeze_violations", "oracle_deviation", "random_mask",
           "theta_hold_violations", "theta_identity_error"]
