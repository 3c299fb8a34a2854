"""Quantized distributed NE seeking under DoS: step engine and error-dynamics oracle.

State is held relative to a frame origin. ``frame="absolute"`` uses the
origin 0 and is the literal protocol. ``frame="ne"`` (default) centres on the
Nash equilibrium. Every protocol quantity (quantizer inputs, consensus
differences, pseudogradient) is translation-invariant, so the trajectories
agree in exact arithmetic, but the centred frame keeps full float precision
while theta shrinks by hundreds of orders of magnitude. In the absolute frame
``x_hat`` stops moving once ``theta`` drops below the ulp of ``|x|`` and the
quantizer then saturates spuriously.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .dos import DosTrace, sample_mask
from .game import GameSpec, mixed_pseudogradient, solve_ne
from .quantization import (THETA_FLOOR, NumericalExhaustion, ScalingState,
                           UniformQuantizer, quantize_vec, scale_step,
                           symbol_values)
from .topology import ProtocolMatrices, Topology, build_matrices
from .tuner import DesignParams

FRAMES = ("ne", "absolute")


class DesyncError(AssertionError):
    """Encoder and decoder copies diverged (dual-state diagnostic)."""


@dataclass(frozen=True, eq=False)
class SimContext:
    """Everything a run needs besides the state.

    The engine works on the stacked vector ``z = [dx; vec(dy)]`` (row-major),
    for which a DoS-free plant-and-estimate update is affine:
    ``z' = a z + b z_hat + c``.
    """

    game: GameSpec
    topo: Topology
    mats: ProtocolMatrices
    design: DesignParams
    x_star: np.ndarray
    origin: np.ndarray
    frame: str
    q_x: UniformQuantizer
    q_y: UniformQuantizer
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)
    levels: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.game.n_players


def _update_maps(game: GameSpec, mats: ProtocolMatrices, delta: float, h: float,
                 p_origin: np.ndarray):
    n = game.n_players
    m = game.matrix
    size = n + n * n
    a = np.eye(size)
    b = np.zeros((size, size))
    c = np.zeros(size)
    # own action: x_i - delta (M_ii x_i + sum_{j != i} M_ij y_ij + P_i(origin))
    for i in range(n):
        a[i, i] -= delta * m[i, i]
        for j in range(n):
            if j != i:
                a[i, n + i * n + j] = -delta * m[i, j]
    c[:n] = -delta * p_origin
    # estimates: y - h (S y_hat - A0 (1 (x) x_hat))
    b[n:, n:] = -h * mats.s
    b[n:, :n] = h * mats.a0 @ np.tile(np.eye(n), (n, 1))
    return a, b, c


def make_context(game: GameSpec, topo: Topology, design: DesignParams,
                 frame: str = "ne") -> SimContext:
    if frame not in FRAMES:
        raise ValueError(f"frame must be one of {FRAMES}")
    if game.n_players != topo.n:
        raise ValueError("game and topology sizes differ")
    x_star = solve_ne(game)
    n = game.n_players
    if frame == "ne":
        origin = x_star.copy()
        # x* is the exact zero of P in this frame
        p_origin = np.zeros(n)
    else:
        origin = np.zeros(n)
        p_origin = game.offset.copy()
    mats = build_matrices(topo, design.h)
    a, b, c = _update_maps(game, mats, design.delta, design.h, p_origin)
    levels = np.concatenate([np.full(n, float(design.r_x)), np.full(n * n, float(design.r_y))])
    for arr in (a, b, c, levels):
        arr.setflags(write=False)
    return SimContext(game=game, topo=topo, mats=mats, design=design, x_star=x_star,
                      origin=origin, frame=frame, q_x=UniformQuantizer(design.r_x),
                      q_y=UniformQuantizer(design.r_y), a=a, b=b, c=c, levels=levels)


@dataclass(frozen=True, eq=False)
class NetworkState:
    """Protocol state at one sampling instant, stored relative to ``origin``.

    ``dy[i, j]`` is player i's estimate of player j, ``dy_hat`` and
    ``dx_hat`` the decoded copies shared by every receiver. The ``enc_*``
    copies exist only in dual-state mode.
    """

    dx: np.ndarray
    dy: np.ndarray
    dx_hat: np.ndarray
    dy_hat: np.ndarray
    scaling: ScalingState
    step_k: int
    origin: np.ndarray
    enc_x_hat: np.ndarray | None = None
    enc_y_hat: np.ndarray | None = None

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.dx

    @property
    def y(self) -> np.ndarray:
        return self.origin[None, :] + self.dy

    @property
    def x_hat(self) -> np.ndarray:
        return self.origin + self.dx_hat

    @property
    def y_hat(self) -> np.ndarray:
        return self.origin[None, :] + self.dy_hat

    @property
    def dual(self) -> bool:
        return self.enc_x_hat is not None


def initial_state(ctx: SimContext, x0, dual: bool = False) -> NetworkState:
    """y, y_hat, x_hat start at 0 and theta at theta0."""
    x0 = np.asarray(x0, dtype=float)
    n = ctx.game.n_players
    if x0.shape != (n,):
        raise ValueError(f"x0 must have length {n}")
    o = ctx.origin
    dy0 = np.zeros((n, n)) - o[None, :]
    dx_hat = -o
    scaling = ScalingState(ctx.design.theta0, ctx.design.gamma1)
    enc = (dx_hat.copy(), dy0.copy()) if dual else (None, None)
    return NetworkState(dx=x0 - o, dy=dy0, dx_hat=dx_hat, dy_hat=dy0.copy(),
                        scaling=scaling, step_k=0, origin=o,
                        enc_x_hat=enc[0], enc_y_hat=enc[1])


@dataclass(frozen=True)
class StepRecord:
    """Observation at instant ``k``; quantizer fields describe the attempt at k."""

    k: int
    dos_active: bool
    x: np.ndarray
    err_ne: float
    theta: float
    max_qarg_x: float
    max_qarg_y: float
    saturated: bool


def control_input(state: NetworkState, game: GameSpec, delta: float,
                  dos_active: bool) -> np.ndarray:
    """Gradient-play input ``-delta P_i(x_i, y_i)``, or zero under DoS."""
    if dos_active:
        return np.zeros(game.n_players)
    return -delta * mixed_pseudogradient(game, state.x, state.y)


def _advance(ctx: SimContext, z, zh, zh_enc, theta: float, dos_now: bool,
             dos_next: bool):
    """One sampling period on stacked vectors; the shared engine kernel.

    Returns the new ``z``, decoder hat, encoder hat and the scaled quantizer
    input magnitudes. ``zh_enc`` is ``zh`` itself outside dual-state mode.
    """
    if not dos_now:
        z = ctx.a @ z + ctx.b @ zh + ctx.c
    arg = (z - zh_enc) / theta
    mag = np.abs(arg)
    if not dos_next:
        # only the integer symbols cross the channel
        inc = theta * symbol_values(arg, mag, ctx.levels)
        if zh_enc is zh:
            zh = zh_enc = zh + inc
        else:
            zh = zh + inc
            zh_enc = zh_enc + inc
    return z, zh, zh_enc, mag


def _stack(dx, dy) -> np.ndarray:
    return np.concatenate([dx, dy.reshape(-1)])


def _unstack(z, n: int):
    return z[:n].copy(), z[n:].reshape(n, n).copy()


def encode(q: UniformQuantizer, target, hat, theta: float):
    """Scaled innovation, its symbols and the saturation flag."""
    arg = (np.asarray(target) - hat) / theta
    sym, sat = quantize_vec(q, arg)
    return arg, sym, sat


def decode(hat, symbols, theta: float):
    return hat + theta * symbols


def step(state: NetworkState, ctx: SimContext, dos_now: bool,
         dos_next: bool) -> tuple[NetworkState, StepRecord]:
    """Advance one sampling period, from instant k to k+1.

    Plant and estimates are gated by DoS at k, the encoder/decoder update and
    the scaling parameter by DoS at k+1 (a failed transmission holds both).
    """
    n = ctx.n
    theta = state.scaling.theta
    z = _stack(state.dx, state.dy)
    zh = _stack(state.dx_hat, state.dy_hat)
    zh_enc = _stack(state.enc_x_hat, state.enc_y_hat) if state.dual else zh
    z, zh, zh_enc, mag = _advance(ctx, z, zh, zh_enc, theta, dos_now, dos_next)
    if state.dual and not np.array_equal(zh, zh_enc):
        raise DesyncError(f"encoder/decoder hats diverged at step {state.step_k + 1}")
    scaling = scale_step(state.scaling, dos_next)
    dx, dy = _unstack(z, n)
    dxh, dyh = _unstack(zh, n)
    enc = _unstack(zh_enc, n) if state.dual else (None, None)
    new = NetworkState(dx=dx, dy=dy, dx_hat=dxh, dy_hat=dyh, scaling=scaling,
                       step_k=state.step_k + 1, origin=state.origin,
                       enc_x_hat=enc[0], enc_y_hat=enc[1])
    rec = StepRecord(k=new.step_k, dos_active=bool(dos_next), x=new.x,
                     err_ne=float(np.linalg.norm(dx + (ctx.origin - ctx.x_star))),
                     theta=scaling.theta,
                     max_qarg_x=float(mag[:n].max()), max_qarg_y=float(mag[n:].max()),
                     saturated=bool(np.any(mag >= ctx.levels + 0.5)))
    return new, rec


# -- error-dynamics oracle ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class ErrorState:
    y_bar: np.ndarray   # y - 1 (x) x, row-major over (i, j)
    chi_raw: np.ndarray  # x - x*
    e_x: np.ndarray
    e_y: np.ndarray


def error_state(state: NetworkState, x_star) -> ErrorState:
    dx = state.dx
    return ErrorState(y_bar=(state.dy - dx[None, :]).reshape(-1),
                      chi_raw=dx + (state.origin - np.asarray(x_star)),
                      e_x=dx - state.dx_hat,
                      e_y=(state.dy - state.dy_hat).reshape(-1))


CASES = {(False, False): 1, (False, True): 2, (True, True): 3, (True, False): 4}


def oracle_step(err: ErrorState, theta: float, case_id: int, game: GameSpec,
                x_star, mats: ProtocolMatrices, design: DesignParams) -> ErrorState:
    """Closed-form error recursion for the four DoS transition cases.

    Works on the Kronecker-stacked matrices H, G, S, A0 and the absolute
    pseudogradient; shares nothing with the step engine but the quantizer.
    """
    if case_id not in (1, 2, 3, 4):
        raise ValueError(f"unknown case id {case_id}")
    if case_id == 3:
        return err
    qx, qy = UniformQuantizer(design.r_x), UniformQuantizer(design.r_y)
    if case_id == 4:
        return ErrorState(err.y_bar, err.chi_raw,
                          err.e_x - theta * quantize_vec(qx, err.e_x / theta)[0],
                          err.e_y - theta * quantize_vec(qy, err.e_y / theta)[0])
    n = game.n_players
    h, delta = design.h, design.delta
    x = np.asarray(x_star) + err.chi_raw
    y = err.y_bar.reshape(n, n) + x[None, :]
    p = mixed_pseudogradient(game, x, y)
    ones_ex = np.tile(err.e_x, n)
    y_bar = (mats.h_matrix @ err.y_bar + delta * np.tile(p, n)
             + h * (mats.s @ err.e_y) - h * (mats.a0 @ ones_ex))
    chi = err.chi_raw - delta * p
    v = err.e_x - delta * p
    w = mats.g_matrix @ err.e_y - h * (mats.a0 @ ones_ex) - h * (mats.s @ err.y_bar)
    if case_id == 1:
        v = v - theta * quantize_vec(qx, v / theta)[0]
        w = w - theta * quantize_vec(qy, w / theta)[0]
    return ErrorState(y_bar, chi, v, w)


def scaled_coordinates(err: ErrorState, theta: float):
    """(beta, chi, xi_x, xi_y, ||pi||): errors divided by theta."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    beta = err.y_bar / theta
    chi = err.chi_raw / theta
    pi_norm = float(np.hypot(np.linalg.norm(beta), np.linalg.norm(chi)))
    return beta, chi, err.e_x / theta, err.e_y / theta, pi_norm


# -- full runs ---------------------------------------------------------------

@dataclass(eq=False)
class SimTrace:
    """Columnar per-instant record, rows k = 0..K."""

    dos: np.ndarray
    x: np.ndarray
    theta: np.ndarray
    err_ne: np.ndarray
    max_qarg_x: np.ndarray
    max_qarg_y: np.ndarray
    saturated: np.ndarray

    @property
    def k(self) -> np.ndarray:
        return np.arange(self.dos.size)

    def record(self, k: int) -> StepRecord:
        return StepRecord(k=int(k), dos_active=bool(self.dos[k]), x=self.x[k].copy(),
                          err_ne=float(self.err_ne[k]), theta=float(self.theta[k]),
                          max_qarg_x=float(self.max_qarg_x[k]),
                          max_qarg_y=float(self.max_qarg_y[k]),
                          saturated=bool(self.saturated[k]))

    def write_csv(self, path, decimation: int = 10) -> None:
        if decimation < 1:
            raise ValueError("decimation must be >= 1")
        n = self.x.shape[1]
        rows = list(range(0, self.dos.size, decimation))
        if rows[-1] != self.dos.size - 1:
            rows.append(self.dos.size - 1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "dos"] + [f"x_{i + 1}" for i in range(n)]
                       + ["theta", "err_ne", "max_qarg_x", "max_qarg_y", "saturated"])
            for k in rows:
                w.writerow([k, int(self.dos[k])] + [f"{v:.17g}" for v in self.x[k]]
                           + [f"{self.theta[k]:.17g}", f"{self.err_ne[k]:.17g}",
                              f"{self.max_qarg_x[k]:.17g}", f"{self.max_qarg_y[k]:.17g}",
                              int(self.saturated[k])])


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return {name: body[:, i] for i, name in enumerate(header)}


@dataclass(eq=False)
class SimResult:
    trace: SimTrace
    summary: dict
    final_state: NetworkState


def run(ctx: SimContext, dos, delta_seconds: float, horizon_steps: int, x0,
        dual: bool = False) -> SimResult:
    """Simulate ``horizon_steps`` sampling periods.

    ``dos`` is a DosTrace or a boolean mask of length ``horizon_steps + 1``.
    Spans of consecutive DoS instants are skipped in O(1) each: plant,
    estimates, hats and theta are all frozen there and the (unsent)
    quantizer input repeats.
    """
    K = int(horizon_steps)
    if K < 0:
        raise ValueError("horizon_steps must be non-negative")
    if isinstance(dos, DosTrace):
        mask = sample_mask(dos, delta_seconds, K)
    else:
        mask = np.asarray(dos, dtype=bool)
        if mask.shape != (K + 1,):
            raise ValueError(f"DoS mask must have length {K + 1}")
    n = ctx.n
    xs = np.empty((K + 1, n))
    theta_col = np.empty(K + 1)
    err = np.empty(K + 1)
    qx = np.zeros(K + 1)
    qy = np.zeros(K + 1)
    sat = np.zeros(K + 1, dtype=bool)
    state = initial_state(ctx, x0, dual=dual)
    z = _stack(state.dx, state.dy)
    zh = _stack(state.dx_hat, state.dy_hat)
    zh_enc = zh.copy() if dual else zh
    theta0, g1 = ctx.design.theta0, ctx.design.gamma1
    zooms = 0
    theta = theta0
    shift = ctx.origin - ctx.x_star
    sat_level = ctx.levels + 0.5
    xs[0] = ctx.origin + z[:n]
    theta_col[0] = theta
    e0 = z[:n] + shift
    err[0] = math.sqrt(float(e0 @ e0))
    k = 0
    try:
        while k < K:
            if mask[k] and mask[k + 1] and k > 0:
                j = k + 1
                while j < K and mask[j + 1]:
                    j += 1
                # rows k+1..j copy row k
                sl = slice(k + 1, j + 1)
                xs[sl] = xs[k]
                theta_col[sl] = theta_col[k]
                err[sl] = err[k]
                qx[sl] = qx[k]
                qy[sl] = qy[k]
                sat[sl] = sat[k]
                k = j
                continue
            dos_next = bool(mask[k + 1])
            z, zh, zh_enc, mag = _advance(ctx, z, zh, zh_enc, theta, bool(mask[k]), dos_next)
            k += 1
            if dual and not np.array_equal(zh, zh_enc):
                raise DesyncError(f"encoder/decoder hats diverged at step {k}")
            if not dos_next:
                zooms += 1
                theta = theta0 * g1 ** zooms
                if theta < THETA_FLOOR:
                    raise NumericalExhaustion(
                        f"theta underflow after {zooms} zoom-ins at step {k}: "
                        f"{theta:.3e} < {THETA_FLOOR:.0e}")
            xs[k] = ctx.origin + z[:n]
            theta_col[k] = theta
            e = z[:n] + shift
            err[k] = math.sqrt(float(e @ e))
            qx[k] = mag[:n].max()
            qy[k] = mag[n:].max()
            sat[k] = bool((mag >= sat_level).any())
    except NumericalExhaustion as exc:
        exc.steps_completed = k
        raise
    tr = SimTrace(dos=mask.copy(), x=xs, theta=theta_col, err_ne=err, max_qarg_x=qx,
                  max_qarg_y=qy, saturated=sat)
    dx, dy = _unstack(z, n)
    dxh, dyh = _unstack(zh, n)
    enc = _unstack(zh_enc, n) if dual else (None, None)
    final = NetworkState(dx=dx, dy=dy, dx_hat=dxh, dy_hat=dyh,
                         scaling=ScalingState(theta0, g1, zooms=zooms), step_k=K,
                         origin=ctx.origin, enc_x_hat=enc[0], enc_y_hat=enc[1])
    return SimResult(trace=tr, summary=summarize(tr, ctx), final_state=final)


def summarize(tr: SimTrace, ctx: SimContext) -> dict:
    hits = np.flatnonzero(tr.saturated)
    return {
        "steps": int(tr.dos.size - 1),
        "initial_err_ne": float(tr.err_ne[0]),
        "final_err_ne": float(tr.err_ne[-1]),
        "first_saturation": int(hits[0]) if hits.size else None,
        "saturation_events": int(hits.size),
        "min_theta": float(tr.theta.min()),
        "successes": int(np.count_nonzero(~tr.dos)),
        "max_qarg_x": float(tr.max_qarg_x.max()),
        "max_qarg_y": float(tr.max_qarg_y.max()),
        "range_x": ctx.q_x.range_limit,
        "range_y": ctx.q_y.range_limit,
        "frame": ctx.frame,
    }


__all__ = [
    "CASES", "DesyncError", "ErrorState", "NetworkState", "NumericalExhaustion",
    "SimContext", "SimResult", "SimTrace", "StepRecord", "control_input", "decode",
    "encode", "error_state", "initial_state", "make_context", "oracle_step", "read_csv",
    "run", "scaled_coordinates", "step", "summarize",
]
