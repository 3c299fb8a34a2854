"""Time-constrained DoS traces: representation, generation, certification.

A trace is a set of DoS intervals ``[h_q, h_q + tau_q)``; a zero-length
interval is a pulse covering exactly ``{h_q}``. Certification fixes the
attacker's average dwell time ``tau_d`` and duration ratio ``T`` and extracts
the tightest slack constants ``eta`` and ``kappa`` such that

    n(tau, t)   <= eta   + (t - tau) / tau_d
    |Xi(tau, t)| <= kappa + (t - tau) / T

over every window of the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ResilienceError(ValueError):
    """1/T + delta/tau_d >= 1: beyond the maximum tolerable DoS level."""


@dataclass(frozen=True, eq=False)
class DosTrace:
    starts: np.ndarray
    durations: np.ndarray
    horizon: float

    def __post_init__(self):
        s = np.asarray(self.starts, dtype=float).reshape(-1)
        d = np.asarray(self.durations, dtype=float).reshape(-1)
        h = float(self.horizon)
        if s.shape != d.shape:
            raise ValueError("starts and durations must have equal length")
        if not h > 0:
            raise ValueError("horizon must be positive")
        if np.any(d < 0) or np.any(s < 0) or np.any(s + d > h):
            raise ValueError("intervals must be non-negative and lie within [0, horizon]")
        s, d = _normalize(s, d)
        s.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "starts", s)
        object.__setattr__(self, "durations", d)
        object.__setattr__(self, "horizon", h)

    @classmethod
    def from_intervals(cls, intervals, horizon: float) -> "DosTrace":
        arr = np.asarray(list(intervals), dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], horizon)

    @classmethod
    def empty(cls, horizon: float) -> "DosTrace":
        return cls(np.empty(0), np.empty(0), horizon)

    @classmethod
    def always_on(cls, horizon: float) -> "DosTrace":
        # the closing pulse keeps the final instant covered as well
        return cls([0.0, horizon], [horizon, 0.0], horizon)

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return list(zip(self.starts.tolist(), self.durations.tolist()))

    @property
    def n_transitions(self) -> int:
        return int(self.starts.size)

    @property
    def total_duration(self) -> float:
        return float(self.durations.sum())

    def __eq__(self, other):
        if not isinstance(other, DosTrace):
            return NotImplemented
        return (self.horizon == other.horizon
                and np.array_equal(self.starts, other.starts)
                and np.array_equal(self.durations, other.durations))


def _normalize(starts: np.ndarray, durations: np.ndarray):
    order = np.lexsort((-durations, starts))
    out: list[list[float]] = []  # [start, end]
    for s, d in zip(starts[order], durations[order]):
        e = s + d
        if out:
            ls, le = out[-1]
            if le == ls and s == ls:
                out[-1] = [s, e]
            elif le > ls and (s < le or (s == le and e > s)):
                out[-1][1] = max(le, e)
            else:
                out.append([s, e])
        else:
            out.append([s, e])
        # a pulse replaced by an interval may now abut its predecessor
        while len(out) >= 2:
            (ps, pe), (ls, le) = out[-2], out[-1]
            if pe > ps and le > ls and ls <= pe:
                out[-2][1] = max(pe, le)
                out.pop()
            else:
                break
    if not out:
        return np.empty(0), np.empty(0)
    arr = np.asarray(out)
    return arr[:, 0].copy(), arr[:, 1] - arr[:, 0]


def active_mask(trace: DosTrace, times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    idx = np.searchsorted(trace.starts, t, side="right") - 1
    ok = idx >= 0
    safe = np.where(ok, idx, 0)
    if trace.starts.size == 0:
        return np.zeros(t.shape, dtype=bool)
    s = trace.starts[safe]
    d = trace.durations[safe]
    return ok & ((t < s + d) | ((d == 0) & (t == s)))


def is_active(trace: DosTrace, t: float) -> bool:
    if not 0 <= t <= trace.horizon:
        raise ValueError(f"time {t} outside horizon [0, {trace.horizon}]")
    return bool(active_mask(trace, [t])[0])


def sample_mask(trace: DosTrace, delta: float, k: int) -> np.ndarray:
    """DoS status at the sampling instants ``m * delta`` for ``m = 0..k``."""
    if k * delta > trace.horizon * (1 + 1e-12):
        raise ValueError(f"{k} steps of {delta}s exceed the trace horizon {trace.horizon}s")
    return active_mask(trace, np.arange(k + 1) * delta)


def generate(duty_cycle_target: float, mean_period: float, horizon: float,
             seed: int) -> DosTrace:
    """Random off/on DoS signal with a target duty cycle and mean period.

    Each cycle draws its period uniformly in ``[0.5, 1.5] * mean_period`` and
    its on-fraction uniformly around ``duty_cycle_target`` (spread kept below
    the gap to 1 so every cycle has a DoS-free span). Cycles start DoS-free.
    """
    if not 0 <= duty_cycle_target < 1:
        raise ValueError("duty cycle must lie in [0, 1): mean on-time would exceed the period")
    if not (mean_period > 0 and horizon > 0):
        raise ValueError("mean period and horizon must be positive")
    if duty_cycle_target == 0:
        return DosTrace.empty(horizon)
    rng = np.random.default_rng(seed)
    spread = min(0.5, 0.5 * (1 - duty_cycle_target) / duty_cycle_target)
    starts, durs = [], []
    t = 0.0
    while t < horizon:
        period = mean_period * rng.uniform(0.5, 1.5)
        frac = duty_cycle_target * rng.uniform(1 - spread, 1 + spread)
        on_start = t + (1 - frac) * period
        if on_start >= horizon:
            break
        end = min(on_start + frac * period, horizon)
        starts.append(on_start)
        durs.append(end - on_start)
        t = on_start + frac * period
    return DosTrace(np.asarray(starts), np.asarray(durs), horizon)


@dataclass(frozen=True)
class DosParams:
    eta: float
    tau_d: float
    kappa: float
    t_param: float

    def __post_init__(self):
        if not self.tau_d > 0:
            raise ValueError("tau_d must be positive")
        if not self.t_param > 1:
            raise ValueError("T must exceed 1 (DoS cannot be always active)")
        if self.eta < 0 or self.kappa < 0:
            raise ValueError("eta and kappa must be non-negative")

    def resilience_ratio(self, delta: float) -> float:
        return 1.0 / self.t_param + delta / self.tau_d


def measure_upto(trace: DosTrace, p) -> np.ndarray:
    """|Xi(0, p)|: DoS measure accumulated on [0, p]."""
    p = np.asarray(p, dtype=float)
    if trace.starts.size == 0:
        return np.zeros(p.shape)
    cum = np.concatenate(([0.0], np.cumsum(trace.durations)))
    idx = np.searchsorted(trace.starts, p, side="right") - 1
    ok = idx >= 0
    safe = np.where(ok, idx, 0)
    part = np.clip(p - trace.starts[safe], 0.0, trace.durations[safe])
    return np.where(ok, cum[safe] + part, 0.0)


def _candidates(trace: DosTrace, resolution: float | None) -> np.ndarray:
    pts = [trace.starts, trace.starts + trace.durations, [0.0, trace.horizon]]
    if resolution is not None:
        if not resolution > 0:
            raise ValueError("resolution must be positive")
        pts.append(np.arange(0.0, trace.horizon, resolution))
    return np.unique(np.concatenate(pts))


def _max_window_gain(upper: np.ndarray, lower: np.ndarray) -> float:
    # max over m' <= m of upper[m] - lower[m']
    return float(np.max(upper - np.minimum.accumulate(lower)))


def certify(trace: DosTrace, tau_d: float, t_param: float,
            resolution: float | None = None) -> DosParams:
    """Tightest (eta, kappa) for the given (tau_d, T).

    Window extrema sit at interval endpoints, so the endpoint scan is exact;
    ``resolution`` adds a uniform grid of extra candidate window ends.
    """
    if not tau_d > 0 or not t_param > 1:
        raise ValueError("need tau_d > 0 and T > 1")
    p = _candidates(trace, resolution)
    n_le = np.searchsorted(trace.starts, p, side="right")
    n_lt = np.searchsorted(trace.starts, p, side="left")
    eta = _max_window_gain(n_le - p / tau_d, n_lt - p / tau_d)
    x = measure_upto(trace, p)
    kappa = _max_window_gain(x - p / t_param, x - p / t_param)
    return DosParams(eta=max(eta, 0.0), tau_d=float(tau_d),
                     kappa=max(kappa, 0.0), t_param=float(t_param))


def average_rates(trace: DosTrace) -> tuple[float, float]:
    """(tau_d, T) from totals over the horizon: horizon/n and horizon/|Xi|."""
    n = trace.n_transitions
    tot = trace.total_duration
    tau_d = trace.horizon / n if n else math.inf
    t_param = trace.horizon / tot if tot > 0 else math.inf
    return tau_d, t_param


def resilience_ratio(tau_d: float, t_param: float, delta: float) -> float:
    return 1.0 / t_param + delta / tau_d


def ts_lower_bound(params: DosParams, delta: float, k: int) -> float:
    ratio = params.resilience_ratio(delta)
    if ratio >= 1:
        raise ResilienceError(
            f"1/T + delta/tau_d = {ratio:.6f} >= 1: beyond maximum resilience")
    return (1 - ratio) * k - (params.kappa + params.eta * delta) / delta


def success_counts(trace: DosTrace, delta: float, k: int) -> np.ndarray:
    """Cumulative successful-instant counts: entry m is T_S over {0..m}."""
    return np.cumsum(~sample_mask(trace, delta, k))


def count_successes(trace: DosTrace, delta: float, k: int) -> int:
    return int(success_counts(trace, delta, k)[-1])


def write_trace(trace: DosTrace, path) -> None:
    lines = [f"# horizon={trace.horizon!r}"]
    lines += [f"{s!r} {d!r}" for s, d in trace.intervals]
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path) -> DosTrace:
    horizon = None
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key.strip() == "horizon":
                horizon = float(val)
            continue
        s, d = line.split()
        rows.append((float(s), float(d)))
    if horizon is None:
        raise ValueError(f"{path}: missing '# horizon=<seconds>' header")
    return DosTrace.from_intervals(rows, horizon)
