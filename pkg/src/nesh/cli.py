"""Command-line entry point: ``nesh tune | gen-dos | run | verify``.

Exit codes: 0 success, 1 runtime failure (numerical exhaustion or a failed
verification suite), 2 infeasible or invalid input, 3 quantizer saturation,
4 resilience condition violated (takes precedence over 3).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import checks
from .config import ConfigError, RunConfig, design_block, load, resolve_design
from .dos import average_rates, certify, generate, read_trace, resilience_ratio, write_trace
from .game import GameError, constants
from .quantization import NumericalExhaustion
from .sim import make_context, run
from .topology import TopologyError
from .tuner import TunerError, delta_limits

EXIT_OK, EXIT_RUNTIME, EXIT_INFEASIBLE, EXIT_SATURATED, EXIT_RESILIENCE = 0, 1, 2, 3, 4

log = logging.getLogger("nesh")

# multiples of the fitted averages at which the window certificate is reported
TAU_D_FACTORS = (1.0, 0.75, 0.5)
T_FACTORS = (1.0, 0.99, 0.95)


def _setup_logging() -> None:
    level = os.environ.get("NESH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _config(args) -> RunConfig:
    cfg = load(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg.dos.seed = args.seed
        cfg.sim.seed = args.seed
    if getattr(args, "decimation", None) is not None:
        if args.decimation < 1:
            raise ConfigError("--decimation must be >= 1")
        cfg.sim.record_decimation = args.decimation
    return cfg


def _kv(key: str, value) -> None:
    print(f"{key}={value}")


def cmd_tune(args) -> int:
    cfg = _config(args)
    game, topo = cfg.game.build(), cfg.topology.build()
    params = resolve_design(cfg, game, topo)
    gc = constants(game)
    _kv("h", params.h)
    _kv("delta", params.delta)
    if params.rho_hbar is not None:
        _kv("norm_h", params.norm_h)
        _kv("rho_hbar", params.rho_hbar)
    _kv("gamma1", params.gamma1)
    if params.gamma_decay is not None:
        _kv("gamma", params.gamma_decay)
        _kv("c_gamma", params.c_gamma)
        _kv("c_bound", params.c_bound)
    _kv("theta0", params.theta0)
    _kv("r_x", params.r_x)
    _kv("r_y", params.r_y)
    _kv("l", gc.lipschitz_l)
    _kv("mu", gc.monotonicity_mu)
    if params.norm_h is not None:
        n = game.n_players
        for variant in ("l", "mu"):
            _kv(f"delta_limit_b[{variant}]", delta_limits(params.norm_h, gc.lipschitz_l,
                                                          gc.monotonicity_mu, n, variant)[1])
    print("# mergeable config section")
    print(yaml.safe_dump(design_block(params), sort_keys=False), end="")
    return EXIT_OK


def _report_certificate(trace, delta: float) -> None:
    tau_avg, t_avg = average_rates(trace)
    _kv("dos_measure", trace.total_duration)
    _kv("dos_intervals", trace.n_transitions)
    _kv("tau_d_avg", tau_avg)
    _kv("T_avg", t_avg)
    if trace.n_transitions == 0:
        _kv("resilience_ratio", 0.0)
        _kv("resilient", "yes (no DoS)")
        return
    for f in TAU_D_FACTORS:
        tau = tau_avg * f
        if math.isfinite(t_avg) and t_avg > 1:
            _kv(f"eta[tau_d={tau:.6g}]", certify(trace, tau, t_avg).eta)
    for f in T_FACTORS:
        t = t_avg * f
        if t > 1:
            _kv(f"kappa[T={t:.6g}]", certify(trace, tau_avg, t).kappa)
    ratio = resilience_ratio(tau_avg, t_avg, delta)
    _kv("resilience_ratio", ratio)
    _kv("resilient", "yes" if ratio < 1 else "no")


def cmd_gen_dos(args) -> int:
    cfg = _config(args)
    horizon = cfg.sim.horizon_seconds
    trace = generate(cfg.dos.duty, cfg.dos.period, horizon, cfg.dos.seed)
    out = Path(args.out or "dos_trace.txt")
    write_trace(trace, out)
    _kv("trace", out)
    _kv("horizon", horizon)
    _report_certificate(trace, cfg.sim.delta_seconds)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    game, topo = cfg.game.build(), cfg.topology.build()
    params = resolve_design(cfg, game, topo)
    if args.trace:
        if not Path(args.trace).exists():
            raise ConfigError(f"trace file {args.trace} does not exist")
        trace = read_trace(args.trace)
    else:
        trace = cfg.dos.build(cfg.sim.horizon_seconds, cfg.base_dir)
    tau_avg, t_avg = average_rates(trace)
    ratio = resilience_ratio(tau_avg, t_avg, cfg.sim.delta_seconds)
    if ratio >= 1:
        log.warning("1/T + delta/tau_d = %.6f >= 1: no convergence guarantee, "
                    "running anyway", ratio)
    ctx = make_context(game, topo, params, frame=cfg.sim.frame)
    try:
        result = run(ctx, trace, cfg.sim.delta_seconds, cfg.sim.horizon_steps, cfg.sim.x0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.out:
        result.trace.write_csv(args.out, cfg.sim.record_decimation)
        _kv("csv", args.out)
    s = result.summary
    for key in ("steps", "initial_err_ne", "final_err_ne", "min_theta", "successes",
                "max_qarg_x", "range_x", "max_qarg_y", "range_y", "frame"):
        _kv(key, s[key])
    _kv("resilience_ratio", ratio)
    sat = s["first_saturation"]
    _kv("saturated", "never" if sat is None else f"first@{sat} events={s['saturation_events']}")
    if ratio >= 1:
        return EXIT_RESILIENCE
    return EXIT_SATURATED if sat is not None else EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    game, topo = cfg.game.build(), cfg.topology.build()
    params = resolve_design(cfg, game, topo)
    rng = np.random.default_rng(cfg.sim.seed)
    x0 = cfg.sim.x0
    worst_oracle, freeze_bad, sync_ok = 0.0, 0, True
    theta_err, hold_bad = 0.0, 0
    for frame in ("ne", "absolute"):
        ctx = make_context(game, topo, params, frame=frame)
        for _ in range(args.runs):
            mask = checks.random_mask(rng, args.steps)
            worst_oracle = max(worst_oracle, checks.oracle_deviation(ctx, mask, x0))
            freeze_bad += checks.freeze_violations(ctx, mask, x0)
            sync_ok &= checks.dual_sync_ok(ctx, mask, x0)
            tr = run(ctx, mask, cfg.sim.delta_seconds, args.steps, x0).trace
            theta_err = max(theta_err, checks.theta_identity_error(tr, params.theta0,
                                                                   params.gamma1))
            hold_bad += checks.theta_hold_violations(tr)
    results = [("oracle_max_deviation", worst_oracle, worst_oracle < 1e-9),
               ("freeze_violations", freeze_bad, freeze_bad == 0),
               ("dual_state_sync", sync_ok, sync_ok),
               ("theta_identity_rel_error", theta_err, theta_err < 1e-12),
               ("theta_hold_violations", hold_bad, hold_bad == 0)]
    for name, value, ok in results:
        print(f"{name}={value} {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if all(ok for *_, ok in results) else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nesh", description="Quantized distributed NE seeking "
                                "under DoS: tuning, trace generation, simulation.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="YAML run configuration")
        sp.add_argument("--seed", type=int, help="override dos.seed and sim.seed")
        return sp

    common(sub.add_parser("tune", help="synthesize design constants"))
    g = common(sub.add_parser("gen-dos", help="generate and certify a DoS trace"))
    g.add_argument("--out", type=Path, help="trace file to write (default dos_trace.txt)")
    r = common(sub.add_parser("run", help="simulate and write a CSV trace"))
    r.add_argument("--trace", type=Path, help="DoS trace file (overrides dos section)")
    r.add_argument("--out", type=Path, help="CSV output path")
    r.add_argument("--decimation", type=int, help="keep every N-th row in the CSV")
    v = common(sub.add_parser("verify", help="run the invariant suites"))
    v.add_argument("--steps", type=int, default=200, help="steps per verification run")
    v.add_argument("--runs", type=int, default=5, help="random DoS patterns per frame")
    return p


_COMMANDS = {"tune": cmd_tune, "gen-dos": cmd_gen_dos, "run": cmd_run, "verify": cmd_verify}


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, GameError, TopologyError, TunerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalExhaustion as exc:
        print(f"numerical exhaustion: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
