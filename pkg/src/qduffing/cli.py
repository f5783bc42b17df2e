"""Command-line interface: simulate / lyapunov-sweep / classical / wigner."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .classical import ClassicalParams, ClassicalState, classical_lyapunov, \
    integrate_classical, poincare_section
from .control import PhaseController, strategy_from_spec
from .fock import FockState, TruncationError, centroid, coherent_state, \
    tail_weight, wigner
from .runner import ConfigError, ExperimentConfig, config_from_mapping, \
    load_snapshot_json, parse_config, run_sweep, save_state_json, \
    write_grid_csv, write_table_csv
from .sse import HomodyneRecord, NoiseStream, SimParams, advance_state, \
    hamiltonian_band_coeffs, record_homodyne

__all__ = ["cli_dispatch", "main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qduffing",
        description="Monitored quantum Duffing oscillator: trajectories, "
                    "adaptive measurement control, Lyapunov exponents.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="single conditional trajectory with "
                                          "series and snapshots")
    sim.add_argument("--beta", type=float, default=0.3)
    sim.add_argument("--strategy", default="fixed:0",
                     help="fixed:ANGLE | adaptive-parallel | adaptive-perpendicular")
    sim.add_argument("--t-end", type=float, default=100.0, metavar="CYCLES",
                     help="duration in drive cycles (default 100)")
    sim.add_argument("--seed", type=int, default=12345)
    sim.add_argument("--dt", type=float, default=1e-3)
    sim.add_argument("--scheme", default="stratonovich-midpoint",
                     choices=["ito-euler", "stratonovich-midpoint"])
    sim.add_argument("--n-fock", type=int, default=64)
    sim.add_argument("--update-interval", type=int, default=1)
    sim.add_argument("--record-every", type=int, default=10, metavar="STEPS",
                     help="series row cadence in integration steps")
    sim.add_argument("--snapshot-every", type=float, default=10.0, metavar="CYCLES",
                     help="state/Wigner snapshot cadence (0 disables)")
    sim.add_argument("--out", default="qduffing-sim")

    sweep = sub.add_parser("lyapunov-sweep", help="ensemble Lyapunov estimates "
                                                  "over (beta, strategy, seed)")
    sweep.add_argument("--config", metavar="PATH", help="key = value config file")
    sweep.add_argument("--out", metavar="DIR")
    sweep.add_argument("--beta", metavar="LIST",
                       help="comma-separated, e.g. 0.2,0.3,0.4")
    sweep.add_argument("--strategy", metavar="LIST",
                       help="comma-separated strategy specs")
    sweep.add_argument("--seeds", type=int, metavar="K")
    sweep.add_argument("--master-seed", type=int, metavar="S")
    sweep.add_argument("--t-end", type=float, metavar="CYCLES")
    sweep.add_argument("--scheme", choices=["ito-euler", "stratonovich-midpoint"])
    sweep.add_argument("--dt", type=float)
    sweep.add_argument("--update-interval", type=int)

    cla = sub.add_parser("classical", help="classical baseline: Poincare section "
                                           "and largest Lyapunov exponent")
    cla.add_argument("--gamma", type=float, default=0.10)
    cla.add_argument("--g", type=float, default=0.3)
    cla.add_argument("--omega", type=float, default=1.0)
    cla.add_argument("--beta", type=float, default=0.3)
    cla.add_argument("--t-end", type=float, default=5000.0, metavar="PERIODS")
    cla.add_argument("--poincare-periods", type=int, default=1200)
    cla.add_argument("--out", default="qduffing-classical")

    wig = sub.add_parser("wigner", help="render a stored state snapshot to a "
                                        "Wigner grid CSV")
    wig.add_argument("state", metavar="SNAPSHOT_JSON",
                     help="pure-state or density-matrix snapshot")
    wig.add_argument("--out", default="wigner.csv")
    wig.add_argument("--span", type=float, default=None,
                     help="half-width of the (q, p) grid")
    wig.add_argument("--points", type=int, default=201)
    return parser


def _cmd_simulate(args) -> int:
    params = SimParams(beta=args.beta, N=args.n_fock, dt=args.dt,
                       scheme=args.scheme)
    strategy = strategy_from_spec(args.strategy,
                                  update_interval=args.update_interval)
    os.makedirs(args.out, exist_ok=True)
    bands = hamiltonian_band_coeffs(params.N, params)
    controller = PhaseController(strategy, params.N)
    noise = NoiseStream(args.seed, params.dt)
    c = coherent_state(params.well_alpha, params.N).coeffs.copy()

    steps = int(round(args.t_end * params.period / params.dt))
    snap_steps = (int(round(args.snapshot_every * params.period / params.dt))
                  if args.snapshot_every > 0 else 0)
    record = HomodyneRecord()  # increments integrated over each record bin
    rows = []
    snapshots = []
    interval = strategy.update_interval
    phi = strategy.phi
    status = 0
    hom_sum = 0.0
    try:
        for step in range(steps):
            t = step * params.dt
            if strategy.adaptive and step % interval == 0:
                phi = controller.tick(FockState(c), step)
            dW = noise.increments(1)
            hom_sum += record_homodyne(FockState(c), phi, dW[0], params)
            advance_state(c, t, dW, phi, params, bands)
            if (step + 1) % args.record_every == 0:
                s = FockState(c)
                q, p = centroid(s)
                rows.append(((step + 1) * params.dt, q, p, phi, tail_weight(s)))
                record.append((step + 1) * params.dt, hom_sum)
                hom_sum = 0.0
            if snap_steps and (step + 1) % snap_steps == 0:
                snapshots.append((step + 1, FockState(c.copy())))
    except (TruncationError, RuntimeError) as exc:
        print(f"simulate aborted: {exc}", file=sys.stderr)
        status = 1

    series_path = os.path.join(args.out, "series.csv")
    write_table_csv(series_path, ["t", "q", "p", "phi", "tail_weight"], rows)
    files = ["series.csv"]
    hom_path = os.path.join(args.out, "homodyne.csv")
    write_table_csv(hom_path, ["t", "integrated_i_dt"],
                    np.column_stack([record.times, record.increments])
                    if len(record) else np.empty((0, 2)))
    files.append("homodyne.csv")
    span = np.sqrt(2.0 * params.N) + 2.0
    grid = np.linspace(-span, span, 161)
    for step_k, snap in snapshots:
        cycle = step_k * params.dt / params.period
        sp = f"state_cycle{cycle:07.1f}.json"
        save_state_json(os.path.join(args.out, sp), snap,
                        meta={"t": step_k * params.dt, "beta": params.beta})
        wp = f"wigner_cycle{cycle:07.1f}.csv"
        write_grid_csv(os.path.join(args.out, wp), wigner(snap, grid, grid),
                       grid, grid)
        files += [sp, wp]
    files.append("manifest.json")
    manifest = {"command": "simulate", "status": status,
                "config": vars(args) | {"strategy": strategy.label()},
                "files": sorted(files)}
    with open(os.path.join(args.out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    print(f"wrote {len(files)} files to {args.out}")
    return status


def _cmd_sweep(args) -> int:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = parse_config(fh.read())
    else:
        config = ExperimentConfig()
    overrides = {}
    if args.beta:
        overrides["betas"] = tuple(float(b) for b in args.beta.split(","))
    if args.strategy:
        overrides["strategies"] = tuple(s.strip() for s in args.strategy.split(","))
    if args.seeds is not None:
        overrides["n_seeds"] = args.seeds
    if args.master_seed is not None:
        overrides["master_seed"] = args.master_seed
    if args.t_end is not None:
        overrides["t_end_cycles"] = args.t_end
    if args.out:
        overrides["out_dir"] = args.out
    if args.update_interval is not None:
        overrides["update_interval"] = args.update_interval
    param_over = {}
    if args.scheme:
        param_over["scheme"] = args.scheme
    if args.dt is not None:
        param_over["dt"] = args.dt
    from dataclasses import replace
    if param_over:
        overrides["params"] = replace(config.params, **param_over)
    config = replace(config, **overrides) if overrides else config
    # revalidate the merged configuration
    echo = {"betas": config.betas, "strategies": config.strategies,
            "master_seed": config.master_seed, "n_seeds": config.n_seeds,
            "t_end_cycles": config.t_end_cycles,
            "transient_cycles": config.transient_cycles,
            "reset_period_cycles": config.reset_period_cycles,
            "update_interval": config.update_interval,
            "out_dir": config.out_dir,
            "snapshot_cycles": config.snapshot_cycles,
            "Gamma": config.params.Gamma, "g": config.params.g,
            "Omega": config.params.Omega, "N": config.params.N,
            "dt": config.params.dt, "d0": config.params.d0,
            "scheme": config.params.scheme}
    config = config_from_mapping(echo)
    manifest = run_sweep(config)
    failed = [j for j in manifest.jobs if j["status"] != "ok"]
    print(f"sweep finished: {len(manifest.jobs) - len(failed)}/{len(manifest.jobs)} "
          f"jobs ok, outputs in {config.out_dir}")
    for line in manifest.warnings:
        print(f"  warning: {line}", file=sys.stderr)
    return 0 if not failed else 1


def _cmd_classical(args) -> int:
    params = ClassicalParams(Gamma=args.gamma, g=args.g, Omega=args.omega,
                             beta=args.beta)
    os.makedirs(args.out, exist_ok=True)
    lam = classical_lyapunov(params, t_end=args.t_end * params.period)
    n_periods = max(args.poincare_periods, 300)
    traj = integrate_classical(ClassicalState(1.0 / params.beta, 0.0, 0.0),
                               params, t_end=n_periods * params.period,
                               store_every=10)
    pts = poincare_section(traj, discard_periods=200)
    write_table_csv(os.path.join(args.out, "poincare.csv"),
                    ["beta_x", "beta_v"], pts)
    summary = {"lambda_cl": lam, "gamma": params.Gamma, "g": params.g,
               "omega": params.Omega, "beta": params.beta,
               "t_end_periods": args.t_end,
               "poincare_points": int(pts.shape[0])}
    with open(os.path.join(args.out, "classical.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(f"lambda_cl = {lam:.4f}")
    print(f"wrote poincare.csv ({pts.shape[0]} points) and classical.json "
          f"to {args.out}")
    return 0


def _cmd_wigner(args) -> int:
    state = load_snapshot_json(args.state)
    dim = state.dim if hasattr(state, "dim") else state.shape[0]
    span = args.span if args.span else np.sqrt(2.0 * dim) + 2.0
    grid = np.linspace(-span, span, args.points)
    W = wigner(state, grid, grid)
    write_grid_csv(args.out, W, grid, grid)
    print(f"wrote {args.out} ({args.points}x{args.points} grid, span +-{span:g})")
    return 0


def cli_dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "lyapunov-sweep":
            return _cmd_sweep(args)
        if args.command == "classical":
            return _cmd_classical(args)
        if args.command == "wigner":
            return _cmd_wigner(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TruncationError, RuntimeError) as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return 1
    return 2


def main():
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
