"""Experiment configuration, deterministic seeding, sweep orchestration, export.

A sweep is a grid of (beta, strategy, seed) jobs.  Each job derives its own
64-bit noise seed from the master seed and its position in the grid, runs a
twin-trajectory estimate, and feeds one row of the per-strategy summary.
Jobs execute on a bounded process pool; results are committed in job-index
order so outputs are byte-identical no matter the parallelism degree.

Outputs: one CSV of per-window series per job, a sweep summary JSON
(beta, strategy, mean lambda, twice the standard error), and a manifest
listing every emitted file along with per-job status.  The manifest is
written even when jobs fail.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .control import strategy_from_spec
from .fock import FockState, wigner
from .lyapunov import LyapunovEstimate, run_twin
from .sse import SimParams

__all__ = [
    "ExperimentConfig",
    "RunManifest",
    "parse_config",
    "config_from_mapping",
    "derive_seed",
    "run_sweep",
    "accumulate_ensemble_state",
    "write_table_csv",
    "write_grid_csv",
    "save_state_json",
    "load_state_json",
]

WORKERS_ENV = "QDUFFING_WORKERS"

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ExperimentConfig:
    params: SimParams = SimParams()
    betas: tuple = (0.3,)
    strategies: tuple = ("adaptive-parallel", "adaptive-perpendicular",
                         "fixed:0", "fixed:pi/2")
    master_seed: int = 12345
    n_seeds: int = 10
    t_end_cycles: float = 1000.0
    transient_cycles: float = 50.0
    reset_period_cycles: float = 1.0
    update_interval: int = 1
    out_dir: str = "qduffing-out"
    snapshot_cycles: tuple = ()

    def job_grid(self):
        """Deterministic job enumeration: beta-major, then strategy, then seed."""
        jobs = []
        idx = 0
        for beta in self.betas:
            for strat in self.strategies:
                for k in range(self.n_seeds):
                    jobs.append((idx, beta, strat, k))
                    idx += 1
        return jobs


_CONFIG_KEYS = {
    "beta": ("betas", "list of floats"),
    "strategy": ("strategies", "list of strategy specs"),
    "gamma": ("Gamma", "float"),
    "g": ("g", "float"),
    "omega": ("Omega", "float"),
    "n_fock": ("N", "int"),
    "dt": ("dt", "float"),
    "d0": ("d0", "float"),
    "scheme": ("scheme", "string"),
    "seeds": ("n_seeds", "int"),
    "master_seed": ("master_seed", "int"),
    "t_end_cycles": ("t_end_cycles", "float"),
    "transient_cycles": ("transient_cycles", "float"),
    "reset_period_cycles": ("reset_period_cycles", "float"),
    "update_interval": ("update_interval", "int"),
    "out": ("out_dir", "string"),
    "snapshot_cycles": ("snapshot_cycles", "list of floats"),
}


class ConfigError(ValueError):
    pass


def _parse_scalar(key, raw, kind):
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        return raw
    except ValueError:
        raise ConfigError(f"key {key!r}: expected {kind}, got {raw!r}") from None


def _parse_value(key, raw, kind):
    if kind.startswith("list"):
        raw = raw.strip()
        if not (raw.startswith("[") and raw.endswith("]")):
            raise ConfigError(f"key {key!r}: expected a [..] list, got {raw!r}")
        items = [s.strip() for s in raw[1:-1].split(",") if s.strip()]
        if "float" in kind:
            return tuple(_parse_scalar(key, s, "float") for s in items)
        return tuple(items)
    return _parse_scalar(key, raw, kind)


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat key = value lines into a validated ExperimentConfig.

    Unknown keys, type mismatches, and parameter-invariant violations raise
    ConfigError naming the offending key.  An empty document yields the
    canonical defaults.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        field_name, kind = _CONFIG_KEYS[key]
        values[field_name] = _parse_value(key, raw, kind)
    return config_from_mapping(values)


def config_from_mapping(values: dict) -> ExperimentConfig:
    """Build and validate a config from parsed field values."""
    param_fields = {k: values.pop(k) for k in ("Gamma", "g", "Omega", "N", "dt", "d0", "scheme")
                    if k in values}
    try:
        params = replace(SimParams(), **param_fields)
    except ValueError as exc:
        raise ConfigError(f"invalid simulation parameter: {exc}") from None
    config = ExperimentConfig(params=params, **values)
    if not config.betas:
        raise ConfigError("key 'beta': list must not be empty")
    for b in config.betas:
        if b <= 0:
            raise ConfigError(f"key 'beta': all values must be > 0, got {b}")
    for s in config.strategies:
        strategy_from_spec(s)  # raises on malformed specs
    if config.n_seeds < 1:
        raise ConfigError("key 'seeds': must be >= 1")
    if config.t_end_cycles <= 0:
        raise ConfigError("key 't_end_cycles': must be > 0")
    if config.transient_cycles < 0:
        raise ConfigError("key 'transient_cycles': must be >= 0")
    if config.reset_period_cycles <= 0:
        raise ConfigError("key 'reset_period_cycles': must be > 0")
    if config.update_interval < 1:
        raise ConfigError("key 'update_interval': must be >= 1")
    return config


def derive_seed(master_seed: int, job_index: int) -> int:
    """SplitMix64 stream seed: finalizer of master + (index+1) * golden gamma.

    The finalizer is a bijection on 64-bit integers and the pre-mix is
    injective in the index, so distinct job indices always map to distinct
    seeds for any fixed master seed.
    """
    x = (master_seed + (job_index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


@dataclass
class RunManifest:
    config: dict
    version: str
    jobs: list = field(default_factory=list)
    files: list = field(default_factory=list)
    wall_time_s: float = 0.0
    warnings: list = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "config": self.config,
            "version": self.version,
            "jobs": self.jobs,
            "files": sorted(self.files),
            "wall_time_s": self.wall_time_s,
            "warnings": self.warnings,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _config_echo(config: ExperimentConfig) -> dict:
    p = config.params
    return {
        "beta": list(config.betas),
        "strategy": list(config.strategies),
        "gamma": p.Gamma, "g": p.g, "omega": p.Omega, "n_fock": p.N,
        "dt": p.dt, "d0": p.d0, "scheme": p.scheme,
        "seeds": config.n_seeds, "master_seed": config.master_seed,
        "t_end_cycles": config.t_end_cycles,
        "transient_cycles": config.transient_cycles,
        "reset_period_cycles": config.reset_period_cycles,
        "update_interval": config.update_interval,
        "out": config.out_dir,
        "snapshot_cycles": list(config.snapshot_cycles),
    }


def _job_filename(beta: float, strategy: str, seed_index: int) -> str:
    label = strategy.replace(":", "-").replace("/", "")
    return f"beta{beta:g}_{label}_seed{seed_index:02d}.csv"


def _run_one_job(args) -> dict:
    (job_index, beta, strategy_spec, seed_index, config_echo) = args
    cfg = config_echo
    params = SimParams(beta=beta, Gamma=cfg["gamma"], g=cfg["g"], Omega=cfg["omega"],
                       N=cfg["n_fock"], dt=cfg["dt"], d0=cfg["d0"], scheme=cfg["scheme"])
    strategy = strategy_from_spec(strategy_spec, update_interval=cfg["update_interval"])
    seed = derive_seed(cfg["master_seed"], job_index)
    period = params.period
    t0 = time.time()
    out = {
        "job_index": job_index, "beta": beta, "strategy": strategy_spec,
        "seed_index": seed_index, "derived_seed": seed,
    }
    try:
        result = run_twin(
            params, strategy, seed,
            t_end=cfg["t_end_cycles"] * period,
            reset_period=cfg["reset_period_cycles"] * period,
            transient=cfg["transient_cycles"] * period,
        )
        out.update(status="ok", lam=result.lam, max_tail=result.max_tail,
                   warned=result.warned, series=result.series)
    except Exception as exc:  # recorded in the manifest; the sweep continues
        out.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    out["wall_time_s"] = round(time.time() - t0, 3)
    return out


def run_sweep(config: ExperimentConfig) -> RunManifest:
    """Execute all (beta, strategy, seed) jobs and write CSVs, summary, manifest."""
    t_start = time.time()
    out_dir = config.out_dir
    jobs_dir = os.path.join(out_dir, "jobs")
    os.makedirs(jobs_dir, exist_ok=True)
    echo = _config_echo(config)
    manifest = RunManifest(config=echo, version=__version__)

    grid = config.job_grid()
    worker_args = [(idx, beta, strat, k, echo) for (idx, beta, strat, k) in grid]
    max_workers = int(os.environ.get(WORKERS_ENV, 0)) or os.cpu_count() or 1
    max_workers = max(1, min(max_workers, len(worker_args)))

    if max_workers == 1:
        results = [_run_one_job(a) for a in worker_args]
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_run_one_job, worker_args, chunksize=1))
    results.sort(key=lambda r: r["job_index"])

    # per-job series CSVs, committed in index order
    for r in results:
        entry = {k: r[k] for k in ("job_index", "beta", "strategy", "seed_index",
                                   "derived_seed", "status", "wall_time_s")}
        if r["status"] == "ok":
            fname = _job_filename(r["beta"], r["strategy"], r["seed_index"])
            path = os.path.join(jobs_dir, fname)
            write_table_csv(path, ["t", "q", "p", "d_base", "window_log", "phi"],
                            r["series"])
            rel = os.path.join("jobs", fname)
            entry.update(lam=r["lam"], max_tail=r["max_tail"], warned=r["warned"],
                         files=[rel])
            manifest.files.append(rel)
            if r["warned"]:
                manifest.warnings.append(
                    f"job {r['job_index']}: tail weight exceeded 1e-4 "
                    f"(max {r['max_tail']:.3e})")
        else:
            entry.update(error=r["error"], files=[])
            manifest.warnings.append(f"job {r['job_index']}: {r['error']}")
        manifest.jobs.append(entry)

    # summary rows per (beta, strategy) cell
    summary_rows = []
    for beta in config.betas:
        for strat in config.strategies:
            cell = [r for r in results
                    if r["beta"] == beta and r["strategy"] == strat]
            good = [r for r in cell if r["status"] == "ok"]
            failures = [(r["seed_index"], r["error"]) for r in cell
                        if r["status"] != "ok"]
            row = {"beta": beta, "strategy": strat,
                   "n_seeds": len(good),
                   "t_end_cycles": config.t_end_cycles,
                   "partial": bool(failures),
                   "per_seed": [{"seed_index": r["seed_index"],
                                 "derived_seed": r["derived_seed"],
                                 "lambda": r["lam"]} for r in good]}
            if good:
                est = LyapunovEstimate.from_values(
                    [r["lam"] for r in good],
                    [r["derived_seed"] for r in good],
                    partial=bool(failures), failures=failures)
                row["lambda_mean"] = est.mean
                row["lambda_two_se"] = est.two_se
            summary_rows.append(row)

    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump({"cells": summary_rows}, fh, indent=2, sort_keys=True)
    manifest.files.append("summary.json")

    manifest.wall_time_s = round(time.time() - t_start, 3)
    manifest.files.append("manifest.json")
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json())
    return manifest


# ------------------------------------------------------------------ accumulation


def accumulate_ensemble_state(states) -> np.ndarray:
    """Average projector over snapshots: rho = mean_k |psi_k><psi_k|.

    Accepts FockState instances or coefficient vectors, all of one dimension.
    """
    vecs = []
    for s in states:
        c = s.coeffs if isinstance(s, FockState) else np.asarray(s, dtype=complex)
        vecs.append(c)
    if not vecs:
        raise ValueError("no snapshots given")
    N = vecs[0].size
    if any(v.size != N for v in vecs):
        raise ValueError("snapshot dimensions differ")
    rho = np.zeros((N, N), dtype=complex)
    for v in vecs:
        rho += np.outer(v, v.conj())
    return rho / len(vecs)


# ----------------------------------------------------------------------- export


def write_table_csv(path: str, header, rows):
    """Comma-separated table with a header row, full double precision."""
    data = np.asarray(rows, dtype=float).reshape(-1, len(header))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def write_grid_csv(path: str, values: np.ndarray, q_grid, p_grid):
    """Row-major grid CSV: header row carries the q axis, first column the p axis."""
    q = np.asarray(q_grid, dtype=float)
    p = np.asarray(p_grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (p.size, q.size):
        raise ValueError("values must have shape (len(p_grid), len(q_grid))")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("p\\q," + ",".join(f"{v:.17g}" for v in q) + "\n")
        for i, pv in enumerate(p):
            fh.write(f"{pv:.17g}," + ",".join(f"{v:.17g}" for v in values[i]) + "\n")


def save_state_json(path: str, state: FockState, meta: dict | None = None):
    """Snapshot a state as a JSON array of (Re C_n, Im C_n) pairs."""
    payload = {"coeffs": [[float(c.real), float(c.imag)] for c in state.coeffs]}
    if meta:
        payload["meta"] = meta
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def load_state_json(path: str) -> FockState:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    coeffs = np.array([complex(re, im) for re, im in payload["coeffs"]])
    return FockState(coeffs)


def save_density_json(path: str, rho: np.ndarray, meta: dict | None = None):
    """Snapshot a density matrix as nested JSON arrays of (Re, Im) pairs."""
    rho = np.asarray(rho, dtype=complex)
    payload = {"rho": [[[float(v.real), float(v.imag)] for v in row] for row in rho]}
    if meta:
        payload["meta"] = meta
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_snapshot_json(path: str):
    """Load either a pure-state snapshot (FockState) or a density matrix."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if "coeffs" in payload:
        coeffs = np.array([complex(re, im) for re, im in payload["coeffs"]])
        return FockState(coeffs)
    if "rho" in payload:
        return np.array([[complex(re, im) for re, im in row]
                         for row in payload["rho"]])
    raise ValueError(f"{path}: neither 'coeffs' nor 'rho' present")
