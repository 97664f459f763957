"""Command-line experiment runner.

    picketfence analytic    --n 3 --pattern inf
    picketfence simulate    --n 2 --pattern inf,5 --T 10000 --trials 8 --seed 1
    picketfence moments     --n 2 --pattern inf,5 --T 4 --c 0.3 --trials 200000
    picketfence picketfence --gaps inf --n-grid 100,1000,10000 --i-max 5
    picketfence verify

Options may also come from ``--config FILE`` (flat ``key = value``); flags
override the file.  Results go to ``--out`` as CSV with a JSON sidecar
(same stem, ``.json``), or to stdout.  Exit codes: 0 success, 2 invalid
input, 3 numeric or property failure, 4 contour infeasible.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels, spectrum, verify
from .chain import ChainError, lyapunov_estimate, run_chain
from .config import (
    ConfigError,
    ExperimentConfig,
    config_hash,
    parse_config,
    serialize_config,
    validate,
    with_overrides,
)
from .ensemble import format_pattern, measure_from_sequence
from .moments import (
    ContourInfeasibleError,
    MomentQuery,
    contour_moment,
    default_workers,
    mc_moment,
    residue_moment_m1,
)
from .sampler import RngStream

EXIT_OK, EXIT_INVALID, EXIT_FAILED, EXIT_CONTOUR = 0, 2, 3, 4


@dataclass
class ResultRecord:
    experiment: str
    config: ExperimentConfig
    columns: list
    rows: list
    metadata: dict = field(default_factory=dict)
    duration_s: float = 0.0
    failed: bool = False

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return "" if v is None else str(v)


def render_csv(record: ResultRecord) -> str:
    buf = io.StringIO()
    buf.write(f"# picketfence {record.experiment} config_hash={record.config_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(record.columns)
    for row in record.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def sidecar(record: ResultRecord) -> dict:
    return {
        "experiment": record.experiment,
        "config_hash": record.config_hash,
        "config": serialize_config(record.config),
        "metadata": record.metadata,
        "duration_s": record.duration_s,
        "versions": {
            "picketfence": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "kernel_backend": kernels.BACKEND,
        },
    }


def write_record(record: ResultRecord, out: str | None, stream=sys.stdout) -> None:
    text = render_csv(record)
    if out is None:
        stream.write(text)
        return
    path = Path(out)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    path.with_suffix(".json").write_text(json.dumps(sidecar(record), indent=2, default=_json_default) + "\n")


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v).__name__)


# ---------------------------------------------------------------------------
# commands


def cmd_analytic(cfg: ExperimentConfig) -> ResultRecord:
    validate(cfg, "analytic")
    measure = cfg.measure()
    sp = spectrum.compute_spectrum(measure, cfg.n)
    rows = [
        (i, sp.lambdas[i - 1], sp.normalized_gaps[i - 1], sp.epsilon_bounds[i - 1])
        for i in range(1, cfg.n + 1)
    ]
    meta = {"n": cfg.n, "pattern": cfg.pattern if cfg.gaps is None else None, "gaps": cfg.gaps,
            "measure": json.loads(measure.to_json()), "c_n": sp.c_n, "alpha": sp.alpha}
    return ResultRecord("analytic", cfg, ["i", "lambda_i", "normalized_gap_i", "epsilon_bound_i"], rows, meta)


def _simulate_trial(cfg, trial):
    state = run_chain(cfg.sequence(), cfg.T, RngStream(cfg.seed, trial).generator())
    return lyapunov_estimate(state)


def cmd_simulate(cfg: ExperimentConfig, workers: int | None = None) -> ResultRecord:
    validate(cfg, "simulate")
    seq = cfg.sequence()
    exact = spectrum.lyapunov_exponents(measure_from_sequence(seq), cfg.n)
    workers = workers or default_workers()
    with ThreadPoolExecutor(workers) as pool:
        estimates = list(pool.map(lambda t: _simulate_trial(cfg, t), range(cfg.trials)))
    rows = []
    for trial, est in enumerate(estimates):
        for i in range(cfg.n):
            rows.append(("trial", trial, i + 1, est.values[i], est.stderr[i], exact[i], None))
    values = np.array([e.values for e in estimates])
    mean = values.mean(axis=0)
    if cfg.trials > 1:
        se = values.std(axis=0, ddof=1) / math.sqrt(cfg.trials)
    else:
        se = estimates[0].stderr
    z = (mean - exact) / se
    for i in range(cfg.n):
        rows.append(("aggregate", None, i + 1, mean[i], se[i], exact[i], z[i]))
    meta = {"n": cfg.n, "pattern": cfg.pattern, "T": cfg.T, "trials": cfg.trials,
            "max_abs_error": float(np.max(np.abs(mean - exact))),
            # unnormalised factors: (1/T) log y_i tends to lambda_i + log n
            "log_n_offset": math.log(cfg.n)}
    return ResultRecord(
        "simulate", cfg, ["row_type", "trial", "i", "estimate", "stderr", "analytic", "zscore"], rows, meta
    )


MOMENT_QUAD_TOL = 1e-8
MOMENT_MC_SIGMAS = 4.0


def cmd_moments(cfg: ExperimentConfig, workers: int | None = None) -> ResultRecord:
    validate(cfg, "moments")
    query = MomentQuery(cfg.n, tuple(cfg.prefix()), cfg.c)
    res = residue_moment_m1(query)
    quad = contour_moment(query, cfg.nodes)
    mc = mc_moment(query, cfg.trials, cfg.seed, workers)
    quad_ok = abs(quad.value - res.value) <= MOMENT_QUAD_TOL
    mc_ok = abs(mc.value - res.value) <= MOMENT_MC_SIGMAS * mc.error_estimate
    rows = [
        ("residue", res.value, res.error_estimate, 0.0, True),
        ("quadrature", quad.value, quad.error_estimate, quad.value - res.value, quad_ok),
        ("monte-carlo", mc.value, mc.error_estimate, mc.value - res.value, mc_ok),
    ]
    meta = {"n": cfg.n, "prefix": format_pattern(query.prefix), "c": cfg.c, "trials": cfg.trials,
            "agreement": bool(quad_ok and mc_ok),
            "tolerances": {"quadrature_abs": MOMENT_QUAD_TOL, "monte_carlo_se": MOMENT_MC_SIGMAS}}
    return ResultRecord(
        "moments", cfg, ["method", "value", "error_estimate", "diff_from_residue", "agrees"], rows, meta
    )


def cmd_picketfence(cfg: ExperimentConfig) -> ResultRecord:
    validate(cfg, "picketfence")
    rows = []
    for n in cfg.n_grid:
        measure = cfg.measure(n)
        gaps = spectrum.normalized_gaps(measure, n)
        for i in range(1, min(cfg.i_max, n) + 1):
            g = gaps[i - 1]
            rows.append((n, i, g, g + (i - 1), (i - 1) ** 2 / (n - i + 1), i <= math.isqrt(n)))
    meta = {"n_grid": list(cfg.n_grid), "gaps": cfg.gaps, "pattern": cfg.pattern if cfg.gaps is None else None,
            "note": "in_window is false for i > floor(sqrt(n)), outside the o(sqrt(n)) range"}
    return ResultRecord(
        "picketfence", cfg,
        ["n", "i", "normalized_gap", "deviation", "epsilon_envelope", "in_window"], rows, meta,
    )


def cmd_verify(cfg: ExperimentConfig, resume: str | None = None) -> ResultRecord:
    validate(cfg, "verify")
    if resume is not None:
        check_resume(resume, cfg)
    checks = verify.run_all(cfg.seed, cfg.tol_scale)
    rows = [(c.name, c.passed, c.discrepancy, c.tolerance) for c in checks]
    failed = not all(c.passed for c in checks)
    meta = {"passed": sum(c.passed for c in checks), "total": len(checks)}
    return ResultRecord("verify", cfg, ["property", "passed", "discrepancy", "tolerance"], rows, meta,
                        failed=failed)


def check_resume(path: str, cfg: ExperimentConfig) -> None:
    """Refuse a prior result whose sidecar hash does not match its config or ``cfg``."""
    try:
        meta = json.loads(Path(path).read_text())
        stored = parse_config(meta["config"])
        recorded = meta["config_hash"]
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read resumption input {path}: {exc}") from None
    if config_hash(stored) != recorded:
        raise ConfigError(f"{path}: config hash {recorded} does not match its embedded config")
    if recorded != config_hash(cfg):
        raise ConfigError(f"{path}: config hash {recorded} differs from current config {config_hash(cfg)}")


COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "moments": cmd_moments,
    "picketfence": cmd_picketfence,
    "verify": cmd_verify,
}

_FLAGS = {
    "n": int, "pattern": str, "gaps": str, "T": int, "trials": int, "seed": int, "c": float,
    "chat": float, "i_max": int, "n_grid": str, "nodes": int, "out": str, "tol_scale": float,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="picketfence", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        for key, typ in _FLAGS.items():
            flag = "--" + key.replace("_", "-") if key != "T" else "--T"
            p.add_argument(flag, dest=key, type=str, default=None, metavar=typ.__name__.upper())
        p.add_argument("--workers", type=int, default=None, help="worker threads (default: PICKETFENCE_WORKERS or CPU count)")
        if name == "verify":
            p.add_argument("--resume", help="JSON sidecar of an earlier run to check against this config")
    return parser


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        cfg = parse_config(Path(args.config).read_text())
    overrides = {k: getattr(args, k) for k in _FLAGS if getattr(args, k) is not None}
    return with_overrides(cfg, overrides)


def run(argv=None, stdout=sys.stdout, stderr=sys.stderr) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        start = time.perf_counter()
        if args.command in ("simulate", "moments"):
            record = COMMANDS[args.command](cfg, args.workers)
        elif args.command == "verify":
            record = cmd_verify(cfg, args.resume)
        else:
            record = COMMANDS[args.command](cfg)
        record.duration_s = time.perf_counter() - start
        write_record(record, cfg.out, stdout)
    except ContourInfeasibleError as exc:
        print(f"contour infeasible: {exc}", file=stderr)
        return EXIT_CONTOUR
    except (ConfigError, ValueError, OSError) as exc:
        print(f"invalid input: {exc}", file=stderr)
        return EXIT_INVALID
    except (ChainError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=stderr)
        return EXIT_FAILED
    if record.failed:
        print("property failure", file=stderr)
        return EXIT_FAILED
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
