"""Command-line front end.

Exit codes: 0 success, 1 invalid config, 2 runtime failure.  Seed precedence
is ``--seed`` flag, then the ``BPS_SEED`` environment variable, then the
config file, then :data:`branchsim.config.DEFAULT_SEED`.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .branching import dominant_branch, enumerate_branches
from .config import COMMANDS, FORMATS, SEED_ENV, RunConfig, config_from_mapping
from .consistency import test_consistency
from .errors import BranchSimError, ParseError, ValidationError
from .kernels import kernel_select, validate
from .protocols import (
    ProtocolResult,
    ScatteringConfig,
    compare_protocols,
    run_end_only,
    run_per_run,
    simulate_waiting_times,
)
from .report import Report, format_number

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _trial_report(cfg: RunConfig, result: ProtocolResult) -> Report:
    spec = cfg.spec
    born = spec.outcome_norms[0]
    predicted = float(kernel_select(cfg.kernel, spec.outcome_norms)[0])
    report = Report(cfg.command, cfg.seed, ["trial", "fraction"])
    report.rows = [[t, float(f)] for t, f in enumerate(result.per_trial_fractions)]
    report.footer = {
        "mean": result.mean_fraction,
        "std_error": result.std_error,
        "z_born": result.z_score(born),
        "z_kernel": result.z_score(predicted),
    }
    report.statistic = f"mean={format_number(result.mean_fraction)}"
    return report


def _enumerate(cfg: RunConfig) -> Report:
    spec = cfg.spec
    enum = enumerate_branches(spec, cfg.N, cfg.mode)
    columns = [f"count_{label}" for label in spec.outcome_labels()] + ["log_weight", "weight"]
    report = Report(cfg.command, cfg.seed, columns)
    weights = enum.weights
    report.rows = [
        [*(int(c) for c in enum.counts[i]), float(enum.log_weights[i]), float(weights[i])]
        for i in range(len(enum))
    ]
    top = dominant_branch(enum)
    report.statistic = f"records={len(enum)} dominant={'/'.join(map(str, top.counts))}"
    return report


def _per_run(cfg: RunConfig) -> Report:
    result = run_per_run(cfg.spec, cfg.kernel, cfg.N, cfg.trials, cfg.seed, cfg.threads)
    return _trial_report(cfg, result)


def _end_only(cfg: RunConfig) -> Report:
    result = run_end_only(cfg.spec, cfg.kernel, cfg.N, cfg.mode, cfg.trials, cfg.seed, cfg.threads)
    report = _trial_report(cfg, result)
    if result.selected_counts is not None:
        report.footer["selected_m"] = result.selected_counts[0]
        report.statistic = f"selected_m={result.selected_counts[0]}"
    return report


def _compare(cfg: RunConfig) -> Report:
    cmp = compare_protocols(cfg.spec, cfg.kernel, cfg.N, cfg.trials, cfg.seed, cfg.threads)
    report = _trial_report(cfg, cmp.per_run)
    report.footer.update(
        end_only_fraction=cmp.end_only_fraction,
        born_prediction=cmp.born_prediction,
        kernel_prediction=cmp.kernel_prediction,
    )
    report.statistic = (
        f"per_run_mean={format_number(cmp.per_run_mean)} "
        f"end_only={format_number(cmp.end_only_fraction)} z_born={cmp.z_born:.3f}"
    )
    return report


def _rutherford(cfg: RunConfig) -> Report:
    scfg = ScatteringConfig(cfg.rate, cfg.norms, cfg.dt, cfg.trials, cfg.seed)
    waits = simulate_waiting_times(scfg, cfg.kernel, cfg.threads)
    report = Report(cfg.command, cfg.seed, ["angle", "p", "mean_wait_s", "std_err_s"])
    report.rows = [
        [i + 1, p, float(waits.mean_wait[i]), float(waits.std_error[i])]
        for i, p in enumerate(scfg.observed_norms)
    ]
    report.statistic = "mean_wait_s=" + ",".join(format(m, ".6g") for m in waits.mean_wait)
    return report


def _consistency(cfg: RunConfig) -> Report:
    columns = ["law", "max_additivity_violation", "max_normalization_violation", "verdict"]
    report = Report(cfg.command, cfg.seed, columns)
    for law in cfg.laws:
        r = test_consistency(law, cfg.samples, cfg.seed)
        report.rows.append([r.law, r.max_additivity_violation, r.max_normalization_violation, r.verdict])
    report.statistic = "verdicts=" + ",".join(f"{row[0]}:{row[3]}" for row in report.rows)
    return report


def _kernel_validate(cfg: RunConfig) -> Report:
    r = validate(cfg.kernel, cfg.grid_points)
    columns = ["kernel", "s0", "s1", "min_slope", "max_complement_violation", "verdict"]
    report = Report(cfg.command, cfg.seed, columns)
    report.rows = [[r.kernel_id, r.s0, r.s1, r.min_slope, r.max_complement_violation, r.verdict]]
    report.statistic = r.verdict
    return report


_HANDLERS = {
    "enumerate": _enumerate,
    "per-run": _per_run,
    "end-only": _end_only,
    "compare": _compare,
    "rutherford": _rutherford,
    "consistency": _consistency,
    "kernel-validate": _kernel_validate,
}


def build_report(cfg: RunConfig) -> Report:
    """Run the operation named by ``cfg.command`` and tabulate its output."""
    return _HANDLERS[cfg.command](cfg)


@dataclass
class Execution:
    exit_code: int
    body: str = ""
    summary: str = ""
    error: str = ""


def execute(cfg: RunConfig) -> Execution:
    """Run ``cfg``; write the report to ``cfg.output`` when set."""
    try:
        report = build_report(cfg)
        body = report.render(cfg.format)
        if cfg.output:
            Path(cfg.output).write_text(body, encoding="utf-8")
    except (ValidationError, ParseError) as exc:
        return Execution(EXIT_INVALID, error=str(exc))
    except (BranchSimError, ValueError, OSError, ArithmeticError, RuntimeError) as exc:
        return Execution(EXIT_RUNTIME, error=f"{type(exc).__name__}: {exc}")
    return Execution(EXIT_OK, body, report.summary_line())


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bps", description="Branch-norm perception simulator.")
    ap.add_argument("command", nargs="?", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="JSON key-value config file")
    ap.add_argument("--norms", type=float, nargs="+")
    ap.add_argument("--kernel", help='born, cubic, or {"poly": [c0, c1, ...]}')
    ap.add_argument("-N", "--N", dest="N", type=int, help="runs per trial")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--mode")
    ap.add_argument("--rate", type=float, help="scattering events per second")
    ap.add_argument("--dt", type=float, help="time step in seconds")
    ap.add_argument("--laws", help='JSON array, e.g. ["identity", {"power": 2}]')
    ap.add_argument("--samples", type=int)
    ap.add_argument("--grid-points", dest="grid_points", type=int)
    ap.add_argument("--output", help="report path (default: stdout)")
    ap.add_argument("--format", choices=FORMATS)
    ap.add_argument("--threads", type=int)
    return ap


def resolve_mapping(args: argparse.Namespace, environ: dict[str, str] | None = None) -> dict[str, Any]:
    """Merge config file, environment and flags into one key-value mapping."""
    environ = os.environ if environ is None else environ
    data: dict[str, Any] = {}
    if args.config is not None:
        text = args.config.read_text(encoding="utf-8")
        try:
            loaded = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno) from None
        if not isinstance(loaded, dict):
            raise ParseError("config must be a key-value object", line=1)
        data.update(loaded)
    if environ.get(SEED_ENV):
        try:
            data["seed"] = int(environ[SEED_ENV])
        except ValueError:
            raise ValidationError("BadValue", f"{SEED_ENV} must be an integer") from None
    for key, value in vars(args).items():
        if key == "config" or value is None:
            continue
        if key == "laws":
            try:
                value = json.loads(value)
            except json.JSONDecodeError as exc:
                raise ParseError(exc.msg, key="laws") from None
        data[key] = value
    return data


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = config_from_mapping(resolve_mapping(args))
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    result = execute(cfg)
    if result.exit_code != EXIT_OK:
        print(f"error: {result.error}", file=sys.stderr)
        return result.exit_code
    if cfg.output:
        print(result.summary)
    else:
        sys.stdout.write(result.body)
        print(result.summary, file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
