"""Command-line interface: ``ivbgmm fit`` and ``ivbgmm simulate``.

Exit codes: 0 success, 2 I/O or parse error, 3 invalid data or
configuration, 4 estimator failure. Failures print one JSON line to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import baselines, reporting
from .core import center, compute_suffstats
from .exceptions import EstimationError, IVBGMMError, ValidationError
from .inference import proposed_bayes, traditional_bayes
from .search import SearchConfig, support_size
from .simulation import DEFAULT_METHODS, METHOD_ORDER, DgpSpec, gen_dataset, replicate_seeds, run_monte_carlo

EXIT_IO = 2
EXIT_VALIDATION = 3
EXIT_ESTIMATION = 4

FIT_METHODS = ("ols", "naive_tsls", "median", "traditional_bayes", "proposed_bayes")
DEFAULT_FIT_METHODS = ("naive_tsls", "median", "proposed_bayes")


class InputError(IVBGMMError):
    """Unreadable or malformed input file."""


@dataclass
class RunConfig:
    input: Path
    outcome: str
    exposure: str
    instruments: list[str]
    forced_invalid: list[str] = field(default_factory=list)
    c: float = 3.0
    tau: float = 0.1
    iterations: int = 1000
    seed: int = 0
    hetero: bool = False
    count_forced: bool = False
    init: str = "forced"
    methods: tuple[str, ...] = DEFAULT_FIT_METHODS
    output: Path | None = None
    format: str = "json"

    def validate(self) -> None:
        if self.outcome == self.exposure:
            raise ValidationError("outcome and exposure must be different columns")
        if not self.instruments:
            raise ValidationError("at least one instrument is required")
        if len(set(self.instruments)) != len(self.instruments):
            raise ValidationError("instrument names must be unique")
        if {self.outcome, self.exposure} & set(self.instruments):
            raise ValidationError("outcome/exposure cannot also be instruments")
        extra = set(self.forced_invalid) - set(self.instruments)
        if extra:
            raise ValidationError(f"forced-invalid columns are not instruments: {sorted(extra)}")
        if self.init not in ("forced", "median"):
            raise ValidationError(f"unknown initial model rule: {self.init!r}")
        unknown = set(self.methods) - set(FIT_METHODS)
        if unknown:
            raise ValidationError(f"unknown methods for fit: {sorted(unknown)}")


def _split(s: str | None) -> list[str]:
    if not s:
        return []
    return [x.strip() for x in s.split(",") if x.strip()]


def read_columns(path: Path, names: Sequence[str]) -> dict[str, np.ndarray]:
    """Read the named numeric columns from a headed, comma-separated UTF-8 file."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise InputError(f"{path} is empty")
            header = [h.strip() for h in header]
            missing = [c for c in names if c not in header]
            if missing:
                raise InputError(f"columns not found in {path}: {missing}")
            pos = [header.index(c) for c in names]
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    rows.append([float(row[i]) for i in pos])
                except (ValueError, IndexError):
                    raise InputError(f"{path}:{lineno}: non-numeric or missing value") from None
    except OSError as exc:
        raise InputError(str(exc)) from None
    except UnicodeDecodeError as exc:
        raise InputError(f"{path} is not UTF-8: {exc}") from None
    arr = np.array(rows, dtype=float).reshape(-1, len(names))
    return {c: arr[:, k] for k, c in enumerate(names)}


def _write(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    try:
        Path(output).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(str(exc)) from None


def cmd_fit(cfg: RunConfig) -> dict:
    cfg.validate()
    cols = read_columns(cfg.input, [cfg.outcome, cfg.exposure, *cfg.instruments])
    data = center(cols[cfg.outcome], cols[cfg.exposure], np.column_stack([cols[c] for c in cfg.instruments]))
    stats = compute_suffstats(data)
    p = data.p
    forced = sorted(cfg.instruments.index(c) for c in cfg.forced_invalid)
    if support_size(p, forced, cfg.count_forced) == 0 or len(forced) == p:
        raise ValidationError("no candidate instruments left to search over")
    initial = None
    if cfg.init == "median":
        initial = baselines.median_initial_model(stats, forced, cfg.count_forced)
    search = SearchConfig(
        iterations=cfg.iterations,
        c=cfg.c,
        tau=cfg.tau,
        seed=cfg.seed,
        initial=initial,
        count_forced=cfg.count_forced,
    )

    reports = []
    for method in sorted(dict.fromkeys(cfg.methods), key=METHOD_ORDER.index):
        if method == "ols":
            reports.append(baselines.ols(stats, forced))
        elif method == "naive_tsls":
            reports.append(baselines.naive_tsls(stats, forced))
        elif method == "median":
            reports.append(baselines.median_report(stats, exclude=forced))
        elif method == "traditional_bayes":
            reports.append(traditional_bayes(stats, forced, cfg.count_forced))
        elif method == "proposed_bayes":
            res = proposed_bayes(stats, forced, search, data=data, hetero=cfg.hetero)
            reports.append(res.report)

    record = {
        "n": data.n,
        "p": p,
        "outcome": cfg.outcome,
        "exposure": cfg.exposure,
        "instruments": list(cfg.instruments),
        "forced_invalid": [cfg.instruments[j] for j in forced],
        "config": {
            "c": cfg.c,
            "tau": cfg.tau,
            "iterations": cfg.iterations,
            "seed": cfg.seed,
            "hetero": cfg.hetero,
            "count_forced": cfg.count_forced,
            "init": cfg.init,
        },
        "methods": {r.method: reporting.report_record(r, cfg.instruments) for r in reports},
    }
    if cfg.format == "json":
        _write(reporting.dumps(record), cfg.output)
    elif cfg.format == "csv":
        _write(reporting.reports_to_csv(reports), cfg.output)
    else:
        _write(reporting.reports_to_text(reports, cfg.instruments), cfg.output)
    return record


def emit_dataset(spec: DgpSpec, seed: int, path: Path) -> None:
    """Write replicate 0 of a simulation run as CSV (columns y, d, z1..zp)."""
    data_ss, _ = replicate_seeds(seed, 0)
    data, _ = gen_dataset(spec, np.random.default_rng(data_ss))
    header = ["y", "d"] + [f"z{j + 1}" for j in range(data.p)]
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for i in range(data.n):
                w.writerow([repr(float(v)) for v in (data.y[i], data.d[i], *data.Z[i])])
    except OSError as exc:
        raise InputError(str(exc)) from None


def cmd_simulate(
    model: int,
    case: str,
    n: int,
    reps: int,
    seed: int,
    methods: Sequence[str] = DEFAULT_METHODS,
    output: Path | None = None,
    format: str = "csv",
    threads: int = 1,
    search: SearchConfig = SearchConfig(),
    emit_data: Path | None = None,
) -> str | None:
    spec = DgpSpec.from_case(model, case, n)
    if emit_data is not None:
        emit_dataset(spec, seed, emit_data)
        if reps == 0:
            return None
    summary = run_monte_carlo(spec, methods, reps, seed, search, workers=threads)
    text = reporting.summary_to_text(summary)
    if format == "text":
        _write(text, output)
        return text
    body = reporting.summary_to_csv(summary) if format == "csv" else reporting.summary_to_json(summary)
    _write(body, output)
    if output is not None:
        sys.stdout.write(text)
    return body


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ivbgmm",
        description="Bayesian model averaging over invalid instruments for IV estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def search_flags(p):
        p.add_argument("--c", type=float, default=3.0, help="acceptable-set ratio threshold (default 3)")
        p.add_argument("--tau", type=float, default=0.1, help="escort order (default 0.1)")
        p.add_argument("--iters", type=int, default=1000, help="search iterations (default 1000)")
        p.add_argument("--seed", type=int, default=0, help="RNG seed; IVBGMM_SEED overrides")
        p.add_argument("--output", type=Path, default=None, help="output file (default stdout)")

    fit = sub.add_parser("fit", help="estimate the causal effect from a CSV file")
    fit.add_argument("--input", type=Path, required=True)
    fit.add_argument("--outcome", required=True)
    fit.add_argument("--exposure", required=True)
    fit.add_argument("--instruments", required=True, help="comma-separated column names")
    fit.add_argument("--forced-invalid", default="", help="instruments always treated as invalid (covariates)")
    fit.add_argument("--hetero", action="store_true", help="heteroscedasticity-robust pseudo-likelihood")
    fit.add_argument(
        "--count-forced",
        action="store_true",
        help="apply |omega| < p/2 to all indices instead of only the candidate block",
    )
    fit.add_argument(
        "--init",
        choices=("forced", "median"),
        default="forced",
        help="search starting model: forced set only, or ranked median-estimator residuals",
    )
    fit.add_argument("--methods", default=",".join(DEFAULT_FIT_METHODS))
    fit.add_argument("--format", choices=("json", "csv", "text"), default="json")
    search_flags(fit)

    sim = sub.add_parser("simulate", help="run the Monte Carlo study for one design")
    sim.add_argument("--model", type=int, choices=(1, 2), default=1)
    sim.add_argument("--case", choices=("a", "b", "c", "d"), default="a")
    sim.add_argument("--n", type=int, default=500)
    sim.add_argument("--reps", type=int, default=500)
    sim.add_argument("--methods", default=",".join(DEFAULT_METHODS))
    sim.add_argument("--threads", type=int, default=1, help="worker processes for replicates")
    sim.add_argument("--format", choices=("json", "csv", "text"), default="csv")
    sim.add_argument("--emit-data", type=Path, default=None, help="also write replicate 0's data as CSV")
    search_flags(sim)
    return parser


def _fail(code: int, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    seed = args.seed
    env_seed = os.environ.get("IVBGMM_SEED")
    try:
        if env_seed:
            try:
                seed = int(env_seed)
            except ValueError:
                raise ValidationError(f"IVBGMM_SEED must be an integer, got {env_seed!r}") from None
        try:
            search = SearchConfig(iterations=args.iters, c=args.c, tau=args.tau, seed=seed)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None

        if args.command == "fit":
            cfg = RunConfig(
                input=args.input,
                outcome=args.outcome,
                exposure=args.exposure,
                instruments=_split(args.instruments),
                forced_invalid=_split(args.forced_invalid),
                c=search.c,
                tau=search.tau,
                iterations=search.iterations,
                seed=seed,
                hetero=args.hetero,
                count_forced=args.count_forced,
                init=args.init,
                methods=tuple(_split(args.methods)),
                output=args.output,
                format=args.format,
            )
            cmd_fit(cfg)
        else:
            methods = _split(args.methods)
            unknown = set(methods) - set(METHOD_ORDER)
            if unknown:
                raise ValidationError(f"unknown methods: {sorted(unknown)}")
            if args.reps < 0 or (args.reps == 0 and args.emit_data is None):
                raise ValidationError("--reps must be >= 1")
            cmd_simulate(
                args.model,
                args.case,
                args.n,
                args.reps,
                seed,
                methods,
                output=args.output,
                format=args.format,
                threads=max(1, args.threads),
                search=search,
                emit_data=args.emit_data,
            )
    except InputError as exc:
        return _fail(EXIT_IO, exc)
    except ValidationError as exc:
        return _fail(EXIT_VALIDATION, exc)
    except (EstimationError, IVBGMMError) as exc:
        return _fail(EXIT_ESTIMATION, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
