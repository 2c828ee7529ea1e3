"""Command-line interface: ``curetest {test,followup,curves,simulate}``.

Input files are comma-separated with a header row, a ``time`` column and a
``status`` column (1 = event, 0 = censored). Covariates are declared with
``--x-cols``/``--z-cols`` and typed with ``--kinds``, e.g.
``--kinds age=continuous,loc=nominal:colon|rectum``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .bandwidth import SURVIVAL, cv_bandwidth, make_grid
from .bootstrap import CASE1_CV_GRID, BandwidthConfig, fresh_seed, run_tests
from .errors import CureTestError, UnknownScenario
from .estimators import KernelConfig, cure_rate_at, km_survival, stratified_km
from .followup import maller_zhou
from .sample import CONTINUOUS, KINDS, NOMINAL, X_BLOCK, Z_BLOCK, Covariate, CovariateSpec, Observation, Sample, clean_label
from .simulation import SCENARIO_SETS, run_monte_carlo, scenario_set

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE, EXIT_ENGINE = 0, 1, 2, 3


class CsvError(ValueError):
    """Malformed input file; the message names the offending line and column."""


@dataclass(frozen=True)
class Declaration:
    name: str
    kind: str
    role: str
    levels: tuple[str, ...] | None = None


def parse_kinds(text: str | None) -> dict[str, tuple[str, tuple | None]]:
    """``name=kind[:lev1|lev2],...`` to ``{name: (kind, levels)}``."""
    out = {}
    for item in filter(None, (s.strip() for s in (text or "").split(","))):
        name, sep, rest = item.partition("=")
        if not sep:
            raise ValueError(f"--kinds entry {item!r} is not name=kind")
        kind, _, levels = rest.partition(":")
        kind = kind.strip()
        if kind not in KINDS:
            raise ValueError(f"unknown kind {kind!r} for {name!r}; use one of {', '.join(KINDS)}")
        lv = tuple(clean_label(v) for v in levels.split("|")) if levels else None
        out[name.strip()] = (kind, lv)
    return out


def declarations(x_cols: Sequence[str], z_cols: Sequence[str], kinds: dict) -> list[Declaration]:
    decls = []
    for role, cols in ((X_BLOCK, x_cols), (Z_BLOCK, z_cols)):
        for name in cols:
            kind, levels = kinds.get(name, (CONTINUOUS, None))
            decls.append(Declaration(name, kind, role, levels))
    unknown = set(kinds) - {d.name for d in decls}
    if unknown:
        raise ValueError(f"--kinds names undeclared columns: {', '.join(sorted(unknown))}")
    return decls


def _split(cols: str | None) -> list[str]:
    return [c.strip() for c in (cols or "").split(",") if c.strip()]


def load_csv(path: str | Path, decls: Sequence[Declaration], warn_ignored: bool = True) -> Sample:
    """Read a CSV file into a :class:`Sample`.

    Nominal columns without declared levels take the sorted set of labels
    present in the file. Columns that are not declared are ignored with a
    warning.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CsvError(f"{path}: empty file")
        header = [h.strip() for h in header]
        index = {h: k for k, h in enumerate(header)}
        for required in ["time", "status"] + [d.name for d in decls]:
            if required not in index:
                raise CsvError(f"{path}: missing column {required!r}")
        ignored = [h for h in header if h not in {"time", "status", *(d.name for d in decls)}]
        if ignored and warn_ignored:
            warnings.warn(f"ignoring undeclared columns: {', '.join(ignored)}", stacklevel=2)

        rows = []
        for line, rec in enumerate(reader, start=2):
            if not any(cell.strip() for cell in rec):
                continue
            if len(rec) != len(header):
                raise CsvError(f"{path}: line {line}: expected {len(header)} fields, got {len(rec)}")
            time = _number(rec[index["time"]], path, line, "time")
            if time < 0:
                raise CsvError(f"{path}: line {line}, column 'time': negative time {time}")
            status_cell = rec[index["status"]].strip()
            if status_cell not in ("0", "1"):
                raise CsvError(f"{path}: line {line}, column 'status': expected 0 or 1, got {status_cell!r}")
            covs = []
            for d in decls:
                cell = rec[index[d.name]]
                if d.kind == NOMINAL:
                    label = clean_label(cell)
                    if d.levels is not None and label not in d.levels:
                        raise CsvError(f"{path}: line {line}, column {d.name!r}: label {label!r} not in {list(d.levels)}")
                    covs.append(label)
                else:
                    covs.append(_number(cell, path, line, d.name))
            rows.append(Observation(time, int(status_cell), tuple(covs)))
    if not rows:
        raise CsvError(f"{path}: no data rows")

    entries = []
    for j, d in enumerate(decls):
        levels = d.levels
        if d.kind == NOMINAL and levels is None:
            levels = tuple(sorted({r.covariates[j] for r in rows}))
        entries.append(Covariate(d.name, d.kind, d.role, levels))
    return Sample(tuple(rows), CovariateSpec(tuple(entries)))


def _number(cell: str, path, line: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise CsvError(f"{path}: line {line}, column {column!r}: cannot parse {cell.strip()!r} as a number") from None
    if not math.isfinite(value):
        raise CsvError(f"{path}: line {line}, column {column!r}: value must be finite")
    return value


def _load(args) -> Sample:
    kinds = parse_kinds(args.kinds)
    return load_csv(args.data, declarations(_split(args.x_cols), _split(args.z_cols), kinds))


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _floats(text: str | None) -> tuple[float, ...] | None:
    if not text:
        return None
    return tuple(float(v) for v in text.split(","))


# ---------------------------------------------------------------------------
# commands


def cmd_test(args) -> int:
    sample = _load(args)
    seed = args.seed
    if seed is None:
        seed = fresh_seed()
        print(f"seed: {seed}", file=sys.stderr)
    cfg = BandwidthConfig(censoring=args.h_censoring, survival=args.h_survival, cure=args.h_cure)
    results = run_tests(
        sample, case=args.case, B=args.B, alpha=args.alpha, seed=seed, bandwidths=cfg, hs=_floats(args.h_grid), workers=args.workers
    )
    summary = [line for r in results for line in r.summary().splitlines()]
    if args.format == "csv":
        lines = ["h,stat,observed,critical,p_value,reject"]
        for r in results:
            h = r.bandwidths["statistic"]
            h_txt = "" if h is None else repr(h)
            lines.append(f"{h_txt},CM,{r.cm_obs!r},{r.cm_crit!r},{r.p_cm!r},{int(r.reject_cm)}")
            lines.append(f"{h_txt},K,{r.k_obs!r},{r.k_crit!r},{r.p_k!r},{int(r.reject_k)}")
        text = "\n".join(lines) + "\n"
    else:
        report = {"command": "test", "n": sample.n, "seed": seed, "results": [r.to_dict() for r in results], "summary": summary}
        text = json.dumps(report, indent=2) + "\n"
    _emit(text, args.out)
    if args.out:
        print("\n".join(summary))
    return EXIT_OK


def cmd_followup(args) -> int:
    sample = load_csv(args.data, [], warn_ignored=False)
    res = maller_zhou(sample)
    _emit(json.dumps({"command": "followup", **res.to_dict()}, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_curves(args) -> int:
    """Write the KM curve, cure-rate curves for continuous covariates and per-level KM curves."""
    sample = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failures = 0

    km = km_survival(sample)
    _write_rows(out / "km.csv", ("time", "survival"), zip(km.jump_times, km.values))

    for cov in sample.spec:
        if cov.kind == CONTINUOUS:
            x = sample.column(cov.name)
            h = args.h
            if h is None:
                grid = make_grid(*CASE1_CV_GRID[:2], CASE1_CV_GRID[2], CASE1_CV_GRID[3], sample.n)
                h = cv_bandwidth(sample, grid, SURVIVAL, [cov.name])
            rows = []
            for g in np.linspace(x.min(), x.max(), args.grid_points):
                try:
                    rows.append((g, cure_rate_at(sample, float(g), KernelConfig(h), cov.name)))
                except CureTestError as exc:
                    failures += 1
                    print(f"error: cure curve {cov.name} at {g:.6g}: {exc}", file=sys.stderr)
                    rows.append((g, ""))
            _write_rows(out / f"cure_{cov.name}.csv", (cov.name, "cure_rate"), rows)
        else:
            requested = _split(args.levels) if args.levels else None
            levels = requested or _present_levels(sample, cov)
            rows = []
            for level in levels:
                try:
                    curve = stratified_km(sample, level, cov.name)
                except CureTestError as exc:
                    failures += 1
                    print(f"error: stratum {cov.name}={level}: {exc}", file=sys.stderr)
                    continue
                rows.extend((level, t, s) for t, s in zip(curve.jump_times, curve.values))
            _write_rows(out / f"km_by_{cov.name}.csv", ("level", "time", "survival"), rows)
    return EXIT_PARTIAL if failures else EXIT_OK


def _present_levels(sample: Sample, cov: Covariate) -> list[str]:
    col = sample.column(cov.name)
    if cov.kind == NOMINAL:
        return [lv for lv in cov.levels if lv in set(col)]
    return [f"{v:g}" for v in np.unique(col)]


def _write_rows(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def cmd_simulate(args) -> int:
    scenarios = scenario_set(args.scenario_set)
    if args.only:
        wanted = set(args.only)
        scenarios = [s for s in scenarios if s.name in wanted]
        if not scenarios:
            raise UnknownScenario(", ".join(args.only))
    if args.full:
        ns, reps, B = (50, 100, 200, 500), 2000, 2000
    else:
        ns, reps, B = tuple(args.n or (100,)), args.reps, args.B
    seed = args.seed
    if seed is None:
        seed = fresh_seed()
        print(f"seed: {seed}", file=sys.stderr)
    table = run_monte_carlo(scenarios, ns, reps, B, args.alpha, seed, workers=args.workers)
    if args.out:
        Path(f"{args.out}.csv").write_text(table.to_csv(), encoding="utf-8")
        meta = {"scenario_set": args.scenario_set, "n": list(ns), **table.metadata()}
        Path(f"{args.out}.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    else:
        sys.stdout.write(table.to_csv())
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_data_args(p: argparse.ArgumentParser):
    p.add_argument("data", help="CSV file with time, status and covariate columns")
    p.add_argument("--x-cols", default="", help="comma-separated conditioning covariates")
    p.add_argument("--z-cols", default="", help="comma-separated tested covariates")
    p.add_argument("--kinds", default="", help="name=continuous|discrete|nominal[:lev1|lev2],...")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curetest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="bootstrap test of a covariate effect on the cure probability")
    _add_data_args(p)
    p.add_argument("--case", type=int, choices=(1, 2, 3), default=None)
    p.add_argument("--B", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--h-grid", default=None, help="comma-separated statistic bandwidths (Cases 2 and 3)")
    p.add_argument("--h-censoring", type=float, default=None)
    p.add_argument("--h-survival", type=float, default=None)
    p.add_argument("--h-cure", type=float, default=None)
    p.add_argument("--workers", type=int, default=1, help="parallel processes; 0 uses every core")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("followup", help="sufficient follow-up test")
    p.add_argument("data")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_followup)

    p = sub.add_parser("curves", help="export KM, cure-rate and stratified KM curves as CSV")
    _add_data_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--grid-points", type=int, default=50)
    p.add_argument("--h", type=float, default=None, help="bandwidth for cure-rate curves (default: cross-validated)")
    p.add_argument("--levels", default=None, help="comma-separated levels for stratified curves")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("simulate", help="Monte Carlo rejection-rate tables")
    p.add_argument("scenario_set", help=f"one of {', '.join(SCENARIO_SETS)}")
    p.add_argument("--only", action="append", help="restrict to a scenario name (repeatable)")
    p.add_argument("--n", type=int, action="append")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--B", type=int, default=500)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--full", action="store_true", help="kappa = B = 2000 and n in 50, 100, 200, 500")
    p.add_argument("--out", default=None, help="output prefix for .csv and .json")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        code = _dispatch(args)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return code


def _dispatch(args) -> int:
    try:
        return args.func(args)
    except UnknownScenario as exc:
        print(f"error: unknown scenario {exc.args[0]!r}", file=sys.stderr)
        return EXIT_USAGE
    except (CsvError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CureTestError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
