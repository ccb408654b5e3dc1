"""
CSV ingestion and the hyperco command line.

Exit codes: 0 on success, 2 on usage errors (bad flags or configuration
values), 1 on data errors. Results go to --output or stdout; logs go to stderr.
"""

import argparse
import csv
import io
import json
import logging
import sys
import traceback
import numpy as np
import pandas as pd

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
from pydantic import ValidationError

import hyperco.utils as utils
from hyperco.core_types import PairedSamples, HypercoError, ParseError, SchemaError

logging.basicConfig(
    level=logging.INFO,  # Default to INFO level
    format='%(filename)s:%(lineno)d | %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)
logger = logging.getLogger("cli_io")

DEFAULT_MISSING = ("", "NA", "NaN")


@dataclass(frozen=True)
class Table:
    """Named columns of reals; NaN marks a missing cell."""
    columns: Tuple[str, ...]
    cells: np.ndarray

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.float64, copy=True)
        if cells.ndim != 2 or cells.shape[1] != len(self.columns):
            raise SchemaError(f"cells of shape {cells.shape} do not match {len(self.columns)} columns")
        if len(set(self.columns)) != len(self.columns):
            raise SchemaError(f"duplicate column names in {list(self.columns)}")
        cells.setflags(write=False)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "cells", cells)

    @property
    def n_rows(self) -> int:
        return int(self.cells.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.cells.shape[1])

    def index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise SchemaError(f"unknown column {name!r}; available: {list(self.columns)}")

    def complete_mask(self, i: int, j: int) -> np.ndarray:
        return ~(np.isnan(self.cells[:, i]) | np.isnan(self.cells[:, j]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.cells, columns=list(self.columns))


def table_from_frame(frame: pd.DataFrame) -> Table:
    return Table(tuple(str(c) for c in frame.columns), frame.to_numpy(dtype=np.float64, na_value=np.nan))


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8", newline="") as f:
        return f.read()


def load_csv(path: str, delimiter: str = ",", missing_tokens: Sequence[str] = DEFAULT_MISSING, header: bool = True) -> Table:
    """Row numbers in errors are 1-based physical file lines; blank lines are skipped but still counted."""
    reader = csv.reader(io.StringIO(_read_text(path)), delimiter=delimiter)
    numbered = [(reader.line_num, r) for r in reader if r]
    if not numbered:
        raise SchemaError(f"{path} is empty")

    if header:
        columns, numbered = [c.strip() for c in numbered[0][1]], numbered[1:]
    else:
        columns = [f"c{k}" for k in range(len(numbered[0][1]))]
    lines = [line for line, _ in numbered]
    body = [record for _, record in numbered]

    for line, record in numbered:
        if len(record) != len(columns):
            raise SchemaError(f"expected {len(columns)} fields, found {len(record)}", row=line)

    frame = pd.DataFrame(body, columns=columns, dtype=object)
    missing = set(missing_tokens)
    for column in columns:
        raw = frame[column].str.strip()
        is_missing = raw.isin(missing)
        values = pd.to_numeric(raw.where(~is_missing), errors="coerce")
        bad = values.isna() & ~is_missing
        if bad.any():
            k = int(np.flatnonzero(bad.to_numpy())[0])
            raise ParseError(f"cannot parse {body[k][columns.index(column)]!r} as a number", row=lines[k], column=column)
        frame[column] = values.astype(np.float64)

    logger.info(f"loaded {path}: {len(body)} rows, columns={columns}")
    return table_from_frame(frame)


def write_csv(t: Table, path: Optional[str] = None) -> str:
    """Write the table (missing cells as empty fields); returns the CSV text."""
    text = t.to_frame().to_csv(index=False, lineterminator="\n")
    _emit(text, path)
    return text


def samples_from_table(t: Table, x: Optional[str] = None, y: Optional[str] = None) -> PairedSamples:
    """Complete rows of two columns; defaults to the first two columns."""
    if t.n_cols < 2:
        raise SchemaError(f"need at least 2 columns, got {t.n_cols}")
    i = t.index(x) if x else 0
    j = t.index(y) if y else 1
    mask = t.complete_mask(i, j)
    if mask.sum() < 2:
        raise SchemaError(f"columns {t.columns[i]!r} and {t.columns[j]!r} share fewer than 2 complete rows")
    return PairedSamples(t.cells[mask, i], t.cells[mask, j])


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        logger.info(f"wrote {path}")
    else:
        sys.stdout.write(text)


def _emit_sidecar(meta: dict, path: Optional[str]) -> None:
    if not path:
        logger.debug("no --output given; skipping JSON sidecar")
        return
    with open(f"{path}.json", "w", encoding="utf-8") as f:
        f.write(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _split(value: Optional[str]) -> List[str]:
    return [v.strip() for v in value.split(",") if v.strip()] if value else []


def _float_list(value: str) -> List[float]:
    """argparse type for comma-separated reals; a bad token is a usage error."""
    try:
        return [float(v) for v in _split(value)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}")


######################################
# Subcommands
######################################
def _scoring(args, cfg):
    from hyperco.power_harness import ScoringConfig

    scoring = ScoringConfig.from_config(cfg)
    return scoring.model_copy(update={"optimizer": scoring.optimizer.model_copy(update={"seed": args.seed})})


def _measures(args):
    from hyperco.power_harness import ALL_MEASURES

    return _split(args.measures) or list(ALL_MEASURES)


def cmd_estimate(args, cfg, threads: int) -> int:
    from hyperco.hc_estimator import estimate_hc, estimate_hc_reverse
    from hyperco.baselines import BaselineConfig, MIC_LABEL, pearson, dcor, mcor, mic

    t = load_csv(args.input, delimiter=args.delimiter)
    s = samples_from_table(t, args.x_col, args.y_col)
    scoring = _scoring(args, cfg)

    out = {"n": s.n, "seed": args.seed, "x": args.x_col or t.columns[0], "y": args.y_col or t.columns[1]}
    forward = estimate_hc(s, scoring.kde, scoring.optimizer, threads)
    reverse = estimate_hc_reverse(s, scoring.kde, scoring.optimizer, threads)
    out["hc"] = forward.value
    out["hc_reverse"] = reverse.value
    out["hc_detail"] = forward.model_dump(mode="json")
    out["hc_reverse_detail"] = reverse.model_dump(mode="json")

    baseline: BaselineConfig = scoring.baseline
    errors = {}
    for name, fn in (("pearson", pearson), ("dcor", dcor), ("mcor", lambda v: mcor(v, baseline)), (MIC_LABEL, lambda v: mic(v, baseline))):
        try:
            out[name] = fn(s)
        except HypercoError as e:
            logger.warning(f"{name} failed: {e}")
            out[name] = None
            errors[name] = str(e)
    if errors:
        out["errors"] = errors

    _emit(json.dumps(out, indent=2) + "\n", args.output)
    return 0


def cmd_screen(args, cfg, threads: int) -> int:
    from hyperco.screening import screen_pairs

    t = load_csv(args.input, delimiter=args.delimiter)
    min_complete = args.min_complete if args.min_complete is not None else cfg["screen"]["min_complete"]
    report = screen_pairs(t, _measures(args), min_complete, args.seed, _scoring(args, cfg), threads)
    frame = report.to_frame()
    if args.sort_by:
        from hyperco.screening import ScreenReport
        frame = ScreenReport(rows=tuple(report.sorted_by(args.sort_by))).to_frame()
    _emit(frame.to_csv(index=False, lineterminator="\n"), args.output)
    return 0


def cmd_rescore(args, cfg, threads: int) -> int:
    from hyperco.screening import ScreenReport, remove_and_rescore

    t = load_csv(args.input, delimiter=args.delimiter)
    x = args.x_col or t.columns[0]
    y = args.y_col or t.columns[1]
    rows = remove_and_rescore(t, (x, y), args.drop, _measures(args), args.seed, _scoring(args, cfg))
    _emit(ScreenReport(rows=tuple(rows)).to_frame().to_csv(index=False, lineterminator="\n"), args.output)
    return 0


def _mixture_spec(args, correlated: bool = True):
    from hyperco.synth import MixtureSpec

    fields = {"family": args.family, "alpha": args.alpha, "sigma2": args.sigma2, "n": args.n,
              "correlated": correlated, "seed": args.seed, "mirror": args.mirror}
    return MixtureSpec(**fields)


def cmd_power(args, cfg, threads: int) -> int:
    from hyperco.power_harness import PowerConfig, run_power

    power_cfg = cfg["power"]
    n_null = args.n_null or args.trials or power_cfg["n_null"]
    n_alt = args.n_alt or args.trials or power_cfg["n_alt"]
    common = dict(n_null=n_null, n_alt=n_alt, fpr=args.fpr if args.fpr is not None else power_cfg["fpr"],
                  measures=tuple(_measures(args)), seed=args.seed, trials_parallel=threads > 1,
                  scoring=_scoring(args, cfg))
    base = _mixture_spec(args)
    if args.sweep_values:
        pc = PowerConfig.from_sweep(base, args.sweep_param, args.sweep_values, **common)
    else:
        pc = PowerConfig(sweep=(base,), sweep_param=args.sweep_param, **common)

    report = run_power(pc, threads)
    _emit(report.to_frame().to_csv(index=False, lineterminator="\n"), args.output)
    _emit_sidecar(report.metadata(), args.output)
    return 0


def cmd_synth(args, cfg, threads: int) -> int:
    from hyperco.synth import generate

    spec = _mixture_spec(args, correlated=not args.null)
    s = generate(spec)
    frame = pd.DataFrame({"x": s.x, "y": s.y})
    _emit(frame.to_csv(index=False, lineterminator="\n"), args.output)
    _emit_sidecar({"kind": "synth", "spec": spec.model_dump(mode="json")}, args.output)
    return 0


def cmd_pathway(args, cfg, threads: int) -> int:
    from hyperco.power_harness import load_pathway_csv, planted_chain, pathway_sweep

    if args.input:
        series = load_pathway_csv(args.input)
    else:
        series = planted_chain(n=args.n, alpha=args.alpha, seed=args.seed)
    frame = pathway_sweep(series, _measures(args), args.rates, args.trials, args.seed, _scoring(args, cfg), threads)
    _emit(frame.to_csv(index=False, lineterminator="\n"), args.output)
    return 0


def cmd_bounds(args, cfg, threads: int) -> int:
    from hyperco import analytic_bounds as ab

    # out-of-range flags raise ValidationError here, a usage error
    inputs = ab.BoundInput(alpha=1.0 if args.alpha is None else args.alpha, rho=args.rho, k=args.k, eps=args.eps)
    if args.alpha is not None:
        if args.example == 1:
            value = ab.ex1_bound(inputs.rho, inputs.alpha)
        elif args.example == 2:
            value = ab.ex2_bound(inputs.k, inputs.alpha)
        else:
            value = ab.ex3_bound(inputs.k, inputs.alpha, inputs.eps)
        _emit(f"{value:.6g}\n", args.output)
        return 0

    frame = ab.bound_sweep(args.example, k=inputs.k, rho=inputs.rho, eps=inputs.eps)
    _emit(frame.to_csv(index=False, lineterminator="\n"), args.output)
    return 0


def cmd_table1(args, cfg, threads: int) -> int:
    from hyperco.synth import table1_scores

    frame = table1_scores(seed=args.seed, n=args.n, measures=_measures(args), configs=_scoring(args, cfg))
    _emit(frame.to_csv(index=False, lineterminator="\n"), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    from hyperco.synth import FunctionFamily

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Master seed (default: optimizer.seed from config)")
    common.add_argument("--threads", type=int, default=None, help=f"Worker threads ({utils.THREADS_ENV} overrides)")
    common.add_argument("--output", "-o", default=None, help="Output file (default: stdout)")
    common.add_argument("--config", default=None, help="TOML file overriding config.json sections")
    common.add_argument("--verbose", action="store_true", help="Debug logging")
    common.add_argument("--quiet", action="store_true", help="Warnings only")

    measures_help = "Comma-separated subset of hc,hc_reverse,pearson,dcor,mcor,mic"

    parser = argparse.ArgumentParser(prog="hyperco", description="Hypercontractivity coefficient and dependence-measure toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[common], help="Score one pair of columns (JSON)")
    p.add_argument("input", nargs="?", default="-", help="CSV file, or - for stdin")
    p.add_argument("--x-col", default=None)
    p.add_argument("--y-col", default=None)
    p.add_argument("--delimiter", default=",")
    p.set_defaults(handler=cmd_estimate)

    p = sub.add_parser("screen", parents=[common], help="Score every ordered column pair (CSV)")
    p.add_argument("input")
    p.add_argument("--measures", default=None, help=measures_help)
    p.add_argument("--min-complete", type=int, default=None)
    p.add_argument("--sort-by", default=None)
    p.add_argument("--delimiter", default=",")
    p.set_defaults(handler=cmd_screen)

    p = sub.add_parser("rescore", parents=[common], help="Score trajectory while removing extreme samples (CSV)")
    p.add_argument("input")
    p.add_argument("--x-col", default=None)
    p.add_argument("--y-col", default=None)
    p.add_argument("--drop", type=int, default=1)
    p.add_argument("--measures", default=None, help=measures_help)
    p.add_argument("--delimiter", default=",")
    p.set_defaults(handler=cmd_rescore)

    families = [f.value for f in FunctionFamily]
    for name, handler, help_text in (("power", cmd_power, "Power of each measure on mixture datasets (CSV + JSON)"),
                                     ("synth", cmd_synth, "Generate a mixture dataset (CSV + JSON)")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--family", choices=families, default="linear")
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--sigma2", type=float, default=0.0)
        p.add_argument("--n", type=int, default=320)
        p.add_argument("--mirror", action="store_true", help="Dominant block at x in [-0.1, 0]")
        p.set_defaults(handler=handler)
        if name == "power":
            p.add_argument("--trials", type=int, default=None, help="Null and alternative datasets per point")
            p.add_argument("--n-null", type=int, default=None)
            p.add_argument("--n-alt", type=int, default=None)
            p.add_argument("--fpr", type=float, default=None)
            p.add_argument("--measures", default=None, help=measures_help)
            p.add_argument("--sweep-param", choices=["sigma2", "alpha", "n"], default="sigma2")
            p.add_argument("--sweep-values", type=_float_list, default=None, help="Comma-separated values of --sweep-param")
        else:
            p.add_argument("--null", action="store_true", help="Independent dataset")

    p = sub.add_parser("pathway", parents=[common], help="Trend-recovery probability over subsample rates (CSV)")
    p.add_argument("input", nargs="?", default=None, help="Long CSV time,a,b,c,d (default: planted synthetic chain)")
    p.add_argument("--measures", default=None, help=measures_help)
    p.add_argument("--rates", type=_float_list, default=[0.1, 0.2, 0.5, 1.0])
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--n", type=int, default=400, help="Samples per timepoint of the planted chain")
    p.add_argument("--alpha", type=float, default=0.6, help="Rare-region mass of the planted chain")
    p.set_defaults(handler=cmd_pathway)

    p = sub.add_parser("bounds", parents=[common], help="Closed-form lower bounds (value or CSV sweep over alpha)")
    p.add_argument("--example", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--rho", type=float, default=0.8)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=None, help="Single alpha; omit for a sweep")
    p.set_defaults(handler=cmd_bounds)

    p = sub.add_parser("table1", parents=[common], help="Dependent vs independent scores on the eight families (CSV)")
    p.add_argument("--n", type=int, default=320)
    p.add_argument("--measures", default=None, help=measures_help)
    p.set_defaults(handler=cmd_table1)

    return parser


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0

    utils.set_log_level(args.verbose, args.quiet)
    try:
        cfg = utils.config
        if args.config:
            cfg = utils.merge_config(cfg, utils.load_toml_overrides(args.config))
        if args.seed is None:
            args.seed = int(cfg["optimizer"].get("seed", 0))
        threads = utils.resolve_threads(args.threads, cfg)
        return args.handler(args, cfg, threads)
    except ValidationError as e:
        print(f"hyperco {args.command}: invalid settings:\n{e}", file=sys.stderr)
        return 2
    except (HypercoError, OSError) as e:
        logger.debug(traceback.format_exc())
        print(f"hyperco {args.command}: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        # toml decoding errors
        print(f"hyperco {args.command}: {e}", file=sys.stderr)
        return 1
