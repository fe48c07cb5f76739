"""Command-line front end.

Commands::

    ifdetect train STREAM.csv -o MODEL.json
    ifdetect detectability MODEL.json --xi 0.2425,0.9701 --f 4 --tau-on 10 ...
    ifdetect simulate {numerical,cstr} --seed 0 --out-dir DIR
    ifdetect monitor MODEL.json STREAM.csv --xi ... --report REPORT.json --series SERIES.csv
    ifdetect report REPORT.json [--truth TRUTH.csv]

Exit codes:

    0  success
    1  unexpected internal error
    2  command-line usage error
    3  input could not be parsed (CSV, JSON, config file)
    4  model error (too few samples, singular covariance, dimension mismatch)
    5  fault not guaranteed detectable / empty window set

A ``--config FILE`` of ``key = value`` lines (keys are long option names, with
dashes or underscores, ``#`` starts a comment) supplies defaults for the
chosen command; options given on the command line win.  ``IFDETECT_LOG`` sets
the log level (``DEBUG``, ``INFO``, ``WARNING``...).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bank import COMPENSATE_FIRST, EXCLUDE_FIRST, BankState, run
from .detectability import IFParams, detectability_report
from .errors import (
    ConfigurationError,
    DimensionMismatch,
    DomainError,
    IFDetectError,
    SingularCovariance,
    TooFewSamples,
)
from .simkit import (
    FaultSchedule,
    cstr_scenario,
    numerical_scenario,
)
from .stat_core import GaussianModel, fit_model

log = logging.getLogger("ifdetect")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_MODEL = 4
EXIT_VERDICT = 5

MODEL_FORMAT = "ifdetect-model"
MODEL_VERSION = 1


class ParseError(IFDetectError):
    pass


# ---------------------------------------------------------------- files


def read_csv(path, columns=None) -> np.ndarray:
    """Read a numeric CSV with a header row.

    A leading ``k`` column is treated as a time index and dropped.  With
    ``columns`` only those named columns are read, in that order.

    Raises:
        ParseError: unreadable file, missing column or a non-numeric cell
            (the message names the row and column).
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if columns:
        missing = [c for c in columns if c not in header]
        if missing:
            raise ParseError(f"{path}: missing column(s) {', '.join(missing)} (header: {', '.join(header)})")
        idx = [header.index(c) for c in columns]
    else:
        idx = [i for i, h in enumerate(header) if h != "k"]
    if not idx:
        raise ParseError(f"{path}: no data columns")
    out = np.empty((len(rows) - 1, len(idx)))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}, row {r}: expected {len(header)} fields, found {len(row)}")
        for j, i in enumerate(idx):
            try:
                out[r - 2, j] = float(row[i])
            except ValueError:
                raise ParseError(f"{path}, row {r}, column {header[i]!r}: not a number: {row[i]!r}") from None
    if not np.all(np.isfinite(out)):
        bad = np.argwhere(~np.isfinite(out))[0]
        raise ParseError(f"{path}, row {bad[0] + 2}, column {header[idx[bad[1]]]!r}: non-finite value")
    return out


def write_stream_csv(path, data) -> None:
    data = np.asarray(data)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k"] + [f"var_{i + 1}" for i in range(data.shape[1])])
        for k, row in enumerate(data, start=1):
            w.writerow([k] + [repr(float(v)) for v in row])


def write_truth_csv(path, schedule: FaultSchedule) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "mu", "nu", "f"])
        for q, e in enumerate(schedule, start=1):
            w.writerow([q, e.mu, e.nu, repr(e.magnitude)])


def read_truth_csv(path) -> list:
    arr = read_csv(path, ["q", "mu", "nu", "f"])
    return [(int(q), int(mu), int(nu), float(f)) for q, mu, nu, f in arr]


def model_to_dict(model: GaussianModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "n_train": model.n_train,
        "dim": model.dim,
        "mean": [float(v) for v in model.mean_hat],
        "cov": [[float(v) for v in row] for row in model.cov_hat],
    }


def model_from_dict(doc: dict) -> GaussianModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ParseError("not an ifdetect model document")
    if doc.get("version") != MODEL_VERSION:
        raise ParseError(f"unsupported model version {doc.get('version')!r} (expected {MODEL_VERSION})")
    try:
        model = GaussianModel.from_moments(doc["mean"], doc["cov"], int(doc["n_train"]))
    except KeyError as exc:
        raise ParseError(f"model document lacks field {exc}") from None
    if model.dim != doc.get("dim", model.dim):
        raise ParseError("model 'dim' does not match the mean vector")
    return model


def save_model(path, model: GaussianModel) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(path) -> GaussianModel:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
    return model_from_dict(doc)


def read_config(path) -> dict:
    """Parse ``key = value`` lines; keys are normalised to option destinations."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}, line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


# ---------------------------------------------------------------- helpers


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in str(text).split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _windows(text: str):
    text = str(text)
    if "-" in text:
        lo, hi = text.split("-", 1)
        return range(int(lo), int(hi) + 1)
    return [int(v) for v in text.split(",")]


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ParseError(f"expected a boolean, got {v!r}")


def _params_from(args) -> IFParams:
    missing = [n for n in ("xi", "f", "tau_on", "tau_off_prev", "tau_off_next") if getattr(args, n) is None]
    if missing:
        raise DomainError("missing fault parameter(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return IFParams(
        args.xi,
        args.f,
        args.tau_on,
        args.tau_off_prev,
        args.tau_off_next,
        is_lower_bound=_bool(args.lower_bounds),
    )


def _add_fault_args(p) -> None:
    p.add_argument("--xi", type=_floats, help="fault direction, comma separated")
    p.add_argument("--f", type=float, help="fault magnitude (or its lower bound)")
    p.add_argument("--tau-on", type=int, help="active duration in samples")
    p.add_argument("--tau-off-prev", type=int, help="inactive duration before the episode")
    p.add_argument("--tau-off-next", type=int, help="inactive duration after the episode")
    p.add_argument("--alpha", type=float, default=0.01, help="significance level (default 0.01)")
    p.add_argument("--lower-bounds", action="store_true", default=False, help="treat the parameters as lower bounds")


# ---------------------------------------------------------------- commands


def cmd_train(args) -> int:
    cols = args.columns.split(",") if args.columns else None
    data = read_csv(args.input, cols)
    model = fit_model(data)
    save_model(args.output, model)
    print(f"trained on {model.n_train} samples of {model.dim} variables -> {args.output}")
    return EXIT_OK


def cmd_detectability(args) -> int:
    model = load_model(args.model)
    params = _params_from(args)
    rep = detectability_report(model, params, args.alpha)
    if args.json:
        print(json.dumps(rep.to_dict(), indent=2))
    else:
        win = rep.admissible_windows
        print(f"guaranteed detectable: {'yes' if rep.detectable else 'no'}")
        print(f"admissible windows: {f'[{win.start}, {win.stop - 1}]' if len(win) else 'none'}")
        print(f"W* = {rep.w_star}   W# = {rep.w_sharp}")
        for w, d in rep.delays.items():
            print(f"  W={w:3d}  mu_delay={d.mu_delay}  nu_delay={d.nu_delay}  k**-offset={d.k_doublestar_offset}")
        if rep.boundary_windows:
            print(f"boundary windows (W equal to the shorter inactive duration): {rep.boundary_windows}")
    return EXIT_OK if rep.detectable else EXIT_VERDICT


def cmd_simulate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.process == "numerical":
        sc = numerical_scenario(args.seed, n_train=args.n_train, n_episodes=args.episodes or 7)
    else:
        sc = cstr_scenario(args.seed, n_train=args.n_train, n_episodes=args.episodes or 6)
    write_stream_csv(out / "train.csv", sc.train)
    write_stream_csv(out / "test.csv", sc.faulty)
    write_truth_csv(out / "truth.csv", sc.schedule)
    print(f"wrote {len(sc.train)} training and {len(sc.faulty)} test samples, {len(sc.schedule)} episodes -> {out}")
    return EXIT_OK


def cmd_monitor(args) -> int:
    model = load_model(args.model)
    stream = read_csv(args.stream)
    if stream.shape[1] != model.dim:
        raise DimensionMismatch(f"stream has {stream.shape[1]} variables, model expects {model.dim}")
    params = _params_from(args)
    windows = _windows(args.windows) if args.windows else None
    bank = BankState(model, params, args.alpha, windows=windows, order=args.order, record_series=bool(args.series))
    rep = run(bank, stream)
    text = rep.to_json(indent=2)
    if args.report:
        Path(args.report).write_text(text + "\n")
    else:
        print(text)
    if args.series:
        with open(args.series, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "W", "T2", "limit", "alarm"])
            for win in bank.windows:
                lim = bank.limit(win)
                for k, (t2, flag) in enumerate(zip(bank.series[win], bank.flags[win]), start=win):
                    w.writerow([k, win, repr(float(t2)), repr(lim), int(flag)])
    n_conf = len(rep.confirmed)
    log.info("%d confirmed episode(s), %d reported", n_conf, len(rep.episodes))
    if args.report:
        print(f"{n_conf} confirmed episode(s) -> {args.report}")
    return EXIT_OK


def _fmt(lo, hi) -> str:
    return f"[{'-inf' if lo is None else lo}, {'+inf' if hi is None else hi}]"


def cmd_report(args) -> int:
    try:
        doc = json.loads(Path(args.report).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {args.report}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.report}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
    truth = read_truth_csv(args.truth) if args.truth else None
    eps = doc.get("episodes", [])
    print(f"windows {doc.get('windows')}  samples {doc.get('n_samples')}  episodes {len(eps)}")
    hits = 0
    for e in eps:
        line = f"q={e['q']:2d}  mu in {_fmt(e['mu_lo'], e['mu_hi'])}  nu in {_fmt(e['nu_lo'], e['nu_hi'])}"
        if not e.get("confirmed", True):
            line += "  (unconfirmed)"
        if e.get("flags"):
            line += "  flags: " + ",".join(e["flags"])
        print(line)
    if truth is not None:
        def inside(x, lo, hi):
            return (lo is None or lo <= x) and (hi is None or x <= hi)

        for q, mu, nu, _ in truth:
            ok = any(inside(mu, e["mu_lo"], e["mu_hi"]) and inside(nu, e["nu_lo"], e["nu_hi"]) for e in eps)
            hits += ok
            print(f"truth q={q}: mu={mu} nu={nu}  {'contained' if ok else 'NOT contained'}")
        print(f"{hits}/{len(truth)} true episodes contained")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ifdetect", description="Intermittent fault detection with MA-T^2 chart banks")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key = value file supplying option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a Gaussian model to fault-free samples")
    p.add_argument("input", help="CSV with a header row")
    p.add_argument("-o", "--output", required=True, help="model JSON path")
    p.add_argument("--columns", help="comma-separated column names to use")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detectability", help="guaranteed-detectability report for a fault")
    p.add_argument("model")
    _add_fault_args(p)
    p.add_argument("--json", action="store_true", default=False)
    p.set_defaults(func=cmd_detectability)

    p = sub.add_parser("simulate", help="generate training/test CSVs and a ground-truth sidecar")
    p.add_argument("process", choices=("numerical", "cstr"))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--n-train", type=int, default=5000)
    p.add_argument("--episodes", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("monitor", help="run the chart bank over a stream")
    p.add_argument("model")
    p.add_argument("stream")
    _add_fault_args(p)
    p.add_argument("--windows", help="window lengths, 'lo-hi' or comma separated (default: all admissible)")
    p.add_argument("--order", choices=(COMPENSATE_FIRST, EXCLUDE_FIRST), default=COMPENSATE_FIRST)
    p.add_argument("--report", help="JSON report path (default: stdout)")
    p.add_argument("--series", help="CSV of k, W, T2, limit, alarm rows")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("report", help="summarise a monitor report")
    p.add_argument("report")
    p.add_argument("--truth", help="ground-truth CSV (q, mu, nu, f) to score against")
    p.set_defaults(func=cmd_report)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = read_config(known.config)
    cmd = next((a for a in rest if not a.startswith("-")), None)
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if cmd not in subs.choices:
        return
    sp = subs.choices[cmd]
    dests = {a.dest: a for a in sp._actions}
    for key, value in cfg.items():
        if key not in dests:
            raise ParseError(f"config key {key!r} is not an option of '{cmd}'")
        action = dests[key]
        if action.option_strings == []:
            raise ParseError(f"config key {key!r} is positional; give it on the command line")
        if isinstance(action, argparse._StoreTrueAction):
            sp.set_defaults(**{key: _bool(value)})
        elif action.required:
            action.required = False
            sp.set_defaults(**{key: action.type(value) if action.type else value})
        else:
            # string defaults go through the option's type conversion
            sp.set_defaults(**{key: value})


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("IFDETECT_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (TooFewSamples, SingularCovariance, DimensionMismatch) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except ConfigurationError as exc:
        print(f"not detectable: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    except (DomainError, argparse.ArgumentTypeError) as exc:
        print(f"invalid parameter: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IFDetectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
