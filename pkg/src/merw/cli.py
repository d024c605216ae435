"""Command-line interface: ``merw {simulate,moments,limits,verify}``.

Exit codes: 0 success, 1 verification failure or oracle disagreement,
2 usage error, 3 resource or budget error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import io as mio
from .closedform import (
    BudgetExceeded,
    iter_exact_laws,
    exact_second_moment,
    limit_constants,
)
from .closedform.moments import closed_form_series
from .engines import ENGINES, Record, simulate
from .model import DomainError, WalkConfig, memory_to_a
from .verify import FAULTS, TIERS, Suite, table

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
CLOSED_FORM_RTOL = 1e-10

# flag name -> (type, default); the config file uses the same keys
KEYS = {
    "dim": (int, None),
    "p": (str, None),
    "q": (str, None),
    "steps": (int, None),
    "runs": (int, 1),
    "seed": (int, 0),
    "engine": (str, "reduced"),
    "record": (str, "positions"),
    "out": (str, None),
    "format": (str, "csv"),
    "workers": (int, None),
    "tier": (str, "fast"),
    "tol": (float, 1e-10),
    "exact_enum": (bool, False),
    "inject_fault": (str, None),
}


class UsageError(Exception):
    pass


def read_config(path) -> dict:
    """Flat ``key = value`` text, or a run manifest written by this tool."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        return {k: v for k, v in data.get("config", data).items() if v is not None}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _coerce(key, value):
    typ, _ = KEYS[key]
    if typ is bool:
        if isinstance(value, bool):
            return value
        return str(value).strip().lower() in ("1", "true", "yes", "on")
    try:
        return typ(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value for {key}: {value!r}") from exc


def resolve(args, needed) -> dict:
    """Merge flags over the config file over defaults for the keys in ``needed``."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    unknown = set(cfg) - set(KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for key in needed:
        val = getattr(args, key, None)
        if val is None or (val is False and key in cfg):
            val = cfg.get(key)
        if val is None:
            val = KEYS[key][1]
        out[key] = None if val is None else _coerce(key, val)
    return out


def _require(opts, *keys):
    missing = [k for k in keys if opts.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k for k in missing))


def _emit(text: str, path):
    if path is None:
        sys.stdout.write(text)
    else:
        mio.write_text(path, text)


def _write_manifest(outdir: Path, sub, opts, outputs, seed=None, engine=None):
    man = mio.manifest(sub, opts, outputs, __version__, engine=engine, seed=seed)
    mio.write_text(outdir / "manifest.json", mio.dumps(man))


# subcommands ------------------------------------------------------------------


def cmd_simulate(args) -> int:
    opts = resolve(args, ["dim", "p", "q", "steps", "runs", "seed", "engine", "record", "out", "format"])
    _require(opts, "dim", "p", "steps")
    if opts["engine"] not in ENGINES:
        raise UsageError(f"--engine must be one of {ENGINES}")
    if opts["format"] not in ("csv", "json"):
        raise UsageError("--format must be csv or json")
    if opts["runs"] < 1:
        raise UsageError("--runs must be positive")
    if opts["runs"] > 1 and opts["out"] is None:
        raise UsageError("--runs > 1 needs --out DIR")
    record = Record.parse(opts["record"])
    cfg = WalkConfig(opts["dim"], opts["p"], opts["steps"], seed=opts["seed"], q=opts["q"])

    def render(traj):
        if opts["format"] == "csv":
            return mio.trajectory_csv(traj)
        return mio.dumps({"step": traj.steps, "position": traj.positions})

    if opts["out"] is None:
        _emit(render(simulate(cfg, opts["engine"], 0, record)), None)
        return EXIT_OK
    outdir = Path(opts["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for stream in range(opts["runs"]):
        path = outdir / f"trajectory_{stream}.{opts['format']}"
        mio.write_text(path, render(simulate(cfg, opts["engine"], stream, record)))
        outputs.append(path.name)
    _write_manifest(outdir, "simulate", opts, outputs, seed=opts["seed"], engine=opts["engine"])
    return EXIT_OK


def cmd_moments(args) -> int:
    opts = resolve(args, ["dim", "p", "q", "steps", "out", "format", "exact_enum"])
    _require(opts, "dim", "p", "steps")
    d, p, q, n = opts["dim"], opts["p"], opts["q"], opts["steps"]
    if n < 1:
        raise UsageError("--n must be positive")
    table_ = exact_second_moment(n, d, p, q)
    extra = {}
    problems = []
    a = memory_to_a(d, p)
    if q is None and a != Fraction(1, 2):
        cf = closed_form_series(n, d, float(a))
        for i in range(d):
            extra[f"closed_cov{i + 1}_{i + 1}"] = cf
        rec = table_.second[:, 0, 0]
        rel = np.abs(np.asarray(cf) - rec) / np.maximum(np.abs(rec), 1e-300)
        if np.any(rel > CLOSED_FORM_RTOL):
            problems.append(f"closed form disagrees with the recurrence (max rel {rel.max():.3g})")
    if opts["exact_enum"]:
        exact_rec = exact_second_moment(n, d, p, q, exact=True)
        cols = [[] for _ in range(d)]
        for law in iter_exact_laws(n, d, p, q):
            m_rec, s_rec = exact_rec.row(law.n)
            sm = law.second_moment()
            if list(m_rec) != law.mean() or s_rec.tolist() != sm:
                problems.append(f"exact enumeration disagrees with the recurrence at n={law.n}")
            for i in range(d):
                cols[i].append(float(sm[i][i]))
        for i in range(d):
            extra[f"enum_cov{i + 1}_{i + 1}"] = cols[i]
    if opts["format"] == "csv":
        text = mio.moment_csv(table_, extra)
    else:
        text = mio.dumps({"d": d, "p": p, "q": q, "n": table_.ns, "mean": table_.mean,
                          "second": table_.second, **extra})
    _emit(text, opts["out"])
    if problems:
        for msg in problems:
            print("error: " + msg, file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_limits(args) -> int:
    opts = resolve(args, ["dim", "p", "q", "tol", "out", "format"])
    _require(opts, "dim", "p")
    lc = limit_constants(opts["dim"], opts["p"], opts["q"], tol=opts["tol"])
    data = mio.to_plain(lc.as_dict())
    if opts["format"] == "json":
        text = mio.dumps(data)
    else:
        lines = ["key,value"]
        for key, val in data.items():
            if isinstance(val, list):
                for j, v in enumerate(np.ravel(val)):
                    lines.append(f"{key}[{j}],{mio.fmt(v)}")
            elif isinstance(val, str):
                lines.append(f"{key},{val}")
            else:
                lines.append(f"{key},{'' if val is None else mio.fmt(val)}")
        text = "\n".join(lines) + "\n"
    _emit(text, opts["out"])
    return EXIT_OK


def cmd_verify(args) -> int:
    opts = resolve(args, ["tier", "seed", "workers", "out", "inject_fault"])
    if opts["tier"] not in TIERS:
        raise UsageError(f"--tier must be one of {TIERS}")
    if opts["inject_fault"] is not None and opts["inject_fault"] not in FAULTS:
        raise UsageError(f"--inject-fault must be one of {FAULTS}")
    workers = opts["workers"] or os.cpu_count() or 1
    suite = Suite(opts["tier"], opts["seed"], workers, opts["inject_fault"])
    only = set(args.only) if args.only else None

    def progress(res):
        print(f"criterion {res['id']:>2}: {res['status'].upper()}  {res['name']}", file=sys.stderr)

    report = suite.run(only, progress)
    if opts["out"] is not None:
        mio.write_text(opts["out"], mio.dumps(report))
    sys.stdout.write(table(report))
    return EXIT_OK if report["pass"] else EXIT_FAIL


# parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="merw", description="Multi-dimensional elephant random walk toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, walk=True):
        sp.add_argument("--config", help="key = value file (or a manifest); flags override it")
        sp.add_argument("--out", help="output path")
        sp.add_argument("--format", choices=("csv", "json"))
        if walk:
            sp.add_argument("--dim", type=int, help="dimension d")
            sp.add_argument("--p", help="memory parameter, e.g. 0.625 or 5/8")
            sp.add_argument("--q", help="first-step bias; selects the biased first step")

    sp = sub.add_parser("simulate", help="write trajectories")
    common(sp)
    sp.add_argument("--steps", "--n", dest="steps", type=int, help="horizon")
    sp.add_argument("--runs", type=int, help="number of trajectories (streams 0..runs-1)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--engine", choices=ENGINES, help="default: reduced")
    sp.add_argument("--record", help="final, positions (default) or checkpoints:<stride>")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("moments", help="exact moment table")
    common(sp)
    sp.add_argument("--n", "--steps", dest="steps", type=int, help="last step of the table")
    sp.add_argument("--exact-enum", dest="exact_enum", action="store_true", default=None,
                    help="add the exhaustive enumeration column at the last step")
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("limits", help="regime and limit constants")
    common(sp)
    sp.add_argument("--tol", type=float, help="3F2 error bound (default 1e-10)")
    sp.set_defaults(func=cmd_limits)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    common(sp, walk=False)
    sp.add_argument("--tier", choices=TIERS)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--inject-fault", dest="inject_fault", choices=FAULTS)
    sp.add_argument("--only", type=int, nargs="+", help="criterion ids to run")
    sp.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    if args.command == "limits" and args.format is None:
        args.format = "json"
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OverflowError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (DomainError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
