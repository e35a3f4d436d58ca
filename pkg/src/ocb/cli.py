"""Command-line front end: ``ocb sweep``, ``ocb figure`` and ``ocb verify``.

Sweeps write CSV: a ``# schema=1`` comment line, a header and one row per
SNR point, numbers with 12 significant digits.  Rows are computed in a
process pool capped by the OCB_THREADS environment variable and written in
index order, so identical arguments give byte-identical files.
"""
import argparse
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .asymptotics import chi, high_snr_asymptote
from .bounds import ConstraintSpec
from .errors import DomainError
from .optimize import envelope

SCHEMA = "# schema=1"
FORMULAS = {"I": (26, 27, 28), "II": (38, 39, 40), "III": (46, 47, 48)}
LOWER_IDS = {26, 38, 46}

FIGURES = {
    1: ("I", 0.1),
    2: ("I", 0.4),
    3: ("II", None),
    5: ("III", None),
}
DEFAULTS = {"sigma": 1.0, "db_min": -10.0, "db_max": 60.0, "steps": 281, "db_convention": 10}
CHI_STEPS = 1000  # figure 4 default: alpha = 0.001, 0.002, ..., 1


@dataclass(frozen=True)
class SweepRow:
    ratio: float
    ratio_db: float
    bounds: dict  # formula id -> nats
    lower: float
    upper: float
    gap: float
    asymptote: float


def formula_column(fid):
    return f"{'lower' if fid in LOWER_IDS else 'upper'}_{fid}"


def header(case):
    cols = ["ratio", "ratio_db"] + [formula_column(f) for f in FORMULAS[case]]
    return cols + ["envelope_lower", "envelope_upper", "gap", "asymptote"]


def sweep_point(case, alpha, ratio_db, sigma=1.0, db_convention=10):
    """One sweep row; ``ratio`` is A/sigma (Cases I, II) or E/sigma (Case III)."""
    ratio = 10.0 ** (ratio_db / db_convention)
    level = ratio * sigma
    if case == "III":
        spec = ConstraintSpec(sigma, level)
    elif case == "II":
        spec = ConstraintSpec(sigma, level, level)
    else:
        spec = ConstraintSpec(sigma, alpha * level, level)
    env = envelope(spec)
    asy = high_snr_asymptote(case, ratio, alpha if case == "I" else None)
    return SweepRow(ratio, ratio_db, dict(env.contributors), env.lower, env.upper, env.gap, asy)


def _point(args):
    return sweep_point(*args)


def _workers():
    cap = os.environ.get("OCB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise DomainError(f"OCB_THREADS must be an integer, got {cap!r}")
    return n


def sweep(case, alpha, db_min, db_max, steps, sigma=1.0, db_convention=10):
    if case not in FORMULAS:
        raise DomainError(f"unknown case {case!r}")
    if case == "I" and (alpha is None or not 0 < alpha < 0.5):
        raise DomainError("Case I needs --alpha in (0, 1/2)")
    if not db_min < db_max or steps < 2:
        raise DomainError("need db_min < db_max and steps >= 2")
    grid = np.linspace(db_min, db_max, int(steps))
    jobs = [(case, alpha, float(d), sigma, db_convention) for d in grid]
    workers = _workers()
    if workers > 1 and len(jobs) > 8:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_point, jobs, chunksize=8))
    return [_point(j) for j in jobs]


def _fmt(v):
    return format(float(v), ".12g")


def write_csv(rows, case, path):
    lines = [SCHEMA, ",".join(header(case))]
    for r in rows:
        vals = [r.ratio, r.ratio_db] + [r.bounds[f] for f in FORMULAS[case]]
        vals += [r.lower, r.upper, r.gap, r.asymptote]
        lines.append(",".join(_fmt(v) for v in vals))
    _write_text("\n".join(lines) + "\n", path)


def _write_text(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def read_csv(path):
    """Inverse of write_csv: (header, 2-d float array)."""
    with open(path) as fh:
        first = fh.readline().strip()
        if first != SCHEMA:
            raise DomainError(f"unsupported CSV schema line {first!r}")
        cols = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return cols, data


def max_gap(rows):
    k = max(range(len(rows)), key=lambda i: rows[i].gap)
    return rows[k].gap, rows[k].ratio_db


def chi_table(steps):
    alphas = np.linspace(0.0, 1.0, int(steps) + 1)[1:]
    return [(float(a), chi(float(a))) for a in alphas]


# --------------------------------------------------------------- config

def read_config(path):
    """Line-oriented key=value file; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{n}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


_TYPES = {"sigma": float, "db_min": float, "db_max": float, "steps": int, "db_convention": int,
          "alpha": float, "case": str, "out": str}


def _resolve(args, defaults=DEFAULTS):
    """Flags > config file > built-in defaults."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    for key, conv in _TYPES.items():
        if not hasattr(args, key):
            continue
        if getattr(args, key) is None:
            if key in cfg:
                try:
                    setattr(args, key, conv(cfg[key]))
                except ValueError:
                    raise DomainError(f"config value for {key} is not a {conv.__name__}: {cfg[key]!r}")
            elif key in defaults:
                setattr(args, key, defaults[key])
    unknown = set(cfg) - set(_TYPES)
    if unknown:
        raise DomainError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if getattr(args, "db_convention", 10) not in (10, 20):
        raise DomainError("--db-convention must be 10 or 20")
    return args


# --------------------------------------------------------------- commands

def cmd_sweep(args):
    args = _resolve(args)
    case = args.case
    if case is None:
        raise DomainError("--case is required")
    alpha = args.alpha
    if case in ("II", "III") and alpha is not None:
        warnings.warn(f"--alpha is ignored for Case {case}")
        alpha = None
    rows = sweep(case, alpha, args.db_min, args.db_max, args.steps, args.sigma, args.db_convention)
    write_csv(rows, case, args.out)
    return 0


def cmd_figure(args):
    fig = args.figure_id
    args = _resolve(args, {**DEFAULTS, "steps": CHI_STEPS} if fig == 4 else DEFAULTS)
    if fig == 4:
        table = chi_table(args.steps)
        lines = [SCHEMA, "alpha,chi"] + [f"{_fmt(a)},{_fmt(c)}" for a, c in table]
        if args.out is not None:
            _write_text("\n".join(lines) + "\n", args.out)
        print(f"chi_min={min(c for _, c in table):.4f} chi_max={max(c for _, c in table):.4f}")
        return 0
    case, alpha = FIGURES[fig]
    rows = sweep(case, alpha, args.db_min, args.db_max, args.steps, args.sigma, args.db_convention)
    if args.out is not None:
        write_csv(rows, case, args.out)
    g, at = max_gap(rows)
    print(f"max_gap_nats={g:.4f} at_db={at:.2f}")
    return 0


def cmd_verify(args):
    from .checks import SUITES, run_suite

    names = list(SUITES) if args.suite == "all" else [args.suite]
    failed = 0
    for name in names:
        for res in run_suite(name):
            status = "PASS" if res.ok else "FAIL"
            print(f"suite={name} check={res.name} status={status} detail={res.detail}", flush=True)
            failed += not res.ok
    print(f"summary failed={failed}")
    return 1 if failed else 0


def build_parser():
    p = argparse.ArgumentParser(prog="ocb", description="Capacity bounds for the optical intensity channel.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--db-min", type=float, default=None)
        sp.add_argument("--db-max", type=float, default=None)
        sp.add_argument("--steps", type=int, default=None)
        sp.add_argument("--sigma", type=float, default=None)
        sp.add_argument("--out", default=None, help="output CSV path ('-' for stdout)")
        sp.add_argument("--config", default=None, help="key=value file; flags take precedence")
        sp.add_argument("--db-convention", type=int, default=None, choices=(10, 20),
                        help="ratio_db = k log10(ratio); 10 by default")

    s = sub.add_parser("sweep", help="bounds over an SNR range, as CSV")
    s.add_argument("--case", choices=("I", "II", "III"), default=None)
    s.add_argument("--alpha", type=float, default=None)
    common(s)
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("figure", help="data behind one of the standard figures")
    f.add_argument("figure_id", type=int, choices=(1, 2, 3, 4, 5))
    common(f)
    f.set_defaults(func=cmd_figure)

    v = sub.add_parser("verify", help="run an invariant suite")
    v.add_argument("suite", choices=("lemmas", "sandwich", "asymptotics", "oracle", "all"))
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        parser.error(str(exc))  # exits with status 2


if __name__ == "__main__":
    sys.exit(main())
