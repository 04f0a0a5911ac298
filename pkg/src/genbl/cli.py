"""Command-line interface.

Exit codes: 0 success, 1 validation failure or bad arguments, 2 infeasible
constraint set, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import simbench
from .adjustment import adjust
from .belief import RTOL, BeliefStructure, validate
from .constraints import from_spec
from .errors import GBLError, InfeasibleError, ValidationError
from .genvar import generalise, get_shrink
from .kernels import KernelSpec
from .projection import FEAS_TOL, project

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _json_arg(value):
    """Inline JSON, or a path to a JSON file."""
    text = value.strip()
    if text[:1] in "[{" or text[:1].isdigit() or text[:1] == "-":
        return json.loads(text)
    return json.loads(Path(value).read_text(encoding="utf-8"))


def _read_vector(path):
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        return np.asarray(json.loads(text), dtype=float)
    rows = [r for r in csv.reader(io.StringIO(text)) if r and r[0].strip()]
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    return np.asarray([float(r[0]) for r in rows], dtype=float)


def _datum(args):
    if args.d is not None:
        return np.asarray(_json_arg(args.d), dtype=float)
    if args.data is not None:
        return _read_vector(args.data)
    raise UsageError("one of --d or --data is required")


def _sf(x):
    return f"{float(f'{x:.3g}'):g}" if np.isfinite(x) and x != 0 else f"{x:g}"


def _fmt(name, arr):
    arr = np.asarray(arr)
    if arr.ndim == 1:
        return f"{name}: [" + ", ".join(_sf(v) for v in arr) + "]"
    rows = ["[" + ", ".join(_sf(v) for v in row) + "]" for row in arr]
    return f"{name}: [" + ", ".join(rows) + "]"


def _emit(doc, table_lines, args):
    text = "\n".join(table_lines) + "\n" if args.table else json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_validate(args):
    bs = BeliefStructure.load(args.belief)
    report = validate(bs)
    out = sys.stdout if report.passed else sys.stderr
    out.write(report.summary() + "\n")
    return EXIT_OK if report.passed else EXIT_INVALID


def cmd_adjust(args):
    bs = BeliefStructure.load(args.belief)
    adj = adjust(bs, _datum(args), rtol=args.rtol)
    lines = [_fmt("expectation", adj.expectation), _fmt("variance", adj.variance)]
    _emit(adj.to_dict(), lines, args)
    return EXIT_OK


def cmd_generalise(args):
    bs = BeliefStructure.load(args.belief)
    adj = adjust(bs, _datum(args), rtol=args.rtol)
    c = from_spec(_json_arg(args.constraint), bs.n)
    gen = generalise(adj, c, get_shrink(args.shrink), feas_tol=args.feas_tol, rtol=args.rtol)
    doc = {"adjusted": adj.to_dict(), **gen.to_dict()}
    lines = [
        _fmt("adjusted expectation", adj.expectation),
        _fmt("adjusted variance", adj.variance),
        _fmt("generalised expectation", gen.expectation),
        _fmt("generalised variance", gen.variance),
    ]
    _emit(doc, lines, args)
    return EXIT_OK


def cmd_project(args):
    if args.belief:
        adj = adjust(BeliefStructure.load(args.belief), _datum(args), rtol=args.rtol)
        e, v = adj.expectation, adj.variance
    else:
        if args.e is None or args.v is None:
            raise UsageError("project needs --belief with data, or both --e and --v")
        e = np.asarray(_json_arg(args.e), dtype=float)
        v = np.asarray(_json_arg(args.v), dtype=float)
    c = from_spec(_json_arg(args.constraint), e.shape[0])
    res = project(e, v, c, feas_tol=args.feas_tol, rtol=args.rtol)
    _emit(res.to_dict(), [_fmt("q_star", res.q_star), f"active_set: {list(res.active_set)}"], args)
    return EXIT_OK


def cmd_study(args):
    cfg = simbench.StudyConfig.from_dict(_json_arg(args.config)) if args.config else simbench.StudyConfig()
    if args.seed is not None:
        cfg = simbench.StudyConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    report = simbench.run_study(cfg)
    if args.out:
        out = Path(args.out)
        out.write_text(report.to_csv(), encoding="utf-8")
        out.with_suffix(".txt").write_text(report.to_table(), encoding="utf-8")
    else:
        sys.stdout.write(report.to_csv())
        sys.stderr.write(report.to_table())
    return EXIT_OK


def read_spatial_csv(path):
    """Read ``lat,lon,count`` rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["lat", "lon", "count"]:
            raise ValidationError(f"{path}: expected header 'lat,lon,count', got {reader.fieldnames}")
        rows = list(reader)
    lat = np.array([float(r["lat"]) for r in rows])
    lon = np.array([float(r["lon"]) for r in rows])
    counts = []
    for r in rows:
        v = float(r["count"])
        if v != int(v) or v < 0:
            raise ValidationError(f"{path}: counts must be non-negative integers, got {r['count']!r}")
        counts.append(int(v))
    return lat, lon, np.array(counts)


def write_spatial_csv(path, lat, lon, counts):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lat", "lon", "count"])
        for a, b, c in zip(lat, lon, counts):
            w.writerow([repr(float(a)), repr(float(b)), int(c)])


def cmd_spatial(args):
    if args.data:
        lat, lon, counts = read_spatial_csv(args.data)
    else:
        sample = simbench.synth_spatial_counts(args.n_regions, args.length_scale, args.seed or 0)
        lat, lon, counts = sample.lat, sample.lon, sample.counts
    kernel = KernelSpec.from_dict(_json_arg(args.kernel)) if args.kernel else simbench.spatial_kernel()
    fit = simbench.fit_spatial(lat, lon, counts, kernel, shrink=get_shrink(args.shrink))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lat", "lon", "count", "adjusted_expectation", "generalised_expectation", "generalised_sd"])
    sd = np.sqrt(np.clip(np.diag(fit.generalised.variance), 0.0, None))
    for row in zip(lat, lon, counts, fit.adjusted.expectation, fit.generalised.expectation, sd):
        w.writerow([repr(float(row[0])), repr(float(row[1])), int(row[2])] + [repr(float(v)) for v in row[3:]])
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def build_parser():
    p = _Parser(prog="genbl", description="Bayes linear adjustment under linear inequality constraints.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, data=True):
        sp.add_argument("--belief", help="belief-structure JSON file")
        if data:
            sp.add_argument("--d", help="observed data as an inline JSON vector")
            sp.add_argument("--data", help="data file: JSON vector or single-column CSV")
        sp.add_argument("--rtol", type=float, default=RTOL, help="relative rank tolerance")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--table", action="store_true", help="print a 3 s.f. summary instead of JSON")

    sp = sub.add_parser("validate", help="check a belief structure")
    sp.add_argument("--belief", required=True)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("adjust", help="Bayes linear adjustment")
    common(sp)
    sp.set_defaults(func=cmd_adjust)

    commands = (
        ("generalise", cmd_generalise, "adjust, then project and shrink onto a constraint set"),
        ("project", cmd_project, "metric projection of an expectation onto a constraint set"),
    )
    for name, func, text in commands:
        sp = sub.add_parser(name, help=text)
        common(sp)
        sp.add_argument("--constraint", required=True, help="constraint JSON (inline or file)")
        sp.add_argument("--feas-tol", type=float, default=FEAS_TOL, help="feasibility tolerance")
        if name == "generalise":
            sp.add_argument("--shrink", default="cantelli", help="shrink function: cantelli or gauss")
        else:
            sp.add_argument("--e", help="expectation vector (inline JSON or file)")
            sp.add_argument("--v", help="metric matrix (inline JSON or file)")
        sp.set_defaults(func=func)

    sp = sub.add_parser("study", help="run the monotone-regression simulation study")
    sp.add_argument("--config", help="study config JSON (inline or file)")
    sp.add_argument("--seed", type=int, help="override the config seed")
    sp.add_argument("--out", help="CSV output; the text table goes next to it with a .txt suffix")
    sp.set_defaults(func=cmd_study)

    sp = sub.add_parser("spatial", help="non-negative spatial count fit")
    sp.add_argument("--data", help="CSV with header lat,lon,count; synthetic data when omitted")
    sp.add_argument("--n-regions", type=int, default=80, help="region count for synthetic data")
    sp.add_argument("--length-scale", type=float, default=85.0, help="km, for synthetic data")
    sp.add_argument("--seed", type=int, help="seed for synthetic data")
    sp.add_argument("--kernel", help="kernel JSON (inline or file)")
    sp.add_argument("--shrink", default="cantelli", help="shrink function: cantelli or gauss")
    sp.add_argument("--out", help="CSV output (default: stdout)")
    sp.set_defaults(func=cmd_spatial)
    return p


def run(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except InfeasibleError as err:
        sys.stderr.write(f"infeasible: {err}\n")
        return EXIT_INFEASIBLE
    except (ValidationError, GBLError, json.JSONDecodeError, KeyError, TypeError) as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_INVALID
    except OSError as err:
        sys.stderr.write(f"I/O error: {err}\n")
        return EXIT_IO


def main():
    sys.exit(run())
