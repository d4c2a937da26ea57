"""Command line front end: ``flagstat {infer,test,simulate,coverage,geom}``.

Exit status is 0 on success (or an accepted hypothesis), 1 when a test
rejects and 2 on invalid input.  Matrices are read from headerless CSV
files unless ``--header`` is given.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import grassmann, stiefel
from ._validation import check_alpha, check_flag_type
from .exceptions import FlagstatError
from .flag import _check_orthogonal
from .inference import (
    CovModel,
    dof,
    flag_hypothesis_test,
    pivotal_statistic,
    sample_covariance,
)
from .montecarlo import McConfig, coverage_rate, histogram_csv, replicate_pivotal, seeded_model

logger = logging.getLogger("flagstat")

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_INVALID = 2


class InputError(Exception):
    """Invalid command line input; the message is shown to the user."""


def _fmt(x):
    return f"{x:.17g}"


def read_matrix(path, header=False):
    """Read a numeric CSV matrix, one row per line."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if header:
        lines = lines[1:]
    if not lines:
        raise InputError(f"{path} contains no data rows")
    try:
        rows = [[float(tok) for tok in ln.split(",")] for ln in lines]
    except ValueError:
        raise InputError(f"cannot parse {path} as numeric CSV")
    if len({len(r) for r in rows}) != 1:
        raise InputError(f"{path} has rows of unequal length")
    M = np.array(rows)
    if not np.all(np.isfinite(M)):
        raise InputError(f"{path} contains non-finite values")
    return M


def _read_square(path, header, d, what):
    M = read_matrix(path, header)
    if M.shape != (d, d):
        raise InputError(f"dimension mismatch: {what} is {M.shape[0]}x{M.shape[1]}, expected {d}x{d}")
    return M


def _read_orthogonal(source, header, d, what):
    if source == "identity":
        return np.eye(d)
    M = _read_square(source, header, d, what)
    try:
        return _check_orthogonal(M, d)
    except FlagstatError:
        raise InputError(f"{what} is not orthogonal")


def _read_data(args, ft):
    X = read_matrix(args.data, args.header)
    if X.shape[1] != ft.d:
        raise InputError(f"dimension mismatch: data has {X.shape[1]} columns, "
                         f"flag type {ft} sums to {ft.d}")
    if X.shape[0] < 2:
        raise InputError("need at least two data rows")
    return X


def _parse_floats(text, what):
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise InputError(f"cannot parse {what} {text!r}")


def _emit(args, text):
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dict_csv(doc):
    lines = ["key,value"]
    for k, v in doc.items():
        if isinstance(v, float):
            v = _fmt(v)
        elif isinstance(v, (list, tuple)):
            v = ";".join(str(x) for x in v)
        lines.append(f"{k},{'' if v is None else v}")
    return "\n".join(lines) + "\n"


def _report_text(args, doc):
    if args.format == "csv":
        return _dict_csv(doc)
    return json.dumps(doc) + "\n"


def _matrix_csv(M):
    return "".join(",".join(_fmt(x) for x in row) + "\n" for row in np.atleast_2d(M))


def cmd_infer(args):
    ft = check_flag_type(args.type)
    alpha = check_alpha(args.alpha)
    X = _read_data(args, ft)
    gamma = _read_orthogonal(args.gamma, args.header, ft.d, "gamma")
    S = sample_covariance(X, args.denominator)
    report = pivotal_statistic(gamma, S, ft, X.shape[0])
    doc = report.to_dict()
    doc["alpha"] = alpha
    doc["n"] = X.shape[0]
    _emit(args, _report_text(args, doc))
    return EXIT_OK


def cmd_test(args):
    ft = check_flag_type(args.type)
    X = _read_data(args, ft)
    q0 = _read_orthogonal(args.q0, args.header, ft.d, "q0")
    decision, report = flag_hypothesis_test(q0, X, ft, args.alpha, args.denominator)
    doc = report.to_dict()
    doc["n"] = X.shape[0]
    _emit(args, _report_text(args, doc))
    return EXIT_OK if decision == "accept" else EXIT_REJECT


def _model(args):
    ft = check_flag_type(args.type, args.d)
    lambdas = _parse_floats(args.lambdas, "eigenvalues")
    if args.gamma is None:
        return seeded_model(ft, lambdas, args.seed)
    gamma = _read_orthogonal(args.gamma, args.header, ft.d, "gamma")
    return CovModel(gamma, lambdas, ft)


def _config(args):
    return McConfig(_model(args), args.n, args.reps, args.alpha, args.seed,
                    args.denominator, args.bins)


def cmd_simulate(args):
    cfg = _config(args)
    result = replicate_pivotal(cfg)
    if args.format == "csv":
        text = "statistic\n" + "".join(_fmt(s) + "\n" for s in result.statistics)
    else:
        text = result.to_json() + "\n"
    _emit(args, text)
    if args.histogram:
        with open(args.histogram, "w") as fh:
            fh.write(histogram_csv(result))
    ks = "n/a" if result.statistics.size < 2 else _fmt(result.ks_distance)
    sys.stderr.write(f"dof={result.dof} ks_distance={ks} truncations={result.truncation_count} "
                     f"failures={result.failures}\n")
    return EXIT_OK


def cmd_coverage(args):
    cfg = _config(args)
    doc = {"coverage": coverage_rate(cfg), "dof": dof(cfg.model.flag_type)}
    doc.update(cfg.to_dict())
    _emit(args, _report_text(args, doc))
    return EXIT_OK


def cmd_geom(args):
    h = args.header
    mats = [read_matrix(p, h) for p in args.matrices]
    need = {"log": 2, "exp": 2, "dist": 2, "holonomy": 3}[args.op]
    if len(mats) != need:
        raise InputError(f"geom {args.op} takes {need} matrix files, got {len(mats)}")
    d = mats[0].shape[0]
    for M in mats[:2]:
        if M.shape != (d, d):
            raise InputError(f"dimension mismatch: expected {d}x{d} matrices")
    if args.op == "log":
        out = grassmann.grass_log(*mats)
    elif args.op == "exp":
        out = grassmann.grass_exp(*mats)
    elif args.op == "dist":
        out = grassmann.grass_dist(*mats)
    else:
        out = stiefel.holonomy(*mats)
    if np.ndim(out) == 0:
        _emit(args, _fmt(float(out)) + "\n")
    else:
        _emit(args, _matrix_csv(out))
    return EXIT_OK


def build_parser():
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--alpha", type=float, default=0.05)
    shared.add_argument("--seed", type=int, default=2024)
    shared.add_argument("--denominator", choices=("n", "n-1"), default="n")
    shared.add_argument("--output", help="write the result here instead of stdout")
    shared.add_argument("--format", choices=("json", "csv"), default="json")
    shared.add_argument("--header", "--skip-header", dest="header", action="store_true",
                        help="input CSV files start with a header row")
    shared.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="flagstat", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("infer", parents=[shared], help="pivotal statistic for data")
    q.add_argument("data")
    q.add_argument("--type", required=True)
    q.add_argument("--gamma", default="identity", help='CSV file or "identity"')
    q.set_defaults(func=cmd_infer)

    q = sub.add_parser("test", parents=[shared], help="hypothesis test for a flag")
    q.add_argument("data")
    q.add_argument("--type", required=True)
    q.add_argument("--q0", required=True, help='CSV file or "identity"')
    q.set_defaults(func=cmd_test)

    for name, func, help_ in (("simulate", cmd_simulate, "distribution of the statistic"),
                              ("coverage", cmd_coverage, "confidence region coverage")):
        q = sub.add_parser(name, parents=[shared], help=help_)
        q.add_argument("--d", type=int, default=4)
        q.add_argument("--type", default="1,1,1,1")
        q.add_argument("--lambdas", default="8,4,2,1")
        q.add_argument("--n", type=int, default=10000)
        q.add_argument("--reps", type=int, default=2000)
        q.add_argument("--bins", type=int, default=50)
        q.add_argument("--gamma", default=None,
                       help='CSV file or "identity"; default is a Haar draw fixed by --seed')
        if name == "simulate":
            q.add_argument("--histogram", help="write the histogram CSV here")
        q.set_defaults(func=func)

    q = sub.add_parser("geom", parents=[shared], help="Grassmann and Stiefel primitives")
    q.add_argument("op", choices=("log", "exp", "dist", "holonomy"))
    q.add_argument("matrices", nargs="+", metavar="FILE")
    q.set_defaults(func=cmd_geom)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"flagstat: error: {exc}\n")
    except FlagstatError as exc:
        sys.stderr.write(f"flagstat: error: {type(exc).__name__}: {exc}\n")
    except OSError as exc:
        sys.stderr.write(f"flagstat: error: cannot write output: {exc}\n")
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
