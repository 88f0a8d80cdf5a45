"""Command-line frontend.

Every design subcommand writes a design report (JSON) and exits 0 only when
the report's embedded verification passes.  Errors print one line to stderr
and exit with the error class's ``exit_code``.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .blocker import (Case, algorithm1, algorithm2, enable_mode, mode_index,
                      mode_spectrum, select_mode)
from .errors import ObsBlockError, ParseError, VerificationFailed
from .netmodel import (build_matrices, load_network, model_from_dict,
                       model_to_dict, simulate)
from .regional import cutset_design, regional_design, regional_stable_design
from .spectral import Tolerances, eig
from .verify import Claims, Stability, VerificationReport, verify_design

__all__ = ["main", "build_parser", "design_report", "EXIT_USAGE", "EXIT_IO"]

REPORT_FORMAT = "obsblock-design/1"
EXIT_USAGE = 2
EXIT_IO = 3
_F_SLOT = "@@F@@"


def _c(z):
    if z is None:
        return None
    z = complex(z)
    return [z.real, z.imag]


def _cut_dict(cut):
    if cut is None:
        return None
    d = {"v1": list(cut.v1), "vcut": list(cut.vcut), "v2": list(cut.v2)}
    if cut.v3 is not None:
        d["v3"] = list(cut.v3)
        d["v4"] = list(cut.v4)
    return d


def _format_matrix(F, indent):
    pad = " " * indent
    rows = [pad + "  [" + ", ".join("%.17g" % x for x in row) + "]"
            for row in np.asarray(F, dtype=float)]
    return "[\n" + ",\n".join(rows) + "\n" + pad + "]"


def dumps_report(report):
    """Serialize a report with the gain written entry by entry as ``%.17g``."""
    d = dict(report)
    design = dict(d["design"])
    F = design["F"]
    design["F"] = _F_SLOT
    d["design"] = design
    text = json.dumps(d, indent=2)
    return text.replace(f'"{_F_SLOT}"', _format_matrix(F, 4)) + "\n"


def design_report(command, model, F, info, verification):
    return {
        "format": REPORT_FORMAT,
        "command": command,
        "network": model_to_dict(model),
        "design": dict(info, F=np.asarray(F, dtype=float).tolist()),
        "verification": verification.to_dict(),
        "tolerances": verification.to_dict()["tolerances"],
    }


def _tolerances(args):
    return Tolerances(rank_rtol=args.rank_rtol,
                      eig_match_atol=args.eig_match_atol,
                      residual_rtol=args.residual_rtol,
                      distinct_sep=args.distinct_sep, seed=args.seed)


def _mode(args, mats, tol, enable=False):
    if args.mode_index is not None:
        n = mats.n
        if not 0 <= args.mode_index < n:
            raise ValueError(f"--mode-index must lie in 0..{n - 1}")
        return args.mode_index
    if args.mode_value is not None:
        return mode_index(mats, args.mode_value, tol)
    if enable:
        raise ValueError("enable needs --mode-index or --mode-value")
    return select_mode(mats, tol, real_only=False)


def _blocking_info(design):
    return {
        "kind": "block",
        "lambda_p": _c(design.lambda_p),
        "unobservable_mode": _c(design.unobservable_mode),
        "modified": list(design.modified),
        "case": design.case.value if isinstance(design.case, Case)
        else design.case,
        "provenance": design.F.provenance,
        "cut": _cut_dict(design.cut),
    }


def _run_block(args, model, tol):
    mats = build_matrices(model)
    p = _mode(args, mats, tol)
    if eig(mats.L, tol).all_real:
        design = algorithm1(mats, p, tol)
    else:
        design = algorithm2(mats, p, tol)
    claims = Claims(mode=design.unobservable_mode, preserve_spectrum=True,
                    preserved=design.preserved)
    return mats, design.gain, _blocking_info(design), claims


def _run_cutset(args, model, tol):
    mats = build_matrices(model)
    design = cutset_design(model, tol, mode_value=args.mode_value)
    claims = Claims(mode=design.unobservable_mode, preserve_spectrum=True,
                    preserved=design.preserved)
    return mats, design.gain, _blocking_info(design), claims


def _regional_info(design, kind):
    return {
        "kind": kind,
        "lambda_p": _c(design.lambda_p),
        "unobservable_mode": _c(design.unobservable_mode),
        "modified": list(design.modified),
        "cut": _cut_dict(design.cut),
        "accessible": list(design.accessible),
        "d": design.d,
        "iterations": design.iterations,
        "stable": design.stable,
        "stability": design.stability,
        "unstable_modes": [_c(z) for z in design.unstable_modes],
    }


def _inaccessible(model):
    if model.accessible is None:
        return ()
    return tuple(v for v in range(1, model.n + 1)
                 if v not in model.accessible)


def _run_regional(args, model, tol):
    mats = build_matrices(model)
    design = regional_design(model, tol, mode_value=args.mode_value)
    claims = Claims(mode=design.unobservable_mode,
                    zero_columns=_inaccessible(model))
    return mats, design.F, _regional_info(design, "regional"), claims


def _run_regional_stable(args, model, tol):
    mats = build_matrices(model)
    design = regional_stable_design(model, d0=args.d0, tol=tol,
                                    max_iters=args.max_iters,
                                    mode_value=args.mode_value)
    claims = Claims(mode=design.unobservable_mode,
                    zero_columns=_inaccessible(model),
                    stability=Stability.STRICT)
    return mats, design.F, _regional_info(design, "regional-stable"), claims


def _run_enable(args, model, tol):
    mats = build_matrices(model)
    p = _mode(args, mats, tol, enable=True)
    design = enable_mode(mats, p, tol)
    lam = mode_spectrum(mats, tol)[p]
    claims = Claims(unobservable=False, observable_mode=-lam,
                    preserve_spectrum=True, preserved=design.preserved)
    info = _blocking_info(design)
    info["kind"] = "enable"
    info["enabled_mode"] = _c(-lam)
    info.pop("unobservable_mode")
    return mats, design.gain, info, claims


_DESIGNS = {
    "design-block": _run_block,
    "design-cutset": _run_cutset,
    "design-regional": _run_regional,
    "design-regional-stable": _run_regional_stable,
    "enable": _run_enable,
}


def _write(text, path):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_report(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _claims_from(report):
    return VerificationReport.from_dict(report["verification"]).claims


def _report_gain(report):
    return np.array(report["design"]["F"], dtype=float)


def _check(verification):
    if not verification.passed:
        raise VerificationFailed("verification failed: "
                                 + "; ".join(verification.failures))


def cmd_design(args):
    tol = _tolerances(args)
    model = load_network(args.input)
    mats, F, info, claims = _DESIGNS[args.command](args, model, tol)
    verification = verify_design(mats, F, claims, tol)
    report = design_report(args.command, model, F, info, verification)
    _write(dumps_report(report), args.output)
    if args.sim is not None:
        _simulate_to(mats, F, info, args, args.sim)
    _check(verification)


def cmd_verify(args):
    tol = _tolerances(args)
    report = _load_report(args.report)
    model = model_from_dict(report["network"])
    mats = build_matrices(model)
    verification = verify_design(mats, _report_gain(report),
                                 _claims_from(report), tol)
    if args.output is not None:
        _write(verification.to_json(indent=2) + "\n", args.output)
    _check(verification)
    print("verification passed")


def _initial_state(mats, F, info, kind, seed):
    n = mats.n
    if kind == "ones":
        return np.ones(n)
    if kind == "random":
        return np.random.default_rng(seed).standard_normal(n)
    lam = info.get("lambda_p")
    if lam is None:
        raise ValueError("report has no blocked mode; choose --x0 ones")
    lam = complex(*lam)
    A = mats.closed_loop(F)
    w, V = np.linalg.eig(A)
    v = V[:, int(np.argmin(np.abs(w - lam)))]
    if lam.imag != 0:
        # a real trajectory inside the blocked pair's invariant plane
        v = v + np.conj(v)
    return np.real(v) / np.linalg.norm(np.real(v))


def _simulate_to(mats, F, info, args, path):
    x0 = _initial_state(mats, F, info, args.x0, args.seed)
    trace = simulate(mats, F, x0, args.horizon, args.dt)
    _write(trace.to_csv(), path)


def cmd_simulate(args):
    report = _load_report(args.report)
    model = model_from_dict(report["network"])
    mats = build_matrices(model)
    F = _report_gain(report)
    _simulate_to(mats, F, report["design"], args, args.output)


def cmd_report(args):
    report = _load_report(args.report)
    d = report["design"]
    v = report["verification"]
    lines = [f"command:       {report['command']}",
             f"nodes:         {report['network']['n']}"]
    if d.get("lambda_p") is not None:
        lines.append("blocked mode:  -(%.6g%+.6gj)" % tuple(d["lambda_p"]))
    for key in ("case", "modified", "cut", "d", "stability"):
        if d.get(key) is not None:
            lines.append(f"{key + ':':<15}{d[key]}")
    F = np.array(d["F"])
    lines.append(f"gain:          {F.shape[0]}x{F.shape[1]}, "
                 f"max |F| = {np.abs(F).max():.6g}")
    modes = ", ".join("%.6g%+.6gj" % tuple(z)
                      for z in v["unobservable_modes"])
    lines.append("unobservable:  " + (modes or "none"))
    lines.append(f"obs. rank:     {v['obs_matrix_rank']}")
    lines.append(f"closed loop:   {v['stability']}")
    lines.append("verification:  " + ("pass" if v["pass"] else
                                      "FAIL (" + "; ".join(v["failures"])
                                      + ")"))
    print("\n".join(lines))
    if not v["pass"]:
        raise VerificationFailed("; ".join(v["failures"]))


def _add_tolerances(p):
    t = Tolerances()
    g = p.add_argument_group("tolerances")
    g.add_argument("--rank-rtol", type=float, default=t.rank_rtol)
    g.add_argument("--eig-match-atol", type=float, default=t.eig_match_atol)
    g.add_argument("--residual-rtol", type=float, default=t.residual_rtol)
    g.add_argument("--distinct-sep", type=float, default=t.distinct_sep)
    g.add_argument("--seed", type=int, default=t.seed,
                   help="seed for randomized fallbacks (default 0)")


def _add_sim(p, with_output):
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--x0", choices=("vhat", "ones", "random"), default="vhat",
                   help="initial state (default: the blocked eigenvector)")
    if with_output:
        p.add_argument("--sim", metavar="CSV", default=None,
                       help="also write a simulation trace")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="obsblock",
        description="Observability-blocking feedback for network "
                    "synchronization models.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    helps = {
        "design-block": "block one mode using all measurement nodes",
        "design-cutset": "block observability through a vertex cutset",
        "design-regional": "cutset design using accessible states only",
        "design-regional-stable": "regional design with eigenvalue shift "
                                  "for closed-loop stability",
        "enable": "make an unobservable mode observable",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("input", help="network JSON file")
        p.add_argument("-o", "--output", default=None,
                       help="report path (default: stdout)")
        sel = p.add_mutually_exclusive_group()
        if name in ("design-block", "enable"):
            sel.add_argument("--mode-index", type=int, default=None,
                             help="index into the sorted open-loop spectrum")
        else:
            p.set_defaults(mode_index=None)
        sel.add_argument("--mode-value", type=complex, default=None,
                         help="eigenvalue to block, e.g. 3 or 1.4+0.6j")
        if name == "design-regional-stable":
            p.add_argument("--d0", type=float, default=None,
                           help="initial shift threshold")
            p.add_argument("--max-iters", type=int, default=20)
        _add_sim(p, True)
        _add_tolerances(p)
        p.set_defaults(func=cmd_design)

    p = sub.add_parser("verify", help="re-verify a design report")
    p.add_argument("report")
    p.add_argument("-o", "--output", default=None,
                   help="write the verification report JSON here")
    _add_tolerances(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="simulate a design report")
    p.add_argument("report")
    p.add_argument("-o", "--output", default=None,
                   help="CSV path (default: stdout)")
    _add_sim(p, False)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="summarize a design report")
    p.add_argument("report")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ObsBlockError as exc:
        print(f"obsblock: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, IndexError) as exc:
        print(f"obsblock: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"obsblock: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
