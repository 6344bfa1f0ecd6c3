"""Command-line front end: ``distobs analyze|simulate|sweep|example``.

Exit codes: 0 success, 2 unreadable or invalid scenario, 3 structural
certification failure (use ``--force`` to run anyway), 4 divergence.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings

import numpy as np

from . import __version__
from .certify import certify_stability
from .exceptions import ConfigError, DistObsError, DivergenceError, InputError
from .scenarios import (
    apply_overrides,
    config_to_document,
    dump_document,
    example_document,
    parse_document,
    read_document,
)
from .simulate import build_banks, integrate, sweep

EXIT_OK, EXIT_PARSE, EXIT_CERT, EXIT_DIVERGED = 0, 2, 3, 4


def _plain(obj):
    """Recursively convert numpy scalars/arrays so YAML output stays plain."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _load(args):
    doc, lines = read_document(args.scenario)
    doc = apply_overrides(doc, T=getattr(args, "T", None), epsilon=getattr(args, "epsilon", None),
                          gamma=_gamma_arg(getattr(args, "gamma", None)),
                          t_end=getattr(args, "t_end", None), seed=getattr(args, "seed", None))
    return parse_document(doc, lines)


def _gamma_arg(g):
    if g is None:
        return None
    if g.strip().lower() == "auto":
        return "auto"
    try:
        return float(g)
    except ValueError:
        raise ConfigError("--gamma", f"expected a number or 'auto', got {g!r}") from None


def analysis_report(config):
    """Report dict plus a pass flag for the structural hypotheses.

    Passing means: jointly observable, average graph strongly connected and
    every phase's observer synthesised. Stability verdicts are reported but
    do not gate a simulation.
    """
    lapset = config.laplacians()
    report = {"scenario": config.name or None}
    report["graph"] = {
        "modes": list(config.graph_names),
        "average_strongly_connected": bool(lapset.strongly_connected),
        "theta": None if lapset.theta is None else lapset.theta.tolist(),
    }
    ok = bool(lapset.strongly_connected)
    phases = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            banks = build_banks(config, lapset)
        except DistObsError as exc:
            banks = None
            report["observer_error"] = str(exc)
            ok = False
    if caught:
        report["warnings"] = [str(w.message) for w in caught]
    if banks is None:
        from .jointobs import certify_joint_observability
        cert = certify_joint_observability(config.model, lapset)
        report["joint_observability"] = cert.to_dict()
        ok = ok and cert.jointly_observable
    else:
        for a, b, bank in banks:
            cert = bank.certificate
            ok = ok and cert.jointly_observable
            entry = {
                "start": a,
                "end": b,
                "observability_ranks": list(cert.ranks),
                "joint_observability": cert.to_dict(),
                "observer": bank.to_dict(),
                "stability": certify_stability(bank, config.law).to_dict(),
            }
            phases.append(entry)
        report["phases"] = phases
    report["passed"] = ok
    return _plain(report), ok


def _summary_lines(config, res):
    out = {"scenario": config.name or None}
    out.update(res.summary())
    return out


def _header(config, command):
    text = dump_document(_plain(config_to_document(config)))
    return [f"distobs {__version__} {command}", "resolved config:"] + text.rstrip("\n").split("\n")


def cmd_analyze(args):
    config = _load(args)
    report, ok = analysis_report(config)
    report["config"] = _plain(config_to_document(config))
    text = dump_document(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    if not args.quiet:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args):
    config = _load(args)
    if args.record_states:
        config = config.replace(record_states=True)
    report, ok = analysis_report(config)
    if not ok and not args.force:
        sys.stderr.write("structural certification failed (see analyze); use --force to run anyway\n")
        if not args.quiet:
            sys.stdout.write(dump_document(report))
        return EXIT_CERT
    code = EXIT_OK
    try:
        res = integrate(config)
    except DivergenceError as exc:
        res = exc.result
        sys.stderr.write(f"diverged: {exc}\n")
    except DistObsError as exc:
        if args.force:
            sys.stderr.write(f"cannot simulate: {exc}\n")
            return EXIT_CERT
        raise
    if not res.converged:
        code = EXIT_DIVERGED
    if args.out:
        res.to_csv(args.out, header_lines=_header(config, "simulate"))
    if not args.quiet:
        sys.stdout.write(dump_document(_plain(_summary_lines(config, res))))
    return code


def cmd_sweep(args):
    config = _load(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("--values", "expected comma-separated numbers") from None
    if not values:
        raise ConfigError("--values", "need at least one value")
    rows = sweep(config, args.param, values, with_reference=not args.no_reference, workers=args.workers)
    cols = ["value", "final_max_error", "decay_rate", "deviation", "max_transient", "diverged", "overflow"]

    def fmt(v):
        if v is None:
            return "nan"
        if isinstance(v, bool):
            return "true" if v else "false"
        return f"{v:.17g}"

    lines = [",".join(cols)] + [",".join(fmt(getattr(r, c)) for c in cols) for r in rows]
    if args.out:
        with open(args.out, "w") as fh:
            for h in _header(config, f"sweep {args.param}"):
                fh.write(f"# {h}\n")
            fh.write("\n".join(lines) + "\n")
    if not args.quiet:
        width = max(len(c) for c in cols)
        sys.stdout.write("  ".join(c.rjust(width) for c in cols) + "\n")
        for r in rows:
            cells = [fmt(getattr(r, c)) if isinstance(getattr(r, c), bool) or getattr(r, c) is None
                     else f"{getattr(r, c):.6g}" for c in cols]
            sys.stdout.write("  ".join(x.rjust(width) for x in cells) + "\n")
    return EXIT_OK


def cmd_example(args):
    doc = example_document(args.id)
    if args.seed is not None:
        doc = apply_overrides(doc, seed=args.seed)
    text = dump_document(doc)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    elif not args.quiet:
        sys.stdout.write(text)
    return EXIT_OK


def _positive(s):
    x = float(s)
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return x


def _nonneg(s):
    x = float(s)
    if not (x >= 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {s}")
    return x


def build_parser():
    p = argparse.ArgumentParser(prog="distobs", description="Distributed observers over switching graphs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp, overrides=True):
        sp.add_argument("scenario", help="scenario YAML file")
        sp.add_argument("--seed", type=int, help="override simulation.seed")
        sp.add_argument("--out", help="output file")
        sp.add_argument("--quiet", action="store_true", help="suppress stdout")
        if overrides:
            sp.add_argument("--T", type=_positive, help="override the switching period")
            sp.add_argument("--epsilon", type=_positive, help="override the time-scale epsilon")
            sp.add_argument("--gamma", help="override the coupling gain (number or 'auto')")
            sp.add_argument("--t-end", dest="t_end", type=_nonneg, help="override the horizon")

    a = sub.add_parser("analyze", help="certify joint observability and stability")
    scenario_args(a)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="run one simulation and write a CSV")
    scenario_args(s)
    s.add_argument("--force", action="store_true", help="run even if certification fails")
    s.add_argument("--record-states", action="store_true", help="include states and estimates in the CSV")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="independent runs over T, epsilon or gamma")
    scenario_args(w)
    w.add_argument("--param", required=True, choices=["T", "epsilon", "gamma"])
    w.add_argument("--values", required=True, help="comma-separated values")
    w.add_argument("--workers", type=int, default=1, help="process pool size")
    w.add_argument("--no-reference", action="store_true", help="skip the averaged-graph reference runs")
    w.add_argument("--force", action="store_true", help="accepted for symmetry with simulate")
    w.set_defaults(func=cmd_sweep)

    e = sub.add_parser("example", help="write a built-in scenario (1-4)")
    e.add_argument("id", type=int)
    e.add_argument("--seed", type=int, help="override simulation.seed")
    e.add_argument("--out", help="output file (default stdout)")
    e.add_argument("--quiet", action="store_true")
    e.set_defaults(func=cmd_example)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE
    except DistObsError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CERT


if __name__ == "__main__":
    sys.exit(main())
