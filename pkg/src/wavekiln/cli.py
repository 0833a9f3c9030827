"""Command-line front end: ``wavekiln <command> [options]``.

Every command accepts ``--config FILE`` (flat ``key=value`` lines, ``#``
comments); explicit flags override file values and unknown keys are a usage
error.  Commands that write a file also write ``<output>.manifest.json``
holding every resolved parameter, the tool version and the wall time.

Exit status: 0 success, 2 usage, 3 numerical diagnostic, 4 contract
violation, 5 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import re
import sys
import time
from pathlib import Path

import numpy as np

from .exceptions import ContractViolation, NumericalDiagnostic

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DIAGNOSTIC = 3
EXIT_CONTRACT = 4
EXIT_IO = 5

logger = logging.getLogger("wavekiln")


class UsageError(Exception):
    pass


def _version():
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:  # not installed
        from . import __version__

        return __version__


def _fmt(x):
    return repr(float(x))


# config files ---------------------------------------------------------------

def read_config(path):
    """Parse a flat ``key=value`` file into a dict of strings."""
    out = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key = key.strip().replace("-", "_")
        if key in out:
            raise UsageError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = val.strip()
    return out


def _apply_config(sub: argparse.ArgumentParser, values: dict):
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    unknown = sorted(set(values) - set(actions))
    if unknown:
        raise UsageError(f"unknown config keys for this command: {', '.join(unknown)}")
    defaults = {}
    for key, raw in values.items():
        act = actions[key]
        if isinstance(act, argparse._StoreTrueAction):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"config key {key!r} expects a boolean, got {raw!r}")
            defaults[key] = low in ("true", "1", "yes")
            continue
        try:
            val = act.type(raw) if act.type is not None else raw
        except (TypeError, ValueError):
            raise UsageError(f"config key {key!r}: cannot parse {raw!r}") from None
        if act.choices is not None and val not in act.choices:
            raise UsageError(f"config key {key!r}: {raw!r} not one of {sorted(act.choices)}")
        defaults[key] = val
    sub.set_defaults(**defaults)


# output helpers -------------------------------------------------------------

def _write_text(path, text):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _emit(text, out):
    if out:
        _write_text(out, text)
    else:
        sys.stdout.write(text)


def manifest_path(out):
    return Path(str(out) + ".manifest.json")


def write_manifest(out, command, params, outputs, started, extra=None):
    doc = {
        "tool": "wavekiln",
        "version": _version(),
        "command": command,
        "parameters": params,
        "outputs": [str(p) for p in outputs],
        "wall_time_s": round(time.time() - started, 6),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    if extra:
        doc["results"] = extra
    _write_text(manifest_path(out), json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def _read_state(path):
    from .corestate import State

    return State.from_csv(Path(path).read_text(encoding="utf-8"))


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


# commands -------------------------------------------------------------------

def cmd_spectrum(args):
    from .spectral import CharacteristicKind, Rect, find_roots

    _require(args, "re_min", "re_max", "im_min", "im_max")
    region = Rect(args.re_min, args.re_max, args.im_min, args.im_max)
    roots = [] if region.is_empty else find_roots(CharacteristicKind.parse(args.kind), region)
    lines = ["re,im,residual"] + [f"{_fmt(r.lam.real)},{_fmt(r.lam.imag)},{r.residual:.6e}" for r in roots]
    _emit("\n".join(lines) + "\n", args.out)
    return {"n_roots": len(roots)}


def cmd_resolve(args):
    from .resolvent import apply_resolvent, resolvent_residual

    _require(args, "state", "lambda_re")
    y = _read_state(args.state)
    lam = complex(args.lambda_re, args.lambda_im)
    x, report = apply_resolvent(lam, y, return_report=True)
    _emit(x.to_csv(), args.out)
    res = resolvent_residual(lam, y, x)
    line = report.line() + f" residual={res:.6e}"
    print(line, file=sys.stderr if not args.out else sys.stdout)
    return {"residual": res, "coupling_ok": bool(report.ok)}


def cmd_scan(args):
    from .resolvent import scan

    _require(args, "s_min", "s_max")
    points = scan(args.s_min, args.s_max, args.points_per_decade, args.grid_n, refine_peaks=args.refine_peaks,
                  peak_points=args.peak_points, workers=args.workers)
    lines = ["s,norm_estimate,iterations,grid_n,truncation"]
    lines += [f"{_fmt(p.s)},{_fmt(p.norm_estimate)},{p.iterations},{p.grid_n},{_fmt(p.truncation)}" for p in points]
    _emit("\n".join(lines) + "\n", args.out)
    return {"n_points": len(points)}


def _initial_for(args, cfg):
    from .admissible import make_admissible
    from .profiles import random_domain_state
    from .timedomain import resample

    if args.initial is not None:
        x = _read_state(args.initial)
        if x.variant.value != cfg.variant.value:
            raise ContractViolation(f"initial state is {x.variant.value}, config asks for {cfg.variant.value}")
    else:
        # random admissible datum: the generator applied to a smooth D(A^2) element
        z = random_domain_state(cfg.variant, args.seed, level=2)
        x = make_admissible(z)
    if x.u.n_points != cfg.wave_n or x.w.n_points != cfg.heat_n or x.w.right != cfg.heat_L:
        x = resample(x, cfg.wave_n, cfg.heat_n, cfg.heat_L)
    return x


def _sim_config(args):
    from .timedomain import SimConfig, default_heat_length

    _require(args, "variant", "t_final")
    L = args.heat_L if args.heat_L is not None else default_heat_length(args.t_final)
    base = SimConfig.default(args.variant, args.t_final, wave_n=args.wave_n, heat_L=L, far_bc=args.far_bc)
    kw = {}
    if args.dt is not None:
        kw["dt"] = args.dt
    if args.heat_n is not None:
        kw["heat_n"] = args.heat_n
    if kw:
        from dataclasses import replace

        base = replace(base, **kw)
    return base


def cmd_simulate(args):
    from .timedomain import run

    _require(args, "trace_out")
    cfg = _sim_config(args)
    x = _initial_for(args, cfg)
    trace = run(x, cfg, sample_every=args.sample_every)
    _write_text(args.trace_out, trace.to_csv())
    args.out = args.trace_out
    E = trace.energies
    print(f"steps={cfg.n_steps} energy_0={E[0]:.12g} energy_final={E[-1]:.12g} "
          f"balance_drift={trace.meta.get('balance_drift', 0.0):.3e}")
    return {"config": cfg.as_dict(), "balance_drift": trace.meta.get("balance_drift"),
            "energy_final": float(E[-1])}


def cmd_fit(args):
    from .corestate import EnergyTrace
    from .timedomain import decay_fit

    _require(args, "trace")
    trace = EnergyTrace.from_csv(Path(args.trace).read_text(encoding="utf-8"))
    if args.t_lo is not None or args.t_hi is not None:
        _require(args, "t_lo", "t_hi")
        fit = decay_fit(trace, window=(args.t_lo, args.t_hi))
    else:
        fit = decay_fit(trace, window_fraction=(args.window_lo, args.window_hi))
    line = fit.describe()
    _emit(line + "\n", args.out)
    if args.out:
        print(line)
    return {"exponent": fit.exponent, "amplitude": fit.amplitude, "residual": fit.residual}


def cmd_admit(args):
    from .admissible import check_range, densify_distance, densify_range, make_admissible

    modes = [m for m in ("check", "make_from", "densify") if getattr(args, m) is not None]
    if len(modes) != 1:
        raise UsageError("admit needs exactly one of --check, --make-from, --densify")
    mode = modes[0]
    if mode == "check":
        report = check_range(_read_state(args.check))
        _emit("\n".join(report.as_lines()) + "\n", args.out)
        return {"passed": report.passed}
    if mode == "make_from":
        x = make_admissible(_read_state(args.make_from))
        _emit(x.to_csv(), args.out)
        return {"passed": True}
    _require(args, "epsilon")
    y = _read_state(args.densify)
    y0, plan = densify_range(y, args.epsilon)
    _emit(y0.to_csv(), args.out)
    dist = densify_distance(y, y0)
    print(f"epsilon={args.epsilon:.6g} distance={dist:.6e} xi0={plan.xi0:.6g} tau={plan.tau:.6g} "
          f"length={y0.w.right:.6g}", file=sys.stderr if not args.out else sys.stdout)
    return {"distance": dist, "xi0": plan.xi0, "tau": plan.tau}


# parser ---------------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


# argparse only treats plain decimals as negative numbers; accept 1e-6 style too
_NEGATIVE_NUMBER = re.compile(r"^-(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$")


def build_parser():
    p = argparse.ArgumentParser(prog="wavekiln", description="Wave-heat interface system experiments.")
    p._negative_number_matcher = _NEGATIVE_NUMBER
    p.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    p.add_argument("--self-test", action="store_true", help="run the fast invariant suite and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    subs = p.add_subparsers(dest="command")

    def sub(name, help_):
        s = subs.add_parser(name, help=help_)
        s._negative_number_matcher = _NEGATIVE_NUMBER
        s.add_argument("--config", help="key=value file; flags override it")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--out", help="output file (default: standard output)")
        return s

    s = sub("spectrum", "eigenvalues of the characteristic function in a rectangle")
    s.add_argument("--kind", default="DirichletA", choices=["DirichletA", "NeumannB"])
    for name in ("re-min", "re-max", "im-min", "im-max"):
        s.add_argument("--" + name, type=float)
    s.set_defaults(func=cmd_spectrum)

    s = sub("resolve", "apply the resolvent to a state CSV")
    s.add_argument("--state")
    s.add_argument("--lambda-re", type=float)
    s.add_argument("--lambda-im", type=float, default=0.0)
    s.set_defaults(func=cmd_resolve)

    s = sub("scan", "resolvent-norm estimates along the imaginary axis")
    s.add_argument("--s-min", type=float)
    s.add_argument("--s-max", type=float)
    s.add_argument("--points-per-decade", type=_positive_int, default=8)
    s.add_argument("--grid-n", type=_positive_int, default=2001)
    s.add_argument("--refine-peaks", action="store_true")
    s.add_argument("--peak-points", type=_positive_int)
    s.add_argument("--workers", type=_positive_int)
    s.set_defaults(func=cmd_scan)

    s = sub("simulate", "time integration with an energy trace")
    s.add_argument("--variant", choices=["DirichletA", "NeumannA", "NeumannB"])
    s.add_argument("--t-final", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--wave-n", type=_positive_int, default=201)
    s.add_argument("--heat-n", type=_positive_int)
    s.add_argument("--heat-L", dest="heat_L", type=float)
    s.add_argument("--far-bc", default="dirichlet_zero", choices=["dirichlet_zero", "neumann_zero"])
    s.add_argument("--initial", help="initial State CSV (default: random admissible datum from --seed)")
    s.add_argument("--trace-out")
    s.add_argument("--sample-every", type=_positive_int, default=10)
    s.set_defaults(func=cmd_simulate)

    s = sub("fit", "power-law fit of an energy trace")
    s.add_argument("--trace")
    s.add_argument("--t-lo", type=float)
    s.add_argument("--t-hi", type=float)
    s.add_argument("--window-lo", type=float, default=0.3)
    s.add_argument("--window-hi", type=float, default=0.9)
    s.set_defaults(func=cmd_fit)

    s = sub("admit", "range checks and admissible-data constructors")
    s.add_argument("--check")
    s.add_argument("--make-from")
    s.add_argument("--densify")
    s.add_argument("--epsilon", type=float)
    s.set_defaults(func=cmd_admit)
    return p


def _resolve_args(parser, argv):
    args = parser.parse_args(argv)
    if args.command is None or getattr(args, "config", None) is None:
        return args
    sub = parser._subparsers._group_actions[0].choices[args.command]
    _apply_config(sub, read_config(args.config))
    return parser.parse_args(argv)


def _params(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose", "self_test")}


def main(argv=None):
    parser = build_parser()
    try:
        args = _resolve_args(parser, argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if exc.code is not None else EXIT_OK
    except UsageError as exc:
        print(f"wavekiln: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"wavekiln: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.self_test:
        from .selftest import run_self_test

        return EXIT_OK if run_self_test() else EXIT_DIAGNOSTIC
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    np.random.seed(args.seed)
    started = time.time()
    try:
        results = args.func(args)
        if args.out:
            write_manifest(args.out, args.command, _params(args), [args.out], started, results)
    except UsageError as exc:
        print(f"wavekiln: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalDiagnostic as exc:
        print(f"wavekiln: diagnostic: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC
    except ContractViolation as exc:
        print(f"wavekiln: contract violation: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except OSError as exc:
        print(f"wavekiln: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
