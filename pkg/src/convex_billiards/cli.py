"""``billiard`` command-line front end.

Exit codes: 0 on success, 1 when a computation raises a :class:`BilliardError`,
2 on usage errors or an unreadable/invalid domain file.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BilliardError, SpecError
from .geometry import ConvexDomain, load_domain

COMMANDS = ("orbit", "loop-fn", "periodic", "invariant", "ellipse-oracle", "trace-check", "verify")


@dataclass
class RunConfig:
    command: str
    domain_spec: str | None = None
    domain: ConvexDomain | None = field(default=None, repr=False)
    j: int | None = None
    grid: int = 64
    quad: int = 256
    origin: tuple | None = None
    out: str | None = None
    fmt: str = "json"
    reproducible: bool = False
    threads: int = 1
    options: dict = field(default_factory=dict)


def _default_threads() -> int:
    env = os.environ.get("BILLIARD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _origin(text: str):
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("origin must be 'x,y'") from exc
    return (x, y)


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", dest="fmt", choices=("json", "csv"), default=None)
    common.add_argument("--reproducible", action="store_true", help="omit the metadata block")
    common.add_argument("--threads", type=int, default=None, help="worker threads (env BILLIARD_THREADS)")

    p = argparse.ArgumentParser(prog="billiard", description="Convex billiards, loop functions and wave invariants.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def with_domain(name, help_, need_j=True):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("--domain", required=True, help="domain JSON file")
        sp.add_argument("--j", type=int, required=need_j)
        return sp

    sp = with_domain("orbit", "one orbit as a vertex trace", need_j=False)
    sp.add_argument("--q", type=float, default=0.0, help="start arclength")
    sp.add_argument("--qprime", type=float, help="end arclength for a boundary-to-boundary orbit")
    sp.add_argument("--direction", choices=("ccw", "cw"), default="ccw")
    sp.add_argument("--theta", type=float, help="simulate from (q, theta) instead of connecting")
    sp.add_argument("--n", type=int, default=10, help="bounces to simulate with --theta")
    sp.add_argument("--eight", type=_positive_float, metavar="MU",
                    help="report the eight interior orbits at depth MU near q")

    sp = with_domain("loop-fn", "loop function table")
    sp.add_argument("--grid", type=int, default=64)

    sp = with_domain("periodic", "periodic orbits and [t_j, T_j]")
    sp.add_argument("--grid", type=int, default=64)
    sp.add_argument("--caustic-tol", type=_positive_float, default=1e-9)

    sp = with_domain("invariant", "wave invariant c_j")
    sp.add_argument("--quad", type=int, default=256)
    sp.add_argument("--origin", type=_origin)
    sp.add_argument("--force", action="store_true", help="evaluate even without a caustic family")
    sp.add_argument("--caustic-tol", type=_positive_float, default=1e-9)
    sp.add_argument("--profile-out", help="also write the singularity profile CSV here")

    sp = sub.add_parser("ellipse-oracle", parents=[common], help="closed-form ellipse pipeline")
    sp.add_argument("--a", type=_positive_float, required=True)
    sp.add_argument("--b", type=_positive_float, required=True)
    sp.add_argument("--j", type=int, required=True)
    sp.add_argument("--quad", type=int, default=256)
    sp.add_argument("--assume-sin-squared", action="store_true", help="report the sin^2 radicand as primary")

    sp = with_domain("trace-check", "stationary-phase order fit")
    sp.add_argument("--m", type=float, default=0.5, help="symbol order under test")
    sp.add_argument("--grid", type=int, default=128)
    sp.add_argument("--rolloff", type=_positive_float, default=0.2)
    sp.add_argument("--lambdas", type=float, nargs=3, metavar=("LO", "HI", "N"), default=(50.0, 400.0, 12))
    sp.add_argument("--origin", type=_origin)
    sp.add_argument("--csv-out", help="write (lambda, re, im, abs) here")

    sp = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    sp.add_argument("--suite", choices=("circle", "all"), default="all")
    return p


def parse_args(argv=None) -> RunConfig:
    """Parse and validate; usage problems exit with status 2 through argparse."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    opts = {k: v for k, v in vars(ns).items()
            if k not in {"command", "domain", "j", "grid", "quad", "origin", "out", "fmt", "reproducible", "threads"}}
    cfg = RunConfig(
        command=ns.command,
        domain_spec=getattr(ns, "domain", None),
        j=getattr(ns, "j", None),
        grid=getattr(ns, "grid", 64),
        quad=getattr(ns, "quad", 256),
        origin=getattr(ns, "origin", None),
        out=ns.out,
        fmt=ns.fmt or ("csv" if ns.command in ("orbit", "loop-fn") else "json"),
        reproducible=ns.reproducible,
        threads=ns.threads if ns.threads is not None else _default_threads(),
        options=opts,
    )
    if cfg.j is not None and cfg.j < 2:
        parser.error("--j must be at least 2")
    if cfg.threads < 1:
        parser.error("--threads must be positive")
    if cfg.command == "loop-fn" and cfg.grid < 16:
        parser.error("--grid must be at least 16")
    if cfg.command == "ellipse-oracle" and opts["a"] < opts["b"]:
        parser.error("ellipse-oracle needs a >= b")
    if cfg.command == "trace-check":
        lo, hi, n = opts["lambdas"]
        if not (0 < lo < hi) or int(n) < 6:
            parser.error("--lambdas needs 0 < LO < HI and N >= 6")
    if cfg.command == "orbit" and opts.get("eight") is not None and cfg.j is None:
        parser.error("--eight requires --j")
    if cfg.command == "orbit" and opts.get("theta") is None and cfg.j is None:
        parser.error("orbit needs --j (connect) or --theta (simulate)")
    if cfg.domain_spec is not None:
        cfg.domain = load_domain(cfg.domain_spec)
    return cfg


# -- command implementations ---------------------------------------------------------

def _trace_rows(d, ts, ths):
    from .billiard import lazutkin_alpha_param

    s = d.arclength(ts)
    x = (d.lazutkin_integral(ts) / d.lazutkin_total) % 1.0
    alpha = lazutkin_alpha_param(d, ts, ths)
    P = d.point_t(ts)
    return [(k, float(s[k]), float(ths[k]), float(x[k]), float(alpha[k]), float(P[k, 0]), float(P[k, 1]))
            for k in range(len(ts))]


TRACE_HEADER = ("k", "s_k", "theta_k", "x_k", "alpha_k", "point_x", "point_y")


def _cmd_orbit(cfg: RunConfig):
    from .orbits import connect_boundary, find_eight_orbits, resimulate
    from .billiard import orbit_param
    from .geometry import BoundaryNormalCoords

    d, o = cfg.domain, cfg.options
    if o.get("eight") is not None:
        mu = o["eight"]
        x = d.from_boundary_normal(BoundaryNormalCoords(mu, o["q"]))
        y = d.from_boundary_normal(BoundaryNormalCoords(mu, o["q"] + 2.0 * mu))
        orbits = find_eight_orbits(d, x, y, cfg.j)
        return {"j": cfg.j, "mu": mu, "x": list(x), "y": list(y), "orbits": [
            {"config": ob.config, "direction": ob.direction, "length": ob.length,
             "resimulation_error": resimulate(d, ob), "vertices": ob.vertices.tolist()} for ob in orbits]}, None
    if o.get("theta") is not None:
        ts, ths, _ = orbit_param(d, float(d.param(o["q"])), o["theta"], o["n"])
        return None, (TRACE_HEADER, _trace_rows(d, ts, ths))
    qp = o["q"] if o.get("qprime") is None else o["qprime"]
    orbit = connect_boundary(d, o["q"], qp, cfg.j, o["direction"])
    ts = np.asarray(orbit.params)
    ths = np.asarray(orbit.angles)
    rows = _trace_rows(d, ts, ths)
    summary = {"j": cfg.j, "direction": orbit.direction, "length": orbit.length, "winding": orbit.winding,
               "trace": [dict(zip(TRACE_HEADER, r)) for r in rows]}
    return summary, (TRACE_HEADER, rows)


def _cmd_loop_fn(cfg: RunConfig):
    from .orbits import loop_function

    samples = loop_function(cfg.domain, cfg.j, cfg.grid)
    header = ("q", "psi", "omega1", "omega2", "domega1_dqprime")
    rows = [(s.q, s.psi, s.omega1, s.omega2, s.domega1_dqprime) for s in samples]
    return {"j": cfg.j, "samples": [dict(zip(header, r)) for r in rows]}, (header, rows)


def _cmd_periodic(cfg: RunConfig):
    from .orbits import find_periodic

    rep = find_periodic(cfg.domain, cfg.j, cfg.grid, cfg.options["caustic_tol"])
    header = ("j", "t_j", "T_j", "count", "caustic_flag")
    rows = [(rep.j, rep.t_j, rep.T_j, rep.count, int(rep.caustic))]
    summary = {"j": rep.j, "t_j": rep.t_j, "T_j": rep.T_j, "count": rep.count, "caustic": rep.caustic,
               "critical_q": rep.critical_q, "hessians": rep.hessians,
               "lengths": [o.length for o in rep.orbits]}
    return summary, (header, rows)


def _cmd_invariant(cfg: RunConfig):
    from .invariants import singularity_profile, wave_invariant
    from .serialize import csv_text

    o = cfg.options
    rep = wave_invariant(cfg.domain, cfg.j, cfg.origin, cfg.quad, o["force"], o["caustic_tol"])
    if o.get("profile_out"):
        L = 0.5 * (rep.t_j + rep.T_j)
        t = np.linspace(L - 1.0, L + 1.0, 201)
        vals = singularity_profile(rep.c_j, L, t)
        Path(o["profile_out"]).write_text(csv_text(("t", "value"), zip(t.tolist(), vals.tolist())))
    summary = rep.as_dict()
    return summary, (tuple(summary), [tuple(v if not isinstance(v, list) else ";".join(map(str, v))
                                            for v in summary.values())])


def _cmd_ellipse_oracle(cfg: RunConfig):
    from .ellipse_oracle import oracle_report

    o = cfg.options
    rep = oracle_report(o["a"], o["b"], cfg.j, cfg.quad)
    out = rep.as_dict()
    primary = "c_j_sin_squared_radical" if o["assume_sin_squared"] else "c_j_sin_radical"
    out["reading"] = "sin_squared" if o["assume_sin_squared"] else "sin_phi"
    out["c_j"] = out[primary]
    out["radicand_variants_differ"] = bool(abs(rep.c_j_sin_radical - rep.c_j_sin_squared_radical) > 1e-6)
    return out, None


def _cmd_trace_check(cfg: RunConfig):
    from .trace_check import lambda_grid, trace_pipeline

    o = cfg.options
    lo, hi, n = o["lambdas"]
    rep = trace_pipeline(cfg.domain, cfg.j, m=o["m"], rolloff=o["rolloff"], lambdas=lambda_grid(lo, hi, int(n)),
                         grid_n=cfg.grid, origin=cfg.origin, threads=cfg.threads)
    rows = [(float(lam), float(v.real), float(v.imag), float(abs(v))) for lam, v in zip(rep.fit.lambdas, rep.fit.values)]
    header = ("lambda", "re", "im", "abs")
    if o.get("csv_out"):
        from .serialize import csv_text

        Path(o["csv_out"]).write_text(csv_text(header, rows))
    return rep.as_dict(), (header, rows)


def _cmd_verify(cfg: RunConfig):
    from .verify import run_suite

    results = run_suite(cfg.options["suite"])
    lines = [f"{'#':>3}  {'check':<26} {'result':<6} {'seconds':>8}"]
    for r in results:
        lines.append(f"{r.number:>3}  {r.name:<26} {'PASS' if r.passed else 'FAIL':<6} {r.seconds:>8.2f}")
    print("\n".join(lines))
    summary = {"suite": cfg.options["suite"], "passed": all(r.passed for r in results),
               "checks": [{"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
                          for r in results]}
    return summary, None


DISPATCH = {
    "orbit": _cmd_orbit,
    "loop-fn": _cmd_loop_fn,
    "periodic": _cmd_periodic,
    "invariant": _cmd_invariant,
    "ellipse-oracle": _cmd_ellipse_oracle,
    "trace-check": _cmd_trace_check,
    "verify": _cmd_verify,
}


def _emit(cfg: RunConfig, summary, table):
    from .serialize import csv_text, dumps

    if cfg.fmt == "csv" and table is not None:
        text = csv_text(*table)
    else:
        payload = dict(summary) if summary is not None else {"header": list(table[0]), "rows": table[1]}
        if cfg.domain is not None:
            payload = {"domain": cfg.domain.to_spec(), **payload}
        if not cfg.reproducible:
            payload["metadata"] = {"version": __version__, "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                                   "threads": cfg.threads}
        text = dumps(payload)
    if cfg.command == "verify" and cfg.out is None:
        return  # the table already went to stdout
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def run(cfg: RunConfig) -> int:
    try:
        summary, table = DISPATCH[cfg.command](cfg)
    except BilliardError as exc:
        print(f"billiard {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    _emit(cfg, summary, table)
    if cfg.command == "verify" and not summary["passed"]:
        return 1
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_args(argv)
    except SpecError as exc:
        print(f"billiard: SpecError: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
