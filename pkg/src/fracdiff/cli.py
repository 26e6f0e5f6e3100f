"""Command line entry point: ``fracdiff <subcommand> ...``.

Every table goes out as CSV with a header row and floats at 12 significant
digits, or as a JSON object with the same columns and rows under
``--json``.  Exit codes: 0 success, 1 a checked property failed, 2 usage
or configuration error.

Problem files for ``solve`` and ``holder`` are line-oriented ``key = value``
text with section headers::

    [problem]
    alpha = 0.5
    L = 1
    M = 40
    N = 80
    T = 1
    [coefficients]
    A = checkerboard:7
    c = 0
    f = 0
    [data]
    u0 = bump
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

DEFAULT_SEED = 42
FLOAT_FMT = "%.12g"

SECTIONS = {
    "problem": {"alpha", "L", "M", "N", "gamma", "T"},
    "coefficients": {"A", "c", "f", "nu", "Lam"},
    "data": {"u0"},
}


class UsageError(Exception):
    """Bad arguments or configuration; reported with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- tables -------------------------------------------------------------------

@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def _cells(self, row):
        return [FLOAT_FMT % v if isinstance(v, (float, np.floating)) else str(v) for v in row]

    def to_csv(self) -> str:
        out = [",".join(self.columns)]
        out += [",".join(self._cells(r)) for r in self.rows]
        return "\n".join(out) + "\n"

    def to_json(self) -> str:
        # same rounding as the CSV so both forms carry identical numbers; NaN becomes null
        def conv(cell, v):
            if not isinstance(v, (float, np.floating)):
                return v
            return None if math.isnan(v) else float(cell)
        rows = [[conv(c, v) for c, v in zip(self._cells(r), r)] for r in self.rows]
        return json.dumps({"columns": self.columns, "rows": rows}, allow_nan=False) + "\n"


def _emit(table: Table, args, path=None):
    """Write ``table`` to ``path``, stdout when it is None."""
    text = table.to_json() if args.json else table.to_csv()
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


# --- configuration ------------------------------------------------------------

@dataclass
class RunConfig:
    """Parsed problem file: a ``section -> key -> value`` tree."""

    subcommand: str
    params: dict
    out: str | None = None
    seed: int = DEFAULT_SEED
    source: Path | None = None


def _line_of(text: str, key: str, section: str | None = None) -> int:
    """Line number of ``key`` (inside ``section`` if given), 0 if absent."""
    pat = re.compile(rf"^\s*{re.escape(key)}\s*[=:]")
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        head = re.match(r"^\s*\[([^]]*)\]", line)
        if head:
            current = head.group(1).strip()
            if key == f"[{current}]":
                return i
        elif pat.match(line) and section in (None, current):
            return i
    return 0


def load_config(path: str, subcommand: str, seed: int = DEFAULT_SEED) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=path)
    except configparser.Error as exc:
        raise UsageError(f"malformed config: {exc}") from None
    params = {}
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise UsageError(f"{path}:{_line_of(text, f'[{sec}]')}: unknown section [{sec}]")
        for key, val in cp[sec].items():
            if key not in SECTIONS[sec]:
                raise UsageError(f"{path}:{_line_of(text, key, sec)}: unknown key {key!r} in [{sec}]")
            params[key] = val.strip()
    return RunConfig(subcommand, params, None, seed, Path(path))


def _number(cfg: RunConfig, key, default=None, kind=float):
    if key not in cfg.params:
        if default is None:
            raise UsageError(f"{cfg.source}: missing required key {key!r}")
        return default
    try:
        return kind(cfg.params[key])
    except ValueError:
        line = _line_of(cfg.source.read_text(), key)
        raise UsageError(f"{cfg.source}:{line}: bad value for {key!r}: {cfg.params[key]!r}") from None


def build_problem(cfg: RunConfig):
    from .fdsolver import CheckerboardField, ProblemSpec
    from .fracops import TimeGrid, default_grading
    from .spectral import IntervalDomain, initial_datum

    alpha = _number(cfg, "alpha")
    L = _number(cfg, "L", 1.0)
    M = _number(cfg, "M", kind=int)
    N = _number(cfg, "N", kind=int)
    T = _number(cfg, "T", 1.0)
    gamma = _number(cfg, "gamma", default_grading(alpha) if 0 < alpha <= 1 else 1.0)
    c = _number(cfg, "c", 0.0)
    f = _number(cfg, "f", 0.0)
    spec_A = cfg.params.get("A", "const:1")
    kind, _, arg = spec_A.partition(":")
    if kind == "const":
        A = float(arg) if arg else 1.0
    elif kind == "checkerboard":
        seed = int(arg) if arg else cfg.seed
        A = CheckerboardField(_number(cfg, "nu", 0.2), _number(cfg, "Lam", 5.0), seed, T, L)
    else:
        line = _line_of(cfg.source.read_text(), "A")
        raise UsageError(f"{cfg.source}:{line}: A must be const[:value] or checkerboard[:seed]")
    u0_spec = cfg.params.get("u0", "phi1")
    if u0_spec.startswith("file:"):
        file = Path(u0_spec[5:])
        if not file.is_absolute():
            file = cfg.source.parent / file
        try:
            u0 = np.loadtxt(file, delimiter=",", ndmin=1)
        except OSError as exc:
            raise UsageError(f"cannot read initial data {file}: {exc.strerror}") from None
    elif u0_spec in ("phi1", "bump"):
        u0 = initial_datum(u0_spec, L)
    else:
        line = _line_of(cfg.source.read_text(), "u0")
        raise UsageError(f"{cfg.source}:{line}: u0 must be phi1, bump or file:PATH")
    return ProblemSpec(alpha, IntervalDomain(L), M, TimeGrid(T, N, gamma), A=A, u0=u0, c=c, f=f)


# --- subcommands --------------------------------------------------------------

def cmd_mlf(args):
    from .mlf import RelaxationQuery, relaxation, relaxation_bounds

    cols = ["alpha", "mu", "t", "s"] + (["lower", "upper"] if args.bounds else [])
    table = Table(cols)
    for t in _floats(args.t):
        q = RelaxationQuery(args.alpha, args.mu, t)
        row = [q.alpha, q.mu, q.t, relaxation(q)]
        if args.bounds:
            row += list(relaxation_bounds(q)) if q.alpha < 1 and t > 0 else [math.nan, math.nan]
        table.rows.append(row)
    _emit(table, args, args.out)
    return 0


def _random_path(rng, t):
    c = rng.normal(size=4)
    ph = rng.uniform(0, 6, size=4)
    fr = rng.uniform(0.5, 8, size=4)
    return np.sum(c[:, None] * np.sin(fr[:, None] * t + ph[:, None]), axis=0)


def cmd_identity(args):
    from .fracops import SampledPath, TimeGrid, convexity_gap, fundamental_identity_residual, l2norm_gap

    rng = np.random.default_rng(args.seed)
    g = TimeGrid(1.0, args.n)
    t = g.nodes
    k, kd = SampledPath(g, np.exp(-t)), SampledPath(g, -np.exp(-t))
    u = SampledPath(g, _random_path(rng, t))
    if args.check == "fundamental":
        rec = fundamental_identity_residual(np.exp, np.exp, k, kd, u)
    elif args.check == "convex":
        rec = convexity_gap(lambda y: y**4, lambda y: 4 * y**3, k, kd, u, float(rng.normal()))
    else:
        v = np.cumsum(rng.normal(size=(g.N + 1, 32)), axis=0) * 0.1
        rec = l2norm_gap(SampledPath(g, v), rng.normal(size=32), k, kd, dx=1 / 32)
    table = Table(["node", "lhs", "rhs", "gap"])
    table.rows = [[int(n), float(a), float(b), float(c)]
                  for n, a, b, c in zip(rec.nodes, rec.lhs, rec.rhs, rec.gap)]
    _emit(table, args, args.out)
    if args.check in ("convex", "l2norm") and rec.gap.min() < -1e-10:
        return 1
    return 0


def cmd_spectral(args):
    from .spectral import (EigenSystem, IntervalDomain, decay_envelope_check, evolve,
                           initial_datum, project)

    eigs = EigenSystem(IntervalDomain(args.L), args.modes)
    if args.u0 == "file":
        if not args.u0_file:
            raise UsageError("--u0 file needs --u0-file PATH")
        u0 = np.loadtxt(args.u0_file, delimiter=",", ndmin=1)
    else:
        u0 = initial_datum(args.u0, args.L)
    st0 = project(u0, eigs)
    states = [evolve(st0, args.alpha, t) for t in _floats(args.times)]
    rec = decay_envelope_check(states, args.alpha)
    table = Table(["t", "l2norm", "envelope", "margin"])
    table.rows = [list(map(float, r)) for r in zip(rec.t, rec.l2norm, rec.envelope, rec.margin)]
    _emit(table, args, args.out)
    return 0 if np.all(rec.margin <= 1e-12 * max(1.0, st0.norm0)) else 1


def _solve(cfg: RunConfig, scheme: str):
    from .fdsolver import solve_l1, solve_volterra

    spec = build_problem(cfg)
    return spec, (solve_l1 if scheme == "l1" else solve_volterra)(spec)


def cmd_solve(args):
    from .fdsolver import SpecViolation, decay_check

    cfg = load_config(args.config, "solve", args.seed)
    spec, traj = _solve(cfg, args.scheme)
    field_table = Table(["t", "x", "u"])
    for n, tn in enumerate(traj.t):
        field_table.rows += [[float(tn), float(xi), float(ui)] for xi, ui in zip(traj.x, traj.u[n])]
    if args.out:
        _emit(field_table, args, args.out)
    summary = Table(["t", "l2norm", "envelope", "margin"])
    try:
        rec = decay_check(traj, spec)
        env, margin = rec.envelope, rec.margin
    except SpecViolation:
        # the envelope needs c = f = 0 and zero boundary data
        env = margin = np.full(traj.t.size, math.nan)
    summary.rows = [list(map(float, r)) for r in zip(traj.t, traj.l2norms, env, margin)]
    _emit(summary, args, args.summary)
    return 0


def cmd_decay(args):
    from .fullspace import decay_slope_scan

    scan = decay_slope_scan(args.alpha, args.dim, (args.tmin, args.tmax), args.points)
    table = Table(["t", "l2norm"])
    table.rows = [[float(a), float(b)] for a, b in zip(scan.t, scan.norms)]
    _emit(table, args, args.out)
    sys.stderr.write(f"slope {scan.slope:.6g} target {-scan.target:.6g} "
                     f"conclusive {scan.conclusive}\n")
    return 0


def cmd_kernel(args):
    from .fullspace import invert_Z

    start = 0.0 if args.dim == 1 else args.rmax / args.points
    r = np.linspace(start, args.rmax, args.points)
    z = invert_Z(args.alpha, args.dim, args.t, r)
    table = Table(["r", "Z"])
    table.rows = [[float(a), float(b)] for a, b in zip(z.r, z.Z)]
    _emit(table, args, args.out)
    return 0


def _p_values(text, pc):
    out = []
    for item in text.split(","):
        item = item.strip()
        try:
            out.append(float(item[:-2]) * pc if item.endswith("pc") else float(item))
        except ValueError:
            raise UsageError(f"bad p value {item!r} (number or multiple like 0.9pc)") from None
    return out


def cmd_harnack(args):
    from .probe import SourceFamily, SpectralFamily, critical_exponent, harnack_scan

    if args.dim != 1:
        raise UsageError("harnack families are one-dimensional (--dim 1)")
    pc = critical_exponent(args.alpha, args.dim)
    p_list = _p_values(args.p_grid, pc)
    r = np.array(sorted(_floats(args.r_grid)))
    if args.family == "z":
        fam = SourceFamily(args.alpha)
        boxes = fam.boxes(r, 1e-3 * r.min() ** (2 / args.alpha))
    else:
        fam = SpectralFamily(args.alpha)
        boxes = fam.boxes(r)
    scan = harnack_scan(fam, p_list, boxes)
    table = Table(["p", "p_over_pc", "r", "lhs", "rhs", "ratio"])
    table.rows = [[rec.p, rec.p / pc, rec.r, rec.lhs, rec.rhs, rec.ratio] for rec in scan.records]
    _emit(table, args, args.out)
    return 0


def cmd_holder(args):
    from .probe import holder_seminorm

    q = _floats(args.q)
    if len(q) != 4:
        raise UsageError("--q takes T0,T1,X0,X1")
    cfg = load_config(args.config, "holder", args.seed)
    _, traj = _solve(cfg, args.scheme)
    val = holder_seminorm(traj, None, None, tuple(q), args.beta1, args.beta2)
    table = Table(["t0", "t1", "x0", "x1", "beta1", "beta2", "seminorm"])
    table.rows = [q + [args.beta1, args.beta2, float(val)]]
    _emit(table, args, args.out)
    return 0


def cmd_verify(args):
    from .acceptance import format_report, run_suite

    results = run_suite(args.suite, args.threads)
    if args.json:
        text = json.dumps([{"criterion": r.number, "name": r.name, "passed": r.passed,
                            "detail": r.detail} for r in results], indent=1) + "\n"
    else:
        text = format_report(results)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if all(r.passed for r in results) else 1


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = _Parser(prog="fracdiff", description="Numerical toolkit for time-fractional diffusion.")
    p.add_argument("--version", action="version", version=f"fracdiff {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    mlf = sub.add_parser("mlf", help="relaxation function s_mu(t)")
    mlf_sub = mlf.add_subparsers(dest="action", required=True, parser_class=_Parser)
    ev = mlf_sub.add_parser("eval", parents=[common])
    ev.add_argument("--alpha", type=float, required=True)
    ev.add_argument("--mu", type=float, required=True)
    ev.add_argument("--t", required=True, help="time or comma-separated times")
    ev.add_argument("--bounds", action="store_true", help="add the algebraic sandwich bounds")
    ev.set_defaults(func=cmd_mlf)

    idn = sub.add_parser("identity", parents=[common], help="discrete chain-rule identities")
    idn.add_argument("--check", choices=["fundamental", "convex", "l2norm"], required=True)
    idn.add_argument("--n", type=int, default=256, help="number of time steps")
    idn.set_defaults(func=cmd_identity)

    spc = sub.add_parser("spectral", parents=[common], help="eigenfunction solver on (0, L)")
    spc.add_argument("--alpha", type=float, required=True)
    spc.add_argument("--L", type=float, default=math.pi)
    spc.add_argument("--modes", type=int, default=64)
    spc.add_argument("--u0", choices=["phi1", "poly", "bump", "file"], default="phi1")
    spc.add_argument("--u0-file", help="comma or newline separated samples at x_i = i L / M")
    spc.add_argument("--times", required=True)
    spc.set_defaults(func=cmd_spectral)

    for name, func, hlp in (("solve", cmd_solve, "finite-difference solve from a problem file"),
                            ("holder", cmd_holder, "discrete Hoelder seminorm of a solve")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--config", required=True)
        s.add_argument("--scheme", choices=["l1", "volterra"], default="l1")
        s.set_defaults(func=func)
    solve = sub.choices["solve"]
    solve.add_argument("--summary", help="summary table file (default stdout)")
    hold = sub.choices["holder"]
    hold.add_argument("--q", required=True, help="T0,T1,X0,X1")
    hold.add_argument("--beta1", type=float, required=True)
    hold.add_argument("--beta2", type=float, required=True)

    dec = sub.add_parser("decay", parents=[common], help="full-space L2 decay, Gaussian datum")
    dec.add_argument("--alpha", type=float, required=True)
    dec.add_argument("--dim", type=int, required=True)
    dec.add_argument("--tmin", type=float, default=1e2)
    dec.add_argument("--tmax", type=float, default=1e6)
    dec.add_argument("--points", type=int, default=25)
    dec.set_defaults(func=cmd_decay)

    ker = sub.add_parser("kernel", parents=[common], help="fundamental solution Z(t, r)")
    ker.add_argument("--alpha", type=float, required=True)
    ker.add_argument("--dim", type=int, required=True)
    ker.add_argument("--t", type=float, default=1.0)
    ker.add_argument("--rmax", type=float, default=5.0)
    ker.add_argument("--points", type=int, default=101)
    ker.set_defaults(func=cmd_kernel)

    har = sub.add_parser("harnack", parents=[common], help="weak Harnack ratio scan")
    har.add_argument("--alpha", type=float, required=True)
    har.add_argument("--dim", type=int, default=1)
    har.add_argument("--family", choices=["z", "spectral"], default="z")
    har.add_argument("--p-grid", default="0.9pc,1.5pc",
                     help="exponents; a suffix pc means a multiple of the critical one")
    har.add_argument("--r-grid", default="0.5,0.25,0.125,0.0625")
    har.set_defaults(func=cmd_harnack)

    ver = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    ver.add_argument("--suite", choices=["quick", "full"], default="quick")
    ver.add_argument("--threads", type=int, default=None,
                     help="concurrent items (default FRACDIFF_THREADS or 1)")
    ver.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return int(args.func(args))
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except ValueError as exc:
        # invalid parameter values from the numerical modules
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
