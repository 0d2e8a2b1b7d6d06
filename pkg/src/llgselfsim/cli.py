"""Command-line front end: profile, limit vectors, inverse angle problem, sweeps,
self-similar field samples, filament values and verification suites.

Every command writes a table (CSV by default, JSON with ``--format json``) to
``--out`` or standard output.  Exit codes: 0 ok, 1 verification failure,
2 bad flags, 3 numeric failure, 4 no root.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .errors import LLGError, NoRoot
from .frenet import S_MAX_CAP, integrate_profile
from .model import ToleranceConfig, ModelParams, curvature, torsion

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_NOROOT = 4
SWEEP_SUCCESS_FRACTION = 0.9
COMMANDS = ("profile", "limit", "angle", "sweep", "selfsim", "filament", "verify")
SUITE_NAMES = ("energy", "frames", "dualpath", "asymptotics", "closedform", "bounds", "lp-rate", "pde-residual", "symmetry", "all")

PROFILE_COLUMNS = ("s", "m1", "m2", "m3", "n1", "n2", "n3", "b1", "b2", "b3", "c", "tau")
LIMIT_COLUMNS = ("c0", "alpha", "A1", "A2", "A3", "Am1", "Am2", "Am3", "theta", "method")
SWEEP_COLUMNS = ("c0", "alpha", "A1", "A2", "A3", "theta", "method", "error")
ANGLE_COLUMNS = ("c0", "theta", "residual")
SELFSIM_COLUMNS = ("s", "t", "m1", "m2", "m3")
FILAMENT_COLUMNS = ("s", "t", "u_re", "u_im", "abs_u")
VERIFY_COLUMNS = ("suite", "check", "value", "threshold", "margin", "status")


class UsageError(Exception):
    """Invalid flag values, reported with exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    """Validated invocation: command, model, tolerances and output target."""

    command: str
    params: Optional[ModelParams]
    tolerances: ToleranceConfig
    output_path: str = "-"
    format: str = "csv"
    options: Dict[str, object] = field(default_factory=dict)


# -- formatting -----------------------------------------------------------------


def format_number(x) -> str:
    """17 significant digits, '.' separator, independent of the locale."""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x) + 0.0  # folds -0.0 into 0.0
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _csv_field(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def render_csv(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [",".join(columns)]
    lines.extend(",".join(_csv_field(format_number(v)) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _json_value(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    return x if math.isfinite(x) else None


def render_json(columns: Sequence[str], rows: Sequence[Sequence], meta: dict) -> str:
    doc = {
        "meta": dict(meta, columns=list(columns)),
        "rows": [{c: _json_value(v) for c, v in zip(columns, row)} for row in rows],
    }
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def _meta(cfg: RunConfig) -> dict:
    params = None
    if cfg.params is not None:
        params = {"c0": cfg.params.c0, "alpha": cfg.params.alpha, "beta": cfg.params.beta}
    options = {k: _json_value(v) if not isinstance(v, (list, tuple)) else [_json_value(x) for x in v] for k, v in sorted(cfg.options.items())}
    return {
        "artifact": "llgselfsim",
        "version": __version__,
        "command": cfg.command,
        "params": params,
        "tolerances": asdict(cfg.tolerances),
        "options": options,
    }


def emit(cfg: RunConfig, columns: Sequence[str], rows: Sequence[Sequence]) -> None:
    text = render_json(columns, rows, _meta(cfg)) if cfg.format == "json" else render_csv(columns, rows)
    if cfg.output_path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# -- argument parsing ----------------------------------------------------------


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, model: bool = True) -> None:
    if model:
        p.add_argument("--c0", type=float, default=0.8, help="curvature scale c0 >= 0 (default 0.8)")
        p.add_argument("--alpha", type=float, default=0.4, help="Gilbert damping in [0, 1] (default 0.4)")
    p.add_argument("--abs-tol", type=float, default=1e-12)
    p.add_argument("--rel-tol", type=float, default=1e-12)
    p.add_argument("--max-step", type=float, default=1.0)
    p.add_argument("--frame-drift-tol", type=float, default=1e-9)
    p.add_argument("--out", default="-", help="output file ('-' for standard output)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", help="key=value file; flags given on the command line win")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="llgselfsim", description="Self-similar LLG profiles and their limit vectors.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("profile", help="trihedron m, n, b with c and tau on [-s_max, s_max]")
    _common(p)
    p.add_argument("--s-max", type=float, default=20.0)
    p.add_argument("--ds", type=float, default=0.05)

    p = sub.add_parser("limit", help="limit vectors A+ and A- and the angle theta")
    _common(p)
    p.add_argument("--force-integrate", action="store_true", help="integrate even where a closed form exists")

    p = sub.add_parser("angle", help="all c0 with theta(c0, alpha) = theta")
    _common(p, model=False)
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--theta", type=float, required=True, help="target angle in (0, pi)")
    p.add_argument("--c0-min", type=float, default=0.0)
    p.add_argument("--c0-max", type=float, default=10.0)
    p.add_argument("--scan-points", type=int, default=512)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("sweep", help="A+ and theta over a c0 grid, for one or more alpha")
    _common(p, model=False)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--alpha-grid", type=_float_list, default=None, help="comma-separated alpha values")
    p.add_argument("--c0-min", type=float, default=0.1)
    p.add_argument("--c0-max", type=float, default=3.0)
    p.add_argument("--steps", type=int, default=30)
    p.add_argument("--force-integrate", action="store_true")
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("selfsim", help="m(s, t) of the self-similar solution")
    _common(p)
    p.add_argument("--t", type=_float_list, default=[1.0], help="comma-separated times")
    p.add_argument("--s-max", type=float, default=2.0)
    p.add_argument("--ds", type=float, default=0.05)

    p = sub.add_parser("filament", help="filament function u(s, t)")
    _common(p)
    p.add_argument("--t", type=_float_list, default=[1.0])
    p.add_argument("--s-max", type=float, default=2.0)
    p.add_argument("--ds", type=float, default=0.05)

    p = sub.add_parser("verify", help="run invariant suites and report pass/fail with margins")
    _common(p, model=False)
    p.add_argument("--suite", choices=SUITE_NAMES, default="all")
    return parser


def read_config_file(path: str) -> Dict[str, str]:
    """``key = value`` lines; blank lines and '#' comments are skipped."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("_", "-")] = value
    return out


def _config_argv(subparser: argparse.ArgumentParser, entries: Dict[str, str]) -> List[str]:
    """Translate config entries into flags placed before the command-line ones."""
    actions = {opt: a for a in subparser._actions for opt in a.option_strings}
    argv = []
    for key, value in entries.items():
        flag = "--" + key
        action = actions.get(flag)
        if action is None or key == "config":
            raise UsageError(f"unknown config key {key!r}")
        if action.nargs == 0:
            if value.lower() in ("1", "true", "yes", "on"):
                argv.append(flag)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"config key {key!r} expects a boolean")
        else:
            argv.extend([flag, value])
    return argv


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        entries = read_config_file(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        idx = list(argv).index(args.command)
        merged = list(argv[: idx + 1]) + _config_argv(sub, entries) + list(argv[idx + 1 :])
        args = parser.parse_args(merged)
    return args


def make_config(args: argparse.Namespace) -> RunConfig:
    """Validate every numeric flag before any computation starts."""
    try:
        tols = ToleranceConfig(args.abs_tol, args.rel_tol, args.max_step, args.frame_drift_tol)
        params = None
        if args.command in ("profile", "limit", "selfsim", "filament"):
            params = ModelParams(args.c0, args.alpha)
        elif args.command == "angle":
            ModelParams(0.0, args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    skip = {"command", "config", "out", "format", "abs_tol", "rel_tol", "max_step", "frame_drift_tol", "c0"}
    if params is not None:
        skip.add("alpha")
    options = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    cfg = RunConfig(args.command, params, tols, args.out, args.format, options)
    _validate(cfg)
    return cfg


def _grid_count(s_max: float, ds: float) -> int:
    if not (math.isfinite(ds) and ds > 0):
        raise UsageError("--ds must be positive")
    if not (math.isfinite(s_max) and s_max > 0):
        raise UsageError("--s-max must be positive")
    n = int(round(s_max / ds))
    if n < 1 or abs(n * ds - s_max) > 1e-9 * s_max:
        raise UsageError("--s-max must be an integer multiple of --ds")
    return n


def _validate(cfg: RunConfig) -> None:
    o = cfg.options
    if cfg.command in ("profile", "selfsim", "filament"):
        _grid_count(o["s_max"], o["ds"])
    if cfg.command == "profile" and o["s_max"] > S_MAX_CAP:
        raise UsageError(f"--s-max is capped at {S_MAX_CAP:g}")
    if cfg.command in ("selfsim", "filament"):
        if not o["t"] or any(not (math.isfinite(t) and t > 0) for t in o["t"]):
            raise UsageError("--t values must be positive")
    if cfg.command == "angle":
        if not 0.0 < o["theta"] < math.pi:
            raise UsageError("--theta must lie in (0, pi)")
        if not 0.0 <= o["c0_min"] < o["c0_max"]:
            raise UsageError("need 0 <= --c0-min < --c0-max")
        if o["scan_points"] < 2:
            raise UsageError("--scan-points must be at least 2")
    if cfg.command == "sweep":
        if (o.get("alpha") is None) == (o.get("alpha_grid") is None):
            raise UsageError("give exactly one of --alpha and --alpha-grid")
        for a in _sweep_alphas(cfg):
            if not (math.isfinite(a) and 0.0 <= a <= 1.0):
                raise UsageError("alpha values must lie in [0, 1]")
        if not 0.0 <= o["c0_min"] <= o["c0_max"] or o["steps"] < 1:
            raise UsageError("need 0 <= --c0-min <= --c0-max and --steps >= 1")
    if cfg.command in ("angle", "sweep") and o.get("workers") is not None and o["workers"] < 1:
        raise UsageError("--workers must be at least 1")


def _sweep_alphas(cfg: RunConfig) -> List[float]:
    o = cfg.options
    return [o["alpha"]] if o.get("alpha") is not None else list(o["alpha_grid"])


def _symmetric_grid(s_max: float, ds: float) -> np.ndarray:
    n = _grid_count(s_max, ds)
    return np.arange(-n, n + 1) * ds


# -- commands -------------------------------------------------------------------


def cmd_profile(cfg: RunConfig) -> int:
    p, o = cfg.params, cfg.options
    n = _grid_count(o["s_max"], o["ds"])
    pos = np.arange(0, n + 1) * o["ds"]
    prof = integrate_profile(p, float(pos[-1]), cfg.tolerances, output_grid=pos)
    s = np.concatenate([-pos[:0:-1], pos])
    states = prof.state_any(s)
    c, tau = curvature(p, s), torsion(p, s)
    rows = [(s[i], *states[:, i], c[i], tau[i]) for i in range(s.size)]
    emit(cfg, PROFILE_COLUMNS, rows)
    return EXIT_OK


def cmd_limit(cfg: RunConfig) -> int:
    from .scattering import limit_vector

    p = cfg.params
    lv = limit_vector(p.c0, p.alpha, cfg.tolerances, force_integrate=bool(cfg.options.get("force_integrate")))
    emit(cfg, LIMIT_COLUMNS, [(p.c0, p.alpha, *lv.A_plus, *lv.A_minus, lv.theta, lv.method)])
    return EXIT_OK


def cmd_angle(cfg: RunConfig) -> int:
    from .scattering import solve_c0_for_angle, theta_of

    o = cfg.options
    roots = solve_c0_for_angle(
        o["alpha"],
        o["theta"],
        (o["c0_min"], o["c0_max"]),
        cfg.tolerances,
        scan_points=o["scan_points"],
        workers=o.get("workers"),
    )
    rows = []
    for c in roots:
        th = theta_of(c, o["alpha"], cfg.tolerances)
        rows.append((c, th, abs(th - o["theta"])))
    emit(cfg, ANGLE_COLUMNS, rows)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    from .scattering import sweep_tasks

    o = cfg.options
    c0s = np.linspace(o["c0_min"], o["c0_max"], o["steps"])
    pairs = [(float(c), float(a)) for a in _sweep_alphas(cfg) for c in c0s]
    result = sweep_tasks(pairs, cfg.tolerances, force_integrate=bool(o.get("force_integrate")), workers=o.get("workers"))
    rows = [(r.c0, r.alpha, *r.A_plus, r.theta, r.method, r.error) for r in result]
    emit(cfg, SWEEP_COLUMNS, rows)
    ok = sum(1 for r in result if not r.error)
    if ok < SWEEP_SUCCESS_FRACTION * len(result):
        print(f"error: only {ok} of {len(result)} rows succeeded", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_selfsim(cfg: RunConfig) -> int:
    from .frenet import integrate_profile as _integrate
    from .selfsim import profile_length

    p, o = cfg.params, cfg.options
    s = _symmetric_grid(o["s_max"], o["ds"])
    # m(s, t) only needs the profile itself, on |eta| <= s_max / sqrt(t_min).
    need = o["s_max"] / math.sqrt(min(o["t"]))
    if need > S_MAX_CAP:
        raise UsageError(f"s_max / sqrt(t) = {need:g} exceeds the profile cap {S_MAX_CAP:g}")
    prof = _integrate(p, max(need, min(profile_length(p), S_MAX_CAP)), cfg.tolerances)
    rows = []
    for t in o["t"]:
        m = prof.state_any(s / math.sqrt(t))[0:3]
        rows.extend((s[i], t, *m[:, i]) for i in range(s.size))
    emit(cfg, SELFSIM_COLUMNS, rows)
    return EXIT_OK


def cmd_filament(cfg: RunConfig) -> int:
    from .selfsim import filament

    p, o = cfg.params, cfg.options
    s = _symmetric_grid(o["s_max"], o["ds"])
    rows = []
    for t in o["t"]:
        for x in s:
            u = filament(p, float(x), t).u
            rows.append((x, t, u.real, u.imag, abs(u)))
    emit(cfg, FILAMENT_COLUMNS, rows)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .verification import run_suite

    checks = run_suite(cfg.options["suite"], cfg.tolerances)
    rows = [(c.suite, c.name, c.value, c.threshold, c.margin, "PASS" if c.passed else "FAIL") for c in checks]
    emit(cfg, VERIFY_COLUMNS, rows)
    failed = [c for c in checks if not c.passed]
    if failed:
        print(f"{len(failed)} of {len(checks)} checks failed", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


HANDLERS = {
    "profile": cmd_profile,
    "limit": cmd_limit,
    "angle": cmd_angle,
    "sweep": cmd_sweep,
    "selfsim": cmd_selfsim,
    "filament": cmd_filament,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        cfg = make_config(args)
    except SystemExit as exc:  # argparse reports its own errors with code 2
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoRoot as exc:
        print(f"no root: {exc}", file=sys.stderr)
        return EXIT_NOROOT
    except (LLGError, ArithmeticError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
