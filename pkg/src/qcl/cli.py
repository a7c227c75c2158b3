"""Command-line runner for the experiments.

Each subcommand writes a result table (CSV or JSON) and a JSON manifest
with the resolved parameters, seed, version and wall time. Parameters come
from flags, then a JSON ``--config`` file, then defaults. Exit codes: 0 on
success, 2 on invalid input, 3 when ``--check`` is set and the experiment's
threshold check fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass
from typing import Any, Callable

from . import __version__, experiments
from . import _accel
from . import rng as _rng

EXIT_OK, EXIT_INVALID, EXIT_CHECK = 0, 2, 3


class ConfigError(ValueError):
    """Invalid parameter; the message names the offending key."""


# ---------------------------------------------------------------- converters

def _float(v) -> float:
    if isinstance(v, bool):
        raise ValueError("expected a number")
    return float(v)


def _int(v) -> int:
    if isinstance(v, bool):
        raise ValueError("expected an integer")
    if isinstance(v, float):
        if not v.is_integer():
            raise ValueError(f"expected an integer, got {v}")
        return int(v)
    if isinstance(v, str):
        f = float(v)
        if not f.is_integer():
            raise ValueError(f"expected an integer, got {v}")
        return int(f)
    return int(v)


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("1", "true", "yes", "on", "0", "false", "no", "off"):
        return v.lower() in ("1", "true", "yes", "on")
    raise ValueError(f"expected a boolean, got {v!r}")


def _float_list(v) -> tuple:
    if isinstance(v, str):
        v = [s for s in v.split(",") if s.strip()]
    return tuple(_float(x) for x in v)


def _complex_list(v) -> tuple:
    if isinstance(v, str):
        v = [s for s in v.split(",") if s.strip()]
    out = []
    for x in v:
        if isinstance(x, (list, tuple)) and len(x) == 2:
            out.append(complex(_float(x[0]), _float(x[1])))
        else:
            out.append(complex(str(x).replace(" ", "")) if isinstance(x, str) else complex(x))
    return tuple(out)


def _monomials(v) -> tuple:
    if isinstance(v, str):
        v = [[int(t) for t in part.split(",")] for part in v.split(";") if part.strip()]
    out = []
    for m in v:
        m = tuple(_int(t) for t in m)
        if len(m) != 3 or min(m) < 0:
            raise ValueError(f"monomials are triples of nonnegative integers, got {m}")
        out.append(m)
    return tuple(out)


def _choice(*options) -> Callable:
    def conv(v):
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {v!r}")
        return v
    return conv


# ---------------------------------------------------------------- validators

def _nonneg(v):
    return v >= 0


def _pos(v):
    return v > 0


def _unit(v):
    return 0 <= v < 1


def _all_nonneg(v):
    return len(v) > 0 and all(x >= 0 for x in v)


def _all_pos(v):
    return len(v) > 0 and all(x > 0 for x in v)


@dataclass(frozen=True)
class Opt:
    name: str
    conv: Callable
    default: Any
    help: str
    check: Callable | None = None
    rule: str = ""

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


_R = Opt("r", _float, 1.0, "curvature r", _nonneg, ">= 0")
_HBAR = Opt("hbar", _float, 1.0, "Planck constant", _pos, "> 0")
_N_SAMPLES = Opt("N", _int, 20000, "number of samples", _pos, ">= 1")
_T = Opt("T", _float, 1.0, "time horizon", _pos, "> 0")
_DT = Opt("dt", _float, 1e-3, "time step", _pos, "> 0")
_R_GRID = Opt("r_grid", _float_list, (0.1, 1.0, 10.0), "comma-separated r values", _all_nonneg, "all >= 0")


def _with(opt: Opt, **kw) -> Opt:
    return Opt(**{**opt.__dict__, **kw})


@dataclass(frozen=True)
class Command:
    name: str
    help: str
    opts: tuple
    run: Callable
    random: bool = True


def _run_chain(p, threads):
    if p["mode"] == "rescaled":
        return experiments.chain_rescaled(p["hbar"], p["t"], p["N"], p["seed"], threads, p["tol"])
    if p["kernel"] == "joint-q" and p["q"] is None:
        raise ConfigError("q: required for kernel joint-q")
    return experiments.chain_distribution(p["kernel"], p["steps"], p["exact"], p["q"], p["flip"])


COMMANDS = {c.name: c for c in [
    Command("irrep", "build one irrep, check relations, list the Casimir spectrum", (
        Opt("lam", _float, 1.0, "highest weight (multiple of hbar)", _nonneg, ">= 0"),
        _R, _with(_HBAR, default=0.25)),
        lambda p, th: experiments.irrep_report(p["lam"], p["r"], p["hbar"]), random=False),
    Command("tensor", "decompose V(hbar)^n via the Casimir and compare with the crystal rule", (
        Opt("n", _int, 6, "number of tensor factors", lambda v: 1 <= v <= 12, "in 1..12"),
        Opt("r_values", _float_list, (0.5, 2.0), "comma-separated r values", _all_pos, "all > 0"),
        _HBAR),
        lambda p, th: experiments.tensor_report(p["n"], p["r_values"], p["hbar"]), random=False),
    Command("static-limit", "character ratios against orbit Monte Carlo as hbar shrinks", (
        Opt("lam", _float, 1.0, "orbit radius", _pos, "> 0"),
        _with(_R, check=_pos, rule="> 0"),
        Opt("hbars", _float_list, (0.1, 0.05, 0.025), "comma-separated hbar values", _all_pos, "all > 0"),
        Opt("monomials", _monomials, None, "semicolon-separated a,b,c triples (default (a,a,c), a,c <= 2)"),
        _with(_N_SAMPLES, default=1_000_000),
        Opt("two_orbit", _bool, False, "use the product of two orbits and the tensor square"),
        Opt("tol", _float, 0.01, "absolute tolerance of the final gap", _pos, "> 0")),
        lambda p, th: experiments.static_limit(p["lam"], p["r"], p["hbars"], p["monomials"], p["N"], p["seed"],
                                               p["two_orbit"], th, p["tol"])),
    Command("crystal-limit", "four corners of the crystal-limit square", (
        Opt("lam1", _float, 1.0, "first orbit radius", _pos, "> 0"),
        Opt("lam2", _float, 1.0, "second orbit radius", _pos, "> 0"),
        _with(_R, default=20.0, check=_pos, rule="> 0"),
        _with(_HBAR, default=0.01),
        Opt("phi", _float_list, (0.0, 1.0), "coefficients of phi, constant first"),
        Opt("psi", _float_list, (1.0,), "coefficients of psi, constant first"),
        _with(_N_SAMPLES, default=200_000),
        Opt("r_quantum", _float, 1.0, "r for the quantum corner", _pos, "> 0"),
        Opt("hbar_quantum", _float, 0.1, "hbar for the quantum corner", _pos, "> 0")),
        lambda p, th: experiments.crystal_limit(p["lam1"], p["lam2"], p["r"], p["hbar"], p["phi"], p["psi"],
                                                p["N"], p["seed"], th, p["r_quantum"], p["hbar_quantum"])),
    Command("chain", "exact law of a lattice chain, or the rescaled radial chain against Maxwell", (
        Opt("mode", _choice("evolve", "rescaled"), "evolve", "evolve | rescaled"),
        Opt("kernel", _choice("radial", "joint-q", "joint-flat"), "radial", "radial | joint-q | joint-flat"),
        Opt("steps", _int, 10, "number of steps", lambda v: v >= 1, ">= 1"),
        Opt("exact", _bool, False, "rational arithmetic"),
        Opt("q", _float, None, "deformation parameter of joint-q", _unit, "in [0, 1)"),
        Opt("flip", _bool, False, "negate the weight coordinate"),
        _with(_HBAR, default=0.02, help="lattice spacing (rescaled mode)"),
        Opt("t", _float, 1.0, "time (rescaled mode)", _pos, "> 0"),
        _with(_N_SAMPLES, default=100_000),
        Opt("tol", _float, 0.02, "KS tolerance (rescaled mode)", _pos, "> 0")),
        _run_chain),
    Command("qwalk-oracle", "joint trajectory law of the quantum walk versus the q-kernel", (
        Opt("n", _int, 8, "number of steps", lambda v: 1 <= v <= 12, "in 1..12"),
        _R, _HBAR,
        Opt("tol", _float, 1e-10, "tolerance per transition", _pos, "> 0"),
        Opt("min_prefix", _float, 1e-8, "smallest prefix mass for conditional comparisons", _nonneg, ">= 0")),
        lambda p, th: experiments.qwalk_report(p["n"], p["r"], p["hbar"], p["tol"], p["min_prefix"]),
        random=False),
    Command("sde", "radial part of the Brownian motion on the dual group", (
        Opt("mode", _choice("ks", "trend", "dump"), "ks", "ks | trend | dump"),
        _R_GRID, _T, _DT, _N_SAMPLES,
        Opt("n_paths", _int, 200, "paths for the trend mode", _pos, ">= 1"),
        Opt("small_r", _float_list, (0.01, 0.1, 1.0), "r values approaching the flat limit", _all_pos, "all > 0"),
        Opt("large_r", _float_list, (5.0, 20.0, 80.0), "r values approaching the crystal limit", _all_pos,
            "all > 0"),
        Opt("tol", _float, 0.015, "KS tolerance", _pos, "> 0"),
        Opt("min_fraction", _float, 0.95, "fraction of monotone paths required", _unit, "in [0, 1)")),
        lambda p, th: experiments.sde_report(p["mode"], p["r_grid"], p["T"], p["dt"], p["N"], p["seed"], th,
                                             p["n_paths"], p["small_r"], p["large_r"], p["tol"],
                                             p["min_fraction"])),
    Command("r-invariance", "two-sample KS between terminal radial laws for pairs of r", (
        _R_GRID, _T, _DT, _N_SAMPLES),
        lambda p, th: experiments.r_invariance_report(p["r_grid"], p["T"], p["dt"], p["N"], p["seed"], th)),
    Command("spherical", "spherical function: rescaling identity and Monte Carlo", (
        Opt("lam", _float, 1.0, "orbit radius", _pos, "> 0"),
        _with(_R, check=_pos, rule="> 0"),
        Opt("z_values", _complex_list, (0, 0.5, 1, 2j), "comma-separated complex z (python syntax, e.g. 2j)"),
        _with(_N_SAMPLES, default=200_000)),
        lambda p, th: experiments.spherical_report(p["lam"], p["r"], p["z_values"], p["N"], p["seed"], th)),
]}

_COMMON = ("config", "seed", "threads", "out", "format", "manifest", "check", "command")
_CONFIG_COMMON = ("seed", "threads", "format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcl", description="Experiments on the two-parameter quantum sl2.")
    parser.add_argument("--version", action="version", version=f"qcl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS.values():
        sp = sub.add_parser(cmd.name, help=cmd.help, description=cmd.help, argument_default=argparse.SUPPRESS)
        sp.add_argument("--config", help="JSON file of parameters (flags take precedence)")
        sp.add_argument("--seed", help="64-bit seed (falls back to QCL_SEED, then 0)")
        sp.add_argument("--threads", help="worker threads (results do not depend on it)")
        sp.add_argument("--out", help="result file (stdout when omitted)")
        sp.add_argument("--format", help="csv (default) or json")
        sp.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
        sp.add_argument("--check", action="store_true", help="exit 3 if the threshold check fails")
        for opt in cmd.opts:
            default = "none" if opt.default is None else opt.default
            rule = f"; {opt.rule}" if opt.rule else ""
            if opt.conv is _bool:
                sp.add_argument(opt.flag, dest=opt.name, action=argparse.BooleanOptionalAction,
                                help=f"{opt.help} (default {default})")
            else:
                sp.add_argument(opt.flag, dest=opt.name, help=f"{opt.help} (default {default}{rule})")
    return parser


def _norm_key(k: str) -> str:
    return k.replace("-", "_")


def resolve(cmd: Command, flags: dict, config: dict) -> tuple[dict, dict]:
    """Merge defaults, config and flags; convert and validate every value.

    Returns
    -------
    params, common
        Experiment parameters and the shared options ``seed``, ``threads``,
        ``format``.

    Raises
    ------
    ConfigError
        Unknown key, unconvertible value or a value outside its range.
    """
    opts = {o.name: o for o in cmd.opts}
    config = {_norm_key(k): v for k, v in config.items()}
    for k in config:
        if k not in opts and k not in _CONFIG_COMMON:
            raise ConfigError(f"{k}: unknown key for '{cmd.name}'")
    params = {}
    for name, opt in opts.items():
        raw = flags.get(name, config.get(name, opt.default))
        if raw is None:
            params[name] = None
            continue
        try:
            val = opt.conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: {exc}") from None
        if isinstance(val, float) and not math.isfinite(val):
            raise ConfigError(f"{name}: must be finite")
        if opt.check is not None and not opt.check(val):
            raise ConfigError(f"{name}: {raw!r} out of range ({opt.rule})")
        params[name] = val
    common = {}
    raw_seed = flags.get("seed", config.get("seed"))
    try:
        common["seed"] = _rng.resolve_seed(None if raw_seed is None else _int(raw_seed))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed: {exc}") from None
    raw_threads = flags.get("threads", config.get("threads"))
    if raw_threads is None:
        common["threads"] = None
    else:
        try:
            common["threads"] = _int(raw_threads)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"threads: {exc}") from None
        if common["threads"] < 1:
            raise ConfigError("threads: must be >= 1")
    fmt = flags.get("format", config.get("format", "csv"))
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format: expected csv or json, got {fmt!r}")
    common["format"] = fmt
    params["seed"] = common["seed"]
    return params, common


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def format_csv(rows: list) -> str:
    cols: list = []
    for row in rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_cell(row.get(k)) for k in cols])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if hasattr(v, "item"):
        return _jsonable(v.item())
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    return v


def format_json(rows: list) -> str:
    return json.dumps(_jsonable(rows), indent=1, sort_keys=False) + "\n"


def _write_manifest(path: str, data: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    args = vars(ns)
    cmd = COMMANDS[args["command"]]
    out = args.get("out")
    manifest_path = args.get("manifest") or (f"{out}.manifest.json" if out else f"qcl-{cmd.name}.manifest.json")
    manifest = dict(command=cmd.name, argv=argv, version=__version__, backend=_accel.BACKEND, output=out)
    t0 = time.perf_counter()
    try:
        config = {}
        if args.get("config"):
            try:
                with open(args["config"]) as fh:
                    config = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"config: cannot read {args['config']}: {exc}") from None
            if not isinstance(config, dict):
                raise ConfigError("config: top level must be a JSON object")
        flags = {k: v for k, v in args.items() if k not in _COMMON}
        for k in ("seed", "threads", "format"):
            if k in args:
                flags[k] = args[k]
        params, common = resolve(cmd, flags, config)
        manifest.update(parameters=params, seed=common["seed"], threads=common["threads"], format=common["format"])
        try:
            outcome = cmd.run(params, common["threads"])
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    except ConfigError as exc:
        print(f"qcl {cmd.name}: invalid input: {exc}", file=sys.stderr)
        manifest.update(status="invalid", error=str(exc), wall_time_s=time.perf_counter() - t0)
        _write_manifest(manifest_path, manifest)
        return EXIT_INVALID
    text = format_csv(outcome.rows) if common["format"] == "csv" else format_json(outcome.rows)
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = args.get("check", False) and outcome.passed is False
    manifest.update(status="check_failed" if failed else "ok", passed=outcome.passed, summary=outcome.summary,
                    rows=len(outcome.rows), wall_time_s=time.perf_counter() - t0)
    _write_manifest(manifest_path, manifest)
    if outcome.passed is not None:
        print(f"qcl {cmd.name}: check {'passed' if outcome.passed else 'FAILED'}", file=sys.stderr)
    return EXIT_CHECK if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
