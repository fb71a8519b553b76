"""Command-line front end: ``starparticles <command> [options]``.

Commands: simulate, corr, fractal, partition, estimate, preset.  Options
may also come from an INI file given with ``--config``; keys are option
names (``m1 = 100``) in any section, and flags on the command line win.
Exit status is 0 on success, 2 for usage or parameter errors and 1 for
numerical or I/O failures.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import re
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .correlation import corr_quadrature_circle, corr_quadrature_sphere, sample_curve, CorrelationCurve
from .errors import DomainError, ParticleError
from .estimate import estimate_from_fields
from .fractal import bq_numeric, fractal_index_closed
from .geometry import export_obj, outline_csv, polygon_outline, triangulate
from .kernels import Kernel, kernel_constants
from .levy_basis import FieldMoments, LevyBasisSpec, field_moments, invert_parameters
from .numerics import QuadratureSpec
from .partition import partition_circle, partition_sphere
from .presets import PRESETS, get_preset
from .simulate import ParticleSpec, SimulationConfig, simulate_ensemble, simulate_field

__all__ = ["main", "build_parser", "parse_thetas", "OUT_DIR_ENV"]

OUT_DIR_ENV = "STARPARTICLES_OUT_DIR"


class UsageError(Exception):
    pass


def parse_angle(text: str) -> float:
    """A float, or a multiple/fraction of pi such as ``pi``, ``2pi``, ``pi/2``, ``0.5*pi``."""
    s = text.strip().lower().replace(" ", "")
    m = re.fullmatch(r"([0-9.eE+-]*)\*?pi(?:/([0-9.eE+-]+))?", s)
    try:
        if m:
            num = float(m.group(1)) if m.group(1) not in ("", "+", "-") else (-1.0 if m.group(1) == "-" else 1.0)
            den = float(m.group(2)) if m.group(2) else 1.0
            return num * math.pi / den
        return float(s)
    except ValueError:
        raise UsageError(f"cannot parse angle {text!r}") from None


def parse_thetas(spec: str) -> np.ndarray:
    """``lo:hi:count`` evenly spaced angles, endpoints included."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError("--thetas expects lo:hi:count")
    lo, hi = parse_angle(parts[0]), parse_angle(parts[1])
    try:
        count = int(parts[2])
    except ValueError:
        raise UsageError("--thetas count must be an integer") from None
    if count < 1 or not 0 <= lo <= hi <= math.pi + 1e-12:
        raise UsageError("--thetas needs 0 <= lo <= hi <= pi and count >= 1")
    return np.linspace(lo, min(hi, math.pi), count)


# ---------------------------------------------------------------- parser

def _kernel_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("kernel")
    g.add_argument("--family", choices=["vmf", "uniform", "power"])
    g.add_argument("--domain", choices=["sphere", "circle"])
    g.add_argument("--a", type=float, help="von Mises-Fisher precision")
    g.add_argument("--r", type=float, help="uniform kernel cut-off angle")
    g.add_argument("--q", type=float, help="power kernel exponent")


def _sim_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("simulation")
    g.add_argument("--basis", choices=["gaussian", "gamma"])
    g.add_argument("--mean", type=float, help="target field mean mu_X")
    g.add_argument("--variance", type=float, help="target field variance sigma2_X")
    g.add_argument("--mu", type=float)
    g.add_argument("--sigma2", type=float)
    g.add_argument("--kappa", type=float)
    g.add_argument("--tau", type=float)
    g.add_argument("--m1", type=int, help="colatitude rings (grid size M on the circle)")
    g.add_argument("--m2", type=int, help="longitudes per ring")
    g.add_argument("--n", type=int, help="partition cells")
    g.add_argument("--c", type=float, help="truncation level")
    g.add_argument("--clamp", type=float, help="power-kernel angle floor (radians)")


def _run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="random seed (required)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (results do not depend on it)")
    p.add_argument("--manifest-out")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file of option defaults")
    common.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or .)")
    parser = argparse.ArgumentParser(prog="starparticles", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate one particle")
    _kernel_options(p)
    _sim_options(p)
    _run_options(p)
    p.add_argument("--csv-out")
    p.add_argument("--mesh-out")
    p.add_argument("--outline-out")

    p = sub.add_parser("corr", parents=[common], help="correlation function C(theta) as CSV")
    _kernel_options(p)
    p.add_argument("--thetas", help="lo:hi:count, e.g. 0:pi:50")
    p.add_argument("--method", choices=["auto", "closed", "quadrature"])
    p.add_argument("--out")

    p = sub.add_parser("fractal", parents=[common], help="fractal index and Hausdorff dimension as JSON")
    _kernel_options(p)
    p.add_argument("--numeric", action="store_true", default=None, help="also evaluate b by quadrature")
    p.add_argument("--out")

    p = sub.add_parser("partition", parents=[common], help="equal-area partition cells as CSV")
    p.add_argument("--n", type=int)
    p.add_argument("--domain", choices=["sphere", "circle"])
    p.add_argument("--out")

    p = sub.add_parser("estimate", parents=[common], help="variogram and fitted dimension of an ensemble")
    _kernel_options(p)
    _sim_options(p)
    _run_options(p)
    p.add_argument("--seeds", type=int, help="ensemble size; seeds run from --seed upward")
    p.add_argument("--csv-out")
    p.add_argument("--json-out")

    p = sub.add_parser("preset", parents=[common], help="simulate a celestial body")
    p.add_argument("name", choices=sorted(PRESETS) + ["earth"])
    p.add_argument("--m1", type=int)
    p.add_argument("--m2", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--clamp", type=float)
    p.add_argument("--full-scale", action="store_true", default=None,
                   help="N = 10^6 cells (slow)")
    _run_options(p)
    p.add_argument("--csv-out")
    p.add_argument("--mesh-out")
    return parser


# ---------------------------------------------------------------- config

def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _apply_config(args: argparse.Namespace, sub: argparse.ArgumentParser) -> None:
    if not args.config:
        return
    cp = configparser.ConfigParser()
    try:
        with open(args.config, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    except configparser.Error as exc:
        raise UsageError(f"bad config file: {exc}") from None
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config", "name")}
    for section in cp.sections():
        for key, raw in cp.items(section):
            dest = key.replace("-", "_")
            if dest not in actions:
                raise UsageError(f"unknown config key {key!r} in [{section}]")
            if getattr(args, dest) is not None:
                continue
            act = actions[dest]
            if isinstance(act, (argparse._StoreTrueAction,)):
                value = cp.getboolean(section, key)
            else:
                try:
                    value = act.type(raw) if act.type else raw
                except ValueError:
                    raise UsageError(f"bad value for {key}: {raw!r}") from None
                if act.choices is not None and value not in act.choices:
                    raise UsageError(f"{key} must be one of {list(act.choices)}")
            setattr(args, dest, value)


# ---------------------------------------------------------------- helpers

def _kernel(args) -> Kernel:
    if args.family is None:
        raise UsageError("--family is required")
    name = {"vmf": "a", "uniform": "r", "power": "q"}[args.family]
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"--{name} is required for the {args.family} kernel")
    return Kernel(args.family, value, args.domain or "sphere")


def _basis(args, kernel: Kernel) -> tuple[LevyBasisSpec, FieldMoments]:
    kind = args.basis or "gaussian"
    consts = kernel_constants(kernel)
    if args.mean is not None or args.variance is not None:
        if args.mean is None or args.variance is None:
            raise UsageError("--mean and --variance go together")
        basis = invert_parameters(FieldMoments(args.mean, args.variance), consts, kind)
    elif kind == "gaussian":
        basis = LevyBasisSpec.gaussian(args.mu if args.mu is not None else 0.0,
                                       args.sigma2 if args.sigma2 is not None else 1.0)
    else:
        basis = LevyBasisSpec.gamma(args.kappa if args.kappa is not None else 1.0,
                                    args.tau if args.tau is not None else 1.0)
    return basis, field_moments(basis, consts)


def _seed(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required for simulation commands")
    return args.seed


def _out_dir(args) -> Path:
    d = Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _target(args, name: Optional[str], default: Optional[str]) -> Optional[Path]:
    if name is None and default is None:
        return None
    path = Path(name if name is not None else default)
    return path if path.is_absolute() or path.parent != Path(".") else _out_dir(args) / path


def _write(path: Path, data: bytes | str) -> dict:
    raw = data.encode("utf-8") if isinstance(data, str) else data
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(raw)
    return {"file": path.name, "sha256": hashlib.sha256(raw).hexdigest()}


def _emit(text: str, dest: Optional[str], args) -> Optional[dict]:
    if dest is None:
        sys.stdout.write(text)
        return None
    return _write(_target(args, dest, None), text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _manifest(command: str, **sections) -> dict:
    # no timestamps, host names or thread counts: the manifest must be reproducible
    return {
        "command": command,
        "versions": {"starparticles": __version__, "numpy": np.__version__},
        "quadrature": QuadratureSpec().to_dict(),
        **sections,
    }


def _kernel_dict(k: Kernel) -> dict:
    c = kernel_constants(k)
    return {"family": k.family, k.parameter_name: k.parameter, "domain": k.domain,
            "c1": c.c1, "c2": c.c2}


def _config_dict(cfg: SimulationConfig) -> dict:
    return {"M1": cfg.M1, "M2": cfg.M2, "N": cfg.N, "seed": cfg.seed, "clamp_delta": cfg.clamp_delta}


# ---------------------------------------------------------------- commands

def _cmd_corr(args) -> int:
    k = _kernel(args)
    thetas = parse_thetas(args.thetas or "0:pi:50")
    method = args.method or "auto"
    if method == "quadrature":
        fn = corr_quadrature_sphere if k.domain == "sphere" else corr_quadrature_circle
        curve = CorrelationCurve(thetas, fn(k, thetas), k, "quadrature")
    else:
        if method == "closed" and k.family == "power":
            raise UsageError(f"no closed form for the {k.family} kernel")
        curve = sample_curve(k, thetas)
    _emit(curve.to_csv(), args.out, args)
    return 0


def _cmd_fractal(args) -> int:
    k = _kernel(args)
    prof = fractal_index_closed(k)
    out = {"family": k.family, "parameter": k.parameter, "parameter_name": k.parameter_name,
           "domain": k.domain, **prof.to_dict()}
    if args.numeric and k.family == "power" and k.domain == "sphere":
        out["b_numeric"] = bq_numeric(k.parameter)
    _emit(_json(out), args.out, args)
    return 0


def _cmd_partition(args) -> int:
    if args.n is None:
        raise UsageError("--n is required")
    part = partition_sphere(args.n) if (args.domain or "sphere") == "sphere" else partition_circle(args.n)
    _emit(part.to_csv(), args.out, args)
    return 0


def _sim_config(args, seed: int) -> SimulationConfig:
    return SimulationConfig(M1=args.m1 or (200 if (args.domain or "sphere") == "sphere" else 5000),
                            M2=args.m2 or 400, N=args.n or 10_000, seed=seed, clamp_delta=args.clamp)


def _cmd_simulate(args) -> int:
    seed = _seed(args)
    k = _kernel(args)
    basis, moments = _basis(args, k)
    spec = ParticleSpec(k, basis, args.c)
    cfg = _sim_config(args, seed)
    field = simulate_field(spec, cfg, threads=args.threads or 1)
    outputs = {"values": _write(_target(args, args.csv_out, "field.csv"), field.to_csv())}
    if args.mesh_out:
        if k.domain != "sphere":
            raise UsageError("--mesh-out needs the sphere domain")
        outputs["mesh"] = _write(_target(args, args.mesh_out, None), export_obj(triangulate(field)))
    if args.outline_out:
        if k.domain != "circle":
            raise UsageError("--outline-out needs the circle domain")
        outputs["outline"] = _write(_target(args, args.outline_out, None),
                                    outline_csv(polygon_outline(field)))
    man = _manifest("simulate", kernel=_kernel_dict(k), basis=basis.to_dict(),
                    moments={"mu_X": moments.mu_X, "sigma2_X": moments.sigma2_X},
                    truncation_c=args.c, config=_config_dict(field.config), outputs=outputs)
    _write(_target(args, args.manifest_out, "manifest.json"), _json(man))
    return 0


def _cmd_estimate(args) -> int:
    seed = _seed(args)
    if args.family is None:
        args.family, args.q = "power", args.q if args.q is not None else 0.5
    k = _kernel(args)
    basis, moments = _basis(args, k)
    spec = ParticleSpec(k, basis, args.c)
    count = args.seeds or 20
    if count < 2:
        raise UsageError("--seeds must be >= 2")
    cfg = SimulationConfig(M1=args.m1 or 100, M2=args.m2 or 200, N=args.n or 10_000, seed=seed,
                           clamp_delta=args.clamp)
    fields = simulate_ensemble(spec, cfg, range(seed, seed + count), threads=args.threads or 1)
    est = estimate_from_fields(fields, seed=seed)
    prof = est.profile
    result = {"alpha": prof.alpha, "dimension": prof.hausdorff_dim, "b": prof.b,
              "r_squared": prof.r_squared, "window": list(est.window) if est.window else None,
              "sigma2_hat": est.sigma2_hat, "min_lag": est.min_lag,
              "closed_form": fractal_index_closed(k).to_dict()}
    outputs = {
        "variogram": _write(_target(args, args.csv_out, "variogram.csv"), est.variogram.to_csv()),
        "estimate": _write(_target(args, args.json_out, "estimate.json"), _json(result)),
    }
    man = _manifest("estimate", kernel=_kernel_dict(k), basis=basis.to_dict(),
                    moments={"mu_X": moments.mu_X, "sigma2_X": moments.sigma2_X}, truncation_c=args.c,
                    config=_config_dict(fields[0].config) | {"seeds": count}, outputs=outputs)
    _write(_target(args, args.manifest_out, "manifest.json"), _json(man))
    sys.stdout.write(_json(result))
    return 0


def _cmd_preset(args) -> int:
    seed = _seed(args)
    preset = get_preset(args.name)
    spec = preset.particle()
    cfg = preset.config(seed, bool(args.full_scale), M1=args.m1, M2=args.m2, N=args.n)
    if args.clamp is not None:
        cfg = SimulationConfig(cfg.M1, cfg.M2, cfg.N, cfg.seed, args.clamp)
    field = simulate_field(spec, cfg, threads=args.threads or 1)
    outputs = {"values": _write(_target(args, args.csv_out, f"{preset.name}.csv"), field.to_csv())}
    if args.mesh_out:
        outputs["mesh"] = _write(_target(args, args.mesh_out, None), export_obj(triangulate(field)))
    man = _manifest(
        "preset",
        preset={"name": preset.name, "r0": preset.r0, "d_plus": preset.d_plus,
                "d_minus": preset.d_minus, "q": preset.q, "truncation_c": preset.truncation_c},
        kernel=_kernel_dict(spec.kernel), basis=spec.basis.to_dict(),
        config=_config_dict(field.config),
        summary={"min_radius": float(field.values.min()), "max_radius": float(field.values.max()),
                 "mean_radius": float(field.values.mean())},
        outputs=outputs,
    )
    _write(_target(args, args.manifest_out, f"{preset.name}.manifest.json"), _json(man))
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "corr": _cmd_corr,
    "fractal": _cmd_fractal,
    "partition": _cmd_partition,
    "estimate": _cmd_estimate,
    "preset": _cmd_preset,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    sub = _subparser(parser, args.command)
    try:
        _apply_config(args, sub)
        if getattr(args, "threads", None) is not None and args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return _COMMANDS[args.command](args)
    except (UsageError, DomainError, KeyError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        sub.print_usage(sys.stderr)
        print(f"{sub.prog}: error: {msg}", file=sys.stderr)
        return 2
    except (ParticleError, ArithmeticError, OSError, MemoryError) as exc:
        print(f"{sub.prog}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
