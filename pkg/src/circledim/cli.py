"""Command-line front end.

Every subcommand is headless, reads an optional JSON config plus flag
overrides, and emits machine-readable JSON (or CSV where noted) to stdout
or --out.  Exit codes: 0 pass, 2 soft-flagged, 1 error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bounds import empirical_M
from .errors import CircleDimError
from .maps import validate_map
from .measure import build_cover, cover_report, signature
from .partition import bridge_decomposition
from .pipelines import (
    _hierarchy,
    pipeline_content_sums,
    pipeline_dimension,
    pipeline_singularity,
    pipeline_theorem1,
    resolve_map,
    target_cf_from_config,
)
from .reports import RunConfig, emit_csv, emit_json, write_output
from .rotation import closest_return_quotients, tune_parameter
from .maps import make_map


def _load_config(args) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            base = json.load(fh)
    base.setdefault("map", {})
    base.setdefault("analysis", {})
    base.setdefault("output", {})
    if getattr(args, "family", None):
        base["map"]["family"] = args.family
    if getattr(args, "omega", None):
        base["map"]["omega"] = args.omega
    if getattr(args, "target_cf", None):
        base["map"]["target_cf"] = [int(a) for a in args.target_cf.split(",")]
        base["map"].pop("omega", None)
    if getattr(args, "periodic", False):
        base["map"]["target_periodic"] = True
    if getattr(args, "precision_bits", None):
        base["map"]["precision_bits"] = args.precision_bits
    if getattr(args, "depth", None):
        base["analysis"]["depth"] = args.depth
    if getattr(args, "gamma", None):
        base["analysis"]["gamma"] = [float(g) for g in args.gamma.split(",")]
    if getattr(args, "tau", None) is not None:
        base["analysis"]["tau"] = args.tau
    if getattr(args, "samples", None):
        base["analysis"]["samples"] = args.samples
    if getattr(args, "seed", None) is not None:
        base["analysis"]["seed"] = args.seed
    if getattr(args, "orbit_cap", None):
        base["analysis"]["orbit_cap"] = args.orbit_cap
    if getattr(args, "out", None):
        base["output"]["path"] = args.out
    if getattr(args, "format", None):
        base["output"]["format"] = args.format
    return RunConfig.from_dict(base)


def _common(p: argparse.ArgumentParser, needs_level=False):
    p.add_argument("--config", help="JSON config path")
    p.add_argument("--family", help="map family")
    p.add_argument("--omega", help="rotation parameter (decimal string)")
    p.add_argument("--target-cf", dest="target_cf",
                   help="comma-separated partial quotients to tune to")
    p.add_argument("--periodic", action="store_true",
                   help="treat the target quotients as a periodic word")
    p.add_argument("--precision-bits", dest="precision_bits", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--gamma", help="comma-separated cover gammas")
    p.add_argument("--tau", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--orbit-cap", dest="orbit_cap", type=int)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"))
    if needs_level:
        p.add_argument("--level", type=int, required=True)


def cmd_rotnum(args) -> int:
    cfg = _load_config(args)
    spec, cf, resolution = resolve_map(cfg)
    report = {
        "command": "rotnum",
        "config": cfg.to_dict(),
        "map": spec.to_config(),
        "resolution": resolution,
        "quotients": list(cf.quotients[:cfg.depth]),
    }
    write_output(emit_json(report), cfg.out_path)
    return 0


def cmd_tune(args) -> int:
    cfg = _load_config(args)
    spec, cf, resolution = resolve_map(cfg)
    reading = resolution["reading"]
    import mpmath
    dps = mpmath.libmp.libmpf.prec_to_dps(cfg.precision_bits)
    report = {
        "command": "tune",
        "config": cfg.to_dict(),
        "omega": mpmath.nstr(spec.omega, dps),
        "quotients": reading.get("quotients"),
        "q": reading.get("return_times"),
        "residuals": {
            "bracket": reading.get("bracket"),
            "iterations_used": reading.get("iterations_used"),
        },
        "precision_bits": cfg.precision_bits,
    }
    write_output(emit_json(report), cfg.out_path)
    return 0


def cmd_partition(args) -> int:
    cfg = _load_config(args)
    spec, cf, resolution = resolve_map(cfg)
    hier = _hierarchy(cfg, spec, cf, args.level)
    part = hier.partition(args.level)
    rows = part.to_rows()
    if cfg.out_format == "csv":
        data = emit_csv(rows, ("generation", "index", "left", "right", "length"))
    else:
        data = emit_json({
            "command": "partition",
            "config": cfg.to_dict(),
            "level": args.level,
            "tiling_residual": part.tiling_residual,
            "atoms": [list(r) for r in rows],
        })
    write_output(data, cfg.out_path)
    return 0


def cmd_bridges(args) -> int:
    cfg = _load_config(args)
    spec, cf, resolution = resolve_map(cfg)
    hier = _hierarchy(cfg, spec, cf, args.level)
    b = bridge_decomposition(hier, args.level)
    write_output(emit_json({
        "command": "bridges",
        "config": cfg.to_dict(),
        **b.to_report(),
    }), cfg.out_path)
    return 0


def _parse_levels(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",")]


def cmd_realbounds(args) -> int:
    cfg = _load_config(args)
    spec, cf, resolution = resolve_map(cfg)
    levels = _parse_levels(args.levels) if args.levels else list(range(2, cfg.depth))
    hier = _hierarchy(cfg, spec, cf, max(levels))
    rep = empirical_M(hier, levels)
    write_output(emit_json({
        "command": "realbounds",
        "config": cfg.to_dict(),
        "map": spec.to_config(),
        **rep.to_report(),
    }), cfg.out_path)
    return 0


def cmd_cover(args) -> int:
    cfg = _load_config(args)
    spec, cf, resolution = resolve_map(cfg)
    hier = _hierarchy(cfg, spec, cf, max(args.level + 1, cfg.depth))
    if args.m_emp is not None:
        m_emp = args.m_emp
    else:
        levels = list(range(2, max(args.level + 1, 5)))
        m_emp = empirical_M(hier, levels, schwarzian_samples=10).M_emp
    bridges = bridge_decomposition(hier, args.level)
    n_crit = len(spec.critical_points())
    flagged = False
    per_gamma = {}
    for gamma in cfg.gammas:
        rep = cover_report(build_cover(bridges, gamma), hier.cf, hier,
                           n_crit, m_emp)
        per_gamma[str(gamma)] = rep.to_report()
        flagged |= any(not c.passed and not c.vacuous for c in rep.checks)
    write_output(emit_json({
        "command": "cover",
        "config": cfg.to_dict(),
        "level": args.level,
        "M_emp": m_emp,
        "covers": per_gamma,
    }), cfg.out_path)
    return 2 if flagged else 0


def cmd_singularity(args) -> int:
    cfg = _load_config(args)
    report, code = pipeline_singularity(cfg, args.eps)
    write_output(emit_json(report), cfg.out_path)
    return code


def cmd_dimension(args) -> int:
    cfg = _load_config(args)
    report, code, rows = pipeline_dimension(cfg)
    if cfg.out_format == "csv":
        write_output(emit_csv(rows, ("sample", "level", "exponent")), cfg.out_path)
    else:
        write_output(emit_json(report), cfg.out_path)
    return code


def cmd_signature(args) -> int:
    cfg = _load_config(args)
    spec, cf, resolution = resolve_map(cfg)
    hier = _hierarchy(cfg, spec, cf)
    sig = signature(hier)
    write_output(emit_json({
        "command": "signature",
        "config": cfg.to_dict(),
        "map": spec.to_config(),
        **sig.to_report(),
    }), cfg.out_path)
    return 0


def cmd_theorem1(args) -> int:
    cfg = _load_config(args)
    report, code = pipeline_theorem1(cfg)
    write_output(emit_json(report), cfg.out_path)
    return code


def cmd_contentsums(args) -> int:
    cfg = _load_config(args)
    report, code = pipeline_content_sums(cfg, args.d, args.cover_gamma,
                                         m_emp=args.m_emp)
    write_output(emit_json(report), cfg.out_path)
    return code


def cmd_validate(args) -> int:
    cfg = _load_config(args)
    if cfg.omega is None:
        raise CircleDimError("validate needs an explicit omega")
    kw = {}
    if cfg.family == "mfold_cubic":
        kw["m"] = int(cfg.params.get("m", 2))
    elif cfg.family == "perturbed_bicritical":
        kw = {k: str(v) for k, v in cfg.params.items() if k in ("u0", "a1", "a2")}
    spec = make_map(cfg.family, cfg.omega, precision_bits=cfg.precision_bits, **kw)
    rep = validate_map(spec)
    write_output(emit_json({
        "command": "validate",
        "config": cfg.to_dict(),
        **rep.to_report(),
    }), cfg.out_path)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="circledim",
        description="Multicritical circle maps: partitions, invariant "
                    "measures, and dimension bounds",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    commands = {
        "rotnum": (cmd_rotnum, False),
        "tune": (cmd_tune, False),
        "partition": (cmd_partition, True),
        "bridges": (cmd_bridges, True),
        "signature": (cmd_signature, False),
        "theorem1": (cmd_theorem1, False),
        "dimension": (cmd_dimension, False),
        "validate": (cmd_validate, False),
    }
    for name, (fn, needs_level) in commands.items():
        p = sub.add_parser(name)
        _common(p, needs_level=needs_level)
        p.set_defaults(fn=fn)

    p = sub.add_parser("realbounds")
    _common(p)
    p.add_argument("--levels", help="level range, e.g. 5..12 or 3,5,7")
    p.set_defaults(fn=cmd_realbounds)

    p = sub.add_parser("cover")
    _common(p, needs_level=True)
    p.add_argument("--m-emp", dest="m_emp", type=float,
                   help="empirical constant to use (else computed)")
    p.set_defaults(fn=cmd_cover)

    p = sub.add_parser("singularity")
    _common(p)
    p.add_argument("--eps", type=float, default=0.05)
    p.set_defaults(fn=cmd_singularity)

    p = sub.add_parser("contentsums")
    _common(p)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--cover-gamma", dest="cover_gamma", type=float, required=True)
    p.add_argument("--m-emp", dest="m_emp", type=float)
    p.set_defaults(fn=cmd_contentsums)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CircleDimError as exc:
        err = {
            "error": type(exc).__name__,
            "message": str(exc),
            "schema_version": "1",
        }
        sys.stdout.write(json.dumps(err, sort_keys=True, indent=2) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
