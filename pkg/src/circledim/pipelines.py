"""End-to-end analysis pipelines behind the CLI.

Exit-code contract: 0 when every hard invariant passes and nothing was
soft-flagged, 2 when a soft check was flagged (reported, not fatal), 1 on
any module error (the CLI converts exceptions to structured error JSON).
"""

from __future__ import annotations

import mpmath

from .bounds import empirical_M
from .cf import ContinuedFraction, convergents, diophantine_profile, theorem1_bounds
from .errors import CircleDimError, InvalidInputError
from .maps import MapSpec, make_map, validate_map
from .measure import (
    build_cover,
    cover_report,
    hausdorff_content_sum,
    local_dimension_samples,
    signature,
    singularity_certificate,
)
from .partition import PartitionHierarchy, bridge_decomposition, refine_check
from .reports import RunConfig
from .rotation import closest_return_quotients, tune_parameter
from .surd import QuadraticIrrational


def target_cf_from_config(cfg: RunConfig) -> ContinuedFraction:
    word = cfg.target_cf
    if cfg.target_periodic:
        alpha = QuadraticIrrational.from_periodic_cf(word)
        quots = (word * (cfg.depth // len(word) + 2))[:max(cfg.depth + 1, len(word))]
        return ContinuedFraction(quots, alpha=alpha, alpha_is_exact=True,
                                 continuation_word=word)
    return ContinuedFraction(word)


def resolve_map(cfg: RunConfig) -> tuple[MapSpec, ContinuedFraction, dict]:
    """Build the MapSpec from the config, tuning when a target is given.

    Returns (spec, cf, resolution-report).  The cf carries the canonical
    exact rotation-number value used for all measure bookkeeping; when the
    map came from a plain omega the quotients are extracted from the orbit
    and the canonical extension of that prefix is adopted.
    """
    kw = {}
    if cfg.family == "mfold_cubic":
        kw["m"] = int(cfg.params.get("m", 2))
    elif cfg.family == "perturbed_bicritical":
        if "u0" in cfg.params:
            kw["u0"] = str(cfg.params["u0"])
        else:
            kw["a1"] = str(cfg.params.get("a1", 0))
            kw["a2"] = str(cfg.params.get("a2", 0))
    if cfg.omega is not None:
        spec = make_map(cfg.family, cfg.omega, precision_bits=cfg.precision_bits, **kw)
        reading = closest_return_quotients(spec, 0, cfg.depth + 1)
        if reading.rational_lock is not None:
            raise InvalidInputError(
                f"rotation number locked to {reading.rational_lock}; the "
                f"analysis needs an irrational rotation number"
            )
        reading.tested_depth = cfg.depth + 1
        cf = ContinuedFraction(reading.quotients_observed)
        return spec, cf, {"mode": "direct", "reading": reading.to_report()}
    proto = make_map(cfg.family, "0.5", precision_bits=cfg.precision_bits, **kw)
    target = target_cf_from_config(cfg)
    spec, reading = tune_parameter(proto, target, cfg.depth,
                                   orbit_cap=cfg.orbit_cap)
    return spec, target, {"mode": "tuned", "reading": reading.to_report()}


def _hierarchy(cfg: RunConfig, spec: MapSpec, cf: ContinuedFraction,
               depth: int | None = None,
               resolution: dict | None = None) -> PartitionHierarchy:
    depth = depth or cfg.depth
    ext = cf.extended(cfg.orbit_cap)
    if ext.depth < depth + 1:
        raise InvalidInputError(
            f"orbit cap {cfg.orbit_cap} leaves cf depth {ext.depth}; "
            f"level-{depth} analysis needs depth {depth + 1}"
        )
    if resolution is not None:
        tested = resolution.get("reading", {}).get("tested_depth", 0)
        if tested and depth + 1 > tested:
            raise InvalidInputError(
                f"rotation number is pinned through depth {tested} only; "
                f"level-{depth} analysis needs depth {depth + 1} (raise "
                f"orbit_cap or lower the analysis depth)"
            )
    return PartitionHierarchy(spec, ext, depth)


def pipeline_theorem1(cfg: RunConfig) -> tuple[dict, int]:
    """Tune, partition, verify the real bounds, check the covers, estimate
    the dimension, and juxtapose it with the arithmetic bounds."""
    spec, cf, resolution = resolve_map(cfg)
    depth = cfg.depth
    hier = _hierarchy(cfg, spec, cf, depth, resolution)
    flags: list[str] = []

    tiling = {}
    refinements = []
    for n in range(1, depth + 1):
        part = hier.partition(n)
        tiling[n] = part.tiling_residual
    for n in range(1, depth):
        refinements.append(refine_check(hier.partition(n),
                                        hier.partition(n + 1)).to_report())

    bound_levels = list(range(2, depth))
    real_bounds = empirical_M(hier, bound_levels,
                              schwarzian_samples=min(50, cfg.samples))
    m_emp = real_bounds.M_emp
    for n, slack in real_bounds.item5.items():
        if slack < 0:
            flags.append(f"item5 slack negative at level {n}")

    n_crit = len(spec.critical_points())
    covers = {}
    for gamma in cfg.gammas:
        per_level = {}
        for n in range(2, depth):
            bridges = bridge_decomposition(hier, n)
            rep = cover_report(build_cover(bridges, gamma), hier.cf, hier,
                               n_crit, m_emp)
            per_level[n] = rep.to_report()
            for chk in rep.checks:
                if not chk.passed and not chk.vacuous:
                    flags.append(
                        f"cover inequality {chk.name} failed at level {n}, "
                        f"gamma {gamma}"
                    )
            if not rep.two_way_exact:
                raise CircleDimError("two-way cover measure mismatch")
        covers[str(gamma)] = per_level

    est = local_dimension_samples(hier, depth, samples=cfg.samples, seed=cfg.seed)
    profile = diophantine_profile(hier.cf, cfg.tau)
    lower, upper = theorem1_bounds(cfg.tau, profile.nu1, profile.nu2, m_emp)
    if est.low_confidence:
        flags.append("dimension estimate has fewer than 4 usable levels")
    if est.estimate <= lower:
        flags.append("dimension estimate does not exceed the lower bound")
    if cfg.tau > 0 and est.estimate > upper + 0.1:
        flags.append(
            "dimension estimate exceeds the upper bound by more than 0.1 "
            "(finite-depth caveat: deeper levels refine the estimate)"
        )

    report = {
        "command": "theorem1",
        "config": cfg.to_dict(),
        "map": spec.to_config(),
        "resolution": resolution,
        "cf": hier.cf.to_report(cfg.precision_bits),
        "profile": profile.to_report(),
        "tiling_residuals": {str(k): v for k, v in tiling.items()},
        "refinements": refinements,
        "real_bounds": real_bounds.to_report(),
        "covers": covers,
        "dimension": est.to_report(),
        "bounds": {
            "tau": cfg.tau,
            "nu1": profile.nu1,
            "nu2": profile.nu2,
            "M_emp": m_emp,
            "lower": lower,
            "upper": upper,
            "estimate": est.estimate,
        },
        "flags": sorted(flags),
    }
    return report, (2 if flags else 0)


def pipeline_singularity(cfg: RunConfig, eps: float) -> tuple[dict, int]:
    spec, cf, resolution = resolve_map(cfg)
    hier = _hierarchy(cfg, spec, cf, resolution=resolution)
    result = singularity_certificate(hier, eps)
    report = {
        "command": "singularity",
        "config": cfg.to_dict(),
        "map": spec.to_config(),
        "resolution": resolution,
        "result": result.to_report(),
    }
    return report, 0


def pipeline_dimension(cfg: RunConfig) -> tuple[dict, int, list]:
    spec, cf, resolution = resolve_map(cfg)
    hier = _hierarchy(cfg, spec, cf, resolution=resolution)
    est = local_dimension_samples(hier, cfg.depth, samples=cfg.samples,
                                  seed=cfg.seed)
    rows = []
    for s_idx, row in enumerate(est.sample_exponents):
        for level, exponent in enumerate(row, start=1):
            rows.append((s_idx, level, repr(exponent)))
    report = {
        "command": "dimension",
        "config": cfg.to_dict(),
        "map": spec.to_config(),
        "resolution": resolution,
        "dimension": est.to_report(),
    }
    return report, (2 if est.low_confidence else 0), rows


def pipeline_content_sums(cfg: RunConfig, d: float, gamma: float,
                          m_emp: float | None = None) -> tuple[dict, int]:
    """Cover tail sums along the levels passing a_{n+1} >= q_n^tau."""
    spec, cf, resolution = resolve_map(cfg)
    hier = _hierarchy(cfg, spec, cf, resolution=resolution)
    cfx = hier.cf
    levels = [n for n in range(1, cfg.depth)
              if cfx.a(n + 1) >= float(cfx.q(n)) ** cfg.tau]
    if m_emp is None:
        bound_levels = list(range(2, cfg.depth))
        m_emp = empirical_M(hier, bound_levels, schwarzian_samples=10).M_emp
    rep = hausdorff_content_sum(hier, levels, gamma, d, cfg.tau,
                                len(spec.critical_points()), m_emp)
    flags = ["majorant divergent (exponent >= 0)"] if rep.majorant_divergent else []
    report = {
        "command": "content_sums",
        "config": cfg.to_dict(),
        "map": spec.to_config(),
        "resolution": resolution,
        "content_sums": rep.to_report(),
        "M_emp": m_emp,
        "flags": flags,
    }
    return report, (2 if flags else 0)
