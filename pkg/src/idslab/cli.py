"""Batch driver: experiment configuration, orchestration, and report emission.

Subcommands: patterns, ids, ssf, weyl, random, verify.  Every run writes
its artifacts plus a manifest under the output directory; reruns with the
same config and seed produce byte-identical data files (the manifest's
timestamp is the single exception).
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    ExperimentConfig,
    build_coloring,
    build_library,
    build_sequence,
    build_window,
    config_to_json,
    load_config,
)
from .ergodic import counting_field, error_bound_counting, two_route_experiment
from .jobs import Scheduler
from .lattice import PeriodicColoring, cube, estimated_frequency_table, exact_frequency_table
from .montecarlo import (
    SiteDistribution,
    compare_random_ids,
    pastur_shubin_mc,
    sample_coloring,
    semigroup_truncation_diagnostic,
)
from .operators import Facet, OperatorSpec, add_facet_dirichlet, discretize, grid_points
from .spectral import eigenvalues
from .ssf import (
    PowerGauge,
    PowerLawGauge,
    fit_decay,
    hs_bound,
    legendre,
    legendre_grid_sup,
    spectral_shift,
    ssf_lp_integral,
    veff_singular_values,
    weyl_check,
    young_check,
)


class NumericalFailure(RuntimeError):
    """A named invariant failed during an experiment run."""


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    return str(obj)


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def write_manifest(out: Path, command: str, cfg: ExperimentConfig, outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config": json.loads(config_to_json(cfg)),
        "outputs": sorted(outputs),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    write_json(out / "manifest.json", manifest)


def _frequency_tables(cfg: ExperimentConfig, coloring, Ms):
    if isinstance(coloring, PeriodicColoring):
        return {M: exact_frequency_table(coloring, M) for M in Ms}
    U = build_sequence(cfg)[-1]
    return {M: estimated_frequency_table(coloring, U, M) for M in Ms}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_patterns(cfg: ExperimentConfig, out: Path) -> int:
    coloring = build_coloring(cfg)
    tables = _frequency_tables(cfg, coloring, cfg.M_list)
    outputs = []
    for M, table in sorted(tables.items()):
        name = f"frequencies_M{M}.json"
        (out / name).write_text(table.to_json() + "\n")
        outputs.append(name)
        total = table.total()
        print(f"M={M}: {len(table.entries)} pattern classes, total frequency {float(total):.6f}"
              + (" (exact)" if table.exact else " (estimated)"))
        if table.exact and total != 1:
            raise NumericalFailure(f"exact frequency table for M={M} does not sum to 1")
    write_manifest(out, "patterns", cfg, outputs)
    return 0


def cmd_ids(cfg: ExperimentConfig, out: Path) -> int:
    coloring = build_coloring(cfg)
    library = build_library(cfg)
    window = build_window(cfg)
    field = counting_field(
        coloring, library, window,
        backend=cfg.backend, resolution=cfg.resolution, matrix_cap=cfg.matrix_cap,
    )
    sequence = build_sequence(cfg)
    tables = _frequency_tables(cfg, coloring, cfg.M_list)
    report = two_route_experiment(field, coloring, sequence, tables)

    outputs = []
    for vol, f in zip(report.volumes, report.direct_normalized):
        name = f"direct_route_j{vol}.csv"
        (out / name).write_text(f.to_csv(window=window, scale=1.0 / vol))
        outputs.append(name)
    for M, f in sorted(report.pattern_route_values.items()):
        name = f"pattern_route_M{M}.csv"
        (out / name).write_text(f.to_csv(window=window))
        outputs.append(name)

    c = cfg.constants
    rows = []
    for row in report.route_distances:
        row = dict(row)
        row["bound_counting_form"] = error_bound_counting(
            M=row["M"], boundary_ratio=row["boundary_ratio"],
            freq_deviation_sum=row["freq_deviation_sum"],
            C=float(c.get("C", 1.0)), c_pd=float(c.get("c_pd", 1.0)),
            T=window.sup, p=window.p, d=cfg.dimension,
        )
        rows.append(row)
        if row["distance"] > row["bound"]:
            raise NumericalFailure(
                f"two-route distance exceeds the fitted error bound at j={row['j']}, M={row['M']}"
            )
    doc = report.to_json_dict()
    doc["route_distances"] = rows
    write_json(out / "ids_report.json", doc)
    outputs.append("ids_report.json")
    print(report.summary_table())
    write_manifest(out, "ids", cfg, outputs)
    return 0


def cmd_ssf(cfg: ExperimentConfig, out: Path) -> int:
    if cfg.backend != "continuum":
        raise ConfigError("config.backend: ssf facet experiments need the continuum backend")
    coloring = build_coloring(cfg)
    library = build_library(cfg)
    window = build_window(cfg)
    d = cfg.dimension
    cells = int(cfg.ssf.get("cells", 8))
    powers = [float(p) for p in cfg.ssf.get("powers", [1, 2, 3])]
    count = int(cfg.ssf.get("count", 60))
    trials = int(cfg.ssf.get("young_trials", 20))

    specA = OperatorSpec(
        Q=cube(cells, d), coloring=coloring, library=library,
        backend="continuum", resolution=cfg.resolution,
    )
    anchor = tuple(cells // 2 if i == 0 else 0 for i in range(d))
    specB = add_facet_dirichlet(specA, Facet(anchor=anchor, axis=0))
    if len(grid_points(specA)) > cfg.dense_cap:
        raise ConfigError(
            f"config.ssf.cells: dense dimension {len(grid_points(specA))} exceeds dense_cap"
        )

    shift = spectral_shift(specA, specB, window)
    if not shift.is_nonnegative():
        raise NumericalFailure("facet spectral shift is not nonnegative")
    series = veff_singular_values(specA, specB, count=count, dense_cap=cfg.dense_cap)
    fit = fit_decay(series, d=d)
    if fit.c_hat <= 0:
        raise NumericalFailure("fitted singular-value decay rate is not positive")
    if not fit.envelope_ok:
        raise NumericalFailure("one-sided singular-value envelope fails")

    bounds = {}
    for p in powers:
        direct = ssf_lp_integral(shift, p)
        bnd = hs_bound(series, PowerGauge(p), T=window.sup)
        bounds[f"p{p:g}"] = {
            "direct_integral": direct,
            "hs_bound": bnd.value,
            "tail_ok": bnd.tail_ok,
            "holds": direct <= bnd.value,
        }
        if direct > bnd.value:
            raise NumericalFailure(f"heat-semigroup bound fails at p={p:g}")

    rng = np.random.default_rng(cfg.seed)
    young_ok = 0
    for _ in range(trials):
        k = int(rng.integers(1, 6))
        bp = np.unique(rng.uniform(window.lo, window.hi, size=k))
        from .spectral import StepFunction

        h = StepFunction(bp, rng.uniform(-2.0, 2.0, size=len(bp) + 1))
        lhs, rhs = young_check(h, shift, PowerLawGauge(q=1.0), series)
        if lhs <= rhs + 1e-9:
            young_ok += 1
    if young_ok != trials:
        raise NumericalFailure("Young-inequality spot checks failed")

    outputs = ["xi.csv", "singular_values.csv", "ssf_report.json"]
    (out / "xi.csv").write_text(shift.xi.to_csv(window=window))
    mu_lines = ["n,mu"] + [f"{i + 1},{float(m)!r}" for i, m in enumerate(series.mu)]
    (out / "singular_values.csv").write_text("\n".join(mu_lines) + "\n")
    from .operators import spec_digest

    write_json(out / "ssf_report.json", {
        "cells": cells,
        "resolution": cfg.resolution,
        "dimension": d,
        "spec_digests": {"full": spec_digest(specA), "restricted": spec_digest(specB)},
        "series_source": series.source,
        "decay_fit": {
            "c_hat": fit.c_hat, "C2_hat": fit.C2_hat, "C2_covered": fit.C2_covered,
            "max_residual": fit.max_residual, "points_used": fit.points_used,
            "envelope_ok": fit.envelope_ok,
        },
        "lp_bounds": bounds,
        "young_trials": {"passed": young_ok, "total": trials},
    })
    print(f"facet experiment: c_hat={fit.c_hat:.4f}, envelope ok, "
          f"{len(bounds)} L^p bounds hold, young {young_ok}/{trials}")
    write_manifest(out, "ssf", cfg, outputs)
    return 0


def cmd_weyl(cfg: ExperimentConfig, out: Path) -> int:
    coloring = build_coloring(cfg)
    library = build_library(cfg)
    window = build_window(cfg)
    delta = float(cfg.constants.get("delta", 0.0))
    C1 = float(cfg.constants.get("C1", 0.0))
    rows = []
    for Q in build_sequence(cfg):
        spec = OperatorSpec(
            Q=Q, coloring=coloring, library=library,
            backend=cfg.backend, resolution=cfg.resolution,
        )
        dim = len(Q) if cfg.backend == "lattice" else len(grid_points(spec))
        if dim > cfg.matrix_cap:
            raise ConfigError(f"config.sequence: matrix dimension {dim} exceeds matrix_cap")
        eigs = eigenvalues(discretize(spec), ceiling=window.sup)
        margin = weyl_check(eigs, volume=float(len(Q)), delta=delta, C1=C1, d=cfg.dimension)
        rows.append({
            "volume": len(Q),
            "eigenvalues_below_T": int(len(eigs)),
            "margin": margin,
        })
        print(f"#Q={len(Q)}: {len(eigs)} eigenvalues <= {window.sup}, margin {margin:.4f}")
    write_json(out / "weyl_report.json", {
        "delta": delta, "C1": C1, "T": window.sup, "rows": rows,
    })
    write_manifest(out, "weyl", cfg, ["weyl_report.json"])
    return 0


def cmd_random(cfg: ExperimentConfig, out: Path) -> int:
    library = build_library(cfg)
    window = build_window(cfg)
    rnd = cfg.random
    weights = {str(k): float(v) for k, v in rnd.get("weights", {"a": 0.5, "b": 0.5}).items()}
    symbols = tuple(sorted(weights))
    dist = SiteDistribution(symbols=symbols, weights=tuple(weights[s] for s in symbols), seed=cfg.seed)
    samples = int(rnd.get("samples", 200))
    R = int(rnd.get("truncation_radius", 32))
    npts = int(rnd.get("lambda_points", 201))
    grid = np.linspace(window.lo, window.hi, npts)
    scheduler = Scheduler(jobs=cfg.jobs)

    estimate = pastur_shubin_mc(
        dist, library, grid, samples=samples, truncation_radius=R,
        d=cfg.dimension, backend=cfg.backend, resolution=cfg.resolution,
        scheduler=scheduler,
    )
    if np.any(np.diff(estimate.mean) < -1e-12):
        raise NumericalFailure("Monte Carlo mean is not nondecreasing")
    (out / "mc_estimate.csv").write_text(estimate.to_csv())

    twin = SiteDistribution(symbols=symbols, weights=dist.weights, seed=cfg.seed + 1)
    estimate2 = pastur_shubin_mc(
        dist=twin, library=library, lambda_grid=grid, samples=samples,
        truncation_radius=R, d=cfg.dimension, backend=cfg.backend,
        resolution=cfg.resolution, scheduler=scheduler,
    )
    combined = np.sqrt(estimate.stderr**2 + estimate2.stderr**2)
    seed_dev = np.abs(estimate.mean - estimate2.mean)
    seeds_agree = bool(np.all(seed_dev <= 3 * np.maximum(combined, 1e-12)))

    omegas = [int(o) for o in rnd.get("omegas", [40, 41, 42, 43, 44])]
    volumes = [int(v) for v in rnd.get("compare_volumes", [32, 256])]
    comparison = compare_random_ids(
        dist, library, window, estimate, volumes=volumes, omegas=omegas,
        d=cfg.dimension, backend=cfg.backend, resolution=cfg.resolution,
        matrix_cap=cfg.matrix_cap,
    )

    point = SiteDistribution.point_mass(symbols[0], seed=cfg.seed)
    pm_coloring = sample_coloring(point, 0, cfg.dimension)
    sg_diag = semigroup_truncation_diagnostic(
        pm_coloring, library, R=R, d=cfg.dimension,
        backend=cfg.backend, resolution=cfg.resolution,
    )
    pm1 = pastur_shubin_mc(point, library, grid, samples=1, truncation_radius=R,
                           d=cfg.dimension, backend=cfg.backend, resolution=cfg.resolution)
    pm2 = pastur_shubin_mc(point, library, grid, samples=1, truncation_radius=2 * R,
                           d=cfg.dimension, backend=cfg.backend, resolution=cfg.resolution)
    projector_change = float(np.max(np.abs(pm1.mean - pm2.mean)))

    write_json(out / "random_report.json", {
        "samples": samples,
        "truncation_radius": R,
        "two_seed_agreement": {
            "agree_within_3se": seeds_agree,
            "max_abs_difference": float(np.max(seed_dev)),
        },
        "per_omega_distances": {
            "omegas": list(comparison.omegas),
            "volumes": list(comparison.volumes),
            "distances": comparison.distances,
            "decreased": comparison.decreased(),
        },
        "truncation": {
            "semigroup_diagnostic": sg_diag,
            "projector_estimate_change_on_R_doubling": projector_change,
        },
    })
    print(f"MC: S={samples}, R={R}; two-seed agreement: {seeds_agree}; "
          f"per-omega decrease: {comparison.decreased()}; "
          f"semigroup truncation diagnostic: {sg_diag:.3e}")
    if not seeds_agree:
        raise NumericalFailure("independent-seed Monte Carlo estimates disagree beyond 3 se")
    write_manifest(out, "random", cfg, ["mc_estimate.csv", "random_report.json"])
    return 0


def cmd_verify(cfg: ExperimentConfig, out: Path) -> int:
    from .acceptance import run_all

    results = run_all(out_dir=out, jobs=cfg.jobs)
    width = max(len(r.name) for r in results)
    print(f"{'criterion':<{width}}  status  seconds")
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        if not r.passed:
            failed += 1
        print(f"{r.name:<{width}}  {status:<6}  {r.runtime_seconds:7.1f}")
    # wall-clock numbers stay on stdout so the report reruns byte-identically
    write_json(out / "acceptance_report.json", [
        {"index": r.index, "name": r.name, "passed": r.passed, "details": r.details}
        for r in results
    ])
    write_manifest(out, "verify", cfg, ["acceptance_report.json"])
    print(f"{len(results) - failed}/{len(results)} criteria passed")
    return 0 if failed == 0 else 1


COMMANDS = {
    "patterns": cmd_patterns,
    "ids": cmd_ids,
    "ssf": cmd_ssf,
    "weyl": cmd_weyl,
    "random": cmd_random,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idslab",
        description="Finite-volume approximation laboratory for integrated densities of states",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=str, default=None, help="JSON config path")
    parser.add_argument("--out", type=str, default=None, help="output directory")
    parser.add_argument("--jobs", type=int, default=None, help="parallel jobs")
    parser.add_argument("--seed", type=int, default=None, help="seed override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.jobs is not None:
            if args.jobs < 1:
                raise ConfigError("--jobs: must be >= 1")
            cfg.jobs = args.jobs
        if args.seed is not None:
            cfg.seed = args.seed
        out = Path(args.out) if args.out else Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except NumericalFailure as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
