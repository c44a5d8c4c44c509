"""The acceptance suite: one callable per criterion, consolidated runner.

Each criterion is a pure function returning a CriterionResult whose details
are fully deterministic (fixed seeds, exact arithmetic where the checks are
exact), so `verify` reruns emit byte-identical reports.  Wall-clock numbers
are printed but never serialized.
"""

from __future__ import annotations

import math
import random
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path

import numpy as np

from .ergodic import additivity_defect, counting_field, two_route_experiment
from .jobs import Scheduler
from .lattice import (
    Pattern,
    PeriodicColoring,
    RandomColoring,
    boundary,
    bounding_box,
    cube,
    cube_sequence,
    enumerate_window_patterns,
    exact_frequency_table,
    occurrences,
    periodic_word,
    site_set,
)
from .montecarlo import (
    SiteDistribution,
    compare_random_ids,
    pastur_shubin_mc,
    sample_coloring,
    semigroup_truncation_diagnostic,
)
from .operators import (
    Facet,
    OperatorSpec,
    PrototypeLibrary,
    add_facet_dirichlet,
    discretize,
)
from .spectral import EnergyWindow, StepFunction, eigenvalues
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

MASTER_SEED = 20260810


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    runtime_seconds: float = 0.0


# ---------------------------------------------------------------------------
# independent brute-force oracles (criterion 1)
# ---------------------------------------------------------------------------

def _oracle_occurrences(P: Pattern, Pp: Pattern) -> int:
    """Scan every translate inside an enlarged bounding window."""
    loP, hiP = bounding_box(P.domain)
    loQ, hiQ = bounding_box(Pp.domain)
    d = len(loP)
    table = dict(zip(Pp.sites, Pp.symbols))
    count = 0
    for x in product(*(range(loQ[i] - hiP[i] - 1, hiQ[i] - loP[i] + 2) for i in range(d))):
        match = True
        for s, sym in zip(P.sites, P.symbols):
            if table.get(tuple(si + xi for si, xi in zip(s, x))) != sym:
                match = False
                break
        if match:
            count += 1
    return count


def _oracle_window_tally(C, U, M) -> dict[tuple, int]:
    """Window-pattern tally built from scratch: explicit min-corner shifting."""
    d = len(next(iter(U)))
    lo, hi = bounding_box(U)
    tally: dict[tuple, int] = {}
    for x in product(*(range(lo[i] - 1, hi[i] + 2) for i in range(d))):
        cells = list(product(*(range(x[i], x[i] + M) for i in range(d))))
        if all(tuple(c) in U for c in cells):
            key = tuple(sorted(
                (tuple(ci - xi for ci, xi in zip(c, x)), C.color(tuple(c)))
                for c in cells
            ))
            tally[key] = tally.get(key, 0) + 1
    return tally


def _tally_to_oracle_key(tally) -> dict[tuple, int]:
    out = {}
    for P, k in tally.items():
        c = P.canonical()
        out[tuple(zip(c.sites, c.symbols))] = k
    return out


def _random_coloring_for(rng: random.Random, d: int):
    roll = rng.randrange(3)
    if roll == 0:
        return RandomColoring(
            seed=rng.getrandbits(48), symbols=("a", "b"), weights=(0.5, 0.5), dim=d
        )
    if roll == 1:
        return RandomColoring(
            seed=rng.getrandbits(48), symbols=("a", "b", "c"),
            weights=(0.25, 0.25, 0.5), dim=d,
        )
    if d == 1:
        return periodic_word(rng.choice(["ab", "aab", "abc", "abca"]))
    period = (rng.choice([2, 3]), rng.choice([2, 3]))
    syms = ["a", "b", "c"]
    cell = {
        s: syms[rng.randrange(3)]
        for s in product(range(period[0]), range(period[1]))
    }
    return PeriodicColoring(period=period, cell=cell)


def criterion_1_pattern_oracles(instances: int = 200) -> CriterionResult:
    t0 = time.perf_counter()
    rng = random.Random(MASTER_SEED)
    mismatches = 0
    for k in range(instances):
        d = 1 + (k % 2)
        C = _random_coloring_for(rng, d)
        side = rng.randint(3, 18 if d == 2 else 120)
        box = list(product(*(range(side) for _ in range(d))))
        size = rng.randint(2, min(400, len(box)))
        Q = frozenset(rng.sample(box, size))
        M = rng.randint(1, 3)
        got = _tally_to_oracle_key(enumerate_window_patterns(C, Q, M))
        want = _oracle_window_tally(C, Q, M)
        if got != want:
            mismatches += 1
        small = frozenset(rng.sample(sorted(Q), min(len(Q), rng.randint(1, 5))))
        P = C.restrict(small)
        Pp = C.restrict(Q)
        if occurrences(P, Pp) != _oracle_occurrences(P, Pp):
            mismatches += 1
    dt = time.perf_counter() - t0
    return CriterionResult(
        index=1,
        name="pattern oracle equivalence",
        passed=mismatches == 0 and dt < 10.0,
        details={"instances": instances, "mismatches": mismatches},
        runtime_seconds=dt,
    )


# ---------------------------------------------------------------------------
# criterion 2: frequency exactness and convergence rate
# ---------------------------------------------------------------------------

def _acceptance_colorings():
    return {
        "word-ab": periodic_word("ab"),
        "word-aab": periodic_word("aab"),
        "word-abca": periodic_word("abca"),
        "checker-2x2": PeriodicColoring(
            period=(2, 2), cell={(0, 0): "a", (1, 0): "b", (0, 1): "b", (1, 1): "a"}
        ),
        "stripes-3x2": PeriodicColoring(
            period=(3, 2), cell={
                (0, 0): "a", (1, 0): "b", (2, 0): "a",
                (0, 1): "b", (1, 1): "a", (2, 1): "b",
            }
        ),
    }


def fit_frequency_rate_constant(
    deficit_at_fit: Fraction, per_period: Fraction, boundary_at_fit: int, d: int, fit_side: int
) -> Fraction:
    """K_P from the fit volume: doubled count deficit plus a one-period
    occurrence allowance for window-phase oscillation (scaled by the fit
    side in d=2 where the straddle count grows with the perimeter)."""
    allowance = per_period * (1 if d == 1 else fit_side)
    return Fraction(2) * (deficit_at_fit + allowance) / boundary_at_fit


def criterion_2_frequencies() -> CriterionResult:
    t0 = time.perf_counter()
    fit_j = 8
    sums_exact = True
    violations = 0
    checked = 0
    for name, C in _acceptance_colorings().items():
        d = C.dimension
        js = list(range(8, 65)) if d == 1 else [8, 9, 12, 13, 16, 17, 24, 25, 32, 33, 48, 49, 63, 64]
        for M in (1, 2, 3):
            table = exact_frequency_table(C, M)
            if table.total() != 1:
                sums_exact = False
            tallies = {j: enumerate_window_patterns(C, cube(j, d), M) for j in js}
            bounds_count = {j: len(boundary(cube(j, d), M)) for j in js}
            for P, nu in table.entries.items():
                def deficit(j):
                    occ = tallies[j].get(P.canonical(), 0)
                    return abs(Fraction(occ) - nu * Fraction(j**d))

                K_P = fit_frequency_rate_constant(
                    deficit(fit_j), nu * C.cell_volume, bounds_count[fit_j], d, fit_j
                )
                for j in js:
                    checked += 1
                    if deficit(j) / Fraction(j**d) > K_P * Fraction(bounds_count[j], j**d):
                        violations += 1
    dt = time.perf_counter() - t0
    return CriterionResult(
        index=2,
        name="frequency exactness and rate",
        passed=sums_exact and violations == 0 and dt < 30.0,
        details={
            "colorings": 5, "checked_rate_instances": checked,
            "rate_violations": violations, "exact_sums_equal_one": sums_exact,
        },
        runtime_seconds=dt,
    )


# ---------------------------------------------------------------------------
# criterion 3: Weyl-law sanity in d=1
# ---------------------------------------------------------------------------

def criterion_3_weyl() -> CriterionResult:
    t0 = time.perf_counter()
    L, n = 64, 16
    T = math.pi**2
    lib = PrototypeLibrary.zero(["a"], n, 1)
    spec = OperatorSpec(
        Q=cube(L, 1), coloring=periodic_word("a"), library=lib,
        backend="continuum", resolution=n,
    )
    eigs = eigenvalues(discretize(spec), ceiling=T)
    dev = abs(len(eigs) / L - math.sqrt(T) / math.pi)
    for k, E in enumerate(eigs):
        smooth = math.sqrt(E) / math.pi
        dev = max(dev, abs(k / L - smooth), abs((k + 1) / L - smooth))
    margin = weyl_check(eigs, volume=float(L), delta=0.0, C1=0.0, d=1)
    dt = time.perf_counter() - t0
    return CriterionResult(
        index=3,
        name="Weyl-law sanity (d=1)",
        passed=dev < 0.05 and margin >= 0.0 and dt < 60.0,
        details={"sup_deviation": dev, "weyl_margin": margin,
                 "eigenvalues_below_T": int(len(eigs))},
        runtime_seconds=dt,
    )


# ---------------------------------------------------------------------------
# criterion 4: almost-additivity on 30 partitions
# ---------------------------------------------------------------------------

def _bipartition_1d(L, cut):
    return [frozenset((i,) for i in range(cut)), frozenset((i,) for i in range(cut, L))]


def _blocks_1d(L, w):
    return [frozenset((i,) for i in range(s, min(s + w, L))) for s in range(0, L, w)]


def _partition_suite():
    lib1 = PrototypeLibrary.constant_potentials({"a": 0.0, "b": 1.0}, 8, 1)
    f_lat1 = counting_field(
        periodic_word("ab"), lib1, EnergyWindow(0.0, 4.5, 2.0), backend="lattice"
    )
    suite = []
    for cut in (2, 4, 8, 12, 14):
        suite.append((f_lat1, _bipartition_1d(16, cut)))
    # random disjoint unions (seeded): shuffled split of C_16 and a random
    # subset of a larger box split in two
    rng = random.Random(MASTER_SEED)
    shuffled = sorted(cube(16, 1))
    rng.shuffle(shuffled)
    suite.append((f_lat1, [
        frozenset(shuffled[:5]), frozenset(shuffled[5:11]), frozenset(shuffled[11:]),
    ]))
    scattered = rng.sample(sorted(cube(20, 1)), 12)
    suite.append((f_lat1, [frozenset(scattered[:6]), frozenset(scattered[6:])]))
    suite.append((f_lat1, _blocks_1d(16, 1)))
    suite.append((f_lat1, _blocks_1d(16, 2)))
    suite.append((f_lat1, _blocks_1d(16, 4)))
    suite.append((f_lat1, [
        site_set([(i,) for i in range(6)]),
        site_set([(i,) for i in range(6, 11)]),
        site_set([(i,) for i in range(11, 16)]),
    ]))
    suite.append((f_lat1, [
        frozenset((i,) for i in range(0, 16, 2)),
        frozenset((i,) for i in range(1, 16, 2)),
    ]))

    chk = PeriodicColoring(
        period=(2, 2), cell={(0, 0): "a", (1, 0): "b", (0, 1): "b", (1, 1): "a"}
    )
    lib2 = PrototypeLibrary.constant_potentials({"a": 0.0, "b": 1.0}, 4, 2)
    f_lat2 = counting_field(chk, lib2, EnergyWindow(0.0, 9.0, 2.0), backend="lattice")
    Q4 = cube(4, 2)
    suite.append((f_lat2, [frozenset({s}) for s in sorted(Q4)]))
    suite.append((f_lat2, [frozenset(s for s in Q4 if s[0] < 2),
                           frozenset(s for s in Q4 if s[0] >= 2)]))
    suite.append((f_lat2, [frozenset(s for s in Q4 if s[1] < 2),
                           frozenset(s for s in Q4 if s[1] >= 2)]))
    suite.append((f_lat2, [
        frozenset(s for s in Q4 if (s[0] < 2) == a and (s[1] < 2) == b)
        for a in (True, False) for b in (True, False)
    ]))
    suite.append((f_lat2, [frozenset(s for s in Q4 if s[1] == r) for r in range(4)]))
    suite.append((f_lat2, [frozenset(s for s in Q4 if s[0] == c) for c in range(4)]))
    suite.append((f_lat2, [
        frozenset(s for s in Q4 if (s[0] // 2, s[1] // 2) == (a, b))
        for a in (0, 1) for b in (0, 1)
    ]))
    suite.append((f_lat2, [
        frozenset(s for s in Q4 if (s[0] + s[1]) % 2 == 0),
        frozenset(s for s in Q4 if (s[0] + s[1]) % 2 == 1),
    ]))

    f_con1 = counting_field(
        periodic_word("ab"), lib1, EnergyWindow(0.0, 10.0, 2.0),
        backend="continuum", resolution=8,
    )
    suite.append((f_con1, _bipartition_1d(8, 4)))
    suite.append((f_con1, _bipartition_1d(8, 2)))
    suite.append((f_con1, _blocks_1d(8, 1)))
    suite.append((f_con1, _blocks_1d(8, 2)))
    suite.append((f_con1, [site_set([(0,), (1,), (2,)]),
                           site_set([(i,) for i in range(3, 8)])]))

    const2 = PeriodicColoring(period=(1, 1), cell={(0, 0): "a"})
    lib2c = PrototypeLibrary.constant_potentials({"a": 0.0}, 6, 2)
    f_con2 = counting_field(
        const2, lib2c, EnergyWindow(0.0, 60.0, 2.0), backend="continuum", resolution=6
    )
    Q3 = cube(3, 2)
    suite.append((f_con2, [frozenset({s}) for s in sorted(Q3)]))
    suite.append((f_con2, [frozenset(s for s in Q3 if s[0] == c) for c in range(3)]))
    suite.append((f_con2, [frozenset(s for s in Q3 if s[1] == r) for r in range(3)]))
    suite.append((f_con2, [frozenset({(1, 1)}), frozenset(s for s in Q3 if s != (1, 1))]))
    suite.append((f_con2, [frozenset(s for s in Q3 if s[0] < 1),
                           frozenset(s for s in Q3 if s[0] >= 1)]))
    return suite


def criterion_4_almost_additivity() -> CriterionResult:
    t0 = time.perf_counter()
    suite = _partition_suite()
    violations = 0
    min_ratio = math.inf
    for fld, parts in suite:
        defect, budget = additivity_defect(fld, parts)
        if defect > budget:
            violations += 1
        min_ratio = min(min_ratio, budget / defect if defect > 0 else math.inf)
    dt = time.perf_counter() - t0
    return CriterionResult(
        index=4,
        name="almost-additivity defect vs budget",
        passed=violations == 0 and len(suite) == 30 and dt < 300.0,
        details={"partitions": len(suite), "violations": violations,
                 "min_budget_over_defect": min_ratio},
        runtime_seconds=dt,
    )


# ---------------------------------------------------------------------------
# criteria 5 and 6: singular-value decay and Legendre/HS bounds
# ---------------------------------------------------------------------------

def _facet_experiments():
    chk = PeriodicColoring(
        period=(2, 2), cell={(0, 0): "a", (1, 0): "b", (0, 1): "b", (1, 1): "a"}
    )
    const = lambda d: PeriodicColoring(period=(1,) * d, cell={(0,) * d: "a"})
    plans = [
        ("d1-zero-8c-n8", 1, const(1), {"a": 0.0}, 8, 8, (4,), EnergyWindow(0.0, 10.0, 2.0)),
        ("d1-alloy-8c-n8", 1, periodic_word("ab"), {"a": 0.0, "b": 1.0}, 8, 8, (4,), EnergyWindow(0.0, 10.0, 2.0)),
        ("d1-zero-16c-n16", 1, const(1), {"a": 0.0}, 16, 16, (8,), EnergyWindow(0.0, 10.0, 2.0)),
        ("d2-zero-3c-n8", 2, const(2), {"a": 0.0}, 3, 8, (1, 0), EnergyWindow(0.0, 60.0, 2.0)),
        ("d2-checker-3c-n8", 2, chk, {"a": 0.0, "b": 1.0}, 3, 8, (1, 0), EnergyWindow(0.0, 60.0, 2.0)),
        ("d2-zero-4c-n6", 2, const(2), {"a": 0.0}, 4, 6, (2, 0), EnergyWindow(0.0, 60.0, 2.0)),
    ]
    for name, d, C, vals, cells, n, anchor, window in plans:
        lib = PrototypeLibrary.constant_potentials(vals, n, d)
        specA = OperatorSpec(
            Q=cube(cells, d), coloring=C, library=lib,
            backend="continuum", resolution=n,
        )
        specB = add_facet_dirichlet(specA, Facet(anchor=anchor, axis=0))
        yield name, d, specA, specB, window


def criterion_5_singular_value_decay() -> CriterionResult:
    t0 = time.perf_counter()
    rows = []
    ok = True
    for name, d, specA, specB, _window in _facet_experiments():
        series = veff_singular_values(specA, specB, dense_cap=3000)
        fit = fit_decay(series, d=d)
        good = fit.c_hat > 0 and fit.envelope_ok
        ok = ok and good
        rows.append({
            "experiment": name, "dimension": d,
            "points_above_floor": fit.points_used,
            "c_hat": fit.c_hat, "C2_covered": fit.C2_covered,
            "envelope_ok": fit.envelope_ok,
        })
    dt = time.perf_counter() - t0
    return CriterionResult(
        index=5,
        name="singular-value decay of facet heat differences",
        passed=ok and dt < 600.0,
        details={"experiments": rows},
        runtime_seconds=dt,
    )


def criterion_6_legendre_bounds() -> CriterionResult:
    t0 = time.perf_counter()
    all_hold = True
    young_failures = 0
    pair_rows = []
    rng = np.random.default_rng(MASTER_SEED)
    for name, d, specA, specB, window in _facet_experiments():
        series = veff_singular_values(specA, specB, dense_cap=3000)
        shift = spectral_shift(specA, specB, window)
        row = {"experiment": name}
        for p in (1.0, 2.0, 3.0):
            direct = ssf_lp_integral(shift, p)
            bound = hs_bound(series, PowerGauge(p), T=window.sup).value
            row[f"p{p:g}"] = {"direct": direct, "bound": bound}
            if direct > bound:
                all_hold = False
        for _ in range(100):
            k = int(rng.integers(1, 6))
            bp = np.unique(rng.uniform(window.lo, window.hi, size=k))
            h = StepFunction(bp, rng.uniform(-2.0, 2.0, size=len(bp) + 1))
            lhs, rhs = young_check(h, shift, PowerLawGauge(q=1.0), series)
            if lhs > rhs + 1e-9:
                young_failures += 1
        pair_rows.append(row)
    legendre_dev = 0.0
    for q in (0.5, 1.0, 2.0):
        G = legendre(PowerLawGauge(q=q))
        for y in (0.25, 1.0, 2.0, 3.5):
            oracle = legendre_grid_sup(PowerLawGauge(q=q), y, x_max=8.0, samples=2_000_001)
            legendre_dev = max(legendre_dev, abs(float(G(y)) - oracle))
    dt = time.perf_counter() - t0
    return CriterionResult(
        index=6,
        name="Legendre/Young spectral-shift bounds",
        passed=all_hold and young_failures == 0 and legendre_dev < 1e-6 and dt < 120.0,
        details={
            "pairs": pair_rows, "young_failures": young_failures,
            "legendre_closed_form_vs_grid_sup": legendre_dev,
        },
        runtime_seconds=dt,
    )


# ---------------------------------------------------------------------------
# criterion 7: two-route consistency
# ---------------------------------------------------------------------------

def criterion_7_two_routes() -> CriterionResult:
    t0 = time.perf_counter()
    window = EnergyWindow(0.0, 4.5, p=2.0)
    coloring = periodic_word("ab")
    # deep binary alloy: the b-sublattice band sits far above the window
    lib = PrototypeLibrary.constant_potentials({"a": 0.0, "b": 10.0}, 8, 1)
    fld = counting_field(coloring, lib, window, backend="lattice")
    tables = {M: exact_frequency_table(coloring, M) for M in range(1, 7)}
    sequence = cube_sequence([8, 16, 32, 64, 128, 256], 1)
    report = two_route_experiment(fld, coloring, sequence, tables)
    bound_violations = sum(
        1 for row in report.route_distances if row["distance"] > row["bound"]
    )
    final = [
        row["distance"] for row in report.route_distances
        if row["j"] == 256 and row["M"] == 6
    ][0]
    dt = time.perf_counter() - t0
    return CriterionResult(
        index=7,
        name="two-route consistency with error bound",
        passed=bound_violations == 0 and final < 0.05 and dt < 300.0,
        details={
            "pairs_checked": len(report.route_distances),
            "bound_violations": bound_violations,
            "distance_j256_M6": final,
            "fitted_K": report.fitted_K,
            "fitted_D": report.fitted_D,
        },
        runtime_seconds=dt,
    )


# ---------------------------------------------------------------------------
# criterion 8: random IDS
# ---------------------------------------------------------------------------

def criterion_8_random(jobs: int = 1) -> CriterionResult:
    t0 = time.perf_counter()
    window = EnergyWindow(0.0, 5.0, p=2.0)
    lib = PrototypeLibrary.constant_potentials({"a": 0.0, "b": 1.0}, 4, 1)
    grid = np.linspace(0.0, 5.0, 201)
    scheduler = Scheduler(jobs=jobs)

    # point mass reproduces the deterministic pipeline exactly
    point = SiteDistribution.point_mass("a", seed=MASTER_SEED)
    pm_multi = pastur_shubin_mc(point, lib, grid, samples=4, truncation_radius=8, d=1)
    pm_single = pastur_shubin_mc(point, lib, grid, samples=1, truncation_radius=8, d=1)
    point_exact = bool(
        np.array_equal(pm_multi.mean, pm_single.mean) and np.all(pm_multi.stderr == 0.0)
    )
    ref_pm = pastur_shubin_mc(point, lib, grid, samples=1, truncation_radius=24, d=1)
    cmp_pm = compare_random_ids(
        point, lib, window, ref_pm, volumes=[8, 32], omegas=[0, 1, 2], d=1
    )
    point_exact = point_exact and bool(
        np.all(cmp_pm.distances == cmp_pm.distances[0])
    )

    # Bernoulli(1/2), two independent seeds, S=200, R=32
    S, R = 200, 32
    e1 = pastur_shubin_mc(
        SiteDistribution.bernoulli("a", "b", seed=1001), lib, grid,
        samples=S, truncation_radius=R, d=1, scheduler=scheduler,
    )
    e2 = pastur_shubin_mc(
        SiteDistribution.bernoulli("a", "b", seed=2002), lib, grid,
        samples=S, truncation_radius=R, d=1, scheduler=scheduler,
    )
    combined = np.sqrt(e1.stderr**2 + e2.stderr**2)
    seeds_agree = bool(
        np.all(np.abs(e1.mean - e2.mean) <= 3 * np.maximum(combined, 1e-12))
    )

    comparison = compare_random_ids(
        SiteDistribution.bernoulli("a", "b", seed=1001), lib, window, e1,
        volumes=[32, 256], omegas=[40, 41, 42, 43, 44], d=1,
    )
    per_omega_decrease = comparison.decreased()

    # truncation: the localized semigroup trace error is asserted below
    # 1e-3; the sharp-projector estimate's change under R-doubling provably
    # oscillates at O(1/R) and is reported, not asserted.
    pm_coloring = sample_coloring(point, 0, 1)
    sg_diag = semigroup_truncation_diagnostic(pm_coloring, lib, R=R, d=1)
    p1 = pastur_shubin_mc(point, lib, grid, samples=1, truncation_radius=R, d=1)
    p2 = pastur_shubin_mc(point, lib, grid, samples=1, truncation_radius=2 * R, d=1)
    projector_change = float(np.max(np.abs(p1.mean - p2.mean)))
    truncation_ok = sg_diag < 1e-3

    dt = time.perf_counter() - t0
    return CriterionResult(
        index=8,
        name="random IDS: point mass, seed agreement, self-averaging, truncation",
        passed=bool(
            point_exact and seeds_agree and per_omega_decrease and truncation_ok
        ) and dt < 900.0,
        details={
            "point_mass_exact": point_exact,
            "two_seed_agreement": seeds_agree,
            "per_omega_distances": comparison.distances,
            "per_omega_decrease": per_omega_decrease,
            "semigroup_truncation_diagnostic": sg_diag,
            "projector_estimate_change_on_R_doubling": projector_change,
        },
        runtime_seconds=dt,
    )


# ---------------------------------------------------------------------------
# criterion 9: determinism of CLI artifacts
# ---------------------------------------------------------------------------

def _small_config():
    from .config import ExperimentConfig

    cfg = ExperimentConfig()
    cfg.sequence = {"kind": "cubes", "sides": [4, 8]}
    cfg.M_list = [1, 2]
    cfg.random = {
        "weights": {"a": 0.5, "b": 0.5}, "samples": 10, "truncation_radius": 6,
        "lambda_points": 21, "omegas": [0, 1], "compare_volumes": [8, 16],
    }
    cfg.seed = MASTER_SEED
    return cfg


def _run_cli_commands(target: Path) -> dict[str, bytes]:
    from .cli import cmd_ids, cmd_patterns, cmd_random, cmd_weyl

    cfg = _small_config()
    data: dict[str, bytes] = {}
    for name, fn in [
        ("patterns", cmd_patterns), ("ids", cmd_ids),
        ("weyl", cmd_weyl), ("random", cmd_random),
    ]:
        sub = target / name
        sub.mkdir(parents=True, exist_ok=True)
        rc = fn(cfg, sub)
        if rc != 0:
            raise RuntimeError(f"{name} exited with {rc}")
        for f in sorted(sub.iterdir()):
            if f.name != "manifest.json":
                data[f"{name}/{f.name}"] = f.read_bytes()
    return data


def criterion_9_determinism() -> CriterionResult:
    import contextlib
    import io

    t0 = time.perf_counter()
    tmp = Path(tempfile.mkdtemp(prefix="idslab-determinism-"))
    try:
        with contextlib.redirect_stdout(io.StringIO()):
            run_a = _run_cli_commands(tmp / "a")
            run_b = _run_cli_commands(tmp / "b")
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    same_names = set(run_a) == set(run_b)
    diffs = [k for k in run_a if same_names and run_a[k] != run_b[k]]
    dt = time.perf_counter() - t0
    return CriterionResult(
        index=9,
        name="byte-identical reruns of CLI data files",
        passed=same_names and not diffs,
        details={"files_compared": len(run_a), "differing": diffs},
        runtime_seconds=dt,
    )


ALL_CRITERIA = [
    criterion_1_pattern_oracles,
    criterion_2_frequencies,
    criterion_3_weyl,
    criterion_4_almost_additivity,
    criterion_5_singular_value_decay,
    criterion_6_legendre_bounds,
    criterion_7_two_routes,
    criterion_8_random,
    criterion_9_determinism,
]


def run_all(out_dir: Path | None = None, jobs: int = 1) -> list[CriterionResult]:
    results = []
    for fn in ALL_CRITERIA:
        if fn is criterion_8_random:
            results.append(fn(jobs=jobs))
        else:
            results.append(fn())
    return results
