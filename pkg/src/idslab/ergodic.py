"""Almost-additive averaging engine for step-function-valued set functions.

The central object is the eigenvalue-counting field Q -> N(., H^Q) viewed
as an L^p(I)-valued set function.  It is invariant under translations that
preserve the coloring pattern and almost-additive with a boundary term
proportional to the inner combinatorial boundary, which feeds two
approximation routes to the same limit: normalized counting functions along
a van Hove sequence, and frequency-weighted averages over window pattern
classes.  The quantitative error bound combining both routes is evaluated
exactly as stated, in both its counting-constant and boundary-term
parameterizations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .lattice import (
    Coloring,
    FrequencyTable,
    Pattern,
    Site,
    cube,
    inner_boundary,
    van_hove_ratios,
)
from .operators import (
    CONTINUUM,
    LATTICE,
    Facet,
    OperatorSpec,
    PrototypeLibrary,
    add_facet_dirichlet,
    discretize,
    grid_points,
    pattern_spec,
)
from .spectral import (
    EnergyWindow,
    StepFunction,
    counting_function,
    eigenvalues,
    linear_combination,
    lp_distance,
    lp_norm,
)
from .ssf import (
    SingularValueSeries,
    facet_ssf_norm_bound,
    semigroup_difference_singular_values,
)

DEFAULT_MATRIX_CAP = 20_000


@dataclass(frozen=True)
class BoundaryTerm:
    """b(Q) = d * scale * #(inner 1-boundary of Q), with b(Q) <= D #Q.

    Translation invariant by construction; vanishes relative to volume along
    van Hove sequences because the inner boundary is contained in the
    two-sided one.
    """

    scale: float
    dimension: int

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"boundary scale must be positive, got {self.scale}")

    def __call__(self, Q: frozenset[Site]) -> float:
        return self.dimension * self.scale * len(inner_boundary(Q, 1))

    @property
    def D(self) -> float:
        return self.dimension * self.scale


class AlmostAdditiveField:
    """Eigenvalue-counting set function with caching keyed by pattern class.

    evaluate(Q) returns the unnormalized counting function of the operator
    assembled on Q from the field's coloring; evaluate_pattern(P) returns
    the class function on the canonical representative's domain.  Both hit
    the same cache because invariance makes the representative immaterial.
    """

    def __init__(
        self,
        coloring: Coloring,
        library: PrototypeLibrary,
        window: EnergyWindow,
        backend: str = LATTICE,
        resolution: int = 8,
        boundary: BoundaryTerm | None = None,
        K: float | None = None,
        matrix_cap: int = DEFAULT_MATRIX_CAP,
        cache: bool = True,
    ):
        self.coloring = coloring
        self.library = library
        self.window = window
        self.backend = backend
        self.resolution = resolution
        self.matrix_cap = matrix_cap
        self._cache: dict[Pattern, StepFunction] | None = {} if cache else None
        if boundary is None:
            scale = calibrate_boundary_scale(
                coloring, library, window, backend, resolution
            )
            boundary = BoundaryTerm(scale=scale, dimension=coloring.dimension)
        self.boundary = boundary
        if K is None:
            K = fit_uniform_bound(coloring, library, window, backend, resolution)
        self.K = K

    @property
    def dimension(self) -> int:
        return self.coloring.dimension

    def _spec(self, Q: frozenset[Site]) -> OperatorSpec:
        return OperatorSpec(
            Q=Q,
            coloring=self.coloring,
            library=self.library,
            backend=self.backend,
            resolution=self.resolution,
        )

    def matrix_dimension(self, Q: frozenset[Site]) -> int:
        if self.backend == LATTICE:
            return len(Q)
        return len(grid_points(self._spec(Q)))

    def _counting(self, spec: OperatorSpec) -> StepFunction:
        dim = len(spec.Q) if spec.backend == LATTICE else len(grid_points(spec))
        if dim > self.matrix_cap:
            raise ValueError(
                f"matrix dimension {dim} exceeds the configured cap {self.matrix_cap}"
            )
        eigs = eigenvalues(discretize(spec), ceiling=self.window.sup)
        return counting_function(eigs, self.window)

    def evaluate(self, Q: frozenset[Site]) -> StepFunction:
        if not Q:
            raise ValueError("cannot evaluate the field on the empty set")
        return self.evaluate_pattern(self.coloring.restrict(Q))

    __call__ = evaluate

    def evaluate_pattern(self, P: Pattern) -> StepFunction:
        canonical = P.canonical()
        if self._cache is not None and canonical in self._cache:
            return self._cache[canonical]
        result = self._counting(pattern_spec(canonical, self._spec(canonical.domain)))
        if self._cache is not None:
            self._cache[canonical] = result
        return result


# ---------------------------------------------------------------------------
# Fitted constants
# ---------------------------------------------------------------------------

def calibration_pair(
    coloring: Coloring,
    library: PrototypeLibrary,
    backend: str,
    resolution: int,
) -> SingularValueSeries:
    """Singular values of the designated single-facet/single-bond pair.

    The pair lives on the two cells at the origin and at e_1 of the field's
    own coloring; continuum: Dirichlet facet between them, lattice: the
    coupling bond between them is cut.
    """
    d = coloring.dimension
    origin = (0,) * d
    e1 = tuple(1 if i == 0 else 0 for i in range(d))
    Q = frozenset({origin, e1})
    if backend == CONTINUUM:
        specA = OperatorSpec(
            Q=Q, coloring=coloring, library=library,
            backend=CONTINUUM, resolution=resolution,
        )
        specB = add_facet_dirichlet(specA, Facet(anchor=e1, axis=0))
        HA, HB = discretize(specA), discretize(specB)
        ptsA, ptsB = grid_points(specA), grid_points(specB)
        pos = {p: i for i, p in enumerate(ptsA)}
        mu = semigroup_difference_singular_values(
            HA, HB, embed=[pos[p] for p in ptsB]
        )
    else:
        from .operators import lattice_model

        HA = lattice_model(coloring, Q, library)
        HB = HA.copy()
        HB[0, 1] = HB[1, 0] = 0.0
        mu = semigroup_difference_singular_values(HA, HB)
    return SingularValueSeries(mu=mu, source=f"calibration {backend} d={d}")


def calibrate_boundary_scale(
    coloring: Coloring,
    library: PrototypeLibrary,
    window: EnergyWindow,
    backend: str,
    resolution: int,
) -> float:
    """C-tilde from one facet computation: (exp(T) <phi, mu>)^(1/p)."""
    series = calibration_pair(coloring, library, backend, resolution)
    return facet_ssf_norm_bound(series, window)


def fit_uniform_bound(
    coloring: Coloring,
    library: PrototypeLibrary,
    window: EnergyWindow,
    backend: str,
    resolution: int,
    C1: float = 0.0,
) -> float:
    """K = C3 (T + C1)^(d/2) with C3 fitted on single colored cells."""
    d = coloring.dimension
    origin = (0,) * d
    norms = []
    for sym in library.symbols:
        cell = Pattern((origin,), (sym,))
        spec = pattern_spec(
            cell,
            OperatorSpec(
                Q=frozenset({origin}), coloring=coloring, library=library,
                backend=backend, resolution=resolution,
            ),
        )
        eigs = eigenvalues(discretize(spec), ceiling=window.sup)
        norms.append(lp_norm(counting_function(eigs, window), window))
    C3 = max(norms) / (window.sup + C1) ** (d / 2.0)
    return C3 * (window.sup + C1) ** (d / 2.0)


def counting_field(
    coloring: Coloring,
    library: PrototypeLibrary,
    window: EnergyWindow,
    backend: str = LATTICE,
    resolution: int = 8,
    matrix_cap: int = DEFAULT_MATRIX_CAP,
    cache: bool = True,
    boundary_scale: float | None = None,
    K: float | None = None,
) -> AlmostAdditiveField:
    """The counting field Q -> N(., H^Q) with fitted boundary term and bound."""
    boundary = None
    if boundary_scale is not None:
        boundary = BoundaryTerm(scale=boundary_scale, dimension=coloring.dimension)
    return AlmostAdditiveField(
        coloring=coloring,
        library=library,
        window=window,
        backend=backend,
        resolution=resolution,
        boundary=boundary,
        K=K,
        matrix_cap=matrix_cap,
        cache=cache,
    )


# ---------------------------------------------------------------------------
# Almost-additivity measurement
# ---------------------------------------------------------------------------

def additivity_defect(
    field: AlmostAdditiveField, partition: Sequence[frozenset[Site]]
) -> tuple[float, float]:
    """(defect, budget) for one disjoint partition.

    defect = || F(union) - sum_k F(Q_k) ||_{L^p(I)}, budget = sum_k b(Q_k);
    almost-additivity asserts defect <= budget.
    """
    if not partition:
        raise ValueError("partition must contain at least one set")
    union: set[Site] = set()
    total = 0
    for Q in partition:
        union.update(Q)
        total += len(Q)
    if len(union) != total:
        raise ValueError("partition sets must be pairwise disjoint")
    F_union = field.evaluate(frozenset(union))
    F_sum = linear_combination(
        [field.evaluate(Q) for Q in partition], [1.0] * len(partition)
    )
    defect = lp_distance(F_union, F_sum, field.window)
    budget = float(sum(field.boundary(Q) for Q in partition))
    return defect, budget


# ---------------------------------------------------------------------------
# The two approximation routes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DirectRoute:
    """Normalized counting functions along a sequence plus Cauchy diagnostics."""

    volumes: tuple[int, ...]
    normalized: tuple[StepFunction, ...]
    consecutive_distances: tuple[float, ...]
    boundary_ratios: tuple[Fraction, ...]


def direct_route(
    field: AlmostAdditiveField,
    sequence: Sequence[frozenset[Site]],
    boundary_width: int = 1,
) -> DirectRoute:
    """F(U_j)/#U_j for each member of a van Hove sequence."""
    if not sequence:
        raise ValueError("need a nonempty sequence")
    ratios, monotone = van_hove_ratios(sequence, boundary_width)
    if len(sequence) > 1 and not monotone and ratios[-1] >= ratios[0]:
        raise ValueError(
            "sequence fails the van Hove sanity check: boundary/volume ratios do not decay"
        )
    normalized = [
        field.evaluate(U).scale(1.0 / len(U)) for U in sequence
    ]
    dists = tuple(
        lp_distance(a, b, field.window) for a, b in zip(normalized, normalized[1:])
    )
    return DirectRoute(
        volumes=tuple(len(U) for U in sequence),
        normalized=tuple(normalized),
        consecutive_distances=dists,
        boundary_ratios=tuple(ratios),
    )


def pattern_route(
    field: AlmostAdditiveField, table: FrequencyTable
) -> StepFunction:
    """Frequency-weighted class average: sum_P nu_P F~(P) / #C_M."""
    if not table.entries:
        raise ValueError("frequency table is empty")
    cell_volume = len(cube(table.M, field.dimension))
    functions: list[StepFunction] = []
    weights: list[float] = []
    for P in sorted(table.entries, key=lambda p: p.key()):
        nu = table.entries[P]
        if nu == 0:
            continue
        functions.append(field.evaluate_pattern(P))
        weights.append(float(nu) / cell_volume)
    if not functions:
        return StepFunction.constant(0.0)
    return linear_combination(functions, weights)


def check_table_covers(table: FrequencyTable, occurring: Sequence[Pattern]) -> None:
    """Raise if a pattern with nonzero tally has no frequency entry."""
    keys = {P.key() for P in table.entries}
    missing = sorted({P.key() for P in occurring} - keys)
    if missing:
        raise KeyError(f"frequency table lacks entries for occurring patterns: {missing}")


# ---------------------------------------------------------------------------
# Quantitative error bounds
# ---------------------------------------------------------------------------

def error_bound_counting(
    M: int,
    boundary_ratio: float,
    freq_deviation_sum: float,
    C: float,
    c_pd: float,
    T: float,
    p: float,
    d: int,
) -> float:
    """Three-term bound in the counting-constant parameterization.

    C/M + (C (T+C)^(d/2) + c_pd C^(1/p)) * boundary_ratio
        + C (T+C)^(d/2) * freq_deviation_sum
    """
    if min(M, C, c_pd, p) <= 0 or boundary_ratio < 0 or freq_deviation_sum < 0:
        raise ValueError("inputs must be nonnegative, constants positive")
    weyl = C * (T + C) ** (d / 2.0)
    return (
        C / M
        + (weyl + c_pd * C ** (1.0 / p)) * boundary_ratio
        + weyl * freq_deviation_sum
    )


def error_bound_additive(
    M: int,
    boundary_ratio: float,
    freq_deviation_sum: float,
    b_of_CM: float,
    K: float,
    D: float,
    d: int,
) -> float:
    """Three-term bound in the boundary-term parameterization.

    2 b(C_M)/M^d + (K + D) * boundary_ratio + K * freq_deviation_sum
    """
    if M <= 0 or min(boundary_ratio, freq_deviation_sum, b_of_CM, K, D) < 0:
        raise ValueError("inputs must be nonnegative")
    return 2.0 * b_of_CM / M**d + (K + D) * boundary_ratio + K * freq_deviation_sum


def field_error_bound(
    field: AlmostAdditiveField,
    M: int,
    boundary_ratio: float,
    freq_deviation_sum: float,
) -> float:
    """Boundary-term bound with the field's own fitted constants."""
    b_cm = field.boundary(cube(M, field.dimension))
    return error_bound_additive(
        M=M,
        boundary_ratio=boundary_ratio,
        freq_deviation_sum=freq_deviation_sum,
        b_of_CM=b_cm,
        K=field.K,
        D=field.boundary.D,
        d=field.dimension,
    )


# ---------------------------------------------------------------------------
# Report container
# ---------------------------------------------------------------------------

@dataclass
class ErgodicReport:
    """Everything one two-route experiment produced, ready to serialize."""

    window: EnergyWindow
    volumes: list[int]
    direct_normalized: list[StepFunction]
    consecutive_distances: list[float]
    pattern_route_values: dict[int, StepFunction]
    route_distances: list[dict]
    fitted_K: float
    fitted_D: float
    boundary_scale: float

    def rows(self) -> list[dict]:
        return self.route_distances

    def summary_table(self) -> str:
        lines = ["j\tM\tdistance\tbound\tbound/distance"]
        for row in self.route_distances:
            ratio = row["bound"] / row["distance"] if row["distance"] > 0 else float("inf")
            lines.append(
                f"{row['j']}\t{row['M']}\t{row['distance']:.6g}\t{row['bound']:.6g}\t{ratio:.3g}"
            )
        return "\n".join(lines)

    def to_json_dict(self) -> dict:
        return {
            "window": {"lo": self.window.lo, "hi": self.window.hi, "p": self.window.p},
            "volumes": self.volumes,
            "consecutive_distances": self.consecutive_distances,
            "route_distances": self.route_distances,
            "fitted_K": self.fitted_K,
            "fitted_D": self.fitted_D,
            "boundary_scale": self.boundary_scale,
        }


def two_route_experiment(
    field: AlmostAdditiveField,
    coloring,
    sequence: Sequence[frozenset[Site]],
    tables: Mapping[int, FrequencyTable],
    boundary_width_for: Callable[[int], int] | None = None,
) -> ErgodicReport:
    """Run both routes and evaluate the error bound for every (j, M) pair.

    tables maps window side M to the frequency table used by the pattern
    route; the bound for a pair (U_j, M) uses the two-sided M-boundary ratio
    of U_j and the summed frequency deviations measured on U_j.
    """
    from .lattice import boundary as two_sided_boundary
    from .lattice import enumerate_window_patterns

    route = direct_route(field, sequence)
    pattern_values = {M: pattern_route(field, tables[M]) for M in tables}
    rows = []
    for j_idx, U in enumerate(sequence):
        vol = len(U)
        for M, table in sorted(tables.items()):
            ratio = len(two_sided_boundary(U, M)) / vol
            tally = enumerate_window_patterns(coloring, U, M)
            dev = 0.0
            seen = set()
            for P, k in tally.items():
                nu = float(table.entries.get(P, 0.0))
                dev += abs(k / vol - nu)
                seen.add(P)
            for P, nu in table.entries.items():
                if P not in seen:
                    dev += float(nu)
            dist = lp_distance(
                route.normalized[j_idx], pattern_values[M], field.window
            )
            bound = field_error_bound(field, M, ratio, dev)
            rows.append(
                {
                    "j": vol,
                    "M": M,
                    "distance": dist,
                    "bound": bound,
                    "boundary_ratio": ratio,
                    "freq_deviation_sum": dev,
                }
            )
    return ErgodicReport(
        window=field.window,
        volumes=list(route.volumes),
        direct_normalized=list(route.normalized),
        consecutive_distances=list(route.consecutive_distances),
        pattern_route_values=pattern_values,
        route_distances=rows,
        fitted_K=field.K,
        fitted_D=field.boundary.D,
        boundary_scale=field.boundary.scale,
    )
