"""Finite-volume Hamiltonians on colored cell complexes.

Continuum backend: second-order central finite differences on the grid of
spacing h = 1/n inside W_Q, Dirichlet conditions by deleting boundary and
removed-facet grid points, magnetic coupling by Peierls link phases.
Lattice backend: graph Laplacian on Q with the cell-averaged potential,
used as a fast independent oracle for the averaging engine.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .lattice import Coloring, Pattern, Site, dimension_of

CONTINUUM = "continuum"
LATTICE = "lattice"


@dataclass(frozen=True)
class Prototype:
    """Per-cell potential samples on the half-open unit-cell grid.

    v holds n^d electric-potential samples; a holds one n^d array per axis
    with vector-potential samples.  Supports live inside the unit cell by
    construction; all samples must be finite (bounded potentials only).
    """

    symbol: str
    v: np.ndarray
    a: tuple[np.ndarray, ...]

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        a = tuple(np.asarray(ai, dtype=float) for ai in self.a)
        if len(a) != v.ndim:
            raise ValueError("need one vector-potential component per axis")
        for ai in a:
            if ai.shape != v.shape:
                raise ValueError("vector-potential samples must match v's grid")
        if not np.all(np.isfinite(v)) or any(not np.all(np.isfinite(ai)) for ai in a):
            raise ValueError(f"prototype {self.symbol!r} has non-finite samples")
        if len(set(v.shape)) > 1:
            raise ValueError("unit-cell grid must be cubic")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "a", a)

    @property
    def dimension(self) -> int:
        return self.v.ndim

    @property
    def resolution(self) -> int:
        return self.v.shape[0]

    @property
    def cell_mean_v(self) -> float:
        return float(np.mean(self.v))

    @property
    def has_magnetic(self) -> bool:
        return any(np.any(ai != 0) for ai in self.a)

    @staticmethod
    def constant(symbol: str, value: float, n: int, d: int, a_value: Sequence[float] | None = None) -> "Prototype":
        shape = (n,) * d
        a_value = a_value if a_value is not None else [0.0] * d
        return Prototype(
            symbol,
            np.full(shape, float(value)),
            tuple(np.full(shape, float(av)) for av in a_value),
        )


class PrototypeLibrary:
    """Registry mapping alphabet symbols to prototypes of one shared grid."""

    def __init__(self, prototypes: Iterable[Prototype]):
        self._by_symbol: dict[str, Prototype] = {}
        for p in prototypes:
            if p.symbol in self._by_symbol:
                raise ValueError(f"duplicate prototype symbol {p.symbol!r}")
            self._by_symbol[p.symbol] = p
        if not self._by_symbol:
            raise ValueError("prototype library is empty")
        dims = {p.dimension for p in self._by_symbol.values()}
        res = {p.resolution for p in self._by_symbol.values()}
        if len(dims) > 1 or len(res) > 1:
            raise ValueError("all prototypes must share dimension and resolution")

    @property
    def dimension(self) -> int:
        return next(iter(self._by_symbol.values())).dimension

    @property
    def resolution(self) -> int:
        return next(iter(self._by_symbol.values())).resolution

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(sorted(self._by_symbol))

    @property
    def has_magnetic(self) -> bool:
        return any(p.has_magnetic for p in self._by_symbol.values())

    def __getitem__(self, symbol: str) -> Prototype:
        try:
            return self._by_symbol[symbol]
        except KeyError:
            raise KeyError(f"no prototype registered for symbol {symbol!r}") from None

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._by_symbol

    @staticmethod
    def constant_potentials(values: Mapping[str, float], n: int, d: int) -> "PrototypeLibrary":
        return PrototypeLibrary(
            Prototype.constant(sym, val, n, d) for sym, val in values.items()
        )

    @staticmethod
    def zero(alphabet: Sequence[str], n: int, d: int) -> "PrototypeLibrary":
        return PrototypeLibrary.constant_potentials({s: 0.0 for s in alphabet}, n, d)

    @staticmethod
    def from_json(text: str) -> "PrototypeLibrary":
        """Load {symbol: {"v": nested array, "a": [nested arrays]}} JSON."""
        obj = json.loads(text)
        protos = []
        for sym, entry in obj.items():
            v = np.asarray(entry["v"], dtype=float)
            a = entry.get("a")
            if a is None:
                a = [np.zeros_like(v) for _ in range(v.ndim)]
            protos.append(Prototype(sym, v, tuple(np.asarray(ai, dtype=float) for ai in a)))
        return PrototypeLibrary(protos)

    def to_json(self) -> str:
        out = {}
        for sym in self.symbols:
            p = self._by_symbol[sym]
            out[sym] = {"v": p.v.tolist(), "a": [ai.tolist() for ai in p.a]}
        return json.dumps(out, sort_keys=True, indent=2)


@dataclass(frozen=True)
class Facet:
    """Unit (d-1)-square {y : y_axis = anchor_axis, y_i in [anchor_i, anchor_i + 1]}."""

    anchor: Site
    axis: int

    def __post_init__(self):
        if not 0 <= self.axis < len(self.anchor):
            raise ValueError(f"facet axis {self.axis} outside dimension {len(self.anchor)}")

    def grid_points(self, n: int) -> list[Site]:
        """Grid indices (units of h = 1/n) lying on the closed facet."""
        d = len(self.anchor)
        axes = []
        for i in range(d):
            if i == self.axis:
                axes.append([self.anchor[i] * n])
            else:
                axes.append(list(range(self.anchor[i] * n, (self.anchor[i] + 1) * n + 1)))
        return [tuple(p) for p in product(*axes)]

    def adjacent_cells(self) -> tuple[Site, Site]:
        below = tuple(
            c - (1 if i == self.axis else 0) for i, c in enumerate(self.anchor)
        )
        return below, self.anchor


@dataclass(frozen=True)
class OperatorSpec:
    """Everything needed to assemble one finite-volume Hamiltonian."""

    Q: frozenset[Site]
    coloring: Coloring
    library: PrototypeLibrary
    backend: str = CONTINUUM
    resolution: int = 8
    removed_facets: tuple[Facet, ...] = field(default=())

    def __post_init__(self):
        if not self.Q:
            raise ValueError("Q must be nonempty")
        if self.backend not in (CONTINUUM, LATTICE):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == CONTINUUM:
            if self.resolution < 2:
                raise ValueError("continuum backend needs resolution >= 2")
            if self.library.resolution != self.resolution:
                raise ValueError(
                    f"prototype grid ({self.library.resolution}) does not match "
                    f"spec resolution ({self.resolution})"
                )
        d = dimension_of(self.Q)
        if self.library.dimension != d:
            raise ValueError("prototype dimension does not match Q")
        if self.backend == LATTICE and self.removed_facets:
            raise ValueError("removed facets apply to the continuum backend only")
        for f in self.removed_facets:
            if not facet_within(f, self.Q):
                raise ValueError(f"facet {f} lies outside W_Q")

    @property
    def dimension(self) -> int:
        return dimension_of(self.Q)

    def color_of(self, cell: Site) -> str:
        sym = self.coloring.color(cell)
        if sym not in self.library:
            raise KeyError(f"no prototype for symbol {sym!r} used at cell {cell}")
        return sym


def facet_within(f: Facet, Q: frozenset[Site]) -> bool:
    """A facet lies within W_Q iff it is a face of at least one cell of Q."""
    below, above = f.adjacent_cells()
    return below in Q or above in Q


def add_facet_dirichlet(spec: OperatorSpec, S: Facet) -> OperatorSpec:
    """Spec with an extra Dirichlet facet (its grid points get deleted)."""
    if not facet_within(S, spec.Q):
        raise ValueError(f"facet {S} lies outside W_Q")
    return replace(spec, removed_facets=spec.removed_facets + (S,))


def internal_facets(Q: frozenset[Site]) -> list[Facet]:
    """All facets shared by two cells of Q, each listed once."""
    d = dimension_of(Q)
    out = []
    for t in sorted(Q):
        for j in range(d):
            above = tuple(c + (1 if i == j else 0) for i, c in enumerate(t))
            if above in Q:
                out.append(Facet(anchor=above, axis=j))
    return out


# ---------------------------------------------------------------------------
# Continuum finite-difference backend
# ---------------------------------------------------------------------------

def _interior_grid_points(Q: frozenset[Site], n: int) -> list[Site]:
    """Grid indices interior to W_Q: every unit cell touching the point is in Q."""
    d = dimension_of(Q)
    candidates: set[Site] = set()
    for t in Q:
        for local in product(range(n + 1), repeat=d):
            candidates.add(tuple(t[i] * n + local[i] for i in range(d)))
    interior = []
    for p in candidates:
        owner_options = []
        for i in range(d):
            q, r = divmod(p[i], n)
            owner_options.append([q - 1, q] if r == 0 else [q])
        if all(tuple(owner) in Q for owner in product(*owner_options)):
            interior.append(p)
    return sorted(interior)


def grid_points(spec: OperatorSpec) -> list[Site]:
    """Index set the assembled matrix acts on (sorted, ready for bookkeeping)."""
    pts = _interior_grid_points(spec.Q, spec.resolution)
    removed: set[Site] = set()
    for f in spec.removed_facets:
        removed.update(f.grid_points(spec.resolution))
    return [p for p in pts if p not in removed]


def assemble_fields(
    color_of: Callable[[Site], str],
    Q: frozenset[Site],
    library: PrototypeLibrary,
) -> tuple[dict[Site, float], list[dict[Site, float]]]:
    """Tile prototype samples over W_Q on the half-open grid.

    Returns the electric field and one vector-potential component per axis,
    keyed by grid index (units of h).  Each grid point is owned by exactly
    one cell under the half-open [0,1)^d convention.
    """
    d = dimension_of(Q)
    n = library.resolution
    V: dict[Site, float] = {}
    A: list[dict[Site, float]] = [dict() for _ in range(d)]
    for t in sorted(Q):
        proto = library[color_of(t)]
        for local in product(range(n), repeat=d):
            p = tuple(t[i] * n + local[i] for i in range(d))
            V[p] = float(proto.v[local])
            for j in range(d):
                A[j][p] = float(proto.a[j][local])
    return V, A


def _field_sample(
    spec: OperatorSpec, p: Site, component: int | None
) -> float:
    """Half-open-ownership sample of V (component None) or A_j at grid index p."""
    n = spec.resolution
    owner = tuple(c // n for c in p)
    local = tuple(c % n for c in p)
    proto = spec.library[spec.color_of(owner)]
    if component is None:
        return float(proto.v[local])
    return float(proto.a[component][local])


def discretize(spec: OperatorSpec) -> np.ndarray:
    """Assemble the Hamiltonian matrix for the spec's backend.

    Continuum: (2d/h^2 + V) on the diagonal, -exp(-i h A_j)/h^2 on links,
    acting on interior grid points minus removed-facet points.  Hermitian by
    construction.  Lattice: see lattice_model.
    """
    if spec.backend == LATTICE:
        return lattice_model(spec.coloring, spec.Q, spec.library, color_of=spec.color_of)
    d = spec.dimension
    n = spec.resolution
    h = 1.0 / n
    pts = grid_points(spec)
    if not pts:
        raise ValueError("degenerate geometry: no interior grid points remain")
    index = {p: i for i, p in enumerate(pts)}
    magnetic = spec.library.has_magnetic
    dtype = complex if magnetic else float
    H = np.zeros((len(pts), len(pts)), dtype=dtype)
    inv_h2 = 1.0 / h**2
    for p, i in index.items():
        H[i, i] = 2.0 * d * inv_h2 + _field_sample(spec, p, None)
        for j in range(d):
            q = tuple(c + (1 if k == j else 0) for k, c in enumerate(p))
            iq = index.get(q)
            if iq is None:
                continue
            if magnetic:
                # Peierls phase: A_j sampled at the link tail, which shares
                # its half-open owner cell with the link midpoint.
                w = -inv_h2 * np.exp(-1j * h * _field_sample(spec, p, j))
            else:
                w = -inv_h2
            H[i, iq] = w
            H[iq, i] = np.conjugate(w)
    from .spectral import assert_hermitian

    assert_hermitian(H)
    return H


# ---------------------------------------------------------------------------
# Lattice (tight-binding) backend
# ---------------------------------------------------------------------------

def lattice_model(
    C: Coloring,
    Q: frozenset[Site],
    library: PrototypeLibrary,
    color_of: Callable[[Site], str] | None = None,
) -> np.ndarray:
    """Graph Laplacian on Q with site potential = cell mean of the prototype.

    Diagonal 2d + vbar(C(x)); off-diagonal -1 between nearest neighbors in
    Q.  Missing neighbors contribute nothing (lattice Dirichlet convention).
    """
    if not Q:
        raise ValueError("Q must be nonempty")
    color_of = color_of or C.color
    d = dimension_of(Q)
    pts = sorted(Q)
    index = {p: i for i, p in enumerate(pts)}
    H = np.zeros((len(pts), len(pts)))
    for p, i in index.items():
        H[i, i] = 2.0 * d + library[color_of(p)].cell_mean_v
        for j in range(d):
            q = tuple(c + (1 if k == j else 0) for k, c in enumerate(p))
            iq = index.get(q)
            if iq is not None:
                H[i, iq] = -1.0
                H[iq, i] = -1.0
    from .spectral import assert_hermitian

    assert_hermitian(H)
    return H


def pattern_spec(P: Pattern, spec: OperatorSpec) -> OperatorSpec:
    """Spec evaluating the same operator family on a pattern's own domain."""
    return OperatorSpec(
        Q=P.domain,
        coloring=_PatternColoring(P),
        library=spec.library,
        backend=spec.backend,
        resolution=spec.resolution,
    )


@dataclass(frozen=True)
class _PatternColoring(Coloring):
    """Coloring view of a pattern; defined only on the pattern's domain."""

    pattern: Pattern

    @property
    def alphabet(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.pattern.symbols)))

    @property
    def dimension(self) -> int:
        return self.pattern.dimension

    def color(self, site: Site) -> str:
        return self.pattern.color(site)


def spec_digest(spec: OperatorSpec) -> str:
    """Short deterministic digest identifying an operator spec in reports."""
    import hashlib

    parts = [
        spec.backend,
        str(spec.resolution),
        repr(sorted(spec.Q)),
        repr(spec.coloring),
        repr([(f.anchor, f.axis) for f in spec.removed_facets]),
        ",".join(spec.library.symbols),
    ]
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


def export_matrix_coo(H: np.ndarray, path: str) -> None:
    """Coordinate-triplet text export: 'i j real [imag]' per nonzero entry."""
    H = np.asarray(H)
    with open(path, "w") as fh:
        fh.write(f"# dimension {H.shape[0]} nnz {int(np.count_nonzero(H))}\n")
        rows, cols = np.nonzero(H)
        for i, j in zip(rows.tolist(), cols.tolist()):
            v = H[i, j]
            if np.iscomplexobj(H):
                fh.write(f"{i} {j} {float(v.real)!r} {float(v.imag)!r}\n")
            else:
                fh.write(f"{i} {j} {float(v)!r}\n")
