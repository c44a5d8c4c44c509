"""Hamiltonian assembly: tiling, Dirichlet bookkeeping, Peierls phases."""

import json

import numpy as np
import pytest

from idslab.lattice import RandomColoring, cube, periodic_word, site_set
from idslab.operators import (
    Facet,
    OperatorSpec,
    Prototype,
    PrototypeLibrary,
    add_facet_dirichlet,
    assemble_fields,
    discretize,
    export_matrix_coo,
    facet_within,
    grid_points,
    internal_facets,
    lattice_model,
)
from idslab.spectral import assert_hermitian, dirichlet_chain_eigenvalues, eigenvalues

N = 8
LIB01 = PrototypeLibrary.constant_potentials({"a": 1.0, "b": 0.0}, N, 1)
LIB0 = PrototypeLibrary.zero(["a"], N, 1)


def two_cell_spec(n=N, coloring=None, lib=None):
    return OperatorSpec(
        Q=cube(2, 1),
        coloring=coloring or periodic_word("a"),
        library=lib or PrototypeLibrary.zero(["a"], n, 1),
        backend="continuum",
        resolution=n,
    )


# ---------------------------------------------------------------------------
# prototypes and field tiling
# ---------------------------------------------------------------------------

def test_prototype_validation():
    with pytest.raises(ValueError):
        Prototype("x", np.array([[0.0, 1.0]]), (np.zeros((1, 2)),))  # non-cubic
    with pytest.raises(ValueError):
        Prototype("x", np.array([np.inf, 0.0]), (np.zeros(2),))
    p = Prototype.constant("a", 2.5, 4, 2)
    assert p.cell_mean_v == 2.5 and p.resolution == 4 and p.dimension == 2


def test_library_json_round_trip():
    lib = PrototypeLibrary.constant_potentials({"a": 1.0, "b": 0.0}, 3, 1)
    again = PrototypeLibrary.from_json(lib.to_json())
    assert again.symbols == ("a", "b")
    assert np.array_equal(again["a"].v, lib["a"].v)


def test_assemble_fields_zero():
    V, A = assemble_fields(periodic_word("a").color, cube(3, 1), LIB0)
    assert all(v == 0.0 for v in V.values())
    assert all(v == 0.0 for v in A[0].values())
    assert len(V) == 3 * N


def test_assemble_fields_period2_tiling():
    V, _ = assemble_fields(periodic_word("ab").color, cube(2, 1), LIB01)
    for p, v in V.items():
        cell = p[0] // N
        assert v == (1.0 if cell % 2 == 0 else 0.0)


def test_assemble_fields_single_cell_identity():
    rng = np.random.default_rng(0)
    proto = Prototype("a", rng.uniform(size=(4, 4)), (np.zeros((4, 4)), np.zeros((4, 4))))
    lib = PrototypeLibrary([proto])
    C = periodic_word("a")

    class C2:
        def color(self, s):
            return "a"

    V, _ = assemble_fields(C2().color, site_set([(0, 0)]), lib)
    for (i, j), v in V.items():
        assert v == proto.v[i, j]


def test_missing_prototype_rejected():
    spec = OperatorSpec(
        Q=cube(2, 1), coloring=periodic_word("ab"),
        library=PrototypeLibrary.constant_potentials({"a": 0.0}, N, 1),
        backend="continuum", resolution=N,
    )
    with pytest.raises(KeyError):
        discretize(spec)


# ---------------------------------------------------------------------------
# continuum discretization
# ---------------------------------------------------------------------------

def test_fd_laplacian_matches_analytic_spectrum():
    L, n = 10, 8
    spec = OperatorSpec(
        Q=cube(L, 1), coloring=periodic_word("a"),
        library=PrototypeLibrary.zero(["a"], n, 1),
        backend="continuum", resolution=n,
    )
    H = discretize(spec)
    assert H.shape == (n * L - 1, n * L - 1)
    got = eigenvalues(H)
    assert np.allclose(got, np.sort(dirichlet_chain_eigenvalues(L, n)), atol=1e-8)


def test_zero_vector_potential_gives_real_matrix():
    H = discretize(two_cell_spec())
    assert H.dtype == np.float64
    assert_hermitian(H)


def test_constant_gauge_invariance_1d():
    n = 16
    lib_a = PrototypeLibrary([Prototype.constant("a", 0.0, n, 1, a_value=[0.7])])
    lib_0 = PrototypeLibrary.zero(["a"], n, 1)
    spec_a = OperatorSpec(Q=cube(3, 1), coloring=periodic_word("a"),
                          library=lib_a, backend="continuum", resolution=n)
    spec_0 = OperatorSpec(Q=cube(3, 1), coloring=periodic_word("a"),
                          library=lib_0, backend="continuum", resolution=n)
    Ha, H0 = discretize(spec_a), discretize(spec_0)
    assert np.iscomplexobj(Ha)
    assert_hermitian(Ha)
    ea, e0 = np.linalg.eigvalsh(Ha), np.linalg.eigvalsh(H0)
    assert np.max(np.abs(ea - e0) / np.abs(e0)) < 1e-8


def test_gauge_oracle_diagonal_conjugation():
    """Independent check: conjugating by the exact phase diagonal reproduces H."""
    n = 8
    lib_a = PrototypeLibrary([Prototype.constant("a", 0.0, n, 1, a_value=[0.5])])
    spec = OperatorSpec(Q=cube(2, 1), coloring=periodic_word("a"),
                        library=lib_a, backend="continuum", resolution=n)
    Ha = discretize(spec)
    H0 = discretize(two_cell_spec(n=n))
    h = 1.0 / n
    pts = grid_points(spec)
    phases = np.exp(1j * 0.5 * h * np.array([p[0] for p in pts]))
    D = np.diag(phases)
    assert np.allclose(D @ H0 @ D.conj().T, Ha, atol=1e-12)


def test_translation_invariance_of_assembly():
    C = periodic_word("ab")
    lib = LIB01
    specs = []
    for shift in (0, 2):
        Q = site_set([(shift,), (shift + 1,)])
        specs.append(OperatorSpec(Q=Q, coloring=C, library=lib,
                                  backend="continuum", resolution=N))
    H0, H1 = discretize(specs[0]), discretize(specs[1])
    assert np.array_equal(H0, H1)
    e0, e1 = np.linalg.eigvalsh(H0), np.linalg.eigvalsh(H1)
    assert np.max(np.abs(e0 - e1)) < 1e-10


def test_minimal_single_cell_geometry():
    # one cell at the coarsest resolution: exactly one interior point
    spec = OperatorSpec(
        Q=cube(1, 1), coloring=periodic_word("a"),
        library=PrototypeLibrary.zero(["a"], 2, 1),
        backend="continuum", resolution=2,
    )
    H = discretize(spec)
    assert H.shape == (1, 1)
    assert H[0, 0] == pytest.approx(2 * 1 * 4)  # 2d/h^2 with h = 1/2


# ---------------------------------------------------------------------------
# facets
# ---------------------------------------------------------------------------

def test_facet_split_blocks_1d():
    spec = two_cell_spec()
    split = add_facet_dirichlet(spec, Facet(anchor=(1,), axis=0))
    H = discretize(split)
    assert H.shape == (2 * N - 2, 2 * N - 2)
    # independent single-cell assemblies
    single = OperatorSpec(
        Q=cube(1, 1), coloring=periodic_word("a"),
        library=PrototypeLibrary.zero(["a"], N, 1), backend="continuum", resolution=N,
    )
    Hs = discretize(single)
    expected = np.sort(np.concatenate([np.linalg.eigvalsh(Hs)] * 2))
    assert np.allclose(np.linalg.eigvalsh(H), expected, atol=1e-10)


def test_outer_facet_is_noop():
    spec = two_cell_spec()
    outer = add_facet_dirichlet(spec, Facet(anchor=(0,), axis=0))
    assert np.array_equal(discretize(outer), discretize(spec))


def test_facet_outside_rejected():
    spec = two_cell_spec()
    with pytest.raises(ValueError):
        add_facet_dirichlet(spec, Facet(anchor=(5,), axis=0))
    assert facet_within(Facet(anchor=(2,), axis=0), spec.Q)  # face of cell 1


def test_all_internal_facets_of_c2_2d():
    n = 4
    lib = PrototypeLibrary.zero(["a"], n, 2)
    C = periodic_word("a")

    class Const2:
        dimension = 2
        alphabet = ("a",)

        def color(self, s):
            return "a"

        def restrict(self, Q):
            import idslab.lattice as lat

            sites = tuple(sorted(Q))
            return lat.Pattern(sites, tuple("a" for _ in sites))

    spec = OperatorSpec(Q=cube(2, 2), coloring=Const2(), library=lib,
                        backend="continuum", resolution=n)
    facets = internal_facets(spec.Q)
    assert len(facets) == 4
    for f in facets:
        spec = add_facet_dirichlet(spec, f)
    H = discretize(spec)
    assert H.shape == (4 * (n - 1) ** 2, 4 * (n - 1) ** 2)
    single = OperatorSpec(Q=cube(1, 2), coloring=Const2(), library=lib,
                          backend="continuum", resolution=n)
    cell_eigs = np.linalg.eigvalsh(discretize(single))
    expected = np.sort(np.concatenate([cell_eigs] * 4))
    assert np.allclose(np.linalg.eigvalsh(H), expected, atol=1e-10)


def test_dirichlet_monotonicity():
    spec = two_cell_spec(n=12)
    split = add_facet_dirichlet(spec, Facet(anchor=(1,), axis=0))
    e1 = np.linalg.eigvalsh(discretize(spec))
    e2 = np.linalg.eigvalsh(discretize(split))
    assert np.all(e2 - e1[: len(e2)] >= -1e-10)


# ---------------------------------------------------------------------------
# lattice backend
# ---------------------------------------------------------------------------

def test_lattice_single_site():
    H = lattice_model(periodic_word("a"), cube(1, 1), LIB0)
    assert np.array_equal(H, [[2.0]])


def test_lattice_two_sites():
    H = lattice_model(periodic_word("a"), cube(2, 1), LIB0)
    assert np.array_equal(H, [[2.0, -1.0], [-1.0, 2.0]])
    assert np.allclose(np.linalg.eigvalsh(H), [1.0, 3.0])


def test_lattice_potential_shift():
    lib0 = PrototypeLibrary.constant_potentials({"a": 0.0}, 2, 1)
    lib3 = PrototypeLibrary.constant_potentials({"a": 3.0}, 2, 1)
    C = periodic_word("a")
    e0 = np.linalg.eigvalsh(lattice_model(C, cube(5, 1), lib0))
    e3 = np.linalg.eigvalsh(lattice_model(C, cube(5, 1), lib3))
    assert np.allclose(e3, e0 + 3.0)


def test_lattice_2d_neighbors():
    lib = PrototypeLibrary.zero(["a"], 2, 2)

    class Const2:
        def color(self, s):
            return "a"

    H = lattice_model(None, cube(2, 2), lib, color_of=Const2().color)
    assert H.shape == (4, 4)
    assert np.all(np.diag(H) == 4.0)
    assert np.sum(H == -1.0) == 8  # 4 edges, both directions


def test_export_coo(tmp_path):
    H = np.array([[2.0, -1.0], [-1.0, 2.0]])
    path = tmp_path / "m.txt"
    export_matrix_coo(H, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "# dimension 2 nnz 4"
    assert lines[1] == "0 0 2.0"
