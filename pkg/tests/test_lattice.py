"""Lattice combinatorics against brute-force oracles."""

import random
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idslab.lattice import (
    FrequencyTable,
    Pattern,
    PeriodicColoring,
    RandomColoring,
    WindowColoring,
    boundary,
    bounding_box,
    cube,
    cube_sequence,
    enumerate_window_patterns,
    estimated_frequency_table,
    exact_frequency_table,
    frequency,
    frequency_estimate,
    frequency_exact,
    inner_boundary,
    occurrences,
    pattern_from_word,
    periodic_word,
    site_set,
    van_hove_ratios,
)


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------

def chebyshev(a, b):
    return max(abs(x - y) for x, y in zip(a, b))


def boundary_oracle(Q, M):
    """Scan the full bounding window extended by M and test both conditions."""
    d = len(next(iter(Q)))
    lo, hi = bounding_box(Q)
    window = product(*(range(lo[i] - M - 1, hi[i] + M + 2) for i in range(d)))
    out = set()
    for x in window:
        dist_to_Q = min(chebyshev(x, q) for q in Q)
        if x in Q:
            # distance to the complement: scan the Chebyshev ball
            ball = product(*(range(x[i] - M, x[i] + M + 1) for i in range(d)))
            if any(y not in Q for y in ball):
                out.add(x)
        elif dist_to_Q <= M:
            out.add(x)
    return frozenset(out)


def occurrences_oracle(P, Pp):
    """Exhaustive scan of every translate within an enlarged bounding window."""
    loP, hiP = bounding_box(P.domain)
    loQ, hiQ = bounding_box(Pp.domain)
    d = len(loP)
    big = dict(zip(Pp.sites, Pp.symbols))
    count = 0
    shifts = product(*(range(loQ[i] - hiP[i] - 1, hiQ[i] - loP[i] + 2) for i in range(d)))
    for x in shifts:
        ok = True
        for s, sym in zip(P.sites, P.symbols):
            t = tuple(sc + xc for sc, xc in zip(s, x))
            if t not in big or big[t] != sym:
                ok = False
                break
        if ok:
            count += 1
    return count


def random_connectedish_set(rng, d, max_size):
    """Random subset of a moderate box (may be scattered)."""
    side = rng.randint(2, 8 if d == 2 else 30)
    box = list(product(*(range(side) for _ in range(d))))
    size = rng.randint(1, min(max_size, len(box)))
    return frozenset(tuple(s) for s in rng.sample(box, size))


# ---------------------------------------------------------------------------
# cube / boundary / van Hove
# ---------------------------------------------------------------------------

def test_cube_examples():
    assert cube(1, 3) == frozenset({(0, 0, 0)})
    assert len(cube(3, 2)) == 9
    assert cube(4, 1) == site_set([(0,), (1,), (2,), (3,)])
    with pytest.raises(ValueError):
        cube(0, 1)


def test_boundary_interval():
    Q = site_set([(0,), (1,), (2,)])
    assert boundary(Q, 1) == site_set([(-1,), (0,), (2,), (3,)])


def test_boundary_c3_2d():
    b = boundary(cube(3, 2), 1)
    inner = {s for s in b if s in cube(3, 2)}
    outer = b - cube(3, 2)
    assert len(inner) == 8 and len(outer) == 16 and len(b) == 24


def test_boundary_single_site():
    assert boundary(site_set([(0,)]), 1) == site_set([(-1,), (0,), (1,)])


def test_boundary_matches_oracle_randomized():
    rng = random.Random(7)
    for _ in range(40):
        d = rng.choice([1, 2])
        Q = random_connectedish_set(rng, d, 60)
        M = rng.choice([1, 2])
        assert boundary(Q, M) == boundary_oracle(Q, M)


def test_boundary_matches_oracle_up_to_400_sites():
    rng = random.Random(401)
    for _ in range(4):
        box = list(product(range(25), range(25)))
        Q = frozenset(rng.sample(box, 400))
        assert boundary(Q, 1) == boundary_oracle(Q, 1)


def test_inner_boundary_subset():
    Q = cube(5, 2)
    assert inner_boundary(Q) <= Q
    assert len(inner_boundary(Q)) == 25 - 9


def test_van_hove_cubes_1d():
    seq = cube_sequence([2, 4, 8, 16], 1)
    ratios, monotone = van_hove_ratios(seq, 1)
    assert ratios == [Fraction(4, j) for j in (2, 4, 8, 16)]
    assert monotone


def test_van_hove_cubes_2d_oracle_counts():
    seq = cube_sequence([3, 4, 6, 8], 2)
    ratios, monotone = van_hove_ratios(seq, 1)
    # exhaustive scan gives inner 4j-4, outer 4j+4, total 8j
    assert ratios == [Fraction(8 * j, j * j) for j in (3, 4, 6, 8)]
    assert monotone


def test_van_hove_constant_sequence_not_monotone():
    seq = [cube(2, 1)] * 4
    ratios, monotone = van_hove_ratios(seq, 1)
    assert len(set(ratios)) == 1 and ratios[0] > 0
    assert not monotone


# ---------------------------------------------------------------------------
# colorings and restriction
# ---------------------------------------------------------------------------

def test_restrict_periodic_word():
    C = periodic_word("ab")
    P = C.restrict(site_set([(0,), (1,), (2,), (3,)]))
    assert P.symbols == ("a", "b", "a", "b")


def test_restrict_constant():
    C = periodic_word("a")
    P = C.restrict(cube(3, 1))
    assert set(P.symbols) == {"a"}


def test_restrict_window_background():
    C = WindowColoring(window={(0,): "x"}, background="b", dim=1)
    P = C.restrict(site_set([(5,), (6,)]))
    assert P.symbols == ("b", "b")


def test_periodic_coloring_periodicity():
    C = PeriodicColoring(period=(2, 3), cell={
        (x, y): "ab"[(x + y) % 2] for x in range(2) for y in range(3)
    })
    for site in [(0, 0), (1, 2), (-3, 7)]:
        shifted = (site[0] + 2, site[1] + 3)
        assert C.color(site) == C.color(shifted)


def test_random_coloring_deterministic_and_total():
    C = RandomColoring(seed=42, symbols=("a", "b"), weights=(0.5, 0.5), dim=2)
    v1 = [C.color((i, j)) for i in range(-5, 5) for j in range(-5, 5)]
    v2 = [C.color((i, j)) for i in range(-5, 5) for j in range(-5, 5)]
    assert v1 == v2
    assert set(v1) <= {"a", "b"}


def test_random_coloring_weight_validation():
    with pytest.raises(ValueError):
        RandomColoring(seed=1, symbols=("a", "b"), weights=(0.7, 0.7), dim=1)


# ---------------------------------------------------------------------------
# patterns, occurrences, enumeration
# ---------------------------------------------------------------------------

def test_pattern_canonical_translation():
    P = Pattern(((3,), (5,)), ("a", "b"))
    c = P.canonical()
    assert c.sites == ((0,), (2,))
    assert c.symbols == ("a", "b")


def test_occurrences_word_example():
    P = pattern_from_word("ab")
    Pp = pattern_from_word("ababab")
    assert occurrences(P, Pp) == 3


def test_occurrences_identity_and_too_big():
    P = pattern_from_word("abc")
    assert occurrences(P, P) == 1
    assert occurrences(pattern_from_word("abcd"), P) == 0


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 1),
    st.data(),
)
def test_occurrences_translation_invariance(dim_choice, data):
    d = dim_choice + 1
    rng = random.Random(data.draw(st.integers(0, 10**6)))
    C = RandomColoring(seed=rng.randint(0, 2**31), symbols=("a", "b"), weights=(0.5, 0.5), dim=d)
    P = C.restrict(cube(2, d))
    Pp = C.restrict(cube(4, d))
    x = tuple(rng.randint(-5, 5) for _ in range(d))
    assert occurrences(P, Pp) == occurrences(P.translated(x), Pp.translated(x))


def test_occurrences_matches_oracle_randomized():
    rng = random.Random(11)
    for _ in range(60):
        d = rng.choice([1, 2])
        C = RandomColoring(
            seed=rng.randint(0, 2**31),
            symbols=("a", "b"),
            weights=(0.5, 0.5),
            dim=d,
        )
        P = C.restrict(random_connectedish_set(rng, d, 6))
        Pp = C.restrict(random_connectedish_set(rng, d, 50))
        assert occurrences(P, Pp) == occurrences_oracle(P, Pp)


def test_enumerate_window_patterns_word():
    C = periodic_word("ab")
    tally = enumerate_window_patterns(C, cube(6, 1), 2)
    by_word = {"".join(p.symbols): k for p, k in tally.items()}
    assert by_word == {"ab": 3, "ba": 2}


def test_enumerate_constant_and_empty():
    C = periodic_word("a")
    tally = enumerate_window_patterns(C, cube(5, 1), 1)
    assert sum(tally.values()) == 5 and len(tally) == 1
    assert enumerate_window_patterns(C, cube(2, 1), 5) == {}


def test_enumerate_total_tally_formula():
    C = RandomColoring(seed=3, symbols=("a", "b"), weights=(0.5, 0.5), dim=2)
    for L, M in [(5, 2), (6, 3)]:
        tally = enumerate_window_patterns(C, cube(L, 2), M)
        assert sum(tally.values()) == (L - M + 1) ** 2


# ---------------------------------------------------------------------------
# frequencies
# ---------------------------------------------------------------------------

def test_frequency_exact_examples():
    C = periodic_word("ab")
    assert frequency_exact(C, pattern_from_word("a")) == Fraction(1, 2)
    assert frequency_exact(C, pattern_from_word("aa")) == 0
    const = periodic_word("a")
    assert frequency_exact(const, const.restrict(cube(3, 1))) == 1


def test_frequency_mode_dispatch():
    C = periodic_word("ab")
    assert frequency(C, pattern_from_word("b")) == Fraction(1, 2)
    rnd = RandomColoring(seed=1, symbols=("a", "b"), weights=(0.5, 0.5), dim=1)
    with pytest.raises(TypeError):
        frequency(rnd, pattern_from_word("a"), mode="exact-periodic")
    ratios, last = frequency(
        C, pattern_from_word("a"), mode="estimate-along",
        sequence=cube_sequence([4, 8], 1),
    )
    assert last == ratios[-1] == Fraction(4, 8)


def test_exact_table_sums_to_one():
    for word in ["ab", "aab", "abca"]:
        C = periodic_word(word)
        for M in (1, 2, 3):
            table = exact_frequency_table(C, M)
            assert table.total() == 1
            assert all(isinstance(v, Fraction) for v in table.entries.values())


def test_exact_table_2d():
    C = PeriodicColoring(period=(2, 2), cell={
        (0, 0): "a", (1, 0): "b", (0, 1): "b", (1, 1): "a"
    })
    table = exact_frequency_table(C, 1)
    assert table.total() == 1
    assert set(table.entries.values()) == {Fraction(1, 2)}


def test_estimated_table_normalization_is_window_fraction():
    C = periodic_word("ab")
    table = estimated_frequency_table(C, cube(10, 1), 2)
    # sum of occurrence ratios equals (#windows)/#U, approaching 1
    assert abs(float(table.total()) - 9 / 10) < 1e-12


def test_estimate_converges_to_exact():
    C = periodic_word("abc")
    P = pattern_from_word("ab")
    exact = frequency_exact(C, P)
    ratios, _ = frequency_estimate(C, P, cube_sequence([9, 27, 81], 1))
    errors = [abs(r - exact) for r in ratios]
    assert errors[-1] <= errors[0]
    assert float(errors[-1]) < 0.02


def test_frequency_table_serialization_round_trip_keys():
    C = periodic_word("ab")
    table = exact_frequency_table(C, 2)
    obj = table.to_json_dict()
    assert obj["M"] == 2 and obj["exact"] is True
    assert set(obj["entries"]) == {"0=a;1=b", "0=b;1=a"}
    assert obj["entries"]["0=a;1=b"] == {"num": 1, "den": 2}


def test_pattern_json_round_trip():
    P = Pattern(((0, 0), (1, 2)), ("a", "b"))
    again = Pattern.from_json_dict(P.to_json_dict())
    assert again == P
