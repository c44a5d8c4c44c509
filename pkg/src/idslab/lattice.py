"""Lattice combinatorics: sites, cubes, boundaries, colorings, patterns, frequencies.

Sites are plain integer tuples, finite site sets are frozensets of such
tuples.  Everything here is exact integer / rational arithmetic; nothing
touches floating point except pseudorandom color draws.
"""

from __future__ import annotations

import hashlib
import json
import struct
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence

Site = tuple[int, ...]
SiteSet = frozenset


def site_set(sites: Iterable[Sequence[int]]) -> frozenset[Site]:
    """Normalize an iterable of coordinate sequences to a frozenset of sites."""
    out = frozenset(tuple(int(c) for c in s) for s in sites)
    if out:
        dims = {len(s) for s in out}
        if len(dims) > 1:
            raise ValueError(f"mixed dimensions in site set: {sorted(dims)}")
    return out


def dimension_of(sites: frozenset[Site]) -> int:
    if not sites:
        raise ValueError("empty site set has no dimension")
    return len(next(iter(sites)))


def translate(sites: frozenset[Site], x: Site) -> frozenset[Site]:
    return frozenset(tuple(s + dx for s, dx in zip(p, x)) for p in sites)


def cube(M: int, d: int) -> frozenset[Site]:
    """C_M: the cube {0 <= x_j <= M-1} in Z^d, cardinality M^d."""
    if M < 1:
        raise ValueError(f"cube side parameter must be >= 1, got {M}")
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return frozenset(product(range(M), repeat=d))


def bounding_box(sites: frozenset[Site]) -> tuple[Site, Site]:
    """Componentwise (min, max) corners of the set's bounding box."""
    d = dimension_of(sites)
    lo = tuple(min(s[i] for s in sites) for i in range(d))
    hi = tuple(max(s[i] for s in sites) for i in range(d))
    return lo, hi


def _ball_offsets(M: int, d: int) -> list[Site]:
    return list(product(range(-M, M + 1), repeat=d))


def boundary(Q: frozenset[Site], M: int) -> frozenset[Site]:
    """Two-sided combinatorial M-boundary of Q in the Chebyshev metric.

    Sites of Q within distance M of the complement, together with sites of
    the complement within distance M of Q.
    """
    if not Q:
        raise ValueError("boundary of the empty set is undefined")
    if M < 1:
        raise ValueError(f"boundary width must be >= 1, got {M}")
    d = dimension_of(Q)
    offsets = _ball_offsets(M, d)
    dilation = {tuple(q[i] + o[i] for i in range(d)) for q in Q for o in offsets}
    outer = dilation - Q
    inner = {
        q for q in Q
        if any(tuple(q[i] + o[i] for i in range(d)) not in Q for o in offsets)
    }
    return frozenset(inner | outer)


def inner_boundary(Q: frozenset[Site], M: int = 1) -> frozenset[Site]:
    """Sites of Q within Chebyshev distance M of the complement.

    This is the boundary notion entering the boundary term b(Q); it is
    always a subset of Q, so b(Q) <= D * #Q holds with D independent of Q.
    """
    if not Q:
        raise ValueError("boundary of the empty set is undefined")
    d = dimension_of(Q)
    offsets = _ball_offsets(M, d)
    return frozenset(
        q for q in Q
        if any(tuple(q[i] + o[i] for i in range(d)) not in Q for o in offsets)
    )


def van_hove_ratios(sequence: Sequence[frozenset[Site]], M: int) -> tuple[list[Fraction], bool]:
    """Boundary-to-volume ratios #boundary(U_j, M) / #U_j along a sequence.

    Returns the ratios and a flag telling whether they are monotone
    nonincreasing from the second element on (a cheap van Hove diagnostic).
    """
    ratios = [Fraction(len(boundary(U, M)), len(U)) for U in sequence]
    tail = ratios[1:]
    monotone = all(b <= a for a, b in zip(tail, tail[1:])) and (
        len(ratios) < 2 or ratios[-1] < ratios[0] or ratios[0] == 0
    )
    return ratios, monotone


# ---------------------------------------------------------------------------
# Patterns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pattern:
    """A finite lattice domain with an alphabet symbol at every domain site.

    Stored as the lexicographically sorted site tuple plus the parallel
    symbol tuple, which makes patterns hashable and cheap to compare.
    """

    sites: tuple[Site, ...]
    symbols: tuple[str, ...]

    def __post_init__(self):
        if len(self.sites) != len(self.symbols):
            raise ValueError("sites and symbols must be parallel")
        if not self.sites:
            raise ValueError("pattern domain must be nonempty")
        if list(self.sites) != sorted(set(self.sites)):
            raise ValueError("pattern sites must be sorted and distinct")

    @staticmethod
    def from_assignment(assignment: Mapping[Sequence[int], str]) -> "Pattern":
        items = sorted((tuple(int(c) for c in s), str(a)) for s, a in assignment.items())
        return Pattern(tuple(s for s, _ in items), tuple(a for _, a in items))

    @property
    def domain(self) -> frozenset[Site]:
        return frozenset(self.sites)

    @property
    def dimension(self) -> int:
        return len(self.sites[0])

    def assignment(self) -> dict[Site, str]:
        return dict(zip(self.sites, self.symbols))

    def color(self, site: Site) -> str:
        try:
            return self.assignment()[site]
        except KeyError:
            raise KeyError(f"site {site} outside pattern domain") from None

    def translated(self, x: Site) -> "Pattern":
        sites = tuple(tuple(s + dx for s, dx in zip(p, x)) for p in self.sites)
        return Pattern(sites, self.symbols)

    def canonical(self) -> "Pattern":
        """Representative of the translation class: bounding-box min corner at 0."""
        lo, _ = bounding_box(self.domain)
        return self.translated(tuple(-c for c in lo))

    def to_json_dict(self) -> dict:
        return {"domain": [list(s) for s in self.sites], "symbols": list(self.symbols)}

    @staticmethod
    def from_json_dict(obj: Mapping) -> "Pattern":
        return Pattern(
            tuple(tuple(int(c) for c in s) for s in obj["domain"]),
            tuple(str(a) for a in obj["symbols"]),
        )

    def key(self) -> str:
        """Deterministic string key for the canonical class (used in tables)."""
        c = self.canonical()
        return ";".join(
            ",".join(str(v) for v in s) + "=" + a for s, a in zip(c.sites, c.symbols)
        )


def pattern_from_word(word: str) -> Pattern:
    """1-d pattern on {0..len-1} with symbols given by the word's characters."""
    return Pattern(tuple((i,) for i in range(len(word))), tuple(word))


# ---------------------------------------------------------------------------
# Colorings
# ---------------------------------------------------------------------------

class Coloring:
    """Total map from Z^d to a finite alphabet, realized by a lazy generator."""

    alphabet: tuple[str, ...]
    dimension: int

    def color(self, site: Site) -> str:
        raise NotImplementedError

    def restrict(self, Q: frozenset[Site]) -> Pattern:
        if not Q:
            raise ValueError("cannot restrict to the empty set")
        sites = tuple(sorted(Q))
        return Pattern(sites, tuple(self.color(s) for s in sites))


@dataclass(frozen=True)
class PeriodicColoring(Coloring):
    """Coloring invariant under translation by period * e_i for every axis."""

    period: tuple[int, ...]
    cell: Mapping[Site, str]
    alphabet: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if any(p < 1 for p in self.period):
            raise ValueError(f"period components must be >= 1, got {self.period}")
        expected = set(product(*(range(p) for p in self.period)))
        if set(self.cell) != expected:
            raise ValueError("cell assignment must cover exactly one period cell")
        if not self.alphabet:
            object.__setattr__(self, "alphabet", tuple(sorted(set(self.cell.values()))))

    @property
    def dimension(self) -> int:
        return len(self.period)

    @property
    def cell_volume(self) -> int:
        v = 1
        for p in self.period:
            v *= p
        return v

    def color(self, site: Site) -> str:
        return self.cell[tuple(c % p for c, p in zip(site, self.period))]


def periodic_word(word: str) -> PeriodicColoring:
    """1-d periodic coloring repeating the given word, e.g. 'ab'."""
    cell = {(i,): ch for i, ch in enumerate(word)}
    return PeriodicColoring(period=(len(word),), cell=cell)


@dataclass(frozen=True)
class WindowColoring(Coloring):
    """Explicit finite window with a declared background symbol elsewhere."""

    window: Mapping[Site, str]
    background: str
    dim: int
    alphabet: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.alphabet:
            syms = set(self.window.values()) | {self.background}
            object.__setattr__(self, "alphabet", tuple(sorted(syms)))

    @property
    def dimension(self) -> int:
        return self.dim

    def color(self, site: Site) -> str:
        return self.window.get(site, self.background)


def _site_uniform(seed: int, site: Site) -> float:
    """Deterministic uniform draw in [0, 1) keyed by (seed, site).

    Counter-based: the same site always hashes to the same value, so
    overlapping windows and any evaluation order see a consistent coloring.
    """
    buf = struct.pack(f"<q{len(site)}q", seed & 0x7FFFFFFFFFFFFFFF, *site)
    digest = hashlib.blake2b(buf, digest_size=8).digest()
    return int.from_bytes(digest, "little") / 2.0 ** 64


@dataclass(frozen=True)
class RandomColoring(Coloring):
    """Seeded i.i.d. coloring; color at a site is a pure function of (seed, site)."""

    seed: int
    symbols: tuple[str, ...]
    weights: tuple[float, ...]
    dim: int

    def __post_init__(self):
        if len(self.symbols) != len(self.weights):
            raise ValueError("symbols and weights must be parallel")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {sum(self.weights)}")

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.symbols

    @property
    def dimension(self) -> int:
        return self.dim

    def color(self, site: Site) -> str:
        u = _site_uniform(self.seed, site)
        acc = 0.0
        for sym, w in zip(self.symbols, self.weights):
            acc += w
            if u < acc:
                return sym
        return self.symbols[-1]


# ---------------------------------------------------------------------------
# Occurrence counting and window enumeration
# ---------------------------------------------------------------------------

def occurrences(P: Pattern, P_prime: Pattern) -> int:
    """Number of translates x with D(P)+x inside D(P') matching P' there."""
    if len(P.sites) > len(P_prime.sites):
        return 0
    big = dict(zip(P_prime.sites, P_prime.symbols))
    anchor = P.sites[0]
    count = 0
    for y in P_prime.sites:
        x = tuple(yc - ac for yc, ac in zip(y, anchor))
        ok = True
        for s, sym in zip(P.sites, P.symbols):
            t = tuple(sc + xc for sc, xc in zip(s, x))
            if big.get(t) != sym:
                ok = False
                break
        if ok:
            count += 1
    return count


def enumerate_window_patterns(
    C: Coloring, U: frozenset[Site], M: int
) -> Counter[Pattern]:
    """Tally canonical M-window patterns of C over all windows inside U.

    For every x with C_M + x contained in U, the canonicalized restriction
    of C to that window is counted once; the total tally equals the number
    of admissible x.
    """
    if M < 1:
        raise ValueError(f"window parameter must be >= 1, got {M}")
    if not U:
        return Counter()
    d = dimension_of(U)
    offsets = sorted(cube(M, d))
    lo, hi = bounding_box(U)
    tally: Counter[tuple[str, ...]] = Counter()
    ranges = [range(lo[i], hi[i] - M + 2) for i in range(d)]
    for x in product(*ranges):
        window = [tuple(x[i] + o[i] for i in range(d)) for o in offsets]
        if all(w in U for w in window):
            tally[tuple(C.color(w) for w in window)] += 1
    sites = tuple(offsets)
    return Counter({Pattern(sites, syms): k for syms, k in tally.items()})


def frequency_exact(C: PeriodicColoring, P: Pattern) -> Fraction:
    """Exact frequency of P in a periodic coloring: occurrences per period cell."""
    if not isinstance(C, PeriodicColoring):
        raise TypeError("exact frequencies require a periodic coloring")
    hits = 0
    for x in product(*(range(p) for p in C.period)):
        if all(
            C.color(tuple(sc + xc for sc, xc in zip(s, x))) == sym
            for s, sym in zip(P.sites, P.symbols)
        ):
            hits += 1
    return Fraction(hits, C.cell_volume)


def frequency_estimate(
    C: Coloring, P: Pattern, sequence: Sequence[frozenset[Site]]
) -> tuple[list[Fraction], Fraction]:
    """Occurrence ratios #_P(C|U_j) / #U_j along a sequence; last value returned too."""
    if not sequence:
        raise ValueError("need at least one set to estimate a frequency")
    ratios = [
        Fraction(occurrences(P, C.restrict(U)), len(U)) for U in sequence
    ]
    return ratios, ratios[-1]


@dataclass(frozen=True)
class FrequencyTable:
    """Frequencies of canonical M-window pattern classes.

    Exact tables hold rationals that sum to 1; estimated tables hold floats
    plus the window count they were measured from.
    """

    M: int
    entries: Mapping[Pattern, Fraction | float]
    exact: bool
    sample_windows: int = 0

    def __post_init__(self):
        for P, v in self.entries.items():
            if not (0 <= v <= 1):
                raise ValueError(f"frequency {v} for {P.key()} outside [0, 1]")

    def total(self):
        return sum(self.entries.values())

    def to_json_dict(self) -> dict:
        out: dict = {"M": self.M, "exact": self.exact, "entries": {}}
        if not self.exact:
            out["sample_windows"] = self.sample_windows
        for P in sorted(self.entries, key=lambda p: p.key()):
            v = self.entries[P]
            if isinstance(v, Fraction):
                out["entries"][P.key()] = {"num": v.numerator, "den": v.denominator}
            else:
                out["entries"][P.key()] = float(v)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)


def exact_frequency_table(C: PeriodicColoring, M: int) -> FrequencyTable:
    """Table of all M-window classes with nonzero frequency, exact rationals."""
    d = C.dimension
    offsets = sorted(cube(M, d))
    tally: Counter[Pattern] = Counter()
    for x in product(*(range(p) for p in C.period)):
        window = Pattern(
            tuple(offsets),
            tuple(C.color(tuple(x[i] + o[i] for i in range(d))) for o in offsets),
        )
        tally[window] += 1
    vol = C.cell_volume
    entries = {P: Fraction(k, vol) for P, k in tally.items()}
    return FrequencyTable(M=M, entries=entries, exact=True)


def estimated_frequency_table(C: Coloring, U: frozenset[Site], M: int) -> FrequencyTable:
    """Table estimated from one finite window U, normalized by #U per the limit formula."""
    tally = enumerate_window_patterns(C, U, M)
    vol = len(U)
    entries = {P: k / vol for P, k in tally.items()}
    return FrequencyTable(
        M=M, entries=entries, exact=False, sample_windows=sum(tally.values())
    )


def frequency(
    C: Coloring,
    P: Pattern,
    mode: str = "exact-periodic",
    sequence: Sequence[frozenset[Site]] | None = None,
):
    """Frequency of P in C.

    mode 'exact-periodic' needs a PeriodicColoring and returns a Fraction;
    mode 'estimate-along' needs a sequence and returns (ratios, last).
    """
    if mode == "exact-periodic":
        if not isinstance(C, PeriodicColoring):
            raise TypeError("exact-periodic mode requires a periodic coloring")
        return frequency_exact(C, P)
    if mode == "estimate-along":
        if sequence is None:
            raise ValueError("estimate-along mode requires a sequence")
        return frequency_estimate(C, P, sequence)
    raise ValueError(f"unknown frequency mode {mode!r}")


def cube_sequence(js: Sequence[int], d: int) -> list[frozenset[Site]]:
    """Van Hove sequence of cubes C_j for the given side parameters."""
    return [cube(j, d) for j in js]
