"""Spectral shift functions of facet perturbations and their integral bounds.

A facet Dirichlet condition removes grid points, so the restricted operator
is a principal submatrix and interlacing makes the shift function a
nonnegative integer-valued step function.  The heat-semigroup difference
V_eff = exp(-H_restricted) - exp(-H) is the compact object whose singular
values control every integral bound here; its decay law is fitted, and the
convex-gauge (Legendre/Young) machinery converts the decay into bounds on
integrals of the shift function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.integrate

from .operators import OperatorSpec, discretize, grid_points
from .spectral import (
    EnergyWindow,
    StepFunction,
    counting_function,
    eigensystem,
    eigenvalues,
    integrate_product,
    integrate_transform,
    subtract,
)

SINGULAR_VALUE_FLOOR = 1e-13
DEFAULT_DENSE_CAP = 3000


@dataclass(frozen=True)
class SpectralShift:
    """xi(., B, A) = N(., A) - N(., B) with B the more restricted operator."""

    xi: StepFunction
    window: EnergyWindow

    def __post_init__(self):
        v = self.xi.values
        if np.any(np.abs(v - np.round(v)) > 1e-9):
            raise ValueError("spectral shift must have integer values")

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.xi.values >= -1e-12))


@dataclass(frozen=True)
class SingularValueSeries:
    """Decreasing singular values mu_n with provenance metadata."""

    mu: np.ndarray
    source: str = ""

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if np.any(mu < -1e-14):
            raise ValueError("singular values must be nonnegative")
        mu = np.clip(mu, 0.0, None)
        if np.any(np.diff(mu) > 1e-12 * max(1.0, float(mu[0]) if len(mu) else 1.0)):
            raise ValueError("singular values must be nonincreasing")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    def above_floor(self, floor: float = SINGULAR_VALUE_FLOOR) -> np.ndarray:
        return self.mu[self.mu >= floor]


def specs_facet_related(specA: OperatorSpec, specB: OperatorSpec) -> bool:
    """True iff specB is specA with additional Dirichlet facets."""
    same_family = (
        specA.Q == specB.Q
        and specA.backend == specB.backend
        and specA.resolution == specB.resolution
        and specA.coloring == specB.coloring
        and specA.library is specB.library
    )
    extra = set(specB.removed_facets) >= set(specA.removed_facets)
    return same_family and extra


def spectral_shift(
    specA: OperatorSpec, specB: OperatorSpec, window: EnergyWindow, tol: float = 1e-8
) -> SpectralShift:
    """Counting-function difference N(., A) - N(., B) on the window.

    Jump locations that coincide analytically can split at machine
    precision in the two decompositions; breakpoint clusters within tol are
    merged so the shift keeps its exact integer staircase form.
    """
    if not specs_facet_related(specA, specB):
        raise ValueError("specB must be specA plus extra Dirichlet facets")
    ha = discretize(specA)
    hb = discretize(specB)
    na = counting_function(eigenvalues(ha), window)
    nb = counting_function(eigenvalues(hb), window)
    return SpectralShift(xi=subtract(na, nb).coalesce(tol), window=window)


def _semigroup(H: np.ndarray) -> np.ndarray:
    """exp(-H) via the eigendecomposition (time parameter fixed to 1)."""
    w, U = eigensystem(H)
    return (U * np.exp(-w)) @ U.conj().T


def semigroup_difference_singular_values(
    HA: np.ndarray,
    HB: np.ndarray,
    embed: Sequence[int] | None = None,
    count: int | None = None,
) -> np.ndarray:
    """Singular values of exp(-HB) - exp(-HA), descending.

    When HB acts on a subset of HA's index set, embed gives HB's row/column
    positions inside HA's indexing and the semigroup of HB is padded with
    zeros at the removed indices (the removed states are absent, which is
    the discrete counterpart of restriction to the slit domain).
    """
    ea = _semigroup(HA)
    eb_small = _semigroup(HB)
    if embed is None:
        if HB.shape != HA.shape:
            raise ValueError("need embedding indices when dimensions differ")
        eb = eb_small
    else:
        if len(embed) != HB.shape[0]:
            raise ValueError("embedding index count must match HB's dimension")
        eb = np.zeros_like(ea)
        idx = np.asarray(embed, dtype=int)
        eb[np.ix_(idx, idx)] = eb_small
    veff = eb - ea
    mu = np.linalg.svd(veff, compute_uv=False)
    if count is not None:
        mu = mu[:count]
    return mu


def veff_singular_values(
    specA: OperatorSpec,
    specB: OperatorSpec,
    count: int | None = None,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> SingularValueSeries:
    """Top singular values of the facet-pair heat-semigroup difference."""
    if not specs_facet_related(specA, specB):
        raise ValueError("specB must be specA plus extra Dirichlet facets")
    ptsA = grid_points(specA)
    ptsB = grid_points(specB)
    if len(ptsA) > dense_cap:
        raise ValueError(
            f"matrix dimension {len(ptsA)} exceeds the dense cap {dense_cap}"
        )
    posA = {p: i for i, p in enumerate(ptsA)}
    embed = [posA[p] for p in ptsB]
    mu = semigroup_difference_singular_values(
        discretize(specA), discretize(specB), embed=embed, count=count
    )
    src = (
        f"facets+{len(specB.removed_facets) - len(specA.removed_facets)}"
        f" dim={len(ptsA)} n={specA.resolution}"
    )
    return SingularValueSeries(mu=mu, source=src)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of log mu_n against -n^(1/d)."""

    c_hat: float
    C2_hat: float
    C2_covered: float
    max_residual: float
    points_used: int
    envelope_ok: bool


def fit_decay(
    series: SingularValueSeries,
    d: int,
    floor: float = SINGULAR_VALUE_FLOOR,
    envelope_slack: float = 0.05,
) -> DecayFit:
    """Fit mu_n <= C2 exp(-c n^(1/d)) as a one-sided envelope.

    Log-linear least squares over values above the floor; the intercept is
    then inflated to cover the largest positive residual so the envelope
    (with the extra multiplicative slack) dominates every fitted point.
    """
    mu = series.above_floor(floor)
    if len(mu) < 10:
        raise ValueError(
            f"need at least 10 singular values above {floor}, got {len(mu)}"
        )
    n = np.arange(1, len(mu) + 1, dtype=float)
    x = n ** (1.0 / d)
    y = np.log(mu)
    slope, intercept = np.polyfit(x, y, 1)
    c_hat = -float(slope)
    C2_hat = float(np.exp(intercept))
    residuals = y - (intercept + slope * x)
    max_residual = float(np.max(residuals))
    C2_covered = C2_hat * math.exp(max(0.0, max_residual))
    envelope = (1.0 + envelope_slack) * C2_covered * np.exp(-c_hat * x)
    envelope_ok = bool(np.all(mu <= envelope))
    return DecayFit(
        c_hat=c_hat,
        C2_hat=C2_hat,
        C2_covered=C2_covered,
        max_residual=max_residual,
        points_used=int(len(mu)),
        envelope_ok=envelope_ok,
    )


# ---------------------------------------------------------------------------
# Convex gauges and the Legendre transform
# ---------------------------------------------------------------------------

class ConvexGauge:
    """Convex F: [0, inf) -> [0, inf) with F(0) = 0."""

    def __call__(self, x):
        raise NotImplementedError

    def increments(self, count: int) -> np.ndarray:
        """phi(n) = F(n) - F(n-1) for n = 1..count."""
        n = np.arange(0, count + 1, dtype=float)
        vals = np.asarray(self(n), dtype=float)
        return np.diff(vals)


@dataclass(frozen=True)
class PowerLawGauge(ConvexGauge):
    """F(x) = x^(q+1), q > 0; pairs with polynomially decaying singular values."""

    q: float

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError(f"power-law exponent q must be positive, got {self.q}")

    def __call__(self, x):
        return np.asarray(x, dtype=float) ** (self.q + 1.0)


@dataclass(frozen=True)
class PowerGauge(ConvexGauge):
    """F(x) = x^p with p >= 1 (the choice feeding the per-facet L^p bound)."""

    p: float

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"need p >= 1, got {self.p}")

    def __call__(self, x):
        return np.asarray(x, dtype=float) ** self.p


@dataclass(frozen=True)
class ExponentialGauge(ConvexGauge):
    """F(x) = integral_0^x (exp(t y^p) - 1) dy, t > 0, p > 0.

    The matching choice when the singular values decay like exp(-c n^p)
    with t < c.
    """

    t: float
    p: float

    def __post_init__(self):
        if not (self.t > 0 and self.p > 0):
            raise ValueError("exponential gauge needs t > 0 and p > 0")

    def _scalar(self, x: float) -> float:
        if x == 0:
            return 0.0
        val, _ = scipy.integrate.quad(lambda y: math.expm1(self.t * y**self.p), 0.0, x)
        return val

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            return self._scalar(float(arr))
        return np.asarray([self._scalar(v) for v in arr])


@dataclass(frozen=True)
class TabulatedGauge(ConvexGauge):
    """Convex samples (x_i, F_i) on an increasing grid with F(0) = 0."""

    xs: np.ndarray
    Fs: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        Fs = np.asarray(self.Fs, dtype=float)
        if xs[0] != 0 or Fs[0] != 0:
            raise ValueError("tabulated gauge must start at F(0) = 0")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("sample grid must be strictly increasing")
        slopes = np.diff(Fs) / np.diff(xs)
        if np.any(np.diff(slopes) < -1e-12):
            raise ValueError("tabulated samples are not convex")
        if np.any(np.diff(Fs) < -1e-12):
            raise ValueError("tabulated gauge must be nondecreasing")
        xs.setflags(write=False)
        Fs.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "Fs", Fs)

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.Fs)


@dataclass(frozen=True)
class LegendreTransform:
    """G(y) = sup_{x >= 0} (x y - F(x)) with evaluation metadata.

    For power-law gauges the closed form is exact; for exponential gauges
    the evaluator is the standard upper bound y * (log(1+y)/t)^(1/p); for
    tabulated gauges it is a sup over the sample grid, flagged unbounded
    when the sup escapes through the last grid point.
    """

    kind: str
    evaluator: object
    is_upper_bound: bool = False

    def __call__(self, y):
        return self.evaluator(y)

    def unbounded_at(self, y) -> np.ndarray:
        """Only meaningful for tabulated gauges; elsewhere always False."""
        arr = np.atleast_1d(np.asarray(y, dtype=float))
        if self.kind != "tabulated":
            return np.zeros_like(arr, dtype=bool)
        return self.evaluator.escape_mask(arr)


@dataclass(frozen=True)
class _TabulatedLegendre:
    xs: np.ndarray
    Fs: np.ndarray

    def __call__(self, y):
        arr = np.atleast_1d(np.asarray(y, dtype=float))
        vals = arr[:, None] * self.xs[None, :] - self.Fs[None, :]
        out = np.max(vals, axis=1)
        return out if np.asarray(y).ndim else float(out[0])

    def escape_mask(self, arr: np.ndarray) -> np.ndarray:
        vals = arr[:, None] * self.xs[None, :] - self.Fs[None, :]
        return np.argmax(vals, axis=1) == len(self.xs) - 1


def legendre(F: ConvexGauge) -> LegendreTransform:
    """Legendre transform of a convex gauge."""
    if isinstance(F, PowerLawGauge):
        q = F.q

        def G(y):
            y = np.asarray(y, dtype=float)
            return q * (y / (q + 1.0)) ** ((q + 1.0) / q)

        return LegendreTransform(kind="power-law", evaluator=G)
    if isinstance(F, PowerGauge):
        if F.p == 1.0:
            # F(x) = x: transform is 0 on [0, 1], +inf beyond.
            def G1(y):
                y = np.asarray(y, dtype=float)
                out = np.where(y <= 1.0, 0.0, np.inf)
                return out

            return LegendreTransform(kind="power-law", evaluator=G1)
        q = F.p - 1.0

        def Gp(y):
            y = np.asarray(y, dtype=float)
            return q * (y / (q + 1.0)) ** ((q + 1.0) / q)

        return LegendreTransform(kind="power-law", evaluator=Gp)
    if isinstance(F, ExponentialGauge):
        t, p = F.t, F.p

        def Gexp(y):
            y = np.asarray(y, dtype=float)
            return y * (np.log1p(y) / t) ** (1.0 / p)

        return LegendreTransform(kind="exponential", evaluator=Gexp, is_upper_bound=True)
    if isinstance(F, TabulatedGauge):
        return LegendreTransform(
            kind="tabulated", evaluator=_TabulatedLegendre(F.xs, F.Fs)
        )
    raise TypeError(f"no Legendre rule for gauge {type(F).__name__}")


def legendre_grid_sup(F: ConvexGauge, y, x_max: float, samples: int = 200_001) -> float:
    """Brute-force sup_x (x y - F(x)) over a dense grid (independent oracle)."""
    xs = np.linspace(0.0, x_max, samples)
    return float(np.max(xs * y - np.asarray(F(xs), dtype=float)))


# ---------------------------------------------------------------------------
# Integral bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HsBound:
    """Value of exp(T) * sum_n phi(n) mu_n with a tail-convergence flag."""

    value: float
    tail_ok: bool
    terms: int


def hs_bound(
    series: SingularValueSeries,
    F: ConvexGauge,
    T: float,
    tail_tol: float = 1e-14,
) -> HsBound:
    """Upper bound exp(T) <phi, mu> for the integral of F(|xi|) below T."""
    mu = series.mu
    if len(mu) == 0:
        return HsBound(value=0.0, tail_ok=True, terms=0)
    phi = F.increments(len(mu))
    # Vanished singular values contribute nothing even when phi overflows.
    terms = np.zeros_like(mu)
    mask = mu > 0
    terms[mask] = phi[mask] * mu[mask]
    total = float(np.sum(terms))
    # Divergence diagnostic: the partial sums have settled when the last
    # term is negligible or the terms are still decaying at the tail.
    tail = terms[-min(5, len(terms)):]
    tail_ok = bool(
        terms[-1] <= max(tail_tol, tail_tol * abs(total))
        or np.all(np.diff(tail) <= 0)
    )
    return HsBound(value=float(math.exp(T) * total), tail_ok=tail_ok, terms=len(mu))


def ssf_lp_integral(shift: SpectralShift, p: float) -> float:
    """Direct integral over the window of |xi|^p (exact, piecewise)."""
    return integrate_transform(
        shift.xi, shift.window, lambda v: np.abs(v) ** p
    )


def facet_ssf_norm_bound(
    series: SingularValueSeries, window: EnergyWindow
) -> float:
    """Per-facet shift-norm constant (exp(T) <phi, mu>)^(1/p).

    Upper bound on the L^p(I) norm of any single facet's shift function,
    computed once per experiment from a designated single-facet pair; it is
    the scale entering the boundary term of the averaging engine.
    """
    bound = hs_bound(series, PowerGauge(window.p), window.sup)
    return float(bound.value ** (1.0 / window.p))


def young_check(
    h: StepFunction,
    shift: SpectralShift,
    F: ConvexGauge,
    series: SingularValueSeries,
) -> tuple[float, float]:
    """(lhs, rhs) of the Young-type bound: integral of h*xi vs hs_bound + integral of G(|h|)."""
    window = shift.window
    lhs = integrate_product(h, shift.xi, window)
    G = legendre(F)
    g_term = integrate_transform(h, window, lambda v: np.asarray(G(np.abs(v))))
    rhs = hs_bound(series, F, window.sup).value + g_term
    return float(lhs), float(rhs)


def weyl_check(
    eigs: Sequence[float],
    volume: float,
    delta: float = 0.0,
    C1: float = 0.0,
    d: int = 1,
) -> float:
    """Worst margin of the Weyl-type lower bound over the listed eigenvalues.

    margin_n = E_n - (2 pi (1-delta) d / e) (n / volume)^(2/d) + C1; the
    minimum over n is returned, +inf for an empty list (vacuous bound).
    """
    e = np.asarray(sorted(eigs), dtype=float)
    if len(e) == 0:
        return math.inf
    if not 0 <= delta < 1:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    n = np.arange(1, len(e) + 1, dtype=float)
    lower = (2.0 * math.pi * (1.0 - delta) * d / math.e) * (n / volume) ** (2.0 / d)
    return float(np.min(e - lower + C1))
