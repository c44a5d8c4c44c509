"""Eigenvalue extraction, counting functions, and exact L^p step-function arithmetic.

Counting functions and all differences handled by the averaging engine are
genuinely piecewise constant, so L^p(I) quantities are computed exactly by
breakpoint merging, never by quadrature.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class EnergyWindow:
    """Closed finite energy interval I with an integrability exponent p."""

    lo: float
    hi: float
    p: float = 2.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.p < 1:
            raise ValueError(f"need p >= 1, got {self.p}")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def sup(self) -> float:
        return self.hi


class StepFunction:
    """Right-continuous piecewise-constant function with finitely many jumps.

    values[k] is the value on [breakpoints[k-1], breakpoints[k]); values[0]
    is the base value on (-inf, breakpoints[0]).  Instances are immutable.
    """

    __slots__ = ("breakpoints", "values")

    def __init__(self, breakpoints: Sequence[float], values: Sequence[float]):
        bp = np.asarray(breakpoints, dtype=float)
        va = np.asarray(values, dtype=float)
        if bp.ndim != 1 or va.ndim != 1:
            raise ValueError("breakpoints and values must be 1-d")
        if len(va) != len(bp) + 1:
            raise ValueError("need exactly one more value than breakpoints")
        if len(bp) and not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(va))):
            raise ValueError("breakpoints and values must be finite")
        bp.setflags(write=False)
        va.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", va)

    def __setattr__(self, *a):
        raise AttributeError("StepFunction is immutable")

    def __repr__(self):
        return f"StepFunction(breakpoints={self.breakpoints.tolist()}, values={self.values.tolist()})"

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self):
        return hash((self.breakpoints.tobytes(), self.values.tobytes()))

    @staticmethod
    def constant(value: float) -> "StepFunction":
        return StepFunction([], [value])

    def __call__(self, x) -> np.ndarray | float:
        idx = np.searchsorted(self.breakpoints, x, side="right")
        return self.values[idx]

    def scale(self, factor: float) -> "StepFunction":
        if not factor > 0:
            raise ValueError(f"scale factor must be positive, got {factor}")
        return StepFunction(self.breakpoints, self.values * factor)

    def coalesce(self, tol: float) -> "StepFunction":
        """Merge breakpoint clusters closer than tol into single jumps.

        Values on the dropped sub-tol segments are discarded; outside the
        clusters the function is unchanged.  Used to remove measure-zero
        spikes where analytically equal jump locations split at machine
        precision.
        """
        bp = self.breakpoints
        if len(bp) < 2:
            return self
        keep_bp: list[float] = [float(bp[0])]
        keep_val: list[float] = [float(self.values[0])]
        cluster_end_value = float(self.values[1])
        for i in range(1, len(bp)):
            if bp[i] - keep_bp[-1] <= tol:
                cluster_end_value = float(self.values[i + 1])
            else:
                keep_val.append(cluster_end_value)
                keep_bp.append(float(bp[i]))
                cluster_end_value = float(self.values[i + 1])
        keep_val.append(cluster_end_value)
        return StepFunction(keep_bp, keep_val)

    def is_counting_like(self) -> bool:
        """Nondecreasing, nonnegative, integer-valued: a counting function."""
        v = self.values
        return (
            bool(np.all(v >= 0))
            and bool(np.all(np.diff(v) >= 0))
            and bool(np.all(np.abs(v - np.round(v)) < 1e-9))
        )

    def to_csv(self, window: "EnergyWindow | None" = None, scale: float | None = None) -> str:
        """CSV serialization: metadata header, then (breakpoint, value) rows.

        The base value is written with breakpoint label '-inf'.
        """
        buf = io.StringIO()
        meta = []
        if window is not None:
            meta.append(f"interval={window.lo!r}:{window.hi!r}")
            meta.append(f"p={window.p!r}")
        if scale is not None:
            meta.append(f"scale={scale!r}")
        buf.write("# " + " ".join(meta) + "\n" if meta else "#\n")
        buf.write("breakpoint,value\n")
        buf.write(f"-inf,{float(self.values[0])!r}\n")
        for b, v in zip(self.breakpoints, self.values[1:]):
            buf.write(f"{float(b)!r},{float(v)!r}\n")
        return buf.getvalue()


def counting_function(eigs: Sequence[float], window: EnergyWindow) -> StepFunction:
    """lambda -> #{k : E_k <= lambda} restricted to the window.

    Jumps only at eigenvalues inside [lo, hi]; the base value counts the
    eigenvalues strictly below lo (needed by spectral-shift differences).
    """
    e = np.asarray(sorted(eigs), dtype=float)
    if len(e) and not np.all(np.isfinite(e)):
        raise ValueError("eigenvalues must be finite")
    base = int(np.searchsorted(e, window.lo, side="left"))
    inside = e[(e >= window.lo) & (e <= window.hi)]
    bp, mult = np.unique(inside, return_counts=True)
    values = base + np.concatenate([[0], np.cumsum(mult)])
    out = StepFunction(bp, values.astype(float))
    if not out.is_counting_like():
        raise ValueError("constructed counting function violates its invariants")
    return out


def merge_breakpoints(functions: Sequence[StepFunction]) -> np.ndarray:
    if not functions:
        return np.asarray([], dtype=float)
    return np.unique(np.concatenate([f.breakpoints for f in functions]))


def _segment_values(f: StepFunction, merged: np.ndarray) -> np.ndarray:
    """Values of f on the len(merged)+1 segments cut by the merged breakpoints."""
    if len(merged) == 0:
        return f.values.copy()
    idx = np.searchsorted(f.breakpoints, merged, side="right")
    return f.values[np.concatenate([[0], idx])]


def linear_combination(
    functions: Sequence[StepFunction], coefficients: Sequence[float]
) -> StepFunction:
    """Exact pointwise sum(c_i * f_i) as a step function."""
    if len(functions) != len(coefficients):
        raise ValueError("functions and coefficients must be parallel")
    if not functions:
        return StepFunction.constant(0.0)
    merged = merge_breakpoints(functions)
    total = np.zeros(len(merged) + 1)
    for f, c in zip(functions, coefficients):
        total += c * _segment_values(f, merged)
    return StepFunction(merged, total)


def subtract(f: StepFunction, g: StepFunction) -> StepFunction:
    return linear_combination([f, g], [1.0, -1.0])


def _segments_in_window(
    breakpoints: np.ndarray, window: EnergyWindow
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Segment edges and left endpoints covering [lo, hi] split at breakpoints."""
    inner = breakpoints[(breakpoints > window.lo) & (breakpoints < window.hi)]
    edges = np.concatenate([[window.lo], inner, [window.hi]])
    lengths = np.diff(edges)
    lefts = edges[:-1]
    return edges, lefts, lengths


def integrate_transform(
    f: StepFunction, window: EnergyWindow, transform: Callable[[np.ndarray], np.ndarray]
) -> float:
    """Exact integral over the window of transform(f(lambda)) d lambda."""
    _, lefts, lengths = _segments_in_window(f.breakpoints, window)
    vals = f(lefts)
    return float(np.sum(transform(vals) * lengths))


def integrate_product(f: StepFunction, g: StepFunction, window: EnergyWindow) -> float:
    """Exact integral over the window of f(lambda) g(lambda) d lambda."""
    merged = merge_breakpoints([f, g])
    _, lefts, lengths = _segments_in_window(merged, window)
    return float(np.sum(f(lefts) * g(lefts) * lengths))


def lp_distance(f: StepFunction, g: StepFunction, window: EnergyWindow) -> float:
    """Exact L^p(I) distance, computed by breakpoint merging."""
    diff = subtract(f, g)
    p = window.p
    total = integrate_transform(diff, window, lambda v: np.abs(v) ** p)
    return float(total ** (1.0 / p))


def lp_norm(f: StepFunction, window: EnergyWindow) -> float:
    return lp_distance(f, StepFunction.constant(0.0), window)


# ---------------------------------------------------------------------------
# Eigenvalue backends
# ---------------------------------------------------------------------------

def assert_hermitian(H: np.ndarray, rtol: float = 1e-12) -> None:
    scale = max(float(np.max(np.abs(H))), 1.0)
    dev = float(np.max(np.abs(H - H.conj().T)))
    if dev > rtol * scale:
        raise ValueError(f"matrix is not Hermitian: max deviation {dev}")


def eigenvalues(H: np.ndarray, ceiling: float = np.inf) -> np.ndarray:
    """All eigenvalues <= ceiling, sorted ascending with multiplicity.

    Full dense decomposition; exact counts are required downstream, so no
    iterative backend that might miss eigenvalues is used here.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("matrix entries must be finite")
    assert_hermitian(H)
    eigs = np.linalg.eigvalsh(H)
    return eigs[eigs <= ceiling]


def eigensystem(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition (ascending eigenvalues, orthonormal columns)."""
    H = np.asarray(H)
    assert_hermitian(H)
    return np.linalg.eigh(H)


def count_below_by_inertia(H: np.ndarray, T: float) -> int:
    """#{eigenvalues <= T} via the inertia of an LDL^T factorization.

    Independent shift-count cross-check for the dense decomposition; ties at
    exactly T are counted by nonpositivity of the block eigenvalues.
    """
    H = np.asarray(H)
    shifted = H - T * np.eye(H.shape[0], dtype=H.dtype)
    _, D, _ = scipy.linalg.ldl(shifted)
    count = 0
    i, m = 0, D.shape[0]
    while i < m:
        if i + 1 < m and (D[i, i + 1] != 0 or D[i + 1, i] != 0):
            block = D[i : i + 2, i : i + 2]
            block = (block + block.conj().T) / 2
            count += int(np.sum(np.linalg.eigvalsh(block) <= 0))
            i += 2
        else:
            if D[i, i].real <= 0:
                count += 1
            i += 1
    return count


def dirichlet_chain_eigenvalues(num_cells: int, resolution: int) -> np.ndarray:
    """Analytic spectrum of the 1-d finite-difference Dirichlet Laplacian.

    Interval of length L = num_cells at spacing h = 1/resolution carries
    n*L - 1 interior points with eigenvalues (2/h^2)(1 - cos(k pi h / L)).
    """
    L, n = num_cells, resolution
    h = 1.0 / n
    k = np.arange(1, n * L)
    return (2.0 / h**2) * (1.0 - np.cos(k * np.pi * h / L))
