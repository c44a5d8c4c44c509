"""idslab: a numerical laboratory for integrated densities of states.

Finite-volume eigenvalue counting for Schrodinger operators whose
electromagnetic potential is determined by a lattice coloring, with exact
L^p step-function arithmetic, spectral-shift and singular-value machinery
for Dirichlet facet perturbations, an almost-additive averaging engine with
quantitative error bounds, and Monte Carlo estimation of the trace-per-unit-
volume formula for random colorings.
"""

__version__ = "0.1.0"
