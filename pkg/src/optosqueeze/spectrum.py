"""Stationary position-uncertainty spectrum of the damped effective model.

Two independent numerical routes are provided next to the closed form in
`analytic`:

* `spectrum_numeric` solves the frequency-domain Langevin system for
  (b(omega), b_dag(omega)) by direct 2x2 matrix inversion and applies the
  white-bath input correlations.  It never touches the closed-form
  numerator/denominator expressions.
* `spectrum_regression` works in the time domain instead: stationary
  covariances from the Lyapunov equation, then the resolvent form of the
  Wiener-Khinchin transform.

Both report the coefficient of delta(omega + omega') in <X(omega)
X(omega')>, which equals 2 pi times the Fourier transform of the
stationary autocorrelation <X(t + tau) X(t)>.  Agreement between the two
(they share no algebra beyond the model itself) is the backbone of the
spectrum tests.

The spectrum exists only when the damped drift is actually stable; in the
hyperbolic regime this requires gamma/2 to beat the growth rate, and both
routes refuse to evaluate otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from .analytic import UnstableRegimeError
from .model import ModelParams

__all__ = [
    "SpectrumSeries",
    "default_omega_grid",
    "spectrum_numeric",
    "spectrum_regression",
    "find_peaks",
    "trend_vs_geff",
]


@dataclass
class SpectrumSeries:
    """Spectral values on a strictly increasing grid, with located peaks.

    `omegas` is the index variable: frequency for spectra, the coupling
    for `trend_vs_geff` output (meta["index"] says which).
    """

    omegas: np.ndarray
    variances: np.ndarray
    meta: dict = field(default_factory=dict)
    peaks: list = field(default_factory=list)

    def __post_init__(self):
        w = np.asarray(self.omegas, dtype=float)
        v = np.asarray(self.variances, dtype=float)
        if w.ndim != 1 or v.shape != w.shape:
            raise ValueError("omegas and variances must be 1d arrays of equal length")
        if w.size > 1 and not np.all(np.diff(w) > 0):
            raise ValueError("omegas must be strictly increasing")
        if v.size and float(np.min(v)) < 0.0:
            raise ValueError("spectral densities must be non-negative")
        self.omegas = w
        self.variances = v


def default_omega_grid(omega_m: float = 1.0, n: int = 801) -> np.ndarray:
    """801 points over [-4, 4] omega_m: resolves both peaks at the usual scales."""
    return np.linspace(-4.0 * omega_m, 4.0 * omega_m, n)


def _require_stationary(p: ModelParams, g_eff: float):
    if p.gamma <= 0:
        raise ValueError("the stationary spectrum needs gamma > 0")
    q2 = p.omega_m * (p.omega_m + 4.0 * g_eff)
    if q2 <= 0 and math.sqrt(-q2) >= p.gamma / 2.0:
        raise UnstableRegimeError(
            f"no stationary state: growth rate {math.sqrt(-q2):g} >= gamma/2 = {p.gamma / 2.0:g}"
        )


def _quadrature_coeffs(omega: float, g_eff: float, omega_m: float, gamma: float):
    """Coefficients of b_in(omega), b_in_dag(omega) in X(omega) (without sqrt(gamma))."""
    k = 2.0 * g_eff + omega_m
    m = np.array(
        [
            [gamma / 2.0 + 1j * (k - omega), 2j * g_eff],
            [-2j * g_eff, gamma / 2.0 - 1j * (k + omega)],
        ]
    )
    minv = np.linalg.inv(m)
    # X = (b + b_dag)/2: sum the rows, keep the 1/2 for the caller
    return minv[0, 0] + minv[1, 0], minv[0, 1] + minv[1, 1]


def spectrum_numeric(p: ModelParams, g_eff: float, omegas) -> SpectrumSeries:
    """<X(omega), X(omega)> by direct solution of the linear response system.

    Per frequency the 2x2 response matrix is inverted for the pair
    (b(omega), b_dag(omega)); the bath correlations then pair the
    coefficients at omega with those at -omega, weighted (nbar + 1) against
    nbar.  Exact linear algebra: no simulation, no sampling noise.
    """
    _require_stationary(p, g_eff)
    w = np.asarray(omegas, dtype=float)
    if w.ndim != 1 or w.size < 1 or not np.all(np.isfinite(w)):
        raise ValueError("omegas must be a finite 1d grid")

    vals = np.empty(w.size)
    for i, wi in enumerate(w):
        c1, c2 = _quadrature_coeffs(wi, g_eff, p.omega_m, p.gamma)
        c1m, c2m = _quadrature_coeffs(-wi, g_eff, p.omega_m, p.gamma)
        s = (p.gamma / 4.0) * ((p.nbar + 1.0) * c1 * c2m + p.nbar * c2 * c1m)
        if abs(s.imag) > 1e-10 * (1.0 + abs(s.real)):
            raise RuntimeError(f"spectrum came out complex at omega={wi:g}: {s!r}")
        vals[i] = s.real

    meta = {
        "method": "langevin-inversion",
        "index": "omega",
        "g_eff": g_eff,
        "omega_m": p.omega_m,
        "gamma": p.gamma,
        "nbar": p.nbar,
    }
    series = SpectrumSeries(w, vals, meta)
    if w.size >= 3:
        series.peaks = find_peaks(series)
    return series


def spectrum_regression(p: ModelParams, g_eff: float, omegas) -> SpectrumSeries:
    """Same quantity through the time domain: Lyapunov steady state + resolvent.

    The stationary covariance solves A C + C A^T = -D; the one-sided
    autocorrelation decays with exp(A tau), and its transform is a pair of
    resolvents applied to the unsymmetrized moment matrix.  Shares no
    algebra with `spectrum_numeric` beyond the model parameters.
    """
    _require_stationary(p, g_eff)
    w = np.asarray(omegas, dtype=float)
    if w.ndim != 1 or w.size < 1 or not np.all(np.isfinite(w)):
        raise ValueError("omegas must be a finite 1d grid")

    a = np.array(
        [[-p.gamma / 2.0, p.omega_m], [-(p.omega_m + 4.0 * g_eff), -p.gamma / 2.0]]
    )
    d = p.gamma * (2.0 * p.nbar + 1.0) / 4.0 * np.eye(2)
    c = solve_continuous_lyapunov(a, -d)
    # unsymmetrized <v v^T>: covariance plus the commutator part i/4 [[0,1],[-1,0]]
    m = c + 0.25j * np.array([[0.0, 1.0], [-1.0, 0.0]])
    eye = np.eye(2)

    vals = np.empty(w.size)
    for i, wi in enumerate(w):
        left = np.linalg.solve(-a - 1j * wi * eye, m)
        right = m @ np.linalg.inv(-a.T + 1j * wi * eye)
        s = left[0, 0] + right[0, 0]
        if abs(s.imag) > 1e-10 * (1.0 + abs(s.real)):
            raise RuntimeError(f"spectrum came out complex at omega={wi:g}: {s!r}")
        vals[i] = s.real

    meta = {
        "method": "lyapunov-resolvent",
        "index": "omega",
        "g_eff": g_eff,
        "omega_m": p.omega_m,
        "gamma": p.gamma,
        "nbar": p.nbar,
    }
    series = SpectrumSeries(w, vals, meta)
    if w.size >= 3:
        series.peaks = find_peaks(series)
    return series


def _parabola_vertex(x0, x1, x2, y0, y1, y2):
    # vertex of the parabola through three points; exact for any spacing
    num = (y0 - y1) * (x2 - x1) ** 2 - (y2 - y1) * (x1 - x0) ** 2
    den = (y0 - y1) * (x2 - x1) + (y2 - y1) * (x1 - x0)
    if den == 0:
        return x1, y1
    xs = x1 + 0.5 * num / den
    # evaluate the same parabola at its vertex (Lagrange form)
    l0 = (xs - x1) * (xs - x2) / ((x0 - x1) * (x0 - x2))
    l1 = (xs - x0) * (xs - x2) / ((x1 - x0) * (x1 - x2))
    l2 = (xs - x0) * (xs - x1) / ((x2 - x0) * (x2 - x1))
    return xs, y0 * l0 + y1 * l1 + y2 * l2


def find_peaks(series: SpectrumSeries) -> list:
    """Strict interior local maxima, refined by quadratic interpolation.

    Returns (omega, value) pairs in grid order; a monotone series yields
    an empty list.  Needs at least three points.
    """
    w, v = series.omegas, series.variances
    if w.size < 3:
        raise ValueError("peak finding needs at least three grid points")
    out = []
    for i in range(1, w.size - 1):
        if v[i] > v[i - 1] and v[i] > v[i + 1]:
            out.append(_parabola_vertex(w[i - 1], w[i], w[i + 1], v[i - 1], v[i], v[i + 1]))
    return out


def trend_vs_geff(p: ModelParams, omega_fixed: float, geff_grid) -> SpectrumSeries:
    """Spectrum value at a fixed frequency as the coupling varies.

    The returned series is indexed by g_eff (meta["index"] = "g_eff") and
    meta["monotone"] reports "decreasing", "increasing", or "none" over the
    grid.
    """
    g = np.asarray(geff_grid, dtype=float)
    if g.ndim != 1 or g.size < 1 or not np.all(np.isfinite(g)):
        raise ValueError("geff_grid must be a finite 1d grid")
    if np.any(g < 0):
        raise ValueError("geff_grid must be non-negative")
    if g.size > 1 and not np.all(np.diff(g) > 0):
        raise ValueError("geff_grid must be strictly increasing")

    vals = np.empty(g.size)
    for i, gi in enumerate(g):
        vals[i] = spectrum_numeric(p, float(gi), np.array([omega_fixed])).variances[0]

    if g.size > 1 and np.all(np.diff(vals) < 0):
        monotone = "decreasing"
    elif g.size > 1 and np.all(np.diff(vals) > 0):
        monotone = "increasing"
    else:
        monotone = "none"
    meta = {
        "method": "langevin-inversion",
        "index": "g_eff",
        "omega_fixed": omega_fixed,
        "omega_m": p.omega_m,
        "gamma": p.gamma,
        "nbar": p.nbar,
        "monotone": monotone,
    }
    series = SpectrumSeries(g, vals, meta)
    if g.size >= 3:
        series.peaks = find_peaks(series)
    return series
