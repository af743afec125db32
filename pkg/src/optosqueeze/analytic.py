"""Closed-form results for the effective squeezing model.

For H_eff = omega_m b^dag b + g_eff (b + b^dag)^2 the Heisenberg evolution
of the mode is a Bogoliubov transformation b(t) = r b(0) + s b^dag(0) with

    r = cos(q t) - (i k / q) sin(q t),   s = -(2 i g_eff / q) sin(q t),
    k = 2 g_eff + omega_m,               q = sqrt(k^2 - 4 g_eff^2),

valid while q^2 = omega_m (omega_m + 4 g_eff) > 0.  Everything else here
follows from that: the X-quadrature variance, the squeezing in dB and its
maximum 5 log10(4 g_eff/omega_m + 1), and, once damping gamma and a thermal
bath with occupation nbar are added, the stationary squeezing spectrum in
its closed P/Q form together with the critical frequencies minimizing Q.

X = (b + b^dag)/2, so the vacuum variance is 1/4; dB values and spectral
peak positions are ratios and do not depend on that normalization choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ModelParams

__all__ = [
    "UnstableRegimeError",
    "OverdampedError",
    "BogoliubovCoeffs",
    "SpectrumPoint",
    "NoiseModel",
    "bogoliubov",
    "thermal_V",
    "thermal_occupation",
    "position_variance",
    "squeezing_db",
    "s_max",
    "spectrum_analytic",
    "critical_frequencies",
]


class UnstableRegimeError(ValueError):
    """q^2 = omega_m (omega_m + 4 g_eff) <= 0: no oscillatory closed form."""


class OverdampedError(ValueError):
    """gamma is too large for a spectral doublet: omega_m (4 g_eff + omega_m) <= gamma^2/4."""


@dataclass(frozen=True)
class BogoliubovCoeffs:
    """b(t) = r b(0) + s b^dag(0); |r|^2 - |s|^2 = 1."""

    r: complex
    s: complex
    k: float
    q: float


@dataclass(frozen=True)
class SpectrumPoint:
    """One point of the closed-form spectrum: variance = (gamma/4) P/Q."""

    omega: float
    variance: float
    P: float
    Q: float


@dataclass(frozen=True)
class NoiseModel:
    """White thermal bath entering the Langevin equation.

    The input noise b_I(t) couples with flat strength sqrt(gamma) and has
    the frequency-domain correlations

        <b_I(omega) b_I^dag(-omega')>   = (nbar + 1) delta(omega + omega')
        <b_I^dag(omega) b_I(-omega')>   = nbar delta(omega + omega')
        <b_I> = 0.

    These are the only bath facts the spectra depend on.
    """

    gamma: float
    nbar: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.nbar < 0:
            raise ValueError("nbar must be >= 0")


def _q_squared(g_eff: float, omega_m: float) -> float:
    return omega_m * (omega_m + 4.0 * g_eff)


def bogoliubov(g_eff: float, omega_m: float, t: float) -> BogoliubovCoeffs:
    """Bogoliubov coefficients of the evolution over time t.

    Raises UnstableRegimeError when q^2 <= 0 (hyperbolic regime): the
    trigonometric closed form no longer applies.
    """
    q2 = _q_squared(g_eff, omega_m)
    if q2 <= 0:
        raise UnstableRegimeError(
            f"omega_m (omega_m + 4 g_eff) = {q2:g} <= 0 for g_eff={g_eff:g}, omega_m={omega_m:g}"
        )
    q = math.sqrt(q2)
    k = 2.0 * g_eff + omega_m
    c, s_ = math.cos(q * t), math.sin(q * t)
    r = c - 1j * (k / q) * s_
    s = -2j * (g_eff / q) * s_
    return BogoliubovCoeffs(r=r, s=s, k=k, q=q)


def thermal_V(nbar: float) -> float:
    """V = coth(hbar omega_m / 2 k_B T) = 2 nbar + 1."""
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    return 2.0 * nbar + 1.0


def thermal_occupation(x: float) -> float:
    """nbar = 1/(e^x - 1) for x = hbar omega_m / k_B T > 0."""
    if x <= 0:
        raise ValueError("hbar omega_m / k_B T must be > 0")
    return 1.0 / math.expm1(x)


def position_variance(g_eff: float, omega_m: float, nbar: float, t: float) -> float:
    """Variance of X(t) = (b(t) + b^dag(t))/2 from a thermal state.

    Evaluates (V/4) |r + conj(s)|^2, which expands to the closed bracket

        (V/4) [1 - (4 g_eff / (4 g_eff + omega_m)) sin^2(q t)],

    with the minimum (V/4) omega_m / (4 g_eff + omega_m) at q t = pi/2.
    """
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    bc = bogoliubov(g_eff, omega_m, t)
    u = bc.r + bc.s.conjugate()
    return 0.25 * thermal_V(nbar) * float(abs(u) ** 2)


def squeezing_db(g_eff: float, omega_m: float, t: float) -> float:
    """S(t) = -10 log10 of the uncertainty ratio against the free oscillator.

    The thermal factor V cancels in the ratio, so S does not depend on
    nbar; S(t) peaks at q t = pi/2 with the value given by `s_max`.
    """
    bc = bogoliubov(g_eff, omega_m, t)
    u = bc.r + bc.s.conjugate()
    ratio2 = float(abs(u) ** 2)  # variance ratio, free oscillator has |r + s*|^2 = 1
    return -5.0 * math.log10(ratio2)


def s_max(g_eff: float, omega_m: float) -> float:
    """Maximum squeezing over time: 5 log10(4 g_eff / omega_m + 1) dB."""
    if g_eff < 0:
        raise ValueError("s_max is defined for g_eff >= 0")
    return 5.0 * math.log10(4.0 * g_eff / omega_m + 1.0)


def spectrum_analytic(p: ModelParams, g_eff: float, omega: float) -> SpectrumPoint:
    """Closed-form stationary spectrum <X(omega), X(omega)> = (gamma/4) P/Q.

        k = 2 g_eff + omega_m
        P = (nbar+1) [(gamma/2)^2 + (omega + k)^2]
            + nbar  [(gamma/2)^2 + (omega - k)^2]
            - 2 g_eff [omega + (2 nbar + 1) omega_m]
        Q = [(gamma/2)^2 + omega_m (4 g_eff + omega_m) - omega^2]^2
            + (omega gamma)^2

    Q's minimum over omega sits at the critical frequencies (see
    `critical_frequencies`).  An independent frequency-domain solution of
    the same damped model lives in `spectrum.spectrum_numeric`; the two are
    compared, not assumed equal.
    """
    if p.gamma <= 0:
        raise ValueError("spectrum requires gamma > 0")
    half = 0.5 * p.gamma
    k = 2.0 * g_eff + p.omega_m
    v = thermal_V(p.nbar)
    pnum = (
        (p.nbar + 1.0) * (half**2 + (omega + k) ** 2)
        + p.nbar * (half**2 + (omega - k) ** 2)
        - 2.0 * g_eff * (omega + v * p.omega_m)
    )
    qden = (half**2 + p.omega_m * (4.0 * g_eff + p.omega_m) - omega**2) ** 2 + (omega * p.gamma) ** 2
    return SpectrumPoint(omega=omega, variance=0.25 * p.gamma * pnum / qden, P=pnum, Q=qden)


def critical_frequencies(p: ModelParams, g_eff: float) -> tuple:
    """The two frequencies +-sqrt(omega_m (4 g_eff + omega_m) - gamma^2/4).

    These minimize Q exactly.  Returned ascending (negative root first).
    Raises OverdampedError when the argument of the root is <= 0 and the
    doublet collapses.
    """
    arg = p.omega_m * (4.0 * g_eff + p.omega_m) - 0.25 * p.gamma**2
    if arg <= 0:
        raise OverdampedError(
            f"omega_m (4 g_eff + omega_m) - gamma^2/4 = {arg:g} <= 0: no spectral doublet"
        )
    w = math.sqrt(arg)
    return (-w, w)
