"""Physical parameters and Hamiltonian constructors for the hybrid system.

The setup is a driven cavity whose field couples quadratically to a
mechanical oscillator, g2 a^dag a (b + b^dag)^2, while a Lambda atom inside
the cavity links the classical control field (Rabi frequency Omega, on the
|0> <-> |e> leg) to the cavity mode (coupling g1, on the |1> <-> |e> leg).

All Hamiltonians are built in the time-independent frame obtained by
rotating the cavity at the pump frequency, |e> at the control frequency,
and |1> at their difference.  In that frame:

    H = delta a^dag a + omega_m b^dag b + Delta |e><e| - delta |1><1|
        + (Omega |e><0| + g1 a^dag |1><e| + h.c.)
        + g2 a^dag a (b + b^dag)^2 + eps (a + a^dag)

with delta the cavity-pump detuning and Delta the one-photon detuning.
Eliminating |e> at large Delta and then the cavity at large delta leaves

    H_eff = omega_m b^dag b + g_hat (b + b^dag)^2,

where g_hat is a 2x2 operator on the ground doublet; preparing the atom in
one of its eigenstates turns g_hat into the scalar g_eff handled by
`analytic` and `dynamics`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .operators import (
    Fock,
    HilbertSpace,
    Level,
    Operator,
    annihilation,
    level_projector,
    tensor_embed,
)

__all__ = [
    "UnstableRegimeWarning",
    "ModelParams",
    "AtomCouplingSpectrum",
    "hybrid_space",
    "oscillator_space",
    "build_full_hamiltonian",
    "build_two_level_hamiltonian",
    "atomic_coupling_spectrum",
    "build_effective_hamiltonian",
    "is_stable_regime",
]

STARK_VARIANTS = ("as-written", "textbook")


class UnstableRegimeWarning(UserWarning):
    """The effective oscillator is hyperbolic: omega_m (omega_m + 4 g_eff) <= 0."""


_NONNEGATIVE = ("g1", "g2", "Omega", "eps", "gamma", "nbar", "kappa", "Gamma_e")


@dataclass(frozen=True)
class ModelParams:
    """All rates and detunings of the hybrid model, in units of omega_m.

    delta = omega_c - omega_l is the cavity-pump detuning; Delta is the
    one-photon detuning of the Raman pair (control off |0>-|e|, cavity off
    |1>-|e>).  kappa and Gamma_e do not enter the coherent model; they feed
    the Lindblad validation runs that probe how cavity decay and
    spontaneous emission affect the squeezing.
    """

    omega_m: float = 1.0
    delta: float = 0.0
    Delta: float = 0.0
    g1: float = 0.0
    g2: float = 0.0
    Omega: float = 0.0
    eps: float = 0.0
    gamma: float = 0.0
    nbar: float = 0.0
    kappa: float = 0.0
    Gamma_e: float = 0.0

    def __post_init__(self):
        for name in ("omega_m", "delta", "Delta") + _NONNEGATIVE:
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.omega_m <= 0:
            raise ValueError(f"omega_m must be > 0, got {self.omega_m!r}")
        for name in _NONNEGATIVE:
            v = getattr(self, name)
            if v < 0:
                raise ValueError(f"{name} must be >= 0, got {v!r}")


def hybrid_space(d_cav: int = 8, d_mech: int = 16, levels: int = 3) -> HilbertSpace:
    """Cavity x oscillator x atom, in the fixed factor order."""
    return HilbertSpace((Fock(d_cav), Fock(d_mech), Level(levels)))


def oscillator_space(d_mech: int) -> HilbertSpace:
    return HilbertSpace((Fock(d_mech),))


def _require_structure(space: HilbertSpace, levels: int, what: str):
    ok = (
        len(space.factors) == 3
        and isinstance(space.factors[0], Fock)
        and isinstance(space.factors[1], Fock)
        and isinstance(space.factors[2], Level)
        and space.factors[2].count == levels
    )
    if not ok:
        raise ValueError(f"{what} needs Fock x Fock x Level({levels}), got {space.factors!r}")


def build_full_hamiltonian(p: ModelParams, space: HilbertSpace) -> Operator:
    """The three-level model in the static rotating frame.

    H = delta a^dag a + omega_m b^dag b + Delta |e><e| - delta |1><1|
        + (Omega |e><0| + g1 a^dag |1><e| + h.c.)
        + g2 a^dag a (b + b^dag)^2 + eps (a + a^dag)
    """
    _require_structure(space, 3, "build_full_hamiltonian")
    a = annihilation(space, 0)
    na = a.dag() @ a
    b = annihilation(space, 1)
    nb = b.dag() @ b

    h = p.delta * na + p.omega_m * nb
    h = h + p.Delta * level_projector(space, 2, 2, 2) - p.delta * level_projector(space, 2, 1, 1)

    drive = p.Omega * level_projector(space, 2, 2, 0) + p.g1 * (a.dag() @ level_projector(space, 2, 1, 2))
    h = h + drive + drive.dag()

    # quadratic optomechanical term, built jointly on the two Fock factors
    dc = space.factors[0].size
    dm = space.factors[1].size
    bl = np.diag(np.sqrt(np.arange(1, dm, dtype=float)), 1).astype(complex)
    x2 = (bl + bl.conj().T) @ (bl + bl.conj().T)
    nmat = np.diag(np.arange(dc, dtype=float)).astype(complex)
    h = h + p.g2 * tensor_embed([(0, nmat), (1, x2)], space)

    h = h + p.eps * (a + a.dag())
    return h


def build_two_level_hamiltonian(p: ModelParams, space: HilbertSpace, variant: str = "as-written") -> Operator:
    """The model after adiabatic elimination of |e>, on the ground doublet.

    Besides the free and optomechanical parts, the elimination leaves two
    Stark shifts and a photon-exchanging flip term:

        - S0 |0><0| - S1 |1><1| a^dag a - (Omega g1 / Delta)(|0><1| a + h.c.)
        - delta |1><1|

    `variant` picks the Stark coefficients.  "as-written" keeps the same
    coefficient Omega g1 / Delta on both shifts; "textbook" uses the
    second-order values Omega^2 / Delta and g1^2 / Delta.  The two coincide
    when Omega = g1; the flip term is identical in both.  Which variant
    tracks the three-level model better is decided dynamically
    (`dynamics.validate_adiabatic_chain`), not assumed here.
    """
    _require_structure(space, 2, "build_two_level_hamiltonian")
    if variant not in STARK_VARIANTS:
        raise ValueError(f"variant must be one of {STARK_VARIANTS}, got {variant!r}")
    if p.Delta == 0:
        raise ValueError("two-level reduction requires Delta != 0")

    coupling = p.Omega * p.g1 / p.Delta
    if variant == "as-written":
        s0 = coupling
        s1 = coupling
    else:
        s0 = p.Omega**2 / p.Delta
        s1 = p.g1**2 / p.Delta

    a = annihilation(space, 0)
    na = a.dag() @ a
    b = annihilation(space, 1)
    nb = b.dag() @ b

    h = p.delta * na + p.omega_m * nb - p.delta * level_projector(space, 2, 1, 1)
    h = h - s0 * level_projector(space, 2, 0, 0)
    h = h - s1 * (na @ level_projector(space, 2, 1, 1))
    flip = a @ level_projector(space, 2, 0, 1)
    h = h - coupling * (flip + flip.dag())

    dc = space.factors[0].size
    dm = space.factors[1].size
    bl = np.diag(np.sqrt(np.arange(1, dm, dtype=float)), 1).astype(complex)
    x2 = (bl + bl.conj().T) @ (bl + bl.conj().T)
    nmat = np.diag(np.arange(dc, dtype=float)).astype(complex)
    h = h + p.g2 * tensor_embed([(0, nmat), (1, x2)], space)

    h = h + p.eps * (a + a.dag())
    return h


@dataclass(frozen=True)
class AtomCouplingSpectrum:
    """Eigen-decomposition of the atom-conditioned coupling operator.

    After eliminating the cavity, the coefficient of (b + b^dag)^2 is the
    2x2 ground-doublet operator

        g_hat = (g2 / delta^2) [ alpha^2 |0><0|
                                 - eps alpha (|0><1| + |1><0|) + eps^2 ],

    alpha = Omega g1 / Delta.  lambda1 >= lambda2 are the eigenvalues of
    the bracketed matrix without the eps^2 offset; e1, e2 the corresponding
    unit eigenvectors over {|0>, |1>}; g_eff_i = (g2/delta^2)(lambda_i +
    eps^2) is the scalar coupling seen by an atom prepared in e_i.
    """

    alpha: float
    lambda1: float
    lambda2: float
    e1: np.ndarray
    e2: np.ndarray
    g_eff_1: float
    g_eff_2: float


def _fix_sign(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    if v[i] < 0:
        return -v
    return v


def atomic_coupling_spectrum(p: ModelParams) -> AtomCouplingSpectrum:
    """Eigenvalues, eigenvectors, and effective couplings of g_hat.

    Closed form: lambda_{1,2} = (alpha/2)[alpha +- sqrt(alpha^2 + 4 eps^2)].
    Implemented as a brute 2x2 eigensolve; the closed form is what the
    tests check against.
    """
    if p.Delta == 0 or p.delta == 0:
        raise ValueError("atomic_coupling_spectrum requires Delta != 0 and delta != 0")
    alpha = p.Omega * p.g1 / p.Delta
    m = np.array([[alpha**2, -p.eps * alpha], [-p.eps * alpha, 0.0]])
    vals, vecs = np.linalg.eigh(m)
    # eigh returns ascending order; branch 1 is the larger eigenvalue
    lam1, lam2 = float(vals[1]), float(vals[0])
    e1 = _fix_sign(vecs[:, 1].copy())
    e2 = _fix_sign(vecs[:, 0].copy())
    scale = p.g2 / p.delta**2
    return AtomCouplingSpectrum(
        alpha=alpha,
        lambda1=lam1,
        lambda2=lam2,
        e1=e1,
        e2=e2,
        g_eff_1=scale * (lam1 + p.eps**2),
        g_eff_2=scale * (lam2 + p.eps**2),
    )


def is_stable_regime(g_eff: float, omega_m: float) -> bool:
    """True when q^2 = omega_m (omega_m + 4 g_eff) > 0 (oscillatory dynamics)."""
    return omega_m * (omega_m + 4.0 * g_eff) > 0.0


def build_effective_hamiltonian(g_eff: float, omega_m: float, space: HilbertSpace) -> Operator:
    """H_eff = omega_m b^dag b + g_eff (b + b^dag)^2 on a single-mode space.

    Negative g_eff is allowed; once 4 g_eff <= -omega_m the dynamics turns
    hyperbolic (q^2 <= 0) and an UnstableRegimeWarning is emitted instead
    of an error, since the operator itself is still perfectly well defined.
    """
    if len(space.factors) != 1 or not isinstance(space.factors[0], Fock):
        raise ValueError(f"effective Hamiltonian needs a single Fock factor, got {space.factors!r}")
    if not is_stable_regime(g_eff, omega_m):
        warnings.warn(
            f"omega_m (omega_m + 4 g_eff) = {omega_m * (omega_m + 4 * g_eff):g} <= 0: "
            "hyperbolic (anti-squeezing) regime",
            UnstableRegimeWarning,
            stacklevel=2,
        )
    b = annihilation(space, 0)
    x2 = (b + b.dag()) @ (b + b.dag())
    return omega_m * (b.dag() @ b) + g_eff * x2
