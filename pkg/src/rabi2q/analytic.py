"""Closed-form predictions in the limit gamma/omega -> infinity.

These are the references the numerics are checked against: squeeze
parameters, sector ground energies and states, rescaled energies
``E * omega / gamma``, photon number, concurrence, magnetization, and the
critical couplings of each parity sector.

Superradiant states are written in the displaced frame (a squeezed vacuum
around the origin). :func:`superradiant_displacement` gives the coherent
shift needed to compare them with laboratory-frame eigenvectors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DomainError
from .fock import FockCutoff, StateVector, as_cutoff, displaced, squeezed_vacuum
from .model import (
    ModelParams,
    PhaseLabel,
    SectorLabel,
    derive_sector_params,
    embed_sector_state,
    reference_sector,
    sector_g,
)


class Branch(enum.Enum):
    UPPER = "upper"
    LOWER = "lower"
    NOT_APPLICABLE = "not-applicable"

    @classmethod
    def parse(cls, value: "Branch | str | None") -> "Branch":
        if value is None:
            return cls.NOT_APPLICABLE
        return value if isinstance(value, cls) else cls(str(value).lower())


@dataclass(frozen=True)
class AnalyticPrediction:
    g: float
    phase: PhaseLabel
    energy: float
    rescaled_energy: float
    squeeze_r: float
    n_rescaled: float
    concurrence: float
    magnetization: float
    branch: Branch


@dataclass(frozen=True)
class MinusGround:
    energy: float
    state: StateVector


@dataclass(frozen=True)
class CriticalCouplings:
    g_c_plus: float
    g_c_minus: float
    # None when both sectors turn superradiant at the same g
    post_qpt_sector: SectorLabel | None


def _check_phase(phase: PhaseLabel, g: float) -> float:
    g = abs(float(g))
    if g == 1.0:
        raise DomainError("g = 1 is excluded from both phase domains")
    if phase is PhaseLabel.NORMAL and g > 1.0:
        raise DomainError(f"normal phase needs g < 1, got {g}")
    if phase is PhaseLabel.SUPERRADIANT and g < 1.0:
        raise DomainError(f"superradiant phase needs g > 1, got {g}")
    return g


def _check_branch(phase: PhaseLabel, branch) -> Branch:
    branch = Branch.parse(branch)
    if phase is PhaseLabel.SUPERRADIANT and branch is Branch.NOT_APPLICABLE:
        raise DomainError("superradiant ground state is two-fold degenerate; pick a branch")
    if phase is PhaseLabel.NORMAL and branch is not Branch.NOT_APPLICABLE:
        raise DomainError("the normal-phase ground state has no branches")
    return branch


def squeeze_param(phase: PhaseLabel, g: float) -> float:
    """``-ln(1 - g^2)/4`` (normal) or ``-ln(1 - g^-4)/4`` (superradiant)."""
    g = _check_phase(phase, g)
    if phase is PhaseLabel.NORMAL:
        return -math.log1p(-g * g) / 4.0
    return -math.log1p(-(g**-4)) / 4.0


def ground_energy(phase: PhaseLabel, p: ModelParams, sector: SectorLabel | str = SectorLabel.PLUS) -> float:
    """Lowest energy of one sector in the low-energy quadratic approximation.

    The superradiant radicand is ``1 - g^-4``, the value implied by the
    ``omega/(4 g^4)`` quadratic coefficient. A sector with no boson coupling
    but a bias returns the exact decoupled value ``-sqrt(eps^2 + gamma^2)``.
    """
    sector = SectorLabel.parse(sector)
    sp_ = derive_sector_params(p)
    g = _check_phase(phase, sector_g(p, sector))
    if sp_.eps(sector) != 0.0:
        if sp_.lam(sector) != 0.0:
            raise DomainError("a biased, coupled sector has no quadratic low-energy form")
        return -math.hypot(sp_.eps(sector), p.gamma)
    if phase is PhaseLabel.NORMAL:
        return p.omega * (math.sqrt(1.0 - g * g) - 1.0) / 2.0 - p.gamma
    return p.omega * (math.sqrt(1.0 - g**-4) - 1.0) / 2.0 - p.gamma * (g * g + g**-2) / 2.0


def minus_sector_ground(p: ModelParams, cutoff: FockCutoff | int = 1) -> MinusGround:
    """Exact ground state of a boson-decoupled minus sector.

    The energy is ``-sqrt(eps^2 + gamma^2)`` with ``eps = eps1 - eps2``, which
    tends to ``-gamma`` for ``eps << gamma``; the state is the photon vacuum
    times the lower eigenvector of ``eps Z + gamma X``.
    """
    sp_ = derive_sector_params(p)
    if sp_.lam_minus != 0.0:
        raise DomainError("minus sector is coupled to the mode (lam1 != lam2)")
    cutoff = as_cutoff(cutoff)
    eps, gam = sp_.eps_minus, p.gamma
    rad = math.hypot(eps, gam)
    if gam == 0.0:
        qubit = np.array([0.0, 1.0]) if eps >= 0 else np.array([1.0, 0.0])
    else:
        qubit = np.array([gam, -(eps + rad)])
        qubit /= np.linalg.norm(qubit)
    amps = np.zeros(2 * cutoff.dim)
    amps[0] = qubit[0]
    amps[cutoff.dim] = qubit[1]
    return MinusGround(-rad, embed_sector_state(amps, SectorLabel.MINUS, cutoff))


def rescaled_branch_energy(g: float, omega: float) -> float:
    """``-omega`` for ``|g| <= 1``, ``-omega (g^2 + g^-2)/2`` beyond."""
    g = abs(g)
    if g <= 1.0:
        return -omega
    return -omega * (g * g + g**-2) / 2.0


def sweep_to_sector_g(p: ModelParams, g: float, sector: SectorLabel) -> float:
    """Map the sweep variable onto a sector's control parameter.

    The sweep variable is the ``g`` of :func:`reference_sector`; other
    sectors scale with ``|lam_s / lam_ref|``.
    """
    sp_ = derive_sector_params(p)
    lam_ref = sp_.lam(reference_sector(p))
    return g * abs(sp_.lam(sector) / lam_ref) if lam_ref != 0.0 else 0.0


def rescaled_energies(p: ModelParams, g_grid: Iterable[float]) -> list[tuple[float, float]]:
    """``(E0_plus, E0_minus) * omega / gamma`` on a grid of the sweep variable."""
    if p.gamma <= 0:
        raise DomainError("rescaled energies require gamma > 0")
    out = []
    for g in g_grid:
        out.append(
            (
                rescaled_branch_energy(sweep_to_sector_g(p, g, SectorLabel.PLUS), p.omega),
                rescaled_branch_energy(sweep_to_sector_g(p, g, SectorLabel.MINUS), p.omega),
            )
        )
    return out


def qubit_coefficients(phase: PhaseLabel, branch, g: float) -> np.ndarray:
    """Amplitudes on the fictitious (up, down) states."""
    g = _check_phase(phase, g)
    branch = _check_branch(phase, branch)
    if phase is PhaseLabel.NORMAL:
        return np.array([1.0, -1.0]) / math.sqrt(2.0)
    s, d = math.sqrt(1.0 + g**-2), math.sqrt(1.0 - g**-2)
    if branch is Branch.UPPER:
        return np.array([(s - d) / 2.0, -(s + d) / 2.0])
    return np.array([(s + d) / 2.0, -(s - d) / 2.0])


def superradiant_displacement(g: float, gamma_over_omega: float, branch, lam_sign: float = 1.0) -> float:
    """Coherent amplitude ``alpha`` of a superradiant branch in the laboratory frame.

    ``alpha^2 = (gamma/omega)(g^2 - g^-2)/2``; the upper branch (negative
    fictitious magnetization) sits at ``alpha > 0`` when ``lam > 0``.
    """
    g = _check_phase(PhaseLabel.SUPERRADIANT, g)
    branch = _check_branch(PhaseLabel.SUPERRADIANT, branch)
    alpha = math.sqrt(gamma_over_omega * (g * g - g**-2) / 2.0)
    sign = 1.0 if branch is Branch.UPPER else -1.0
    return sign * math.copysign(1.0, lam_sign) * alpha


def analytic_ground_state(
    phase: PhaseLabel,
    branch,
    g: float,
    cutoff: FockCutoff | int,
    sector: SectorLabel | str = SectorLabel.PLUS,
    displacement: float = 0.0,
) -> StateVector:
    """Squeezed vacuum times the qubit factor, on the full labeled basis.

    ``displacement`` shifts the boson factor by a real coherent amplitude
    (zero reproduces the displaced-frame state).
    """
    cutoff = as_cutoff(cutoff)
    sector = SectorLabel.parse(sector)
    qubit = qubit_coefficients(phase, branch, g)
    boson = squeezed_vacuum(squeeze_param(phase, g), cutoff).amplitudes
    if displacement:
        boson = displaced(boson, displacement)
    return embed_sector_state(np.kron(qubit, boson), sector, cutoff)


def observables_closed_form(phase: PhaseLabel, g: float, branch=None) -> dict[str, float]:
    """Rescaled photon number, concurrence and magnetization in closed form for the limit.

    Normal: ``(0, 1, 0)``. Superradiant: ``((g^2 - g^-2)/4, g^-2, -/+ sqrt(1 - g^-2))``.
    The magnetization sign follows the branch's qubit amplitudes (upper is
    negative). :func:`observables_meanfield` gives the values implied by
    the ground-state amplitudes themselves.
    """
    g = _check_phase(phase, g)
    branch = _check_branch(phase, branch)
    if phase is PhaseLabel.NORMAL:
        return {"n_rescaled": 0.0, "concurrence": 1.0, "magnetization": 0.0}
    sign = -1.0 if branch is Branch.UPPER else 1.0
    return {
        "n_rescaled": (g * g - g**-2) / 4.0,
        "concurrence": g**-2,
        "magnetization": sign * math.sqrt(1.0 - g**-2),
    }


def observables_meanfield(phase: PhaseLabel, g: float, branch=None) -> dict[str, float]:
    """Limit values obtained from the displaced ground state.

    Superradiant: ``n_rescaled = (g^2 - g^-2)/2`` from ``alpha^2``,
    ``concurrence = g^-2`` and ``magnetization = -/+ sqrt(1 - g^-4)``, the
    latter two read off the branch's qubit amplitudes.
    """
    g = _check_phase(phase, g)
    branch = _check_branch(phase, branch)
    if phase is PhaseLabel.NORMAL:
        return {"n_rescaled": 0.0, "concurrence": 1.0, "magnetization": 0.0}
    c = qubit_coefficients(phase, branch, g)
    return {
        "n_rescaled": (g * g - g**-2) / 2.0,
        "concurrence": float(2.0 * abs(c[0] * c[1])),
        "magnetization": float(c[0] ** 2 - c[1] ** 2),
    }


def critical_couplings(p: ModelParams) -> CriticalCouplings:
    """Values of the sweep variable at which each sector's ``g`` reaches 1."""
    if not (p.is_unbiased or (p.eps1 + p.eps2 == 0.0 and p.lam1 == p.lam2)):
        raise DomainError("critical couplings need unbiased or counter-biased, equally coupled qubits")
    if p.gamma <= 0:
        raise DomainError("critical couplings require gamma > 0")
    sp_ = derive_sector_params(p)
    if sp_.lam_plus == 0.0 and sp_.lam_minus == 0.0:
        raise DomainError("no sector couples to the mode")
    lam_ref = abs(sp_.lam(reference_sector(p)))

    def crit(lam: float) -> float:
        return lam_ref / abs(lam) if lam != 0.0 else math.inf

    gp, gm = crit(sp_.lam_plus), crit(sp_.lam_minus)
    if gp < gm:
        post = SectorLabel.PLUS
    elif gm < gp:
        post = SectorLabel.MINUS
    else:
        post = None
    return CriticalCouplings(gp, gm, post)
