"""Two-qubit Rabi Hamiltonian with spin-spin coupling and its parity sectors.

Full basis ordering is qubit-major: ``index = q * (n_max + 1) + n`` with
``q`` running over ``uu, ud, du, dd`` (``u`` is the +1 eigenstate of
sigma_z). The operator ``sigma1_z sigma2_z`` commutes with the Hamiltonian,
so the ``{uu, dd}`` and ``{ud, du}`` blocks never mix; each one is a
single-qubit Rabi problem in a fictitious two-level system.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, PhaseMismatchError
from .fock import FockCutoff, OperatorMatrix, StateVector, as_cutoff, sparse_ladder

QUBIT_LABELS = ("uu", "ud", "du", "dd")
SPARSE_THRESHOLD = 2000

_Z = np.diag([1.0, -1.0])
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_I2 = np.eye(2)


class SectorLabel(enum.Enum):
    PLUS = 1
    MINUS = -1

    @property
    def qubit_states(self) -> tuple[str, str]:
        """Full-basis qubit labels playing the fictitious up/down states."""
        return ("uu", "dd") if self is SectorLabel.PLUS else ("ud", "du")

    @property
    def qubit_indices(self) -> tuple[int, int]:
        return tuple(QUBIT_LABELS.index(q) for q in self.qubit_states)

    @property
    def short(self) -> str:
        return "plus" if self is SectorLabel.PLUS else "minus"

    @classmethod
    def parse(cls, value: "SectorLabel | str") -> "SectorLabel":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in ("plus", "+", "+1"):
            return cls.PLUS
        if key in ("minus", "-", "-1"):
            return cls.MINUS
        raise ValueError(f"unknown sector {value!r}")


class PhaseLabel(enum.Enum):
    NORMAL = "normal"
    SUPERRADIANT = "superradiant"

    @classmethod
    def for_g(cls, g: float) -> "PhaseLabel":
        if g == 1.0:
            raise DomainError("g = 1 is the critical point and belongs to neither phase")
        return cls.NORMAL if abs(g) < 1.0 else cls.SUPERRADIANT


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the tripartite Hamiltonian (hbar = 1)."""

    omega: float
    eps1: float = 0.0
    eps2: float = 0.0
    gamma: float = 0.0
    lam1: float = 0.0
    lam2: float = 0.0
    allow_negative_gamma: bool = False

    def __post_init__(self):
        for name in ("omega", "eps1", "eps2", "gamma", "lam1", "lam2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.gamma < 0 and not self.allow_negative_gamma:
            raise ValueError("negative gamma requires allow_negative_gamma=True")

    @classmethod
    def counter_biased(cls, omega: float, gamma: float, g: float, eps: float = 0.0) -> "ModelParams":
        """``eps1 = -eps2 = eps/2`` and ``lam1 = lam2 = lam/2`` with ``g = g_plus``."""
        lam = coupling_for_g(g, omega, gamma)
        return cls(omega, eps / 2, -eps / 2, gamma, lam / 2, lam / 2)

    @classmethod
    def unbiased(cls, omega: float, gamma: float, g: float, lambda_ratio: float = 3.0) -> "ModelParams":
        """Unbiased qubits with ``lam1 = lambda_ratio * lam2``.

        The sweep variable ``g`` is ``g_minus`` unless ``lambda_ratio == 1``
        (then ``lam_minus`` vanishes and ``g`` is ``g_plus``).
        """
        lam = coupling_for_g(g, omega, gamma)
        if lambda_ratio == 1.0:
            lam2 = lam / 2
        elif lambda_ratio == -1.0:
            raise ValueError("lambda_ratio = -1 decouples the plus sector; use counter_biased-style params")
        else:
            lam2 = lam / (lambda_ratio - 1.0)
        return cls(omega, 0.0, 0.0, gamma, lambda_ratio * lam2, lam2)

    @property
    def is_counter_biased(self) -> bool:
        return self.eps1 + self.eps2 == 0.0 and self.lam1 == self.lam2

    @property
    def is_unbiased(self) -> bool:
        return self.eps1 == 0.0 and self.eps2 == 0.0


def coupling_for_g(g: float, omega: float, gamma: float) -> float:
    """Invert ``g = sqrt(2) lam / sqrt(omega gamma)``."""
    if gamma <= 0:
        raise DomainError("g is only defined for gamma > 0")
    return g * math.sqrt(omega * gamma) / math.sqrt(2.0)


@dataclass(frozen=True)
class SectorParams:
    eps_plus: float
    eps_minus: float
    lam_plus: float
    lam_minus: float
    g_plus: float | None
    g_minus: float | None

    def eps(self, sector: SectorLabel) -> float:
        return self.eps_plus if sector is SectorLabel.PLUS else self.eps_minus

    def lam(self, sector: SectorLabel) -> float:
        return self.lam_plus if sector is SectorLabel.PLUS else self.lam_minus

    def g(self, sector: SectorLabel) -> float | None:
        return self.g_plus if sector is SectorLabel.PLUS else self.g_minus


def derive_sector_params(p: ModelParams) -> SectorParams:
    lam_plus = p.lam1 + p.lam2
    lam_minus = p.lam1 - p.lam2
    if p.gamma > 0:
        scale = math.sqrt(2.0) / math.sqrt(p.omega * p.gamma)
        g_plus, g_minus = scale * lam_plus, scale * lam_minus
    else:
        g_plus = g_minus = None
    return SectorParams(p.eps1 + p.eps2, p.eps1 - p.eps2, lam_plus, lam_minus, g_plus, g_minus)


def sector_g(p: ModelParams, sector: SectorLabel) -> float:
    """Control parameter of one sector; rejects ``gamma <= 0``."""
    g = derive_sector_params(p).g(sector)
    if g is None:
        raise DomainError("g-dependent quantities require gamma > 0")
    return g


def reference_sector(p: ModelParams) -> SectorLabel:
    """Sector whose ``g`` is used as the sweep variable (minus unless ``lam_minus = 0``)."""
    if p.lam1 - p.lam2 != 0.0:
        return SectorLabel.MINUS
    return SectorLabel.PLUS


def _use_sparse(dim: int, sparse: bool | None) -> bool:
    return dim > SPARSE_THRESHOLD if sparse is None else sparse


def _finish(h: sp.spmatrix, labels: tuple[str, ...], sparse: bool | None) -> OperatorMatrix:
    h = h.tocsr()
    h = ((h + h.conj().T) * 0.5).tocsr()
    h.sort_indices()
    return OperatorMatrix(h if _use_sparse(h.shape[0], sparse) else h.toarray(), labels)


def full_labels(cutoff: FockCutoff | int) -> tuple[str, ...]:
    cutoff = as_cutoff(cutoff)
    return tuple(f"{q}|{n}" for q in QUBIT_LABELS for n in range(cutoff.dim))


def sector_labels(sector: SectorLabel, cutoff: FockCutoff | int) -> tuple[str, ...]:
    cutoff = as_cutoff(cutoff)
    return tuple(f"{q}|{n}" for q in sector.qubit_states for n in range(cutoff.dim))


def build_full_hamiltonian(p: ModelParams, cutoff: FockCutoff | int, sparse: bool | None = None) -> OperatorMatrix:
    """``omega a^dag a + eps1 Z1 + eps2 Z2 + gamma X1 X2 + (lam1 Z1 + lam2 Z2)(a + a^dag)``."""
    cutoff = as_cutoff(cutoff)
    _, n_op, x_op = sparse_ladder(cutoff)
    z1 = np.kron(_Z, _I2)
    z2 = np.kron(_I2, _Z)
    xx = np.kron(_X, _X)
    eye_f = sp.identity(cutoff.dim, format="csr")
    h = (
        sp.kron(np.eye(4), p.omega * n_op)
        + sp.kron(p.eps1 * z1 + p.eps2 * z2 + p.gamma * xx, eye_f)
        + sp.kron(p.lam1 * z1 + p.lam2 * z2, x_op)
    )
    return _finish(h, full_labels(cutoff), sparse)


def build_sector_hamiltonian(
    p: ModelParams,
    sector: SectorLabel | str,
    cutoff: FockCutoff | int,
    bias: float = 0.0,
    sparse: bool | None = None,
) -> OperatorMatrix:
    """``omega a^dag a + (eps_s + bias) Z + gamma X + lam_s (a + a^dag) Z`` on one sector.

    ``bias`` adds an explicit symmetry-breaking field along the fictitious z axis.
    """
    sector = SectorLabel.parse(sector)
    cutoff = as_cutoff(cutoff)
    sp_params = derive_sector_params(p)
    _, n_op, x_op = sparse_ladder(cutoff)
    eye_f = sp.identity(cutoff.dim, format="csr")
    h = (
        sp.kron(_I2, p.omega * n_op)
        + sp.kron((sp_params.eps(sector) + bias) * _Z + p.gamma * _X, eye_f)
        + sp.kron(sp_params.lam(sector) * _Z, x_op)
    )
    return _finish(h, sector_labels(sector, cutoff), sparse)


def sector_indices(sector: SectorLabel, cutoff: FockCutoff) -> np.ndarray:
    d = cutoff.dim
    return np.concatenate([np.arange(q * d, (q + 1) * d) for q in sector.qubit_indices])


def parity_permutation(cutoff: FockCutoff | int) -> np.ndarray:
    """Index map ``perm`` with ``H[perm][:, perm] = H_plus (+) H_minus``.

    ``perm[i]`` is the full-basis index placed at row ``i`` of the permuted
    matrix; the plus block occupies the first ``2 (n_max + 1)`` rows.
    """
    cutoff = as_cutoff(cutoff)
    return np.concatenate([sector_indices(SectorLabel.PLUS, cutoff), sector_indices(SectorLabel.MINUS, cutoff)])


def inverse_permutation(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


def permute(op: OperatorMatrix, perm: np.ndarray) -> OperatorMatrix:
    m = op.entries
    if sp.issparse(m):
        m = m.tocsr()[perm][:, perm]
    else:
        m = np.asarray(m)[np.ix_(perm, perm)]
    return OperatorMatrix(m, tuple(op.basis_labels[i] for i in perm))


def embed_sector_state(amplitudes: np.ndarray, sector: SectorLabel | str, cutoff: FockCutoff | int) -> StateVector:
    """Lift a sector-basis vector into the full four-qubit-state basis."""
    sector = SectorLabel.parse(sector)
    cutoff = as_cutoff(cutoff)
    amplitudes = np.asarray(amplitudes)
    if amplitudes.shape != (2 * cutoff.dim,):
        raise ValueError(f"expected {2 * cutoff.dim} sector amplitudes, got {amplitudes.shape}")
    full = np.zeros(4 * cutoff.dim, dtype=amplitudes.dtype)
    full[sector_indices(sector, cutoff)] = amplitudes
    return StateVector.normalized(full, full_labels(cutoff))


def build_quadratic_effective(
    p: ModelParams,
    phase: PhaseLabel,
    cutoff: FockCutoff | int,
    sector: SectorLabel | str = SectorLabel.PLUS,
) -> OperatorMatrix:
    """Boson-only low-energy Hamiltonian of one sector in the given phase.

    Normal: ``omega a^dag a - (omega g^2/4)(a + a^dag)^2 - gamma``.
    Superradiant: ``omega a^dag a - (omega/(4 g^4))(a + a^dag)^2 - gamma (g^2 + g^-2)/2``.
    """
    sector = SectorLabel.parse(sector)
    cutoff = as_cutoff(cutoff)
    g = abs(sector_g(p, sector))
    if phase is PhaseLabel.NORMAL:
        if g >= 1.0:
            raise PhaseMismatchError(f"normal-phase form needs g < 1, got g={g}")
        coeff = p.omega * g**2 / 4.0
        const = -p.gamma
    else:
        if g <= 1.0:
            raise PhaseMismatchError(f"superradiant form needs g > 1, got g={g}")
        coeff = p.omega / (4.0 * g**4)
        const = -p.gamma * (g**2 + g**-2) / 2.0
    a, n_op, _ = sparse_ladder(cutoff)
    # (a + a^dag)^2 = a^2 + a^dag^2 + 2N + 1, each term truncated exactly
    a2 = (a @ a).tocsr()
    x2 = a2 + a2.T + 2.0 * n_op + sp.identity(cutoff.dim)
    h = p.omega * n_op - coeff * x2 + const * sp.identity(cutoff.dim)
    return _finish(h, tuple(str(n) for n in range(cutoff.dim)), sparse=None)
