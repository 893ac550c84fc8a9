"""Truncated single-mode boson operators and squeezed vacua.

All matrices live on the span of Fock states ``|0>, ..., |n_max>``. The
containers defined here (:class:`OperatorMatrix`, :class:`StateVector`) are
shared by the rest of the package, and carry string basis labels so a
vector can always be traced back to the tensor-product basis it lives on.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import DimensionMismatchError, InvalidCutoffError, TruncationWarning

ArrayOrSparse = Union[np.ndarray, sp.spmatrix, sp.sparray]

NORM_TOL = 1e-10
UNITARITY_WARN_TOL = 1e-8


@dataclass(frozen=True)
class FockCutoff:
    """Highest retained boson occupation."""

    n_max: int

    def __post_init__(self):
        if isinstance(self.n_max, bool) or int(self.n_max) != self.n_max:
            raise InvalidCutoffError(f"n_max must be an integer, got {self.n_max!r}")
        if self.n_max < 1:
            raise InvalidCutoffError(f"n_max must be >= 1, got {self.n_max}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def dim(self) -> int:
        return self.n_max + 1


def as_cutoff(cutoff: FockCutoff | int) -> FockCutoff:
    return cutoff if isinstance(cutoff, FockCutoff) else FockCutoff(cutoff)


def fock_labels(cutoff: FockCutoff) -> tuple[str, ...]:
    return tuple(str(n) for n in range(cutoff.dim))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """A finite matrix over a labeled basis, dense or CSR."""

    entries: ArrayOrSparse
    basis_labels: tuple[str, ...]

    def __post_init__(self):
        shape = self.entries.shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise DimensionMismatchError(f"operator must be square, got shape {shape}")
        if len(self.basis_labels) != shape[0]:
            raise DimensionMismatchError(
                f"{len(self.basis_labels)} labels for a {shape[0]}-dimensional operator"
            )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.entries)

    def toarray(self) -> np.ndarray:
        if self.is_sparse:
            return self.entries.toarray()
        return np.asarray(self.entries)

    def hermiticity_defect(self) -> float:
        diff = self.entries - self.entries.conj().T
        if sp.issparse(diff):
            return float(abs(diff).max()) if diff.nnz else 0.0
        return float(np.max(np.abs(diff))) if diff.size else 0.0

    def unitarity_defect(self) -> float:
        u = self.toarray()
        return float(np.max(np.abs(u.conj().T @ u - np.eye(self.dim))))

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.entries @ vec


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitude vector over a labeled basis."""

    amplitudes: np.ndarray
    basis_labels: tuple[str, ...]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes)
        if amps.ndim != 1:
            raise DimensionMismatchError("amplitudes must be one-dimensional")
        if len(self.basis_labels) != amps.shape[0]:
            raise DimensionMismatchError(
                f"{len(self.basis_labels)} labels for {amps.shape[0]} amplitudes"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes: np.ndarray, basis_labels: Sequence[str]) -> StateVector:
        amps = np.asarray(amplitudes)
        return cls(amps / np.linalg.norm(amps), tuple(basis_labels))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]


def _lowering(cutoff: FockCutoff) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff.dim, dtype=float)), k=1)


def ladder_operators(cutoff: FockCutoff | int) -> dict[str, OperatorMatrix]:
    """Return ``a``, ``a_dag``, ``n_op`` and ``x_op = a + a_dag`` as dense matrices."""
    cutoff = as_cutoff(cutoff)
    labels = fock_labels(cutoff)
    a = _lowering(cutoff)
    a_dag = a.conj().T
    return {
        "a": OperatorMatrix(a, labels),
        "a_dag": OperatorMatrix(a_dag, labels),
        "n_op": OperatorMatrix(np.diag(np.arange(cutoff.dim, dtype=float)), labels),
        "x_op": OperatorMatrix(a + a_dag, labels),
    }


def sparse_ladder(cutoff: FockCutoff) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """Sparse ``(a, n_op, x_op)`` for Hamiltonian assembly."""
    a = sp.diags(np.sqrt(np.arange(1, cutoff.dim, dtype=float)), 1, format="csr")
    n_op = sp.diags(np.arange(cutoff.dim, dtype=float), 0, format="csr")
    return a, n_op, (a + a.T).tocsr()


def _squeeze_generator(r: float, cutoff: FockCutoff) -> sp.csr_matrix:
    # (r/2)(a_dag^2 - a^2) on the truncated space; a^2 truncates exactly.
    n = np.arange(cutoff.dim - 2, dtype=float)
    a2 = sp.diags(np.sqrt((n + 1.0) * (n + 2.0)), 2, format="csr", shape=(cutoff.dim, cutoff.dim))
    return (0.5 * r) * (a2.T - a2).tocsr()


def cutoff_is_adequate(r: float, cutoff: FockCutoff) -> bool:
    """Heuristic: the squeezed-vacuum tail is negligible once ``n_max >= 3 exp(4|r|)``."""
    return cutoff.n_max >= 3.0 * np.exp(4.0 * abs(r))


def _check_r(r: float) -> float:
    r = float(r)
    if not np.isfinite(r):
        raise ValueError(f"squeeze parameter must be finite, got {r!r}")
    return r


def squeeze_operator(r: float, cutoff: FockCutoff | int) -> OperatorMatrix:
    """Dense ``exp((r/2)(a_dag^2 - a^2))`` on the truncated space.

    Emits :class:`TruncationWarning` when the cutoff heuristic fails or the
    truncated exponential drifts from unitarity by more than 1e-8.
    """
    cutoff = as_cutoff(cutoff)
    r = _check_r(r)
    if not cutoff_is_adequate(r, cutoff):
        warnings.warn(
            f"n_max={cutoff.n_max} is below 3*exp(4|r|)={3 * np.exp(4 * abs(r)):.1f} for r={r}",
            TruncationWarning,
            stacklevel=2,
        )
    u = scipy.linalg.expm(_squeeze_generator(r, cutoff).toarray())
    op = OperatorMatrix(u, fock_labels(cutoff))
    defect = op.unitarity_defect()
    if defect > UNITARITY_WARN_TOL:
        warnings.warn(f"squeeze operator unitarity defect {defect:.2e}", TruncationWarning, stacklevel=2)
    return op


def squeezed_vacuum(r: float, cutoff: FockCutoff | int) -> StateVector:
    """``S(r)|0>`` on the truncated space, renormalized."""
    cutoff = as_cutoff(cutoff)
    r = _check_r(r)
    if not cutoff_is_adequate(r, cutoff):
        warnings.warn(
            f"n_max={cutoff.n_max} is below 3*exp(4|r|)={3 * np.exp(4 * abs(r)):.1f} for r={r}",
            TruncationWarning,
            stacklevel=2,
        )
    vac = np.zeros(cutoff.dim)
    vac[0] = 1.0
    if r == 0.0:
        return StateVector(vac, fock_labels(cutoff))
    psi = expm_multiply(_squeeze_generator(r, cutoff), vac)
    return StateVector.normalized(psi, fock_labels(cutoff))


def displaced(psi: np.ndarray, alpha: float) -> np.ndarray:
    """Apply ``exp(alpha (a_dag - a))`` (real ``alpha``) to a Fock-space vector."""
    dim = psi.shape[0]
    a = sp.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, format="csr")
    out = expm_multiply((alpha * (a.T - a)).tocsr(), psi)
    return out / np.linalg.norm(out)
