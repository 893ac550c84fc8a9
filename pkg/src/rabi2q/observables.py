"""Physical quantities on tripartite states.

States are :class:`StateVector` instances on the full qubit-major basis
produced by :func:`rabi2q.model.full_labels` (sector-basis vectors must be
lifted with :func:`rabi2q.model.embed_sector_state` first).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, InvalidDensityError
from .fock import StateVector

_SIGMA_Y2 = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))
# (sigma1_z + sigma2_z)/2 on uu, ud, du, dd
_MAG = np.array([1.0, 0.0, 0.0, -1.0])


@dataclass(frozen=True, eq=False)
class TwoQubitDensity:
    """Reduced state of the two qubits in the ``uu, ud, du, dd`` basis."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise InvalidDensityError(f"two-qubit density must be 4x4, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise InvalidDensityError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise InvalidDensityError(f"density matrix trace is {np.trace(m).real!r}")
        if np.min(np.linalg.eigvalsh(m)) < -1e-10:
            raise InvalidDensityError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)


def _qubit_major(psi: StateVector) -> np.ndarray:
    if psi.dim % 4 or not psi.basis_labels[0].startswith("uu|"):
        raise DimensionMismatchError("state does not live on the full two-qubit x Fock basis")
    return psi.amplitudes.reshape(4, psi.dim // 4)


def partial_trace_boson(psi: StateVector) -> TwoQubitDensity:
    """``rho[q, q'] = sum_n psi[q, n] conj(psi[q', n])``."""
    m = _qubit_major(psi)
    rho = m @ m.conj().T
    rho = (rho + rho.conj().T) / 2.0
    return TwoQubitDensity(rho)


def concurrence(rho: TwoQubitDensity | np.ndarray) -> float:
    """Wootters concurrence ``max(0, mu1 - mu2 - mu3 - mu4)``.

    The ``mu`` are the square roots of the eigenvalues of ``rho rho_tilde``.
    They are computed as the singular values of ``W^T (Y x Y) W`` for a
    factor ``rho = W W^dag``, which avoids square roots of roundoff-level
    eigenvalues when ``rho`` is (nearly) pure.
    """
    if not isinstance(rho, TwoQubitDensity):
        rho = TwoQubitDensity(rho)
    w, v = np.linalg.eigh(rho.matrix)
    factor = v * np.sqrt(np.clip(w, 0.0, None))
    mu = np.linalg.svd(factor.T @ _SIGMA_Y2 @ factor, compute_uv=False)
    c = mu[0] - mu[1] - mu[2] - mu[3]
    return float(min(1.0, max(0.0, c)))


def magnetization(psi: StateVector) -> dict[str, float]:
    """Mean and mean square of ``(sigma1_z + sigma2_z)/2``."""
    weights = np.sum(np.abs(_qubit_major(psi)) ** 2, axis=1)
    return {"mean": float(weights @ _MAG), "mean_square": float(weights @ _MAG**2)}


def mean_photon(psi: StateVector) -> float:
    m = _qubit_major(psi)
    return float(np.sum(np.abs(m) ** 2 @ np.arange(m.shape[1])))


def _check_dims(a: StateVector, b: StateVector):
    if a.dim != b.dim:
        raise DimensionMismatchError(f"state dimensions differ ({a.dim} vs {b.dim})")


def state_fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|^2``."""
    _check_dims(a, b)
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def subspace_fidelity(vectors: Sequence[StateVector], b: StateVector) -> float:
    """Weight of ``b`` inside the span of orthonormal ``vectors``."""
    for v in vectors:
        _check_dims(v, b)
    basis = np.column_stack([v.amplitudes for v in vectors])
    q, _ = np.linalg.qr(basis)
    return float(min(1.0, np.linalg.norm(q.conj().T @ b.amplitudes) ** 2))


def boson_parity_flip(psi: StateVector) -> np.ndarray:
    """Amplitudes of ``sigma1_x sigma2_x (-1)^(a^dag a) |psi>``."""
    m = _qubit_major(psi)
    signs = (-1.0) ** np.arange(m.shape[1])
    return (m[::-1] * signs).ravel()


def parity_eigenstates(vectors: Sequence[StateVector]) -> tuple[list[StateVector], np.ndarray]:
    """Rotate a (quasi-)degenerate set into eigenstates of the Z2 parity.

    The parity ``sigma1_x sigma2_x (-1)^(a^dag a)`` commutes with the
    Hamiltonian whenever the sector bias vanishes, so its eigenstates are the
    symmetric and antisymmetric cat combinations. Returns the rotated states
    and their parity eigenvalues.
    """
    basis = np.column_stack([v.amplitudes for v in vectors])
    flipped = np.column_stack([boson_parity_flip(v) for v in vectors])
    pm = basis.conj().T @ flipped
    vals, rot = np.linalg.eigh((pm + pm.conj().T) / 2.0)
    rotated = basis @ rot
    labels = vectors[0].basis_labels
    return [StateVector.normalized(rotated[:, i], labels) for i in range(rotated.shape[1])], vals
