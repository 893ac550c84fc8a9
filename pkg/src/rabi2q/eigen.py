"""Lowest eigenpairs of Hermitian operators and Fock-cutoff convergence ladders."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NonHermitianError
from .fock import FockCutoff, OperatorMatrix, StateVector

log = logging.getLogger(__name__)

DENSE_MAX_DIM = 2000
HERMITIAN_TOL = 1e-10
RESIDUAL_TOL = 1e-8


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: list[StateVector]
    cutoff_used: FockCutoff | None
    residual_norms: np.ndarray
    converged: bool
    method: str = "dense"
    # (n_max, eigenvalues) for every rung of a cutoff ladder
    history: list[tuple[int, np.ndarray]] = field(default_factory=list)

    def vectors(self) -> np.ndarray:
        """Eigenvectors as columns of a ``(dim, k)`` array."""
        return np.column_stack([v.amplitudes for v in self.eigenvectors])

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual_norms)) if self.residual_norms.size else 0.0


def gershgorin_lower_bound(m) -> float:
    """Lower bound on the spectrum of a Hermitian matrix from Gershgorin discs."""
    if sp.issparse(m):
        m = m.tocsr()
        diag = m.diagonal().real
        radius = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(diag)
    else:
        m = np.asarray(m)
        diag = np.diag(m).real
        radius = np.abs(m).sum(axis=1) - np.abs(diag)
    return float(np.min(diag - radius))


def _residuals(m, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    return np.linalg.norm(m @ vecs - vecs * vals, axis=0)


def _orthonormalize(vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    # Gram-Schmidt in ascending order keeps degenerate pairs orthonormal.
    q, _ = np.linalg.qr(vecs)
    signs = np.sign(np.real(np.sum(q.conj() * vecs, axis=0)))
    signs[signs == 0] = 1.0
    return q * signs


def _iterative(m, k: int, tol: float, sigma: float | None):
    m = m.tocsc()
    # a certified lower bound keeps shift-invert from skipping the bottom of the spectrum
    shift = gershgorin_lower_bound(m) - 1.0 if sigma is None else sigma
    ncv = min(m.shape[0] - 1, max(2 * k + 1, 20))
    try:
        vals, vecs = spla.eigsh(m, k=k, sigma=shift, which="LM", tol=tol, ncv=ncv)
        ok = True
    except spla.ArpackNoConvergence as exc:
        vals, vecs, ok = exc.eigenvalues, exc.eigenvectors, False
    order = np.argsort(vals)
    return vals[order], vecs[:, order], ok


def lowest_eigenpairs(
    H: OperatorMatrix,
    k: int = 2,
    tol: float = 0.0,
    method: str = "auto",
    sigma: float | None = None,
) -> EigenResult:
    """Algebraically smallest ``k`` eigenpairs of a Hermitian operator.

    ``method`` is ``"dense"``, ``"iterative"`` (shift-invert Lanczos) or
    ``"auto"`` (dense up to dimension 2000). ``tol`` is the Lanczos
    tolerance; 0 means machine precision. ``sigma``, if given, must lie
    below the lowest wanted eigenvalue.
    """
    if not 1 <= k <= H.dim:
        raise ValueError(f"k must be in [1, {H.dim}], got {k}")
    if H.hermiticity_defect() > HERMITIAN_TOL:
        raise NonHermitianError(f"operator is not Hermitian (defect {H.hermiticity_defect():.2e})")
    if method == "auto":
        method = "dense" if H.dim <= DENSE_MAX_DIM else "iterative"
    # ARPACK needs k < dim
    if method == "iterative" and k >= H.dim - 1:
        method = "dense"

    if method == "dense":
        vals, vecs = scipy.linalg.eigh(H.toarray(), subset_by_index=[0, k - 1])
        solver_ok = True
    elif method == "iterative":
        m = H.entries if H.is_sparse else sp.csr_matrix(H.entries)
        vals, vecs, solver_ok = _iterative(m, k, tol, sigma)
    else:
        raise ValueError(f"unknown method {method!r}")

    if vecs.shape[1]:
        vecs = _orthonormalize(vals, vecs)
    res = _residuals(H.entries, vals, vecs)
    converged = bool(solver_ok and len(vals) == k and np.all(res <= RESIDUAL_TOL))
    states = [StateVector.normalized(vecs[:, i], H.basis_labels) for i in range(vecs.shape[1])]
    return EigenResult(np.asarray(vals, dtype=float), states, None, res, converged, method)


def default_energy_tol(energy: float) -> float:
    return 1e-9 * max(1.0, abs(energy))


def converge_cutoff(
    builder: Callable[[FockCutoff], OperatorMatrix],
    k: int = 2,
    energy_tol: float | None = None,
    n_start: int = 32,
    n_cap: int = 4096,
    method: str = "auto",
) -> EigenResult:
    """Double ``n_max`` from ``n_start`` until the lowest ``k`` energies settle.

    Settled means every eigenvalue moved by less than ``energy_tol``
    (default ``1e-9 * max(1, |E|)``) between successive cutoffs; the
    smaller of the two agreeing cutoffs is returned. Hitting ``n_cap``
    first returns the last result with ``converged=False``.
    """
    if n_start < 8:
        raise ValueError(f"n_start must be >= 8, got {n_start}")
    if n_cap < n_start:
        raise ValueError(f"n_cap ({n_cap}) must be >= n_start ({n_start})")

    history: list[tuple[int, np.ndarray]] = []
    prev: EigenResult | None = None
    n = n_start
    while True:
        cutoff = FockCutoff(n)
        result = lowest_eigenpairs(builder(cutoff), k=k, method=method)
        result.cutoff_used = cutoff
        history.append((n, result.eigenvalues.copy()))
        if prev is not None and len(prev.eigenvalues) == len(result.eigenvalues):
            tols = (
                np.array([default_energy_tol(e) for e in result.eigenvalues])
                if energy_tol is None
                else np.full(k, energy_tol)
            )
            if np.all(np.abs(result.eigenvalues - prev.eigenvalues) < tols):
                # the smaller rung is the one certified by its successor
                prev.history = history
                return prev
        if n >= n_cap:
            log.warning("cutoff ladder exhausted at n_max=%d without settling", n)
            result.converged = False
            result.history = history
            return result
        prev = result
        n = min(2 * n, n_cap)
