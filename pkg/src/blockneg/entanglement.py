"""Partial transpose, negativity and entropies of bipartite density operators."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

ZERO_NEGATIVITY = 1e-12
PSD_TOLERANCE = 1e-8


class EntanglementError(ValueError):
    pass


@dataclass
class DensityOperator:
    """Hermitian operator on a system (x) environment product space.

    Row index is ``i_system * d_e + j_environment``.  ``charges_s`` and
    ``charges_e`` are optional conserved-charge labels of the factor bases;
    when present, ``modulus`` tells how they add (0 for integer addition,
    2 for parity) and the partial transpose is diagonalized sector by sector.
    """

    matrix: np.ndarray
    d_s: int
    d_e: int
    block_len: Optional[int] = None
    separation: Optional[int] = None
    basis_tag: str = "physical"
    charges_s: Optional[np.ndarray] = None
    charges_e: Optional[np.ndarray] = None
    modulus: int = 0

    def __post_init__(self):
        if self.matrix.shape != (self.d_s * self.d_e, self.d_s * self.d_e):
            raise EntanglementError(
                f"matrix of shape {self.matrix.shape} does not factor as {self.d_s} x {self.d_e}"
            )

    @property
    def mu(self) -> Optional[Fraction]:
        if self.block_len is None or self.separation is None:
            return None
        return Fraction(self.separation, self.block_len)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def as_tensor(self) -> np.ndarray:
        return self.matrix.reshape(self.d_s, self.d_e, self.d_s, self.d_e)


@dataclass(frozen=True)
class NegativityResult:
    negativity: float
    log_negativity: float
    min_eigenvalue: float
    d_s: int
    d_e: int
    block_len: Optional[int] = None
    separation: Optional[int] = None
    mu: Optional[Fraction] = None


def partial_transpose(rho: DensityOperator) -> np.ndarray:
    """<i j| rho^T_S |k l> = <k j| rho |i l>, transposing the system factor."""
    t = rho.as_tensor()
    return t.transpose(2, 1, 0, 3).reshape(rho.matrix.shape)


def _pt_sectors(rho: DensityOperator):
    """Yield the diagonal blocks of the partial transpose.

    The transposed operator conserves (q_E - q_S), so it is block diagonal
    whenever the factor bases carry definite charges.
    """
    qs = np.asarray(rho.charges_s)
    qe = np.asarray(rho.charges_e)
    key = qe[None, :] - qs[:, None]
    if rho.modulus:
        key = key % rho.modulus
    key = key.ravel()
    t = rho.as_tensor()
    for value in np.unique(key):
        flat = np.flatnonzero(key == value)
        i, j = np.divmod(flat, rho.d_e)
        yield t[i[None, :], j[:, None], i[:, None], j[None, :]]


def pt_spectrum(rho: DensityOperator) -> np.ndarray:
    """Eigenvalues of the partial transpose, ascending."""
    if rho.charges_s is not None and rho.charges_e is not None:
        evals = np.concatenate([np.linalg.eigvalsh(block) for block in _pt_sectors(rho)])
        return np.sort(evals)
    return np.linalg.eigvalsh(partial_transpose(rho))


def negativity(rho: DensityOperator) -> NegativityResult:
    evals = pt_spectrum(rho)
    neg = float(np.sum(np.abs(evals)) - 1.0)
    if abs(neg) < ZERO_NEGATIVITY:
        neg = 0.0
    return NegativityResult(
        negativity=neg,
        log_negativity=float(np.log2(neg + 1.0)),
        min_eigenvalue=float(evals[0]),
        d_s=rho.d_s,
        d_e=rho.d_e,
        block_len=rho.block_len,
        separation=rho.separation,
        mu=rho.mu,
    )


def log_negativity(value: float) -> float:
    return float(np.log2(value + 1.0))


def von_neumann_entropy(rho: DensityOperator) -> float:
    """Entropy in bits."""
    p = np.linalg.eigvalsh(rho.matrix)
    if p[0] < -PSD_TOLERANCE:
        raise EntanglementError(f"operator is not positive semidefinite (min eigenvalue {p[0]:.3e})")
    p = p[p > 1e-14]
    return float(-np.sum(p * np.log2(p)))
