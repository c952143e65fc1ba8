"""Exact diagonalization oracle for small chains.

Used to validate the DMRG pipeline: ground states, reduced density operators
of arbitrary site subsets and the negativity between two blocks, all in the
physical spin basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .entanglement import DensityOperator, negativity
from .model import (
    DimensionError,
    ModelParams,
    Sector,
    basis_charges,
    build_sparse_hamiltonian,
    ground_sector,
)

MAX_ORACLE_SITES = 24
MAX_RDM_SITES = 12
DENSE_SECTOR_DIM = 1024
DEGENERACY_GAP = 1e-10


class ConvergenceError(RuntimeError):
    pass


@dataclass
class PureState:
    amplitudes: np.ndarray
    n_sites: int
    sector: Optional[Sector] = None

    def __post_init__(self):
        if self.amplitudes.shape != (2**self.n_sites,):
            raise DimensionError(f"expected {2**self.n_sites} amplitudes, got {self.amplitudes.shape}")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-12:
            self.amplitudes = self.amplitudes / norm


class GroundState(NamedTuple):
    energy: float
    state: PureState
    gap: float
    """Distance to the next level inside the same symmetry sector."""

    @property
    def degenerate(self) -> bool:
        return self.gap < DEGENERACY_GAP


def exact_ground_state(
    params: ModelParams, sector: Optional[Sector] | str = "auto", tol: float = 1e-12
) -> GroundState:
    """Lowest eigenpair of H, restricted to a conserved-charge sector.

    ``sector="auto"`` uses :func:`blockneg.model.ground_sector`; ``None``
    diagonalizes the full Hilbert space.
    """
    n = params.n_sites
    if n > MAX_ORACLE_SITES:
        raise DimensionError(f"exact diagonalization limited to N <= {MAX_ORACLE_SITES}")
    h = build_sparse_hamiltonian(params, MAX_ORACLE_SITES)
    if sector == "auto":
        sector = ground_sector(params)
        if sector.modulus == 2:
            # both parities may host the ground state when gamma^2 + lam^2 < 1
            both = [_sector_ground_state(h, params, Sector(2, t), tol) for t in (0, 1)]
            return min(both, key=lambda g: g.energy)
    return _sector_ground_state(h, params, sector, tol)


def _sector_ground_state(h, params: ModelParams, sector: Optional[Sector], tol: float) -> GroundState:
    n = params.n_sites
    if sector is None:
        idx = np.arange(2**n)
    else:
        idx = np.flatnonzero(sector.allowed(basis_charges(n)))
    hs = h[idx][:, idx]
    dim = len(idx)
    if dim <= DENSE_SECTOR_DIM:
        evals, evecs = np.linalg.eigh(hs.toarray())
        energy, vec = evals[0], evecs[:, 0]
        gap = evals[1] - evals[0] if dim > 1 else np.inf
    else:
        # deterministic start vector
        v0 = np.ones(dim) + np.linspace(0.0, 1.0, dim)
        try:
            evals, evecs = spla.eigsh(hs, k=2, which="SA", tol=tol, v0=v0, maxiter=200 * dim)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos did not converge for {params}") from exc
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
        energy, vec = evals[0], evecs[:, 0]
        gap = evals[1] - evals[0]
    residual = np.linalg.norm(hs @ vec - energy * vec)
    if residual > 1e-8:
        raise ConvergenceError(f"ground state residual {residual:.2e} too large")
    amps = np.zeros(2**n)
    amps[idx] = vec
    # fix the global sign so the largest component is positive
    k = np.argmax(np.abs(amps))
    amps *= np.sign(amps[k])
    return GroundState(float(energy), PureState(amps, n, sector), float(gap))


def reduced_density_operator(
    state: PureState, sites: Sequence[int], n_system: Optional[int] = None
) -> DensityOperator:
    """Reduced density operator on ``sites`` (1-based), in the given order.

    The first ``n_system`` sites form the system factor; the rest form the
    environment.  By default all sites belong to the system.
    """
    n = state.n_sites
    sites = list(sites)
    if len(set(sites)) != len(sites) or not all(1 <= s <= n for s in sites):
        raise ValueError(f"invalid site list {sites} for N={n}")
    if len(sites) > MAX_RDM_SITES:
        raise DimensionError(f"reduced operators limited to {MAX_RDM_SITES} sites")
    if n_system is None:
        n_system = len(sites)
    kept = [s - 1 for s in sites]
    rest = [k for k in range(n) if k not in kept]
    psi = state.amplitudes.reshape((2,) * n).transpose(kept + rest)
    psi = psi.reshape(2 ** len(kept), -1)
    rho = psi @ psi.conj().T
    d_s = 2**n_system
    d_e = 2 ** (len(kept) - n_system)
    out = DensityOperator(rho, d_s, d_e)
    if state.sector is not None:
        # a state of definite charge gives a reduced operator that conserves it too
        out.charges_s = basis_charges(n_system)
        out.charges_e = basis_charges(len(kept) - n_system)
        out.modulus = state.sector.modulus
    return out


def block_sites(n_sites: int, block_len: int, separation: int) -> tuple[list[int], list[int]]:
    """Two blocks of ``block_len`` sites, ``separation`` apart, centred on the chain."""
    span = 2 * block_len + separation
    if block_len < 1 or separation < 0 or span > n_sites:
        raise ValueError(f"blocks ({block_len}, {separation}) do not fit in N={n_sites}")
    offset = (n_sites - span) // 2
    system = list(range(offset + 1, offset + block_len + 1))
    env = list(range(offset + block_len + separation + 1, offset + span + 1))
    return system, env


def block_density_operator(
    state: PureState, block_len: int, separation: int
) -> DensityOperator:
    system, env = block_sites(state.n_sites, block_len, separation)
    rho = reduced_density_operator(state, system + env, n_system=block_len)
    rho.block_len = block_len
    rho.separation = separation
    return rho


def oracle_negativity(params: ModelParams, block_len: int, separation: int, ground=None) -> float:
    if ground is None:
        ground = exact_ground_state(params)
    return negativity(block_density_operator(ground.state, block_len, separation)).negativity
