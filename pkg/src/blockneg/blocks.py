"""Reduced density operators of two separated end blocks from a DMRG state.

Starting from the converged ``S s s E`` state at the centre bond, tracing the
two free sites gives rho_SE for blocks of Delta = N/2 - 1 sites at
separation x = 2.  Each stored block transform re-expresses a block as
(smaller block) x (inner site); tracing those two inner sites yields the
operator for Delta - 1 and x + 2.  Repeating walks the ratio mu = x / Delta
from 2 / (N/2 - 1) up to N - 2.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator, NamedTuple, Optional

import numpy as np

from .dmrg import BlockBasis, Chains, SuperblockState
from .entanglement import DensityOperator

TRACE_TOLERANCE = 1e-8


class BlockError(ValueError):
    pass


class SeriesPoint(NamedTuple):
    block_len: int
    separation: int
    mu: Fraction
    rho: DensityOperator


def _check_trace(rho: np.ndarray, tol: float = TRACE_TOLERANCE) -> None:
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise BlockError(f"trace of rho_SE is {tr:.12f}; the state is not normalized")


def _operator(rho4: np.ndarray, left: BlockBasis, right: BlockBasis, separation: int, modulus: int):
    d_s, d_e = left.dim, right.dim
    return DensityOperator(
        rho4.reshape(d_s * d_e, d_s * d_e),
        d_s,
        d_e,
        block_len=left.block_len,
        separation=separation,
        basis_tag="decimated",
        charges_s=left.charges,
        charges_e=right.charges,
        modulus=modulus,
    )


def extract_rho_se(state: SuperblockState) -> DensityOperator:
    """Trace the two free sites out of the centre superblock state."""
    d_s, _, _, d_e = state.psi.shape
    if state.left.block_len != state.right.block_len:
        raise BlockError("extract_rho_se needs the symmetric configuration")
    x = state.psi.transpose(0, 3, 1, 2).reshape(d_s * d_e, 4)
    rho = x @ x.T
    _check_trace(rho)
    return _operator(rho, state.left, state.right, 2, state.sector.modulus)


def _trace_environment_site(rho4: np.ndarray, t_r: np.ndarray) -> np.ndarray:
    """sum_e B_e rho B_e^T on the environment indices; t_r[e, beta, b]."""
    d_s, d_e = rho4.shape[:2]
    out = None
    for b in t_r:
        y = rho4.reshape(-1, d_e) @ b.T  # (a, b, a', beta')
        y = np.matmul(b, y.reshape(d_s, d_e, -1))  # (a, beta, a' beta')
        out = y if out is None else out + y
    return out.reshape(d_s, t_r.shape[1], d_s, t_r.shape[1])


def _trace_system_site(rho4: np.ndarray, t_l: np.ndarray) -> np.ndarray:
    """sum_s A_s rho A_s^T on the system indices; t_l[s, alpha, a]."""
    d_s, d_e = rho4.shape[:2]
    out = None
    for a in t_l:
        y = np.matmul(a, rho4.reshape(d_s * d_e, d_s, d_e))  # (a, beta, alpha', beta')
        y = a @ y.reshape(d_s, -1)  # (alpha, beta alpha' beta')
        out = y if out is None else out + y
    return out.reshape(t_l.shape[1], d_e, t_l.shape[1], d_e)


def unnest_step(
    rho: DensityOperator,
    left: BlockBasis,
    right: BlockBasis,
    previous_left: Optional[BlockBasis] = None,
    previous_right: Optional[BlockBasis] = None,
) -> DensityOperator:
    """Expand both blocks by one level and trace out their inner boundary sites.

    ``left`` and ``right`` are the blocks rho is currently expressed in.  The
    optional ``previous_*`` blocks (one site shorter) supply charge labels for
    the result; without them the result carries none.
    """
    if (rho.d_s, rho.d_e) != (left.dim, right.dim):
        raise BlockError(
            f"rho factors ({rho.d_s}, {rho.d_e}) do not match block dims ({left.dim}, {right.dim})"
        )
    labelled = previous_left is not None and previous_right is not None
    if labelled and (left.dim_prev != previous_left.dim or right.dim_prev != previous_right.dim):
        raise BlockError("previous blocks do not match the transforms")
    left.check_isometry(1e-10)
    right.check_isometry(1e-10)
    t_l = np.ascontiguousarray(left.transform.reshape(left.dim_prev, 2, left.dim).transpose(1, 0, 2))
    t_r = right.transform.reshape(2, right.dim_prev, right.dim)
    out = _trace_system_site(_trace_environment_site(rho.as_tensor(), t_r), t_l)
    d = left.dim_prev * right.dim_prev
    _check_trace(out.reshape(d, d), 1e-10 + abs(rho.trace - 1.0))
    if labelled:
        return _operator(out, previous_left, previous_right, rho.separation + 2, rho.modulus)
    return DensityOperator(
        out.reshape(d, d),
        left.dim_prev,
        right.dim_prev,
        block_len=left.block_len - 1,
        separation=rho.separation + 2,
        basis_tag="decimated",
    )


def mu_series(state: SuperblockState, chains: Chains) -> Iterator[SeriesPoint]:
    """Yield (Delta, x, mu, rho_SE) from x = 2 up to Delta = 1, one step at a time."""
    rho = extract_rho_se(state)
    n = state.n_sites
    delta = state.left.block_len
    if chains.left[delta - 1].dim != rho.d_s or chains.right[delta - 1].dim != rho.d_e:
        raise BlockError("chains do not belong to this state")
    while True:
        x = n - 2 * delta
        yield SeriesPoint(delta, x, Fraction(x, delta), rho)
        if delta == 1:
            return
        rho = unnest_step(
            rho, chains.left[delta - 1], chains.right[delta - 1],
            chains.left[delta - 2], chains.right[delta - 2],
        )
        delta -= 1


def physical_embedding(chain: list, block_len: int) -> np.ndarray:
    """Isometry from a decimated block onto its 2**block_len physical states.

    Sites are ordered left to right with the leftmost site most significant,
    matching :mod:`blockneg.exact`.
    """
    u = chain[0].transform
    for block in chain[1:block_len]:
        if block.side == "left":
            u = np.kron(u, np.eye(2)) @ block.transform
        else:
            u = np.kron(np.eye(2), u) @ block.transform
    return u


def to_physical(rho: DensityOperator, chains: Chains) -> DensityOperator:
    u_s = physical_embedding(chains.left, rho.block_len)
    u_e = physical_embedding(chains.right, rho.block_len)
    u = np.kron(u_s, u_e)
    return DensityOperator(
        u @ rho.matrix @ u.T,
        u_s.shape[0],
        u_e.shape[0],
        block_len=rho.block_len,
        separation=rho.separation,
        basis_tag="physical",
    )
