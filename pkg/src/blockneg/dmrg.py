"""Finite-system DMRG for the open XY chain.

This is the block formulation: a superblock ``L s1 s2 R`` made of two
decimated blocks and two bare sites.  Every block keeps the isometry that
built it from the next-smaller block and one site, so that a decimated block
can later be expanded back into (smaller block) x (site).

Conventions
-----------
* left block of length l:  basis index of (block_{l-1} x site) is ``a * 2 + s``
* right block of length r: basis index of (site x block_{r-1}) is ``s * d + b``
* ``chains.left[k]`` / ``chains.right[k]`` hold the blocks of ``k + 1`` sites
* conserved charge = number of down spins, reduced by the sector modulus
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse.linalg as spla

from .model import (
    IDENTITY,
    SITE_CHARGES,
    ModelParams,
    Sector,
    bond_operators,
    ground_sector,
    parity_ambiguous,
    site_term,
)

log = logging.getLogger(__name__)

DENSE_SUPERBLOCK_DIM = 256
TIE_TOLERANCE = 1e-14


class DmrgError(RuntimeError):
    pass


class DmrgWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DmrgConfig:
    max_kept_states: int = 60
    n_sweeps: int = 6
    eigensolver_tol: float = 1e-12
    target_epsilon: float = 1e-10
    sector: Optional[Sector] = None

    def __post_init__(self):
        if self.max_kept_states < 2:
            raise ValueError("max_kept_states must be >= 2")
        if self.n_sweeps < 1:
            raise ValueError("n_sweeps must be >= 1")


@dataclass
class BlockBasis:
    block_len: int
    side: str
    transform: np.ndarray
    block_hamiltonian: np.ndarray
    edge_operators: list
    charges: np.ndarray

    @property
    def dim(self) -> int:
        return self.transform.shape[1]

    @property
    def dim_prev(self) -> int:
        return self.transform.shape[0] // 2

    def check_isometry(self, tol: float = 1e-12) -> None:
        t = self.transform
        err = np.max(np.abs(t.T @ t - np.eye(t.shape[1])))
        if err > tol:
            raise DmrgError(f"{self.side} block {self.block_len}: transform is not an isometry ({err:.2e})")


class Chains(NamedTuple):
    left: list
    right: list


@dataclass
class SuperblockState:
    psi: np.ndarray
    bond: int
    energy: float
    truncated_weight: float
    schmidt_spectrum: np.ndarray
    left: BlockBasis
    right: BlockBasis
    sector: Sector

    @property
    def n_sites(self) -> int:
        return self.left.block_len + self.right.block_len + 2


@dataclass
class GroundStateResult:
    params: ModelParams
    config: DmrgConfig
    state: SuperblockState
    chains: Chains
    sweep_energies: list
    converged: bool
    # (sweep, side, block_len, epsilon) for every truncation performed
    truncations: list = field(default_factory=list)

    @property
    def energy(self) -> float:
        return self.state.energy

    def max_truncated_weight(self, sweep: Optional[int] = None) -> float:
        """Largest discarded weight, over all steps or over one sweep (-1 = warmup)."""
        eps = [t[3] for t in self.truncations if sweep is None or t[0] == sweep]
        return max(eps) if eps else 0.0


def _site_block(params: ModelParams, side: str, sector: Sector) -> BlockBasis:
    ops = bond_operators(params)
    edge = [a if side == "left" else b for _, a, b in ops]
    return BlockBasis(1, side, np.eye(2), site_term(params).copy(), edge, sector.reduce(SITE_CHARGES))


class _Enlarged(NamedTuple):
    hamiltonian: np.ndarray
    edge: list  # operators on the new site, in enlarged basis
    charges: np.ndarray


def _enlarge(block: BlockBasis, params: ModelParams, sector: Sector) -> _Enlarged:
    d = block.dim
    eye = np.eye(d)
    ops = bond_operators(params)
    h_site = site_term(params)
    if block.side == "left":
        h = np.kron(block.block_hamiltonian, IDENTITY) + np.kron(eye, h_site)
        for (c, _, b), a_blk in zip(ops, block.edge_operators):
            h += c * np.kron(a_blk, b)
        edge = [np.kron(eye, a) for _, a, _ in ops]
        q = np.add.outer(block.charges, SITE_CHARGES).ravel()
    else:
        h = np.kron(IDENTITY, block.block_hamiltonian) + np.kron(h_site, eye)
        for (c, a, _), b_blk in zip(ops, block.edge_operators):
            h += c * np.kron(a, b_blk)
        edge = [np.kron(b, eye) for _, _, b in ops]
        q = np.add.outer(SITE_CHARGES, block.charges).ravel()
    return _Enlarged(h, edge, sector.reduce(q))


def _truncate(rho: np.ndarray, charges: np.ndarray, max_kept: int):
    """Keep the ``max_kept`` heaviest density-matrix eigenvectors, sector by sector.

    Returns (transform, kept charges, discarded weight, full spectrum).
    """
    dim = rho.shape[0]
    weights, vectors, labels = [], [], []
    for q in np.unique(charges):
        idx = np.flatnonzero(charges == q)
        w, v = np.linalg.eigh(rho[np.ix_(idx, idx)])
        w, v = w[::-1], v[:, ::-1]
        full = np.zeros((dim, len(idx)))
        full[idx] = v
        weights.append(w)
        vectors.append(full)
        labels.append(np.full(len(idx), q))
    w = np.concatenate(weights)
    v = np.concatenate(vectors, axis=1)
    q = np.concatenate(labels)
    # weights equal within TIE_TOLERANCE keep eigensolver order
    order = np.lexsort((np.arange(len(w)), -np.floor(w / TIE_TOLERANCE)))
    w, v, q = w[order], v[:, order], q[order]
    n_keep = min(max_kept, dim)
    discarded = float(np.sum(np.clip(w[n_keep:], 0.0, None)))
    return v[:, :n_keep], q[:n_keep], discarded, np.clip(w, 0.0, None)


def _new_block(enl: _Enlarged, transform, charges, side, block_len) -> BlockBasis:
    t = transform
    return BlockBasis(
        block_len=block_len,
        side=side,
        transform=t,
        block_hamiltonian=t.T @ enl.hamiltonian @ t,
        edge_operators=[t.T @ e @ t for e in enl.edge],
        charges=charges,
    )


class _Superblock:
    """Matrix-free superblock Hamiltonian acting on Psi[(a, s1), (s2, b)]."""

    def __init__(self, left: _Enlarged, right: _Enlarged, params: ModelParams, sector: Sector):
        self.left = left
        self.right = right
        self.coupling = [(c, a, b) for c, a, b in zip(
            [c for c, _, _ in bond_operators(params)], left.edge, right.edge)]
        self.shape = (left.hamiltonian.shape[0], right.hamiltonian.shape[0])
        self.mask = sector.allowed(np.add.outer(left.charges, right.charges))
        self.n = int(self.mask.sum())
        if self.n == 0:
            raise DmrgError("target sector is empty for this superblock")

    def apply(self, psi: np.ndarray) -> np.ndarray:
        out = self.left.hamiltonian @ psi + psi @ self.right.hamiltonian.T
        for c, a, b in self.coupling:
            out += c * (a @ psi @ b.T)
        return out

    def matvec(self, v):
        psi = np.zeros(self.shape)
        psi[self.mask] = np.ravel(v)
        return self.apply(psi)[self.mask]

    def dense(self) -> np.ndarray:
        dl, dr = self.shape
        h = np.kron(self.left.hamiltonian, np.eye(dr)) + np.kron(np.eye(dl), self.right.hamiltonian)
        for c, a, b in self.coupling:
            h += c * np.kron(a, b)
        flat = np.flatnonzero(self.mask.ravel())
        return h[np.ix_(flat, flat)]

    def ground_state(self, guess: Optional[np.ndarray], tol: float):
        if self.n <= DENSE_SUPERBLOCK_DIM:
            evals, evecs = np.linalg.eigh(self.dense())
            energy, vec = evals[0], evecs[:, 0]
        else:
            if guess is None or not np.any(guess[self.mask]):
                v0 = np.linspace(1.0, 2.0, self.n)
            else:
                v0 = guess[self.mask]
            op = spla.LinearOperator((self.n, self.n), matvec=self.matvec, dtype=float)
            try:
                evals, evecs = spla.eigsh(op, k=1, which="SA", v0=v0, tol=tol, maxiter=20 * self.n)
            except spla.ArpackNoConvergence as exc:
                raise DmrgError("superblock Lanczos did not converge") from exc
            energy, vec = evals[0], evecs[:, 0]
        psi = np.zeros(self.shape)
        psi[self.mask] = vec
        # deterministic global sign
        k = np.argmax(np.abs(psi))
        psi *= np.sign(psi.flat[k])
        return float(energy), psi


def _resolve_sector(params: ModelParams, config: DmrgConfig) -> Sector:
    if config.sector is not None:
        return config.sector
    if parity_ambiguous(params):
        warnings.warn(
            f"gamma={params.gamma}, lambda={params.lam}: ground-state parity is not fixed "
            "in this region; targeting even parity",
            DmrgWarning,
            stacklevel=3,
        )
    return ground_sector(params)


def _sector_for_length(sector: Sector, params: ModelParams, length: int, auto: bool) -> Sector:
    if sector.modulus:
        return sector
    if auto:
        return ground_sector(params.with_size(length))
    return Sector(0, int(round(sector.target * length / params.n_sites)))


def _record(truncations, sweep, block, eps, config):
    truncations.append((sweep, block.side, block.block_len, eps))
    if eps > config.target_epsilon:
        log.debug("truncated weight %.2e exceeds target at %s block %d", eps, block.side, block.block_len)


def warmup(params: ModelParams, config: DmrgConfig, truncations: Optional[list] = None) -> Chains:
    """Infinite-system growth up to the symmetric N-site configuration."""
    n = params.n_sites
    if n < 4 or n % 2:
        raise DmrgError(f"DMRG needs an even chain of at least 4 sites, got {n}")
    if truncations is None:
        truncations = []
    sector = _resolve_sector(params, config)
    auto = config.sector is None
    left = [_site_block(params, "left", sector)]
    right = [_site_block(params, "right", sector)]
    m = config.max_kept_states
    while len(left) < n // 2 - 1:
        k = len(left)
        target = _sector_for_length(sector, params, 2 * k + 2, auto)
        le = _enlarge(left[-1], params, sector)
        re = _enlarge(right[-1], params, sector)
        sb = _Superblock(le, re, params, target)
        _, psi = sb.ground_state(None, config.eigensolver_tol)
        t, q, eps, _ = _truncate(psi @ psi.T, le.charges, m)
        left.append(_new_block(le, t, q, "left", k + 1))
        _record(truncations, -1, left[-1], eps, config)
        t, q, eps, _ = _truncate(psi.T @ psi, re.charges, m)
        right.append(_new_block(re, t, q, "right", k + 1))
        _record(truncations, -1, right[-1], eps, config)
    return Chains(left, right)


def _predict_right(psi, t_left, right_old: BlockBasis):
    """Move the free pair one site to the right (left block grows)."""
    phi = t_left.T @ psi  # (a', (s2, b))
    d_new = t_left.shape[1]
    phi = phi.reshape(d_new * 2, right_old.dim)
    out = phi @ right_old.transform.T  # ((a', s2), (s3, b'))
    return out


def _predict_left(psi, t_right, left_old: BlockBasis):
    """Move the free pair one site to the left (right block grows)."""
    phi = psi @ t_right  # ((a, s1), b')
    d_new = t_right.shape[1]
    phi = phi.reshape(left_old.dim, 2 * d_new)
    return left_old.transform @ phi  # ((a_prev, s0), (s1, b'))


def _solve(chains: Chains, l: int, params, config, sector, guess):
    n = params.n_sites
    r = n - 2 - l
    le = _enlarge(chains.left[l - 1], params, sector)
    re = _enlarge(chains.right[r - 1], params, sector)
    sb = _Superblock(le, re, params, sector)
    energy, psi = sb.ground_state(guess, config.eigensolver_tol)
    return energy, psi, le, re


def _store(chain: list, block: BlockBasis):
    k = block.block_len - 1
    if k < len(chain):
        chain[k] = block
    else:
        chain.append(block)


def sweep_to_convergence(
    chains: Chains,
    params: ModelParams,
    config: DmrgConfig,
    truncations: Optional[list] = None,
    sweep_energies: Optional[list] = None,
) -> tuple[SuperblockState, bool]:
    """Finite-system sweeps until the centre energy stops changing.

    ``chains`` is updated in place.  Returns the state at the symmetric bond
    and whether the energy criterion was met within ``config.n_sweeps``.
    """
    n = params.n_sites
    if truncations is None:
        truncations = []
    if sweep_energies is None:
        sweep_energies = []
    sector = _resolve_sector(params, config)
    m = config.max_kept_states
    centre = n // 2 - 1
    energy, psi, le, re = _solve(chains, centre, params, config, sector, None)
    sweep_energies.append(energy)
    converged = False
    for sweep in range(config.n_sweeps):
        l = centre
        # rightwards to the right end, back to the left end, then to the centre
        for direction, stop in (("right", n - 3), ("left", 1), ("right", centre)):
            while l != stop:
                r = n - 2 - l
                if direction == "right":
                    t, q, eps, _ = _truncate(psi @ psi.T, le.charges, m)
                    block = _new_block(le, t, q, "left", l + 1)
                    _store(chains.left, block)
                    guess = _predict_right(psi, t, chains.right[r - 1])
                    l += 1
                else:
                    t, q, eps, _ = _truncate(psi.T @ psi, re.charges, m)
                    block = _new_block(re, t, q, "right", r + 1)
                    _store(chains.right, block)
                    guess = _predict_left(psi, t, chains.left[l - 1])
                    l -= 1
                _record(truncations, sweep, block, eps, config)
                energy, psi, le, re = _solve(chains, l, params, config, sector, guess)
        delta = energy - sweep_energies[-1]
        sweep_energies.append(energy)
        log.info("N=%d sweep %d: E=%.14f dE=%.2e", n, sweep, energy, delta)
        if delta > config.eigensolver_tol * max(1.0, abs(energy)):
            warnings.warn(f"sweep {sweep} raised the energy by {delta:.2e}", DmrgWarning, stacklevel=2)
        if abs(delta) < config.eigensolver_tol * max(1.0, abs(energy)):
            converged = True
            break
    if not converged:
        warnings.warn(
            f"DMRG did not converge in {config.n_sweeps} sweeps (last dE={delta:.2e})",
            DmrgWarning,
            stacklevel=2,
        )
    _, _, eps, spectrum = _truncate(psi @ psi.T, le.charges, m)
    last = [t[3] for t in truncations if t[0] == sweep]
    if max(last, default=0.0) > config.target_epsilon:
        warnings.warn(
            f"truncated weight {max(last):.2e} above target {config.target_epsilon:.0e}",
            DmrgWarning,
            stacklevel=2,
        )
    state = SuperblockState(
        psi=psi.reshape(le.hamiltonian.shape[0] // 2, 2, 2, re.hamiltonian.shape[0] // 2),
        bond=centre + 1,
        energy=energy,
        truncated_weight=eps,
        schmidt_spectrum=spectrum,
        left=chains.left[centre - 1],
        right=chains.right[centre - 1],
        sector=sector,
    )
    return state, converged


def run_dmrg(params: ModelParams, config: DmrgConfig = DmrgConfig()) -> GroundStateResult:
    truncations: list = []
    energies: list = []
    chains = warmup(params, config, truncations)
    state, converged = sweep_to_convergence(chains, params, config, truncations, energies)
    return GroundStateResult(params, config, state, chains, energies, converged, truncations)


def schmidt_entropy(state: SuperblockState) -> float:
    """Entanglement entropy (bits) across the centre bond."""
    w = state.schmidt_spectrum
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))
