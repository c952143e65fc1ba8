"""Open-boundary XY chain in a transverse field.

    H = -sum_k [(1+g)/2 X_k X_{k+1} + (1-g)/2 Y_k Y_{k+1}] - lam * sum_k Z_k

Everything here is real.  Y only enters through Y (x) Y, which we write as
-(iY) (x) (iY) with the real antisymmetric matrix iY = [[0, 1], [-1, 0]].
Site basis ordering is (up, down), so Z = diag(1, -1), and site 1 is the
most significant factor of every Kronecker product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
IDENTITY = np.eye(2)
# i * sigma_y, real
SIGMA_IY = np.array([[0.0, 1.0], [-1.0, 0.0]])

# number of down spins carried by each single-site basis state
SITE_CHARGES = np.array([0, 1])

MAX_DENSE_SITES = 14


class ModelError(ValueError):
    pass


class DimensionError(ModelError):
    pass


@dataclass(frozen=True)
class LocalOperator:
    matrix: np.ndarray
    label: str


PAULI = {
    "x": LocalOperator(SIGMA_X, "x"),
    "y": LocalOperator(SIGMA_Y, "y"),
    "z": LocalOperator(SIGMA_Z, "z"),
    "id": LocalOperator(IDENTITY, "id"),
}


@dataclass(frozen=True)
class ModelParams:
    n_sites: int
    gamma: float
    lam: float

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ModelError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ModelError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not math.isfinite(self.lam):
            raise ModelError(f"lambda must be finite, got {self.lam}")

    @property
    def symmetric(self) -> bool:
        """True when the chain splits into two equal blocks around a centre bond."""
        return self.n_sites % 2 == 0

    def with_size(self, n_sites: int) -> "ModelParams":
        return ModelParams(n_sites, self.gamma, self.lam)


CRITICAL_POINTS = {
    "ising": (1.0, 1.0),
    "xy": (0.5, 1.0),
    "xx": (0.0, 0.0),
}


def critical(name: str, n_sites: int) -> ModelParams:
    gamma, lam = CRITICAL_POINTS[name]
    return ModelParams(n_sites, gamma, lam)


@dataclass(frozen=True)
class Sector:
    """Conserved charge (number of down spins) used to pick the ground state.

    ``modulus`` is 2 for the parity-conserving anisotropic chain and 0 for the
    U(1)-symmetric XX chain, where the charge is conserved as an integer.
    """

    modulus: int
    target: int

    def reduce(self, charges):
        return charges % self.modulus if self.modulus else charges

    def allowed(self, total_charges):
        return self.reduce(total_charges) == self.target


def ground_sector(params: ModelParams) -> Sector:
    """Charge sector of the ground state.

    Exact for the XX chain and for gamma^2 + lam^2 >= 1, where the ground
    state has even parity.  Inside the oscillatory region the parity of the
    finite-chain ground state alternates with N and even parity is only a
    default.
    """
    if params.gamma == 0.0:
        # hopping band -2cos(k pi/(N+1)) shifted by 2*lam per flipped spin
        n = params.n_sites
        k = np.arange(1, n + 1)
        n_down = int(np.sum(params.lam < np.cos(k * np.pi / (n + 1)) - 1e-12))
        return Sector(0, n_down)
    return Sector(2, 0)


def parity_ambiguous(params: ModelParams) -> bool:
    return 0.0 < params.gamma < 1.0 and params.gamma**2 + params.lam**2 < 1.0


def bond_term(params: ModelParams) -> np.ndarray:
    """Two-site coupling -(1+g)/2 XX - (1-g)/2 YY as a real 4x4 matrix."""
    g = params.gamma
    return -0.5 * (1 + g) * np.kron(SIGMA_X, SIGMA_X) + 0.5 * (1 - g) * np.kron(SIGMA_IY, SIGMA_IY)


def bond_operators(params: ModelParams) -> list[tuple[float, np.ndarray, np.ndarray]]:
    """Bond term as a sum of products ``coef * A (x) B`` of single-site operators."""
    g = params.gamma
    ops = [(-0.5 * (1 + g), SIGMA_X, SIGMA_X)]
    if g != 1.0:
        ops.append((0.5 * (1 - g), SIGMA_IY, SIGMA_IY))
    return ops


def site_term(params: ModelParams) -> np.ndarray:
    return -params.lam * SIGMA_Z


def _embed(op: np.ndarray, first: int, n_sites: int) -> np.ndarray:
    span = int(round(math.log2(op.shape[0])))
    left = np.eye(2**first)
    right = np.eye(2 ** (n_sites - first - span))
    return np.kron(np.kron(left, op), right)


def build_dense_hamiltonian(params: ModelParams) -> np.ndarray:
    n = params.n_sites
    if n > MAX_DENSE_SITES:
        raise DimensionError(f"dense Hamiltonian limited to N <= {MAX_DENSE_SITES}, got {n}")
    h = np.zeros((2**n, 2**n))
    bond = bond_term(params)
    field = site_term(params)
    for k in range(n - 1):
        h += _embed(bond, k, n)
    for k in range(n):
        h += _embed(field, k, n)
    return h


def build_sparse_hamiltonian(params: ModelParams, max_sites: int = 24):
    """Same Hamiltonian in CSR form, built directly from bit manipulations."""
    import scipy.sparse as sp

    n = params.n_sites
    if n > max_sites:
        raise DimensionError(f"sparse Hamiltonian limited to N <= {max_sites}, got {n}")
    dim = 2**n
    states = np.arange(dim, dtype=np.int64)
    # bit (n-1-k) holds site k (0-based); 1 means spin down
    bits = [(states >> (n - 1 - k)) & 1 for k in range(n)]
    diag = np.zeros(dim)
    for b in bits:
        diag += -params.lam * (1 - 2 * b)
    rows = [states]
    cols = [states]
    vals = [diag]
    g = params.gamma
    for k in range(n - 1):
        flip = states ^ ((1 << (n - 1 - k)) | (1 << (n - 2 - k)))
        aligned = bits[k] == bits[k + 1]
        # XX -> 1 on every flip; YY -> -1 when aligned, +1 when anti-aligned
        amp = np.where(aligned, -0.5 * (1 + g) + 0.5 * (1 - g), -0.5 * (1 + g) - 0.5 * (1 - g))
        keep = amp != 0
        rows.append(states[keep])
        cols.append(flip[keep])
        vals.append(amp[keep])
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )


def basis_charges(n_sites: int) -> np.ndarray:
    """Number of down spins in each computational basis state."""
    states = np.arange(2**n_sites, dtype=np.int64)
    count = np.zeros_like(states)
    for k in range(n_sites):
        count += (states >> k) & 1
    return count


def parity_operator(n_sites: int) -> np.ndarray:
    return np.diag(np.where(basis_charges(n_sites) % 2 == 0, 1.0, -1.0))


def spin_flip(n_sites: int) -> np.ndarray:
    """Global prod_k X_k as a permutation matrix."""
    dim = 2**n_sites
    perm = np.arange(dim) ^ (dim - 1)
    out = np.zeros((dim, dim))
    out[perm, np.arange(dim)] = 1.0
    return out
