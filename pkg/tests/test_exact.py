import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockneg.checkpoint import load_density_operator
from blockneg.entanglement import negativity
from blockneg.exact import (
    PureState,
    block_density_operator,
    block_sites,
    exact_ground_state,
    oracle_negativity,
    reduced_density_operator,
)
from blockneg.model import DimensionError, ModelParams, build_dense_hamiltonian

from conftest import DOWN, UP, bell_state

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"

# frozen from exact diagonalization (sector-resolved Lanczos, cross-checked
# against unrestricted sparse Lanczos)
ISING_N12_ENERGY = -14.92597110990868
ISING_N12_NEG_D4_X4 = 0.02355885842997485


def test_two_site_ising_ground_state():
    gs = exact_ground_state(ModelParams(2, 1.0, 1.0))
    assert gs.energy == pytest.approx(-np.sqrt(5), abs=1e-12)
    expected = np.kron(UP, UP) + (np.sqrt(5) - 2) * np.kron(DOWN, DOWN)
    expected /= np.linalg.norm(expected)
    assert np.allclose(gs.state.amplitudes, expected, atol=1e-12)


def test_strong_field_polarizes():
    gs = exact_ground_state(ModelParams(2, 1.0, 10.0))
    assert gs.state.amplitudes[0] ** 2 > 0.99


def test_ising_n12_energy_baseline():
    gs = exact_ground_state(ModelParams(12, 1.0, 1.0))
    assert gs.energy == pytest.approx(ISING_N12_ENERGY, abs=1e-10)
    assert not gs.degenerate


@pytest.mark.parametrize("gamma,lam", [(1.0, 1.0), (0.5, 1.0), (0.0, 0.0), (0.3, 0.2)])
def test_ground_state_is_global_minimum(gamma, lam):
    p = ModelParams(8, gamma, lam)
    h = build_dense_hamiltonian(p)
    gs = exact_ground_state(p)
    assert gs.energy == pytest.approx(np.linalg.eigvalsh(h)[0], abs=1e-10)
    v = gs.state.amplitudes
    assert np.linalg.norm(h @ v - gs.energy * v) < 1e-10


def test_lanczos_path_matches_dense():
    # N=14 XX half filling has 3432 states, beyond the dense cutoff; compare
    # with the free-fermion sum over negative hopping modes
    n = 14
    eps = -2 * np.cos(np.arange(1, n + 1) * np.pi / (n + 1))
    gs = exact_ground_state(ModelParams(n, 0.0, 0.0))
    assert gs.energy == pytest.approx(eps[eps < 0].sum(), abs=1e-9)


def test_degenerate_ground_space_is_flagged():
    gs = exact_ground_state(ModelParams(2, 1.0, 0.0), sector=None)
    assert gs.degenerate
    assert gs.energy == pytest.approx(-1.0)


def test_bell_pair_reduces_to_maximally_mixed():
    rho = reduced_density_operator(PureState(bell_state(), 2), [1])
    assert np.allclose(rho.matrix, np.eye(2) / 2)


def test_product_state_reduces_to_projector():
    n = 5
    amps = np.zeros(2**n)
    amps[0] = 1.0
    rho = reduced_density_operator(PureState(amps, n), [2, 4, 5])
    expected = np.zeros((8, 8))
    expected[0, 0] = 1.0
    assert np.allclose(rho.matrix, expected)


def test_rho_se_regression_fixture():
    gs = exact_ground_state(ModelParams(8, 1.0, 1.0))
    rho = block_density_operator(gs.state, 3, 2)
    stored = load_density_operator(FIXTURES / "rho_se_ising_n8_d3_x2.bin")
    assert (stored.block_len, stored.separation) == (3, 2)
    assert np.max(np.abs(rho.matrix - stored.matrix)) < 1e-10


@pytest.mark.parametrize("sites", [[1, 2, 3], [2, 5], [1, 3, 4, 6, 7]])
def test_density_operator_axioms(sites):
    gs = exact_ground_state(ModelParams(8, 0.5, 1.0))
    rho = reduced_density_operator(gs.state, sites).matrix
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(rho, rho.conj().T)
    assert np.linalg.eigvalsh(rho)[0] > -1e-10
    assert rho.shape == (2 ** len(sites),) * 2


@given(st.sets(st.integers(1, 8), min_size=1, max_size=7))
def test_schmidt_duality(subset):
    gs = exact_ground_state(ModelParams(8, 1.0, 1.0))
    comp = [s for s in range(1, 9) if s not in subset]
    a = np.linalg.eigvalsh(reduced_density_operator(gs.state, sorted(subset)).matrix)
    b = np.linalg.eigvalsh(reduced_density_operator(gs.state, comp).matrix)
    a, b = np.sort(a)[::-1], np.sort(b)[::-1]
    k = min(len(a), len(b))
    assert np.allclose(a[:k], b[:k], atol=1e-10)
    assert np.all(np.abs(a[k:]) < 1e-10) and np.all(np.abs(b[k:]) < 1e-10)


def test_oracle_negativity_two_sites():
    assert oracle_negativity(ModelParams(2, 1.0, 1.0), 1, 0) == pytest.approx(1 / np.sqrt(5), abs=1e-12)


def test_oracle_negativity_polarized():
    assert oracle_negativity(ModelParams(4, 1.0, 10.0), 1, 2) < 1e-3


def test_oracle_negativity_baseline():
    assert oracle_negativity(ModelParams(12, 1.0, 1.0), 4, 4) == pytest.approx(ISING_N12_NEG_D4_X4, abs=1e-10)


@pytest.mark.parametrize("gamma,lam", [(1.0, 1.0), (0.0, 0.0)])
def test_oracle_negativity_symmetric_in_blocks(gamma, lam):
    gs = exact_ground_state(ModelParams(10, gamma, lam))
    s, e = block_sites(10, 3, 2)
    a = negativity(reduced_density_operator(gs.state, s + e, n_system=3)).negativity
    b = negativity(reduced_density_operator(gs.state, e + s, n_system=3)).negativity
    assert a == pytest.approx(b, abs=1e-12)


@given(cut=st.integers(1, 7), gamma=st.sampled_from([1.0, 0.5, 0.0]))
def test_pure_bipartition_matches_schmidt_formula(cut, gamma):
    lam = 0.0 if gamma == 0.0 else 1.0
    gs = exact_ground_state(ModelParams(8, gamma, lam))
    rho = reduced_density_operator(gs.state, list(range(1, 9)), n_system=cut)
    # singular values are the Schmidt coefficients; squaring eigenvalues of
    # rho_S instead would amplify round-off near zero
    s = np.linalg.svd(gs.state.amplitudes.reshape(2**cut, -1), compute_uv=False)
    expected = s.sum() ** 2 - 1.0
    assert negativity(rho).negativity == pytest.approx(expected, abs=1e-10)


def test_block_sites_centred():
    assert block_sites(12, 4, 4) == ([1, 2, 3, 4], [9, 10, 11, 12])
    assert block_sites(12, 2, 2) == ([4, 5], [8, 9])
    with pytest.raises(ValueError):
        block_sites(8, 4, 2)


def test_guards():
    with pytest.raises(ValueError):
        reduced_density_operator(PureState(bell_state(), 2), [1, 1])
    with pytest.raises(DimensionError):
        exact_ground_state(ModelParams(26, 1.0, 1.0))
    with pytest.raises(DimensionError):
        reduced_density_operator(PureState(np.eye(2**13)[0], 13), list(range(1, 14)))
