import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import EX1_A, random_jo_ensemble, random_orthogonal, stacked_obs

from distobs.exceptions import InputError, SynthesisError
from distobs.jointobs import AffineInput, SystemModel, decompose
from distobs.numerics import PoleSpec, is_hurwitz
from distobs.synthesis import (
    averaged_matrix,
    build_observer,
    error_coordinates,
    error_matrices,
    joint_error_matrices,
    joint_matrices,
    observable_error_matrix,
    observer_vector_field,
    plant_vector_field,
)
from distobs.topology import Digraph, laplacian_set


def test_projectors_extremes(ex1_graphs, ex1_law):
    outs = [np.eye(3), np.zeros((1, 3)), np.zeros((1, 3)), np.zeros((1, 3)), np.zeros((1, 3))]
    bank = build_observer(SystemModel(EX1_A, tuple(outs)), laplacian_set(ex1_graphs, law=ex1_law), gamma=1.0)
    assert np.allclose(bank.M[0], 0.0)
    for M in bank.M[1:]:
        assert np.allclose(M, np.eye(3))


def test_example1_gains(ex1_bank):
    assert np.allclose(ex1_bank.L[0].ravel(), [-2, -4, 0])
    assert np.allclose(ex1_bank.L[1].ravel(), [4, -2, 0])
    assert np.allclose(ex1_bank.L[2].ravel(), [0, 0, -2.5])
    assert is_hurwitz(observable_error_matrix(ex1_bank))
    # the unobservable mode 0.1 is untouched by the local gains
    for i in range(3):
        ev = np.linalg.eigvals(EX1_A + ex1_bank.L[i] @ ex1_bank.model.outputs[i])
        assert np.isclose(ev.real.max(), 0.1 if i < 2 else 0.0, atol=1e-12)
    assert ex1_bank.blocks.unobservable_dim == 10
    assert ex1_bank.gamma == 45.0


def test_gamma_zero_gives_uncoupled_blocks(ex1_bank):
    b0 = ex1_bank.with_gamma(0.0)
    for k in range(b0.n_modes):
        Mr, Nr = error_matrices(b0, k)
        assert np.array_equal(Mr, b0.blocks.Au)
        assert np.array_equal(Nr, b0.blocks.Ar)
    assert np.allclose(averaged_matrix(b0), b0.blocks.Au)
    with pytest.raises(InputError):
        ex1_bank.with_gamma(-1.0)


def test_auto_gamma(ex1_model, ex1_lapset):
    bank = build_observer(ex1_model, ex1_lapset, gamma="auto", pole_spec=PoleSpec.riccati())
    assert bank.gamma == pytest.approx(1.05 * bank.gamma_bound)
    lone = laplacian_set([Digraph.from_edges(5, [(0, 1)])])
    with pytest.raises(SynthesisError):
        build_observer(ex1_model, lone, gamma="auto")


def test_full_gain_must_not_leak(ex1_model, ex1_lapset):
    bad = [PoleSpec.explicit([[-1.0], [0.0], [1.0]], full=True)] + [None] * 4
    with pytest.raises(SynthesisError):
        build_observer(ex1_model, ex1_lapset, gamma=1.0, pole_spec=bad)


def test_exact_estimates_are_invariant(ex1_bank):
    x = np.array([1.0, -2.0, 0.5])
    X = np.tile(x, (5, 1))
    for k in range(4):
        out = observer_vector_field(ex1_bank, k, x, X)
        assert np.allclose(out, np.tile(plant_vector_field(ex1_bank.model, x), (5, 1)), atol=1e-14)


def test_single_agent_reduces_to_luenberger():
    A = np.array([[0.0, 1.0], [-2.0, -0.3]])
    C = np.array([[1.0, 0.0]])
    bank = build_observer(SystemModel(A, (C,)), laplacian_set([Digraph.empty(1)]), gamma=3.0)
    x = np.array([0.3, 0.1])
    xh = np.array([[1.0, -1.0]])
    expected = A @ xh[0] + bank.L[0] @ (C @ xh[0] - C @ x)
    assert np.allclose(observer_vector_field(bank, 0, x, xh)[0], expected)
    assert is_hurwitz(A + bank.L[0] @ C)


def _to_error_transform(n, N):
    """``col(x, e) = S col(x, xhat)``."""
    S = np.eye(n * (N + 1))
    for i in range(N):
        S[n * (i + 1):n * (i + 2), :n] = -np.eye(n)
    return S


def test_joint_coordinate_systems_agree(ex1_bank):
    n, N = ex1_bank.n, ex1_bank.n_agents
    S = _to_error_transform(n, N)
    for L in ex1_bank.lapset.modes:
        F, _, _ = joint_matrices(ex1_bank, L)
        Fe, _, _ = joint_error_matrices(ex1_bank, L)
        assert np.allclose(S @ F @ np.linalg.inv(S), Fe, atol=1e-12)


def test_joint_coordinate_systems_agree_with_feedback():
    A = np.kron(np.eye(2), [[0.0, 1.0], [0.0, 0.0]])
    B = np.kron(np.eye(2), [[0.0], [1.0]])
    inp = AffineInput.platoon([[-2.0, -1.0]], 1, [[-1.0], [0.0]], 2, 2, 2)
    outs = (np.array([[1.0, 0, 0, 0]]), np.array([[0, 0, 1.0, 0]]))
    model = SystemModel(A, outs, B, inp)
    lap = laplacian_set([Digraph.from_edges(2, [(0, 1), (1, 0)])])
    bank = build_observer(model, lap, gamma=5.0)
    S = _to_error_transform(4, 2)
    F, G, c = joint_matrices(bank, lap.modes[0])
    Fe, Ge, ce = joint_error_matrices(bank, lap.modes[0])
    assert np.allclose(S @ F @ np.linalg.inv(S), Fe, atol=1e-12)
    assert np.allclose(S @ c, ce)
    assert np.allclose(S @ G, Ge)


def test_error_block_structure(ex1_bank):
    """Observable error coordinates evolve on their own; the unobservable
    ones see the switched matrices ``M_k`` and ``N_k``."""
    n, N = ex1_bank.n, ex1_bank.n_agents
    b = ex1_bank.blocks
    for k, L in enumerate(ex1_bank.lapset.modes):
        Fe = joint_error_matrices(ex1_bank, L)[0][n:, n:]
        Mr, Nr = error_matrices(ex1_bank, k)
        assert np.allclose(b.Vu.T @ Fe @ b.Vu, Mr, atol=1e-12)
        assert np.allclose(b.Vu.T @ Fe @ b.Vo, Nr, atol=1e-12)
        assert np.allclose(b.Vo.T @ Fe @ b.Vu, 0.0, atol=1e-12)
        assert np.allclose(b.Vo.T @ Fe @ b.Vo, observable_error_matrix(ex1_bank), atol=1e-12)


def test_error_coordinates_roundtrip(ex1_bank):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(3)
    X = rng.standard_normal((5, 3))
    xu, xo = error_coordinates(ex1_bank, x, X)
    b = ex1_bank.blocks
    assert np.allclose(b.Vu @ xu + b.Vo @ xo, (X - x).ravel())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_projector_basis_independent(seed):
    rng = np.random.default_rng(seed)
    model, graphs, law = random_jo_ensemble(rng)
    for d, C in zip(decompose(model), model.outputs):
        M = d.Vu @ d.Vu.T
        if d.Vu.shape[1]:
            Vu2 = d.Vu @ random_orthogonal(rng, d.Vu.shape[1])
            assert np.allclose(Vu2 @ Vu2.T, M, atol=1e-12)
        # oracle: projector onto the null space of the stacked observability matrix
        O = stacked_obs(model.A, C) if C.shape[0] else np.zeros((1, model.n))
        P = np.eye(model.n) - np.linalg.pinv(O, rcond=1e-10) @ O
        assert np.allclose(M, P, atol=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_auto_gamma_averaged_matrix_hurwitz(seed):
    """Above the coupling-gain bound the averaged dynamics are stable."""
    rng = np.random.default_rng(seed)
    model, graphs, law = random_jo_ensemble(rng)
    bank = build_observer(model, laplacian_set(graphs, law=law), gamma="auto")
    assert is_hurwitz(averaged_matrix(bank))
