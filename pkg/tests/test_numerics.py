import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helpers import EX1_A, exact_rank, subspace_distance, taylor_expm

from distobs.exceptions import InputError, NoSolutionError, SynthesisError, UnsupportedSpecError
from distobs.numerics import (
    PoleSpec,
    block_diag,
    eigvals,
    expm,
    is_hurwitz,
    krylov_basis,
    numerical_rank,
    orthonormal_split,
    place_observer_gain,
    solve_lyapunov,
    spectral_abscissa,
)


# orthonormal_split ---------------------------------------------------------

def test_split_zero_map():
    s = orthonormal_split(np.zeros((3, 3)))
    assert s.rank == 0
    assert s.kernel_basis.shape == (3, 3)
    assert np.allclose(s.kernel_basis.T @ s.kernel_basis, np.eye(3))


def test_split_identity():
    s = orthonormal_split(np.eye(3))
    assert s.rank == 3
    assert s.kernel_basis.shape == (3, 0)


def test_split_example1_agent1():
    O1 = np.array([[1, 0, 0], [0, 2, 0], [-4, 0, 0]], dtype=float)
    s = orthonormal_split(O1)
    assert s.rank == 2
    # the published V_1 has (0, 0, -1) as its first column
    assert subspace_distance(s.kernel_basis, np.array([[0.0], [0.0], [-1.0]])) < 1e-8


@settings(max_examples=60, deadline=None)
@given(arrays(np.int64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=st.integers(-3, 3)))
def test_split_rank_matches_row_reduction(M):
    M = M.astype(float)
    s = orthonormal_split(M)
    assert s.rank == exact_rank(M)
    for B in (s.kernel_basis, s.range_basis):
        assert np.allclose(B.T @ B, np.eye(B.shape[1]), atol=1e-10)
    assert np.abs(M @ s.kernel_basis).max(initial=0.0) < 1e-9 * max(1.0, np.abs(M).max())


def test_krylov_basis_matches_rank_of_stiff_pair():
    # Scaled chain: the stacked observability matrix is badly conditioned but
    # the staircase basis keeps the full dimension.
    A = np.diag([1e3, 1e-1, 1.0, 10.0]) + np.diag([1.0, 1.0, 1.0], 1)
    c = np.array([[1.0, 0, 0, 0]])
    assert krylov_basis(A.T, c.T).shape[1] == 4


def test_block_diag_with_empty_blocks():
    out = block_diag(np.ones((2, 2)), np.zeros((0, 0)), np.zeros((1, 0)), np.eye(1))
    assert out.shape == (4, 3)
    assert np.array_equal(out[:2, :2], np.ones((2, 2)))
    assert out[3, 2] == 1.0


def test_as_matrix_rejects_nan():
    with pytest.raises(InputError):
        is_hurwitz(np.array([[np.nan]]))


# is_hurwitz ----------------------------------------------------------------

def test_hurwitz_examples():
    assert is_hurwitz(-np.eye(3))
    assert not is_hurwitz(EX1_A)
    assert is_hurwitz(np.array([[0.1 - 2.5]]))
    assert not is_hurwitz(-np.eye(2), margin=1.5)
    assert spectral_abscissa(np.zeros((0, 0))) == -np.inf


# solve_lyapunov ------------------------------------------------------------

def test_lyapunov_diagonal():
    assert np.allclose(solve_lyapunov(-np.eye(3)), np.eye(3) / 2)
    assert np.allclose(solve_lyapunov(-2 * np.eye(4)), np.eye(4) / 4)


def test_lyapunov_residual():
    Q = np.array([[-1.0, 1.0], [0.0, -2.0]])
    P = solve_lyapunov(Q)
    assert np.allclose(Q.T @ P + P @ Q, -np.eye(2), atol=1e-10)


def test_lyapunov_rejects_unstable():
    with pytest.raises(NoSolutionError):
        solve_lyapunov(np.array([[0.5]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_lyapunov_properties(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    Q = M - (max(np.linalg.eigvals(M).real) + rng.uniform(0.1, 2.0)) * np.eye(n)
    P = solve_lyapunov(Q)
    assert np.abs(P - P.T).max() < 1e-10 * max(1.0, np.abs(P).max())
    assert np.linalg.eigvalsh(0.5 * (P + P.T)).min() > 0


# expm -----------------------------------------------------------------------

def test_expm_examples():
    assert np.array_equal(expm(np.zeros((3, 3))), np.eye(3))
    assert np.allclose(expm(np.diag([0.3, -1.2])), np.diag(np.exp([0.3, -1.2])), rtol=1e-14)
    w = 0.5
    R = expm(np.array([[0, w], [-w, 0]]))
    assert np.allclose(R, taylor_expm(np.array([[0, w], [-w, 0]])), atol=1e-14)
    assert np.allclose(R, [[np.cos(w), np.sin(w)], [-np.sin(w), np.cos(w)]], atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.floats(0.01, 5.0), st.integers(0, 10_000))
def test_expm_inverse(n, scale, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    M *= scale / np.linalg.norm(M, 2)
    assert np.allclose(expm(M) @ expm(-M), np.eye(n), atol=1e-8)
    assert np.allclose(expm(M), taylor_expm(M), atol=1e-10 * np.exp(scale))


def test_expm_large_norm_uses_squaring():
    M = np.array([[-30.0, 40.0], [0.0, -35.0]])
    from scipy.linalg import expm as sp_expm
    assert np.allclose(expm(M), sp_expm(M), rtol=1e-10, atol=1e-25)


# place_observer_gain ---------------------------------------------------------

def test_place_scalar_example1():
    L = place_observer_gain(np.array([[0.1]]), np.array([[1.0]]), PoleSpec.at([-2.4]))
    assert np.allclose(L, [[-2.5]])


def test_place_integrator():
    L = place_observer_gain(np.zeros((1, 1)), np.array([[1.0]]), PoleSpec.at([-1]))
    assert np.allclose(L, [[-1.0]])


def test_place_double_integrator():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    C = np.array([[1.0, 0.0]])
    L = place_observer_gain(A, C, PoleSpec.at([-2, -3]))
    assert np.allclose(L, [[-5.0], [-6.0]])
    assert np.allclose(np.sort(eigvals(A + L @ C).real), [-3, -2])


def test_place_multi_output_poles_unsupported():
    with pytest.raises(UnsupportedSpecError):
        place_observer_gain(np.zeros((2, 2)), np.eye(2), PoleSpec.at([-1, -2]))


def test_place_unobservable_pair():
    with pytest.raises(SynthesisError):
        place_observer_gain(np.eye(2), np.array([[1.0, 0.0]]), PoleSpec.riccati())


def test_place_explicit_gain_checked():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    C = np.array([[1.0, 0.0]])
    assert np.allclose(place_observer_gain(A, C, PoleSpec.explicit([[-5], [-6]])), [[-5], [-6]])
    with pytest.raises(SynthesisError):
        place_observer_gain(A, C, PoleSpec.explicit([[5], [6]]))


def test_place_empty_block():
    assert place_observer_gain(np.zeros((0, 0)), np.zeros((2, 0))).shape == (0, 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.floats(0.0, 2.0), st.integers(0, 10_000))
def test_riccati_meets_margin(v, p, margin, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((v, v)) * 2
    C = rng.standard_normal((p, v))
    L = place_observer_gain(A, C, PoleSpec.riccati(margin))
    assert is_hurwitz(A + L @ C, margin)


def test_numerical_rank_tolerance_convention():
    M = np.diag([1.0, 1e-13])
    assert numerical_rank(M) == 1
    assert numerical_rank(np.diag([1.0, 1e-10])) == 2
