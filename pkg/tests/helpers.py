"""Independent oracles and random ensembles shared by the test modules.

Oracles here deliberately avoid the package's own algorithms: exact ranks
come from sympy row reduction, exponentials from a truncated Taylor series,
and observable subspaces from the plain stacked observability matrix.
"""

import math

import numpy as np
import sympy

from distobs.jointobs import SystemModel
from distobs.topology import Digraph, Periodic, is_strongly_connected, laplacian

EX1_A = np.array([[0, 2, 0], [-2, 0, 0], [0, 0, 0.1]])
EX1_C = [[[1, 0, 0]], [[0, 1, 0]], [[0, 0, 1]], [[0, 0, 0]], [[0, 0, 0]]]
EX1_UNION_L = np.array([
    [1, 0, 0, -1, 0],
    [0, 2, -1, 0, -1],
    [-1, 0, 2, 0, -1],
    [0, 0, -1, 1, 0],
    [0, -1, 0, 0, 1],
], dtype=float)


def exact_rank(M):
    """Rank by exact rational row reduction (entries converted to Rationals)."""
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return 0
    rows = [[sympy.Rational(str(v)) if not float(v).is_integer() else int(v) for v in r] for r in M]
    return sympy.Matrix(rows).rank()


def taylor_expm(M, terms=60):
    M = np.asarray(M, dtype=float)
    out = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, terms):
        term = term @ M / k
        out = out + term
    return out


def stacked_obs(A, C):
    n = A.shape[0]
    C = np.atleast_2d(C)
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def subspace_distance(U, V):
    """Largest principal-angle sine between two column spaces (0 = identical)."""
    if U.shape[1] != V.shape[1]:
        return math.inf
    if U.shape[1] == 0:
        return 0.0
    Qu, _ = np.linalg.qr(U)
    Qv, _ = np.linalg.qr(V)
    s = np.linalg.svd(Qu.T @ Qv, compute_uv=False)
    return float(np.sqrt(max(0.0, 1.0 - s.min() ** 2)))


def random_orthogonal(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_strong_graphs(rng, N, p):
    """``p`` digraphs on ``N`` nodes whose union is strongly connected.

    A directed ring is split at random across the modes and a few extra
    random edges are sprinkled in; individual modes are usually disconnected.
    """
    W = [np.zeros((N, N)) for _ in range(p)]
    perm = rng.permutation(N)
    for k in range(N):
        a, b = perm[k], perm[(k + 1) % N]
        if a != b:
            W[rng.integers(p)][b, a] = rng.uniform(0.5, 2.0)
    for _ in range(rng.integers(0, N + 1)):
        a, b = rng.integers(N), rng.integers(N)
        if a != b:
            W[rng.integers(p)][b, a] = rng.uniform(0.5, 2.0)
    graphs = [Digraph(w) for w in W]
    assert N == 1 or is_strongly_connected(sum(laplacian(g) for g in graphs))
    return graphs


def random_law(rng, p):
    fr = rng.uniform(0.5, 1.5, p)
    fr = fr / fr.sum()
    fr[-1] = 1.0 - fr[:-1].sum()
    return Periodic(1.0, tuple(fr))


def random_outputs(rng, n, N, A=None, hidden=0):
    """Random sparse outputs; with ``hidden > 0`` every C_i annihilates an
    A-invariant subspace of that dimension (so the stack is not observable).

    Returns ``(A, outputs)``.
    """
    if A is None:
        A = rng.standard_normal((n, n))
    if hidden:
        Q = random_orthogonal(rng, n)
        T = rng.standard_normal((n, n))
        T[hidden:, :hidden] = 0.0  # first ``hidden`` coordinates are invariant
        A = Q @ T @ Q.T
    outs = []
    for _ in range(N):
        p = rng.integers(0, 3)
        C = np.zeros((p, n))
        for r in range(p):
            k = rng.integers(1, n + 1)
            idx = rng.choice(n, size=k, replace=False)
            C[r, idx] = rng.standard_normal(k)
        if hidden:
            C = C @ Q[:, hidden:] @ Q[:, hidden:].T
        outs.append(C)
    return A, outs


def random_jo_ensemble(rng, n_max=5, N_max=4, p_max=3, max_tries=200):
    """Jointly observable model with graphs whose union is strongly connected."""
    for _ in range(max_tries):
        n = int(rng.integers(1, n_max + 1))
        N = int(rng.integers(2, N_max + 1))
        p = int(rng.integers(1, p_max + 1))
        A, outs = random_outputs(rng, n, N)
        if sum(c.shape[0] for c in outs) == 0:
            continue
        if np.linalg.matrix_rank(stacked_obs(A, np.vstack(outs))) == n:
            return SystemModel(A, tuple(outs)), random_strong_graphs(rng, N, p), random_law(rng, p)
    raise RuntimeError("could not draw a jointly observable ensemble")
