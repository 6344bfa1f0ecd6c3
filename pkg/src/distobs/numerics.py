"""Dense small-matrix kernel used by the rest of the package.

Everything here is a pure function of its (numpy) arguments. Matrices are
plain ``float64`` ndarrays; zero-sized dimensions are legal everywhere and
are what you get for agents that observe nothing or everything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .exceptions import (
    InputError,
    NoSolutionError,
    NumericError,
    SynthesisError,
    UnsupportedSpecError,
)

RANK_RTOL = 1e-12


def as_matrix(M, name="matrix", square=False) -> np.ndarray:
    """Coerce ``M`` to a finite 2-D float array, raising :class:`InputError`."""
    arr = np.array(M, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    if arr.ndim != 2:
        raise InputError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    if square and arr.shape[0] != arr.shape[1]:
        raise InputError(f"{name} must be square, got shape {arr.shape}")
    return arr


def block_diag(*blocks) -> np.ndarray:
    """Block-diagonal stack that keeps zero-width and zero-height blocks."""
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


class SubspacePair(NamedTuple):
    """Orthonormal bases of ``Ker(M)`` and ``Im(M^T)``."""

    kernel_basis: np.ndarray
    range_basis: np.ndarray
    rank: int


def orthonormal_split(M) -> SubspacePair:
    """Split R^n into the kernel of ``M`` and its orthogonal complement.

    The numerical rank counts singular values above
    ``max(rows, cols) * sigma_max * 1e-12``.
    """
    M = as_matrix(M, "M")
    rows, n = M.shape
    if rows == 0 or n == 0:
        return SubspacePair(np.eye(n), np.zeros((n, 0)), 0)
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    tol = max(rows, n) * (s[0] if s.size else 0.0) * RANK_RTOL
    r = int(np.sum(s > tol)) if s.size and s[0] > 0 else 0
    return SubspacePair(vt[r:].T.copy(), vt[:r].T.copy(), r)


def numerical_rank(M) -> int:
    return orthonormal_split(M).rank


def krylov_basis(A, B, rtol=RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the smallest A-invariant subspace containing Im(B).

    Built by a block-Arnoldi staircase with re-orthogonalisation. Unlike a
    rank test on ``[B, AB, A^2 B, ...]`` it does not square the conditioning
    at every power of ``A``, so stiff plants (suspension models with
    ``||A|| ~ 1e4``) keep their exact rank.

    With ``A -> A^T`` and ``B -> C^T`` this is the observable subspace
    ``Im(O^T)`` of the pair ``(C, A)``.
    """
    A = as_matrix(A, "A", square=True)
    B = as_matrix(B, "B") if np.size(B) else np.zeros((A.shape[0], 0))
    n = A.shape[0]
    if B.shape[0] != n:
        raise InputError(f"B must have {n} rows, got {B.shape[0]}")
    basis = orthonormal_split(B.T).range_basis
    if basis.shape[1] == 0:
        return basis
    tol = max(n, 1) * rtol * max(np.linalg.norm(A, 2), 1e-300)
    block = basis
    while basis.shape[1] < n:
        Z = A @ block
        for _ in range(2):
            Z = Z - basis @ (basis.T @ Z)
        u, s, _ = np.linalg.svd(Z, full_matrices=False)
        keep = s > tol
        if not np.any(keep):
            break
        block = u[:, keep]
        basis = np.hstack([basis, block])
    return basis


def eigvals(M) -> np.ndarray:
    M = as_matrix(M, "M", square=True)
    if M.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    try:
        return np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue computation failed: {exc}") from exc


def spectral_abscissa(M) -> float:
    """Largest real part of the spectrum; ``-inf`` for a 0x0 matrix."""
    ev = eigvals(M)
    return float(np.max(ev.real)) if ev.size else -math.inf


def spectral_radius(M) -> float:
    ev = eigvals(M)
    return float(np.max(np.abs(ev))) if ev.size else 0.0


def is_hurwitz(M, margin: float = 0.0) -> bool:
    """True iff every eigenvalue of ``M`` has real part below ``-margin``."""
    if margin < 0:
        raise InputError("margin must be nonnegative")
    return spectral_abscissa(M) < -margin


def solve_lyapunov(Q) -> np.ndarray:
    """Return the SPD ``P`` with ``P Q + Q^T P = -I``."""
    Q = as_matrix(Q, "Q", square=True)
    n = Q.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    if not is_hurwitz(Q):
        raise NoSolutionError("Q is not Hurwitz; no positive definite solution exists")
    P = scipy.linalg.solve_continuous_lyapunov(Q.T, -np.eye(n))
    P = 0.5 * (P + P.T)
    resid = np.linalg.norm(P @ Q + Q.T @ P + np.eye(n))
    if resid > 1e-8 * max(np.linalg.norm(P), 1.0):
        raise NumericError(f"Lyapunov residual {resid:.3e} too large")
    return P


# Pade(13) coefficients and the 1-norm threshold for scaling and squaring.
# Stored divided by b_0 so that the denominator at X = 0 is exactly I.
_PADE13 = tuple(c / 64764752532480000.0 for c in (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
))
_THETA13 = 5.371920351148152


def expm(M) -> np.ndarray:
    """Matrix exponential by Pade(13) scaling and squaring."""
    M = as_matrix(M, "M", square=True)
    n = M.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    norm1 = np.linalg.norm(M, 1)
    s = max(0, int(math.ceil(math.log2(norm1 / _THETA13)))) if norm1 > _THETA13 else 0
    X = M / (2.0 ** s)
    b = _PADE13
    I = np.eye(n)
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X4 @ X2
    U = X @ (X6 @ (b[13] * X6 + b[11] * X4 + b[9] * X2)
             + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * I)
    V = (X6 @ (b[12] * X6 + b[10] * X4 + b[8] * X2)
         + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * I)
    try:
        R = np.linalg.solve(V - U, V + U)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Pade denominator singular: {exc}") from exc
    for _ in range(s):
        R = R @ R
    return R


@dataclass(frozen=True)
class PoleSpec:
    """How to choose the output-injection gain of one observable block.

    ``kind`` is one of

    * ``"riccati"``: dual CARE with a stability ``margin``;
    * ``"poles"``: explicit closed-loop eigenvalues (single-output only);
    * ``"gain"``: a user-supplied ``L_o`` in the block's own coordinates;
    * ``"full_gain"``: a user-supplied ``L_i`` in plant coordinates, which
      :func:`distobs.synthesis.build_observer` projects onto the block.
    """

    kind: str = "riccati"
    poles: tuple = ()
    margin: float = 0.0
    gain: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("riccati", "poles", "gain", "full_gain"):
            raise InputError(f"unknown pole spec kind {self.kind!r}")
        if self.margin < 0:
            raise InputError("margin must be nonnegative")

    @classmethod
    def riccati(cls, margin=0.0):
        return cls("riccati", margin=float(margin))

    @classmethod
    def at(cls, poles: Sequence[complex]):
        return cls("poles", poles=tuple(complex(p) for p in poles))

    @classmethod
    def explicit(cls, gain, full=False):
        return cls("full_gain" if full else "gain", gain=np.array(gain, dtype=float))


def _ackermann(A, c, poles):
    """Single-output observer gain ``l`` with ``eig(A + l c) = poles``."""
    n = A.shape[0]
    coeffs = np.poly(np.asarray(poles, dtype=complex))
    if np.max(np.abs(coeffs.imag)) > 1e-9 * max(1.0, np.max(np.abs(coeffs))):
        raise InputError("complex poles must come in conjugate pairs")
    coeffs = coeffs.real
    pA = np.zeros((n, n))
    for ck in coeffs:
        pA = pA @ A + ck * np.eye(n)
    O = np.vstack([c @ np.linalg.matrix_power(A, k) for k in range(n)])
    e_n = np.zeros(n)
    e_n[-1] = 1.0
    return -(pA @ np.linalg.solve(O, e_n)).reshape(n, 1)


def _care_gain(A, C, margin):
    """``L = -P C^T`` from ``(A+mI) P + P (A+mI)^T - P C^T C P + I = 0``."""
    n, p = A.shape[0], C.shape[0]
    As = A + margin * np.eye(n)
    try:
        P = scipy.linalg.solve_continuous_are(As.T, C.T, np.eye(n), np.eye(p))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SynthesisError(f"Riccati solve failed: {exc}") from exc
    G = C.T @ C

    def residual(P):
        return As @ P + P @ As.T - P @ G @ P + np.eye(n)

    # Kleinman-Newton refinement on the residual.
    for _ in range(5):
        res = np.linalg.norm(residual(P))
        if res <= 1e-10 * max(1.0, np.linalg.norm(P)):
            break
        F = As - P @ G
        P = scipy.linalg.solve_continuous_lyapunov(F, -(P @ G @ P + np.eye(n)))
        P = 0.5 * (P + P.T)
    res = np.linalg.norm(residual(P))
    if res > 1e-8 * max(1.0, np.linalg.norm(P)):
        raise SynthesisError(f"Riccati residual {res:.3e} exceeds tolerance")
    return -P @ C.T


def place_observer_gain(A_o, C_o, spec: PoleSpec | None = None) -> np.ndarray:
    """Output-injection gain ``L_o`` making ``A_o + L_o C_o`` Hurwitz.

    Parameters
    ----------
    A_o : (v, v) array
    C_o : (p, v) array
    spec : PoleSpec, optional
        Defaults to a zero-margin Riccati design.

    Returns
    -------
    L_o : (v, p) array

    Raises
    ------
    SynthesisError
        If ``(C_o, A_o)`` is not observable or the design fails.
    UnsupportedSpecError
        If explicit poles are requested for a multi-output block.
    """
    spec = spec or PoleSpec.riccati()
    A_o = as_matrix(A_o, "A_o", square=True) if np.size(A_o) else np.zeros((0, 0))
    v = A_o.shape[0]
    C_o = np.atleast_2d(np.asarray(C_o, dtype=float))
    p = C_o.shape[0]
    if v == 0:
        return np.zeros((0, p))
    if C_o.shape[1] != v:
        raise InputError(f"C_o must have {v} columns, got {C_o.shape[1]}")
    K = krylov_basis(A_o.T, C_o.T)
    if K.shape[1] != v:
        raise SynthesisError("(C_o, A_o) is not observable")

    if spec.kind in ("gain", "full_gain"):
        L = as_matrix(spec.gain, "gain").reshape(v, p)
        if not is_hurwitz(A_o + L @ C_o):
            raise SynthesisError("supplied gain does not make A_o + L_o C_o Hurwitz")
        return L
    if spec.kind == "poles":
        if p != 1:
            raise UnsupportedSpecError(
                f"explicit poles need a single-output block, got {p} outputs")
        if len(spec.poles) != v:
            raise InputError(f"need {v} poles, got {len(spec.poles)}")
        # Ackermann is far better conditioned in the staircase basis, where
        # A_o is block Hessenberg; eigenvalues do not depend on the basis.
        L = K @ _ackermann(K.T @ A_o @ K, C_o @ K, spec.poles)
        got = np.sort_complex(eigvals(A_o + L @ C_o))
        want = np.sort_complex(np.asarray(spec.poles, dtype=complex))
        scale = max(1.0, float(np.max(np.abs(want))))
        if np.max(np.abs(got - want)) > 1e-4 * scale:
            raise SynthesisError("pole placement is numerically inaccurate")
        return L
    L = _care_gain(A_o, C_o, spec.margin)
    if not is_hurwitz(A_o + L @ C_o, spec.margin):
        raise SynthesisError("Riccati gain misses the requested margin")
    return L
