"""Per-agent Kalman observability decomposition and joint-observability certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import InputError
from .numerics import as_matrix, block_diag, krylov_basis, orthonormal_split
from .topology import LaplacianSet


@dataclass(frozen=True)
class AffineInput:
    """Known input ``u = Kx x + Kxhat col(xhat_1..xhat_N) + u0``.

    Covers constant inputs and linear feedback through the estimates (the
    platoon controller). Everything is known to every observer, so the
    estimation-error dynamics are unchanged.
    """

    Kx: np.ndarray
    Kxhat: np.ndarray
    u0: np.ndarray
    # Compact description this input was built from, kept for serialization.
    spec: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        Kx = np.atleast_2d(np.asarray(self.Kx, dtype=float))
        Kxhat = np.atleast_2d(np.asarray(self.Kxhat, dtype=float))
        u0 = np.asarray(self.u0, dtype=float).ravel()
        if Kx.shape[0] != u0.size or Kxhat.shape[0] != u0.size:
            raise InputError("Kx, Kxhat and u0 must agree on the input dimension")
        object.__setattr__(self, "Kx", Kx)
        object.__setattr__(self, "Kxhat", Kxhat)
        object.__setattr__(self, "u0", u0)

    @classmethod
    def constant(cls, u0, n, n_agents):
        u0 = np.asarray(u0, dtype=float).ravel()
        m = u0.size
        return cls(np.zeros((m, n)), np.zeros((m, n * n_agents)), u0,
                   spec={"type": "constant", "u0": u0.tolist()})

    @classmethod
    def platoon(cls, K, leader, offsets, n_vehicles, block, n_agents):
        """Leader-following feedback ``u_i = K (x_i - xhat_i[leader] - col(p_i, 0))``.

        ``leader`` is 0-based here; the stored ``spec`` uses the 1-based
        document convention. Vehicle ``i`` is also agent ``i`` and uses its own estimate of the
        leader's block. The leader gets ``u = 0``. ``offsets`` lists ``p_i``
        for every vehicle in order (the leader's entry is ignored).
        """
        K = np.atleast_2d(np.asarray(K, dtype=float))
        m, nb = K.shape
        if nb != block:
            raise InputError(f"K must have {block} columns")
        offsets = np.atleast_2d(np.asarray(offsets, dtype=float))
        if offsets.shape[0] != n_vehicles or offsets.shape[1] > block:
            raise InputError(f"need one offset of length <= {block} per vehicle")
        if not 0 <= leader < n_vehicles:
            raise InputError("leader index out of range")
        n = n_vehicles * block
        Kx = np.zeros((m * n_vehicles, n))
        Kxhat = np.zeros((m * n_vehicles, n * n_agents))
        u0 = np.zeros(m * n_vehicles)
        for i in range(n_vehicles):
            if i == leader:
                continue
            r = slice(m * i, m * (i + 1))
            Kx[r, block * i:block * (i + 1)] = K
            c0 = n * i + block * leader
            Kxhat[r, c0:c0 + block] = -K
            off = np.zeros(block)
            off[:offsets.shape[1]] = offsets[i]
            u0[r] = -K @ off
        spec = {"type": "platoon", "K": K.tolist(), "leader": int(leader) + 1,
                "offsets": offsets.tolist(), "block": int(block)}
        return cls(Kx, Kxhat, u0, spec=spec)

    def __call__(self, t, x, xhat):
        return self.Kx @ x + self.Kxhat @ np.ravel(xhat) + self.u0


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Observed plant ``x' = A x (+ B u)`` with per-agent outputs ``y_i = C_i x``.

    ``input`` is either an :class:`AffineInput` or a callable ``u(t)``.
    """

    A: np.ndarray
    outputs: tuple
    B: np.ndarray | None = None
    input: AffineInput | Callable | None = None

    def __post_init__(self):
        A = as_matrix(self.A, "A", square=True)
        n = A.shape[0]
        outs = []
        for i, C in enumerate(self.outputs):
            C = np.atleast_2d(np.asarray(C, dtype=float))
            if C.size == 0:
                C = np.zeros((0, n))
            if C.shape[1] != n:
                raise InputError(f"C_{i + 1} has {C.shape[1]} columns, expected {n}")
            if not np.all(np.isfinite(C)):
                raise InputError(f"C_{i + 1} has non-finite entries")
            outs.append(C)
        if not outs:
            raise InputError("need at least one agent")
        B = self.B
        if B is not None:
            B = as_matrix(B, "B")
            if B.shape[0] != n:
                raise InputError(f"B must have {n} rows")
        if self.input is not None and B is None:
            raise InputError("an input signal needs an input matrix B")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "outputs", tuple(outs))
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_agents(self) -> int:
        return len(self.outputs)

    @property
    def C(self) -> np.ndarray:
        return np.vstack(self.outputs)

    def with_A(self, A):
        return SystemModel(A, self.outputs, self.B, self.input)


def observability_matrix(A, C) -> np.ndarray:
    """Stacked ``col(C, CA, ..., CA^{n-1})``."""
    A = as_matrix(A, "A", square=True)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    if C.size == 0:
        return np.zeros((0, n))
    if C.shape[1] != n:
        raise InputError(f"C has {C.shape[1]} columns but A is {n}x{n}")
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def observable_subspace(A, C) -> np.ndarray:
    """Orthonormal basis of ``Im(O^T)`` via the Krylov staircase."""
    A = as_matrix(A, "A", square=True)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.size == 0:
        return np.zeros((A.shape[0], 0))
    return krylov_basis(A.T, C.T)


def observability_rank(A, C) -> int:
    return observable_subspace(A, C).shape[1]


@dataclass(frozen=True, eq=False)
class AgentDecomposition:
    """``V_i^T A V_i = [[A_u, A_r], [0, A_o]]`` and ``C_i V_i = [0, C_o]``."""

    v: int
    Vu: np.ndarray
    Vo: np.ndarray
    Au: np.ndarray
    Ar: np.ndarray
    Ao: np.ndarray
    Co: np.ndarray

    @property
    def V(self):
        return np.hstack([self.Vu, self.Vo])

    @property
    def n(self):
        return self.Vu.shape[0]

    def check(self, A, C, atol=1e-8) -> dict:
        """Residuals of the decomposition invariants (all should be ~0)."""
        V = self.V
        n = V.shape[0]
        return {
            "orthogonality": float(np.abs(V.T @ V - np.eye(n)).max(initial=0.0)),
            "zero_block": float(np.abs(self.Vo.T @ A @ self.Vu).max(initial=0.0)),
            "output_kernel": float(np.abs(C @ self.Vu).max(initial=0.0)),
            "reconstruction": float(np.abs(V @ (V.T @ A @ V) @ V.T - A).max(initial=0.0)),
            "observable_block": float(self.v - observability_rank(self.Ao, self.Co)) if self.v else 0.0,
        }


def decompose_agent(A, C) -> AgentDecomposition:
    """Orthogonal observability decomposition of ``(C, A)``.

    The split is computed from an orthonormal basis of the observable
    subspace (same row space as the observability matrix, but well
    conditioned), so ``v`` is exact even for stiff ``A``.
    """
    A = as_matrix(A, "A", square=True)
    n = A.shape[0]
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.size == 0:
        C = np.zeros((C.shape[0] if C.ndim == 2 else 0, n))
    split = orthonormal_split(observable_subspace(A, C).T)
    Vu, Vo = split.kernel_basis, split.range_basis
    return AgentDecomposition(
        v=split.rank,
        Vu=Vu,
        Vo=Vo,
        Au=Vu.T @ A @ Vu,
        Ar=Vu.T @ A @ Vo,
        Ao=Vo.T @ A @ Vo,
        Co=C @ Vo,
    )


def decompose(model: SystemModel) -> list[AgentDecomposition]:
    return [decompose_agent(model.A, C) for C in model.outputs]


@dataclass(frozen=True, eq=False)
class StackedBlocks:
    """Block-diagonal stacks ``diag(X_1, ..., X_N)`` of the agent blocks."""

    Vu: np.ndarray
    Vo: np.ndarray
    Au: np.ndarray
    Ar: np.ndarray
    Ao: np.ndarray
    Co: np.ndarray

    @property
    def unobservable_dim(self):
        return self.Au.shape[0]


def stack_blocks(decomps: Sequence[AgentDecomposition]) -> StackedBlocks:
    return StackedBlocks(
        Vu=block_diag(*[d.Vu for d in decomps]),
        Vo=block_diag(*[d.Vo for d in decomps]),
        Au=block_diag(*[d.Au for d in decomps]),
        Ar=block_diag(*[d.Ar for d in decomps]),
        Ao=block_diag(*[d.Ao for d in decomps]),
        Co=block_diag(*[d.Co for d in decomps]),
    )


def coupling_matrix(blocks: StackedBlocks, L, n) -> np.ndarray:
    """``V_u^T (L (x) I_n) V_u``."""
    return blocks.Vu.T @ np.kron(L, np.eye(n)) @ blocks.Vu


@dataclass(frozen=True)
class JointObservabilityCertificate:
    """Joint observability verdict plus the three equivalent spectral witnesses.

    ``applicable`` is False when the average graph is not strongly connected;
    the equivalences are then not claimed, but the stacked rank is still the
    ground truth for ``jointly_observable``.
    """

    applicable: bool
    jointly_observable: bool
    n: int
    ranks: tuple
    stacked_rank: int
    lambda_l: float
    lambda_L: float
    min_singular: float
    rank_condition: bool
    pd_condition: bool | None
    nonsingular_condition: bool
    unobservable_dim: int = 0
    notes: tuple = field(default=())

    @property
    def conditions_agree(self) -> bool:
        conds = [self.rank_condition, self.nonsingular_condition]
        if self.pd_condition is not None:
            conds.append(self.pd_condition)
        return all(conds) or not any(conds)

    def to_dict(self):
        return {
            "applicable": self.applicable,
            "jointly_observable": self.jointly_observable,
            "observability_ranks": list(self.ranks),
            "stacked_rank": self.stacked_rank,
            "state_dim": self.n,
            "lambda_l": self.lambda_l,
            "lambda_L": self.lambda_L,
            "min_singular_VuLVu": self.min_singular,
            "rank_condition": self.rank_condition,
            "pd_condition": self.pd_condition,
            "nonsingular_condition": self.nonsingular_condition,
            "conditions_agree": self.conditions_agree,
            "notes": list(self.notes),
        }


def certify_joint_observability(model: SystemModel, lapset: LaplacianSet,
                                decomps=None) -> JointObservabilityCertificate:
    """Evaluate the stacked-rank test and both spectral conditions.

    Tolerances are relative: ``lambda_l > 1e-8 * lambda_L`` and
    ``sigma_min > 1e-8 * sigma_max`` of ``V_u^T (Lbar (x) I) V_u``.
    """
    if lapset.n_agents != model.n_agents:
        raise InputError(f"graph has {lapset.n_agents} agents, model has {model.n_agents}")
    decomps = decomps if decomps is not None else decompose(model)
    n = model.n
    stacked = observability_rank(model.A, model.C)
    blocks = stack_blocks(decomps)
    dim_u = blocks.unobservable_dim
    notes = []

    if dim_u == 0:
        notes.append("every agent observes the full state; spectral conditions are vacuous")
        lam_l = lam_L = math.nan
        sig = math.nan
        pd = True if lapset.theta is not None else None
        ns = True
    else:
        G = coupling_matrix(blocks, lapset.average, n)
        sv = np.linalg.svd(G, compute_uv=False)
        sig = float(sv[-1])
        ns = bool(sv[0] > 0 and sig > 1e-8 * sv[0])
        if lapset.theta is not None:
            H = coupling_matrix(blocks, lapset.Lhat, n)
            ev = np.linalg.eigvalsh(0.5 * (H + H.T))
            lam_l, lam_L = float(ev[0]), float(ev[-1])
            pd = bool(lam_L > 0 and lam_l > 1e-8 * lam_L)
        else:
            lam_l = lam_L = math.nan
            pd = None
    if not lapset.strongly_connected:
        notes.append("average graph is not strongly connected; equivalences not applicable")
    return JointObservabilityCertificate(
        applicable=lapset.strongly_connected,
        jointly_observable=stacked == n,
        n=n,
        ranks=tuple(d.v for d in decomps),
        stacked_rank=stacked,
        lambda_l=lam_l,
        lambda_L=lam_L,
        min_singular=sig,
        rank_condition=stacked == n,
        pd_condition=pd,
        nonsingular_condition=ns,
        unobservable_dim=dim_u,
        notes=tuple(notes),
    )
