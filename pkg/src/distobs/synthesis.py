"""Distributed observer construction and its stacked error dynamics.

Each agent runs

    xhat_i' = A xhat_i + L_i (C_i xhat_i - y_i) + gamma M_i sum_j a_ij (xhat_j - xhat_i)

with ``L_i = V_oi L_oi`` injecting only into the locally observable
coordinates and ``M_i = V_ui V_ui^T`` the orthogonal projector onto the
locally unobservable subspace.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .certify import gamma_lower_bound
from .exceptions import InputError, SynthesisError, UnsupportedSpecError
from .jointobs import (
    AffineInput,
    AgentDecomposition,
    JointObservabilityCertificate,
    StackedBlocks,
    SystemModel,
    certify_joint_observability,
    coupling_matrix,
    decompose,
    stack_blocks,
)
from .numerics import PoleSpec, block_diag, place_observer_gain
from .topology import LaplacianSet

AUTO_GAMMA_FACTOR = 1.05


@dataclass(frozen=True, eq=False)
class ObserverBank:
    """Gains of all agents plus what is needed to assemble the error system."""

    model: SystemModel
    decomps: tuple
    lapset: LaplacianSet
    gamma: float
    L: tuple
    M: tuple
    Lo: tuple
    blocks: StackedBlocks
    gamma_bound: float | None = None
    certificate: JointObservabilityCertificate | None = None

    @property
    def n(self):
        return self.model.n

    @property
    def n_agents(self):
        return self.model.n_agents

    @property
    def n_modes(self):
        return self.lapset.n_modes

    def with_gamma(self, gamma):
        if gamma < 0:
            raise InputError("gamma must be nonnegative")
        return ObserverBank(self.model, self.decomps, self.lapset, float(gamma), self.L,
                            self.M, self.Lo, self.blocks, self.gamma_bound, self.certificate)

    def with_laplacians(self, lapset: LaplacianSet):
        return ObserverBank(self.model, self.decomps, lapset, self.gamma, self.L, self.M,
                            self.Lo, self.blocks, self.gamma_bound, self.certificate)

    def to_dict(self):
        """Matrix literals (row-major nested lists) for inspection or export."""
        return {
            "gamma": self.gamma,
            "gamma_bound": self.gamma_bound,
            "agents": [
                {
                    "agent": i + 1,
                    "observability_rank": d.v,
                    "L": self.L[i].tolist(),
                    "L_o": self.Lo[i].tolist(),
                    "M": self.M[i].tolist(),
                    "closed_loop_observable_poles": _poles(d.Ao + self.Lo[i] @ d.Co),
                }
                for i, d in enumerate(self.decomps)
            ],
        }


def _poles(M):
    ev = np.linalg.eigvals(M) if M.size else np.zeros(0)
    return [[float(z.real), float(z.imag)] for z in sorted(ev, key=lambda z: (z.real, z.imag))]


def _agent_specs(pole_spec, n_agents):
    if pole_spec is None:
        return [PoleSpec.riccati()] * n_agents
    if isinstance(pole_spec, PoleSpec):
        return [pole_spec] * n_agents
    specs = list(pole_spec)
    if len(specs) != n_agents:
        raise InputError(f"need {n_agents} pole specs, got {len(specs)}")
    return [s if s is not None else PoleSpec.riccati() for s in specs]


def _observable_gain(i, d: AgentDecomposition, spec: PoleSpec):
    if spec.kind == "full_gain":
        Lfull = np.atleast_2d(np.asarray(spec.gain, dtype=float))
        p = d.Co.shape[0]
        if Lfull.shape != (d.n, p):
            raise InputError(f"agent {i + 1}: L must be {d.n}x{p}, got {Lfull.shape}")
        leak = np.abs(d.Vu.T @ Lfull).max(initial=0.0)
        if leak > 1e-8 * max(1.0, np.abs(Lfull).max()):
            raise SynthesisError(f"agent {i + 1}: L injects into unobservable coordinates")
        spec = PoleSpec.explicit(d.Vo.T @ Lfull)
    try:
        return place_observer_gain(d.Ao, d.Co, spec)
    except UnsupportedSpecError as exc:
        warnings.warn(f"agent {i + 1}: {exc}; using the Riccati design instead", stacklevel=3)
        return place_observer_gain(d.Ao, d.Co, PoleSpec.riccati())


def build_observer(model: SystemModel, lapset: LaplacianSet, gamma="auto",
                   pole_spec=None, decomps=None) -> ObserverBank:
    """Synthesize gains for every agent.

    Parameters
    ----------
    gamma : float or "auto"
        ``"auto"`` takes 1.05 times the coupling-gain lower bound, which
        needs a strongly connected average graph and joint observability.
    pole_spec : PoleSpec or sequence of PoleSpec, optional
        One spec for all agents or one per agent (``None`` entries mean
        Riccati). Explicit poles on multi-output blocks fall back to
        Riccati with a warning.
    """
    decomps = tuple(decomps if decomps is not None else decompose(model))
    if len(decomps) != model.n_agents:
        raise InputError("one decomposition per agent is required")
    cert = certify_joint_observability(model, lapset, decomps)
    bound = None
    if cert.unobservable_dim == 0:
        bound = 0.0
    elif cert.applicable and cert.jointly_observable and cert.pd_condition:
        bound = gamma_lower_bound(model.A, lapset.theta, cert.lambda_l)

    if isinstance(gamma, str):
        if gamma != "auto":
            raise InputError(f"gamma must be a number or 'auto', got {gamma!r}")
        if bound is None:
            raise SynthesisError("automatic gamma needs a strongly connected average graph "
                                 "and a jointly observable system")
        gamma_val = AUTO_GAMMA_FACTOR * bound if bound > 0 else 1.0
    else:
        gamma_val = float(gamma)
        if not math.isfinite(gamma_val) or gamma_val < 0:
            raise InputError("gamma must be a nonnegative finite number")

    n = model.n
    specs = _agent_specs(pole_spec, model.n_agents)
    Ls, Ms, Los = [], [], []
    for i, (d, spec) in enumerate(zip(decomps, specs)):
        Lo = _observable_gain(i, d, spec)
        Los.append(Lo)
        Ls.append(d.Vo @ Lo if d.v else np.zeros((n, d.Co.shape[0])))
        Ms.append(d.Vu @ d.Vu.T)
    return ObserverBank(model, decomps, lapset, gamma_val, tuple(Ls), tuple(Ms), tuple(Los),
                        stack_blocks(decomps), bound, cert)


def error_matrices_for(bank: ObserverBank, L) -> tuple[np.ndarray, np.ndarray]:
    """``(A_u - g Vu^T (L x I) Vu, A_r - g Vu^T (L x I) Vo)`` for a given Laplacian."""
    b = bank.blocks
    K = np.kron(np.asarray(L, dtype=float), np.eye(bank.n))
    Mr = b.Au - bank.gamma * (b.Vu.T @ K @ b.Vu)
    Nr = b.Ar - bank.gamma * (b.Vu.T @ K @ b.Vo)
    return Mr, Nr


def error_matrices(bank: ObserverBank, mode: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0 <= mode < bank.n_modes:
        raise InputError(f"mode {mode} out of range 0..{bank.n_modes - 1}")
    return error_matrices_for(bank, bank.lapset.modes[mode])


def averaged_matrix(bank: ObserverBank) -> np.ndarray:
    """``Q_av = A_u - gamma V_u^T (Lbar x I) V_u``."""
    return bank.blocks.Au - bank.gamma * coupling_matrix(bank.blocks, bank.lapset.average, bank.n)


def observable_error_matrix(bank: ObserverBank) -> np.ndarray:
    """``diag(A_oi + L_oi C_oi)``, the autonomous observable-coordinate dynamics."""
    return block_diag(*[d.Ao + Lo @ d.Co for d, Lo in zip(bank.decomps, bank.Lo)])


def evaluate_input(model: SystemModel, t, x, xhat):
    if model.input is None:
        return None
    if isinstance(model.input, AffineInput):
        return model.input(t, x, xhat)
    return np.asarray(model.input(t), dtype=float).ravel()


def plant_vector_field(model: SystemModel, x, xhat=None, t=0.0):
    dx = model.A @ x
    u = evaluate_input(model, t, x, xhat)
    if u is not None:
        dx = dx + model.B @ u
    return dx


def observer_vector_field(bank: ObserverBank, mode, x, xhat, t=0.0, laplacian=None):
    """Right-hand side of every agent's observer, shape ``(N, n)``.

    ``laplacian`` overrides the mode graph (used for averaged references).
    Neighbour sums use the Laplacian rows, which equals the weighted sum
    of ``xhat_j - xhat_i`` over in-neighbours.
    """
    model = bank.model
    x = np.asarray(x, dtype=float)
    X = np.asarray(xhat, dtype=float).reshape(bank.n_agents, bank.n)
    Lap = bank.lapset.modes[mode] if laplacian is None else np.asarray(laplacian)
    consensus = Lap @ X
    out = X @ model.A.T
    for i, C in enumerate(model.outputs):
        if C.shape[0]:
            out[i] += bank.L[i] @ (C @ X[i] - C @ x)
        out[i] -= bank.gamma * (bank.M[i] @ consensus[i])
    u = evaluate_input(model, t, x, X)
    if u is not None:
        out += (model.B @ u)[None, :]
    return out


def joint_matrices(bank: ObserverBank, L):
    """Linear system ``z' = F z + G u`` for ``z = col(x, xhat_1, ..., xhat_N)``.

    For an :class:`AffineInput` the feedback is folded into ``F`` and the
    returned ``c`` is the constant drive ``G u0``; otherwise ``c`` is None
    and ``G`` must be applied to ``u(t)`` by the caller.
    """
    model = bank.model
    n, N = bank.n, bank.n_agents
    L = np.asarray(L, dtype=float)
    F = np.zeros((n * (N + 1), n * (N + 1)))
    F[:n, :n] = model.A
    for i, C in enumerate(model.outputs):
        r = slice(n * (i + 1), n * (i + 2))
        LC = bank.L[i] @ C if C.shape[0] else np.zeros((n, n))
        F[r, :n] = -LC
        F[r, r] = model.A + LC
        for j in range(N):
            if L[i, j] != 0.0:
                c = slice(n * (j + 1), n * (j + 2))
                F[r, c] -= bank.gamma * L[i, j] * bank.M[i]
    G = None
    c = None
    if model.B is not None:
        G = np.vstack([model.B] * (N + 1))
        if isinstance(model.input, AffineInput):
            F = F + G @ np.hstack([model.input.Kx, model.input.Kxhat])
            c = G @ model.input.u0
    return F, G, c


def joint_error_matrices(bank: ObserverBank, L):
    """Same coupled system in coordinates ``z = col(x, e_1, ..., e_N)``, ``e_i = xhat_i - x``.

    Built directly rather than by transforming :func:`joint_matrices`, so the
    error block is exactly decoupled from ``x`` (no ``(L 1) x`` roundoff) and
    error norms keep full relative precision while ``x`` itself grows.
    Returns ``(F, G, c)`` with the same conventions.
    """
    model = bank.model
    n, N = bank.n, bank.n_agents
    L = np.asarray(L, dtype=float)
    F = np.zeros((n * (N + 1), n * (N + 1)))
    F[:n, :n] = model.A
    for i, C in enumerate(model.outputs):
        r = slice(n * (i + 1), n * (i + 2))
        F[r, r] = model.A + (bank.L[i] @ C if C.shape[0] else 0.0)
        for j in range(N):
            if L[i, j] != 0.0:
                c = slice(n * (j + 1), n * (j + 2))
                F[r, c] -= bank.gamma * L[i, j] * bank.M[i]
    G = None
    c = None
    if model.B is not None:
        G = np.zeros((n * (N + 1), model.B.shape[1]))
        G[:n] = model.B
        if isinstance(model.input, AffineInput):
            K = model.input.Kxhat
            # u = Kx x + Kxhat (1 (x) x + e) + u0
            Kx_tot = model.input.Kx + sum(K[:, n * j:n * (j + 1)] for j in range(N))
            F[:n, :n] += model.B @ Kx_tot
            F[:n, n:] += model.B @ K
            c = G @ model.input.u0
    return F, G, c


def error_coordinates(bank: ObserverBank, x, xhat):
    """Stacked ``(x_u, x_o)`` error coordinates for given plant and estimates."""
    X = np.asarray(xhat, dtype=float).reshape(bank.n_agents, bank.n)
    E = X - np.asarray(x, dtype=float)[None, :]
    xu = np.concatenate([d.Vu.T @ E[i] for i, d in enumerate(bank.decomps)])
    xo = np.concatenate([d.Vo.T @ E[i] for i, d in enumerate(bank.decomps)])
    return xu, xo
