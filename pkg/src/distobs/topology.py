"""Directed graphs, Laplacians and switching signals.

Conventions
-----------
* Agents and modes are indexed from 0 in the Python API. Scenario files and
  CSV output use 1-based labels.
* ``weights[i, j] > 0`` means agent ``i`` receives from agent ``j`` (edge
  ``j -> i``). The Laplacian is the in-degree one, ``L = D - W``.
* A switching law returns the mode active at real time ``t`` by evaluating
  its base schedule at ``t / epsilon``. Intervals are left-closed.
"""

from __future__ import annotations

import bisect
import math
import threading
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .exceptions import GraphError, InputError
from .numerics import as_matrix


class ShortHorizonWarning(UserWarning):
    """Averaging horizon shorter than a single dwell of the signal."""


@dataclass(frozen=True, eq=False)
class Digraph:
    """Weighted digraph on ``n`` agents; see module docstring for the edge convention."""

    weights: np.ndarray

    def __post_init__(self):
        W = as_matrix(self.weights, "weights", square=True) if np.size(self.weights) else np.zeros((0, 0))
        if np.any(W < 0):
            raise InputError("edge weights must be nonnegative")
        if np.any(np.diag(W) != 0):
            raise InputError("self-loops are not allowed")
        W.setflags(write=False)
        object.__setattr__(self, "weights", W)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((n, n)))

    @classmethod
    def from_edges(cls, n, edges):
        """Build from ``(source, target[, weight])`` tuples (0-based)."""
        W = np.zeros((n, n))
        for e in edges:
            src, dst = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if not (0 <= src < n and 0 <= dst < n):
                raise InputError(f"edge {tuple(e)} references an agent outside 0..{n - 1}")
            if src == dst:
                raise InputError(f"self-loop on agent {src}")
            if w < 0:
                raise InputError(f"negative weight on edge {tuple(e)}")
            W[dst, src] = w
        return cls(W)

    @classmethod
    def from_laplacian(cls, L):
        L = as_matrix(L, "L", square=True)
        W = -L.copy()
        np.fill_diagonal(W, 0.0)
        W[np.abs(W) < 1e-15] = 0.0
        return cls(W)

    def edges(self):
        """``(source, target, weight)`` triples, 0-based, in row-major order."""
        dst, src = np.nonzero(self.weights)
        return [(int(s), int(d), float(self.weights[d, s])) for d, s in zip(dst, src)]

    def __eq__(self, other):
        return isinstance(other, Digraph) and np.array_equal(self.weights, other.weights)

    __hash__ = None


def laplacian(g: Digraph) -> np.ndarray:
    W = np.asarray(g.weights, dtype=float)
    if np.any(W < 0):
        raise InputError("negative weight")
    L = -W.copy()
    # Diagonal set to the row sum so that rows cancel by construction.
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, W.sum(axis=1) - np.diag(W))
    return L


def union_graph(graphs: Sequence[Digraph]) -> Digraph:
    if not graphs:
        raise InputError("need at least one graph")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise InputError("graphs have different agent counts")
    return Digraph(np.maximum.reduce([g.weights for g in graphs]))


def _reachable(adj, start):
    seen = {start}
    todo = deque([start])
    while todo:
        k = todo.popleft()
        for j in np.nonzero(adj[k])[0]:
            if j not in seen:
                seen.add(int(j))
                todo.append(int(j))
    return seen


def is_strongly_connected(g) -> bool:
    """Forward and backward reachability from agent 0. Accepts a Digraph or a Laplacian."""
    W = g.weights if isinstance(g, Digraph) else -np.asarray(g, dtype=float)
    n = W.shape[0]
    if n <= 1:
        return True
    off = (W > 0) & ~np.eye(n, dtype=bool)
    # off[i, j]: edge j -> i. Outgoing neighbours of k are column k.
    forward = _reachable(off.T, 0)
    backward = _reachable(off, 0)
    return len(forward) == n and len(backward) == n


def left_theta(Lbar, tol=1e-9) -> np.ndarray:
    """Positive left null vector of a Laplacian, scaled so ``min(theta) == 1``.

    Raises
    ------
    GraphError
        If the zero eigenvalue is not simple or the null vector is not
        strictly positive (the graph is not strongly connected).
    """
    Lbar = as_matrix(Lbar, "Lbar", square=True)
    n = Lbar.shape[0]
    if n == 1:
        return np.ones(1)
    _, s, vt = np.linalg.svd(Lbar.T)
    scale = max(s[0], 1e-300)
    nullity = int(np.sum(s <= tol * scale))
    if nullity != 1:
        raise GraphError(f"Laplacian has a {nullity}-dimensional left null space; "
                         "the average graph is not strongly connected")
    theta = vt[-1]
    theta = theta * np.sign(theta[np.argmax(np.abs(theta))])
    if np.min(theta) <= tol * np.max(theta):
        raise GraphError("left null vector is not strictly positive; "
                         "the average graph is not strongly connected")
    return theta / np.min(theta)


# --------------------------------------------------------------------------
# Switching laws
# --------------------------------------------------------------------------

class SwitchingLaw:
    """Piecewise-constant mode selector. Subclasses implement the base schedule."""

    epsilon: float = 1.0
    n_modes: int = 0

    def _base_mode_at(self, tau):  # -> (mode, next switch in base time)
        raise NotImplementedError

    def _base_segments(self, tau0, tau1):  # yields (a, b, mode) in base time
        raise NotImplementedError

    def mode_at(self, t: float):
        """Mode active at real time ``t`` and the real time of the next switch."""
        if t < 0:
            raise InputError("time must be nonnegative")
        mode, nxt = self._base_mode_at(t / self.epsilon)
        return mode, nxt * self.epsilon

    def segments(self, t0: float, t1: float) -> Iterator[tuple[float, float, int]]:
        """Consecutive ``(start, end, mode)`` intervals covering ``[t0, t1]``."""
        eps = self.epsilon
        # Boundaries within rounding of t0 or t1 are snapped so no sliver
        # segment appears from float drift of k * period.
        snap = 1e-12 * max(1.0, abs(t1))
        for a, b, m in self._base_segments(t0 / eps, t1 / eps):
            a_r = t0 if a * eps - t0 <= snap else a * eps
            b_r = t1 if t1 - b * eps <= snap else b * eps
            if b_r - a_r > snap:
                yield a_r, b_r, m

    def switch_times(self, t0, t1):
        return [a for a, _, _ in self.segments(t0, t1)][1:]

    def min_dwell(self) -> float:
        """Shortest real-time dwell of the schedule (an estimate for Markov laws)."""
        raise NotImplementedError

    def with_epsilon(self, epsilon):
        raise NotImplementedError


def sample_mode(law: SwitchingLaw, t: float):
    return law.mode_at(t)


@dataclass(frozen=True)
class Periodic(SwitchingLaw):
    """Modes ``0..p-1`` in order, mode ``k`` occupying ``fractions[k]`` of each period."""

    period: float
    fractions: tuple
    epsilon: float = 1.0

    def __post_init__(self):
        fr = tuple(float(w) for w in self.fractions)
        object.__setattr__(self, "fractions", fr)
        if not fr:
            raise InputError("need at least one mode fraction")
        if self.period <= 0 or self.epsilon <= 0:
            raise InputError("period and epsilon must be positive")
        if any(w <= 0 for w in fr):
            raise InputError("mode fractions must be positive")
        if abs(sum(fr) - 1.0) > 1e-12:
            raise InputError(f"mode fractions sum to {sum(fr)!r}, not 1")

    @property
    def n_modes(self):
        return len(self.fractions)

    @property
    def _edges(self):
        # Cumulative slot boundaries in units of the period; last one is exactly 1.
        c = np.concatenate([[0.0], np.cumsum(self.fractions)])
        c[-1] = 1.0
        return c

    def _base_mode_at(self, tau):
        T = self.period
        s = math.floor(tau / T)
        phase = tau / T - s
        edges = self._edges
        k = int(np.searchsorted(edges, phase, side="right")) - 1
        k = min(max(k, 0), self.n_modes - 1)
        return k, (s + edges[k + 1]) * T

    def _base_segments(self, tau0, tau1):
        T = self.period
        edges = self._edges
        s = math.floor(tau0 / T)
        while True:
            for k in range(self.n_modes):
                a, b = (s + edges[k]) * T, (s + edges[k + 1]) * T
                if b <= tau0:
                    continue
                if a >= tau1:
                    return
                yield a, b, k
            s += 1

    def min_dwell(self):
        return min(self.fractions) * self.period * self.epsilon

    def with_epsilon(self, epsilon):
        return Periodic(self.period, self.fractions, float(epsilon))

    def with_period(self, period):
        return Periodic(float(period), self.fractions, self.epsilon)


@dataclass(frozen=True)
class Trace(SwitchingLaw):
    """Externally supplied switching signal: ``(time, mode)`` events starting at time 0."""

    events: tuple
    epsilon: float = 1.0
    n_modes_hint: int | None = None

    def __post_init__(self):
        ev = tuple((float(t), int(m)) for t, m in self.events)
        object.__setattr__(self, "events", ev)
        if not ev:
            raise InputError("trace needs at least one event")
        if ev[0][0] != 0.0:
            raise InputError("first trace event must be at time 0")
        times = [t for t, _ in ev]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InputError("trace times must be strictly increasing")
        if any(m < 0 for _, m in ev):
            raise InputError("mode indices must be nonnegative")
        if self.epsilon <= 0:
            raise InputError("epsilon must be positive")

    @property
    def n_modes(self):
        return self.n_modes_hint or 1 + max(m for _, m in self.events)

    def _base_mode_at(self, tau):
        times = [t for t, _ in self.events]
        k = bisect.bisect_right(times, tau) - 1
        nxt = times[k + 1] if k + 1 < len(times) else math.inf
        return self.events[k][1], nxt

    def _base_segments(self, tau0, tau1):
        ev = self.events
        for k, (t, m) in enumerate(ev):
            nxt = ev[k + 1][0] if k + 1 < len(ev) else math.inf
            if nxt <= tau0:
                continue
            if t >= tau1:
                return
            yield t, nxt, m

    def min_dwell(self):
        times = [t for t, _ in self.events]
        gaps = np.diff(times)
        return float(np.min(gaps)) * self.epsilon if gaps.size else math.inf

    def with_epsilon(self, epsilon):
        return Trace(self.events, float(epsilon), self.n_modes_hint)


class Markov(SwitchingLaw):
    """Continuous-time Markov switching with exponential holding times.

    The sample path is a deterministic function of ``(generator, seed,
    initial, min_dwell)``: it is generated lazily and cached, and later
    queries only ever extend the cache. ``min_dwell`` is added to every
    sampled holding time.
    """

    def __init__(self, generator, seed=0, epsilon=1.0, initial=0, min_dwell=0.0):
        Q = as_matrix(generator, "generator", square=True)
        p = Q.shape[0]
        scale = max(1.0, float(np.max(np.abs(Q)))) if Q.size else 1.0
        off = Q - np.diag(np.diag(Q))
        if np.any(off < 0):
            raise InputError("generator off-diagonal rates must be nonnegative")
        if np.any(np.abs(Q.sum(axis=1)) > 1e-12 * scale):
            raise InputError("generator rows must sum to zero")
        if epsilon <= 0 or min_dwell < 0:
            raise InputError("epsilon must be positive and min_dwell nonnegative")
        if not 0 <= initial < p:
            raise InputError("initial mode out of range")
        self.generator = Q
        self.seed = int(seed)
        self.epsilon = float(epsilon)
        self.initial = int(initial)
        self.min_dwell_base = float(min_dwell)
        self._rng = np.random.default_rng(self.seed)
        self._times = [0.0]
        self._modes = [self.initial]
        self._lock = threading.Lock()

    def __getstate__(self):
        # The cached path is regenerated from the seed; locks do not pickle.
        return {k: v for k, v in self.__dict__.items() if k not in ("_rng", "_times", "_modes", "_lock")}

    def __setstate__(self, state):
        self.__init__(state["generator"], state["seed"], state["epsilon"], state["initial"],
                      state["min_dwell_base"])

    def __repr__(self):
        return (f"Markov(generator={self.generator.tolist()!r}, seed={self.seed}, "
                f"epsilon={self.epsilon}, initial={self.initial}, min_dwell={self.min_dwell_base})")

    @property
    def n_modes(self):
        return self.generator.shape[0]

    def _extend(self, tau):
        with self._lock:
            while self._times[-1] <= tau:
                m = self._modes[-1]
                rate = -self.generator[m, m]
                if rate <= 0:
                    self._times.append(math.inf)
                    self._modes.append(m)
                    break
                hold = self._rng.exponential(1.0 / rate) + self.min_dwell_base
                probs = self.generator[m].clip(min=0.0)
                probs[m] = 0.0
                nxt = int(self._rng.choice(len(probs), p=probs / probs.sum()))
                self._times.append(self._times[-1] + hold)
                self._modes.append(nxt)

    def _base_mode_at(self, tau):
        self._extend(tau)
        k = bisect.bisect_right(self._times, tau) - 1
        return self._modes[k], self._times[k + 1]

    def _base_segments(self, tau0, tau1):
        self._extend(tau1)
        times, modes = self._times, self._modes
        k = max(bisect.bisect_right(times, tau0) - 1, 0)
        while k + 1 < len(times) and times[k] < tau1:
            yield times[k], times[k + 1], modes[k]
            k += 1

    def min_dwell(self):
        rates = -np.diag(self.generator)
        fastest = float(np.max(rates)) if rates.size else 0.0
        mean_hold = 1.0 / fastest if fastest > 0 else math.inf
        return (mean_hold + self.min_dwell_base) * self.epsilon

    def with_epsilon(self, epsilon):
        return Markov(self.generator, self.seed, epsilon, self.initial, self.min_dwell_base)

    def stationary_distribution(self):
        return stationary_distribution(self.generator)


def stationary_distribution(generator) -> np.ndarray:
    """Solve ``pi Q = 0``, ``sum(pi) = 1`` in the least-squares sense."""
    Q = as_matrix(generator, "generator", square=True)
    p = Q.shape[0]
    M = np.vstack([Q.T, np.ones((1, p))])
    rhs = np.zeros(p + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _as_laplacians(modes):
    return [laplacian(m) if isinstance(m, Digraph) else as_matrix(m, "L", square=True)
            for m in modes]


def average_laplacian(law: SwitchingLaw, modes, horizon: float) -> np.ndarray:
    """Time average of ``L_sigma`` over ``[0, horizon]``.

    Periodic laws return the exact fraction-weighted sum. Other laws
    integrate the realised piecewise-constant signal exactly and emit a
    :class:`ShortHorizonWarning` if no switch happens inside the horizon.
    """
    if horizon <= 0:
        raise InputError("horizon must be positive")
    Ls = _as_laplacians(modes)
    if len(Ls) < law.n_modes:
        raise InputError(f"law has {law.n_modes} modes but only {len(Ls)} graphs given")
    if isinstance(law, Periodic):
        return sum(w * L for w, L in zip(law.fractions, Ls))
    acc = np.zeros_like(Ls[0])
    count = 0
    for a, b, m in law.segments(0.0, horizon):
        acc += (b - a) * Ls[m]
        count += 1
    if count <= 1:
        warnings.warn(f"averaging horizon {horizon} is shorter than one dwell",
                      ShortHorizonWarning, stacklevel=2)
    return acc / horizon


def expected_laplacian(law: SwitchingLaw, modes, horizon: float | None = None) -> np.ndarray:
    """Long-run average Laplacian used for certification.

    Periodic: fraction-weighted sum. Markov: stationary-distribution weighted
    sum unless a finite ``horizon`` is given. Trace: the realised average over
    ``horizon`` (default: up to the last event, or the single mode).
    """
    Ls = _as_laplacians(modes)
    if isinstance(law, Periodic):
        return average_laplacian(law, Ls, 1.0)
    if isinstance(law, Markov) and horizon is None:
        pi = law.stationary_distribution()
        return sum(w * L for w, L in zip(pi, Ls))
    if isinstance(law, Trace) and horizon is None:
        last = law.events[-1][0] * law.epsilon
        if last == 0.0:
            return Ls[law.events[0][1]].copy()
        horizon = last
    return average_laplacian(law, Ls, horizon)


@dataclass(frozen=True, eq=False)
class LaplacianSet:
    """Per-mode Laplacians plus the average-graph quantities used in certification.

    ``theta`` (and ``Theta``, ``Lhat``) are ``None`` when the average graph
    is not strongly connected.
    """

    modes: tuple
    average: np.ndarray
    theta: np.ndarray | None = None
    strongly_connected: bool = False
    union: np.ndarray | None = field(default=None)

    @property
    def n_agents(self):
        return self.average.shape[0]

    @property
    def n_modes(self):
        return len(self.modes)

    @property
    def Theta(self):
        return None if self.theta is None else np.diag(self.theta)

    @property
    def Lhat(self):
        if self.theta is None:
            return None
        T = np.diag(self.theta)
        return T @ self.average + self.average.T @ T


def laplacian_set(modes, average=None, theta=None, law=None, horizon=None) -> LaplacianSet:
    """Assemble a :class:`LaplacianSet`.

    ``average`` defaults to :func:`expected_laplacian` of ``law`` (or the
    plain mean of the modes when no law is given). An explicit ``theta`` is
    accepted at any positive scale but must annihilate the average.
    """
    Ls = tuple(_as_laplacians(modes))
    if not Ls:
        raise InputError("need at least one mode")
    n = Ls[0].shape[0]
    if any(L.shape != (n, n) for L in Ls):
        raise InputError("mode Laplacians have inconsistent sizes")
    for L in Ls:
        if np.any(np.abs(L.sum(axis=1)) > 1e-9 * max(1.0, np.abs(L).max())):
            raise InputError("Laplacian rows must sum to zero")
    if average is None:
        average = expected_laplacian(law, Ls, horizon) if law is not None else sum(Ls) / len(Ls)
    average = as_matrix(average, "average", square=True)
    connected = is_strongly_connected(average)
    if theta is None:
        theta = left_theta(average) if connected else None
    else:
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.shape != (n,) or np.any(theta <= 0):
            raise InputError("theta must be a positive vector of length n")
        resid = np.abs(theta @ average).max()
        if resid > 1e-10 * max(1.0, np.abs(average).max()) * theta.max():
            raise InputError(f"theta does not annihilate the average Laplacian (residual {resid:.2e})")
    return LaplacianSet(Ls, average, theta, connected, sum(Ls))
