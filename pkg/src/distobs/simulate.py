"""Fixed-step simulation of the plant and the observer bank under switching.

Every integration step lies inside a single mode: each dwell interval is cut
into equal steps no longer than ``dt`` so that switch instants are always
grid points. Within a mode the coupled system is linear with constant
coefficients, so the classic RK4 step is applied in its closed polynomial
form ``z <- R(hF) z + h phi(hF) c``. This is algebraically the same RK4 step,
evaluated once per (mode, step length) instead of four times per step.
Callable (time-varying) inputs use the explicit four-stage RK4 loop.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .certify import fit_decay_rate
from .exceptions import DivergenceError, InputError
from .jointobs import AffineInput, SystemModel
from .numerics import PoleSpec
from .synthesis import ObserverBank, build_observer, joint_error_matrices
from .topology import Digraph, Periodic, SwitchingLaw, Trace, laplacian_set

OVERFLOW_GUARD = 1e12
MAX_STEPS = 10 ** 8


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """Everything needed for one reproducible run.

    ``phases`` lists ``(start_time, A)`` pairs that replace the plant matrix
    from ``start_time`` on; the observer is re-synthesised for each phase and
    the states are handed over unchanged.
    """

    model: SystemModel
    graphs: tuple
    law: SwitchingLaw
    x0: np.ndarray
    xhat0: np.ndarray
    t_end: float
    gamma: float | str = "auto"
    pole_spec: PoleSpec | tuple | None = None
    dt: float | None = None
    seed: int = 0
    stride: int = 10
    record_states: bool = False
    transient: float | None = None
    phases: tuple = ()
    graph_names: tuple = ()
    name: str = ""

    def __post_init__(self):
        n, N = self.model.n, self.model.n_agents
        x0 = np.asarray(self.x0, dtype=float).ravel()
        xhat0 = np.asarray(self.xhat0, dtype=float).reshape(N, n) if np.size(self.xhat0) == n * N else None
        if x0.size != n:
            raise InputError(f"x0 has {x0.size} entries, expected {n}")
        if xhat0 is None:
            raise InputError(f"xhat0 must hold {N} estimates of size {n}")
        if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(xhat0))):
            raise InputError("initial conditions must be finite")
        if self.t_end < 0:
            raise InputError("t_end must be nonnegative")
        if self.dt is not None and self.dt <= 0:
            raise InputError("dt must be positive")
        if self.stride < 1:
            raise InputError("stride must be at least 1")
        graphs = tuple(self.graphs)
        if any(g.n != N for g in graphs):
            raise InputError(f"every graph must have {N} agents")
        if len(graphs) < self.law.n_modes:
            raise InputError(f"switching law uses {self.law.n_modes} modes, {len(graphs)} graphs given")
        starts = [float(s) for s, _ in self.phases]
        if any(s <= 0 for s in starts) or any(b <= a for a, b in zip(starts, starts[1:])):
            raise InputError("phase start times must be positive and increasing")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "xhat0", xhat0)
        object.__setattr__(self, "graphs", graphs)
        object.__setattr__(self, "phases", tuple((float(s), np.asarray(A, dtype=float)) for s, A in self.phases))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_period(self, T):
        if not isinstance(self.law, Periodic):
            raise InputError("the period can only be changed for periodic switching")
        return self.replace(law=self.law.with_period(T))

    def with_epsilon(self, eps):
        return self.replace(law=self.law.with_epsilon(eps))

    def with_gamma(self, gamma):
        return self.replace(gamma=gamma)

    def laplacians(self):
        return laplacian_set(self.graphs, law=self.law)

    def phase_models(self):
        """``[(start, end, model)]`` covering ``[0, t_end]``."""
        bounds = [0.0] + [s for s, _ in self.phases if s < self.t_end] + [self.t_end]
        models = [self.model] + [self.model.with_A(A) for s, A in self.phases if s < self.t_end]
        return [(a, b, m) for a, b, m in zip(bounds, bounds[1:], models)]

    def resolved_dt(self) -> float:
        if self.dt is not None:
            return float(self.dt)
        dwell = self.law.min_dwell()
        dt = dwell / 20.0 if math.isfinite(dwell) else math.inf
        if self.t_end > 0:
            dt = min(dt, 1e-3 * self.t_end)
        return dt if math.isfinite(dt) else 1e-3


def build_banks(config: ScenarioConfig, lapset=None):
    lapset = lapset or config.laplacians()
    return [(a, b, build_observer(m, lapset, config.gamma, config.pole_spec))
            for a, b, m in config.phase_models()]


@dataclass(eq=False)
class SimResult:
    """Sampled trajectories of one run. Arrays are indexed by sample first."""

    times: np.ndarray
    modes: np.ndarray
    errors: np.ndarray
    switch_log: list
    dt: float
    states: np.ndarray | None = None
    estimates: np.ndarray | None = None
    rates: np.ndarray = field(default_factory=lambda: np.zeros(0))
    r2: np.ndarray = field(default_factory=lambda: np.zeros(0))
    diverged: bool = False
    gamma: tuple = ()

    @property
    def n_agents(self):
        return self.errors.shape[1]

    @property
    def final_errors(self):
        return self.errors[-1]

    @property
    def initial_errors(self):
        return self.errors[0]

    @property
    def max_transient(self):
        return float(self.errors.max()) if self.errors.size else 0.0

    @property
    def converged(self):
        if self.diverged:
            return False
        if self.times.size < 2:
            return True
        return bool(np.all(self.rates < 0)
                    and self.final_errors.max() <= self.initial_errors.max())

    def summary(self):
        return {
            "t_end": float(self.times[-1]) if self.times.size else 0.0,
            "samples": int(self.times.size),
            "switches": len(self.switch_log),
            "diverged": self.diverged,
            "converged": self.converged,
            "final_errors": [float(e) for e in self.final_errors],
            "decay_rates": [float(r) for r in self.rates],
            "r2": [float(r) for r in self.r2],
            "max_transient": self.max_transient,
        }

    def to_csv(self, target=None, header_lines=()):
        """Write ``t, mode, err_1..err_N[, x_*, est_*]`` rows with 17 significant digits.

        ``header_lines`` are emitted first as ``#`` comments. Modes are 1-based.
        Returns the text when ``target`` is None.
        """
        buf = io.StringIO() if target is None else None
        fh = buf if buf is not None else (open(target, "w", newline="") if isinstance(target, str) else target)
        try:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            N = self.n_agents
            head = ["t", "mode"] + [f"err_{i + 1}" for i in range(N)]
            if self.states is not None:
                n = self.states.shape[1]
                head += [f"x_{k + 1}" for k in range(n)]
                head += [f"est_{i + 1}_{k + 1}" for i in range(N) for k in range(n)]
            w.writerow(head)
            fmt = "{:.17g}".format
            for j, t in enumerate(self.times):
                row = [fmt(t), str(int(self.modes[j]) + 1)] + [fmt(e) for e in self.errors[j]]
                if self.states is not None:
                    row += [fmt(v) for v in self.states[j]]
                    row += [fmt(v) for v in self.estimates[j].ravel()]
                w.writerow(row)
        finally:
            if buf is None and isinstance(target, str):
                fh.close()
        return buf.getvalue() if buf is not None else None


def _poly_step(F, h, c):
    """Closed form of one RK4 step for ``z' = F z + c``."""
    dim = F.shape[0]
    X = h * F
    I = np.eye(dim)
    X2 = X @ X
    X3 = X2 @ X
    R = I + X + X2 / 2.0 + X3 / 6.0 + X3 @ X / 24.0
    q = None if c is None else h * (I + X / 2.0 + X2 / 6.0 + X3 / 24.0) @ c
    return R, q


def _rk4_step(f, t, z, h):
    k1 = f(t, z)
    k2 = f(t + h / 2, z + h / 2 * k1)
    k3 = f(t + h / 2, z + h / 2 * k2)
    k4 = f(t + h, z + h * k3)
    return z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


class _Recorder:
    def __init__(self, n, N, keep_states):
        self.n, self.N = n, N
        self.keep = keep_states
        self.t, self.m, self.err, self.x, self.xh = [], [], [], [], []

    def add(self, t, mode, z):
        if self.t and t <= self.t[-1]:
            return
        x = z[:self.n]
        E = z[self.n:].reshape(self.N, self.n)
        self.t.append(t)
        self.m.append(mode)
        self.err.append(np.linalg.norm(E, axis=1))
        if self.keep:
            self.x.append(x.copy())
            self.xh.append(x[None, :] + E)

    def result(self, switch_log, dt, diverged, gammas, transient):
        times = np.array(self.t)
        errors = np.array(self.err).reshape(len(self.t), self.N)
        res = SimResult(times, np.array(self.m, dtype=int), errors, switch_log, dt,
                        np.array(self.x) if self.keep else None,
                        np.array(self.xh) if self.keep else None,
                        diverged=diverged, gamma=gammas)
        if times.size >= 2:
            fits = [fit_decay_rate(times, errors[:, i], transient) for i in range(self.N)]
            res.rates = np.array([f[0] for f in fits])
            res.r2 = np.array([f[1] for f in fits])
        else:
            res.rates = np.zeros(self.N)
            res.r2 = np.ones(self.N)
        return res


def _rough_step_count(law, t_end, dt) -> float:
    """Lower bound on the step count, cheap enough to check before listing segments."""
    steps = t_end / dt
    if isinstance(law, Periodic):
        live = sum(1 for w in law.fractions if w > 0)
        steps = max(steps, t_end / (law.period * law.epsilon) * live)
    return steps


def integrate(config: ScenarioConfig, banks=None) -> SimResult:
    """Run one simulation.

    Raises
    ------
    DivergenceError
        When any state exceeds the overflow guard; ``exc.result`` holds the
        samples recorded so far.
    """
    n, N = config.model.n, config.model.n_agents
    dt = config.resolved_dt()
    law = config.law
    t_end = float(config.t_end)
    transient = config.transient if config.transient is not None else min(5.0, 0.5 * t_end)
    banks = banks if banks is not None else build_banks(config)
    gammas = tuple(float(b.gamma) for _, _, b in banks)

    rec = _Recorder(n, N, config.record_states)
    # State is integrated as col(x, e_1..e_N); see joint_error_matrices.
    z = np.concatenate([config.x0, (config.xhat0 - config.x0[None, :]).ravel()])
    mode0 = law.mode_at(0.0)[0]
    rec.add(0.0, mode0, z)
    if t_end == 0.0:
        return rec.result([(0.0, mode0)], dt, False, gammas, transient)

    est_steps = _rough_step_count(law, t_end, dt)
    if est_steps <= MAX_STEPS:
        segments = list(law.segments(0.0, t_end))
        est_steps = sum(max(1, math.ceil((b - a) / dt - 1e-9)) for a, b, _ in segments)
    if est_steps > MAX_STEPS:
        raise InputError(f"run needs about {est_steps:.3g} steps (> {MAX_STEPS:.0e}); "
                         "switching is too fast for direct simulation, use averaged_reference")
    switch_log = [(a, m) for a, _, m in segments]

    step_count = 0
    for p_start, p_end, bank in banks:
        cache = {}
        callable_input = bank.model.input is not None and not isinstance(bank.model.input, AffineInput)
        for a, b, mode in law.segments(p_start, p_end):
            Lap = bank.lapset.modes[mode]
            if mode not in cache:
                cache[mode] = (joint_error_matrices(bank, Lap), {})
            (F, G, c), steps = cache[mode]
            k = max(1, math.ceil((b - a) / dt - 1e-9))
            h = (b - a) / k
            rec.add(a, mode, z)
            if callable_input:
                model = bank.model

                def f(t, zz, F=F, G=G, model=model):
                    return F @ zz + G @ np.asarray(model.input(t), dtype=float).ravel()
            else:
                key = float(f"{h:.13e}")
                if key not in steps:
                    steps[key] = _poly_step(F, h, c)
                R, q = steps[key]
            for j in range(1, k + 1):
                if callable_input:
                    z = _rk4_step(f, a + (j - 1) * h, z, h)
                else:
                    z = R @ z if q is None else R @ z + q
                step_count += 1
                t = b if j == k else a + j * h
                if not np.all(np.abs(z) < OVERFLOW_GUARD):
                    res = rec.result(switch_log, dt, True, gammas, transient)
                    raise DivergenceError(f"state exceeded {OVERFLOW_GUARD:.0e} at t={t:.6g}", res)
                if step_count % config.stride == 0 and j < k:
                    rec.add(t, mode, z)
    final_mode = law.mode_at(t_end)[0]
    rec.add(t_end, final_mode, z)
    return rec.result(switch_log, dt, False, gammas, transient)


def averaged_reference(config: ScenarioConfig) -> SimResult:
    """Same run with the single fixed average graph (the fast-switching limit)."""
    return integrate(averaged_config(config))


def averaged_config(config: ScenarioConfig) -> ScenarioConfig:
    lapset = config.laplacians()
    g = Digraph.from_laplacian(lapset.average)
    return config.replace(graphs=(g,), law=Trace(((0.0, 0),)), dt=config.resolved_dt(),
                          graph_names=("average",))


@dataclass(frozen=True)
class RunSummary:
    """One sweep point.

    ``diverged`` means the run did not converge: either the overflow guard
    tripped (``overflow``) or the errors failed to decay. ``deviation`` is the
    integrated squared distance to the averaged-graph run.
    """

    value: float
    final_max_error: float
    decay_rate: float
    max_transient: float
    deviation: float | None
    diverged: bool
    overflow: bool

    def to_dict(self):
        return dataclasses.asdict(self)


def integrated_squared_deviation(a: SimResult, b: SimResult, samples=4001) -> float:
    """``int sum_i ||xhat_i^a - xhat_i^b||^2 dt`` on a common uniform grid."""
    if a.estimates is None or b.estimates is None:
        raise InputError("both runs need recorded estimates")
    t_end = min(a.times[-1], b.times[-1])
    if t_end <= 0:
        return 0.0
    grid = np.linspace(0.0, t_end, samples)
    Ea = a.estimates.reshape(a.times.size, -1)
    Eb = b.estimates.reshape(b.times.size, -1)
    diff2 = np.zeros_like(grid)
    for k in range(Ea.shape[1]):
        d = np.interp(grid, a.times, Ea[:, k]) - np.interp(grid, b.times, Eb[:, k])
        diff2 += d * d
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    return float(trapezoid(diff2, grid))


def _apply(config: ScenarioConfig, parameter, value):
    if parameter == "T":
        return config.with_period(value)
    if parameter == "epsilon":
        return config.with_epsilon(value)
    if parameter == "gamma":
        return config.with_gamma(value)
    raise InputError(f"unknown sweep parameter {parameter!r}; use T, epsilon or gamma")


def _run_one(args):
    config, parameter, value, with_reference = args
    cfg = _apply(config, parameter, value).replace(record_states=with_reference or config.record_states)
    try:
        res = integrate(cfg)
    except DivergenceError as exc:
        res = exc.result
    dev = None
    if with_reference and not res.diverged:
        try:
            ref = averaged_reference(cfg)
            dev = integrated_squared_deviation(res, ref)
        except DivergenceError:
            dev = math.inf
    return RunSummary(
        value=float(value),
        final_max_error=float(res.final_errors.max()),
        decay_rate=float(res.rates.max()) if res.rates.size else 0.0,
        max_transient=res.max_transient,
        deviation=dev,
        diverged=not res.converged,
        overflow=res.diverged,
    )


def sweep(config: ScenarioConfig, parameter: str, values: Sequence[float],
          with_reference=True, workers=1) -> list[RunSummary]:
    """Independent runs over ``values`` of ``T``, ``epsilon`` or ``gamma``.

    A diverging run is recorded, not raised. ``workers > 1`` fans out across
    processes (the config must then be picklable); results keep the order
    of ``values``.
    """
    values = [float(v) for v in values]
    if parameter in ("T", "epsilon") and any(v <= 0 for v in values):
        raise InputError(f"{parameter} values must be positive")
    if parameter == "gamma" and any(v < 0 for v in values):
        raise InputError("gamma values must be nonnegative")
    jobs = [(config, parameter, v, with_reference) for v in values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]
