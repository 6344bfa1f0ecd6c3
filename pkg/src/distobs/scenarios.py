"""Scenario documents (YAML) and the four built-in examples.

A document is a mapping with sections ``system``, ``agents``, ``graphs``,
``switching``, ``observer``, ``simulation`` and ``outputs``. Agents and
modes are numbered from 1 in documents and from 0 in the Python API.
Matrices are nested lists in row-major order.

Minimal document::

    system:
      A: [[0, 1], [0, 0]]
    agents:
      - C: [[1, 0]]
      - C: []
    graphs:
      ring: [[1, 2], [2, 1]]
    switching:
      type: periodic
      period: 0.1
      modes: [ring]
    observer:
      gamma: auto
    simulation:
      x0: [1, 0]
      xhat0: zeros
      t_end: 10
"""

from __future__ import annotations

import copy
import math

import numpy as np
import yaml

from .exceptions import ConfigError, InputError
from .jointobs import AffineInput, SystemModel
from .numerics import PoleSpec
from .simulate import ScenarioConfig
from .topology import Digraph, Markov, Periodic, Trace

SECTIONS = ("name", "system", "agents", "graphs", "switching", "observer", "simulation", "outputs")


# --------------------------------------------------------------------------
# Loading
# --------------------------------------------------------------------------

def _line_index(node, path=(), out=None):
    """Map field paths to 1-based source lines from a composed YAML tree."""
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _line_index(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_index(v, path + (i,), out)
    return out


def load_document(text: str):
    """Parse YAML text into ``(document, line_index)``."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"line {mark.line + 1}" if mark is not None else "document"
        raise ConfigError(loc, str(getattr(exc, "problem", exc))) from None
    if not isinstance(doc, dict):
        raise ConfigError("line 1", "scenario must be a mapping of sections")
    return doc, (_line_index(node) if node is not None else {})


def read_document(path):
    with open(path) as fh:
        return load_document(fh.read())


class _Ctx:
    """Tracks the field path being parsed so errors can name it."""

    def __init__(self, lines=None):
        self.lines = lines or {}

    def fail(self, path, message):
        loc = ".".join(str(p + 1) if isinstance(p, int) else str(p) for p in path) or "document"
        # Walk up to the nearest node with a known line.
        for k in range(len(path), -1, -1):
            if tuple(path[:k]) in self.lines:
                loc = f"{loc} (line {self.lines[tuple(path[:k])]})"
                break
        raise ConfigError(loc, message)

    def get(self, doc, path, key, default=KeyError):
        if not isinstance(doc, dict):
            self.fail(path, "expected a mapping")
        if key not in doc:
            if default is KeyError:
                self.fail(path + (key,), "required field is missing")
            return default
        return doc[key]

    def matrix(self, value, path, rows=None, cols=None, allow_empty=False):
        try:
            M = np.array(value, dtype=float)
        except (TypeError, ValueError):
            self.fail(path, "expected a numeric matrix (nested lists)")
        if M.size == 0 and allow_empty:
            return np.zeros((0, cols or 0))
        if M.ndim == 1:
            M = M[None, :]
        if M.ndim != 2:
            self.fail(path, f"expected a 2-D matrix, got {M.ndim} dimensions")
        if not np.all(np.isfinite(M)):
            self.fail(path, "matrix has non-finite entries")
        if rows is not None and M.shape[0] != rows:
            self.fail(path, f"expected {rows} rows, got {M.shape[0]}")
        if cols is not None and M.shape[1] != cols:
            self.fail(path, f"expected {cols} columns, got {M.shape[1]}")
        return M

    def vector(self, value, path, size=None):
        try:
            v = np.array(value, dtype=float)
        except (TypeError, ValueError):
            self.fail(path, "expected a list of numbers")
        if v.ndim != 1:
            self.fail(path, "expected a flat list of numbers")
        if not np.all(np.isfinite(v)):
            self.fail(path, "vector has non-finite entries")
        if size is not None and v.size != size:
            self.fail(path, f"expected {size} entries, got {v.size}")
        return v

    def number(self, value, path, positive=False, nonneg=False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        x = float(value)
        if not math.isfinite(x):
            self.fail(path, "must be finite")
        if positive and x <= 0:
            self.fail(path, "must be positive")
        if nonneg and x < 0:
            self.fail(path, "must be nonnegative")
        return x


def _random_spec(value):
    """``"random"`` or ``"random:SEED"`` -> seed or None; anything else -> False."""
    if isinstance(value, str) and value.split(":")[0].strip() == "random":
        parts = value.split(":")
        if len(parts) == 1:
            return None
        try:
            return int(parts[1])
        except ValueError:
            return False
    return False


def _parse_input(ctx, spec, n, n_agents, m, path):
    kind = ctx.get(spec, path, "type")
    try:
        if kind == "constant":
            return AffineInput.constant(ctx.vector(ctx.get(spec, path, "u0"), path + ("u0",), m), n, n_agents)
        if kind == "affine":
            Kx = ctx.matrix(ctx.get(spec, path, "Kx"), path + ("Kx",), m, n)
            Kxhat = ctx.matrix(ctx.get(spec, path, "Kxhat"), path + ("Kxhat",), m, n * n_agents)
            u0 = ctx.vector(spec.get("u0", [0.0] * m), path + ("u0",), m)
            return AffineInput(Kx, Kxhat, u0)
        if kind == "platoon":
            block = int(ctx.number(ctx.get(spec, path, "block"), path + ("block",), positive=True))
            if n % block:
                ctx.fail(path + ("block",), f"state dimension {n} is not a multiple of {block}")
            leader = int(ctx.number(ctx.get(spec, path, "leader"), path + ("leader",), positive=True)) - 1
            K = ctx.matrix(ctx.get(spec, path, "K"), path + ("K",), cols=block)
            offsets = ctx.matrix(ctx.get(spec, path, "offsets"), path + ("offsets",), rows=n // block)
            inp = AffineInput.platoon(K, leader, offsets, n // block, block, n_agents)
            if inp.u0.size != m:
                ctx.fail(path, f"platoon input has {inp.u0.size} channels but B has {m} columns")
            return inp
    except InputError as exc:
        if isinstance(exc, ConfigError):
            raise
        ctx.fail(path, str(exc))
    ctx.fail(path + ("type",), f"unknown input type {kind!r}; use constant, affine or platoon")


def _parse_pole_spec(ctx, spec, path):
    if spec is None or spec == "riccati":
        return PoleSpec.riccati()
    if not isinstance(spec, dict):
        ctx.fail(path, "expected 'riccati' or a mapping with a 'type'")
    kind = ctx.get(spec, path, "type")
    if kind == "riccati":
        return PoleSpec.riccati(ctx.number(spec.get("margin", 0.0), path + ("margin",), nonneg=True))
    if kind == "poles":
        raw = ctx.get(spec, path, "poles")
        if not isinstance(raw, list) or not raw:
            ctx.fail(path + ("poles",), "expected a nonempty list")
        poles = []
        for k, p in enumerate(raw):
            if isinstance(p, list):
                if len(p) != 2:
                    ctx.fail(path + ("poles", k), "complex poles are written [re, im]")
                poles.append(complex(ctx.number(p[0], path + ("poles", k)), ctx.number(p[1], path + ("poles", k))))
            else:
                poles.append(complex(ctx.number(p, path + ("poles", k))))
        return PoleSpec.at(poles)
    if kind == "gain":
        return PoleSpec.explicit(ctx.matrix(ctx.get(spec, path, "L_o"), path + ("L_o",)))
    if kind == "full_gain":
        return PoleSpec.explicit(ctx.matrix(ctx.get(spec, path, "L"), path + ("L",)), full=True)
    ctx.fail(path + ("type",), f"unknown gain type {kind!r}; use riccati, poles, gain or full_gain")


def _parse_law(ctx, sw, names, seed):
    path = ("switching",)
    kind = ctx.get(sw, path, "type")
    eps = ctx.number(sw.get("epsilon", 1.0), path + ("epsilon",), positive=True)
    if kind == "periodic":
        modes = ctx.get(sw, path, "modes")
        T = ctx.number(ctx.get(sw, path, "period"), path + ("period",), positive=True)
        fr = sw.get("fractions")
        fr = [1.0 / len(modes)] * len(modes) if fr is None else list(ctx.vector(fr, path + ("fractions",), len(modes)))
        try:
            return Periodic(T, tuple(fr), eps)
        except InputError as exc:
            ctx.fail(path + ("fractions",), str(exc))
    if kind == "markov":
        modes = ctx.get(sw, path, "modes")
        Q = ctx.matrix(ctx.get(sw, path, "generator"), path + ("generator",), len(modes), len(modes))
        sd = sw.get("seed", seed)
        initial = int(ctx.number(sw.get("initial", 1), path + ("initial",), positive=True)) - 1
        dwell = ctx.number(sw.get("min_dwell", 0.0), path + ("min_dwell",), nonneg=True)
        try:
            return Markov(Q, int(sd), eps, initial, dwell)
        except InputError as exc:
            ctx.fail(path, str(exc))
    if kind == "trace":
        modes = ctx.get(sw, path, "modes")
        events = ctx.get(sw, path, "events")
        if not isinstance(events, list) or not events:
            ctx.fail(path + ("events",), "expected a nonempty list of [time, mode]")
        parsed = []
        for k, ev in enumerate(events):
            if not isinstance(ev, list) or len(ev) != 2:
                ctx.fail(path + ("events", k), "expected [time, mode]")
            t = ctx.number(ev[0], path + ("events", k), nonneg=True)
            m = int(ctx.number(ev[1], path + ("events", k), positive=True)) - 1
            if m >= len(modes):
                ctx.fail(path + ("events", k), f"mode {m + 1} out of range 1..{len(modes)}")
            parsed.append((t, m))
        try:
            return Trace(tuple(parsed), eps, len(modes))
        except InputError as exc:
            ctx.fail(path + ("events",), str(exc))
    ctx.fail(path + ("type",), f"unknown switching type {kind!r}; use periodic, markov or trace")


def parse_document(doc: dict, lines=None) -> ScenarioConfig:
    """Validate a document and build the :class:`ScenarioConfig` it describes."""
    ctx = _Ctx(lines)
    if not isinstance(doc, dict):
        ctx.fail((), "scenario must be a mapping of sections")
    for key in doc:
        if key not in SECTIONS:
            ctx.fail((key,), f"unknown section; expected one of {', '.join(SECTIONS)}")

    sysd = ctx.get(doc, (), "system")
    A = ctx.matrix(ctx.get(sysd, ("system",), "A"), ("system", "A"))
    if A.shape[0] != A.shape[1]:
        ctx.fail(("system", "A"), f"A must be square, got {A.shape[0]}x{A.shape[1]}")
    n = A.shape[0]

    agents = ctx.get(doc, (), "agents")
    if not isinstance(agents, list) or not agents:
        ctx.fail(("agents",), "expected a nonempty list of agents")
    outputs = []
    for i, ag in enumerate(agents):
        C = ctx.get(ag, ("agents", i), "C")
        outputs.append(ctx.matrix(C, ("agents", i, "C"), cols=n, allow_empty=True))
    N = len(outputs)

    B = None
    inp = None
    if sysd.get("B") is not None:
        B = ctx.matrix(sysd["B"], ("system", "B"), rows=n)
    if sysd.get("input") is not None:
        if B is None:
            ctx.fail(("system", "input"), "an input needs system.B")
        inp = _parse_input(ctx, sysd["input"], n, N, B.shape[1], ("system", "input"))
    model = SystemModel(A, tuple(outputs), B, inp)

    phases = []
    for k, ph in enumerate(sysd.get("phases") or []):
        p = ("system", "phases", k)
        start = ctx.number(ctx.get(ph, p, "start"), p + ("start",), positive=True)
        Ak = ctx.matrix(ctx.get(ph, p, "A"), p + ("A",), n, n)
        phases.append((start, Ak))

    graphs_doc = ctx.get(doc, (), "graphs")
    if not isinstance(graphs_doc, dict) or not graphs_doc:
        ctx.fail(("graphs",), "expected a mapping of graph name to edge list")
    graphs = {}
    for name, edges in graphs_doc.items():
        p = ("graphs", name)
        if edges is None:
            edges = []
        if not isinstance(edges, list):
            ctx.fail(p, "expected a list of [from, to] or [from, to, weight]")
        triples = []
        for k, e in enumerate(edges):
            if not isinstance(e, list) or len(e) not in (2, 3):
                ctx.fail(p + (k,), "edge must be [from, to] or [from, to, weight]")
            a = int(ctx.number(e[0], p + (k,), positive=True))
            b = int(ctx.number(e[1], p + (k,), positive=True))
            w = ctx.number(e[2], p + (k,), nonneg=True) if len(e) == 3 else 1.0
            if a > N or b > N:
                ctx.fail(p + (k,), f"agent index out of range 1..{N}")
            triples.append((a - 1, b - 1, w))
        try:
            graphs[name] = Digraph.from_edges(N, triples)
        except InputError as exc:
            ctx.fail(p, str(exc))

    simd = ctx.get(doc, (), "simulation")
    seed = int(ctx.number(simd.get("seed", 0), ("simulation", "seed"), nonneg=True))

    sw = ctx.get(doc, (), "switching")
    modes = ctx.get(sw, ("switching",), "modes")
    if not isinstance(modes, list) or not modes:
        ctx.fail(("switching", "modes"), "expected a nonempty list of graph names")
    for k, name in enumerate(modes):
        if name not in graphs:
            ctx.fail(("switching", "modes", k), f"unknown graph {name!r}")
    law = _parse_law(ctx, sw, modes, seed)
    mode_graphs = tuple(graphs[name] for name in modes)

    obs = doc.get("observer") or {}
    gamma = obs.get("gamma", "auto")
    if gamma != "auto":
        gamma = ctx.number(gamma, ("observer", "gamma"), nonneg=True)
    gains = obs.get("gains", "riccati")
    if isinstance(gains, list):
        if len(gains) != N:
            ctx.fail(("observer", "gains"), f"expected {N} entries, one per agent")
        pole_spec = tuple(_parse_pole_spec(ctx, g, ("observer", "gains", k)) for k, g in enumerate(gains))
    else:
        pole_spec = _parse_pole_spec(ctx, gains, ("observer", "gains"))

    rng = np.random.default_rng(seed)
    x0_raw = ctx.get(simd, ("simulation",), "x0")
    rs = _random_spec(x0_raw)
    if rs is not False:
        x0 = (rng if rs is None else np.random.default_rng(rs)).standard_normal(n)
    elif x0_raw == "zeros":
        x0 = np.zeros(n)
    else:
        x0 = ctx.vector(x0_raw, ("simulation", "x0"), n)
    xh_raw = simd.get("xhat0", "zeros")
    rs = _random_spec(xh_raw)
    if rs is not False:
        xhat0 = (rng if rs is None else np.random.default_rng(rs)).standard_normal((N, n))
    elif xh_raw == "zeros":
        xhat0 = np.zeros((N, n))
    else:
        xhat0 = ctx.matrix(xh_raw, ("simulation", "xhat0"), N, n)
    t_end = ctx.number(ctx.get(simd, ("simulation",), "t_end"), ("simulation", "t_end"), nonneg=True)
    dt = simd.get("dt")
    dt = None if dt is None else ctx.number(dt, ("simulation", "dt"), positive=True)
    transient = simd.get("transient")
    transient = None if transient is None else ctx.number(transient, ("simulation", "transient"), nonneg=True)

    outd = doc.get("outputs") or {}
    stride = int(ctx.number(outd.get("stride", 10), ("outputs", "stride"), positive=True))
    record = bool(outd.get("record_states", False))

    try:
        return ScenarioConfig(
            model=model, graphs=mode_graphs, law=law, x0=x0, xhat0=xhat0, t_end=t_end,
            gamma=gamma, pole_spec=pole_spec, dt=dt, seed=seed, stride=stride,
            record_states=record, transient=transient, phases=tuple(phases),
            graph_names=tuple(modes), name=str(doc.get("name", "")),
        )
    except ConfigError:
        raise
    except InputError as exc:
        ctx.fail(("simulation",), str(exc))


def load_config(path) -> ScenarioConfig:
    doc, lines = read_document(path)
    return parse_document(doc, lines)


# --------------------------------------------------------------------------
# Dumping
# --------------------------------------------------------------------------

def _num(x):
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2 ** 53 else x


def _mat(M):
    return [[_num(v) for v in row] for row in np.atleast_2d(M)]


def _vec(v):
    return [_num(x) for x in np.ravel(v)]


def _pole_doc(spec: PoleSpec):
    if spec.kind == "riccati":
        return "riccati" if spec.margin == 0 else {"type": "riccati", "margin": _num(spec.margin)}
    if spec.kind == "poles":
        return {"type": "poles",
                "poles": [_num(p.real) if p.imag == 0 else [_num(p.real), _num(p.imag)] for p in spec.poles]}
    if spec.kind == "gain":
        return {"type": "gain", "L_o": _mat(spec.gain)}
    return {"type": "full_gain", "L": _mat(spec.gain)}


def _law_doc(law, modes):
    if isinstance(law, Periodic):
        d = {"type": "periodic", "period": _num(law.period), "fractions": _vec(law.fractions)}
    elif isinstance(law, Markov):
        d = {"type": "markov", "generator": _mat(law.generator), "seed": law.seed,
             "initial": law.initial + 1, "min_dwell": _num(law.min_dwell_base)}
    else:
        d = {"type": "trace", "events": [[_num(t), m + 1] for t, m in law.events]}
    d["modes"] = list(modes)
    d["epsilon"] = _num(law.epsilon)
    return d


def config_to_document(config: ScenarioConfig) -> dict:
    """Fully explicit document (random initial states materialised)."""
    model = config.model
    names = list(config.graph_names) or [f"G{k + 1}" for k in range(len(config.graphs))]
    graphs = {}
    for name, g in zip(names, config.graphs):
        if name in graphs:
            continue
        graphs[name] = [[s + 1, d + 1] if w == 1.0 else [s + 1, d + 1, _num(w)] for s, d, w in g.edges()]
    system = {"A": _mat(model.A)}
    if model.B is not None:
        system["B"] = _mat(model.B)
    if model.input is not None:
        inp = model.input
        if not isinstance(inp, AffineInput):
            raise InputError("callable inputs cannot be written to a scenario document")
        if inp.spec is not None:
            system["input"] = copy.deepcopy(inp.spec)
        else:
            system["input"] = {"type": "affine", "Kx": _mat(inp.Kx), "Kxhat": _mat(inp.Kxhat), "u0": _vec(inp.u0)}
    if config.phases:
        system["phases"] = [{"start": _num(s), "A": _mat(A)} for s, A in config.phases]
    ps = config.pole_spec
    if ps is None:
        gains = "riccati"
    elif isinstance(ps, PoleSpec):
        gains = _pole_doc(ps)
    else:
        gains = [_pole_doc(p if p is not None else PoleSpec.riccati()) for p in ps]
    sim = {
        "x0": _vec(config.x0),
        "xhat0": _mat(config.xhat0),
        "t_end": _num(config.t_end),
        "seed": config.seed,
    }
    if config.dt is not None:
        sim["dt"] = _num(config.dt)
    if config.transient is not None:
        sim["transient"] = _num(config.transient)
    doc = {}
    if config.name:
        doc["name"] = config.name
    doc.update({
        "system": system,
        "agents": [{"C": _mat(C) if C.shape[0] else []} for C in model.outputs],
        "graphs": graphs,
        "switching": _law_doc(config.law, names),
        "observer": {"gamma": config.gamma if isinstance(config.gamma, str) else _num(config.gamma),
                     "gains": gains},
        "simulation": sim,
        "outputs": {"stride": config.stride, "record_states": bool(config.record_states)},
    })
    return doc


class _Dumper(yaml.SafeDumper):
    pass


def _flow_lists(dumper, data):
    # Rows of numbers stay on one line; nested structures stay in block style.
    flow = all(not isinstance(v, (list, dict)) for v in data) or all(
        isinstance(v, list) and all(not isinstance(x, (list, dict)) for x in v) for v in data)
    return dumper.represent_sequence("tag:yaml.org,2002:seq", data, flow_style=flow)


_Dumper.add_representer(list, _flow_lists)


def dump_document(doc: dict) -> str:
    """YAML text with stable key order (insertion order, never sorted)."""
    return yaml.dump(doc, Dumper=_Dumper, sort_keys=False, default_flow_style=False, width=100)


def dump_config(config: ScenarioConfig) -> str:
    return dump_document(config_to_document(config))


def same_config(a: ScenarioConfig, b: ScenarioConfig, rtol=0.0) -> bool:
    """Structural equality of two configurations (exact by default)."""
    def close(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return x.shape == y.shape and np.allclose(x, y, rtol=rtol, atol=0.0)
    return config_to_document(a) == config_to_document(b) and close(a.model.A, b.model.A) and all(
        close(ga.weights, gb.weights) for ga, gb in zip(a.graphs, b.graphs))


# --------------------------------------------------------------------------
# Overrides
# --------------------------------------------------------------------------

def apply_overrides(doc: dict, T=None, epsilon=None, gamma=None, t_end=None, seed=None) -> dict:
    """Copy of ``doc`` with command-line style overrides applied."""
    doc = copy.deepcopy(doc)
    if T is not None:
        sw = doc.setdefault("switching", {})
        if sw.get("type") != "periodic":
            raise ConfigError("switching.period", "the period can only be set for periodic switching")
        sw["period"] = T
    if epsilon is not None:
        doc.setdefault("switching", {})["epsilon"] = epsilon
    if gamma is not None:
        doc.setdefault("observer", {})["gamma"] = gamma
    if t_end is not None:
        doc.setdefault("simulation", {})["t_end"] = t_end
    if seed is not None:
        doc.setdefault("simulation", {})["seed"] = seed
        sw = doc.get("switching") or {}
        if sw.get("type") == "markov":
            sw["seed"] = seed
    return doc


# --------------------------------------------------------------------------
# Built-in examples
# --------------------------------------------------------------------------

ROT = [[0, 1], [-1, 0]]


def example1_document():
    """Toy 3-state leader observed by five agents over four periodic graphs."""
    return {
        "name": "example1",
        "system": {"A": [[0, 2, 0], [-2, 0, 0], [0, 0, 0.1]]},
        "agents": [{"C": [[1, 0, 0]]}, {"C": [[0, 1, 0]]}, {"C": [[0, 0, 1]]},
                   {"C": [[0, 0, 0]]}, {"C": [[0, 0, 0]]}],
        # Chosen so that the sum of the four Laplacians is the printed one;
        # the figure also draws 3 -> 5 in G3, which that matrix omits.
        "graphs": {
            "G1": [[2, 5], [5, 2]],
            "G2": [[3, 2], [1, 3]],
            "G3": [[5, 3], [4, 1]],
            "G4": [[3, 4]],
        },
        "switching": {"type": "periodic", "period": 0.1, "fractions": [0.25, 0.25, 0.25, 0.25],
                      "modes": ["G1", "G2", "G3", "G4"], "epsilon": 1},
        "observer": {
            "gamma": 45,
            # L_i = V_oi L_oi written in plant coordinates.
            "gains": [
                {"type": "full_gain", "L": [[-2], [-4], [0]]},
                {"type": "full_gain", "L": [[4], [-2], [0]]},
                {"type": "full_gain", "L": [[0], [0], [-2.5]]},
                {"type": "full_gain", "L": [[0], [0], [0]]},
                {"type": "full_gain", "L": [[0], [0], [0]]},
            ],
        },
        "simulation": {"x0": [1, 2, 3], "xhat0": "zeros", "t_end": 40, "seed": 0, "transient": 5},
        "outputs": {"stride": 10, "record_states": False},
    }


def quarter_car_matrix(ms=240.0, mu=36.0, bs=980.0, ks=1.6e4, kt=1.6e5, bt=0.0):
    """8x8 plant: suspension states driven by the road exosystem ``diag(2a, a)``."""
    Ac = np.array([
        [0, 1, 0, -1],
        [-ks / ms, -bs / ms, 0, bs / ms],
        [0, 0, 0, 1],
        [ks / mu, bs / mu, -kt / mu, -(bs + bt) / mu],
    ])
    Bd = np.array([[0.0], [0.0], [-1.0], [bt / mu]])
    F = np.array([[2.0, -1.0, -1.0, 2.0]])
    a = np.array(ROT, dtype=float)
    S = np.block([[2 * a, np.zeros((2, 2))], [np.zeros((2, 2)), a]])
    return np.block([[Ac, Bd @ F], [np.zeros((4, 4)), S]])


def example2_document():
    """Quarter-car suspension with a road exosystem; only agent 2 measures."""
    A = quarter_car_matrix()
    return {
        "name": "example2",
        "system": {"A": _mat(A)},
        "agents": [{"C": []}, {"C": [[1, 0, 0, 0, 0, 0, 0, 0]]}],
        "graphs": {"G1": [[1, 2], [2, 1]], "G2": []},
        "switching": {"type": "periodic", "period": 0.1, "fractions": [0.5, 0.5],
                      "modes": ["G1", "G2"], "epsilon": 1},
        "observer": {
            "gamma": 25,
            "gains": ["riccati", {"type": "poles", "poles": [-2, -4, -6, -8, -3, -9, -5, -7]}],
        },
        "simulation": {"x0": "random:2", "xhat0": "random:3", "t_end": 20, "seed": 0, "transient": 2},
        "outputs": {"stride": 10, "record_states": False},
    }


def unicycle_matrix(omegas):
    blocks = []
    for w in omegas:
        Ai = np.zeros((4, 4))
        Ai[:2, 2:] = np.eye(2)
        Ai[2:, 2:] = w * np.array(ROT, dtype=float)
        blocks.append(Ai)
    n = 4 * len(blocks)
    A = np.zeros((n, n))
    for k, Ai in enumerate(blocks):
        A[4 * k:4 * k + 4, 4 * k:4 * k + 4] = Ai
    return A


def _kron_rows(row, S):
    return np.kron(np.array([row], dtype=float), S)


def example3_document():
    """Five unicycle vehicles; angular velocity steps from 0 to 0.5 at t = 6."""
    S = np.hstack([np.eye(2), np.zeros((2, 2))])
    rows = [[1, 0, 0, 0, 0], [0, 1, 0, 0, 0], [1, 1, 1, 0, 0], [1, 0, 0, 1, 1], [0, 0, 0, 0, 1]]
    return {
        "name": "example3",
        "system": {
            "A": _mat(unicycle_matrix([0.0] * 5)),
            "phases": [{"start": 6, "A": _mat(unicycle_matrix([0.5] * 5))}],
        },
        # Row sums as printed, although the prose speaks of relative positions.
        "agents": [{"C": _mat(_kron_rows(r, S))} for r in rows],
        # The figure's edges are not recoverable; these two modes are each
        # disconnected but their union is a strongly connected ring.
        "graphs": {
            "G1": [[1, 2], [2, 1], [3, 4], [4, 3]],
            "G2": [[2, 3], [3, 2], [4, 5], [5, 4], [5, 1], [1, 5]],
        },
        "switching": {"type": "periodic", "period": 0.1, "fractions": [0.5, 0.5],
                      "modes": ["G1", "G2"], "epsilon": 1},
        # Multi-output blocks: Riccati design in place of the listed poles.
        "observer": {"gamma": 25, "gains": "riccati"},
        "simulation": {"x0": "random:4", "xhat0": "zeros", "t_end": 20, "seed": 0, "transient": 8},
        "outputs": {"stride": 10, "record_states": False},
    }


PLATOON_K = [[-8, 0, -4, 0], [0, -8, 0, -4]]
PLATOON_OFFSETS = [[-20, 0], [-16, 2], [-12, 0], [-8, 2], [-4, 0], [0, 0]]


def example4_document():
    """Six-vehicle platoon led by vehicle 6, controlled through the estimates."""
    S = np.hstack([np.eye(2), np.zeros((2, 2))])
    rows = [[1, 0, 0, 0, 1, 0], [1, 1, 0, 0, 0, 0], [0, 0, 1, 1, 0, 0],
            [0, 0, 0, 1, 0, 1], [0, 0, 0, 0, 1, 0], [0, 0, 0, 0, 0, 1]]
    A = np.kron(np.eye(6), np.block([[np.zeros((2, 2)), np.eye(2)], [np.zeros((2, 2)), np.zeros((2, 2))]]))
    B = np.kron(np.eye(6), np.vstack([np.zeros((2, 2)), np.eye(2)]))
    # Vehicles start scattered, the leader cruises at 1 m/s along X.
    x0 = []
    starts = [[-30, 3], [-22, -2], [-15, 4], [-10, -1], [-6, 3], [0, 0]]
    vels = [[0.5, 0], [0.2, 0.1], [0, 0], [0.8, -0.2], [0.3, 0], [1, 0]]
    for p, v in zip(starts, vels):
        x0 += p + v
    return {
        "name": "example4",
        "system": {
            "A": _mat(A),
            "B": _mat(B),
            "input": {"type": "platoon", "K": PLATOON_K, "leader": 6,
                      "offsets": PLATOON_OFFSETS, "block": 4},
        },
        "agents": [{"C": _mat(_kron_rows(r, S))} for r in rows],
        "graphs": {
            "G1": [[1, 2], [2, 1], [3, 4], [4, 3], [5, 6], [6, 5]],
            "G2": [[2, 3], [3, 2], [4, 5], [5, 4], [6, 1], [1, 6]],
        },
        "switching": {"type": "periodic", "period": 0.1, "fractions": [0.5, 0.5],
                      "modes": ["G1", "G2"], "epsilon": 1},
        "observer": {"gamma": 250, "gains": "riccati"},
        "simulation": {"x0": x0, "xhat0": "zeros", "t_end": 30, "dt": 0.001, "seed": 0, "transient": 5},
        "outputs": {"stride": 10, "record_states": True},
    }


EXAMPLES = {1: example1_document, 2: example2_document, 3: example3_document, 4: example4_document}


def example_document(example_id: int) -> dict:
    try:
        return EXAMPLES[int(example_id)]()
    except (KeyError, ValueError, TypeError):
        raise InputError(f"unknown example {example_id!r}; choose 1, 2, 3 or 4") from None


def example_config(example_id: int) -> ScenarioConfig:
    return parse_document(example_document(example_id))
