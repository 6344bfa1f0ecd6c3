"""Distributed Luenberger observers over switching directed graphs.

Submodules: ``numerics`` (linear-algebra kernels), ``topology`` (graphs and
switching laws), ``jointobs`` (observability decomposition and joint
observability), ``synthesis`` (observer gains), ``certify`` (stability
certificates), ``simulate`` (fixed-step runs and sweeps), ``scenarios``
(YAML documents and built-in examples) and ``cli``.
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    CertificationError,
    ConfigError,
    DistObsError,
    DivergenceError,
    GraphError,
    InputError,
    NoSolutionError,
    NumericError,
    SynthesisError,
    UnsupportedSpecError,
)
from .jointobs import SystemModel, certify_joint_observability, decompose  # noqa: E402
from .numerics import PoleSpec  # noqa: E402
from .simulate import ScenarioConfig, averaged_reference, integrate, sweep  # noqa: E402
from .synthesis import build_observer  # noqa: E402
from .topology import Digraph, Markov, Periodic, Trace, laplacian_set  # noqa: E402
from .certify import certify_stability, find_T0, monodromy  # noqa: E402

__all__ = [
    "CertificationError", "ConfigError", "DistObsError", "DivergenceError", "GraphError",
    "InputError", "NoSolutionError", "NumericError", "SynthesisError", "UnsupportedSpecError",
    "SystemModel", "certify_joint_observability", "decompose", "PoleSpec", "ScenarioConfig",
    "averaged_reference", "integrate", "sweep", "build_observer", "Digraph", "Markov",
    "Periodic", "Trace", "laplacian_set", "certify_stability", "find_T0", "monodromy",
]
