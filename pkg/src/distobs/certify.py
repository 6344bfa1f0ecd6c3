"""Stability certificates for the switched estimation-error dynamics.

Three independent pieces of evidence are produced:

* a sufficient coupling-gain lower bound built from the left null vector
  of the average Laplacian;
* the Hurwitz test on the averaged matrix ``Q_av``;
* for periodic switching, the spectral radius of the monodromy matrix
  over one period, with a bisection for the largest stable period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import CertificationError, InputError
from .numerics import expm, spectral_abscissa, spectral_radius
from .topology import Periodic


def gamma_lower_bound(A, theta, lambda_l) -> float:
    """``2 theta_max^2 ||A||_2 / (lambda_l theta_min)``.

    Invariant under ``theta -> c theta`` provided ``lambda_l`` is computed
    with the same scaling.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size == 0 or np.any(theta <= 0):
        raise InputError("theta must be strictly positive")
    if not lambda_l > 0:
        raise CertificationError("lambda_l must be positive; the system is not jointly observable")
    norm_A = float(np.linalg.norm(np.asarray(A, dtype=float), 2)) if np.size(A) else 0.0
    return 2.0 * theta.max() ** 2 * norm_A / (lambda_l * theta.min())


def averaged_hurwitz(bank, Lbar=None) -> tuple[bool, float]:
    """Hurwitz verdict and spectral abscissa of ``Q_av`` (``-inf`` when empty)."""
    from .synthesis import error_matrices_for

    L = bank.lapset.average if Lbar is None else Lbar
    Q = error_matrices_for(bank, L)[0]
    a = spectral_abscissa(Q)
    return a < 0, a


def _require_periodic(law):
    if not isinstance(law, Periodic):
        raise InputError("monodromy analysis needs a periodic switching law")
    return law


def monodromy(bank, law: Periodic) -> tuple[np.ndarray, float]:
    """One-period transition matrix of ``x_u' = M_sigma x_u`` and its spectral radius.

    The product is ordered in time, later modes on the left. ``epsilon``
    rescales the period.
    """
    from .synthesis import error_matrices

    law = _require_periodic(law)
    if len(law.fractions) > bank.n_modes:
        raise InputError("law has more modes than the bank has Laplacians")
    Tr = law.period * law.epsilon
    dim = bank.blocks.unobservable_dim
    Phi = np.eye(dim)
    for k, w in enumerate(law.fractions):
        Mk = error_matrices(bank, k)[0]
        Phi = expm(Mk * (w * Tr)) @ Phi
    return Phi, spectral_radius(Phi)


def _rho_at(bank, law, T):
    return monodromy(bank, law.with_period(T).with_epsilon(1.0))[1]


def default_T_max(law: Periodic) -> float:
    return 10.0 * max(law.fractions)


def find_T0(bank, law: Periodic, T_max=None, tol=None, n_probes=40) -> float:
    """Largest period found with ``rho(Phi(T)) < 1`` below the first crossing.

    Probes periods on a geometric grid from ``1e-4 T_max`` to ``T_max``,
    then bisects between the last stable probe and the first unstable one.
    Returns ``T_max`` if no crossing is found. If ``rho`` is not monotone
    in ``T`` this is the first crossing, not the supremum of stable periods.
    """
    law = _require_periodic(law)
    T_max = default_T_max(law) if T_max is None else float(T_max)
    tol = 1e-3 * T_max if tol is None else float(tol)
    if T_max <= 0 or tol <= 0:
        raise InputError("T_max and tol must be positive")
    if bank.blocks.unobservable_dim == 0:
        return T_max
    probes = np.geomspace(1e-4 * T_max, T_max, n_probes)
    rho0 = _rho_at(bank, law, probes[0])
    if rho0 >= 1.0:
        ok, abscissa = averaged_hurwitz(bank)
        raise CertificationError(
            f"unstable at the smallest probe T={probes[0]:.3g} (rho={rho0:.6g}); "
            f"averaged matrix spectral abscissa {abscissa:.4g}")
    lo = probes[0]
    hi = None
    for T in probes[1:]:
        if _rho_at(bank, law, T) < 1.0:
            lo = T
        else:
            hi = T
            break
    if hi is None:
        return T_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _rho_at(bank, law, mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return float(lo)


def fit_decay_rate(times, values, transient=0.0) -> tuple[float, float]:
    """Least-squares slope of ``log(values)`` against time after ``transient``.

    Returns ``(rate, r2)``; a decaying signal has a negative rate. Non-positive
    samples are dropped. An all-zero series gives ``(-inf, 1.0)``.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    keep = (t >= transient) & (y > 0) & np.isfinite(y)
    if not np.any(keep):
        return -math.inf, 1.0
    t, ly = t[keep], np.log(y[keep])
    if t.size < 2 or np.ptp(t) == 0:
        return 0.0, 1.0
    if np.ptp(ly) <= 1e-13 * max(1.0, np.abs(ly).max()):
        # Constant series: the fit is exact.
        return 0.0, 1.0
    slope, intercept = np.polyfit(t, ly, 1)
    ss_res = float(np.sum((ly - (slope * t + intercept)) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    return float(slope), 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class StabilityCertificate:
    """Numeric witnesses for exponential stability of the error dynamics.

    ``decay_rate_estimate`` is ``-ln(rho)/T``: positive means contraction.
    """

    gamma: float
    gamma_bound: float | None
    gamma_exceeds_bound: bool | None
    averaged_hurwitz: bool
    averaged_abscissa: float
    period: float | None = None
    monodromy_radius: float | None = None
    T0_estimate: float | None = None
    decay_rate_estimate: float | None = None
    small_period_radius: float | None = None
    T0_note: str | None = None

    def to_dict(self):
        return {k: _plain(v) for k, v in self.__dict__.items()}


def _plain(v):
    if isinstance(v, (np.floating, np.bool_)):
        return v.item()
    return v


def certify_stability(bank, law=None) -> StabilityCertificate:
    """Assemble all applicable certificates for ``bank`` under ``law``."""
    ok, abscissa = averaged_hurwitz(bank)
    bound = bank.gamma_bound
    exceeds = None if bound is None else bool(bank.gamma > bound)
    kw = {}
    if isinstance(law, Periodic) and law.n_modes <= bank.n_modes:
        Tr = law.period * law.epsilon
        _, rho = monodromy(bank, law)
        kw["period"] = Tr
        kw["monodromy_radius"] = rho
        kw["decay_rate_estimate"] = -math.log(rho) / Tr if rho > 0 else math.inf
        T_max = default_T_max(law)
        kw["small_period_radius"] = _rho_at(bank, law, 1e-4 * T_max)
        try:
            kw["T0_estimate"] = find_T0(bank, law, T_max)
        except CertificationError as exc:
            kw["T0_note"] = str(exc)
    return StabilityCertificate(bank.gamma, bound, exceeds, bool(ok), float(abscissa), **kw)
