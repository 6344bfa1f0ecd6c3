import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import EX1_A, random_jo_ensemble

from distobs.exceptions import CertificationError, InputError
from distobs.jointobs import SystemModel
from distobs.certify import (
    averaged_hurwitz,
    certify_stability,
    find_T0,
    fit_decay_rate,
    gamma_lower_bound,
    monodromy,
)
from distobs.synthesis import build_observer
from distobs.topology import Digraph, Periodic, Trace, laplacian_set

# regression pins for Example 1 at gamma = 45, T = 0.1
EX1_ABSCISSA = -4.197117626563686
EX1_RHO = 0.6888124689834476


def test_bound_plug_in():
    assert gamma_lower_bound(np.eye(3), np.ones(4), 2.0) == pytest.approx(1.0)
    theta = 1e-3 * np.array([1, 1, 1, 1, 2.0])
    assert gamma_lower_bound(EX1_A, theta, 1.3e-3) == pytest.approx(2 * 4e-6 * 2 / 1.3e-6)
    assert gamma_lower_bound(EX1_A, theta, 1.3e-3) == pytest.approx(12.31, abs=0.01)


@pytest.mark.parametrize("c", [1e-3, 1.0, 1e3])
def test_bound_scale_invariant(c):
    theta = np.array([1.0, 1.0, 1.0, 1.0, 2.0])
    ref = gamma_lower_bound(EX1_A, theta, 0.7)
    assert gamma_lower_bound(EX1_A, c * theta, c * 0.7) == pytest.approx(ref, rel=4 * np.finfo(float).eps)


def test_bound_errors():
    with pytest.raises(CertificationError):
        gamma_lower_bound(EX1_A, np.ones(2), 0.0)
    with pytest.raises(InputError):
        gamma_lower_bound(EX1_A, np.array([1.0, -1.0]), 1.0)


def test_averaged_hurwitz_example1(ex1_bank):
    ok, a = averaged_hurwitz(ex1_bank)
    assert ok and a == pytest.approx(EX1_ABSCISSA, rel=1e-9)
    ok0, a0 = averaged_hurwitz(ex1_bank.with_gamma(0.0))
    assert not ok0 and a0 == pytest.approx(0.1)
    # the plug-in bound value for Example 1 is also enough for the averaged matrix
    assert averaged_hurwitz(ex1_bank.with_gamma(12.5))[0]


def test_averaged_hurwitz_fully_observable():
    bank = build_observer(SystemModel(EX1_A, (np.eye(3), np.eye(3))),
                          laplacian_set([Digraph.from_edges(2, [(0, 1), (1, 0)])]), gamma=1.0)
    ok, a = averaged_hurwitz(bank)
    assert ok and a == -math.inf


def test_monodromy_example1(ex1_bank, ex1_law):
    Phi, rho = monodromy(ex1_bank, ex1_law)
    assert Phi.shape == (10, 10)
    assert rho == pytest.approx(EX1_RHO, rel=1e-9)
    with pytest.raises(InputError):
        monodromy(ex1_bank, Trace(((0.0, 0),)))


def test_monodromy_single_mode():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    model = SystemModel(A, (np.array([[1.0, 0.0]]), np.zeros((1, 2))))
    lap = laplacian_set([Digraph.from_edges(2, [(0, 1), (1, 0)])])
    bank = build_observer(model, lap, gamma=4.0)
    for T in (0.01, 1.0, 30.0):
        Phi, rho = monodromy(bank, Periodic(T, (1.0,)))
        assert rho < 1
    assert find_T0(bank, Periodic(1.0, (1.0,))) == pytest.approx(10.0)


def test_small_period_limit(ex1_bank, ex1_law):
    T = 1e-3
    _, rho = monodromy(ex1_bank, ex1_law.with_period(T))
    _, a = averaged_hurwitz(ex1_bank)
    assert rho ** (1 / T) == pytest.approx(math.exp(a), rel=0.05)


def test_identical_modes_never_cross(ex1_model):
    g = Digraph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])
    bank = build_observer(ex1_model, laplacian_set([g, g]), gamma=20.0)
    assert averaged_hurwitz(bank)[0]
    law = Periodic(1.0, (0.3, 0.7))
    assert find_T0(bank, law, T_max=50.0) == 50.0


def test_find_T0_example1(ex1_bank, ex1_law):
    # no crossing below the default cap of 10 x the longest dwell fraction
    assert find_T0(ex1_bank, ex1_law) == pytest.approx(2.5)


def test_find_T0_unstable_everywhere(ex1_bank, ex1_law):
    with pytest.raises(CertificationError, match="spectral abscissa"):
        find_T0(ex1_bank.with_gamma(0.0), ex1_law)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.3, 3.0))
def test_find_T0_result_is_stable(seed, g_scale):
    rng = np.random.default_rng(seed)
    model, graphs, law = random_jo_ensemble(rng)
    lap = laplacian_set(graphs, law=law)
    bank = build_observer(model, lap, gamma="auto")
    bank = bank.with_gamma(g_scale * max(bank.gamma, 1.0))
    T_max = 5.0
    tol = 1e-3 * T_max
    try:
        T0 = find_T0(bank, law, T_max=T_max, tol=tol)
    except CertificationError:
        return
    _, rho = monodromy(bank, law.with_period(T0 * (1 - tol)))
    assert rho < 1


def test_fit_decay_rate_cases():
    t = np.linspace(0, 10, 1001)
    rate, r2 = fit_decay_rate(t, np.exp(-2 * t))
    assert rate == pytest.approx(-2, abs=1e-6) and r2 == pytest.approx(1.0)
    rate, _ = fit_decay_rate(t, np.exp(-t) * (2 + np.sin(10 * t)))
    assert rate == pytest.approx(-1, abs=0.05)
    assert fit_decay_rate(t, np.full_like(t, 3.0))[0] == 0.0
    assert fit_decay_rate(t, np.zeros_like(t))[0] == -math.inf


def test_fit_decay_rate_transient_cut():
    t = np.linspace(0, 10, 1001)
    y = np.where(t < 2, 100.0, np.exp(-3 * t))
    assert fit_decay_rate(t, y, transient=2.0)[0] == pytest.approx(-3, abs=1e-6)


def test_certificate_example1(ex1_bank, ex1_law):
    cert = certify_stability(ex1_bank, ex1_law)
    assert cert.averaged_hurwitz
    assert cert.gamma_bound == pytest.approx(64.0)
    assert cert.monodromy_radius == pytest.approx(EX1_RHO, rel=1e-9)
    assert cert.decay_rate_estimate == pytest.approx(-math.log(EX1_RHO) / 0.1)
    assert cert.small_period_radius < 1
    assert cert.T0_estimate == pytest.approx(2.5)
    d = cert.to_dict()
    assert isinstance(d["averaged_hurwitz"], bool)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_averaged_stable_implies_small_period_stable(seed):
    rng = np.random.default_rng(seed)
    model, graphs, law = random_jo_ensemble(rng)
    bank = build_observer(model, laplacian_set(graphs, law=law), gamma="auto")
    cert = certify_stability(bank, law)
    if cert.averaged_hurwitz and bank.blocks.unobservable_dim:
        assert cert.small_period_radius < 1
