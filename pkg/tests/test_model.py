import math
import warnings

import numpy as np
import pytest

from fmrexec.model import (DomainError, ExecutionProblem, ImpactModel, NotPositiveDefinite, SignalModel,
                           StationarityWarning, TimeGrid, build_correlation, gauss_hermite_mean, k_eval, kappa_eval)
from fmrexec.presets import B_PERMANENT, MSFT_LIKE_KAPPA


def test_kappa_eval_constant_and_linear():
    assert kappa_eval(ImpactModel(kappa=[2.5]), 0.3) == 2.5
    assert kappa_eval(ImpactModel(kappa=[1.0, 1.0]), 0.5) == pytest.approx(1.5, abs=1e-15)


def test_kappa_eval_domain():
    with pytest.raises(DomainError):
        kappa_eval(ImpactModel(kappa=[1.0]), 1.5)
    with pytest.raises(DomainError):
        kappa_eval(ImpactModel(kappa=[1.0]), -1e-9)


def test_nonpositive_kappa_rejected_at_construction():
    with pytest.raises(DomainError):
        ImpactModel(kappa=[1.0, -2.0])


def test_k_eval_examples():
    assert k_eval(ImpactModel(kappa=[3.0]), 0.4, 0.0) == 3.0
    assert k_eval(ImpactModel(kappa=[3.0], eta_kind="scaled_tanh"), 0.4, 0.0) == 3.0
    assert k_eval(ImpactModel(kappa=[2.0]), 0.2, 1.0) == pytest.approx(1.0)
    # clamp engages: 1 + eta floored at delta = 0.05
    assert k_eval(ImpactModel(kappa=[1.0], eta_clamp=0.05), 0.2, -0.99) == pytest.approx(20.0)


def test_k_positive_everywhere():
    imp = ImpactModel(kappa=list(MSFT_LIKE_KAPPA))
    y = np.linspace(-50, 50, 1001)
    for t in np.linspace(0, 1, 11):
        assert np.all(k_eval(imp, t, y) > 0)


@pytest.mark.parametrize("kind", ["identity", "scaled_tanh"])
def test_eta_has_zero_stationary_mean(kind):
    imp = ImpactModel(kappa=[1.0], eta_kind=kind, eta_a=0.7)
    assert abs(gauss_hermite_mean(imp.eta, 0.26984)) < 1e-10
    y = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(imp.eta(-y), -imp.eta(y), atol=0)


def test_impact_validation():
    with pytest.raises(ValueError):
        ImpactModel(kappa=[1.0], eps=0.0)
    with pytest.raises(ValueError):
        ImpactModel(kappa=[1.0], eta_clamp=1.0)
    with pytest.raises(ValueError):
        ImpactModel(kappa=[1.0], eta_kind="scaled_tanh", eta_a=1.0)
    with pytest.raises(ValueError):
        ImpactModel(kappa=[1.0], eta_kind="cubic")


def test_problem_validation():
    ok = dict(gamma=[0.1], b=B_PERMANENT, sigma=0.1, phi=B_PERMANENT, varphi=1e3 * B_PERMANENT, mu0=[1.0])
    ExecutionProblem(**ok)
    for bad in (dict(phi=-1.0), dict(varphi=B_PERMANENT / 4), dict(sigma=-0.1), dict(T=0.0), dict(mu0=[1.0, 2.0])):
        with pytest.raises(ValueError):
            ExecutionProblem(**(ok | bad))


def test_arrays_are_read_only():
    p = ExecutionProblem(gamma=[0.1], b=1.0, sigma=0.1, phi=1.0, varphi=2.0, mu0=[0.0])
    with pytest.raises(ValueError):
        p.gamma[0] = 3.0


def test_correlation_uncorrelated_is_identity():
    C, L = build_correlation(SignalModel(A=[[-1.0]], B=[[1.0]], mu_bar=[0.0], rho=[0.0]))
    np.testing.assert_array_equal(C, np.eye(3))
    np.testing.assert_array_equal(L, np.eye(3))


def test_correlation_table_value():
    C, L = build_correlation(SignalModel(A=[[-10.0]], B=[[1.0]], mu_bar=[0.0], rho=[-0.5]))
    expected = np.eye(3)
    expected[1, 2] = expected[2, 1] = -0.5
    np.testing.assert_array_equal(C, expected)
    np.testing.assert_allclose(L[2], [0.0, -0.5, math.sqrt(0.75)], atol=1e-15)
    assert np.max(np.abs(L @ L.T - C)) < 1e-12


def test_correlation_not_positive_definite():
    # two signal components each strongly tied to the same W*: sum rho^2 > 1
    with pytest.raises(NotPositiveDefinite):
        SignalModel(A=-np.eye(2), B=np.eye(2), mu_bar=[0, 0], rho=[0.8, 0.8])


def test_nonstationary_signal_warns_only():
    with pytest.warns(StationarityWarning):
        SignalModel(A=[[0.5]], B=[[1.0]], mu_bar=[0.0], rho=[0.0])


def test_time_grid_nodes_reproducible():
    g = TimeGrid(7, 2.0)
    np.testing.assert_array_equal(g.t, np.linspace(0.0, 2.0, 8))
    assert g.t[0] == 0.0 and g.t[-1] == 2.0
    assert g.dt == pytest.approx(2.0 / 7)
    with pytest.raises(ValueError):
        TimeGrid(0)


def test_replace_revalidates():
    p = ExecutionProblem(gamma=[0.1], b=1.0, sigma=0.1, phi=1.0, varphi=2.0, mu0=[0.0])
    assert p.replace(phi=3.0).phi == 3.0
    with pytest.raises(ValueError):
        p.replace(varphi=0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ImpactModel(kappa=[1.0]).replace(eps=0.01)
