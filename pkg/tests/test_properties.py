"""Property-based checks."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fmrexec.calibrate import estimate_ou, simulate_ou_path
from fmrexec.cli import fmt
from fmrexec.model import ExecutionProblem, ImpactModel, NotPositiveDefinite, SignalModel, TimeGrid
from fmrexec.riccati import riccati_closed_form, solve_riccati
from fmrexec.signals import mat_exp
from fmrexec.sim import SimBatch, savings_bps

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


@given(arrays(float, (3, 3), elements=finite), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
@settings(max_examples=60, deadline=None)
def test_mat_exp_semigroup(M, s, t):
    lhs = mat_exp(M * (s + t))
    rhs = mat_exp(M * s) @ mat_exp(M * t)
    scale = max(1.0, float(np.abs(lhs).max()))
    np.testing.assert_allclose(lhs, rhs, atol=1e-11 * scale, rtol=1e-10)


@given(arrays(float, (2, 2), elements=finite))
@settings(max_examples=40, deadline=None)
def test_mat_exp_determinant_is_exp_trace(M):
    assert np.linalg.det(mat_exp(M)) == pytest.approx(math.exp(np.trace(M)), rel=1e-10)


@given(st.lists(st.floats(-0.99, 0.99), min_size=1, max_size=4))
def test_correlation_pd_iff_rho_norm_below_one(rho):
    d = len(rho)
    kw = dict(A=-np.eye(d), B=np.eye(d), mu_bar=np.zeros(d), rho=rho)
    total = sum(r * r for r in rho)
    assume(abs(total - 1.0) > 1e-9)
    if total < 1.0:
        SignalModel(**kw)
    else:
        with pytest.raises(NotPositiveDefinite):
            SignalModel(**kw)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_number_round_trip(x):
    assert float(fmt(x)) == x


@given(st.floats(0.001, 0.05), st.floats(0.05, 1.0), st.floats(0.01, 100.0), st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_ou_estimate_scale_invariance(eps, beta, c, seed):
    y = simulate_ou_path(eps, beta, 3000, seed)
    a = estimate_ou(y, 1 / 3000)
    b = estimate_ou(c * y, 1 / 3000)
    assert b.eps_hat == pytest.approx(a.eps_hat, rel=1e-9)
    assert b.beta_hat == pytest.approx(c * a.beta_hat, rel=1e-9)


def _batch(cost):
    cost = np.asarray(cost, dtype=float)
    z = np.zeros(cost.size)
    return SimBatch(policy="x", seed=0, n_steps=1, T=1.0, X0=0.0, Q0=0.0, S0=0.0, X_T=cost, Q_T=z, S_T=z,
                    impact_cost=z, inventory_pnl=z)


@given(arrays(float, 8, elements=st.floats(1.0, 1e6)), arrays(float, 8, elements=st.floats(1.0, 1e6)))
def test_savings_sign_and_first_order_antisymmetry(a, b):
    s_ab = savings_bps(_batch(a), _batch(b)).bps
    s_ba = savings_bps(_batch(b), _batch(a)).bps
    np.testing.assert_array_equal(np.sign(s_ab), np.sign(a - b))
    np.testing.assert_array_equal(np.sign(s_ab), -np.sign(s_ba))
    # exact relation: (1 + x/1e4)(1 + y/1e4) = 1
    np.testing.assert_allclose((1 + s_ab / 1e4) * (1 + s_ba / 1e4), 1.0, rtol=1e-9)


@given(st.floats(0.2, 5.0), st.floats(0.01, 5.0), st.floats(0.01, 20.0))
@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_riccati_matches_closed_form(kap, phi, extra):
    b = 1e-3
    varphi = b / 2 + extra
    p = ExecutionProblem(gamma=[0.0], b=b, sigma=0.0, phi=phi, varphi=varphi, mu0=[0.0])
    imp = ImpactModel(kappa=[kap])
    grid = TimeGrid(2000)
    sol = solve_riccati(p, imp, grid)
    want = riccati_closed_form(kap, phi, varphi, b, 1.0, grid.t)
    np.testing.assert_allclose(sol.chi, want, atol=1e-7 * max(1.0, extra))
    # the coefficient is nonpositive and bounded by the terminal and stationary values
    assert np.all(sol.chi <= 1e-12)
    assert np.all(sol.chi >= -max(extra, math.sqrt(phi * kap)) - 1e-9)


@given(st.floats(-50, 50), st.sampled_from(["identity", "scaled_tanh"]))
def test_clamped_factor_keeps_impact_positive(y, kind):
    imp = ImpactModel(kappa=[1.0], eta_kind=kind, eta_a=0.9)
    assert 1.0 + float(imp.eta_clamped(y)) > 0
