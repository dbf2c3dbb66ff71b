import numpy as np
import pytest

from fmrexec.model import ExecutionProblem, ImpactModel, SignalModel, TimeGrid
from fmrexec.presets import reference_impact, reference_problem, reference_signal
from fmrexec.signals import build_tables


def const_impact(kappa=1.0, **kw):
    return ImpactModel(kappa=[kappa], **kw)


def scalar_signal(A=-10.0, B=1.0, mu_bar=0.0, rho=0.0):
    return SignalModel(A=[[A]], B=[[B]], mu_bar=[mu_bar], rho=[rho])


def simple_problem(**kw):
    base = dict(gamma=[1.0], b=0.0, sigma=0.0, phi=1.0, varphi=10.0, T=1.0, S0=100.0, X0=0.0, Q0=1.0, mu0=[1.0])
    base.update(kw)
    return ExecutionProblem(**base)


@pytest.fixture(scope="session")
def ref_tables():
    """Reference parameters with phi = 10 b on a 10^4-step grid."""
    return build_tables(reference_problem(10.0), reference_impact(), reference_signal(), TimeGrid(10_000))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
