"""Reference parameter sets.

The signal and agent parameters are the published "typical values"
(A=-10, B=1, mu_bar=0, mu0=1, S0=100, sigma=0.1, rho=-0.5, gamma=0.1,
b=1.4275e-6, X0=0, Q0=1e4, phi=b, varphi=1e3 b) and the fast-factor
estimates eps=0.0035, beta=0.26984. No fitted diurnal curve is published,
so ``MSFT_LIKE_KAPPA`` is a synthetic U-shaped curve of the same order as b.
"""

from __future__ import annotations

import numpy as np

from .model import ExecutionProblem, ImpactModel, SignalModel

B_PERMANENT = 1.4275e-06
EPS_HAT = 0.0035
BETA_HAT = 0.26984

# kappa(t) = 1e-6 (3.2 - 7.0 t + 9.0 t^2 - 3.4 t^3): open 3.2e-6, trough ~1.5e-6, close 1.8e-6
MSFT_LIKE_KAPPA = (3.2e-6, -7.0e-6, 9.0e-6, -3.4e-6)


def reference_problem(phi_multiple: float = 1.0, varphi_multiple: float = 1e3) -> ExecutionProblem:
    b = B_PERMANENT
    return ExecutionProblem(gamma=[0.1], b=b, sigma=0.1, phi=phi_multiple * b,
                            varphi=varphi_multiple * b, T=1.0, S0=100.0, X0=0.0, Q0=1e4, mu0=[1.0])


def reference_impact(kappa=MSFT_LIKE_KAPPA) -> ImpactModel:
    return ImpactModel(kappa=np.asarray(kappa), eta_kind="identity", eps=EPS_HAT,
                       beta_param=BETA_HAT, eta_clamp=0.05)


def reference_signal() -> SignalModel:
    return SignalModel(A=[[-10.0]], B=[[1.0]], mu_bar=[0.0], rho=[-0.5])


def reference_config(phi_multiples=(1.0, 5.0, 10.0)) -> dict:
    """JSON-compatible config tree matching ``config.load_config``."""
    p = reference_problem()
    imp = reference_impact()
    sig = reference_signal()
    return {
        "problem": {"gamma": p.gamma.tolist(), "b": p.b, "sigma": p.sigma, "phi": p.phi,
                    "varphi": p.varphi, "T": p.T, "S0": p.S0, "X0": p.X0, "Q0": p.Q0,
                    "mu0": p.mu0.tolist()},
        "impact": {"kappa": imp.kappa.tolist(), "eta_kind": imp.eta_kind, "eps": imp.eps,
                   "beta_param": imp.beta_param, "eta_clamp": imp.eta_clamp},
        "signal": {"A": sig.A.tolist(), "B": sig.B.tolist(), "mu_bar": sig.mu_bar.tolist(),
                   "rho": sig.rho.tolist()},
        "sweep": {"phi_multiples": list(phi_multiples)},
        "numerics": {"table_steps": 10000, "sim_steps": 23400},
    }
