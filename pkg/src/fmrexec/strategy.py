"""Trading-rate policies and the first-order value approximation.

Sign convention: nu > 0 buys. The zero-order control is the first-order
condition of the quadratic value, ``(chi q + h1/2) / kappa``, which
liquidates a long position because chi < 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import Unsupported
from .signals import StrategyTables, h0_zero_order, h1_zero_order


class PolicyKind(enum.Enum):
    AC = "AC"
    TS = "TS"
    FIRST_ORDER = "FirstOrder"


@dataclass(frozen=True)
class Policy:
    kind: PolicyKind
    apply_impact_modulation: bool = True

    @classmethod
    def parse(cls, name: str) -> "Policy":
        key = name.strip().lower().replace("_", "").replace("-", "")
        aliases = {"ac": PolicyKind.AC, "ts": PolicyKind.TS, "firstorder": PolicyKind.FIRST_ORDER,
                   "fo": PolicyKind.FIRST_ORDER}
        if key == "firstordernomod":
            return cls(PolicyKind.FIRST_ORDER, apply_impact_modulation=False)
        if key not in aliases:
            raise ValueError(f"unknown policy {name!r}; expected AC, TS or FirstOrder")
        return cls(aliases[key])

    @property
    def name(self) -> str:
        if self.kind is PolicyKind.FIRST_ORDER and not self.apply_impact_modulation:
            return "FirstOrderNoMod"
        return self.kind.value


def nu_AC(tables: StrategyTables, t: float, q):
    r = tables.row(tables.riccati.chi_over_kappa, t)
    return r * np.asarray(q, dtype=float)


def nu_TS(tables: StrategyTables, t: float, mu, q):
    kap = tables.row(tables.riccati.kappa, t)
    return nu_AC(tables, t, q) + 0.5 * h1_zero_order(tables, t, mu) / kap


def first_order_shift(tables: StrategyTables, t: float) -> float:
    """V^eps . C1(t), the additive first-order correction to the TS rate."""
    if tables.V_eps is None:
        raise Unsupported("first-order correction needs identity eta")
    return float(tables.V_eps @ tables.row(tables.C1, t))


def nu_first_order(tables: StrategyTables, t: float, mu, q, y, apply_impact_modulation: bool = True):
    base = nu_TS(tables, t, mu, q) + first_order_shift(tables, t)
    if not apply_impact_modulation:
        return base
    return (1.0 + tables.impact.eta_clamped(y)) * base


def value_first_order(tables: StrategyTables, t: float, x, S, mu, q) -> float:
    """x + qS + h0(t,mu) + h1(t,mu) q + (chi - b/2) q^2 + (V^eps . phi1(t)) q.

    The q-independent first-order term is not included.
    """
    q = float(q)
    b = tables.problem.b
    chi = float(tables.row(tables.riccati.chi, t))
    h0 = h0_zero_order(tables, t, mu)
    h1 = float(h1_zero_order(tables, t, mu))
    corr = 0.0
    if tables.V_eps is not None and q != 0.0:
        kap = float(tables.row(tables.riccati.kappa, t))
        corr = 2.0 * kap * first_order_shift(tables, t) * q
    return float(x + q * S + h0 + h1 * q + (chi - b / 2) * q * q + corr)
