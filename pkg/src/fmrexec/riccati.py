"""Backward Riccati solve for the zero-order quadratic value coefficient.

chi' - phi + chi**2 / kappa(t) = 0,   chi(T) = -varphi + b/2.

The log integrating factor ``logG(t) = int_0^t chi/kappa`` is carried as a
second RK4 component so that it inherits fourth-order accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DomainError, ExecutionProblem, FmrError, ImpactModel, TimeGrid

# substep when h * 2|chi| / kappa exceeds this (stiff terminal layer for large varphi)
_STIFF_LIMIT = 0.05


class BlowUp(FmrError):
    pass


class InvalidTerminal(FmrError, ValueError):
    pass


@dataclass(frozen=True)
class RiccatiSolution:
    grid: TimeGrid
    chi: np.ndarray
    logG: np.ndarray
    kappa: np.ndarray
    kappa_mid: np.ndarray
    phi: float

    @property
    def chi_over_kappa(self) -> np.ndarray:
        return self.chi / self.kappa

    def chi_at(self, t):
        return np.interp(t, self.grid.t, self.chi)

    def logG_at(self, t):
        return np.interp(t, self.grid.t, self.logG)


def _horner(coeffs, t):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def solve_riccati(problem: ExecutionProblem, impact: ImpactModel, grid: TimeGrid) -> RiccatiSolution:
    if abs(grid.T - problem.T) > 1e-12 * max(1.0, problem.T):
        raise DomainError("grid must span [0, T] of the problem")
    t = grid.t
    h = grid.dt
    n = grid.n_steps
    kap = impact.kappa_values(t)
    kap_mid = impact.kappa_values(t[:-1] + 0.5 * h)
    if np.any(kap <= 0) or np.any(kap_mid <= 0):
        raise DomainError("kappa must be positive on the grid")
    coeffs = [float(c) for c in impact.kappa]
    phi = float(problem.phi)
    x = float(problem.chi_terminal)
    limit = 1e6 * max(problem.varphi, math.sqrt(phi * float(kap.max())), 1e-300)

    chi = np.empty(n + 1)
    rev = np.empty(n + 1)  # int_t^T chi/kappa
    chi[n] = x
    rev[n] = 0.0
    acc = 0.0
    kap_l = kap.tolist()
    kapm_l = kap_mid.tolist()
    t_l = t.tolist()
    for i in range(n - 1, -1, -1):
        k1n, kmn, k0n = kap_l[i + 1], kapm_l[i], kap_l[i]
        kmin = min(k1n, kmn, k0n)
        m = 1
        stiff = 2.0 * h * abs(x) / kmin
        if stiff > _STIFF_LIMIT:
            m = int(math.ceil(stiff / _STIFF_LIMIT))
        if m == 1:
            a1 = x
            f1 = phi - a1 * a1 / k1n
            a2 = x - 0.5 * h * f1
            f2 = phi - a2 * a2 / kmn
            a3 = x - 0.5 * h * f2
            f3 = phi - a3 * a3 / kmn
            a4 = x - h * f3
            f4 = phi - a4 * a4 / k0n
            acc += h / 6.0 * (a1 / k1n + 2.0 * a2 / kmn + 2.0 * a3 / kmn + a4 / k0n)
            x = x - h / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4)
        else:
            hs = h / m
            ts = t_l[i + 1]
            for _ in range(m):
                ka = _horner(coeffs, ts)
                kb = _horner(coeffs, ts - 0.5 * hs)
                kc = _horner(coeffs, ts - hs)
                a1 = x
                f1 = phi - a1 * a1 / ka
                a2 = x - 0.5 * hs * f1
                f2 = phi - a2 * a2 / kb
                a3 = x - 0.5 * hs * f2
                f3 = phi - a3 * a3 / kb
                a4 = x - hs * f3
                f4 = phi - a4 * a4 / kc
                acc += hs / 6.0 * (a1 / ka + 2.0 * a2 / kb + 2.0 * a3 / kb + a4 / kc)
                x = x - hs / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4)
                ts -= hs
        if not abs(x) <= limit:
            raise BlowUp(f"|chi| exceeded {limit:.3g} at t={t_l[i]:.6g}")
        chi[i] = x
        rev[i] = acc
    logG = rev[0] - rev
    logG[0] = 0.0
    for arr in (chi, logG, kap, kap_mid):
        arr.setflags(write=False)
    return RiccatiSolution(grid=grid, chi=chi, logG=logG, kappa=kap, kappa_mid=kap_mid, phi=phi)


def riccati_closed_form(kappa_const: float, phi: float, varphi: float, b: float, T: float, t):
    """Exact solution for constant kappa.

    With c = sqrt(kappa*phi), g = c/kappa and zeta = (chi_T - c)/(chi_T + c),
    chi(t) = c (1 + zeta e^{2g(T-t)}) / (1 - zeta e^{2g(T-t)}).
    """
    chi_T = -varphi + b / 2
    if chi_T >= 0:
        raise InvalidTerminal("closed form requires chi(T) = -varphi + b/2 < 0")
    if not phi > 0 or not kappa_const > 0:
        raise ValueError("closed form requires kappa > 0 and phi > 0")
    c = math.sqrt(kappa_const * phi)
    tt = np.asarray(t, dtype=float)
    if chi_T + c == 0:
        out = np.full_like(tt, -c)
        return float(out) if out.ndim == 0 else out
    g = c / kappa_const
    zeta = (chi_T - c) / (chi_T + c)
    e = zeta * np.exp(2 * g * (T - tt))
    out = c * (1 + e) / (1 - e)
    return float(out) if np.ndim(out) == 0 else out


def integrating_factor(sol: RiccatiSolution, t: float, s: float) -> float:
    """exp(int_t^s chi/kappa du), linear interpolation of logG between nodes."""
    if t > s:
        raise DomainError(f"integrating_factor needs t <= s, got t={t}, s={s}")
    if t < 0 or s > sol.grid.T + 1e-12:
        raise DomainError("t, s must lie in [0, T]")
    return float(np.exp(sol.logG_at(s) - sol.logG_at(t)))
