"""Finite-difference check that the fast-factor Riccati coefficient is
within O(eps) of its averaged counterpart.

Solves, backward from T,

    d_t X - phi + X^2 / k(t, y) + (1/eps) (-y d_y X + beta^2 d_yy X) = 0,
    X(T, y) = -varphi + b/2,

by Lie splitting in tau = T - t: an explicit RK4 reaction substep (the
same stages as ``solve_riccati``) followed by an implicit-Euler step of
the generator with centred differences and mirror (zero-flux) boundaries.
When k does not depend on y the diffusion step leaves a y-constant field
unchanged, so the scheme reproduces the Riccati solution node for node.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .model import ExecutionProblem, FmrError, ImpactModel, TimeGrid
from .riccati import solve_riccati


class PdeDivergence(FmrError):
    pass


@dataclass(frozen=True)
class PdeGrid:
    M: int = 400
    L: float | None = None          # half-width; default 6 beta
    steps_per_eps: float = 200.0    # dt = eps / steps_per_eps
    min_steps: int = 50
    store_stride: int | None = None

    def __post_init__(self):
        if self.M < 4 or self.M % 2:
            raise ValueError("M must be an even integer >= 4 (symmetric grid with a node at 0)")
        if self.steps_per_eps <= 0:
            raise ValueError("steps_per_eps must be positive")

    def nodes(self, beta: float) -> np.ndarray:
        L = 6.0 * beta if self.L is None else self.L
        if L < 6.0 * beta * (1 - 1e-12):
            raise ValueError(f"L={L} is below 6 beta={6 * beta}")
        return np.linspace(-L, L, self.M + 1)

    def time_grid(self, problem: ExecutionProblem, impact: ImpactModel) -> TimeGrid:
        n = max(self.min_steps, math.ceil(problem.T * self.steps_per_eps / impact.eps))
        # explicit reaction budget: dt * 2 |X|_max / k_min < 0.5
        kap = impact.kappa_values(np.linspace(0.0, problem.T, 2001))
        eta_max = float(np.max(impact.eta_clamped(self.nodes(impact.beta_param))))
        k_min = float(kap.min()) / (1.0 + eta_max)
        k_max = float(kap.max()) / (1.0 + float(np.min(impact.eta_clamped(self.nodes(impact.beta_param)))))
        x_max = max(abs(problem.chi_terminal), math.sqrt(problem.phi * k_max))
        if x_max > 0:
            n = max(n, math.ceil(problem.T * 2.0 * x_max / k_min / 0.45))
        return TimeGrid(n, problem.T)


@dataclass(frozen=True)
class PdeSolution:
    eps: float
    t: np.ndarray
    y: np.ndarray
    chi0: np.ndarray           # averaged Riccati solution on t
    sup_error: float
    argmax: tuple              # (t, y) of the largest deviation
    min_value: float
    t_store: np.ndarray | None = None
    values: np.ndarray | None = None   # X^eps on (t_store, y)


def _generator_bands(y: np.ndarray, beta: float, scale: float) -> np.ndarray:
    """Banded form of I - scale * (-y d_y + beta^2 d_yy) with mirror boundaries."""
    M = y.size - 1
    dy = y[1] - y[0]
    diff = beta * beta / (dy * dy)
    adv = y / (2.0 * dy)
    lower = diff + adv          # coefficient of X_{j-1}
    upper = diff - adv          # coefficient of X_{j+1}
    main = -2.0 * diff * np.ones(M + 1)
    # ghost node X_{-1} = X_1 and X_{M+1} = X_{M-1}
    up = upper.copy()
    lo = lower.copy()
    up[0] = lower[0] + upper[0]
    lo[M] = lower[M] + upper[M]
    ab = np.zeros((3, M + 1))
    ab[0, 1:] = -scale * up[:-1]
    ab[1, :] = 1.0 - scale * main
    ab[2, :-1] = -scale * lo[1:]
    return ab


def solve_chi_pde(problem: ExecutionProblem, impact: ImpactModel, grid: PdeGrid = PdeGrid(),
                  time_grid: TimeGrid | None = None) -> PdeSolution:
    y = grid.nodes(impact.beta_param)
    tg = grid.time_grid(problem, impact) if time_grid is None else time_grid
    t = tg.t
    h = tg.dt
    n = tg.n_steps
    chi0 = solve_riccati(problem, impact, tg).chi
    one_eta = 1.0 + impact.eta_clamped(y)
    if np.any(one_eta <= 0):
        raise ValueError("1 + eta must be positive on the grid")
    kap = impact.kappa_values(t)
    kap_mid = impact.kappa_values(t[:-1] + 0.5 * h)
    phi = problem.phi
    ab = _generator_bands(y, impact.beta_param, h / impact.eps)

    X = np.full(y.size, problem.chi_terminal)
    err = float(np.max(np.abs(X - chi0[n])))
    arg = (float(t[n]), float(y[0]))
    xmin = float(X.min())
    stride = grid.store_stride
    stored_t, stored = [], []
    if stride is not None:
        stored_t.append(t[n])
        stored.append(X.copy())
    for i in range(n - 1, -1, -1):
        w1 = one_eta / kap[i + 1]
        wm = one_eta / kap_mid[i]
        w0 = one_eta / kap[i]
        f1 = phi - X * X * w1
        a2 = X - 0.5 * h * f1
        f2 = phi - a2 * a2 * wm
        a3 = X - 0.5 * h * f2
        f3 = phi - a3 * a3 * wm
        a4 = X - h * f3
        f4 = phi - a4 * a4 * w0
        Xr = X - h / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4)
        Xn = solve_banded((1, 1), ab, Xr, check_finite=False)
        prev = max(float(np.max(np.abs(X))), 1e-300)
        cur = float(np.max(np.abs(Xn)))
        if not math.isfinite(cur) or cur > 10.0 * prev:
            raise PdeDivergence(f"solution grew from {prev:.3g} to {cur:.3g} at t={t[i]:.6g}")
        X = Xn
        dev = np.abs(X - chi0[i])
        j = int(np.argmax(dev))
        if dev[j] > err:
            err = float(dev[j])
            arg = (float(t[i]), float(y[j]))
        xmin = min(xmin, float(X.min()))
        if stride is not None and (i % stride == 0):
            stored_t.append(t[i])
            stored.append(X.copy())
    t_store = values = None
    if stride is not None:
        t_store = np.array(stored_t[::-1])
        values = np.array(stored[::-1])
    return PdeSolution(eps=impact.eps, t=t, y=y, chi0=chi0, sup_error=err, argmax=arg, min_value=xmin,
                       t_store=t_store, values=values)


@dataclass(frozen=True)
class ScalingRow:
    eps: float
    sup_error: float
    ratio: float      # error(eps) / error(previous eps); NaN for the first row or a null error
    C_hat: float      # sup_error / eps


def epsilon_scaling_study(problem: ExecutionProblem, impact: ImpactModel, eps_list,
                          grid: PdeGrid = PdeGrid(), workers: int = 1) -> list[ScalingRow]:
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("empty eps list")

    def run(e):
        return solve_chi_pde(problem, impact.replace(eps=e), grid).sup_error

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            errs = list(ex.map(run, eps_list))
    else:
        errs = [run(e) for e in eps_list]
    rows = []
    for k, (e, err) in enumerate(zip(eps_list, errs)):
        ratio = math.nan
        if k > 0 and errs[k - 1] > 1e-12:
            ratio = err / errs[k - 1]
        rows.append(ScalingRow(eps=e, sup_error=err, ratio=ratio, C_hat=err / e))
    return rows


def standard_case(eps: float = 0.05, a: float = 0.5, beta: float = 0.27, b: float = 1e-3):
    """kappa = 1, phi = 1, varphi - b/2 = 1, so the averaged coefficient is -1 throughout."""
    problem = ExecutionProblem(gamma=[0.0], b=b, sigma=0.0, phi=1.0, varphi=1.0 + b / 2, mu0=[0.0])
    impact = ImpactModel(kappa=[1.0], eta_kind="scaled_tanh", eps=eps, beta_param=beta, eta_a=a)
    return problem, impact
