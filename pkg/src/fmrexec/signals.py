"""Closed-form machinery for an OU trading signal.

With weight ``G(t, s) = exp(logG(s) - logG(t))`` the tables are

    Phi1(t) = int_t^T G(t,s) e^{A(s-t)} ds
    Phi0(t) = int_t^T G(t,s) int_t^s e^{A(s-u)} du ds
    Phi2(t) = int_t^T G(t,s) chi(s)/kappa(s) Phi1(s) ds

Each is accumulated backward interval by interval: a three-point Simpson
rule on ``[t_i, t_{i+1}]`` (midpoint values of logG and chi from cubic
Hermite interpolation, whose derivatives are known exactly) plus the exact
propagation ``Phi1(t_i) = local + G(t_i, t_{i+1}) Phi1(t_{i+1}) e^{A h}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ExecutionProblem, ImpactModel, SignalModel, TimeGrid, Unsupported
from .riccati import RiccatiSolution, solve_riccati

_TAYLOR_DEGREE = 18


def mat_exp(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a truncated Taylor series."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    norm = np.linalg.norm(M, 1)
    if not np.isfinite(norm) or norm > 1e3:
        raise OverflowError(f"mat_exp: norm {norm:.3g} too large")
    s = 0
    if norm > 0.5:
        s = int(math.ceil(math.log2(norm / 0.5)))
    X = M / (2.0 ** s)
    E = np.eye(n)
    term = np.eye(n)
    for k in range(1, _TAYLOR_DEGREE + 1):
        term = term @ X / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


def exp_integral(A, tau: float) -> np.ndarray:
    """int_0^tau e^{A s} ds, valid for singular A."""
    d = A.shape[0]
    blk = np.zeros((2 * d, 2 * d))
    blk[:d, :d] = A * tau
    blk[:d, d:] = np.eye(d) * tau
    return mat_exp(blk)[:d, d:]


def ou_noise_cov(A, B, tau: float) -> np.ndarray:
    """int_0^tau e^{A s} B B^T e^{A^T s} ds (Van Loan block exponential)."""
    d = A.shape[0]
    blk = np.zeros((2 * d, 2 * d))
    blk[:d, :d] = -A * tau
    blk[:d, d:] = B @ B.T * tau
    blk[d:, d:] = A.T * tau
    F = mat_exp(blk)
    S = F[d:, d:].T @ F[:d, d:]
    return 0.5 * (S + S.T)


@dataclass(frozen=True)
class StrategyTables:
    grid: TimeGrid
    riccati: RiccatiSolution
    problem: ExecutionProblem
    impact: ImpactModel
    signal: SignalModel
    Phi1: np.ndarray
    Phi0: np.ndarray
    Phi2: np.ndarray
    Psi: np.ndarray
    C1: np.ndarray
    V_eps: np.ndarray | None
    h0_coeffA: np.ndarray
    h0_const: np.ndarray

    def row(self, arr: np.ndarray, t: float):
        """Linear interpolation of a per-node table at time t."""
        return _interp_rows(self.grid, arr, t)


def _interp_rows(grid: TimeGrid, arr: np.ndarray, t: float):
    x = t / grid.dt
    i = min(max(int(math.floor(x)), 0), grid.n_steps - 1)
    th = min(max(x - i, 0.0), 1.0)
    if th == 0.0:
        return arr[i]
    if th == 1.0:
        return arr[i + 1]
    return (1.0 - th) * arr[i] + th * arr[i + 1]


def _hermite(y0, y1, d0, d1, h, theta):
    t2 = theta * theta
    t3 = t2 * theta
    return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + theta) * h * d0
            + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * d1)


class _Weights:
    """Per-interval quadrature weights shared by the Phi recursions."""

    def __init__(self, riccati: RiccatiSolution):
        lam = riccati.logG
        r = riccati.chi_over_kappa
        h = riccati.grid.dt
        self.h = h
        self.lam_m = _hermite(lam[:-1], lam[1:], r[:-1], r[1:], h, 0.5)
        self.lam_q = _hermite(lam[:-1], lam[1:], r[:-1], r[1:], h, 0.75)
        self.w1 = np.exp(lam[1:] - lam[:-1])
        self.wm = np.exp(self.lam_m - lam[:-1])
        # weights relative to the midpoint, for Phi1 at midpoints
        self.wq_m = np.exp(self.lam_q - self.lam_m)
        self.w1_m = np.exp(lam[1:] - self.lam_m)
        chi = riccati.chi
        dchi = riccati.phi - chi ** 2 / riccati.kappa
        chi_m = _hermite(chi[:-1], chi[1:], dchi[:-1], dchi[1:], h, 0.5)
        self.r = r
        self.r_m = chi_m / riccati.kappa_mid


def compute_psi(riccati: RiccatiSolution, w: _Weights | None = None) -> np.ndarray:
    """Psi(t) = int_t^T G(t,s) ds."""
    w = w or _Weights(riccati)
    n = riccati.grid.n_steps
    local = w.h / 6.0 * (1.0 + 4.0 * w.wm + w.w1)
    out = np.zeros(n + 1)
    w1 = w.w1.tolist()
    loc = local.tolist()
    acc = 0.0
    for i in range(n - 1, -1, -1):
        acc = loc[i] + w1[i] * acc
        out[i] = acc
    return out


def compute_phi1(riccati: RiccatiSolution, signal: SignalModel, w: _Weights | None = None,
                 with_mid: bool = False):
    w = w or _Weights(riccati)
    A = signal.A
    d = A.shape[0]
    h = w.h
    n = riccati.grid.n_steps
    I = np.eye(d)
    E1, Eh, Eq = mat_exp(A * h), mat_exp(A * h / 2), mat_exp(A * h / 4)
    local = h / 6.0 * (I + 4.0 * w.wm[:, None, None] * Eh + w.w1[:, None, None] * E1)
    out = np.zeros((n + 1, d, d))
    for i in range(n - 1, -1, -1):
        out[i] = local[i] + w.w1[i] * (out[i + 1] @ E1)
    if not with_mid:
        return out
    half_local = h / 12.0 * (I + 4.0 * w.wq_m[:, None, None] * Eq + w.w1_m[:, None, None] * Eh)
    mid = half_local + w.w1_m[:, None, None] * (out[1:] @ Eh)
    return out, mid


def compute_phi0(riccati: RiccatiSolution, signal: SignalModel, phi1: np.ndarray | None = None,
                 psi: np.ndarray | None = None, method: str = "auto",
                 w: _Weights | None = None) -> np.ndarray:
    """Phi0 table.

    ``method='auto'`` uses ``(Phi1 - Psi I) A^{-1}`` when the smallest
    singular value of A exceeds 1e-8 and the direct recursion otherwise.
    """
    A = signal.A
    d = A.shape[0]
    w = w or _Weights(riccati)
    if psi is None:
        psi = compute_psi(riccati, w)
    if method == "auto":
        smin = np.linalg.svd(A, compute_uv=False).min()
        method = "shortcut" if smin > 1e-8 else "direct"
    if method == "shortcut":
        if phi1 is None:
            phi1 = compute_phi1(riccati, signal, w)
        Ainv = np.linalg.inv(A)
        return (phi1 - psi[:, None, None] * np.eye(d)) @ Ainv
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    h = w.h
    n = riccati.grid.n_steps
    E1 = mat_exp(A * h)
    J1, Jh = exp_integral(A, h), exp_integral(A, h / 2)
    local = h / 6.0 * (4.0 * w.wm[:, None, None] * Jh + w.w1[:, None, None] * J1)
    out = np.zeros((n + 1, d, d))
    for i in range(n - 1, -1, -1):
        out[i] = local[i] + w.w1[i] * (psi[i + 1] * J1 + E1 @ out[i + 1])
    return out


def compute_phi2(riccati: RiccatiSolution, signal: SignalModel, w: _Weights | None = None,
                 phi1: np.ndarray | None = None, phi1_mid: np.ndarray | None = None) -> np.ndarray:
    w = w or _Weights(riccati)
    if phi1 is None or phi1_mid is None:
        phi1, phi1_mid = compute_phi1(riccati, signal, w, with_mid=True)
    n = riccati.grid.n_steps
    d = signal.A.shape[0]
    h = w.h
    r = w.r
    local = h / 6.0 * (r[:-1, None, None] * phi1[:-1]
                       + 4.0 * (w.wm * w.r_m)[:, None, None] * phi1_mid
                       + (w.w1 * r[1:])[:, None, None] * phi1[1:])
    out = np.zeros((n + 1, d, d))
    for i in range(n - 1, -1, -1):
        out[i] = local[i] + w.w1[i] * out[i + 1]
    return out


def compute_V_eps(impact: ImpactModel, signal: SignalModel) -> np.ndarray:
    """sqrt(2 eps) beta rho, the effective first-order correlation vector."""
    if impact.eta_kind != "identity":
        raise Unsupported("the first-order correction vector is only available for identity eta")
    return math.sqrt(2.0 * impact.eps) * impact.beta_param * signal.rho


def compute_C1(phi2: np.ndarray, kappa: np.ndarray, gamma: np.ndarray, B: np.ndarray) -> np.ndarray:
    """C1(t) = sum_i b_i (gamma . Phi2[:, i](t)) / (2 kappa(t)), b_i the rows of B."""
    g = np.einsum("j,njk->nk", gamma, phi2)
    return (g @ B) / (2.0 * kappa[:, None])


def build_tables(problem: ExecutionProblem, impact: ImpactModel, signal: SignalModel,
                 grid: TimeGrid, riccati: RiccatiSolution | None = None) -> StrategyTables:
    if signal.d != problem.d:
        raise ValueError("signal and problem dimensions differ")
    riccati = riccati or solve_riccati(problem, impact, grid)
    w = _Weights(riccati)
    phi1, phi1_mid = compute_phi1(riccati, signal, w, with_mid=True)
    psi = compute_psi(riccati, w)
    phi0 = compute_phi0(riccati, signal, phi1=phi1, psi=psi, w=w)
    phi2 = compute_phi2(riccati, signal, w, phi1, phi1_mid)
    C1 = compute_C1(phi2, riccati.kappa, problem.gamma, signal.B)
    try:
        V = compute_V_eps(impact, signal)
    except Unsupported:
        V = None
    coeffA = np.einsum("j,njk->nk", problem.gamma, phi1)
    const = np.einsum("j,njk,k->n", problem.gamma, phi0, signal.mu_bar)
    for arr in (phi1, phi0, phi2, psi, C1, coeffA, const):
        arr.setflags(write=False)
    return StrategyTables(grid=grid, riccati=riccati, problem=problem, impact=impact, signal=signal,
                          Phi1=phi1, Phi0=phi0, Phi2=phi2, Psi=psi, C1=C1, V_eps=V,
                          h0_coeffA=coeffA, h0_const=const)


def _check_mu(tables: StrategyTables, mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.shape[-1] != tables.problem.d:
        raise ValueError(f"mu has dimension {mu.shape[-1]}, expected {tables.problem.d}")
    return mu


def h1_zero_order(tables: StrategyTables, t: float, mu):
    """gamma . (Phi1(t) mu + Phi0(t) mu_bar)."""
    mu = _check_mu(tables, mu)
    a = tables.row(tables.h0_coeffA, t)
    c = tables.row(tables.h0_const, t)
    return mu @ a + c


def h0_zero_order(tables: StrategyTables, t: float, mu) -> float:
    """int_t^T E[h1(s, mu_s)^2 | mu_t = mu] / (4 kappa(s)) ds for the OU signal.

    The conditional law of mu_s is Gaussian; its mean and covariance are
    propagated exactly on a uniform Simpson grid from t to T.
    """
    mu = _check_mu(tables, mu)
    T = tables.grid.T
    if t >= T:
        return 0.0
    n = max(2, 2 * int(math.ceil((T - t) / (2 * tables.grid.dt))))
    hs = (T - t) / n
    A, B, mu_bar = tables.signal.A, tables.signal.B, tables.signal.mu_bar
    F = mat_exp(A * hs)
    drift = exp_integral(A, hs) @ mu_bar
    Q = ou_noise_cov(A, B, hs)
    m = mu.copy()
    S = np.zeros((mu.size, mu.size))
    vals = np.empty(n + 1)
    for j in range(n + 1):
        s = t + j * hs if j < n else T
        a = tables.row(tables.h0_coeffA, s)
        c = tables.row(tables.h0_const, s)
        mean = a @ m + c
        vals[j] = (mean * mean + a @ S @ a) / (4.0 * tables.impact.kappa_values(s))
        m = F @ m + drift
        S = F @ S @ F.T + Q
    wts = np.ones(n + 1)
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    return float(hs / 3.0 * wts @ vals)
