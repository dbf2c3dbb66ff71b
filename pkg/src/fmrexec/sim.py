"""Monte Carlo engine for the controlled price/cash/inventory system.

Every policy is linear in inventory over a step, ``nu = m (r(t) q + c)``,
with ``m = 1 + eta(Y)`` for the modulated first-order policy and 1
otherwise. Inventory is advanced with the exact solution of that linear
feedback over the step (the integrating factor is read from the Riccati
tables), and the cash account is charged with the realised average rate
``(Q_{n+1} - Q_n) / dt``. Explicit Euler on Q is unstable once
``|chi/kappa| dt`` exceeds 2, which happens near T for large varphi.

Each path draws from its own PCG64 stream keyed by ``(seed, path_index)``,
so policies run with the same seed are coupled (common random numbers)
and the result does not depend on chunking or worker count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import ExecutionProblem, FmrError, ImpactModel, SignalModel, TimeGrid, build_correlation
from .signals import StrategyTables, exp_integral, mat_exp, ou_noise_cov
from .strategy import Policy, PolicyKind

log = logging.getLogger(__name__)


class NumericalFailure(FmrError):
    pass


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 10_000
    n_steps: int = 23_400
    seed: int = 0
    policy: Policy = field(default_factory=lambda: Policy(PolicyKind.FIRST_ORDER))
    store_stride: int | None = None
    y0: float | None = None  # None: draw Y_0 from the stationary law N(0, beta^2)
    workers: int = 1
    chunk_size: int = 1024
    block_steps: int = 1024

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 2:
            raise ValueError("need n_paths >= 1 and n_steps >= 2")
        if self.store_stride is not None and self.store_stride < 1:
            raise ValueError("store_stride must be >= 1")


@dataclass
class SimBatch:
    policy: str
    seed: int
    n_steps: int
    T: float
    X0: float
    Q0: float
    S0: float
    X_T: np.ndarray
    Q_T: np.ndarray
    S_T: np.ndarray
    impact_cost: np.ndarray
    inventory_pnl: np.ndarray
    t_store: np.ndarray | None = None
    paths: dict | None = None

    @property
    def n_paths(self) -> int:
        return self.X_T.shape[0]

    @property
    def cost(self) -> np.ndarray:
        return self.X_T + self.Q_T * self.S_T

    @property
    def reduced_cost(self) -> np.ndarray:
        """x + qS - sum k nu^2 dt + sum Q dS."""
        return self.X0 + self.Q0 * self.S0 - self.impact_cost + self.inventory_pnl


def _path_rng(seed: int, path_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(path_index)])))


@dataclass
class _Context:
    problem: ExecutionProblem
    impact: ImpactModel
    signal: SignalModel
    cfg: SimConfig
    dt: float
    t: np.ndarray
    kap: np.ndarray
    r: np.ndarray
    dlam: np.ndarray
    h1A: np.ndarray
    h1c: np.ndarray
    shift: np.ndarray
    modulate: bool
    L: np.ndarray
    F: np.ndarray
    drift: np.ndarray
    Smat: np.ndarray
    ay: float
    sy: float
    store_idx: np.ndarray | None


def _signal_step(signal: SignalModel, dt: float):
    A, B = signal.A, signal.B
    F = mat_exp(A * dt)
    drift = exp_integral(A, dt) @ signal.mu_bar
    # noise loading with exact covariance that reduces to B sqrt(dt) as dt -> 0,
    # so the W'-W* correlation structure is preserved
    Smat = B * math.sqrt(dt)
    try:
        L1 = np.linalg.cholesky(ou_noise_cov(A, B, dt))
        L2 = np.linalg.cholesky(B @ B.T * dt)
        Smat = L1 @ np.linalg.solve(L2, B * math.sqrt(dt))
    except np.linalg.LinAlgError:
        pass
    return F, drift, Smat


def _context(problem, impact, signal, tables: StrategyTables, cfg: SimConfig) -> _Context:
    grid = TimeGrid(cfg.n_steps, problem.T)
    t = grid.t
    tg = tables.grid.t
    kap = impact.kappa_values(t)
    r = np.interp(t, tg, tables.riccati.chi_over_kappa)
    dlam = np.diff(np.interp(t, tg, tables.riccati.logG))
    d = problem.d
    kind = cfg.policy.kind
    if kind is PolicyKind.AC:
        h1A = np.zeros((t.size, d))
        h1c = np.zeros(t.size)
    else:
        h1A = np.column_stack([np.interp(t, tg, tables.h0_coeffA[:, j]) for j in range(d)])
        h1c = np.interp(t, tg, tables.h0_const)
    shift = np.zeros(t.size)
    if kind is PolicyKind.FIRST_ORDER:
        if tables.V_eps is None:
            from .model import Unsupported
            raise Unsupported("first-order policy needs identity eta")
        shift = np.interp(t, tg, tables.C1 @ tables.V_eps)
    modulate = kind is PolicyKind.FIRST_ORDER and cfg.policy.apply_impact_modulation
    _, L = build_correlation(signal)
    F, drift, Smat = _signal_step(signal, grid.dt)
    ay = math.exp(-grid.dt / impact.eps)
    sy = impact.beta_param * math.sqrt(-math.expm1(-2.0 * grid.dt / impact.eps))
    store_idx = None
    if cfg.store_stride is not None:
        store_idx = np.unique(np.append(np.arange(0, cfg.n_steps + 1, cfg.store_stride), cfg.n_steps))
    return _Context(problem, impact, signal, cfg, grid.dt, t, kap, r, dlam, h1A, h1c, shift, modulate,
                    L, F, drift, Smat, ay, sy, store_idx)


def _run_chunk(ctx: _Context, path_ids: range) -> dict:
    cfg, p, imp = ctx.cfg, ctx.problem, ctx.impact
    P = len(path_ids)
    d = p.d
    nz = d + 2
    dt = ctx.dt
    sqdt = math.sqrt(dt)
    rngs = [_path_rng(cfg.seed, i) for i in path_ids]
    if cfg.y0 is None:
        Y = imp.beta_param * np.array([g.standard_normal() for g in rngs])
    else:
        Y = np.full(P, float(cfg.y0))
    mu = np.tile(p.mu0, (P, 1))
    Q = np.full(P, p.Q0)
    S = np.full(P, p.S0)
    X = np.full(P, p.X0)
    impact_cost = np.zeros(P)
    pnl = np.zeros(P)
    L = ctx.L
    gamma = p.gamma.tolist()
    F, drift, Smat = ctx.F, ctx.drift, ctx.Smat
    kap, r, dlam, h1A, h1c, shift = ctx.kap, ctx.r, ctx.dlam, ctx.h1A, ctx.h1c, ctx.shift
    b, sigma = p.b, p.sigma

    store = None
    if ctx.store_idx is not None:
        ns = ctx.store_idx.size
        store = {k: np.empty((P, ns)) for k in ("S", "X", "Q", "nu", "Y")}
        store["mu"] = np.empty((P, ns, d))
        pos = {int(n): j for j, n in enumerate(ctx.store_idx)}

    def eta_mult(Yv):
        return 1.0 + imp.eta_clamped(Yv)

    def inst_rate(n, q, muv, mult):
        h1 = h1c[n] + sum(h1A[n, j] * muv[:, j] for j in range(d))
        base = r[n] * q + 0.5 * h1 / kap[n] + shift[n]
        return mult * base if ctx.modulate else base

    def record(n, nu_now):
        j = pos[n]
        store["S"][:, j] = S
        store["X"][:, j] = X
        store["Q"][:, j] = Q
        store["nu"][:, j] = nu_now
        store["Y"][:, j] = Y
        store["mu"][:, j, :] = mu

    N = cfg.n_steps
    n = 0
    while n < N:
        nb = min(cfg.block_steps, N - n)
        Z = np.stack([g.standard_normal((nb, nz)) for g in rngs])  # (P, nb, nz)
        Z = np.ascontiguousarray(Z.transpose(1, 0, 2))
        for jb in range(nb):
            z = Z[jb]
            zc = [sum(L[i, k] * z[:, k] for k in range(i + 1)) for i in range(nz)]
            mult = eta_mult(Y)
            h1 = h1c[n] + sum(h1A[n, j] * mu[:, j] for j in range(d))
            cc = 0.5 * h1 / kap[n] + shift[n]
            if ctx.modulate:
                zz = mult * dlam[n]
                coef = mult * cc
            else:
                zz = np.full(P, dlam[n])
                coef = cc
            if store is not None and n in pos:
                record(n, inst_rate(n, Q, mu, mult))
            growth = np.exp(zz)
            with np.errstate(invalid="ignore", divide="ignore"):
                ph = np.where(zz != 0.0, np.expm1(zz) / zz, 1.0)
            Qn = growth * Q + coef * dt * ph
            nu = (Qn - Q) / dt
            k = kap[n] / mult
            X = X - (S + k * nu) * nu * dt
            gmu = sum(gamma[j] * mu[:, j] for j in range(d))
            dS = (gmu + b * nu) * dt + sigma * sqdt * zc[0]
            impact_cost = impact_cost + k * nu * nu * dt
            pnl = pnl + Q * dS
            S = S + dS
            Q = Qn
            mu = np.column_stack([
                sum(F[i, j] * mu[:, j] for j in range(d)) + drift[i]
                + sum(Smat[i, j] * zc[1 + j] for j in range(d))
                for i in range(d)
            ])
            Y = ctx.ay * Y + ctx.sy * zc[d + 1]
            n += 1
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(X)) and np.all(np.isfinite(S))):
            bad = int(np.argmax(~(np.isfinite(Q) & np.isfinite(X) & np.isfinite(S))))
            raise NumericalFailure(f"non-finite state at step {n}, path {path_ids[bad]} "
                                   f"(Q={Q[bad]}, X={X[bad]}, S={S[bad]}, Y={Y[bad]})")
    if store is not None and N in pos:
        record(N, inst_rate(N, Q, mu, eta_mult(Y)))
    out = {"X_T": X, "Q_T": Q, "S_T": S, "impact_cost": impact_cost, "inventory_pnl": pnl}
    if store is not None:
        out["paths"] = store
    return out


def simulate(problem: ExecutionProblem, impact: ImpactModel, signal: SignalModel,
             tables: StrategyTables, cfg: SimConfig) -> SimBatch:
    ctx = _context(problem, impact, signal, tables, cfg)
    chunks = [range(s, min(s + cfg.chunk_size, cfg.n_paths)) for s in range(0, cfg.n_paths, cfg.chunk_size)]
    if cfg.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
            parts = list(ex.map(lambda c: _run_chunk(ctx, c), chunks))
    else:
        parts = [_run_chunk(ctx, c) for c in chunks]
    cat = {k: np.concatenate([pt[k] for pt in parts]) for k in ("X_T", "Q_T", "S_T", "impact_cost", "inventory_pnl")}
    paths = None
    t_store = None
    if ctx.store_idx is not None:
        paths = {k: np.concatenate([pt["paths"][k] for pt in parts]) for k in parts[0]["paths"]}
        t_store = ctx.t[ctx.store_idx]
    log.debug("simulated %d paths of %s", cfg.n_paths, cfg.policy.name)
    return SimBatch(policy=cfg.policy.name, seed=cfg.seed, n_steps=cfg.n_steps, T=problem.T,
                    X0=problem.X0, Q0=problem.Q0, S0=problem.S0, t_store=t_store, paths=paths, **cat)


@dataclass(frozen=True)
class BpsSummary:
    bps: np.ndarray          # per path, NaN where the benchmark cost is zero
    median: float
    n_excluded: int
    bin_edges: np.ndarray
    counts: np.ndarray


def savings_bps(batch: SimBatch, benchmark: SimBatch, bins: int = 50) -> BpsSummary:
    """(C - C_bench) / C_bench * 1e4 per path, on coupled batches."""
    if batch.n_paths != benchmark.n_paths or batch.seed != benchmark.seed:
        raise ValueError("savings need coupled batches (same seed and path count)")
    c, cb = batch.cost, benchmark.cost
    ok = cb != 0
    bps = np.full(c.shape, np.nan)
    bps[ok] = (c[ok] - cb[ok]) / cb[ok] * 1e4
    vals = bps[ok]
    if vals.size == 0:
        return BpsSummary(bps, float("nan"), int((~ok).sum()), np.array([]), np.array([], dtype=int))
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(vals, bins=bins, range=(lo, hi))
    return BpsSummary(bps, float(np.median(vals)), int((~ok).sum()), edges, counts)


def inventory_quantiles(batch: SimBatch, benchmark: SimBatch, levels=(0.1, 0.5, 0.9)):
    """Pointwise-in-t quantiles of Q_policy - Q_benchmark; returns (t, array[level, t])."""
    if batch.paths is None or benchmark.paths is None:
        raise ValueError("inventory quantiles need stored trajectories in both batches")
    if batch.t_store.shape != benchmark.t_store.shape or not np.allclose(batch.t_store, benchmark.t_store):
        raise ValueError("batches were stored on different time grids")
    dev = batch.paths["Q"] - benchmark.paths["Q"]
    return batch.t_store, np.quantile(dev, np.asarray(levels), axis=0)
