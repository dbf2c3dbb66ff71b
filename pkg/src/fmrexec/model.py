"""Domain types for execution under fast mean-reverting stochastic impact.

Temporary impact is ``k(t, y) = kappa(t) / (1 + eta(y))`` with ``kappa`` a
polynomial diurnal curve and ``eta`` an odd map of the fast factor ``Y``.
All types are frozen; array fields are stored read-only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np


class FmrError(Exception):
    """Base class for library errors."""


class NotPositiveDefinite(FmrError):
    pass


class DomainError(FmrError, ValueError):
    pass


class Unsupported(FmrError):
    pass


class PositivityWarning(UserWarning):
    pass


class StationarityWarning(UserWarning):
    pass


ETA_KINDS = ("identity", "scaled_tanh")


def _frozen_array(x, ndim: int | None = None, name: str = "array") -> np.ndarray:
    arr = np.array(x, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ExecutionProblem:
    """Economic parameters of the liquidation problem.

    ``phi`` is the running inventory penalty and ``varphi`` the terminal
    liquidation penalty; time is normalised so that one trading day is 1.
    """

    gamma: np.ndarray
    b: float
    sigma: float
    phi: float
    varphi: float
    T: float = 1.0
    S0: float = 100.0
    X0: float = 0.0
    Q0: float = 1.0e4
    mu0: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        object.__setattr__(self, "gamma", _frozen_array(self.gamma, 1, "gamma"))
        object.__setattr__(self, "mu0", _frozen_array(self.mu0, 1, "mu0"))
        if self.gamma.shape != self.mu0.shape:
            raise ValueError("gamma and mu0 must have the same length")
        if self.phi < 0 or self.varphi < 0:
            raise ValueError("phi and varphi must be nonnegative")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not self.T > 0:
            raise ValueError("T must be positive")
        # equality is the degenerate zero-terminal case, kept for the trivial oracles
        if self.varphi < self.b / 2:
            raise ValueError("varphi must be at least b/2 (terminal Riccati value <= 0)")

    @property
    def d(self) -> int:
        return self.gamma.shape[0]

    @property
    def chi_terminal(self) -> float:
        return -self.varphi + self.b / 2

    def replace(self, **changes) -> "ExecutionProblem":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return ExecutionProblem(**kw)


@dataclass(frozen=True)
class ImpactModel:
    """Diurnal impact curve plus the fast factor driving its fluctuations.

    ``kappa`` holds polynomial coefficients in ascending order,
    ``kappa(t) = sum_j kappa[j] * t**j`` on ``[0, horizon]``.
    """

    kappa: np.ndarray
    eta_kind: str = "identity"
    eps: float = 0.0035
    beta_param: float = 0.26984
    eta_clamp: float = 0.05
    eta_a: float = 0.5
    horizon: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kappa", _frozen_array(np.atleast_1d(self.kappa), 1, "kappa"))
        if self.kappa.size == 0:
            raise ValueError("kappa needs at least one coefficient")
        if self.eta_kind not in ETA_KINDS:
            raise ValueError(f"eta_kind must be one of {ETA_KINDS}, got {self.eta_kind!r}")
        if not self.eps > 0 or not self.beta_param > 0:
            raise ValueError("eps and beta_param must be positive")
        if not 0 < self.eta_clamp < 1:
            raise ValueError("eta_clamp must lie in (0, 1)")
        if self.eta_kind == "scaled_tanh" and not 0 <= self.eta_a < 1:
            raise ValueError("scaled_tanh needs 0 <= eta_a < 1")
        dense = np.linspace(0.0, self.horizon, 2001)
        if np.any(self.kappa_values(dense) <= 0):
            raise DomainError("kappa(t) must be strictly positive on [0, horizon]")

    def kappa_values(self, t) -> np.ndarray:
        return np.polynomial.polynomial.polyval(t, self.kappa)

    def eta(self, y):
        y = np.asarray(y, dtype=float)
        if self.eta_kind == "identity":
            return y
        return self.eta_a * np.tanh(y)

    def eta_clamped(self, y):
        return np.maximum(self.eta(y), self.eta_clamp - 1.0)

    def k(self, t, y):
        return self.kappa_values(t) / (1.0 + self.eta_clamped(y))

    def replace(self, **changes) -> "ImpactModel":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return ImpactModel(**kw)


@dataclass(frozen=True)
class SignalModel:
    """OU trading signal ``d mu = (A mu + mu_bar) dt + B dW'`` with
    ``corr(W'_i, W*) = rho_i``."""

    A: np.ndarray
    B: np.ndarray
    mu_bar: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        A = _frozen_array(np.atleast_2d(self.A), 2, "A")
        B = _frozen_array(np.atleast_2d(self.B), 2, "B")
        mu_bar = _frozen_array(np.atleast_1d(self.mu_bar), 1, "mu_bar")
        rho = _frozen_array(np.atleast_1d(self.rho), 1, "rho")
        d = A.shape[0]
        if A.shape != (d, d) or B.shape != (d, d) or mu_bar.shape != (d,) or rho.shape != (d,):
            raise ValueError("A, B must be d x d and mu_bar, rho length d")
        if np.any(np.abs(rho) >= 1):
            raise ValueError("each rho_i must lie in (-1, 1)")
        for name, val in (("A", A), ("B", B), ("mu_bar", mu_bar), ("rho", rho)):
            object.__setattr__(self, name, val)
        if np.any(np.linalg.eigvals(A).real > 0):
            warnings.warn("A has eigenvalues with positive real part; signal is not stationary",
                          StationarityWarning, stacklevel=3)
        build_correlation(self)

    @property
    def d(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class TimeGrid:
    n_steps: int
    T: float = 1.0

    def __post_init__(self):
        if self.n_steps < 1 or not self.T > 0:
            raise ValueError("TimeGrid needs n_steps >= 1 and T > 0")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)


def kappa_eval(impact: ImpactModel, t: float, T: float | None = None) -> float:
    T = impact.horizon if T is None else T
    if not 0.0 <= t <= T:
        raise DomainError(f"t={t} outside [0, {T}]")
    return float(impact.kappa_values(t))


def k_eval(impact: ImpactModel, t: float, y, T: float | None = None):
    kap = kappa_eval(impact, t, T)
    out = kap / (1.0 + impact.eta_clamped(y))
    return float(out) if np.ndim(out) == 0 else out


def build_correlation(signal: SignalModel) -> tuple[np.ndarray, np.ndarray]:
    """Correlation of ``(W, W'_1..W'_d, W*)`` and its lower Cholesky factor.

    ``W`` is independent of everything else and the signal noises are
    mutually independent; only ``corr(W'_i, W*) = rho_i`` is nonzero.
    """
    d = signal.rho.shape[0]
    n = d + 2
    C = np.eye(n)
    C[1:d + 1, n - 1] = signal.rho
    C[n - 1, 1:d + 1] = signal.rho
    try:
        L = np.linalg.cholesky(C)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"Brownian correlation matrix is not positive definite (rho={signal.rho})") from exc
    return C, L


def gauss_hermite_mean(func, std: float, n: int = 80) -> float:
    """Mean of ``func(Y)`` for ``Y ~ N(0, std**2)``."""
    x, w = np.polynomial.hermite_e.hermegauss(n)
    return float(np.sum(w * func(std * x)) / math.sqrt(2 * math.pi))
