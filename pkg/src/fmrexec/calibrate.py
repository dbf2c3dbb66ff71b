"""Estimation of the diurnal impact curve and the fast impact factor.

Pipeline on a per-second impact series kappa_i observed at t_i = i/N:

1. least-squares polynomial fit of kappa_i (QR, no normal equations);
2. adjust the coefficients so that the implied factor has sample mean zero;
3. eta_i = fit(t_i) / kappa_i - 1;
4. AR(1) regression of eta_{i+1} - eta_i on eta_i, inverted to (eps, beta)
   with the exact OU discretisation and stationary variance beta**2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats
from scipy.signal import lfilter

from .model import FmrError, PositivityWarning

_Z95 = float(stats.norm.ppf(0.975))


class EstimationFailed(FmrError):
    pass


class RankDeficient(FmrError):
    pass


@dataclass(frozen=True)
class ImpactSeries:
    values: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        t = np.asarray(self.t, dtype=float)
        if v.ndim != 1 or t.shape != v.shape or v.size < 3:
            raise ValueError("need matching 1-d time and value arrays with at least 3 points")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("impact values must be finite and strictly positive")
        dts = np.diff(t)
        if np.any(dts <= 0) or not np.allclose(dts, dts[0], rtol=1e-6, atol=0):
            raise ValueError("timestamps must be uniformly spaced and increasing")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "t", t)

    @classmethod
    def from_values(cls, values) -> "ImpactSeries":
        v = np.asarray(values, dtype=float)
        return cls(values=v, t=np.arange(v.size) / v.size)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


@dataclass(frozen=True)
class MeanAdjustment:
    alpha: np.ndarray
    mean_eta: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class OUEstimate:
    eps_hat: float
    beta_hat: float
    eps_ci: tuple
    beta_ci: tuple
    slope: float
    slope_se: float
    resid_var: float
    n: int
    boundary: bool = False


@dataclass(frozen=True)
class CalibrationResult:
    alpha_init: np.ndarray
    alpha: np.ndarray
    eta_path: np.ndarray
    ou: OUEstimate
    adjustment: MeanAdjustment
    diagnostics: dict = field(default_factory=dict)

    @property
    def eps_hat(self) -> float:
        return self.ou.eps_hat

    @property
    def beta_hat(self) -> float:
        return self.ou.beta_hat


def poly_eval(alpha, t):
    """sum_j alpha[j] t**j, Horner."""
    t = np.asarray(t, dtype=float)
    acc = np.zeros_like(t)
    for c in np.asarray(alpha, dtype=float)[::-1]:
        acc = acc * t + c
    return acc


def fit_kappa_polynomial(series: ImpactSeries, J: int = 8) -> np.ndarray:
    """Least-squares coefficients alpha[0..J-1] of kappa(t) = sum alpha_j t^j."""
    if J < 1:
        raise ValueError("order J must be >= 1")
    if series.n < 4 * J:
        raise RankDeficient(f"series of length {series.n} is too short for order {J}")
    V = np.vander(series.t, J, increasing=True)
    Qm, R = np.linalg.qr(V)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-13 * diag.max() * series.n:
        raise RankDeficient("design matrix is numerically rank deficient")
    alpha = linalg.solve_triangular(R, Qm.T @ series.values)
    if np.any(poly_eval(alpha, series.t) <= 0):
        warnings.warn("fitted impact curve is not positive on the grid", PositivityWarning, stacklevel=2)
    return alpha


def implied_eta(series: ImpactSeries, alpha) -> np.ndarray:
    return poly_eval(alpha, series.t) / series.values - 1.0


def adjust_mean_zero(series: ImpactSeries, alpha_init, tol: float = 1e-12, max_iter: int = 20) -> MeanAdjustment:
    """Drive the sample mean of the implied factor to zero.

    The mean is affine in alpha, r(alpha) = w . alpha - 1 with
    w_j = mean(t^j / kappa), so each Gauss-Newton step is the minimum-norm
    correction alpha -= r w / |w|^2 and one step is exact up to rounding.
    """
    alpha = np.array(alpha_init, dtype=float)
    V = np.vander(series.t, alpha.size, increasing=True)
    w = (V / series.values[:, None]).mean(axis=0)
    ww = float(w @ w)
    best = (abs(float(implied_eta(series, alpha).mean())), alpha.copy())
    it = 0
    while best[0] >= tol and it < max_iter:
        r = float(implied_eta(series, alpha).mean())
        alpha = alpha - r * w / ww
        it += 1
        r_new = abs(float(implied_eta(series, alpha).mean()))
        if r_new < best[0]:
            best = (r_new, alpha.copy())
        elif r_new >= best[0] and it > 2:
            break
    return MeanAdjustment(alpha=best[1], mean_eta=float(implied_eta(series, best[1]).mean()),
                          iterations=it, converged=best[0] < tol)


def estimate_ou(eta_path, dt: float) -> OUEstimate:
    """AR(1) regression without intercept, inverted to (eps, beta).

    a = 1 + m is the one-step autocorrelation e^{-dt/eps}; the conditional
    variance is beta^2 (1 - a^2).
    """
    eta = np.asarray(eta_path, dtype=float)
    if eta.ndim != 1 or eta.size < 3:
        raise EstimationFailed("need at least 3 observations")
    x = eta[:-1]
    dy = np.diff(eta)
    sxx = float(x @ x)
    # eta is dimensionless; anything below this is rounding left by the fit
    if not sxx > 0 or float(np.std(eta)) < 1e-10:
        raise EstimationFailed("implied factor has zero variance")
    n = x.size
    m = float(x @ dy) / sxx
    if not m < 0:
        raise EstimationFailed(f"no mean reversion: slope {m:.6g} >= 0")
    resid = dy - m * x
    s2 = float(resid @ resid) / (n - 1)
    se = math.sqrt(s2 / sxx)
    a = 1.0 + m
    boundary = a - _Z95 * se <= 0.0
    a_eff = max(a, se, 1e-300)
    eps_hat = -dt / math.log(a_eff) if a_eff < 1 else math.inf

    def eps_of(av):
        if av <= 0:
            return 0.0
        if av >= 1:
            return math.inf
        return -dt / math.log(av)

    eps_ci = (eps_of(a - _Z95 * se), eps_of(a + _Z95 * se))
    denom = 1.0 - a_eff * a_eff
    beta_hat = math.sqrt(s2 / denom)
    # delta method on beta = sqrt(s2 / (1 - a^2)), Var(s2) ~ 2 s2^2 / n
    if beta_hat > 0:
        sd_beta = beta_hat * math.sqrt((a_eff * se / denom) ** 2 + 0.5 / n)
    else:
        sd_beta = 0.0
    beta_ci = (max(beta_hat - _Z95 * sd_beta, 0.0), beta_hat + _Z95 * sd_beta)
    return OUEstimate(eps_hat=eps_hat, beta_hat=beta_hat, eps_ci=eps_ci, beta_ci=beta_ci, slope=m,
                      slope_se=se, resid_var=s2, n=n, boundary=bool(boundary))


def calibrate(series: ImpactSeries, J: int = 8, lag_sample: int = 500, hist_bins: int = 40) -> CalibrationResult:
    alpha0 = fit_kappa_polynomial(series, J)
    adj = adjust_mean_zero(series, alpha0)
    eta = implied_eta(series, adj.alpha)
    ou = estimate_ou(eta, series.dt)
    fit = poly_eval(alpha0, series.t)
    ss_res = float(np.sum((series.values - fit) ** 2))
    ss_tot = float(np.sum((series.values - series.values.mean()) ** 2))
    resid = np.diff(eta) - ou.slope * eta[:-1]
    counts, edges = np.histogram(resid, bins=hist_bins)
    stride = max(1, (eta.size - 1) // lag_sample)
    idx = np.arange(0, eta.size - 1, stride)[:lag_sample]
    diagnostics = {
        "r2": 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0,
        "resid_hist_counts": counts.tolist(),
        "resid_hist_edges": edges.tolist(),
        "lag1_sample": np.column_stack([eta[idx], eta[idx + 1]]).tolist(),
    }
    return CalibrationResult(alpha_init=alpha0, alpha=adj.alpha, eta_path=eta, ou=ou, adjustment=adj,
                             diagnostics=diagnostics)


def simulate_ou_path(eps: float, beta: float, n: int, seed: int, dt: float | None = None,
                     y0: float | None = None) -> np.ndarray:
    """Exact OU samples Y_0..Y_{n-1} with stationary law N(0, beta^2)."""
    dt = 1.0 / n if dt is None else dt
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    a = math.exp(-dt / eps)
    s = beta * math.sqrt(-math.expm1(-2.0 * dt / eps))
    y = np.empty(n)
    y[0] = beta * z[0] if y0 is None else y0
    # AR(1) recursion y_i = a y_{i-1} + s z_i as a linear filter
    y[1:] = lfilter([1.0], [1.0, -a], s * z[1:], zi=[a * y[0]])[0]
    return y


def synthetic_series(kappa_coeffs, eps: float, beta: float, n: int = 23400, seed: int = 0,
                     floor: float = 0.05) -> tuple[ImpactSeries, np.ndarray]:
    """kappa_i = kappa(t_i) / max(1 + Y_i, floor) with identity eta; returns (series, Y)."""
    y = simulate_ou_path(eps, beta, n, seed)
    t = np.arange(n) / n
    vals = poly_eval(kappa_coeffs, t) / np.maximum(1.0 + y, floor)
    return ImpactSeries(values=vals, t=t), y


def round_trip(eps: float, beta: float, kappa_coeffs=(1.0,), n: int = 23400, seed: int = 0, J: int = 8) -> dict:
    """Simulate, calibrate, resimulate the factor with the estimates (same seed).

    ``ks`` is the two-sample Kolmogorov-Smirnov distance between the
    generating factor path and the resimulated one.
    """
    series, y = synthetic_series(kappa_coeffs, eps, beta, n, seed)
    res = calibrate(series, J)
    y2 = simulate_ou_path(res.eps_hat, res.beta_hat, n, seed)
    ks = stats.ks_2samp(y, y2).statistic
    return {"eps_hat": res.eps_hat, "beta_hat": res.beta_hat, "ks": float(ks), "result": res}
