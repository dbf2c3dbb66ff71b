"""JSON run configuration -> model dataclasses.

Sections: ``problem``, ``impact``, ``signal`` (required); ``sweep``,
``numerics``, ``pde`` (optional). Any unknown or ill-typed key raises
ConfigError naming the dotted key.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .model import ExecutionProblem, FmrError, ImpactModel, NotPositiveDefinite, SignalModel


class ConfigError(FmrError, ValueError):
    pass


_PROBLEM = {"gamma", "b", "sigma", "phi", "varphi", "T", "S0", "X0", "Q0", "mu0"}
_IMPACT = {"kappa", "eta_kind", "eps", "beta_param", "eta_clamp", "eta_a"}
_SIGNAL = {"A", "B", "mu_bar", "rho"}
_SWEEP = {"phi_multiples"}
_NUMERICS = {"table_steps", "sim_steps", "store_stride", "chunk_size", "workers"}
_PDE = {"kappa", "phi", "terminal", "b", "a", "beta", "M", "L", "steps_per_eps", "eps"}


@dataclass(frozen=True)
class Numerics:
    table_steps: int = 10_000
    sim_steps: int = 23_400
    store_stride: int = 60
    chunk_size: int = 1024
    workers: int = 1


@dataclass(frozen=True)
class PdeSettings:
    kappa: tuple = (1.0,)
    phi: float = 1.0
    terminal: float = 1.0      # varphi - b/2
    b: float = 1e-3
    a: float = 0.5
    beta: float = 0.27
    M: int = 400
    L: float | None = None
    steps_per_eps: float = 200.0
    eps: tuple = (0.2, 0.1, 0.05, 0.025)


@dataclass(frozen=True)
class RunConfig:
    problem: ExecutionProblem
    impact: ImpactModel
    signal: SignalModel
    phi_multiples: tuple = ()
    numerics: Numerics = field(default_factory=Numerics)
    pde: PdeSettings = field(default_factory=PdeSettings)
    raw: dict = field(default_factory=dict)

    def problem_for(self, phi_multiple: float) -> ExecutionProblem:
        return self.problem.replace(phi=phi_multiple * self.problem.b)


def _section(tree: dict, name: str, allowed: set, required: bool) -> dict:
    if name not in tree:
        if required:
            raise ConfigError(f"missing [{name}] section")
        return {}
    sec = tree[name]
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be an object")
    for k in sec:
        if k not in allowed:
            raise ConfigError(f"unknown key {name}.{k}")
    return sec


def _build(name: str, factory, kwargs: dict):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return factory(**kwargs)
    except NotPositiveDefinite as e:
        raise ConfigError(f"[{name}]: {e}") from e
    except (TypeError, ValueError) as e:
        raise ConfigError(f"[{name}]: {e}") from e


def _typed(sec: dict, name: str, key: str, kind):
    try:
        return kind(sec[key])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{name}.{key}: {e}") from e


def load_config(source) -> RunConfig:
    """Load from a path or an already-parsed dict."""
    if isinstance(source, (str, Path)):
        try:
            tree = json.loads(Path(source).read_text())
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON (line {e.lineno}): {e.msg}") from e
    else:
        tree = dict(source)
    if not isinstance(tree, dict):
        raise ConfigError("config root must be an object")
    for k in tree:
        if k not in {"problem", "impact", "signal", "sweep", "numerics", "pde"}:
            raise ConfigError(f"unknown section {k}")
    p = _section(tree, "problem", _PROBLEM, True)
    i = _section(tree, "impact", _IMPACT, True)
    s = _section(tree, "signal", _SIGNAL, True)
    for sec, name, req in ((p, "problem", ("gamma", "b", "sigma", "phi", "varphi")),
                           (i, "impact", ("kappa",)), (s, "signal", ("A", "B", "mu_bar", "rho"))):
        for k in req:
            if k not in sec:
                raise ConfigError(f"missing key {name}.{k}")
    problem = _build("problem", ExecutionProblem, p)
    impact = _build("impact", ImpactModel, i)
    signal = _build("signal", SignalModel, s)
    if signal.d != problem.d:
        raise ConfigError("signal.A dimension does not match problem.gamma")
    sw = _section(tree, "sweep", _SWEEP, False)
    mults = ()
    if "phi_multiples" in sw:
        try:
            mults = tuple(float(m) for m in sw["phi_multiples"])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"sweep.phi_multiples: {e}") from e
        if any(m < 0 for m in mults):
            raise ConfigError("sweep.phi_multiples must be nonnegative")
    nu = _section(tree, "numerics", _NUMERICS, False)
    numerics = Numerics(**{k: _typed(nu, "numerics", k, int) for k in nu})
    for k in ("table_steps", "sim_steps", "store_stride", "chunk_size", "workers"):
        if getattr(numerics, k) < 1:
            raise ConfigError(f"numerics.{k} must be >= 1")
    pd = _section(tree, "pde", _PDE, False)
    pkw = {}
    for k, v in pd.items():
        if k in ("kappa", "eps"):
            try:
                pkw[k] = tuple(float(x) for x in (v if isinstance(v, list) else [v]))
            except (TypeError, ValueError) as e:
                raise ConfigError(f"pde.{k}: {e}") from e
        elif k == "M":
            pkw[k] = _typed(pd, "pde", k, int)
        elif k == "L" and v is None:
            pkw[k] = None
        else:
            pkw[k] = _typed(pd, "pde", k, float)
    return RunConfig(problem=problem, impact=impact, signal=signal, phi_multiples=mults,
                     numerics=numerics, pde=PdeSettings(**pkw), raw=tree)
