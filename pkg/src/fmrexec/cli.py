"""Command-line front end.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .calibrate import EstimationFailed, ImpactSeries, calibrate, fit_kappa_polynomial
from .config import ConfigError, RunConfig, load_config
from .model import ExecutionProblem, FmrError, ImpactModel, TimeGrid
from .pdeverify import PdeGrid, epsilon_scaling_study, solve_chi_pde
from .signals import StrategyTables, build_tables
from .sim import SimConfig, inventory_quantiles, savings_bps, simulate
from .strategy import Policy, PolicyKind

log = logging.getLogger("fmrexec")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class InputError(FmrError, ValueError):
    pass


# ---------------------------------------------------------------- output helpers

def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Manifest:
    """Run manifest: written before any output, then finalised with checksums."""

    def __init__(self, out: Path, command: str, config, seed=None, argv=None):
        self.path = out / "manifest.json"
        self.t0 = time.perf_counter()
        self.data = {"command": command, "code_version": __version__, "seed": seed,
                     "output_dir": str(out), "argv": list(argv or []), "config": config,
                     "status": "running", "files": []}
        self._dump()

    def _dump(self):
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True, default=_jsonable) + "\n")

    def finish(self, files: list[Path], status: str = "ok"):
        self.data["files"] = [{"name": p.name, "sha256": sha256(p)} for p in files]
        self.data["status"] = status
        self.data["runtime_s"] = time.perf_counter() - self.t0
        self._dump()


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    return str(o)


def _float_list(text: str, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"--{what}: {e}") from e
    if not vals:
        raise ConfigError(f"--{what} is empty")
    return vals


def _tag(m: float) -> str:
    return ("%g" % m).replace(".", "p").replace("+", "")


# ---------------------------------------------------------------- calibrate

def read_series(path: Path) -> ImpactSeries:
    """Single-column values or (t, value) rows; an optional non-numeric header line."""
    rows = []
    try:
        text = path.read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = [p.strip() for p in s.split(",")]
        try:
            nums = [float(p) for p in parts]
        except ValueError:
            if not rows and lineno == 1:
                continue  # header
            raise InputError(f"{path.name}: line {lineno}: cannot parse {line!r}") from None
        if len(nums) not in (1, 2) or (rows and len(nums) != len(rows[0])):
            raise InputError(f"{path.name}: line {lineno}: expected 1 or 2 columns consistently, got {len(nums)}")
        if not math.isfinite(nums[-1]) or nums[-1] <= 0:
            raise InputError(f"{path.name}: line {lineno}: impact value must be positive, got {nums[-1]}")
        rows.append(nums)
    if len(rows) < 3:
        raise InputError(f"{path.name}: need at least 3 observations")
    arr = np.array(rows)
    if arr.shape[1] == 1:
        return ImpactSeries.from_values(arr[:, 0])
    try:
        return ImpactSeries(values=arr[:, 1], t=arr[:, 0])
    except ValueError as e:
        raise InputError(f"{path.name}: {e}") from e


def cmd_calibrate(input_path: Path, order: int, out: Path, argv=None) -> int:
    out.mkdir(parents=True, exist_ok=True)
    man = Manifest(out, "calibrate", {"input": str(input_path), "order": order}, argv=argv)
    series = read_series(input_path)
    files = []
    report_path = out / "calibration.json"
    try:
        res = calibrate(series, order)
    except EstimationFailed as e:
        alpha = fit_kappa_polynomial(series, order)
        report = {"alpha": alpha.tolist(), "error": f"EstimationFailed: {e}"}
        report_path.write_text(json.dumps(report, indent=2) + "\n")
        man.finish([report_path], status="estimation_failed")
        raise
    report = {
        "alpha": res.alpha.tolist(),
        "alpha_unadjusted": res.alpha_init.tolist(),
        "mean_eta": res.adjustment.mean_eta,
        "adjust_converged": res.adjustment.converged,
        "eps_hat": res.eps_hat,
        "eps_ci": list(res.ou.eps_ci),
        "beta_hat": res.beta_hat,
        "beta_ci": list(res.ou.beta_ci),
        "slope": res.ou.slope,
        "slope_se": res.ou.slope_se,
        "resid_var": res.ou.resid_var,
        "boundary": res.ou.boundary,
        "n": series.n,
        "dt": series.dt,
        "diagnostics": res.diagnostics,
    }
    report_path.write_text(json.dumps(report, indent=2) + "\n")
    files.append(report_path)
    files.append(write_csv(out / "eta_path.csv", ["t", "eta"], zip(series.t, res.eta_path)))
    man.finish(files)
    print(f"eps_hat={res.eps_hat:.6g} ({res.ou.eps_ci[0]:.4g}, {res.ou.eps_ci[1]:.4g})  "
          f"beta_hat={res.beta_hat:.6g} ({res.ou.beta_ci[0]:.4g}, {res.ou.beta_ci[1]:.4g})")
    return EXIT_OK


# ---------------------------------------------------------------- solve

def table_columns(tables: StrategyTables):
    d = tables.problem.d
    sol = tables.riccati
    header = ["t", "chi", "chi_over_kappa", "logG"]
    cols = [tables.grid.t, sol.chi, sol.chi_over_kappa, sol.logG]
    for name, arr in (("Phi0", tables.Phi0), ("Phi1", tables.Phi1), ("Phi2", tables.Phi2)):
        for i in range(d):
            for j in range(d):
                header.append(f"{name}_{i + 1}{j + 1}")
                cols.append(arr[:, i, j])
    for i in range(d):
        header.append(f"C1_{i + 1}")
        cols.append(tables.C1[:, i])
    return header, cols


def _multiples(cfg: RunConfig, override: str | None) -> list[float]:
    if override:
        return _float_list(override, "phi-multiples")
    if cfg.phi_multiples:
        return list(cfg.phi_multiples)
    return [cfg.problem.phi / cfg.problem.b]


def cmd_solve(config: Path, out: Path, phi_multiples: str | None = None, argv=None) -> int:
    cfg = load_config(config)
    mults = _multiples(cfg, phi_multiples)
    out.mkdir(parents=True, exist_ok=True)
    man = Manifest(out, "solve", cfg.raw | {"resolved_phi_multiples": mults}, argv=argv)
    files = []
    grid = TimeGrid(cfg.numerics.table_steps, cfg.problem.T)
    for m in mults:
        tables = build_tables(cfg.problem_for(m), cfg.impact, cfg.signal, grid)
        header, cols = table_columns(tables)
        files.append(write_csv(out / f"tables_phi_{_tag(m)}b.csv", header, zip(*cols)))
    man.finish(files)
    return EXIT_OK


# ---------------------------------------------------------------- simulate / compare

def _policies(text: str) -> list[Policy]:
    try:
        return [Policy.parse(p) for p in text.split(",") if p.strip()]
    except ValueError as e:
        raise ConfigError(f"--policies: {e}") from e


def _sim_cfg(cfg: RunConfig, policy: Policy, n_paths: int, seed: int, workers: int | None,
             stride: int | None) -> SimConfig:
    return SimConfig(n_paths=n_paths, n_steps=cfg.numerics.sim_steps, seed=seed, policy=policy,
                     store_stride=stride, workers=workers or cfg.numerics.workers,
                     chunk_size=cfg.numerics.chunk_size)


def cmd_simulate(config: Path, out: Path, policy: str, n_paths: int, seed: int, workers: int | None = None,
                 phi_multiples: str | None = None, stride: int | None = None, argv=None) -> int:
    cfg = load_config(config)
    pols = _policies(policy)
    mults = _multiples(cfg, phi_multiples)
    out.mkdir(parents=True, exist_ok=True)
    man = Manifest(out, "simulate", cfg.raw, seed=seed, argv=argv)
    files = []
    d = cfg.problem.d
    term_rows, path_rows = [], []
    grid = TimeGrid(cfg.numerics.table_steps, cfg.problem.T)
    for m in mults:
        prob = cfg.problem_for(m)
        tables = build_tables(prob, cfg.impact, cfg.signal, grid)
        for pol in pols:
            b = simulate(prob, cfg.impact, cfg.signal, tables, _sim_cfg(cfg, pol, n_paths, seed, workers, stride))
            for k in range(b.n_paths):
                term_rows.append([pol.name, m, k, b.X_T[k], b.Q_T[k], b.S_T[k], b.cost[k], b.reduced_cost[k]])
            if b.paths is not None:
                P = b.paths
                for k in range(b.n_paths):
                    for j, t in enumerate(b.t_store):
                        path_rows.append([pol.name, m, k, t, P["S"][k, j], P["X"][k, j], P["Q"][k, j],
                                          P["nu"][k, j], *P["mu"][k, j], P["Y"][k, j]])
    files.append(write_csv(out / "terminal.csv",
                           ["policy", "phi_multiple", "path_id", "X_T", "Q_T", "S_T", "cost", "reduced_cost"],
                           term_rows))
    if path_rows:
        files.append(write_csv(out / "paths.csv",
                               ["policy", "phi_multiple", "path_id", "t", "S", "X", "Q", "nu",
                                *[f"mu_{i + 1}" for i in range(d)], "Y"], path_rows))
    man.finish(files)
    return EXIT_OK


def cmd_compare(config: Path, out: Path, policies: str, n_paths: int, seed: int, workers: int | None = None,
                phi_multiples: str | None = None, argv=None) -> int:
    cfg = load_config(config)
    pols = _policies(policies)
    if len(pols) < 2:
        raise ConfigError("--policies needs at least two policies")
    mults = _multiples(cfg, phi_multiples)
    out.mkdir(parents=True, exist_ok=True)
    man = Manifest(out, "compare", cfg.raw, seed=seed, argv=argv)
    stride = cfg.numerics.store_stride
    grid = TimeGrid(cfg.numerics.table_steps, cfg.problem.T)
    summary, qrows, hrows = [], [], []
    for m in mults:
        prob = cfg.problem_for(m)
        tables = build_tables(prob, cfg.impact, cfg.signal, grid)
        batches = [simulate(prob, cfg.impact, cfg.signal, tables, _sim_cfg(cfg, p, n_paths, seed, workers, stride))
                   for p in pols]
        bench = {}
        for p, b in zip(pols, batches):
            if p.kind in (PolicyKind.AC, PolicyKind.TS) and p.kind not in bench:
                bench[p.kind] = b
        for p, b in zip(pols, batches):
            med = {}
            for kind, ref in bench.items():
                s = savings_bps(b, ref)
                med[kind] = s.median
                if ref is not b:
                    for lo, hi, c in zip(s.bin_edges[:-1], s.bin_edges[1:], s.counts):
                        hrows.append([m, p.name, kind.value, lo, hi, c])
                    t, q = inventory_quantiles(b, ref)
                    for li, lev in enumerate((0.1, 0.5, 0.9)):
                        for tj, v in zip(t, q[li]):
                            qrows.append([m, p.name, kind.value, tj, lev, v])
            qT = np.quantile(b.Q_T, [0.1, 0.5, 0.9])
            summary.append([p.name, m * prob.b, m, float(np.mean(b.cost)),
                            med.get(PolicyKind.AC, math.nan), med.get(PolicyKind.TS, math.nan), *qT])
            log.info("phi=%gb %s mean cost %.6f", m, p.name, float(np.mean(b.cost)))
    files = [
        write_csv(out / "summary.csv", ["policy", "phi", "phi_multiple", "mean_cost", "median_bps_vs_AC",
                                        "median_bps_vs_TS", "q10_QT", "q50_QT", "q90_QT"], summary),
        write_csv(out / "quantiles.csv", ["phi_multiple", "policy", "benchmark", "t", "level", "deviation"], qrows),
        write_csv(out / "bps_histogram.csv", ["phi_multiple", "policy", "benchmark", "bin_lo", "bin_hi", "count"],
                  hrows),
    ]
    man.finish(files)
    for row in summary:
        print(f"{row[0]:>16s} phi={row[2]:g}b  mean_cost={row[3]:.6f}  bps_vs_AC={row[4]:.4g}  bps_vs_TS={row[5]:.4g}")
    return EXIT_OK


# ---------------------------------------------------------------- verify-accuracy

def accuracy_verdict(rows) -> str:
    if all(r.sup_error < 1e-6 for r in rows):
        return "PASS"
    if len(rows) < 3:
        return "INCONCLUSIVE"
    r1, r2 = rows[-2].ratio, rows[-1].ratio
    c1, c2 = rows[-2].C_hat, rows[-1].C_hat
    ok = all(0.35 <= r <= 0.65 for r in (r1, r2)) and abs(c1 - c2) / max(c1, c2) < 0.5
    return "PASS" if ok else "FAIL"


def cmd_verify_accuracy(config: Path | None, out: Path, eps: str | None = None, dump_field: bool = False,
                        argv=None) -> int:
    if config is not None:
        loaded = load_config(config)
        pde, raw = loaded.pde, loaded.raw
    else:
        from .config import PdeSettings
        pde, raw = PdeSettings(), {}
    eps_list = _float_list(eps, "eps") if eps else list(pde.eps)
    if any(e <= 0 for e in eps_list):
        raise ConfigError("--eps values must be positive")
    if len(eps_list) < 2:
        warnings.warn("a single eps gives no convergence ratio", stacklevel=2)
    out.mkdir(parents=True, exist_ok=True)
    man = Manifest(out, "verify-accuracy", raw | {"resolved_eps": eps_list}, argv=argv)
    try:
        problem = ExecutionProblem(gamma=[0.0], b=pde.b, sigma=0.0, phi=pde.phi, varphi=pde.terminal + pde.b / 2,
                                   mu0=[0.0])
        impact = ImpactModel(kappa=list(pde.kappa), eta_kind="scaled_tanh", eps=eps_list[0], beta_param=pde.beta,
                             eta_a=pde.a)
    except ValueError as e:
        raise ConfigError(f"[pde]: {e}") from e
    grid = PdeGrid(M=pde.M, L=pde.L, steps_per_eps=pde.steps_per_eps)
    rows = epsilon_scaling_study(problem, impact, eps_list, grid)
    files = [write_csv(out / "accuracy.csv", ["eps", "sup_error", "ratio", "C_hat"],
                       [[r.eps, r.sup_error, r.ratio, r.C_hat] for r in rows])]
    if dump_field:
        e = eps_list[-1]
        sol = solve_chi_pde(problem, impact.replace(eps=e),
                            PdeGrid(M=pde.M, L=pde.L, steps_per_eps=pde.steps_per_eps,
                                    store_stride=max(1, int(round(pde.steps_per_eps / e)) // 50)))
        frows = ([t, y, v] for t, row in zip(sol.t_store, sol.values) for y, v in zip(sol.y, row))
        files.append(write_csv(out / "field.csv", ["t", "y", "chi_eps"], frows))
    man.finish(files)
    verdict = accuracy_verdict(rows)
    for r in rows:
        print(f"eps={r.eps:<8g} sup_error={r.sup_error:.6e} ratio={r.ratio:.4f} C_hat={r.C_hat:.4f}")
    print(verdict)
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fmrexec", description="Optimal execution with a fast mean-reverting impact factor")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("calibrate", help="fit the impact curve and the fast factor from a per-second series")
    c.add_argument("--input", required=True, type=Path)
    c.add_argument("--order", type=int, default=8)
    c.add_argument("--out", required=True, type=Path)

    s = sub.add_parser("solve", help="write strategy tables for each phi multiple")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--phi-multiples")

    for name, helptext in (("simulate", "simulate one or more policies"),
                           ("compare", "coupled comparison of policies")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--policies", default="AC,TS,FirstOrder" if name == "compare" else "FirstOrder")
        p.add_argument("--paths", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int)
        p.add_argument("--phi-multiples")
        if name == "simulate":
            p.add_argument("--stride", type=int, help="store every stride-th step in paths.csv")

    v = sub.add_parser("verify-accuracy", help="eps-scaling study of the Riccati PDE")
    v.add_argument("--config", type=Path)
    v.add_argument("--out", required=True, type=Path)
    v.add_argument("--eps")
    v.add_argument("--dump-field", action="store_true")
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "calibrate":
            return cmd_calibrate(args.input, args.order, args.out, argv)
        if args.command == "solve":
            return cmd_solve(args.config, args.out, args.phi_multiples, argv)
        if args.command in ("simulate", "compare"):
            if args.paths < 1:
                raise ConfigError("--paths must be >= 1")
            if args.workers is not None and args.workers < 1:
                raise ConfigError("--workers must be >= 1")
            if args.command == "simulate":
                return cmd_simulate(args.config, args.out, args.policies, args.paths, args.seed, args.workers,
                                    args.phi_multiples, args.stride, argv)
            return cmd_compare(args.config, args.out, args.policies, args.paths, args.seed, args.workers,
                               args.phi_multiples, argv)
        return cmd_verify_accuracy(args.config, args.out, args.eps, args.dump_field, argv)
    except (ConfigError, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FmrError as e:
        print(f"numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
