"""Command-line driver: `maxhom {cell,maxwell,converge} --config FILE`.

The configuration is an INI file with sections [lattice], [grid], [eta],
[mu], [solver], [maxwell], [converge], [output]; all quantities are
dimensionless.  Exit codes: 0 success, 1 solver failure, 2 malformed
configuration or violated precondition.  All randomness is seeded from the
configuration, so reruns with the same file and worker count reproduce the
JSON and CSV artifacts byte for byte apart from the recorded runtimes.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import fields
from .cell import cell_identity_slacks, solve_scalar_cell, solve_vector_cell
from .fields import write_field, harmonic_mean_matrix, arithmetic_mean_matrix
from .harness import (
    CoefficientDescriptor,
    InvalidParams,
    StudyConfig,
    convergence_study,
    generate_coefficient,
    random_divfree_field,
    report_to_csv,
    report_to_json,
)
from .lattice import DegenerateBasis, GridSpec, GridError, make_lattice
from .maxwell import TORUS_REGIME_NOTE, make_problem, run_maxwell
from .solvers import NoConvergence

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_COEF_SECTIONS = ("eta", "mu")


@dataclasses.dataclass
class RunConfig:
    basis: list
    grid_n: tuple
    eta: CoefficientDescriptor
    mu: CoefficientDescriptor
    tol: float = 1e-9
    maxiter: int = 20000
    workers: int = 1
    eps: float = 0.25
    branch: str = "both"
    source_seed: int = 7
    source_max_mode: int = 8
    source_decay: float = 0.5
    first_order: bool = False
    eps_list: tuple = (0.5, 0.25, 0.125)
    out_dir: str = "out"

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["lattice"] = {"basis": "; ".join(
            " ".join(f"{v:.17g}" for v in row)
            for row in np.asarray(self.basis, dtype=float).reshape(3, 3))}
        cp["grid"] = {"n": " ".join(str(v) for v in self.grid_n)}
        for name in _COEF_SECTIONS:
            d: CoefficientDescriptor = getattr(self, name)
            sec = {"kind": d.kind, "seed": str(d.seed)}
            for k, v in d.params.items():
                if isinstance(v, (list, tuple, np.ndarray)):
                    sec[k] = " ".join(f"{x:.17g}" if isinstance(x, float) else str(x)
                                      for x in v)
                else:
                    sec[k] = f"{v:.17g}" if isinstance(v, float) else str(v)
            cp[name] = sec
        cp["solver"] = {"tol": f"{self.tol:.17g}", "maxiter": str(self.maxiter),
                        "workers": str(self.workers)}
        cp["maxwell"] = {
            "eps": f"{self.eps:.17g}", "branch": self.branch,
            "source_seed": str(self.source_seed),
            "source_max_mode": str(self.source_max_mode),
            "source_decay": f"{self.source_decay:.17g}",
            "first_order": str(self.first_order).lower(),
        }
        cp["converge"] = {"eps_list": " ".join(f"{e:.17g}" for e in self.eps_list)}
        cp["output"] = {"dir": self.out_dir}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _get(cp, section, key, conv, default=None):
    if not cp.has_section(section):
        if default is not None:
            return default
        raise ConfigError(f"missing section [{section}]")
    if not cp.has_option(section, key):
        if default is not None:
            return default
        raise ConfigError(f"missing key '{key}' in section [{section}]")
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r} ({exc})")


def _parse_floats(raw: str) -> list:
    return [float(v) for v in raw.split()]


def _parse_ints(raw: str) -> list:
    return [int(v) for v in raw.split()]


def _parse_bool(raw: str) -> bool:
    lower = raw.strip().lower()
    if lower in ("true", "1", "yes", "on"):
        return True
    if lower in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


_COEF_PARAM_TYPES = {
    "value": float, "alpha": float, "beta": float, "fill": float,
    "width": float, "axis": int, "base": "floats", "amplitude": float,
    "mode": int, "modes": "ints", "axes": "ints",
}


def _parse_descriptor(cp, section) -> CoefficientDescriptor:
    kind = _get(cp, section, "kind", str)
    seed = _get(cp, section, "seed", int, default=0)
    params = {}
    for key in cp[section]:
        if key in ("kind", "seed"):
            continue
        typ = _COEF_PARAM_TYPES.get(key)
        if typ is None:
            raise ConfigError(f"unknown key '{key}' in section [{section}]")
        if typ == "floats":
            val = _get(cp, section, key, _parse_floats)
            if len(val) == 1:
                val = val[0]
        elif typ == "ints":
            val = _get(cp, section, key, _parse_ints)
        else:
            val = _get(cp, section, key, typ)
        params[key] = val
    return CoefficientDescriptor(kind=kind, params=params, seed=seed)


def parse_config(path) -> RunConfig:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    basis_raw = _get(cp, "lattice", "basis", str)
    rows = [r for r in basis_raw.split(";") if r.strip()]
    if len(rows) != 3:
        raise ConfigError(f"[lattice] basis needs 3 rows separated by ';', got {len(rows)}")
    basis = [_parse_floats(r) for r in rows]
    if any(len(r) != 3 for r in basis):
        raise ConfigError("[lattice] basis rows must have 3 entries")
    grid_n = tuple(_get(cp, "grid", "n", _parse_ints))
    if len(grid_n) != 3:
        raise ConfigError("[grid] n needs three integers")
    eta = _parse_descriptor(cp, "eta")
    mu = _parse_descriptor(cp, "mu")
    branch = _get(cp, "maxwell", "branch", str, default="both")
    if branch not in ("r", "q", "both"):
        raise ConfigError(f"bad value for [maxwell] branch: {branch!r}")
    return RunConfig(
        basis=basis,
        grid_n=grid_n,
        eta=eta,
        mu=mu,
        tol=_get(cp, "solver", "tol", float, default=1e-9),
        maxiter=_get(cp, "solver", "maxiter", int, default=20000),
        workers=_get(cp, "solver", "workers", int, default=1),
        eps=_get(cp, "maxwell", "eps", float, default=0.25),
        branch=branch,
        source_seed=_get(cp, "maxwell", "source_seed", int, default=7),
        source_max_mode=_get(cp, "maxwell", "source_max_mode", int, default=8),
        source_decay=_get(cp, "maxwell", "source_decay", float, default=0.5),
        first_order=_get(cp, "maxwell", "first_order", _parse_bool, default=False),
        eps_list=tuple(_get(cp, "converge", "eps_list", _parse_floats,
                            default=[0.5, 0.25, 0.125])),
        out_dir=_get(cp, "output", "dir", str, default="out"),
    )


def _json_dump(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2,
                               default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _setup(cfg: RunConfig, out_override, workers, tol):
    if workers is not None:
        cfg.workers = workers
    if tol is not None:
        cfg.tol = tol
    if out_override is not None:
        cfg.out_dir = out_override
    fields.set_fft_workers(cfg.workers)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lattice = make_lattice(cfg.basis)
    grid = GridSpec(cfg.grid_n, lattice)
    return out, lattice, grid


def _lattice_payload(lattice, grid) -> dict:
    return {
        "basis": lattice.basis.tolist(),
        "dual": lattice.dual.tolist(),
        "cell_volume": lattice.cell_volume,
        "r0": lattice.r0,
        "r1": lattice.r1,
        "grid_n": list(grid.n),
    }


def cmd_cell(cfg: RunConfig, out_override=None, workers=None, tol=None) -> int:
    t0 = time.perf_counter()
    out, lattice, grid = _setup(cfg, out_override, workers, tol)
    payload = {"lattice": _lattice_payload(lattice, grid),
               "tol": cfg.tol, "regime": TORUS_REGIME_NOTE}
    for name in _COEF_SECTIONS:
        desc = getattr(cfg, name)
        coef = generate_coefficient(desc, grid)
        cell = solve_scalar_cell(coef, tol=cfg.tol, maxiter=cfg.maxiter)
        slacks = cell_identity_slacks(cell)
        payload[name] = {
            "descriptor": desc.as_dict(),
            "effective": cell.effective.tolist(),
            "harmonic_mean": harmonic_mean_matrix(coef).tolist(),
            "arithmetic_mean": np.real(arithmetic_mean_matrix(coef)).tolist(),
            "ess_bounds": [coef.ess_lower, coef.ess_upper],
            "voigt_reuss_eigs": {
                "harmonic": np.linalg.eigvalsh(harmonic_mean_matrix(coef)).tolist(),
                "effective": np.linalg.eigvalsh(cell.effective).tolist(),
                "arithmetic": np.linalg.eigvalsh(
                    np.real(arithmetic_mean_matrix(coef))).tolist(),
            },
            "residuals": cell.residuals.tolist(),
            "iterations": list(cell.iterations),
            "identity_slacks": slacks,
        }
        for fname, f in (("Y", cell.Y), ("G", cell.G), ("tilde", cell.tilde),
                         ("Wstar", cell.Wstar)):
            write_field(out / f"{name}_{fname}.mxhf", f)
    payload["runtime_s"] = time.perf_counter() - t0
    _json_dump(out / "effective.json", payload)
    return EXIT_OK


def _maxwell_precondition(cfg: RunConfig, grid) -> int:
    n = int(round(1.0 / cfg.eps))
    if abs(n * cfg.eps - 1.0) > 1e-12 or n < 1:
        raise ConfigError(f"[maxwell] eps must be 1/n for integer n, got {cfg.eps}")
    if any(nk % n for nk in grid.n):
        raise ConfigError(
            f"[maxwell] eps = 1/{n} does not divide grid n = {grid.n}")
    return n


def cmd_maxwell(cfg: RunConfig, out_override=None, workers=None, tol=None) -> int:
    t0 = time.perf_counter()
    out, lattice, grid = _setup(cfg, out_override, workers, tol)
    n = _maxwell_precondition(cfg, grid)
    eta = generate_coefficient(cfg.eta, grid)
    mu = generate_coefficient(cfg.mu, grid)
    cell_eta = solve_scalar_cell(eta, tol=cfg.tol, maxiter=cfg.maxiter)
    cell_mu = solve_scalar_cell(mu, tol=cfg.tol, maxiter=cfg.maxiter)
    q = r = None
    if cfg.branch in ("q", "both"):
        q = random_divfree_field(grid, cfg.source_max_mode, cfg.source_seed,
                                 cfg.source_decay)
    if cfg.branch in ("r", "both"):
        r = random_divfree_field(grid, cfg.source_max_mode, cfg.source_seed + 1,
                                 cfg.source_decay)
    problem = make_problem(eta, mu, n, grid, q=q, r=r)
    correctors = None
    if cfg.first_order:
        correctors = {
            b: solve_vector_cell(cell_eta, cell_mu, b, tol=cfg.tol,
                                 maxiter=cfg.maxiter)
            for b in problem.branches(cfg.branch)
        }
    sol = run_maxwell(problem, cell_eta, cell_mu, branch=cfg.branch,
                      tol=cfg.tol, maxiter=cfg.maxiter, correctors=correctors)

    payload = {
        "lattice": _lattice_payload(lattice, grid),
        "eps": problem.eps,
        "branch": cfg.branch,
        "branches_run": sol.branches,
        "tol": cfg.tol,
        "eta": cfg.eta.as_dict(),
        "mu": cfg.mu.as_dict(),
        "source_seed": cfg.source_seed,
        "effective": {"eta0": cell_eta.effective.tolist(),
                      "mu0": cell_mu.effective.tolist()},
        "errors": sol.errors,
        "rel_errors": sol.rel_errors,
        "correction_means": sol.correction_means(),
        "diagnostics": sol.diagnostics,
        "regime": TORUS_REGIME_NOTE,
    }
    for name, f in sol.fields.items():
        write_field(out / f"{name}.mxhf", f)
    for b, f in sol.phi.items():
        write_field(out / f"phi_{b}.mxhf", f)
    for b, f in sol.phi0.items():
        write_field(out / f"phi0_{b}.mxhf", f)
    payload["runtime_s"] = time.perf_counter() - t0
    _json_dump(out / "maxwell_run.json", payload)
    return EXIT_OK


def cmd_converge(cfg: RunConfig, out_override=None, workers=None, tol=None) -> int:
    out, lattice, grid = _setup(cfg, out_override, workers, tol)
    study = StudyConfig(
        basis=cfg.basis, grid_n=cfg.grid_n, eta=cfg.eta, mu=cfg.mu,
        eps_list=list(cfg.eps_list), tol=cfg.tol, branch=cfg.branch,
        source_seed=cfg.source_seed, source_max_mode=cfg.source_max_mode,
        source_decay=cfg.source_decay, workers=cfg.workers,
    )
    try:
        report = convergence_study(study)
    except InvalidParams as exc:
        raise ConfigError(str(exc))
    (out / "converge.json").write_text(report_to_json(report))
    (out / "converge.csv").write_text(report_to_csv(report))
    return EXIT_SOLVER if report.partial else EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="maxhom",
        description="periodic Maxwell homogenization toolkit (torus pipeline)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("cell", "solve the cell problems, write effective.json"),
        ("maxwell", "one full pipeline run at a single eps"),
        ("converge", "convergence study over eps_list"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="INI configuration file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--workers", type=int, default=None, help="FFT workers")
        p.add_argument("--tol", type=float, default=None, help="solver tolerance")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        cmd = {"cell": cmd_cell, "maxwell": cmd_maxwell, "converge": cmd_converge}
        return cmd[args.command](cfg, args.out, args.workers, args.tol)
    except (ConfigError, InvalidParams, DegenerateBasis, GridError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoConvergence as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
