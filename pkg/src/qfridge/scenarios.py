"""Scenario execution and CSV output.

Each scenario splits into independent sweep points computed by a pure
worker function. Points may run in a process pool; results are always
collected in sweep order, so serial and parallel runs write identical files.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .baths import spectral
from .config import ScenarioConfig
from .dynamics import (
    DensityState, DriveSpec, DrivenCoefficients, NumericalError, cycle_converged_power,
    cycle_propagator, evolve_populations, periodic_limit, steady_state,
)
from .model import SystemConfig, eigensystem
from .observables import instantaneous_power, single_qubit_power_reference
from .rates import oracle_rate_set, rate_set

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

COLUMNS = {
    "rates": ["chi", "q", "matrix", "k", "l", "rate", "oracle_rate"],
    "spectrum": ["w", "s_cold", "s_hot"],
    "steady": ["chi", "q", "rho11", "rho22", "rho33", "rho44", "p_cold", "p_hot", "p_cold_norm"],
    "relax": ["chi", "gamma_t", "rho11", "rho22", "rho33", "rho44", "p_cold", "p_cold_norm"],
    "drive": ["chi", "omega", "p_cold", "p_hot", "converged", "n_cycles", "p_cold_limit",
              "p_hot_limit", "method", "n_steps"],
}


@dataclass
class ScenarioResult:
    scenario: str
    rows: list
    files: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_NUMERIC if self.failures else EXIT_OK

    def column(self, name):
        i = COLUMNS[self.scenario].index(name)
        return [r[i] for r in self.rows]


def fmt(value) -> str:
    """Shortest round-trip text for floats; plain text for everything else."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if v == 0.0:
            return "0.0"
        return repr(v)
    return str(value)


# ---------------------------------------------------------------------------
# Sweep-point workers (module level so they pickle)
# ---------------------------------------------------------------------------

def _rates_point(cfg: ScenarioConfig, chi: float, q: float):
    closed = rate_set(q, cfg.delta, cfg.g, chi, cfg.baths)
    oracle = oracle_rate_set(q, cfg.delta, cfg.g, chi, cfg.baths)
    rows = []
    mats = [("cold", closed.per_bath["cold"], oracle.per_bath["cold"]),
            ("hot", closed.per_bath["hot"], oracle.per_bath["hot"]),
            ("total", closed.total_generator, oracle.total_generator)]
    for name, m, o in mats:
        for k in range(4):
            for l in range(4):
                rows.append([chi, q, name, k + 1, l + 1, m[k, l], o[k, l]])
    return rows, None


def _steady_point(cfg: ScenarioConfig, chi: float, q: float):
    rs = rate_set(q, cfg.delta, cfg.g, chi, cfg.baths)
    pops = steady_state(rs.total_generator, chi, cfg.init)
    lam = eigensystem(q, cfg.delta).lambdas
    pc = float(instantaneous_power(pops, rs.per_bath["cold"], lam))
    ph = float(instantaneous_power(pops, rs.per_bath["hot"], lam))
    p0 = single_qubit_power_reference(q, cfg.delta, cfg.g, cfg.baths)
    norm = pc / (2.0 * p0) if p0 != 0 else float("nan")
    return [[chi, q, *pops, pc, ph, norm]], None


def _relax_point(cfg: ScenarioConfig, chi: float):
    q = cfg.q
    rs = rate_set(q, cfg.delta, cfg.g, chi, cfg.baths)
    gamma_t = np.asarray(cfg.grid)
    pops = evolve_populations(rs.total_generator, cfg.init, gamma_t / rs.gamma_down_total)
    lam = eigensystem(q, cfg.delta).lambdas
    pc = instantaneous_power(pops, rs.per_bath["cold"], lam)
    p0 = single_qubit_power_reference(q, cfg.delta, cfg.g, cfg.baths)
    norm = pc / (2.0 * p0) if p0 != 0 else np.full_like(pc, np.nan)
    rows = [[chi, gt, *p, c, n] for gt, p, c, n in zip(gamma_t, pops, pc, norm)]
    return rows, None


def drive_point(cfg: ScenarioConfig, chi: float, omega: float):
    """One (chi, Omega) point: cycle-to-cycle convergence protocol plus the exact periodic limit."""
    system = SystemConfig(delta=cfg.delta, g=cfg.g, chi=chi)
    num = cfg.numerics
    drive = DriveSpec(omega=omega, n_cycles_max=num.n_cycles_max, cycle_tol=num.cycle_tol)
    rho0 = DensityState.from_populations(cfg.init)
    try:
        res = cycle_converged_power(system, cfg.baths, drive, rho0,
                                    max_refinements=num.max_refinements)
        coef = DrivenCoefficients(system, cfg.baths, omega)
        prop = cycle_propagator(coef, res.n_steps, res.method)
        v = periodic_limit(prop, rho0.rho.ravel())
        pcl = float(np.real(prop.power_rows["cold"] @ v))
        phl = float(np.real(prop.power_rows["hot"] @ v))
    except NumericalError as exc:
        nan = float("nan")
        return [[chi, omega, nan, nan, False, 0, nan, nan, "failed", 0]], str(exc)
    row = [chi, omega, res.p_cold, res.p_hot, res.converged, res.n_cycles, pcl, phl,
           res.method, res.n_steps]
    failure = None if res.converged else (
        f"chi={chi} omega={omega}: not converged after {res.n_cycles} cycles "
        f"(last two averages {res.last_two[0]!r}, {res.last_two[-1]!r})"
    )
    return [row], failure


def _spectrum_point(cfg: ScenarioConfig, w: float):
    return [[w, spectral(cfg.cold, w), spectral(cfg.hot, w)]], None


def _tasks(cfg: ScenarioConfig):
    s = cfg.scenario
    if s == "rates":
        return _rates_point, [(cfg, c, q) for c in cfg.chi for q in cfg.grid]
    if s == "steady":
        return _steady_point, [(cfg, c, q) for c in cfg.chi for q in cfg.grid]
    if s == "relax":
        return _relax_point, [(cfg, c) for c in cfg.chi]
    if s == "drive":
        return drive_point, [(cfg, c, w) for c in cfg.chi for w in cfg.grid]
    if s == "spectrum":
        return _spectrum_point, [(cfg, w) for w in cfg.grid]
    raise ValueError(f"unknown scenario {s!r}")


def _call(args):
    fn, a = args
    return fn(*a)


def compute(cfg: ScenarioConfig, jobs: int = 1) -> ScenarioResult:
    fn, tasks = _tasks(cfg)
    work = [(fn, t) for t in tasks]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_call, work))
    else:
        results = [_call(w) for w in work]
    rows, failures = [], []
    for r, fail in results:
        rows.extend(r)
        if fail:
            failures.append(fail)
    return ScenarioResult(scenario=cfg.scenario, rows=rows, failures=failures)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def write_csv(path: Path, cfg: ScenarioConfig, result: ScenarioResult, source: str):
    lines = [
        f"# qfridge {__version__}",
        f"# scenario: {cfg.scenario}",
        f"# source: {source}",
        f"# config: {cfg.to_json()}",
    ]
    for fail in result.failures:
        lines.append(f"# numerical-failure: {fail}")
    lines.append(",".join(COLUMNS[cfg.scenario]))
    lines.extend(",".join(fmt(v) for v in row) for row in result.rows)
    with path.open("w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Return (metadata lines, rows as dicts of strings)."""
    meta, rows, header = [], [], None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            meta.append(line)
        elif header is None:
            header = line.split(",")
        else:
            rows.append(dict(zip(header, line.split(","))))
    return meta, rows


def run_scenario(cfg: ScenarioConfig, out_dir=None, jobs: int = 1, plot=None,
                 source: str = "<config>") -> ScenarioResult:
    """Compute a scenario and write ``<scenario>.csv``, ``manifest.json`` and plots."""
    out = Path(out_dir or cfg.output_dir or f"qfridge-out/{cfg.scenario}")
    out.mkdir(parents=True, exist_ok=True)
    result = compute(cfg, jobs=jobs)
    csv_path = out / f"{cfg.scenario}.csv"
    write_csv(csv_path, cfg, result, source)
    result.files.append(str(csv_path))
    if cfg.plot if plot is None else plot:
        from .plotting import plot_result

        result.files.extend(str(p) for p in plot_result(cfg, result, out))
    manifest = {
        "tool": "qfridge",
        "version": __version__,
        "source": source,
        "scenario": cfg.scenario,
        "config": cfg.to_dict(),
        "outputs": sorted(Path(f).name for f in result.files),
        "failures": result.failures,
        "exit_code": result.exit_code,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for fail in result.failures:
        log.warning("numerical failure: %s", fail)
    return result
