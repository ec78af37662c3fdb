"""End-to-end acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""
import time

import numpy as np
import pytest

from qfridge.baths import Bath
from qfridge.cli import main
from qfridge.config import list_presets
from qfridge.dynamics import (
    DensityState, DriveSpec, evolve_driven, evolve_populations, steady_state,
)
from qfridge.model import SystemConfig, eigensystem, protocol_q
from qfridge.observables import instantaneous_power, single_qubit_power_reference
from qfridge.rates import oracle_rate_set, rate_set
from qfridge.scenarios import read_csv

from conftest import fig4_baths, fig5_baths, record

D4, G4 = 0.1, 1.0


def _rel(a, b):
    return abs(a - b) / abs(b)


# -- 1 -------------------------------------------------------------------------

def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(2024)
    tuples = []
    for _ in range(100):
        q, d, chi = rng.uniform(0, 0.5), rng.uniform(1e-3, 1.0), rng.uniform(-1, 1)
        baths = tuple(Bath(lab, rng.uniform(0.02, 1.0), rng.uniform(0.05, 2.0), rng.uniform(1, 30))
                      for lab in ("cold", "hot"))
        tuples.append((q, d, chi, baths))
    t0 = time.perf_counter()
    worst = 0.0
    for q, d, chi, baths in tuples:
        a = rate_set(q, d, 1.0, chi, baths)
        b = oracle_rate_set(q, d, 1.0, chi, baths)
        for x, y in [(a.per_bath[k], b.per_bath[k]) for k in ("cold", "hot")] + \
                [(a.total_generator, b.total_generator)]:
            nz = x != 0
            if np.any(y[~nz] != 0):
                worst = np.inf
            worst = max(worst, float(np.max(np.abs(y[nz] - x[nz]) / np.abs(x[nz]), initial=0)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    assert record(1, ok, f"max elementwise rel. diff {worst:.2e} (tol 1e-12); {elapsed:.3f} s")


# -- 2 -------------------------------------------------------------------------

def test_criterion_2_protected_state():
    baths = fig4_baths()
    lam = eigensystem(0.0, D4).lambdas
    ok, notes = True, []
    for chi, k in ((1.0, 1), (-1.0, 2)):
        for q in (0.0, 0.2, 0.5):
            for rs in (rate_set(q, D4, G4, chi, baths), oracle_rate_set(q, D4, G4, chi, baths)):
                for m in list(rs.per_bath.values()) + [rs.total_generator]:
                    ok &= not m[k].any() and not m[:, k].any()
        rs = rate_set(0.0, D4, G4, chi, baths)
        p0 = np.eye(4)[k]
        x = np.linspace(0.0, 50.0, 501)
        pops = evolve_populations(rs.total_generator, p0, x / rs.gamma_down_total)
        pc = instantaneous_power(pops, rs.per_bath["cold"], lam)
        drift = np.abs(pops - p0).max()
        ok &= drift <= 1e-12 and np.abs(pc).max() <= 1e-12
        notes.append(f"chi={chi:+g}: |{k + 1}> drift {drift:.1e}, max|P_C| {np.abs(pc).max():.1e}")
    assert record(2, ok, "rates to/from protected state exactly 0; " + "; ".join(notes))


# -- 3 -------------------------------------------------------------------------

def test_criterion_3_steady_populations():
    baths = fig4_baths()
    worst, slowest = 0.0, 0.0
    for chi in (-0.9, 0.0, 0.5, 0.99):
        t0 = time.perf_counter()
        rs = rate_set(0.0, D4, G4, chi, baths)
        gen = rs.total_generator
        r = rs.gamma_up_total / rs.gamma_down_total
        # explicit ODE integration to Gamma_down*t = 1e4
        p = evolve_populations(lambda _t: gen, [1, 0, 0, 0], [0.0, 1e4 / rs.gamma_down_total])[-1]
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, np.abs(p - np.array([1, r, r, r * r]) / (1 + r) ** 2).max())
    ok = worst <= 1e-8 and slowest < 1.0
    assert record(3, ok, f"max abs error {worst:.1e} (tol 1e-8); slowest point {slowest:.2f} s")


# -- 4 -------------------------------------------------------------------------

def test_criterion_4_steady_power_universality():
    baths = fig4_baths()
    worst = 0.0
    for q in np.linspace(0.0, 0.5, 50):
        lam = eigensystem(q, D4).lambdas
        p0 = single_qubit_power_reference(q, D4, G4, baths)
        for chi in (-0.99, -0.9, -0.5, 0.0, 0.5, 0.9, 0.99):
            rs = rate_set(q, D4, G4, chi, baths)
            pc = instantaneous_power(steady_state(rs.total_generator, chi),
                                     rs.per_bath["cold"], lam)
            worst = max(worst, _rel(pc, 2 * p0))
    assert record(4, worst <= 1e-9,
                  f"max |P_C/(2P0) - 1| = {worst:.1e} over 50 q x 7 chi (tol 1e-9)")


# -- 5 -------------------------------------------------------------------------

def _norm_trace(chi, x):
    baths = fig4_baths()
    rs = rate_set(0.0, D4, G4, chi, baths)
    pops = evolve_populations(rs.total_generator, [1, 0, 0, 0], x / rs.gamma_down_total)
    pc = instantaneous_power(pops, rs.per_bath["cold"], eigensystem(0.0, D4).lambdas)
    return pc / (2 * single_qubit_power_reference(0.0, D4, G4, baths))


def test_criterion_5_slow_relaxation_scaling():
    """Time to reach the 2P0 plateau, read as settling into the +-1% band around 1.

    The traces overshoot 1 before settling, so the first crossing of 0.99
    measures the fast rise, not the slow (1 - chi) mode.
    """
    x = np.geomspace(1e-2, 1e3, 20001)
    settle, first = {}, {}
    for chi in (0.9, 0.95, 1.0):
        n = _norm_trace(chi, x)
        outside = np.abs(n - 1.0) > 0.01
        settle[chi] = None if outside[-1] else x[np.nonzero(outside)[0][-1] + 1]
        first[chi] = x[np.argmax(n >= 0.99)] if (n >= 0.99).any() else None
    ratio = settle[0.9] and settle[0.95] / settle[0.9]
    ok = ratio is not None and abs(ratio - 2.0) <= 0.4 and settle[1.0] is None
    detail = (f"settling times {settle[0.9]:.2f}, {settle[0.95]:.2f} -> ratio {ratio:.3f} "
              f"(2 +- 20%); chi=1 settles: {settle[1.0] is not None}; "
              f"[first 0.99 crossing: {first[0.9]:.2f}, {first[0.95]:.2f}, chi=1 {first[1.0]:.2f}]")
    assert record(5, ok, detail)


# -- 6 -------------------------------------------------------------------------

def test_criterion_6_restricted_steady_state():
    baths = fig4_baths()
    rs = rate_set(0.0, D4, G4, 1.0, baths)
    gen = rs.total_generator
    r = rs.gamma_up_total / rs.gamma_down_total
    expect = np.array([1.0, 0.0, r, r * r]) / (1 + r + r * r)
    p = evolve_populations(lambda _t: gen, [1, 0, 0, 0], [0.0, 1e3 / rs.gamma_down_total])[-1]
    err = np.abs(p - expect).max()
    pc = instantaneous_power(p, rs.per_bath["cold"], eigensystem(0.0, D4).lambdas)
    p0 = single_qubit_power_reference(0.0, D4, G4, baths)
    ok = err <= 1e-8 and pc > 2 * p0
    assert record(6, ok, f"|rho - (1,0,r,r^2)/(1+r+r^2)| = {err:.1e} (tol 1e-8); "
                         f"P_C/(2P0) = {pc / (2 * p0):.4f} > 1")


# -- 7 -------------------------------------------------------------------------

def test_criterion_7_driven_sanity():
    cfg = SystemConfig(delta=0.3, g=0.25, chi=0.5)
    baths = fig5_baths()
    omega = 0.1
    rho0 = DensityState.eigenstate(1)
    tr = evolve_driven(cfg, baths, DriveSpec(omega=omega), rho0, n_cycles=100)
    trace = np.abs(np.trace(tr.rho, axis1=1, axis2=2) - 1).max()
    herm = np.abs(tr.rho - tr.rho.conj().transpose(0, 2, 1)).max()
    minpop = tr.populations.min()

    frozen = evolve_driven(cfg, baths, DriveSpec(omega=omega), rho0, n_cycles=100,
                           freeze_drive=True)

    def gen(t):
        return rate_set(protocol_q(omega * t).q, cfg.delta, cfg.g, cfg.chi, baths).total_generator

    pauli = evolve_populations(gen, [1, 0, 0, 0], frozen.u / omega)
    dev = np.abs(frozen.populations - pauli).max()
    ok = trace < 1e-6 and herm < 1e-8 and minpop > -1e-8 and dev <= 1e-8
    assert record(7, ok, f"100 cycles: |tr-1| {trace:.1e}, |rho-rho^H| {herm:.1e}, "
                         f"min pop {minpop:.1e}; frozen-drive vs Pauli {dev:.1e}")


# -- fig5 sweep shared by 8 and 9 ---------------------------------------------

@pytest.fixture(scope="module")
def fig5_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("fig5")
    out, elapsed = {}, 0.0
    for name in ("fig5a", "fig5b"):
        t0 = time.perf_counter()
        rc = main([name, "--out", str(root / name)])
        elapsed += time.perf_counter() - t0
        out[name] = (rc, root / name / "drive.csv")
    return out, elapsed, root


def _table(path, column="p_cold"):
    _, rows = read_csv(path)
    t = {}
    for r in rows:
        t.setdefault(float(r["chi"]), {})[float(r["omega"])] = float(r[column])
    return t


def _onset(t, chi, rel=0.05):
    for w in sorted(t[0.0]):
        if abs(t[chi][w] - t[0.0][w]) > rel * abs(t[0.0][w]):
            return w
    return None


def test_criterion_8_otto_refrigeration(fig5_runs):
    runs, elapsed, _ = fig5_runs
    low, high = _table(runs["fig5a"][1]), _table(runs["fig5b"][1])
    both = {c: {**low[c], **high[c]} for c in low}
    parts = {}

    grid = sorted(both[0.0])
    cooling = [w for w in grid if both[0.0][w] < 0]
    band_top = next((grid[i - 1] for i, w in enumerate(grid) if both[0.0][w] >= 0), grid[-1])
    parts["cooling band"] = (len(cooling) > 0,
                             f"chi=0 P_C<0 on {len(cooling)} of {len(grid)} Omega points, "
                             f"contiguous from {grid[0]:g} to {band_top:.3g}")

    w_min = min(low[0.0])
    vals = [low[c][w_min] for c in (0.0, 0.9, 0.99)]
    spread = (max(vals) - min(vals)) / abs(vals[0])
    parts["collapse"] = (spread <= 0.01,
                         f"at Omega={w_min:g} P_C(chi=0,0.9,0.99)="
                         + ",".join(f"{v:.3e}" for v in vals) + f" spread {spread:.1%} (tol 1%)")

    o9, o99 = _onset(low, 0.9), _onset(low, 0.99)
    ratio = o99 / o9 if o9 and o99 else float("nan")
    parts["onset"] = (0.05 <= ratio <= 0.2,
                      f"5% onset Omega chi=0.9 {o9}, chi=0.99 {o99}, ratio {ratio:.3g} "
                      f"(0.1 within x2)")

    dev = {w: _rel(high[0.99][w], high[1.0][w]) for w in high[1.0]}
    w_bad = max(dev, key=dev.get)
    parts["0.99 vs 1"] = (max(dev.values()) <= 0.02,
                          f"max |P(0.99)-P(1)|/|P(1)| over Omega in [{min(dev):g},{max(dev):g}] "
                          f"= {dev[w_bad]:.1%} at {w_bad:.3g} (tol 2%)")

    exit_ok = runs["fig5a"][0] == 0 and runs["fig5b"][0] == 0
    parts["runtime"] = (elapsed < 600 and exit_ok,
                        f"full fig5a+fig5b sweep {elapsed:.0f} s, serial (budget 600 s)")

    ok = all(p[0] for p in parts.values())
    detail = "; ".join(f"{k}: {'ok' if p[0] else 'FAIL'} ({p[1]})" for k, p in parts.items())
    assert record(8, ok, detail)


def test_supplementary_knee_scaling(fig5_runs):
    """Each curve's own departure from its low-frequency P/Omega^2 plateau scales as 1 - chi.

    Not one of the numbered criteria: it records where the (1 - chi)
    critical frequency does show up in this model.
    """
    runs, _, _ = fig5_runs
    low = _table(runs["fig5a"][1])

    def knee(chi, drop=0.05):
        w = np.array(sorted(low[chi]))
        y = np.array([low[chi][x] for x in w]) / w**2
        y = y / y[0]
        i = np.argmax(np.abs(y - 1) > drop)
        # log-linear interpolation between bracketing points
        f = (drop - abs(y[i - 1] - 1)) / (abs(y[i] - 1) - abs(y[i - 1] - 1))
        return float(np.exp(np.log(w[i - 1]) + f * (np.log(w[i]) - np.log(w[i - 1]))))

    ratio = knee(0.99) / knee(0.9)
    print(f"knee(0.9)={knee(0.9):.3g} knee(0.99)={knee(0.99):.3g} ratio={ratio:.3g}")
    assert 0.05 <= ratio <= 0.2


# -- 9 -------------------------------------------------------------------------

def _body(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


def test_criterion_9_determinism(fig5_runs, tmp_path):
    runs, _, root = fig5_runs
    mismatches, checked = [], []
    for name in list_presets():
        if name in runs:
            # already run serially once; a parallel rerun covers both properties
            ref = runs[name][1]
            main([name, "--out", str(tmp_path / name / "par"), "--jobs", "8"])
            others = [tmp_path / name / "par" / ref.name]
        else:
            outs = []
            for tag, extra in (("s1", []), ("s2", []), ("par", ["--jobs", "8"])):
                main([name, "--out", str(tmp_path / name / tag)] + extra)
                outs.append(next((tmp_path / name / tag).glob("*.csv")))
            ref, others = outs[0], outs[1:]
        checked.append(name)
        for other in others:
            if _body(ref) != _body(other) or ref.read_bytes() != other.read_bytes():
                mismatches.append(f"{name}:{other.parent.name}")
    ok = not mismatches
    assert record(9, ok, f"{len(checked)} presets ({', '.join(checked)}); whole files "
                         f"byte-identical serial/serial/--jobs 8; mismatches: {mismatches or 'none'}")
