"""Population relaxation and driven master-equation dynamics.

Two frames appear here:

* the interaction picture used by :func:`evolve_driven`, where coherences
  carry the accumulated phase ``Phi_kl(u) = (1/Omega) int (lambda_k - lambda_l)``
  and the drive enters through ``G * exp(i Phi)``;
* the co-moving eigenbasis frame used by :func:`cycle_converged_power`, where
  ``rho~_kl = rho_kl * exp(-i Phi_kl)`` obeys an equation that is periodic in u.

Populations and powers are identical in both frames.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eig, expm

from .baths import Bath
from .model import LEVEL_SIGNS, DrivePoint, SystemConfig, drive_coefficients, protocol_q
from .rates import single_qubit_rates, transition_matrix, with_diagonal

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


class NumericalError(RuntimeError):
    """Integration lost trace or failed to converge within its budget."""


@dataclass
class DensityState:
    """4x4 density matrix in the instantaneous eigenbasis."""

    rho: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        if self.rho.shape != (4, 4):
            raise ValueError(f"rho must be 4x4, got {self.rho.shape}")
        if abs(np.trace(self.rho) - 1.0) > 1e-9:
            raise ValueError(f"rho must have unit trace, got {np.trace(self.rho)}")
        if np.abs(self.rho - self.rho.conj().T).max() > 1e-9:
            raise ValueError("rho must be Hermitian")

    @classmethod
    def from_populations(cls, pops) -> "DensityState":
        return cls(np.diag(check_populations(pops)).astype(complex))

    @classmethod
    def eigenstate(cls, k: int) -> "DensityState":
        """Pure eigenstate |k>, k in 1..4."""
        p = np.zeros(4)
        p[k - 1] = 1.0
        return cls.from_populations(p)

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()


@dataclass(frozen=True)
class DriveSpec:
    """Drive frequency Omega = 2*pi*hbar*f/E0 and cycle-convergence settings."""

    omega: float
    n_cycles_max: int = 200
    cycle_tol: float = 1e-4

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if not self.cycle_tol > 0:
            raise ValueError(f"cycle_tol must be > 0, got {self.cycle_tol}")
        if self.n_cycles_max < 1:
            raise ValueError("n_cycles_max must be >= 1")


def check_populations(pops) -> np.ndarray:
    p = np.asarray(pops, dtype=float)
    if p.shape != (4,):
        raise ValueError(f"populations must have 4 entries, got shape {p.shape}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"populations must be nonnegative and sum to 1, got {p}")
    return p


# ---------------------------------------------------------------------------
# Non-driven relaxation
# ---------------------------------------------------------------------------

def evolve_populations(generator, rho0_diag, t_grid) -> np.ndarray:
    """Populations at each time of ``t_grid``; returns shape (len(t_grid), 4).

    ``generator`` is either a constant 4x4 generator, solved exactly by matrix
    exponential, or a callable ``t -> generator`` integrated with DOP853.
    """
    p0 = check_populations(rho0_diag)
    t = np.asarray(t_grid, dtype=float)
    if callable(generator):
        sol = solve_ivp(
            lambda tt, p: generator(tt).T @ p,
            (t[0], t[-1]), p0, method="DOP853", t_eval=t, rtol=1e-12, atol=1e-14,
        )
        if not sol.success:
            raise NumericalError(sol.message)
        return sol.y.T
    gen_t = np.asarray(generator, dtype=float).T
    if np.abs(gen_t.sum(axis=0)).max() > 1e-12 * max(1.0, np.abs(gen_t).max()):
        raise ValueError("generator rows must sum to zero")
    out = np.empty((t.size, 4))
    for i, ti in enumerate(t):
        out[i] = expm(gen_t * ti) @ p0
    return out


def excitation_ratio(generator) -> float:
    """r = Gamma_up / Gamma_down read from a generator of the closed form.

    The corner diagonals are -2*Gamma_up and -2*Gamma_down for every chi.
    """
    gen = np.asarray(generator)
    g_up, g_dn = -gen[0, 0] / 2.0, -gen[3, 3] / 2.0
    if not g_dn > 0:
        raise ValueError("steady state undefined for Gamma_down = 0")
    return g_up / g_dn


def null_space_steady_state(generator) -> np.ndarray:
    """Right singular vector of generator.T with the smallest singular value."""
    _, _, vh = np.linalg.svd(np.asarray(generator).T)
    v = vh[-1].real
    return v / v.sum()


def steady_state(generator, chi: float, rho0_diag=None) -> np.ndarray:
    """Long-time populations.

    For |chi| < 1 the result is the product-state distribution
    (1, r, r, r^2)/(1+r)^2. At chi = +1 (-1) the population of |2> (|3>) is
    conserved and the rest relaxes over the remaining three levels.
    """
    r = excitation_ratio(generator)
    if abs(chi) < 1.0:
        p = np.array([1.0, r, r, r * r]) / (1.0 + r) ** 2
        check = null_space_steady_state(generator)
        if np.abs(check - p).max() > 1e-10:
            raise NumericalError(f"analytic steady state {p} disagrees with null space {check}")
        return p
    if rho0_diag is None:
        raise ValueError("chi = +/-1 steady state needs the initial populations")
    p0 = check_populations(rho0_diag)
    frozen = 1 if chi > 0 else 2
    free = [k for k in range(4) if k != frozen]
    p = np.zeros(4)
    p[frozen] = p0[frozen]
    p[free] = (1.0 - p0[frozen]) * np.array([1.0, r, r * r]) / (1.0 + r + r * r)
    return p


# ---------------------------------------------------------------------------
# Driven dynamics: shared coefficients
# ---------------------------------------------------------------------------

Protocol = Callable[[np.ndarray], DrivePoint]


class DrivenCoefficients:
    """Scalar functions of drive phase u that assemble the master equation.

    Everything is vectorized over u; the protocol must accept arrays.
    """

    def __init__(self, cfg: SystemConfig, baths: Sequence[Bath], omega: float,
                 protocol: Protocol = protocol_q, freeze_drive: bool = False):
        self.cfg = cfg
        self.baths = tuple(baths)
        self.omega = float(omega)
        self.protocol = protocol
        self.freeze_drive = freeze_drive
        self.up_pattern = transition_matrix(1.0, 0.0, cfg.chi)
        self.down_pattern = transition_matrix(0.0, 1.0, cfg.chi)

    def at(self, u):
        """Return dict of arrays: w0, g13, g34, and per-bath (up, down) rates."""
        dp = self.protocol(np.asarray(u, dtype=float))
        q = np.asarray(dp.q, dtype=float) * np.ones_like(np.asarray(u, dtype=float))
        dq = np.asarray(dp.dq_du, dtype=float) * np.ones_like(q)
        if self.freeze_drive:
            dq = np.zeros_like(q)
        d = self.cfg.delta
        g13, g34 = drive_coefficients(q, dq, d)
        out = {"q": q, "w0": 2.0 * np.hypot(q, d), "g13": g13, "g34": g34}
        for bath in self.baths:
            dn, up = single_qubit_rates(q, d, self.cfg.g, bath)
            out[bath.label] = (up, dn)
        return out

    def transition_rates(self, c, i=None):
        """Total off-diagonal rate matrices at the sampled points, shape (n, 4, 4)."""
        up = sum(c[b.label][0] for b in self.baths)
        dn = sum(c[b.label][1] for b in self.baths)
        if i is not None:
            up, dn = up[i], dn[i]
        up, dn = np.asarray(up)[..., None, None], np.asarray(dn)[..., None, None]
        return up * self.up_pattern + dn * self.down_pattern

    def bath_power_weights(self, c, label):
        """Per-level energy flux e_k such that P_B = sum_k rho_kk e_k; shape (n, 4)."""
        up, dn = c[label]
        gaps = LEVEL_SIGNS[:, None] - LEVEL_SIGNS[None, :]
        e_up = (gaps * self.up_pattern).sum(axis=1)
        e_dn = (gaps * self.down_pattern).sum(axis=1)
        return c["w0"][:, None] * (up[:, None] * e_up + dn[:, None] * e_dn)


def _dissipator(rho, w):
    """Pauli gain/loss with coherence damping for off-diagonal rates ``w``."""
    gamma = w.sum(axis=1)
    out = -0.5 * (gamma[:, None] + gamma[None, :]) * rho
    out[np.diag_indices(4)] += w.T @ rho.diagonal()
    return out


# ---------------------------------------------------------------------------
# Interaction-picture trajectory
# ---------------------------------------------------------------------------

@dataclass
class DrivenTrajectory:
    u: np.ndarray
    rho: np.ndarray  # (n, 4, 4), interaction picture
    phase: np.ndarray  # accumulated (1/Omega) int w0 du
    max_trace_drift: float

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal(axis1=1, axis2=2).real


def rk4_step_size(omega: float, max_gap: float, steps_min: int = 2000) -> float:
    """Per-unit-u step: resolve the drive and the fastest phase rotation."""
    return min(TWO_PI / steps_min, omega / (10.0 * max_gap))


def _max_gap(coef: DrivenCoefficients) -> float:
    u = np.linspace(0.0, TWO_PI, 513)
    return 2.0 * float(coef.at(u)["w0"].max())


def evolve_driven(cfg: SystemConfig, baths: Sequence[Bath], drive: DriveSpec,
                  rho0: DensityState, n_cycles: int = 1, samples_per_cycle: int = 200,
                  protocol: Protocol = protocol_q, freeze_drive: bool = False) -> DrivenTrajectory:
    """Integrate the driven master equation in the interaction picture.

    Classical RK4 over the augmented state (rho, phase) with a fixed step
    that divides one cycle evenly. Returns samples on a uniform u grid.
    """
    coef = DrivenCoefficients(cfg, baths, drive.omega, protocol, freeze_drive)
    h_max = rk4_step_size(drive.omega, _max_gap(coef))
    n_step = samples_per_cycle * int(np.ceil(TWO_PI / h_max / samples_per_cycle))
    h = TWO_PI / n_step
    stride = n_step // samples_per_cycle
    inv_omega = 1.0 / drive.omega

    # coefficients on node and midpoint grids of one cycle, reused every cycle
    nodes = coef.at(np.arange(n_step + 1) * h)
    mids = coef.at((np.arange(n_step) + 0.5) * h)

    def unpack(c, i):
        w = coef.transition_rates(c, i)
        return c["w0"][i], c["g13"][i], c["g34"][i], w

    node_vals = [unpack(nodes, i) for i in range(n_step + 1)]
    mid_vals = [unpack(mids, i) for i in range(n_step)]

    def rhs(vals, rho, phi):
        w0, g13, g34, w = vals
        ph = np.exp(-1j * phi)
        gp = np.zeros((4, 4), dtype=complex)
        # Gp_il = G_il exp(i Phi_il); Phi_13 = Phi_34 = -phi
        gp[0, 2], gp[2, 0] = g13 * ph, -g13 * ph.conjugate()
        gp[2, 3], gp[3, 2] = g34 * ph, -g34 * ph.conjugate()
        drho = rho @ gp + gp.conj().T @ rho + inv_omega * _dissipator(rho, w)
        return drho, w0 * inv_omega

    rho = np.array(rho0.rho, dtype=complex)
    phi = 0.0
    n_out = n_cycles * samples_per_cycle + 1
    out_rho = np.empty((n_out, 4, 4), dtype=complex)
    out_phi = np.empty(n_out)
    out_rho[0], out_phi[0] = rho, phi
    drift = 0.0
    j = 1
    for cycle in range(n_cycles):
        for n in range(n_step):
            a, b, c = node_vals[n], mid_vals[n], node_vals[n + 1]
            k1, f1 = rhs(a, rho, phi)
            k2, f2 = rhs(b, rho + 0.5 * h * k1, phi + 0.5 * h * f1)
            k3, f3 = rhs(b, rho + 0.5 * h * k2, phi + 0.5 * h * f2)
            k4, f4 = rhs(c, rho + h * k3, phi + h * f3)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            phi = phi + (h / 6.0) * (f1 + 2 * f2 + 2 * f3 + f4)
            if (n + 1) % stride == 0:
                out_rho[j], out_phi[j] = rho, phi
                j += 1
        cycle_drift = abs(np.trace(rho) - 1.0)
        drift = max(drift, cycle_drift)
        if cycle_drift > 1e-6 * (cycle + 1):
            raise NumericalError(f"trace drift {cycle_drift:.3g} after cycle {cycle + 1}")
    u = np.arange(n_out) * (TWO_PI / samples_per_cycle)
    return DrivenTrajectory(u=u, rho=out_rho, phase=out_phi, max_trace_drift=drift)


# ---------------------------------------------------------------------------
# One-cycle propagator in the co-moving frame
# ---------------------------------------------------------------------------

_DIAG = np.array([5 * k for k in range(4)])  # vec indices of rho_kk


def _superoperators(chi: float):
    """Constant 16x16 pieces whose u-dependent combination is the generator."""
    eye = np.eye(4)
    phase = np.diag(-1j * (LEVEL_SIGNS[:, None] - LEVEL_SIGNS[None, :]).ravel())

    def commutator(e):
        # -(G rho - rho G) for antisymmetric real G, row-major vec
        return -(np.kron(e, eye) - np.kron(eye, e.T))

    e13 = np.zeros((4, 4))
    e13[0, 2], e13[2, 0] = 1.0, -1.0
    e34 = np.zeros((4, 4))
    e34[2, 3], e34[3, 2] = 1.0, -1.0

    def dissipator(w):
        gamma = w.sum(axis=1)
        d = np.diag(-0.5 * (gamma[:, None] + gamma[None, :]).ravel()).astype(complex)
        d[np.ix_(_DIAG, _DIAG)] += w.T
        return d

    return (
        phase,
        commutator(e13),
        commutator(e34),
        dissipator(transition_matrix(1.0, 0.0, chi)),
        dissipator(transition_matrix(0.0, 1.0, chi)),
    )


def _generators(coef: DrivenCoefficients, ops, u) -> np.ndarray:
    """Co-moving-frame superoperators at each u, shape (n, 16, 16)."""
    c = coef.at(u)
    inv = 1.0 / coef.omega
    up = sum(c[b.label][0] for b in coef.baths)
    dn = sum(c[b.label][1] for b in coef.baths)
    weights = np.stack([c["w0"] * inv, c["g13"], c["g34"], up * inv, dn * inv], axis=1)
    return np.einsum("nj,jab->nab", weights, np.stack(ops))


# Radau IIA, three stages
_S6 = np.sqrt(6.0)
_RADAU_C = np.array([(4 - _S6) / 10, (4 + _S6) / 10, 1.0])
_RADAU_A = np.array([
    [(88 - 7 * _S6) / 360, (296 - 169 * _S6) / 1800, (-2 + 3 * _S6) / 225],
    [(296 + 169 * _S6) / 1800, (88 + 7 * _S6) / 360, (-2 - 3 * _S6) / 225],
    [(16 - _S6) / 36, (16 + _S6) / 36, 1 / 9],
])


def _rk4_steps(coef, ops, u0, h):
    la = _generators(coef, ops, u0)
    lb = _generators(coef, ops, u0 + 0.5 * h)
    lc = _generators(coef, ops, u0 + h)
    eye = np.eye(16)
    k1 = la
    k2 = lb + 0.5 * h * lb @ k1
    k3 = lb + 0.5 * h * lb @ k2
    k4 = lc + h * lc @ k3
    return eye + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _radau_steps(coef, ops, u0, h):
    n = u0.size
    ls = np.stack([_generators(coef, ops, u0 + ci * h) for ci in _RADAU_C], axis=1)
    block = np.zeros((n, 48, 48), dtype=complex)
    for i in range(3):
        for j in range(3):
            block[:, 16 * i:16 * i + 16, 16 * j:16 * j + 16] = -h * _RADAU_A[i, j] * ls[:, i]
        block[:, 16 * i:16 * i + 16, 16 * i:16 * i + 16] += np.eye(16)
    k = np.linalg.solve(block, ls.reshape(n, 48, 16)).reshape(n, 3, 16, 16)
    return np.eye(16) + h * np.einsum("j,njab->nab", _RADAU_A[2], k)


@dataclass
class CyclePropagator:
    """Linear maps over one drive period in the co-moving frame.

    ``monodromy`` maps vec(rho) at u = 0 to u = 2*pi. ``power_rows[label]``
    gives the cycle-averaged power into that bath as a linear functional of
    vec(rho) at the start of the cycle. ``samples`` holds the propagator on a
    coarse uniform grid for trajectory output.
    """

    method: str
    n_steps: int
    monodromy: np.ndarray
    power_rows: dict
    sample_u: np.ndarray
    samples: np.ndarray


def cycle_propagator(coef: DrivenCoefficients, n_steps: int, method: str,
                     n_samples: int = 200, chunk: int = 2048) -> CyclePropagator:
    if n_steps % n_samples:
        raise ValueError("n_steps must be a multiple of n_samples")
    ops = _superoperators(coef.cfg.chi)
    stepper = {"rk4": _rk4_steps, "radau": _radau_steps}[method]
    h = TWO_PI / n_steps
    stride = n_steps // n_samples
    x = np.eye(16, dtype=complex)
    samples = np.empty((n_samples + 1, 16, 16), dtype=complex)
    samples[0] = x

    def weights(u):
        c = coef.at(u)
        return np.stack([coef.bath_power_weights(c, b.label) for b in coef.baths], axis=1)

    labels = [b.label for b in coef.baths]
    acc = np.zeros((len(labels), 16), dtype=complex)
    for start in range(0, n_steps, chunk):
        idx = np.arange(start, min(start + chunk, n_steps))
        steps = stepper(coef, ops, idx * h, h)
        e = weights(idx * h)
        if start == 0:
            e[0] *= 0.5
        for j in range(idx.size):
            acc += e[j] @ x[_DIAG]
            x = steps[j] @ x
            if (idx[j] + 1) % stride == 0:
                samples[(idx[j] + 1) // stride] = x
    acc += 0.5 * weights(np.array([TWO_PI]))[0] @ x[_DIAG]
    rows = {lab: acc[i] / n_steps for i, lab in enumerate(labels)}
    return CyclePropagator(
        method=method, n_steps=n_steps, monodromy=x, power_rows=rows,
        sample_u=np.linspace(0.0, TWO_PI, n_samples + 1), samples=samples,
    )


@dataclass
class CycleResult:
    """Cycle-averaged powers once the periodic regime is reached."""

    omega: float
    p_cold: float
    p_hot: float
    converged: bool
    n_cycles: int
    last_two: tuple
    method: str
    n_steps: int
    u: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)  # final cycle, co-moving frame
    p_cold_u: np.ndarray = field(repr=False)
    p_hot_u: np.ndarray = field(repr=False)


RK4_STEP_LIMIT = 1 << 15


def _iterate_cycles(prop: CyclePropagator, vec0, labels, drive: DriveSpec):
    cold, hot = labels
    v = vec0
    history = []
    converged = False
    for n in range(drive.n_cycles_max):
        pc = float(np.real(prop.power_rows[cold] @ v))
        history.append(pc)
        if n > 0:
            prev = history[-2]
            if abs(pc - prev) <= drive.cycle_tol * abs(pc):
                converged = True
                break
        v_next = prop.monodromy @ v
        if n + 1 < drive.n_cycles_max:
            v = v_next
    ph = float(np.real(prop.power_rows[hot] @ v))
    return v, history[-1], ph, converged, len(history), tuple(history[-2:])


def cycle_converged_power(cfg: SystemConfig, baths: Sequence[Bath], drive: DriveSpec,
                          rho0: DensityState, n_steps: int | None = None,
                          method: str | None = None, max_refinements: int = 4,
                          protocol: Protocol = protocol_q) -> CycleResult:
    """Cycle-averaged bath powers after repeated drive cycles from ``rho0``.

    Cycles are applied until the average cold-bath power changes by less than
    ``drive.cycle_tol`` (relative) between consecutive cycles, or the cycle
    budget runs out (``converged=False``). The step count is doubled until the
    result moves by less than ``0.1 * cycle_tol``.

    RK4 is used when the phase-resolving step fits in ``RK4_STEP_LIMIT`` steps
    per cycle; below that frequency the L-stable Radau IIA scheme takes over.
    """
    by_label = {b.label: b for b in baths}
    labels = ("cold", "hot")
    if set(by_label) != set(labels):
        raise ValueError("need exactly one cold and one hot bath")
    coef = DrivenCoefficients(cfg, baths, drive.omega, protocol)
    if n_steps is None:
        h = rk4_step_size(drive.omega, _max_gap(coef))
        n_rk4 = 200 * int(np.ceil(TWO_PI / h / 200))
        if method is None:
            method = "rk4" if n_rk4 <= RK4_STEP_LIMIT else "radau"
        n_steps = n_rk4 if method == "rk4" else 2000
    method = method or "rk4"
    vec0 = np.asarray(rho0.rho, dtype=complex).ravel()

    prev = None
    for _ in range(max_refinements + 1):
        prop = cycle_propagator(coef, n_steps, method)
        v, pc, ph, converged, n_cyc, last_two = _iterate_cycles(prop, vec0, labels, drive)
        if prev is not None and abs(pc - prev) <= 0.1 * drive.cycle_tol * abs(pc):
            break
        prev = pc
        n_steps *= 2
    else:
        log.warning("step refinement did not settle at omega=%g", drive.omega)

    traj = prop.samples @ v
    rho = traj.reshape(-1, 4, 4)
    c = coef.at(prop.sample_u)
    pops = rho.diagonal(axis1=1, axis2=2).real
    p_u = {lab: (coef.bath_power_weights(c, lab) * pops).sum(axis=1) for lab in labels}
    return CycleResult(
        omega=drive.omega, p_cold=pc, p_hot=ph, converged=converged, n_cycles=n_cyc,
        last_two=last_two, method=method, n_steps=prop.n_steps, u=prop.sample_u, rho=rho,
        p_cold_u=p_u["cold"], p_hot_u=p_u["hot"],
    )


def periodic_limit(prop: CyclePropagator, vec0, tol: float = 1e-6) -> np.ndarray:
    """Start-of-cycle state after infinitely many cycles.

    Projects ``vec0`` onto the eigenvalue-1 eigenspace of the monodromy along
    its conserved (left-eigenvector) functionals. More than one such mode
    appears only for chi = +/-1, where the answer depends on ``vec0``.
    """
    mu, left, right = eig(prop.monodromy, left=True, right=True)
    keep = np.abs(mu - 1.0) < tol
    if not keep.any():
        raise NumericalError("monodromy has no eigenvalue near 1")
    lv, rv = left[:, keep].conj().T, right[:, keep]
    return rv @ np.linalg.solve(lv @ rv, lv @ vec0)
