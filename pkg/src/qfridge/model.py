"""Two-qubit Hamiltonian, Bell basis and instantaneous eigensystem.

Units: energies in E0, time in hbar/E0, so hbar = E0 = 1 throughout.
Both qubits are identical, decoupled, and see the same flux q.

Bell basis ordering (rows of :func:`bell_basis`)::

    u1 = (|00> + |11>)/sqrt2     u2 = (|00> - |11>)/sqrt2
    u3 = (|01> + |10>)/sqrt2     u4 = (|01> - |10>)/sqrt2

with sigma_z|0> = +|0>.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT2 = np.sqrt(2.0)

# Level index pattern: lambdas = w0 * LEVEL_SIGNS
LEVEL_SIGNS = np.array([-1.0, 0.0, 0.0, 1.0])

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
_I2 = np.eye(2)

# sigma_z of each qubit written in the Bell basis
SIGMA_Z1_BELL = np.array(
    [[0.0, 1.0, 0.0, 0.0],
     [1.0, 0.0, 0.0, 0.0],
     [0.0, 0.0, 0.0, 1.0],
     [0.0, 0.0, 1.0, 0.0]]
)
SIGMA_Z2_BELL = np.array(
    [[0.0, 1.0, 0.0, 0.0],
     [1.0, 0.0, 0.0, 0.0],
     [0.0, 0.0, 0.0, -1.0],
     [0.0, 0.0, -1.0, 0.0]]
)


@dataclass(frozen=True)
class SystemConfig:
    """Dimensionless parameters of the symmetric two-qubit system."""

    delta: float
    g: float
    chi: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if not self.g >= 0:
            raise ValueError(f"g must be >= 0, got {self.g}")
        if not -1.0 <= self.chi <= 1.0:
            raise ValueError(f"chi must lie in [-1, 1], got {self.chi}")


@dataclass(frozen=True)
class DrivePoint:
    q: float
    dq_du: float = 0.0


@dataclass(frozen=True)
class EigenSystem:
    """Instantaneous eigenvalues and eigenvectors.

    ``basis[k]`` is eigenstate |k+1> expanded in the Bell basis.
    """

    q: float
    delta: float
    lambdas: np.ndarray
    basis: np.ndarray

    @property
    def w0(self) -> float:
        """Single-qubit level spacing 2*sqrt(q^2 + delta^2)."""
        return float(self.lambdas[3])


def bell_basis() -> np.ndarray:
    """Rows are the Bell states in the computational basis |00>,|01>,|10>,|11>."""
    return np.array(
        [[1.0, 0.0, 0.0, 1.0],
         [1.0, 0.0, 0.0, -1.0],
         [0.0, 1.0, 1.0, 0.0],
         [0.0, 1.0, -1.0, 0.0]]
    ) / SQRT2


def hamiltonian_bell(q: float, delta: float) -> np.ndarray:
    """H_Q1 + H_Q2 with E0 = 1, expressed in the Bell basis.

    Each qubit carries H = -(delta*sigma_x + q*sigma_z).
    """
    h = np.zeros((4, 4))
    h[0, 1] = h[1, 0] = -2.0 * q
    h[0, 2] = h[2, 0] = -2.0 * delta
    return h


def hamiltonian_computational(q: float, delta: float) -> np.ndarray:
    """Same Hamiltonian built from tensor products in the computational basis."""
    h1 = -(delta * _SX + q * _SZ)
    return np.kron(h1, _I2) + np.kron(_I2, h1)


def _check_delta(delta):
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")


def mixing(q, delta):
    """Return (a, c, s) with a = sqrt(q^2+delta^2), c = q/a, s = delta/a."""
    a = np.hypot(q, delta)
    return a, q / a, delta / a


def eigensystem(q: float, delta: float) -> EigenSystem:
    _check_delta(delta)
    a, c, s = mixing(q, delta)
    basis = np.array(
        [[1.0 / SQRT2, c / SQRT2, s / SQRT2, 0.0],
         [0.0, 0.0, 0.0, 1.0],
         [0.0, s, -c, 0.0],
         [1.0 / SQRT2, -c / SQRT2, -s / SQRT2, 0.0]]
    )
    lambdas = 2.0 * a * LEVEL_SIGNS
    return EigenSystem(q=float(q), delta=float(delta), lambdas=lambdas, basis=basis)


def coupling_elements(es: EigenSystem) -> tuple[np.ndarray, np.ndarray]:
    """Matrix elements <k|sigma_z,m|l> in the eigenbasis, for m = 1, 2."""
    b = es.basis

    def sandwich(z):
        # Plain products and sums rather than BLAS: fused multiply-adds would
        # leave ~1e-17 residue where the elements cancel exactly (e.g. 1-4).
        bz = b @ z  # z is a signed permutation, so this product is exact
        return (b[:, None, :] * bz[None, :, :]).sum(axis=2)

    return sandwich(SIGMA_Z1_BELL), sandwich(SIGMA_Z2_BELL)


def protocol_q(u: float) -> DrivePoint:
    """Standard Otto protocol q(u) = (1 + cos u)/4, u = 2*pi*f*t."""
    return DrivePoint(q=(1.0 + np.cos(u)) / 4.0, dq_du=-np.sin(u) / 4.0)


def drive_coefficients(q, dq_du, delta):
    """Nonzero entries (G_13, G_34) of the drive generator; G is antisymmetric.

    Works elementwise on arrays.
    """
    amp = -np.asarray(dq_du) * delta / (SQRT2 * (np.asarray(q) ** 2 + delta**2))
    return amp, amp


def drive_generator(dp: DrivePoint, delta: float) -> np.ndarray:
    """G_kl = <k| d/du |l> along the protocol.

    Only the 1-3 and 3-4 couplings survive; state |2> is untouched by the drive.
    """
    _check_delta(delta)
    g13, g34 = drive_coefficients(dp.q, dp.dq_du, delta)
    g = np.zeros((4, 4))
    g[0, 2], g[2, 0] = g13, -g13
    g[2, 3], g[3, 2] = g34, -g34
    return g
