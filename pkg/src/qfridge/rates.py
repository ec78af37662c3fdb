"""Golden-rule transition rates between the four instantaneous eigenstates.

Matrices follow the row convention ``m[k, l] = rate k -> l``. A generator
carries minus the row sum on its diagonal, so populations obey
``d rho_d / dt = generator.T @ rho_d``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .baths import Bath, spectral
from .model import EigenSystem, coupling_elements, eigensystem, mixing


@dataclass(frozen=True)
class Correlation:
    chi: float

    def __post_init__(self):
        if not -1.0 <= self.chi <= 1.0:
            raise ValueError(f"chi must lie in [-1, 1], got {self.chi}")

    @property
    def chi_matrix(self) -> np.ndarray:
        return np.array([[1.0, self.chi], [self.chi, 1.0]])


@dataclass(frozen=True)
class RateSet:
    """Per-bath rates at one operating point plus the summed generator."""

    chi: float
    gamma_up: Mapping[str, float]
    gamma_down: Mapping[str, float]
    per_bath: Mapping[str, np.ndarray]
    total_generator: np.ndarray = field(repr=False)

    @property
    def gamma_up_total(self) -> float:
        return sum(self.gamma_up.values())

    @property
    def gamma_down_total(self) -> float:
        return sum(self.gamma_down.values())


def single_qubit_rates(q, delta, g, bath: Bath):
    """Relaxation and excitation rates ``(down, up)`` of one qubit due to ``bath``.

    Accepts array ``q``.
    """
    if not np.all(np.asarray(delta) > 0):
        raise ValueError(f"delta must be > 0, got {delta}")
    a, _, s = mixing(np.asarray(q, dtype=float), delta)
    w0 = 2.0 * a
    pref = g**2 * s**2
    return pref * spectral(bath, w0), pref * spectral(bath, -w0)


def transition_matrix(gamma_up, gamma_down, chi) -> np.ndarray:
    """Off-diagonal rate pattern with the (1 -/+ chi) selection-rule factors."""
    if not -1.0 <= chi <= 1.0:
        raise ValueError(f"chi must lie in [-1, 1], got {chi}")
    lo, hi = 1.0 - chi, 1.0 + chi
    up, dn = gamma_up, gamma_down
    return np.array(
        [[0.0, lo * up, hi * up, 0.0],
         [lo * dn, 0.0, 0.0, lo * up],
         [hi * dn, 0.0, 0.0, hi * up],
         [0.0, lo * dn, hi * dn, 0.0]]
    )


def with_diagonal(rates: np.ndarray) -> np.ndarray:
    """Turn an off-diagonal rate matrix into a generator (rows sum to zero)."""
    gen = np.array(rates, dtype=float)
    np.fill_diagonal(gen, 0.0)
    np.fill_diagonal(gen, -gen.sum(axis=1))
    return gen


def rate_matrix_closed_form(gamma_up, gamma_down, chi) -> np.ndarray:
    """Total 4x4 generator for summed single-qubit rates."""
    return with_diagonal(transition_matrix(gamma_up, gamma_down, chi))


def golden_rule_oracle(
    es: EigenSystem, corr: Correlation, g: float, baths: Sequence[Bath]
) -> dict[str, np.ndarray]:
    """Per-bath transition rates summed directly from coupling matrix elements.

    Independent of the closed form: every pair (k, l) is evaluated with its
    own frequency lambda_k - lambda_l and the full noise cross-correlation.
    """
    m = np.stack(coupling_elements(es))
    cm = corr.chi_matrix
    # weight[k, l] = sum_mn M^m_kl M^n_lk chi_mn
    weight = np.einsum("mkl,nlk,mn->kl", m, m, cm)
    w_kl = es.lambdas[:, None] - es.lambdas[None, :]
    out = {}
    for bath in baths:
        r = g**2 * weight * spectral(bath, w_kl)
        np.fill_diagonal(r, 0.0)
        out[bath.label] = r
    return out


def rate_set(q: float, delta: float, g: float, chi: float, baths: Sequence[Bath]) -> RateSet:
    """Closed-form rates at flux ``q`` for every bath."""
    up, down, per_bath = {}, {}, {}
    for bath in baths:
        dn, u = single_qubit_rates(q, delta, g, bath)
        down[bath.label], up[bath.label] = float(dn), float(u)
        per_bath[bath.label] = transition_matrix(u, dn, chi)
    total = with_diagonal(sum(per_bath.values()))
    return RateSet(chi=chi, gamma_up=up, gamma_down=down, per_bath=per_bath, total_generator=total)


def oracle_rate_set(q: float, delta: float, g: float, chi: float, baths: Sequence[Bath]) -> RateSet:
    """Same container as :func:`rate_set`, filled from :func:`golden_rule_oracle`."""
    per_bath = golden_rule_oracle(eigensystem(q, delta), Correlation(chi), g, baths)
    up, down = {}, {}
    for bath in baths:
        dn, u = single_qubit_rates(q, delta, g, bath)
        down[bath.label], up[bath.label] = float(dn), float(u)
    total = with_diagonal(sum(per_bath.values()))
    return RateSet(chi=chi, gamma_up=up, gamma_down=down, per_bath=per_bath, total_generator=total)
