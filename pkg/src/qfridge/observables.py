"""Heat currents into the baths.

Sign convention: positive power means energy flowing INTO the bath. A
refrigerator therefore shows a negative cold-bath power.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .baths import Bath
from .rates import single_qubit_rates


@dataclass(frozen=True)
class PowerRecord:
    time: float
    p_cold: float
    p_hot: float
    p_norm: float | None = None


def instantaneous_power(rho_diag, rates, lambdas) -> float:
    """P_B = sum_kl rho_kk (lambda_k - lambda_l) Gamma_{k->l,B}.

    ``rates`` holds one bath's off-diagonal transition rates. Works on a
    stack of population vectors too (leading axes are preserved).
    """
    rates = np.array(rates, dtype=float)
    np.fill_diagonal(rates, 0.0)
    lam = np.asarray(lambdas, dtype=float)
    flux = ((lam[:, None] - lam[None, :]) * rates).sum(axis=1)
    return np.asarray(rho_diag, dtype=float) @ flux


def single_qubit_power_reference(q: float, delta: float, g: float, baths: Sequence[Bath]) -> float:
    """Steady-state power P0 one qubit delivers to the cold bath.

    Populations use the total rates over all baths; the energy quantum is
    the level spacing w0 = 2 sqrt(q^2 + delta^2).
    """
    rates = {b.label: single_qubit_rates(q, delta, g, b) for b in baths}
    down = sum(r[0] for r in rates.values())
    up = sum(r[1] for r in rates.values())
    if not down > 0:
        raise ValueError("reference power undefined for Gamma_down = 0")
    r = up / down
    p_exc = r / (1.0 + r)
    dn_c, up_c = rates["cold"]
    w0 = 2.0 * np.hypot(q, delta)
    return float((-(1.0 - p_exc) * up_c + p_exc * dn_c) * w0)


def cycle_average(records: Sequence[PowerRecord]) -> PowerRecord:
    """Trapezoidal mean over one period sampled at ``record.time`` (phase u).

    The first and last record must sit at the period boundaries.
    """
    if len(records) == 0:
        raise ValueError("no records to average")
    u = np.array([r.time for r in records])
    span = u[-1] - u[0]
    if len(records) == 1 or span == 0:
        return records[0]

    def avg(values):
        return float(np.trapezoid(values, u) / span)

    norms = [r.p_norm for r in records]
    p_norm = None if any(n is None for n in norms) else avg(norms)
    return PowerRecord(
        time=float(u[0]),
        p_cold=avg([r.p_cold for r in records]),
        p_hot=avg([r.p_hot for r in records]),
        p_norm=p_norm,
    )
