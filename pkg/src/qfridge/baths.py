"""Thermal baths: resistors embedded in LC resonators.

The unsymmetrized current-noise spectrum is taken as a quantum-thermal
factor times the resonator Lorentzian, with unit prefactor::

    s(w) = w / ([1 + Q^2 (w/w_r - w_r/w)^2] * (1 - exp(-w/theta)))

Positive w is emission into the bath (qubit relaxation), negative w is
absorption from it. s(0) = 0 by continuity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Bath:
    """One reservoir. ``theta`` = k_B T / E0, ``w_res`` = hbar*omega_B / E0."""

    label: str
    theta: float
    w_res: float
    quality: float

    def __post_init__(self):
        if self.label not in ("cold", "hot"):
            raise ValueError(f"bath label must be 'cold' or 'hot', got {self.label!r}")
        for name in ("theta", "w_res", "quality"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")


def spectral(bath: Bath, w):
    """Noise spectral density s_B(w); scalar or array input."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    nz = w != 0.0
    wn = w[nz]
    # overflow only sends the Lorentzian to inf and s to its 0 limit
    with np.errstate(over="ignore"):
        detune = wn / bath.w_res - bath.w_res / wn
        lorentz = 1.0 + bath.quality**2 * detune**2
        thermal = -np.expm1(-wn / bath.theta)
    out[nz] = wn / (lorentz * thermal)
    return out if out.ndim else float(out)
