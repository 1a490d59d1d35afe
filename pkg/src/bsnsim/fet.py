"""Behavioral NMOS current source.

A single smooth expression covers subthreshold through saturation: an
EKV-style squared-softplus gate factor times a saturating drain factor,

    I_D = I_spec * ln^2(1 + exp((V_GS - V_T)/(2 n phi_t)))
                 * (1 - exp(-V_DS/phi_t)) * (1 + lambda V_DS).

I_spec is calibrated so I_D(V_DD, V_DD) equals the requested saturation
current.  The curve is monotone nondecreasing in both voltages; the
transistor acts as a constant current source once V_DS exceeds a few
thermal voltages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

PHI_T = 0.02585  # thermal voltage at 300 K [V]


@njit(cache=True, inline="always")
def _gate_factor(v_gs, i_spec, v_t, two_n_phi):
    u = (v_gs - v_t) / two_n_phi
    if u > 30.0:
        s = u
    else:
        s = math.log1p(math.exp(u))
    return i_spec * s * s


@njit(cache=True, inline="always")
def _drain_factor(v_ds, phi_t, lam):
    return (1.0 - math.exp(-v_ds / phi_t)) * (1.0 + lam * v_ds)


@dataclass(frozen=True)
class FetModel:
    """NMOS parameters. i_plus_max is the technology's maximum drive-current
    rating used by the design rules (the paper-scale headroom available by
    paralleling devices), not a point on this single device's I-V."""

    v_dd: float = 0.8
    v_t: float = 0.65
    i_dsat: float = 15e-6
    i_plus_max: float = 40e-6
    slope_factor: float = 1.354
    lambda_clm: float = 0.1
    phi_t: float = PHI_T

    def __post_init__(self):
        if self.v_dd <= 0 or self.i_dsat <= 0 or self.i_plus_max <= 0:
            raise ValueError("v_dd, i_dsat, i_plus_max must be positive")
        if not 0 < self.v_t < self.v_dd:
            raise ValueError("v_t must lie inside (0, v_dd)")

    @property
    def two_n_phi(self) -> float:
        return 2.0 * self.slope_factor * self.phi_t

    @property
    def i_spec(self) -> float:
        u = (self.v_dd - self.v_t) / self.two_n_phi
        gate = math.log1p(math.exp(u)) ** 2
        return self.i_dsat / (gate * _drain_factor(self.v_dd, self.phi_t, self.lambda_clm))


def fet_current(fet: FetModel, v_gs, v_ds):
    """Drain current [A] at the given gate and drain voltages [V]."""
    v_gs = np.asarray(v_gs, dtype=float)
    v_ds = np.asarray(v_ds, dtype=float)
    eps = 1e-12
    if np.any(v_gs < -eps) or np.any(v_gs > fet.v_dd + eps) \
            or np.any(v_ds < -eps) or np.any(v_ds > fet.v_dd + eps):
        raise ValueError("voltages must lie within [0, V_DD]")
    u = (v_gs - fet.v_t) / fet.two_n_phi
    gate = fet.i_spec * np.log1p(np.exp(np.minimum(u, 30.0))) ** 2
    gate = np.where(u > 30.0, fet.i_spec * u**2, gate)
    drain = (1.0 - np.exp(-v_ds / fet.phi_t)) * (1.0 + fet.lambda_clm * v_ds)
    return (gate * drain)[()]


def edge_current(fet: FetModel, v_gs) -> float:
    """Drive current with the node at the inverter threshold V_DD/2.

    This is the current that decides which side of the threshold the node
    lands on; the stochastic-region edges and the n = I+/I- design rule
    are expressed through it.
    """
    return fet_current(fet, v_gs, fet.v_dd / 2.0)
