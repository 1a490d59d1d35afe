"""Equilibrium (Boltzmann) averages of a macrospin by quadrature.

The steady-state average of an observable O(m) is

    <O> = Int O(m) exp(-E(m)/kT) dS / Int exp(-E(m)/kT) dS

over the unit sphere, with E(m) the anisotropy-plus-Zeeman energy of the
magnet.  Integration uses tensor-product Gauss-Legendre nodes in cos(theta)
and a uniform (trapezoidal) grid in the azimuth, with the order escalated
until the result stops changing.
"""

from __future__ import annotations

import math

import numpy as np

from .constants import K_B
from .magnetics import MagnetParams


class QuadratureError(RuntimeError):
    """Quadrature failed to converge; carries the achieved error estimate."""

    def __init__(self, message, achieved_error):
        super().__init__(f"{message} (achieved error {achieved_error:.3e})")
        self.achieved_error = achieved_error


def langevin(h):
    """coth(h) - 1/h, stable near zero."""
    h = np.asarray(h, dtype=float)
    small = np.abs(h) < 1e-4
    safe = np.where(small, 1.0, h)
    out = 1.0 / np.tanh(safe) - 1.0 / safe
    series = h / 3.0 - h**3 / 45.0
    return np.where(small, series, out)[()]


def _sphere_grid(n_theta):
    """Gauss-Legendre nodes in cos(theta) and a matched azimuth grid."""
    c, w = np.polynomial.legendre.leggauss(n_theta)
    n_phi = max(32, n_theta // 2)
    phi = -math.pi + (np.arange(n_phi) + 0.5) * (2.0 * math.pi / n_phi)
    return c, w, phi


def _components(c, phi):
    # m = (cos(theta), sin(theta) sin(phi), sin(theta) cos(phi))
    s = np.sqrt(np.clip(1.0 - c**2, 0.0, None))
    mx = np.broadcast_to(c[:, None], (c.size, phi.size))
    my = s[:, None] * np.sin(phi)[None, :]
    mz = s[:, None] * np.cos(phi)[None, :]
    return mx, my, mz


def boltzmann_average(params: MagnetParams, h_ext, observable,
                      rtol: float = 1e-6, max_order: int = 4096) -> float:
    """Equilibrium average of observable(mx, my, mz) at params.temperature.

    h_ext is the applied field 3-vector [Oe].  Raises QuadratureError when
    escalating the quadrature order does not converge to rtol.
    """
    if params.temperature <= 0:
        raise ValueError("Boltzmann averages require temperature > 0")
    h_ext = np.asarray(h_ext, dtype=float)
    beta_moment = params.ms_omega / (K_B * params.temperature)  # 1/Oe

    def evaluate(n_theta):
        c, w, phi = _sphere_grid(n_theta)
        mx, my, mz = _components(c, phi)
        # -E/kT up to an additive constant
        exponent = beta_moment * (0.5 * params.h_kp_oe * mx**2
                                  + 0.5 * params.h_ki_oe * mz**2
                                  + h_ext[0] * mx + h_ext[1] * my + h_ext[2] * mz)
        exponent -= exponent.max()
        weight = np.exp(exponent) * w[:, None]
        denom = weight.sum()
        numer = (observable(mx, my, mz) * weight).sum()
        return numer / denom

    order = 32
    prev = evaluate(order)
    while order < max_order:
        order *= 2
        value = evaluate(order)
        err = abs(value - prev)
        if err <= max(rtol * abs(value), 1e-9):
            return value
        prev = value
    raise QuadratureError("quadrature did not converge",
                          abs(value - prev) / max(abs(value), 1e-30))


def mean_component(params: MagnetParams, h_ext, axis: str, **kw) -> float:
    """Equilibrium <m_axis> for axis in 'xyz'."""
    idx = "xyz".index(axis)
    return boltzmann_average(params, h_ext, lambda mx, my, mz: (mx, my, mz)[idx], **kw)


_PIN_COEFF = {"isotropic": 3.0, "PMA": 3.0, "IMA_circular": 2.0}


def pinning_field(params: MagnetParams, geometry: str | None = None) -> float:
    """Field [Oe] required to pin a low-barrier magnet, from the inverse
    initial slope of <m> vs H.

    3 k_B T / (M_s Omega) for isotropic/PMA, 2 k_B T / (M_s Omega) for
    circular IMA.  Only valid for barriers at or below k_B T.
    """
    geometry = params.geometry if geometry is None else geometry
    if geometry not in _PIN_COEFF:
        raise ValueError(f"no low-barrier pinning formula for geometry {geometry!r}")
    if params.barrier_kbt() > 1.0 + 1e-9:
        raise ValueError("pinning-field formulas require a barrier <= k_B T")
    return _PIN_COEFF[geometry] * K_B * params.temperature / params.ms_omega
