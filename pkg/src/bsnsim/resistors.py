"""Stochastic two-terminal resistors.

Four classes by fluctuation character (continuous vs bipolar/telegraphic)
and current tunability (tunable vs non-tunable): NTC, NTB, TC, TB.  Each
can be backed either by a fast behavioral process or by a stochastic-LLG
magnetic tunnel junction whose free layer is a low-barrier magnet.

Behavioral processes (latent variable y in [-1, 1], y=+1 <-> R_AP):
  NTC  cosine of a Brownian phase (arcsine stationary law)
  NTB  symmetric telegraph
  TC   cosine of a tilted Brownian phase, drift 2x sin(psi)/tau; the
       stationary law is von Mises with mean I1(2x)/I0(2x), so the
       occupancy slope at the 50:50 point is 1/I_0 like the telegraph
  TB   telegraph with rates exp(+-x)/(2 tau), stationary mean tanh(x)
where x = (I - I_50)/I_0 for tunable kinds and 0 otherwise.  All are
calibrated so the autocorrelation time of y equals tau_fluct.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numba import njit

from .analysis import AnalysisError
from .magnetics import (DriveConditions, MagnetParams, MagnetState, sllg_step,
                        simulate_trajectory)


class ResistorKind(str, Enum):
    NTC = "NTC"
    NTB = "NTB"
    TC = "TC"
    TB = "TB"

    @property
    def tunable(self) -> bool:
        return self in (ResistorKind.TC, ResistorKind.TB)

    @property
    def bipolar(self) -> bool:
        return self in (ResistorKind.NTB, ResistorKind.TB)


KIND_ID = {ResistorKind.NTC: 0, ResistorKind.NTB: 1, ResistorKind.TC: 2, ResistorKind.TB: 3}


@dataclass(frozen=True)
class ResistorParams:
    """Fluctuating-resistor definition.

    r_p < r_ap are the two extreme resistances [ohm]; n = r_ap/r_p.  For
    tunable kinds i_50 is the 50:50 current and i_0 the bias current
    (inverse slope of the occupancy curve at the 50:50 point), both in
    ampere.  inverted=True flips the R-vs-I sense (R decreasing with I),
    which is the orientation the design rules forbid.
    """

    kind: ResistorKind
    r_p: float
    r_ap: float
    tau_fluct: float | None = None
    i_50: float | None = None
    i_0: float | None = None
    inverted: bool = False
    backend: str = "behavioral"  # "behavioral" | "mtj"
    magnet: MagnetParams | None = None
    p_eff: float = 1.0
    bias_field_oe: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ResistorKind(self.kind))
        if not 0 < self.r_p < self.r_ap:
            raise ValueError("require 0 < r_p < r_ap")
        if self.backend not in ("behavioral", "mtj"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "behavioral":
            if self.tau_fluct is None or self.tau_fluct <= 0:
                raise ValueError("behavioral resistors need tau_fluct > 0")
        elif self.magnet is None:
            raise ValueError("mtj backend needs magnet parameters")
        if self.kind.tunable:
            if self.backend == "behavioral":
                if self.i_50 is None or self.i_50 < 0:
                    raise ValueError("tunable resistors need i_50 >= 0")
                if self.i_0 is None or self.i_0 <= 0:
                    raise ValueError("tunable resistors need i_0 > 0")
        elif self.i_50 is not None or self.i_0 is not None:
            warnings.warn("i_50/i_0 are unused for non-tunable kinds", stacklevel=2)

    @property
    def n(self) -> float:
        return self.r_ap / self.r_p


def tmr(params: ResistorParams) -> float:
    """Tunneling magnetoresistance in percent, (n - 1) x 100."""
    return (params.n - 1.0) * 100.0


def resistance_from_m(m_parallel, r_p: float, r_ap: float):
    """MTJ resistance from the magnetization projection on the fixed layer.

    Conductance interpolates linearly: m=+1 gives R_P (parallel), m=-1
    gives R_AP.
    """
    m = np.asarray(m_parallel, dtype=float)
    if np.any(m < -1 - 1e-9) or np.any(m > 1 + 1e-9):
        raise ValueError("m_parallel must lie in [-1, 1]")
    m = np.clip(m, -1.0, 1.0)
    g = 0.5 * (1.0 + m) / r_p + 0.5 * (1.0 - m) / r_ap
    return (1.0 / g)[()]


def _resistance_from_y(y, params):
    # y is the AP-ness latent: y = -m_parallel
    return resistance_from_m(-np.asarray(y), params.r_p, params.r_ap)


# tilt cap for the TC phase drift; e^(2*15) occupancy is fully pinned and
# larger tilts would destabilize the explicit phase update
_TC_KAPPA_MAX = 15.0


@njit(cache=True, inline="always")
def _beh_step(kind, latent, x, dt_over_tau, g, u):
    """One behavioral update; latent is the phase for NTC/TC, else y."""
    if kind == 0:  # Brownian phase on a circle
        return latent + math.sqrt(2.0 * dt_over_tau) * g
    if kind == 2:  # tilted Brownian phase, stationary ~ exp(kappa cos(psi))
        kappa = 2.0 * x
        if kappa > _TC_KAPPA_MAX:
            kappa = _TC_KAPPA_MAX
        elif kappa < -_TC_KAPPA_MAX:
            kappa = -_TC_KAPPA_MAX
        return latent - kappa * math.sin(latent) * dt_over_tau \
            + math.sqrt(2.0 * dt_over_tau) * g
    # telegraphs: leave-rate (in 1/tau units) from the occupied state
    if kind == 1:
        lam = 0.5
    else:
        lam = 0.5 * math.exp(x) if latent < 0.0 else 0.5 * math.exp(-x)
    if u < 1.0 - math.exp(-lam * dt_over_tau):
        return -latent
    return latent


@njit(cache=True, inline="always")
def _beh_y(kind, latent):
    return math.cos(latent) if kind == 0 or kind == 2 else latent


@njit(cache=True)
def _beh_series(kind, latent0, x, dt_over_tau, gauss, uni, out_y):
    lat = latent0
    for k in range(out_y.shape[0]):
        lat = _beh_step(kind, lat, x, dt_over_tau, gauss[k], uni[k])
        out_y[k] = _beh_y(kind, lat)
    return lat


@dataclass
class ResistorState:
    """Instantaneous resistance plus the backend latent state."""

    r: float
    latent: float | np.ndarray


def _drive_x(params: ResistorParams, i: float) -> float:
    if not params.kind.tunable:
        return 0.0
    x = (i - params.i_50) / params.i_0
    return -x if params.inverted else x


def initial_state(params: ResistorParams, rng: np.random.Generator,
                  i: float = 0.0) -> ResistorState:
    """Draw a stationary (or near-stationary) starting state."""
    if params.backend == "mtj":
        v = rng.standard_normal(3)
        m = v / np.linalg.norm(v)
        axis = params.magnet.readout_axis
        return ResistorState(r=float(resistance_from_m(m[axis], params.r_p, params.r_ap)),
                             latent=m)
    kind = params.kind
    x = _drive_x(params, i)
    if kind == ResistorKind.NTC:
        latent = rng.uniform(0.0, 2.0 * math.pi)
    elif kind == ResistorKind.TC:
        kappa = float(np.clip(2.0 * x, -_TC_KAPPA_MAX, _TC_KAPPA_MAX))
        latent = float(rng.vonmises(0.0, kappa)) if kappa >= 0 \
            else float(rng.vonmises(math.pi, -kappa))
    else:
        p_ap = 0.5 * (1.0 + math.tanh(x))
        latent = 1.0 if rng.random() < p_ap else -1.0
    y = math.cos(latent) if kind in (ResistorKind.NTC, ResistorKind.TC) else latent
    return ResistorState(r=float(_resistance_from_y(y, params)), latent=latent)


def step(state: ResistorState, params: ResistorParams, i: float, dt: float,
         rng: np.random.Generator) -> ResistorState:
    """Advance the resistor one step under branch current i >= 0 [A]."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if i < 0:
        raise ValueError("the circuit only supports positive branch current")
    if params.backend == "mtj":
        mag = params.magnet
        axis = np.zeros(3)
        axis[mag.readout_axis] = 1.0
        sign = 1.0 if params.inverted else -1.0  # drive toward AP by default
        drive = DriveConditions(h_ext=params.bias_field_oe * axis,
                                i_s=params.p_eff * i, p_hat=sign * axis)
        m = sllg_step(MagnetState(np.asarray(state.latent, dtype=float)), mag,
                      drive, dt, rng).m
        r = float(resistance_from_m(m[mag.readout_axis], params.r_p, params.r_ap))
        return ResistorState(r=r, latent=m)
    kind_id = KIND_ID[params.kind]
    latent = _beh_step(kind_id, float(state.latent), _drive_x(params, i),
                       dt / params.tau_fluct,
                       rng.standard_normal(), rng.random())
    y = math.cos(latent) if kind_id in (0, 2) else latent
    return ResistorState(r=float(_resistance_from_y(y, params)), latent=latent)


def resistance_series(params: ResistorParams, i: float, duration: float,
                      dt: float | None, seed: int) -> tuple[float, np.ndarray]:
    """Fixed-current resistance time series; returns (dt, r array)."""
    rng = np.random.Generator(np.random.Philox(seed))
    if params.backend == "mtj":
        if dt is None:
            raise ValueError("dt is required for the mtj backend")
        mag = params.magnet
        axis = np.zeros(3)
        axis[mag.readout_axis] = 1.0
        sign = 1.0 if params.inverted else -1.0
        drive = DriveConditions(h_ext=params.bias_field_oe * axis,
                                i_s=params.p_eff * i, p_hat=sign * axis)
        traj = simulate_trajectory(mag, drive, duration, dt, seed)
        m_par = traj.samples[:, mag.readout_axis]
        return dt, np.asarray(resistance_from_m(m_par, params.r_p, params.r_ap))
    if dt is None:
        dt = params.tau_fluct / 50.0
    n = int(round(duration / dt))
    state = initial_state(params, rng, i)
    y = np.empty(n)
    _beh_series(KIND_ID[params.kind], float(state.latent), _drive_x(params, i),
                dt / params.tau_fluct,
                rng.standard_normal(n), rng.random(n), y)
    return dt, np.asarray(_resistance_from_y(y, params))


@dataclass
class RHistogram:
    """Normalized stationary resistance histogram with a modality tag."""

    bin_edges: np.ndarray
    probs: np.ndarray
    modality: str  # "continuous" | "bipolar"


def stationary_histogram(params: ResistorParams, i: float, duration: float,
                         dt: float | None = None, seed: int = 0,
                         bins: int = 60) -> RHistogram:
    """Histogram of the stationary resistance under constant current."""
    if params.tau_fluct is not None and duration < 1000 * params.tau_fluct:
        raise AnalysisError("duration below 1000x tau_fluct: insufficient samples")
    _, r = resistance_series(params, i, duration, dt, seed)
    pad = 1e-9 * (params.r_ap - params.r_p)
    edges = np.linspace(params.r_p - pad, params.r_ap + pad, bins + 1)
    counts, _ = np.histogram(r, bins=edges)
    probs = counts / counts.sum()
    extreme_mass = probs[0] + probs[-1]
    modality = "bipolar" if extreme_mass >= 0.9 else "continuous"
    return RHistogram(bin_edges=edges, probs=probs, modality=modality)


def mean_resistance(params: ResistorParams, i: float, duration: float,
                    dt: float | None = None, seed: int = 0) -> float:
    """Long-time average resistance at constant current."""
    _, r = resistance_series(params, i, duration, dt, seed)
    return float(r.mean())
