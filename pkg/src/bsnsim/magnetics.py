"""Macrospin thermal dynamics of low-barrier magnets.

The free layer is a single moment m (unit vector) with energy

    E = 1/2 H_kp M_s Omega (1 - m_x^2) + 1/2 H_ki M_s Omega (1 - m_z^2)
        - H_ext . m M_s Omega

(H_kp: perpendicular anisotropy along x, negative for easy-plane
demagnetization; H_ki: in-plane uniaxial anisotropy along z).  Dynamics are
integrated with a stochastic Heun scheme (Stratonovich) for the
Landau-Lifshitz form of the Gilbert equation with Slonczewski spin torque
and a Brown thermal field held constant within each step.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .constants import GAMMA, K_B, stt_field

GEOMETRY_CLASSES = ("isotropic", "IMA_circular", "IMA_uniaxial", "PMA")

# anisotropy fields below this magnitude count as "approximately zero"
# when checking geometry-class consistency [Oe]
_GEOMETRY_ATOL = 1e-3


@dataclass(frozen=True)
class MagnetParams:
    """Low-barrier magnet material and geometry parameters (CGS).

    ms: saturation magnetization [emu/cc]; volume: [cc]; h_kp_oe:
    perpendicular anisotropy field along x [Oe] (negative = easy-plane
    demagnetization); h_ki_oe: in-plane uniaxial anisotropy along z [Oe];
    alpha: Gilbert damping; temperature: [K].
    """

    ms: float
    volume: float
    h_kp_oe: float
    h_ki_oe: float
    alpha: float
    temperature: float
    geometry: str

    def __post_init__(self):
        if self.ms <= 0 or self.volume <= 0:
            raise ValueError("ms and volume must be positive")
        # temperature 0 is allowed for deterministic (noise-free) runs
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if self.geometry not in GEOMETRY_CLASSES:
            raise ValueError(f"unknown geometry class {self.geometry!r}")
        if self.geometry == "isotropic":
            if abs(self.h_kp_oe) > _GEOMETRY_ATOL or abs(self.h_ki_oe) > _GEOMETRY_ATOL:
                raise ValueError("isotropic magnets require h_kp ~ 0 and h_ki ~ 0")
        elif self.geometry == "IMA_circular":
            if self.h_kp_oe >= 0 or abs(self.h_ki_oe) > _GEOMETRY_ATOL:
                raise ValueError("IMA_circular requires h_kp < 0 (easy plane) and h_ki ~ 0")
        elif self.geometry == "IMA_uniaxial":
            if self.h_kp_oe >= 0 or self.h_ki_oe <= 0:
                raise ValueError("IMA_uniaxial requires h_kp < 0 and h_ki > 0")
        elif self.geometry == "PMA":
            if self.h_kp_oe < 0 or abs(self.h_ki_oe) > _GEOMETRY_ATOL:
                raise ValueError("PMA requires h_kp >= 0 and h_ki ~ 0")

    @property
    def ms_omega(self) -> float:
        """Total moment M_s * Omega [emu]."""
        return self.ms * self.volume

    @property
    def kbt(self) -> float:
        return K_B * self.temperature

    def thermal_field_std(self, dt: float) -> float:
        """Std of each Cartesian thermal-field component per step [Oe]."""
        if self.temperature == 0:
            return 0.0
        return math.sqrt(2.0 * self.alpha * self.kbt / (GAMMA * self.ms_omega * dt))

    def barrier_kbt(self) -> float:
        """Uniaxial energy barrier of the dominant easy axis in units of k_B T."""
        h_k = max(self.h_kp_oe, self.h_ki_oe, 0.0)
        return h_k * self.ms_omega / (2.0 * self.kbt) if self.temperature > 0 else math.inf

    @property
    def readout_axis(self) -> int:
        """Component index (0=x, 2=z) that carries the magnet's output."""
        return 2 if self.geometry in ("IMA_circular", "IMA_uniaxial") else 0


def barrier_to_anisotropy(delta: float, params: MagnetParams) -> float:
    """Uniaxial anisotropy field H_k [Oe] giving an energy barrier of delta k_B T."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    return 2.0 * delta * params.kbt / params.ms_omega


def anisotropy_to_barrier(h_k: float, params: MagnetParams) -> float:
    """Energy barrier in k_B T units for the uniaxial field h_k [Oe]."""
    return h_k * params.ms_omega / (2.0 * params.kbt)


def retention_time(delta: float, tau_0: float = 0.5e-9) -> float:
    """Arrhenius retention estimate tau_0*exp(delta) for barriers above k_B T."""
    return tau_0 * math.exp(delta)


def demag_field(ms: float) -> float:
    """Thin-film demagnetization field 4*pi*M_s [Oe]."""
    return 4.0 * math.pi * ms


def make_isotropic(ms=1000.0, volume=6.3e-19, temperature=300.0, alpha=0.1) -> MagnetParams:
    return MagnetParams(ms, volume, 0.0, 0.0, alpha, temperature, "isotropic")


def make_ima_circular(ms=1000.0, volume=6.3e-19, temperature=300.0, alpha=0.01,
                      h_d=None) -> MagnetParams:
    """Circular in-plane disk: easy y-z plane from the demagnetization field."""
    h_d = demag_field(ms) if h_d is None else h_d
    return MagnetParams(ms, volume, -h_d, 0.0, alpha, temperature, "IMA_circular")


def make_pma(delta=0.5, ms=1000.0, volume=6.3e-19, temperature=300.0, alpha=0.1) -> MagnetParams:
    """Perpendicular (easy x-axis) magnet with barrier delta k_B T."""
    h_kp = 2.0 * delta * K_B * temperature / (ms * volume)
    return MagnetParams(ms, volume, h_kp, 0.0, alpha, temperature, "PMA")


def make_ima_uniaxial(delta=5.0, ms=1000.0, volume=6.3e-19, temperature=300.0,
                      alpha=0.01, h_d=None) -> MagnetParams:
    """In-plane magnet with uniaxial easy z-axis (telegraphic for delta of a few)."""
    h_d = demag_field(ms) if h_d is None else h_d
    h_ki = 2.0 * delta * K_B * temperature / (ms * volume)
    return MagnetParams(ms, volume, -h_d, h_ki, alpha, temperature, "IMA_uniaxial")


@dataclass
class MagnetState:
    """Unit magnetization vector."""

    m: np.ndarray

    @classmethod
    def from_vector(cls, v) -> "MagnetState":
        v = np.asarray(v, dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("zero magnetization vector")
        return cls(v / norm)


_ZERO3 = np.zeros(3)
_XHAT = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class DriveConditions:
    """External field [Oe], spin current [A] and its polarization axis."""

    h_ext: np.ndarray = field(default_factory=lambda: _ZERO3.copy())
    i_s: float = 0.0
    p_hat: np.ndarray = field(default_factory=lambda: _XHAT.copy())

    def __post_init__(self):
        object.__setattr__(self, "h_ext", np.asarray(self.h_ext, dtype=float))
        object.__setattr__(self, "p_hat", np.asarray(self.p_hat, dtype=float))
        if self.h_ext.shape != (3,) or self.p_hat.shape != (3,):
            raise ValueError("h_ext and p_hat must be 3-vectors")
        if abs(np.linalg.norm(self.p_hat) - 1.0) > 1e-9:
            raise ValueError("p_hat must be a unit vector")


def effective_field(params: MagnetParams, state: MagnetState, drive: DriveConditions) -> np.ndarray:
    """Anisotropy plus Zeeman field -dE/d(M_s Omega m) [Oe]."""
    m = state.m
    h = drive.h_ext.astype(float).copy()
    h[0] += params.h_kp_oe * m[0]
    h[2] += params.h_ki_oe * m[2]
    return h


@njit(cache=True, inline="always")
def _heun_step(mx, my, mz, h_kp, h_ki, thx, thy, thz, hsx, hsy, hsz, alpha, dt):
    """One stochastic Heun step for a single macrospin.

    (thx, thy, thz) is the static-plus-thermal field held constant over the
    step; (hsx, hsy, hsz) the spin-torque field hs * p_hat.  Returns the
    renormalized magnetization components.
    """
    pre = -GAMMA / (1.0 + alpha * alpha)
    # predictor slope
    hx = thx + h_kp * mx
    hy = thy
    hz = thz + h_ki * mz
    # m x H
    cx = my * hz - mz * hy
    cy = mz * hx - mx * hz
    cz = mx * hy - my * hx
    # m x (m x H)
    dx = my * cz - mz * cy
    dy = mz * cx - mx * cz
    dz = mx * cy - my * cx
    # m x p and m x (m x p), scaled by hs
    px = my * hsz - mz * hsy
    py = mz * hsx - mx * hsz
    pz = mx * hsy - my * hsx
    qx = my * pz - mz * py
    qy = mz * px - mx * pz
    qz = mx * py - my * px
    k1x = pre * (cx + alpha * dx + qx - alpha * px)
    k1y = pre * (cy + alpha * dy + qy - alpha * py)
    k1z = pre * (cz + alpha * dz + qz - alpha * pz)

    # corrector slope at the Euler predictor (same noise)
    ux = mx + dt * k1x
    uy = my + dt * k1y
    uz = mz + dt * k1z
    hx = thx + h_kp * ux
    hy = thy
    hz = thz + h_ki * uz
    cx = uy * hz - uz * hy
    cy = uz * hx - ux * hz
    cz = ux * hy - uy * hx
    dx = uy * cz - uz * cy
    dy = uz * cx - ux * cz
    dz = ux * cy - uy * cx
    px = uy * hsz - uz * hsy
    py = uz * hsx - ux * hsz
    pz = ux * hsy - uy * hsx
    qx = uy * pz - uz * py
    qy = uz * px - ux * pz
    qz = ux * py - uy * px
    k2x = pre * (cx + alpha * dx + qx - alpha * px)
    k2y = pre * (cy + alpha * dy + qy - alpha * py)
    k2z = pre * (cz + alpha * dz + qz - alpha * pz)

    half_dt = 0.5 * dt
    mx += half_dt * (k1x + k2x)
    my += half_dt * (k1y + k2y)
    mz += half_dt * (k1z + k2z)
    inv = 1.0 / math.sqrt(mx * mx + my * my + mz * mz)
    return mx * inv, my * inv, mz * inv


@njit(cache=True)
def _heun_chunk(m, h_kp, h_ki, hext, hs, phat, alpha, dt, noise,
                sum_m, sum_m2, burn_steps, step0,
                rec, rec_stride):
    """Advance a batch of macrospins through one noise chunk.

    m:      (B, 3) unit vectors, updated in place
    hext:   (B, 3) static external field [Oe]
    hs:     (B,)   signed spin-torque field amplitude [Oe]
    phat:   (B, 3) spin polarization unit vectors
    noise:  (S, B, 3) thermal field realizations [Oe]
    sum_m / sum_m2: (B, 3) accumulators for first/second moments
                    (steps after burn_steps, counted globally via step0)
    rec:    (R, B, 3) decimated sample store, written at global steps that
            are multiples of rec_stride (rec_stride == 0 disables)
    Returns the number of accumulated steps added to the sums.
    """
    n_steps = noise.shape[0]
    n_batch = m.shape[0]
    n_acc = 0
    for s in range(n_steps):
        gstep = step0 + s
        accumulate = gstep >= burn_steps
        if accumulate:
            n_acc += 1
        for b in range(n_batch):
            mx, my, mz = _heun_step(m[b, 0], m[b, 1], m[b, 2], h_kp, h_ki,
                                    hext[b, 0] + noise[s, b, 0],
                                    hext[b, 1] + noise[s, b, 1],
                                    hext[b, 2] + noise[s, b, 2],
                                    hs[b] * phat[b, 0], hs[b] * phat[b, 1],
                                    hs[b] * phat[b, 2], alpha, dt)
            m[b, 0] = mx
            m[b, 1] = my
            m[b, 2] = mz
            if accumulate:
                sum_m[b, 0] += mx
                sum_m[b, 1] += my
                sum_m[b, 2] += mz
                sum_m2[b, 0] += mx * mx
                sum_m2[b, 1] += my * my
                sum_m2[b, 2] += mz * mz
            if rec_stride > 0 and (gstep + 1) % rec_stride == 0:
                r = (gstep + 1) // rec_stride - 1
                if 0 <= r < rec.shape[0]:
                    rec[r, b, 0] = mx
                    rec[r, b, 1] = my
                    rec[r, b, 2] = mz
    return n_acc


_EMPTY_REC = np.zeros((0, 1, 3))

# noise chunk size (steps); bounds memory at ~1.6 MB per batch member
_CHUNK_STEPS = 1 << 16


def _random_unit_vectors(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _run_batch(params, hext, hs, phat, n_steps, dt, rng, m0,
               burn_steps=0, rec_stride=0, n_rec=0):
    """Drive the Heun kernel chunk by chunk; returns (m, mean, mean2, rec)."""
    n_batch = m0.shape[0]
    m = np.ascontiguousarray(m0, dtype=float).copy()
    sum_m = np.zeros((n_batch, 3))
    sum_m2 = np.zeros((n_batch, 3))
    rec = np.zeros((n_rec, n_batch, 3)) if rec_stride > 0 else _EMPTY_REC
    sigma = params.thermal_field_std(dt)
    n_acc = 0
    step0 = 0
    while step0 < n_steps:
        chunk = min(_CHUNK_STEPS, n_steps - step0)
        if sigma > 0:
            noise = rng.standard_normal((chunk, n_batch, 3)) * sigma
        else:
            noise = np.zeros((chunk, n_batch, 3))
        n_acc += _heun_chunk(m, params.h_kp_oe, params.h_ki_oe, hext, hs, phat,
                             params.alpha, dt, noise, sum_m, sum_m2,
                             burn_steps, step0, rec, rec_stride)
        step0 += chunk
    if n_acc > 0:
        sum_m /= n_acc
        sum_m2 /= n_acc
    return m, sum_m, sum_m2, rec


@dataclass
class Trajectory:
    """Decimated macrospin time series, bit-reproducible from its seed."""

    dt: float
    stride: int
    samples: np.ndarray  # (n, 3)
    seed: int

    @property
    def sample_dt(self) -> float:
        return self.dt * self.stride

    @property
    def t(self) -> np.ndarray:
        return (1 + np.arange(self.samples.shape[0])) * self.sample_dt

    def component(self, name: str) -> np.ndarray:
        return self.samples[:, "xyz".index(name)]


def sllg_step(state: MagnetState, params: MagnetParams, drive: DriveConditions,
              dt: float, rng: np.random.Generator) -> MagnetState:
    """One stochastic-LLG step; returns a renormalized state.

    dt should be at least 100x smaller than the fastest precession or
    relaxation timescale of the magnet.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    m = np.asarray(state.m, dtype=float)
    if abs(np.linalg.norm(m) - 1.0) > 1e-6:
        raise ValueError("input state must be a unit vector")
    mb = m.reshape(1, 3).copy()
    hext = drive.h_ext.reshape(1, 3).astype(float)
    hs = np.array([stt_field(drive.i_s, params.ms_omega)])
    phat = drive.p_hat.reshape(1, 3).astype(float)
    sigma = params.thermal_field_std(dt)
    noise = rng.standard_normal((1, 1, 3)) * sigma if sigma > 0 else np.zeros((1, 1, 3))
    _heun_chunk(mb, params.h_kp_oe, params.h_ki_oe, hext, hs, phat,
                params.alpha, dt, noise, np.zeros((1, 3)), np.zeros((1, 3)),
                1, 0, _EMPTY_REC, 0)
    return MagnetState(mb[0])


def simulate_trajectory(params: MagnetParams, drive: DriveConditions,
                        duration: float, dt: float, seed: int,
                        stride: int = 1, m0=None,
                        expected_tau_corr: float | None = None) -> Trajectory:
    """Integrate a single magnet and record every stride-th sample."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if expected_tau_corr is not None and duration < 1000 * expected_tau_corr:
        warnings.warn("duration below 1000x expected correlation time; "
                      "statistics may be poor", stacklevel=2)
    n_steps = int(round(duration / dt))
    rng = np.random.Generator(np.random.Philox(seed))
    if m0 is None:
        m0 = _random_unit_vectors(rng, 1)
    else:
        m0 = np.asarray(m0, dtype=float).reshape(1, 3)
        m0 = m0 / np.linalg.norm(m0)
    hext = drive.h_ext.reshape(1, 3).astype(float)
    hs = np.array([stt_field(drive.i_s, params.ms_omega)])
    phat = drive.p_hat.reshape(1, 3).astype(float)
    n_rec = n_steps // stride
    _, _, _, rec = _run_batch(params, hext, hs, phat, n_steps, dt, rng, m0,
                              rec_stride=stride, n_rec=n_rec)
    return Trajectory(dt=dt, stride=stride, samples=rec[:, 0, :], seed=seed)


def ensemble_moments(params: MagnetParams, duration: float, dt: float, seed: int,
                     h_ext=None, i_s=None, p_hat=(1.0, 0.0, 0.0),
                     n_replicas: int | None = None, burn_frac: float = 0.1):
    """Time-averaged first and second moments for a batch of drive points.

    h_ext may be a single 3-vector or an (B, 3) array; i_s a scalar or (B,)
    array of spin currents.  Each batch member integrates independently with
    its own initial condition.  Returns (mean_m, mean_m2), each (B, 3).
    """
    h_ext = np.zeros(3) if h_ext is None else np.asarray(h_ext, dtype=float)
    i_s = np.asarray(0.0 if i_s is None else i_s, dtype=float)
    if h_ext.ndim == 1:
        h_ext = h_ext.reshape(1, 3)
    n_batch = max(h_ext.shape[0], i_s.size if i_s.ndim else 1, n_replicas or 1)
    hext = np.broadcast_to(h_ext, (n_batch, 3)).copy()
    hs = stt_field(np.broadcast_to(i_s, (n_batch,)).astype(float), params.ms_omega)
    phat = np.broadcast_to(np.asarray(p_hat, dtype=float), (n_batch, 3)).copy()
    n_steps = int(round(duration / dt))
    burn_steps = int(burn_frac * n_steps)
    rng = np.random.Generator(np.random.Philox(seed))
    m0 = _random_unit_vectors(rng, n_batch)
    _, mean_m, mean_m2, _ = _run_batch(params, hext, np.ascontiguousarray(hs), phat,
                                       n_steps, dt, rng, m0, burn_steps=burn_steps)
    return mean_m, mean_m2
