"""The 3T-1SR binary stochastic neuron circuit.

Topology: fluctuating resistor from V_DD down to the node V_i, NMOS from
the node to ground with its gate at V_IN, then an inverter thresholding
V_i at V_DD/2.  The node is solved algebraically every step (quasi-static:
resistor timescales far exceed electrical settling); the load capacitance
enters through a single-pole low-pass in front of the inverter, with time
constant R(t) * C_load.

Output convention: m = +1 when the filtered node sits below V_DD/2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from numba import njit
from scipy.optimize import curve_fit

from .analysis import AnalysisError, autocorrelation_time
from .constants import stt_field
from .fet import FetModel, _drain_factor, _gate_factor, edge_current, fet_current
from .magnetics import _heun_step
from .resistors import KIND_ID, ResistorKind, ResistorParams, _beh_step, _beh_y


class DesignError(RuntimeError):
    pass


@dataclass(frozen=True)
class BsnCircuit:
    """Stochastic resistor + behavioral NMOS + inverter with load C."""

    resistor: ResistorParams
    fet: FetModel
    c_load: float = 10e-18

    def __post_init__(self):
        if self.c_load <= 0:
            raise ValueError("c_load must be positive")

    @property
    def inverter_threshold(self) -> float:
        return self.fet.v_dd / 2.0


@njit(cache=True, inline="always")
def _node_root(g_gate, r, v_dd, phi_t, lam, v_guess):
    """Node voltage where the FET current meets the resistor load line.

    The FET curve rises and the load line (V_DD - V)/R falls in V, so the
    root is unique and bracketed in [0, V_DD].  Bisection-safeguarded
    Newton from v_guess drives the bracket to ~1e-13 V, which keeps the
    current residual orders of magnitude below 1e-9 I_Dsat.
    """
    lo = 0.0
    hi = v_dd
    v = v_guess
    if v <= lo or v >= hi:
        v = 0.5 * v_dd
    for _ in range(80):
        e = math.exp(-v / phi_t)
        f = g_gate * (1.0 - e) * (1.0 + lam * v) * r - (v_dd - v)
        if f < 0.0:
            lo = v
        else:
            hi = v
        fp = g_gate * r * (e / phi_t * (1.0 + lam * v) + (1.0 - e) * lam) + 1.0
        v_new = v - f / fp
        if v_new <= lo or v_new >= hi:
            v_new = 0.5 * (lo + hi)
        if abs(v_new - v) < 1e-13 or hi - lo < 1e-13:
            v = v_new
            break
        v = v_new
    return v


def solve_node(circuit: BsnCircuit, r: float, v_in: float) -> tuple[float, float]:
    """Solve the resistor/NMOS node; returns (V_i, branch current)."""
    res = circuit.resistor
    if not res.r_p - 1e-9 <= r <= res.r_ap + 1e-9:
        raise ValueError("r outside the resistor's [r_p, r_ap] range")
    fet = circuit.fet
    g_gate = fet_current(fet, v_in, fet.v_dd) / _drain_factor(fet.v_dd, fet.phi_t,
                                                              fet.lambda_clm)
    v_i = _node_root(g_gate, r, fet.v_dd, fet.phi_t, fet.lambda_clm, 0.5 * fet.v_dd)
    return v_i, (fet.v_dd - v_i) / r


@njit(cache=True, inline="always")
def _y_to_r(y, r_p, r_ap):
    g = 0.5 * (1.0 - y) / r_p + 0.5 * (1.0 + y) / r_ap
    return 1.0 / g


@njit(cache=True, inline="always")
def _circuit_step(kind, latent, v_filt, v_prev, g_gate, r_p, r_ap, i_50, i_0,
                  x_sign, dt_over_tau, v_dd, phi_t, lam, c_load, dt, g, u):
    """One co-simulation step; returns (latent, v_filt, v_node, i_branch, out).

    v_prev warm-starts the node solve from the previous step's solution.
    """
    r = _y_to_r(_beh_y(kind, latent), r_p, r_ap)
    v_node = _node_root(g_gate, r, v_dd, phi_t, lam, v_prev)
    i_branch = (v_dd - v_node) / r
    # single-pole low-pass (Thevenin R at the node is the resistor branch)
    v_filt = v_node + (v_filt - v_node) * math.exp(-dt / (r * c_load))
    out = 1 if v_filt < 0.5 * v_dd else -1
    x = x_sign * (i_branch - i_50) / i_0 if kind >= 2 else 0.0
    latent = _beh_step(kind, latent, x, dt_over_tau, g, u)
    return latent, v_filt, v_node, i_branch, out


@njit(cache=True)
def _cosim_means(kind, latents, v_filts, v_nodes, g_gates, r_p, r_ap, i_50, i_0,
                 x_sign, dt_over_tau, v_dd, phi_t, lam, c_load, dt,
                 gauss, uni, burn_steps, step0, sum_out, sum_i, sum_duty):
    """Accumulate per-point means over one chunk (B parallel sweep points)."""
    n_steps = gauss.shape[0]
    n_batch = latents.shape[0]
    n_acc = 0
    for s in range(n_steps):
        accumulate = step0 + s >= burn_steps
        if accumulate:
            n_acc += 1
        for b in range(n_batch):
            latents[b], v_filts[b], v_node, i_branch, out = _circuit_step(
                kind, latents[b], v_filts[b], v_nodes[b], g_gates[b], r_p, r_ap,
                i_50, i_0, x_sign, dt_over_tau, v_dd, phi_t, lam, c_load,
                dt, gauss[s, b], uni[s, b])
            v_nodes[b] = v_node
            if accumulate:
                sum_out[b] += out
                sum_i[b] += i_branch
                if 0.15 * v_dd < v_node < 0.85 * v_dd:
                    sum_duty[b] += 1.0
    return n_acc


@njit(cache=True)
def _cosim_trace(kind, latent, v_filt, v_prev, g_gate, r_p, r_ap, i_50, i_0,
                 x_sign, dt_over_tau, v_dd, phi_t, lam, c_load, dt,
                 gauss, uni, out_out, out_i, out_v):
    for s in range(gauss.shape[0]):
        latent, v_filt, v_prev, i_branch, out = _circuit_step(
            kind, latent, v_filt, v_prev, g_gate, r_p, r_ap, i_50, i_0, x_sign,
            dt_over_tau, v_dd, phi_t, lam, c_load, dt, gauss[s], uni[s])
        out_out[s] = out
        out_i[s] = i_branch
        out_v[s] = v_prev
    return latent, v_filt, v_prev


@njit(cache=True)
def _cosim_ensemble(kind, latents, v_filts, v_nodes, g_gate, r_p, r_ap, i_50,
                    i_0, x_sign, dt_over_tau, v_dd, phi_t, lam, c_load,
                    dt, gauss, uni, mean_out, step0):
    """All replicas at one input; accumulates the ensemble-mean output per step."""
    n_steps = gauss.shape[0]
    n_batch = latents.shape[0]
    for s in range(n_steps):
        acc = 0.0
        for b in range(n_batch):
            latents[b], v_filts[b], v_node, _, out = _circuit_step(
                kind, latents[b], v_filts[b], v_nodes[b], g_gate, r_p, r_ap,
                i_50, i_0, x_sign, dt_over_tau, v_dd, phi_t, lam, c_load,
                dt, gauss[s, b], uni[s, b])
            v_nodes[b] = v_node
            acc += out
        if mean_out.shape[0] > 0:
            mean_out[step0 + s] = acc / n_batch
    return 0


@njit(cache=True)
def _cosim_means_mtj(mvecs, v_filts, v_nodes, g_gates, r_p, r_ap, h_kp, h_ki,
                     alpha, axis, bias_field, hs_per_amp, p_sign, sigma_th,
                     v_dd, phi_t, lam, c_load, dt, noise,
                     burn_steps, step0, sum_out, sum_i, sum_duty):
    """Transfer-curve accumulation with a stochastic-LLG MTJ backend."""
    n_steps = noise.shape[0]
    n_batch = mvecs.shape[0]
    n_acc = 0
    for s in range(n_steps):
        accumulate = step0 + s >= burn_steps
        if accumulate:
            n_acc += 1
        for b in range(n_batch):
            m_par = mvecs[b, axis]
            r = _y_to_r(-m_par, r_p, r_ap)
            v_node = _node_root(g_gates[b], r, v_dd, phi_t, lam, v_nodes[b])
            v_nodes[b] = v_node
            i_branch = (v_dd - v_node) / r
            v_filts[b] = v_node + (v_filts[b] - v_node) * math.exp(-dt / (r * c_load))
            out = 1 if v_filts[b] < 0.5 * v_dd else -1
            hs = p_sign * hs_per_amp * i_branch
            thx = noise[s, b, 0]
            thy = noise[s, b, 1]
            thz = noise[s, b, 2]
            hsx = hs if axis == 0 else 0.0
            hsz = hs if axis == 2 else 0.0
            if axis == 0:
                thx += bias_field
            else:
                thz += bias_field
            mx, my, mz = _heun_step(mvecs[b, 0], mvecs[b, 1], mvecs[b, 2],
                                    h_kp, h_ki, thx, thy, thz,
                                    hsx, 0.0, hsz, alpha, dt)
            mvecs[b, 0] = mx
            mvecs[b, 1] = my
            mvecs[b, 2] = mz
            if accumulate:
                sum_out[b] += out
                sum_i[b] += i_branch
                if 0.15 * v_dd < v_node < 0.85 * v_dd:
                    sum_duty[b] += 1.0
    return n_acc


_CHUNK = 1 << 12


def _gate_factors(fet: FetModel, v_in) -> np.ndarray:
    v_in = np.atleast_1d(np.asarray(v_in, dtype=float))
    return np.asarray(fet_current(fet, v_in, fet.v_dd)
                      / _drain_factor(fet.v_dd, fet.phi_t, fet.lambda_clm))


def _beh_args(circuit: BsnCircuit, dt: float):
    res = circuit.resistor
    kind = KIND_ID[res.kind]
    x_sign = -1.0 if res.inverted else 1.0
    i_50 = res.i_50 if res.i_50 is not None else 0.0
    i_0 = res.i_0 if res.i_0 is not None else 1.0
    return kind, res.r_p, res.r_ap, i_50, i_0, x_sign, dt / res.tau_fluct


def _init_latents(circuit: BsnCircuit, rng, n: int, v_in) -> tuple[np.ndarray, np.ndarray]:
    """Stationary-ish latent draws plus settled filter voltages."""
    res = circuit.resistor
    if res.kind in (ResistorKind.NTC, ResistorKind.TC):
        latents = rng.uniform(0.0, 2.0 * math.pi, n)
    else:
        latents = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    v_filts = np.empty(n)
    v_arr = np.broadcast_to(np.atleast_1d(v_in), (n,))
    for k in range(n):
        y = math.cos(latents[k]) if res.kind in (ResistorKind.NTC, ResistorKind.TC) else latents[k]
        r = _y_to_r(y, res.r_p, res.r_ap)
        v_filts[k], _ = solve_node(circuit, r, float(v_arr[k]))
    return latents, v_filts


@dataclass
class TransferCurve:
    """Averaged BSN output vs input voltage, with tanh fit and class tag."""

    v_in: np.ndarray
    mean_out: np.ndarray
    v0: float
    vs: float
    rmse: float
    classification: str  # sigmoid | staircase | nonmonotone | unclassified
    mean_current: np.ndarray
    duty: np.ndarray
    insufficient_averaging: bool = False


def _fit_tanh(v, m):
    span = v[-1] - v[0]
    crossing = v[int(np.argmin(np.abs(m)))]

    def f(x, v0, vs):
        return np.tanh((x - v0) / vs)

    try:
        (v0, vs), _ = curve_fit(f, v, m, p0=(crossing, span / 10.0),
                                bounds=([v[0] - span, 1e-6], [v[-1] + span, 10 * span]),
                                maxfev=10000)
        rmse = float(np.sqrt(np.mean((f(v, v0, vs) - m) ** 2)))
    except RuntimeError:
        v0, vs, rmse = math.nan, math.nan, math.inf
    return float(v0), float(vs), rmse


def classify_curve(v, m, rmse) -> str:
    """Sigmoid / staircase / nonmonotone taxonomy of a transfer curve."""
    if rmse < 0.05:
        return "sigmoid"
    sat_lo = np.nonzero(m <= -0.9)[0]
    sat_hi = np.nonzero(m >= 0.9)[0]
    if sat_lo.size and sat_hi.size and sat_lo[-1] < sat_hi[0]:
        interior = m[sat_lo[-1] + 1:sat_hi[0]]
        if interior.size >= 3 and np.mean(np.abs(interior) < 0.1) >= 0.6:
            return "staircase"
    trend_up = m[-1] >= m[0]
    drop = float(np.max(np.maximum.accumulate(m) - m))
    rise = float(np.max(m - np.minimum.accumulate(m)))
    if (trend_up and drop > 0.2) or (not trend_up and rise > 0.2):
        return "nonmonotone"
    return "unclassified"


def transfer_characteristic(circuit: BsnCircuit, v_in, duration: float,
                            dt: float | None = None, seed: int = 0,
                            burn_frac: float = 0.05) -> TransferCurve:
    """Co-simulate the circuit across an input sweep and average the output.

    duration is the averaging time per sweep point (>= 1000 tau_fluct for
    trustworthy statistics; shorter runs are flagged).
    """
    v_in = np.asarray(v_in, dtype=float)
    if np.any(np.diff(v_in) <= 0):
        raise ValueError("v_in grid must be strictly increasing")
    res = circuit.resistor
    fet = circuit.fet
    insufficient = res.tau_fluct is not None and duration < 1000 * res.tau_fluct
    if insufficient:
        warnings.warn("averaging time below 1000x tau_fluct", stacklevel=2)
    if dt is None:
        dt = (res.tau_fluct or duration / 1e5) / 80.0
    n_steps = int(round(duration / dt))
    burn_steps = int(burn_frac * n_steps)
    rng = np.random.Generator(np.random.Philox(seed))
    g_gates = _gate_factors(fet, v_in)
    n_b = v_in.size
    sum_out = np.zeros(n_b)
    sum_i = np.zeros(n_b)
    sum_duty = np.zeros(n_b)

    if res.backend == "mtj":
        mag = res.magnet
        mvecs = rng.standard_normal((n_b, 3))
        mvecs /= np.linalg.norm(mvecs, axis=1, keepdims=True)
        v_filts = np.full(n_b, fet.v_dd)
        v_nodes = np.full(n_b, 0.5 * fet.v_dd)
        sigma = mag.thermal_field_std(dt)
        hs_per_amp = stt_field(res.p_eff, mag.ms_omega)
        p_sign = 1.0 if res.inverted else -1.0
        n_acc = 0
        step0 = 0
        while step0 < n_steps:
            chunk = min(_CHUNK, n_steps - step0)
            noise = rng.standard_normal((chunk, n_b, 3)) * sigma
            n_acc += _cosim_means_mtj(mvecs, v_filts, v_nodes, g_gates,
                                      res.r_p, res.r_ap,
                                      mag.h_kp_oe, mag.h_ki_oe, mag.alpha,
                                      mag.readout_axis, res.bias_field_oe,
                                      hs_per_amp, p_sign, sigma,
                                      fet.v_dd, fet.phi_t, fet.lambda_clm,
                                      circuit.c_load, dt, noise,
                                      burn_steps, step0,
                                      sum_out, sum_i, sum_duty)
            step0 += chunk
    else:
        kind, r_p, r_ap, i_50, i_0, x_sign, dt_tau = _beh_args(circuit, dt)
        latents, v_filts = _init_latents(circuit, rng, n_b, v_in)
        v_nodes = v_filts.copy()
        n_acc = 0
        step0 = 0
        while step0 < n_steps:
            chunk = min(_CHUNK, n_steps - step0)
            gauss = rng.standard_normal((chunk, n_b))
            uni = rng.random((chunk, n_b))
            n_acc += _cosim_means(kind, latents, v_filts, v_nodes, g_gates,
                                  r_p, r_ap, i_50, i_0, x_sign, dt_tau,
                                  fet.v_dd, fet.phi_t, fet.lambda_clm,
                                  circuit.c_load, dt, gauss, uni,
                                  burn_steps, step0, sum_out, sum_i, sum_duty)
            step0 += chunk

    mean_out = sum_out / n_acc
    v0, vs, rmse = _fit_tanh(v_in, mean_out)
    return TransferCurve(v_in=v_in, mean_out=mean_out, v0=v0, vs=vs, rmse=rmse,
                         classification=classify_curve(v_in, mean_out, rmse),
                         mean_current=sum_i / n_acc, duty=sum_duty / n_acc,
                         insufficient_averaging=insufficient)


def _cross(v, m, level) -> float:
    """First upward crossing of m through level, linearly interpolated."""
    above = np.nonzero(m >= level)[0]
    if above.size == 0 or above[0] == 0:
        raise DesignError("transfer curve never saturates within the sweep")
    k = above[0]
    frac = (level - m[k - 1]) / (m[k] - m[k - 1])
    return float(v[k - 1] + frac * (v[k] - v[k - 1]))


def stochastic_region(curve: TransferCurve) -> tuple[float, float, float]:
    """(v_minus, v_plus, delta_v): inputs where the output unpins from -1
    and pins to +1 (crossings of -0.95 and +0.95)."""
    if curve.classification not in ("sigmoid", "staircase"):
        raise DesignError("stochastic region needs a sigmoid or staircase curve")
    v_minus = _cross(curve.v_in, curve.mean_out, -0.95)
    v_plus = _cross(curve.v_in, curve.mean_out, 0.95)
    return v_minus, v_plus, v_plus - v_minus


def drive_anchor(fet: FetModel, headroom: float = 0.95) -> float:
    """Gate voltage where the threshold-edge drive reaches the given
    fraction of its maximum; upper edge of a usable stochastic window."""
    target = headroom * edge_current(fet, fet.v_dd)
    lo, hi = 0.0, fet.v_dd
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if edge_current(fet, mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def design_resistance_ratio(fet: FetModel, delta_v: float) -> float:
    """Resistance ratio n = I+/I- that yields the target stochastic region.

    The window is anchored with its upper edge at the FET's usable drive
    (drive_anchor); I+ and I- are the threshold-edge currents at the two
    window edges.
    """
    if not 0 < delta_v < fet.v_dd:
        raise DesignError("delta_v must lie in (0, V_DD)")
    v_plus = drive_anchor(fet)
    v_minus = v_plus - delta_v
    if v_minus <= 0:
        raise DesignError("delta_v unreachable for this FET")
    return float(edge_current(fet, v_plus) / edge_current(fet, v_minus))


def nontunable_for_delta_v(fet: FetModel, delta_v: float,
                           kind=ResistorKind.NTC, tau_fluct: float = 160e-12) -> ResistorParams:
    """Non-tunable resistor realizing the target stochastic region."""
    n = design_resistance_ratio(fet, delta_v)
    r_p = (fet.v_dd / 2.0) / edge_current(fet, drive_anchor(fet))
    return ResistorParams(kind=kind, r_p=r_p, r_ap=n * r_p, tau_fluct=tau_fluct)


@dataclass
class DriveReport:
    """Tunable-drive compatibility between a FET and a resistor."""

    passes: bool
    required_drive: float
    available_drive: float
    i50_mismatched: bool


def check_tunable_drive(fet: FetModel, resistor: ResistorParams) -> DriveReport:
    """Check I+_max >= 6 I_0 and flag I_50 away from I_Dsat."""
    if not resistor.kind.tunable:
        raise ValueError("drive check applies to tunable resistors")
    required = 6.0 * (resistor.i_0 or 0.0)
    mismatched = abs((resistor.i_50 or 0.0) - fet.i_dsat) > 0.3 * fet.i_dsat
    return DriveReport(passes=fet.i_plus_max >= required,
                       required_drive=required,
                       available_drive=fet.i_plus_max,
                       i50_mismatched=mismatched)


@dataclass
class CircuitTrace:
    """Per-step co-simulation record at fixed input."""

    dt: float
    v_in: float
    output: np.ndarray    # int8 +-1
    i_branch: np.ndarray  # A
    v_node: np.ndarray    # V


def simulate_at(circuit: BsnCircuit, v_in: float, duration: float, dt: float,
                seed: int = 0, burn_frac: float = 0.05) -> CircuitTrace:
    """Fixed-input co-simulation trace (behavioral backends)."""
    if circuit.resistor.backend != "behavioral":
        raise NotImplementedError("traces are implemented for behavioral resistors")
    fet = circuit.fet
    n_steps = int(round(duration / dt))
    rng = np.random.Generator(np.random.Philox(seed))
    kind, r_p, r_ap, i_50, i_0, x_sign, dt_tau = _beh_args(circuit, dt)
    latents, v_filts = _init_latents(circuit, rng, 1, v_in)
    g_gate = float(_gate_factors(fet, v_in)[0])
    out = np.empty(n_steps, dtype=np.int8)
    i_b = np.empty(n_steps)
    v_n = np.empty(n_steps)
    latent, v_filt = float(latents[0]), float(v_filts[0])
    v_prev = v_filt
    step0 = 0
    while step0 < n_steps:
        chunk = min(_CHUNK * 8, n_steps - step0)
        sl = slice(step0, step0 + chunk)
        latent, v_filt, v_prev = _cosim_trace(
            kind, latent, v_filt, v_prev, g_gate, r_p, r_ap,
            i_50, i_0, x_sign, dt_tau,
            fet.v_dd, fet.phi_t, fet.lambda_clm, circuit.c_load, dt,
            rng.standard_normal(chunk), rng.random(chunk),
            out[sl], i_b[sl], v_n[sl])
        step0 += chunk
    burn = int(burn_frac * n_steps)
    return CircuitTrace(dt=dt, v_in=v_in, output=out[burn:],
                        i_branch=i_b[burn:], v_node=v_n[burn:])


def fitted_midpoint(circuit: BsnCircuit, seed: int = 0, n_grid: int = 25,
                    duration_factor: float = 400.0) -> float:
    """Coarse transfer fit returning the sigmoid midpoint V_0."""
    fet = circuit.fet
    tau = circuit.resistor.tau_fluct or 160e-12
    grid = np.linspace(0.5 * fet.v_dd, fet.v_dd, n_grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        curve = transfer_characteristic(circuit, grid, duration_factor * tau,
                                        seed=seed)
    if not math.isfinite(curve.v0):
        raise AnalysisError("could not locate the sigmoid midpoint")
    return float(np.clip(curve.v0, grid[0], grid[-1]))


def measure_tau_c(circuit: BsnCircuit, dt: float, duration: float, seed: int = 0,
                  v_in: float | None = None) -> float:
    """Output correlation time at the sigmoid midpoint (1/e crossing)."""
    if v_in is None:
        v_in = fitted_midpoint(circuit, seed=seed)
    trace = simulate_at(circuit, v_in, duration, dt, seed=seed)
    return autocorrelation_time(trace.output.astype(float), sample_dt=dt)


def measure_tau_n(circuit: BsnCircuit, v_from: float, v_to: float,
                  n_replicas: int = 1000, dt: float | None = None, seed: int = 0,
                  window: float | None = None, burn: float | None = None) -> float:
    """Response time: settling of the ensemble-mean output after an input step.

    Replicas equilibrate at v_from, the input switches to v_to at t=0, and
    tau_N is the first time the ensemble mean enters a 2-standard-error
    band around its long-time value and its forward average stays there.
    """
    res = circuit.resistor
    fet = circuit.fet
    if res.backend != "behavioral":
        raise NotImplementedError("tau_N is implemented for behavioral resistors")
    if n_replicas < 1000:
        warnings.warn("fewer than 1000 replicas: settling band will be noisy",
                      stacklevel=2)
    tau = res.tau_fluct
    rc = res.r_ap * circuit.c_load
    if window is None:
        window = 30.0 * rc + 5.0 * tau
    if dt is None:
        dt = min(tau / 50.0, max(rc / 15.0, window / 16000.0))
    if burn is None:
        burn = 6.0 * tau
    rng = np.random.Generator(np.random.Philox(seed))
    latents, v_filts = _init_latents(circuit, rng, n_replicas, v_from)
    v_nodes = v_filts.copy()

    def run(v_gate, n_steps, step_dt, record):
        kind, r_p, r_ap, i_50, i_0, x_sign, dt_tau = _beh_args(circuit, step_dt)
        g_gate = float(_gate_factors(fet, v_gate)[0])
        mean_out = np.empty(n_steps if record else 0)
        step0 = 0
        while step0 < n_steps:
            chunk = min(512, n_steps - step0)
            gauss = rng.standard_normal((chunk, n_replicas))
            uni = rng.random((chunk, n_replicas))
            _cosim_ensemble(kind, latents, v_filts, v_nodes, g_gate, r_p, r_ap,
                            i_50, i_0, x_sign, dt_tau, fet.v_dd, fet.phi_t,
                            fet.lambda_clm, circuit.c_load, step_dt, gauss, uni,
                            mean_out, step0)
            step0 += chunk
        return mean_out

    # equilibrate at v_from on the resistor timescale, step the input and
    # watch at fine resolution, then keep sampling coarsely for a long-time
    # reference well clear of the settling transient
    dt_coarse = tau / 50.0
    run(v_from, int(round(burn / dt_coarse)), dt_coarse, record=False)
    mean_out = run(v_to, int(round(window / dt)), dt, record=True)
    tail = run(v_to, int(round(25.0 * tau / dt_coarse)), dt_coarse, record=True)

    m_inf = float(tail.mean())
    band = 2.0 * math.sqrt(max(1.0 - m_inf**2, 1.0 / n_replicas) / n_replicas)
    n = mean_out.size
    dev = np.abs(mean_out - m_inf)
    horizon = max(int(0.25 * n), 1)
    csum = np.concatenate(([0.0], np.cumsum(dev)))
    fwd_mean = (csum[horizon:] - csum[:-horizon]) / horizon  # mean of dev[t:t+H]
    ok = (dev[:n - horizon + 1] <= band) & (fwd_mean <= band)
    hits = np.nonzero(ok)[0]
    if hits.size == 0:
        raise AnalysisError("ensemble mean did not settle within the window")
    return float(hits[0] * dt)


def average_power(circuit: BsnCircuit, trace: CircuitTrace) -> float:
    """Mean drawn power [W]: V_DD times the resistor-branch current plus an
    I_Dsat-scale inverter crowbar whenever the node sits mid-rail."""
    fet = circuit.fet
    in_region = (trace.v_node > 0.15 * fet.v_dd) & (trace.v_node < 0.85 * fet.v_dd)
    i_inverter = fet.i_dsat * in_region.mean()
    return float(fet.v_dd * (trace.i_branch.mean() + i_inverter))


def energy_metrics(tau_c: float, tau_n: float, avg_power: float) -> tuple[float, float]:
    """(E_C, E_N) = (tau_C, tau_N) * <P>."""
    if tau_c < 0 or tau_n < 0 or avg_power < 0:
        raise ValueError("timescales and power must be nonnegative")
    return tau_c * avg_power, tau_n * avg_power


@dataclass(frozen=True)
class RunMetrics:
    """Operating figures of one BSN: timescales, power, energy per bit."""

    tau_c: float
    tau_n: float
    avg_power: float
    e_c: float
    e_n: float

    def __post_init__(self):
        if min(self.tau_c, self.tau_n, self.avg_power, self.e_c, self.e_n) <= 0:
            raise ValueError("metrics must be positive")

    @classmethod
    def from_measurements(cls, tau_c: float, tau_n: float, avg_power: float) -> "RunMetrics":
        e_c, e_n = energy_metrics(tau_c, tau_n, avg_power)
        return cls(tau_c=tau_c, tau_n=tau_n, avg_power=avg_power, e_c=e_c, e_n=e_n)


def default_fet() -> FetModel:
    return FetModel()


def taxonomy_grid(fet: FetModel | None = None, n_points: int = 41) -> np.ndarray:
    """Default input sweep for transfer-curve work: [V_DD/2, V_DD]."""
    fet = fet or default_fet()
    return np.linspace(0.5 * fet.v_dd, fet.v_dd, n_points)


# resistance ratios per kind: the shallow NTC keeps the arcsine law's sharp
# saturation corners inside a tanh-worthy window; the wide NTB makes the
# staircase's flat middle unmistakable
_DEFAULT_N = {ResistorKind.NTC: 1.5, ResistorKind.NTB: 4.0,
              ResistorKind.TC: 2.0, ResistorKind.TB: 2.0}


def default_resistor(kind, n: float | None = None, tau_fluct: float = 160e-12,
                     i_50: float = 9.7e-6, i_0: float = 2e-6,
                     inverted: bool = False) -> ResistorParams:
    """Resistor matched to the default FET: R_P at the usable drive edge."""
    kind = ResistorKind(kind)
    n = _DEFAULT_N[kind] if n is None else n
    r_p = 31e3
    if kind.tunable:
        return ResistorParams(kind=kind, r_p=r_p, r_ap=n * r_p, tau_fluct=tau_fluct,
                              i_50=i_50, i_0=i_0, inverted=inverted)
    return ResistorParams(kind=kind, r_p=r_p, r_ap=n * r_p, tau_fluct=tau_fluct,
                          inverted=inverted)


def default_circuit(kind, **kw) -> BsnCircuit:
    return BsnCircuit(resistor=default_resistor(kind, **kw), fet=default_fet())
