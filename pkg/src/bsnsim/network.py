"""p-bit Ising networks of binary stochastic neurons.

The network energy is E = -I0 (1/2 sum_ij J_ij m_i m_j + sum_i h_i m_i);
each neuron draws m_i = sgn[tanh(I_i) - r] with r uniform on (-1, 1) and
I_i = I0 (sum_j J_ij m_j + h_i).  Two engines are provided:

* clocked: one sequential update per clock tick with fresh synapse values
  (Gibbs sampling); the digital-annealer baseline.
* autonomous: every neuron fires at independent exponential intervals
  (mean tau_neu) and reads the network state as of tau_syn ago (stale-read
  model of synapse propagation delay).

State indexing: spin i contributes bit i (LSB = spin 0) with bit value
(m_i + 1)/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .circuit import BsnCircuit, _beh_args, _cosim_trace, _gate_factors, _init_latents


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class IsingProblem:
    """Symmetric coupling matrix, biases, and annealing gain I0."""

    j: np.ndarray
    h: np.ndarray
    i0_anneal: float = 1.0

    def __post_init__(self):
        j = np.ascontiguousarray(np.asarray(self.j, dtype=float))
        h = np.ascontiguousarray(np.asarray(self.h, dtype=float))
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "h", h)
        if j.ndim != 2 or j.shape[0] != j.shape[1]:
            raise ValueError("j must be a square matrix")
        if h.shape != (j.shape[0],):
            raise ValueError("h must have one entry per spin")
        if not np.allclose(j, j.T, atol=1e-12):
            raise ValueError("j must be symmetric")
        if np.any(np.abs(np.diag(j)) > 1e-12):
            raise ValueError("j must have zero diagonal")
        if self.i0_anneal <= 0:
            raise ValueError("i0_anneal must be positive")

    @property
    def n(self) -> int:
        return self.h.shape[0]

    def energy(self, m) -> float:
        m = np.asarray(m, dtype=float)
        return float(-self.i0_anneal * (0.5 * m @ self.j @ m + self.h @ m))

    def to_dict(self, sparse: bool = False) -> dict:
        if sparse:
            ii, jj = np.nonzero(np.triu(self.j, 1))
            j_repr = [[int(a), int(b), float(self.j[a, b])] for a, b in zip(ii, jj)]
        else:
            j_repr = self.j.tolist()
        return {"n": self.n, "j": j_repr, "h": self.h.tolist(), "i0": self.i0_anneal}

    @classmethod
    def from_dict(cls, d: dict) -> "IsingProblem":
        n = int(d["n"])
        j_repr = d["j"]
        if j_repr and isinstance(j_repr[0], (list, tuple)) and len(j_repr[0]) == 3 \
                and not isinstance(j_repr[0][0], (list, tuple)) and len(j_repr) != n:
            j = np.zeros((n, n))
            for a, b, w in j_repr:
                j[int(a), int(b)] = w
                j[int(b), int(a)] = w
        else:
            j = np.asarray(j_repr, dtype=float)
            if j.shape != (n, n):
                # sparse triplets that happen to have n rows
                jm = np.zeros((n, n))
                for a, b, w in j_repr:
                    jm[int(a), int(b)] = w
                    jm[int(b), int(a)] = w
                j = jm
        return cls(j=j, h=np.asarray(d["h"], dtype=float), i0_anneal=float(d["i0"]))


def synapse(problem: IsingProblem, m, i: int) -> float:
    """Neuron input I_i = I0 (sum_j J_ij m_j + h_i)."""
    m = np.asarray(m, dtype=float)
    return float(problem.i0_anneal * (problem.j[i] @ m + problem.h[i]))


def bsn_sample(i_input: float, rng: np.random.Generator) -> int:
    """One BSN draw: sgn[tanh(I) - r], r uniform on (-1, 1)."""
    r = rng.uniform(-1.0, 1.0)
    return 1 if math.tanh(i_input) >= r else -1


def boltzmann_oracle(problem: IsingProblem) -> np.ndarray:
    """Exact distribution over all 2^N states by dense enumeration (N <= 20)."""
    n = problem.n
    if n > 20:
        raise ValueError("dense enumeration is limited to N <= 20 spins")
    n_states = 1 << n
    log_w = np.empty(n_states)
    bits = np.arange(n)
    chunk = 1 << 14
    for start in range(0, n_states, chunk):
        idx = np.arange(start, min(start + chunk, n_states))
        m = (((idx[:, None] >> bits) & 1) * 2 - 1).astype(float)
        log_w[idx] = problem.i0_anneal * (0.5 * np.einsum("si,ij,sj->s", m, problem.j, m)
                                          + m @ problem.h)
    log_w -= log_w.max()
    w = np.exp(log_w)
    return w / w.sum()


def state_index(m) -> int:
    """Dense state index of a +-1 spin vector (spin 0 = LSB)."""
    idx = 0
    for i, v in enumerate(m):
        if v > 0:
            idx |= 1 << i
    return idx


def and_gate_problem(i0_anneal: float = 1.0) -> IsingProblem:
    """Invertible AND gate on spins (A, B, C): the four lowest-energy states
    are exactly the truth table C = A AND B.  Validated by enumeration at
    construction."""
    j = np.array([[0.0, -1.0, 2.0],
                  [-1.0, 0.0, 2.0],
                  [2.0, 2.0, 0.0]])
    h = np.array([1.0, 1.0, -2.0])
    problem = IsingProblem(j=j, h=h, i0_anneal=i0_anneal)
    truth = {state_index([a, b, (1 if a > 0 and b > 0 else -1)])
             for a in (-1, 1) for b in (-1, 1)}
    energies = np.array([problem.energy((((np.arange(8)[s] >> np.arange(3)) & 1) * 2 - 1))
                         for s in range(8)])
    ground = set(np.nonzero(energies < energies.min() + 1e-9)[0].tolist())
    if ground != truth:
        raise EngineError("AND-gate construction self-check failed")
    return problem


def kl_divergence(empirical_counts, exact_probs) -> float:
    """KL(empirical || exact) in nats, empirical smoothed with +1 counts."""
    counts = np.asarray(empirical_counts, dtype=float)
    exact = np.asarray(exact_probs, dtype=float)
    if counts.shape != exact.shape:
        raise ValueError("empirical and exact distributions need the same support")
    p = (counts + 1.0) / (counts.sum() + counts.size)
    return float(np.sum(p * np.log(p / exact)))


@dataclass(frozen=True)
class NetworkConfig:
    """Engine selection and timing for a network run.

    n_samples is the number of recorded state samples: one per sweep for
    the clocked engine, one per N updates for the autonomous engine.
    """

    engine: str = "clocked"  # "clocked" | "autonomous"
    n_samples: int = 100000
    seed: int = 0
    clock_period: float = 10e-9
    tau_neu: float = 1e-9
    tau_syn: float = 1e-11
    update_order: str = "random"  # "random" | "round_robin"
    neuron_backend: str = "ideal"  # "ideal" | "circuit"
    circuit: BsnCircuit | None = None
    circuit_v0: float | None = None
    circuit_vs: float | None = None

    def __post_init__(self):
        if self.engine not in ("clocked", "autonomous"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.tau_neu <= 0 or self.tau_syn <= 0 or self.clock_period <= 0:
            raise ValueError("timescales must be positive")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.update_order not in ("random", "round_robin"):
            raise ValueError(f"unknown update order {self.update_order!r}")
        if self.neuron_backend == "circuit":
            if self.circuit is None or self.circuit_v0 is None or self.circuit_vs is None:
                raise ValueError("circuit backend needs circuit, circuit_v0, circuit_vs")

    @property
    def s_ratio(self) -> float:
        return self.tau_syn / self.tau_neu


@dataclass
class SampleHistogram:
    """State-visit counts; flip_count is the number of neuron updates made
    while collecting them (N per sample by construction)."""

    counts: np.ndarray
    total: int
    flip_count: int

    def probs(self) -> np.ndarray:
        return self.counts / self.total


@dataclass
class NetworkRun:
    """Result of one engine run."""

    engine: str
    n_spins: int
    histogram: SampleHistogram | None
    n_updates: int
    sim_time: float
    clock_period: float | None = None
    tau_neu: float | None = None
    tau_syn: float | None = None

    @property
    def measured_fps(self) -> float:
        return self.n_updates / self.sim_time


def flips_per_second(run: NetworkRun) -> float:
    """Hardware throughput metric f = N/tau.

    Clocked engines update one spin per tick (sequential updates in a
    fully-connected network), so f = 1/clock_period; autonomous engines
    flip all N spins at rate 1/tau_neu each, so f = N/tau_neu.
    """
    if run.engine == "clocked":
        return 1.0 / run.clock_period
    return run.n_spins / run.tau_neu


def ideal_fps(n_spins: float, tau: float) -> float:
    """f = N/tau for a projection table."""
    return n_spins / tau


@njit(cache=True)
def _clocked_chunk(j, h, i0, m, use_perm, u_update, u_perm, order, counts):
    n_sweeps = u_update.shape[0]
    n = m.shape[0]
    for s in range(n_sweeps):
        if use_perm:
            # Fisher-Yates from the per-sweep uniform row
            for k in range(n):
                order[k] = k
            for k in range(n - 1, 0, -1):
                idx = int(u_perm[s, k] * (k + 1))
                if idx > k:
                    idx = k
                tmp = order[k]
                order[k] = order[idx]
                order[idx] = tmp
        for k in range(n):
            i = order[k]
            acc = h[i]
            for jdx in range(n):
                acc += j[i, jdx] * m[jdx]
            r = 2.0 * u_update[s, k] - 1.0
            m[i] = 1.0 if math.tanh(i0 * acc) >= r else -1.0
        if counts.shape[0] > 0:
            idx = 0
            for i in range(n):
                if m[i] > 0.0:
                    idx |= 1 << i
            counts[idx] += 1
    return 0


def _initial_spins(n, rng) -> np.ndarray:
    return np.where(rng.random(n) < 0.5, 1.0, -1.0)


def run_clocked(problem: IsingProblem, config: NetworkConfig) -> NetworkRun:
    """Sequential Gibbs sampling, one spin update per clock tick; the state
    is recorded once per sweep (N ticks)."""
    if config.engine != "clocked":
        raise ValueError("config.engine must be 'clocked'")
    if config.neuron_backend == "circuit":
        return _run_clocked_circuit(problem, config)
    n = problem.n
    rng = np.random.Generator(np.random.Philox(config.seed))
    m = _initial_spins(n, rng)
    counts = np.zeros(1 << n, dtype=np.int64) if n <= 20 else np.zeros(0, dtype=np.int64)
    order = np.arange(n)
    use_perm = config.update_order == "random"
    sweeps_left = config.n_samples
    chunk = max(1, min(sweeps_left, (1 << 22) // max(n, 1)))
    while sweeps_left > 0:
        c = min(chunk, sweeps_left)
        u_update = rng.random((c, n))
        u_perm = rng.random((c, n)) if use_perm else np.zeros((1, 1))
        _clocked_chunk(problem.j, problem.h, problem.i0_anneal, m, use_perm,
                       u_update, u_perm, order, counts)
        sweeps_left -= c
    n_updates = config.n_samples * n
    hist = SampleHistogram(counts=counts, total=config.n_samples,
                           flip_count=n_updates) if counts.size else None
    return NetworkRun(engine="clocked", n_spins=n, histogram=hist,
                      n_updates=n_updates,
                      sim_time=n_updates * config.clock_period,
                      clock_period=config.clock_period)


# capacity of the per-spin change history; eviction inside the stale window
# trips the overflow guard
_HIST_CAP = 128


@njit(cache=True)
def _autonomous_chunk(j, h, i0, m, next_t, next_seq, seq_counter, t_hist, v_hist,
                      hist_len, tau_neu, tau_syn, exp_draws, u_draws, counts,
                      sample_every, state):
    """Process len(exp_draws) events; returns (t_now, updates_done, overflow).

    state = (t_now, updates_done) packed in a float/int array to persist
    across chunks.  Events are ordered by (time, schedule sequence number);
    the sequence number is the documented tiebreak for identical stamps.
    """
    n = m.shape[0]
    cap = t_hist.shape[1]
    t_now = state[0]
    updates = int(state[1])
    for k in range(exp_draws.shape[0]):
        # next event: earliest time, then earliest scheduled
        best = 0
        for i in range(1, n):
            if next_t[i] < next_t[best] or (next_t[i] == next_t[best]
                                            and next_seq[i] < next_seq[best]):
                best = i
        i = best
        t_now = next_t[i]
        t_query = t_now - tau_syn
        acc = h[i]
        for jdx in range(n):
            if jdx == i:
                continue
            # walk this spin's change history backwards to its value at t_query
            val = m[jdx]
            length = hist_len[jdx]
            for back in range(length):
                pos = (length - 1 - back) % cap
                if t_hist[jdx, pos] <= t_query:
                    val = v_hist[jdx, pos]
                    break
            acc += j[i, jdx] * val
        r = 2.0 * u_draws[k] - 1.0
        new = 1.0 if math.tanh(i0 * acc) >= r else -1.0
        if new != m[i]:
            length = hist_len[i]
            if length == cap:
                # entry 0 covers times up to entry 1; it may only be dropped
                # once entry 1 predates every future stale-read query
                if t_hist[i, 1] > t_now - tau_syn:
                    state[0] = t_now
                    state[1] = updates
                    return 1
                # shift down (rare at sane s-ratios)
                for p in range(cap - 1):
                    t_hist[i, p] = t_hist[i, p + 1]
                    v_hist[i, p] = v_hist[i, p + 1]
                length = cap - 1
            t_hist[i, length] = t_now
            v_hist[i, length] = new
            hist_len[i] = length + 1
            m[i] = new
        updates += 1
        next_t[i] = t_now + tau_neu * exp_draws[k]
        next_seq[i] = seq_counter
        seq_counter += 1
        if updates % sample_every == 0 and counts.shape[0] > 0:
            idx = 0
            for q in range(n):
                if m[q] > 0.0:
                    idx |= 1 << q
            counts[idx] += 1
    state[0] = t_now
    state[1] = updates
    return 0


def run_autonomous(problem: IsingProblem, config: NetworkConfig) -> NetworkRun:
    """Event-driven asynchronous sampling with synapse delay tau_syn.

    Neurons fire at independent exponential intervals with mean tau_neu and
    see the network state as of tau_syn in the past.  One state sample is
    recorded every N updates (tau_neu of simulated time on average).
    """
    if config.engine != "autonomous":
        raise ValueError("config.engine must be 'autonomous'")
    n = problem.n
    rng = np.random.Generator(np.random.Philox(config.seed))
    m = _initial_spins(n, rng)
    next_t = rng.exponential(config.tau_neu, n)
    next_seq = np.arange(n, dtype=np.int64)
    t_hist = np.full((n, _HIST_CAP), -1e300)
    v_hist = np.zeros((n, _HIST_CAP))
    for i in range(n):
        v_hist[i, 0] = m[i]
    hist_len = np.ones(n, dtype=np.int64)
    counts = np.zeros(1 << n, dtype=np.int64) if n <= 20 else np.zeros(0, dtype=np.int64)
    budget = config.n_samples * n
    state = np.array([0.0, 0.0])
    seq_counter = n
    done = 0
    while done < budget:
        c = min(budget - done, 1 << 20)
        overflow = _autonomous_chunk(problem.j, problem.h, problem.i0_anneal, m,
                                     next_t, next_seq, seq_counter, t_hist, v_hist,
                                     hist_len, config.tau_neu, config.tau_syn,
                                     rng.exponential(1.0, c), rng.random(c),
                                     counts, n, state)
        if overflow:
            raise EngineError("per-spin change history overflowed inside the "
                              "stale window; raise tau_neu/tau_syn resolution")
        seq_counter += c
        done += c
    n_updates = int(state[1])
    hist = SampleHistogram(counts=counts, total=config.n_samples,
                           flip_count=n_updates) if counts.size else None
    return NetworkRun(engine="autonomous", n_spins=n, histogram=hist,
                      n_updates=n_updates, sim_time=float(state[0]),
                      tau_neu=config.tau_neu, tau_syn=config.tau_syn)


class CircuitNeuron:
    """One BSN circuit used as a network spin.

    The dimensionless synapse input maps to the gate voltage through the
    fitted transfer curve, V_IN = V_0 + V_s * I_i; the circuit then runs
    for a settle interval and its inverter output is the new spin value.
    """

    def __init__(self, circuit: BsnCircuit, v0: float, vs: float, seed: int,
                 settle_factor: float = 4.0, steps_per_tau: int = 40):
        self.circuit = circuit
        self.v0 = v0
        self.vs = vs
        self.rng = np.random.Generator(np.random.Philox(seed))
        tau = circuit.resistor.tau_fluct
        self.dt = tau / steps_per_tau
        self.n_settle = int(settle_factor * steps_per_tau)
        latents, v_filts = _init_latents(circuit, self.rng, 1, v0)
        self._latent = float(latents[0])
        self._v_filt = float(v_filts[0])
        self._v_prev = self._v_filt
        self._out = np.empty(self.n_settle, dtype=np.int8)
        self._ib = np.empty(self.n_settle)
        self._vn = np.empty(self.n_settle)

    def sample(self, i_input: float) -> int:
        fet = self.circuit.fet
        v_in = float(np.clip(self.v0 + self.vs * i_input, 0.0, fet.v_dd))
        args = _beh_args(self.circuit, self.dt)
        g = float(_gate_factors(fet, v_in)[0])
        self._latent, self._v_filt, self._v_prev = _cosim_trace(
            args[0], self._latent, self._v_filt, self._v_prev, g,
            args[1], args[2], args[3], args[4], args[5], args[6],
            fet.v_dd, fet.phi_t, fet.lambda_clm, self.circuit.c_load, self.dt,
            self.rng.standard_normal(self.n_settle), self.rng.random(self.n_settle),
            self._out, self._ib, self._vn)
        return int(self._out[-1])


def _run_clocked_circuit(problem: IsingProblem, config: NetworkConfig) -> NetworkRun:
    n = problem.n
    if n > 20:
        raise ValueError("circuit-backed networks are desk scale (N <= 20)")
    seeds = np.random.SeedSequence(config.seed).generate_state(n + 1)
    rng = np.random.Generator(np.random.Philox(seeds[0]))
    neurons = [CircuitNeuron(config.circuit, config.circuit_v0, config.circuit_vs,
                             seed=int(seeds[i + 1])) for i in range(n)]
    m = _initial_spins(n, rng)
    counts = np.zeros(1 << n, dtype=np.int64)
    for _ in range(config.n_samples):
        order = rng.permutation(n) if config.update_order == "random" else range(n)
        for i in order:
            m[i] = neurons[i].sample(synapse(problem, m, i))
        counts[state_index(m)] += 1
    n_updates = config.n_samples * n
    hist = SampleHistogram(counts=counts, total=config.n_samples, flip_count=n_updates)
    return NetworkRun(engine="clocked", n_spins=n, histogram=hist,
                      n_updates=n_updates,
                      sim_time=n_updates * config.clock_period,
                      clock_period=config.clock_period)
