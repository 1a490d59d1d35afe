"""Experiment runners: one per paper-figure class, emitting CSV + manifest."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis, circuit as circuit_mod, equilibrium, io, magnetics, network, resistors
from .io import ConfigError


@dataclass
class ExperimentSpec:
    """One runnable experiment: kind + parameters + seed + output name."""

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    name: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        if d.get("kind") not in io.EXPERIMENT_KINDS:
            raise ConfigError("E_UNKNOWN_KIND", f"unknown experiment kind {d.get('kind')!r}")
        return cls(kind=d["kind"], params=d.get("params", {}),
                   seed=int(d.get("seed", 0)), name=d.get("name"))

    @property
    def label(self) -> str:
        return self.name or self.kind


def _sweep(d, default_num=21) -> np.ndarray:
    """Grid from an explicit list or a {start, stop, num} dict."""
    if isinstance(d, dict):
        return np.linspace(float(d["start"]), float(d["stop"]),
                           int(d.get("num", default_num)))
    return np.asarray(d, dtype=float)


def _run_magnet_dynamics(spec: ExperimentSpec, out: str) -> dict:
    p = spec.params
    magnet = io.magnet_from_dict(p["magnet"])
    drv = p.get("drive", {})
    drive = magnetics.DriveConditions(
        h_ext=np.asarray(drv.get("h_ext", [0.0, 0.0, 0.0]), dtype=float),
        i_s=float(drv.get("i_s", 0.0)),
        p_hat=np.asarray(drv.get("p_hat", [1.0, 0.0, 0.0]), dtype=float))
    duration = float(p.get("duration", 1e-7))
    dt = float(p.get("dt", 1e-12))
    stride = int(p.get("stride", 1))
    traj = magnetics.simulate_trajectory(magnet, drive, duration, dt, spec.seed,
                                         stride=stride)
    io.write_csv(os.path.join(out, "trajectory.csv"),
                 ["t_s", "m_x", "m_y", "m_z"],
                 [traj.t, traj.samples[:, 0], traj.samples[:, 1], traj.samples[:, 2]])
    summary = {"n_samples": int(traj.samples.shape[0]), "sample_dt_s": traj.sample_dt}
    try:
        axis = "xyz"[magnet.readout_axis]
        summary["tau_corr_s"] = analysis.autocorrelation_time(traj, axis)
        summary["tau_corr_component"] = axis
    except analysis.AnalysisError as exc:
        summary["tau_corr_error"] = str(exc)
    return summary


def _run_current_response(spec: ExperimentSpec, out: str) -> dict:
    p = spec.params
    magnet = io.magnet_from_dict(p["magnet"])
    i_s = _sweep(p["i_s"])
    curve = analysis.current_response(
        magnet, i_s, np.asarray(p.get("h_ext", [0.0, 0.0, 0.0]), dtype=float),
        duration=float(p.get("duration", 1e-6)), dt=float(p.get("dt", 1e-12)),
        seed=spec.seed, p_hat=np.asarray(p.get("p_hat", [1.0, 0.0, 0.0]), dtype=float),
        p_eff=float(p.get("p_eff", 1.0)))
    io.write_csv(os.path.join(out, "current_response.csv"),
                 ["i_s_A", "mean_m"], [curve.drive, curve.mean_m])
    summary = {}
    try:
        summary["i_0_A"] = analysis.bias_current(curve)
        summary["pinning_current_A"] = 4.0 * summary["i_0_A"]
    except analysis.AnalysisError as exc:
        summary["i_0_error"] = str(exc)
    return summary


def _run_pinning_field(spec: ExperimentSpec, out: str) -> dict:
    p = spec.params
    magnet = io.magnet_from_dict(p["magnet"])
    h_pin = equilibrium.pinning_field(magnet)
    summary = {"pinning_field_oe": h_pin, "geometry": magnet.geometry}
    if p.get("curve", True):
        axis = "xyz"[magnet.readout_axis]
        idx = magnet.readout_axis
        h_values = _sweep(p.get("h_values",
                                {"start": -3 * h_pin, "stop": 3 * h_pin, "num": 13}))
        quad = []
        for h in h_values:
            h_ext = np.zeros(3)
            h_ext[idx] = h
            quad.append(equilibrium.mean_component(magnet, h_ext, axis))
        io.write_csv(os.path.join(out, "pinning_curve.csv"),
                     ["h_oe", "mean_m_quadrature"], [h_values, np.asarray(quad)])
    return summary


def _run_resistor_histogram(spec: ExperimentSpec, out: str) -> dict:
    p = spec.params
    resistor = io.resistor_from_dict(p["resistor"])
    hist = resistors_histogram = __import__("bsnsim.resistors", fromlist=["x"]) \
        .stationary_histogram(resistor, i=float(p.get("i", 0.0)),
                              duration=float(p.get("duration", 1000 * (resistor.tau_fluct or 1e-9))),
                              dt=p.get("dt"), seed=spec.seed,
                              bins=int(p.get("bins", 60)))
    centers = 0.5 * (hist.bin_edges[:-1] + hist.bin_edges[1:])
    io.write_csv(os.path.join(out, "histogram.csv"),
                 ["r_ohm", "probability"], [centers, hist.probs])
    return {"modality": hist.modality}


def _run_transfer_curve(spec: ExperimentSpec, out: str) -> dict:
    p = spec.params
    circ = io.circuit_from_dict(p["circuit"])
    v_in = _sweep(p.get("v_in", {"start": 0.5 * circ.fet.v_dd,
                                 "stop": circ.fet.v_dd, "num": 41}))
    duration = float(p.get("duration", 2000 * (circ.resistor.tau_fluct or 160e-12)))
    curve = circuit_mod.transfer_characteristic(circ, v_in, duration,
                                                dt=p.get("dt"), seed=spec.seed)
    io.write_csv(os.path.join(out, "transfer_curve.csv"),
                 ["v_in_V", "mean_out"], [curve.v_in, curve.mean_out])
    summary = {"classification": curve.classification, "v0_V": curve.v0,
               "vs_V": curve.vs, "rmse": curve.rmse}
    if curve.classification in ("sigmoid", "staircase"):
        try:
            v_minus, v_plus, delta_v = circuit_mod.stochastic_region(curve)
            summary.update({"v_minus_V": v_minus, "v_plus_V": v_plus,
                            "delta_v_V": delta_v})
        except circuit_mod.DesignError as exc:
            summary["region_error"] = str(exc)
    return summary


def _run_timescales(spec: ExperimentSpec, out: str) -> dict:
    p = spec.params
    circ = io.circuit_from_dict(p["circuit"])
    tau = circ.resistor.tau_fluct
    v0 = circuit_mod.fitted_midpoint(circ, seed=spec.seed)
    dt = float(p.get("dt", tau / 80.0))
    tau_c = circuit_mod.measure_tau_c(circ, dt=dt,
                                      duration=float(p.get("duration", 4000 * tau)),
                                      seed=spec.seed, v_in=v0)
    tau_n = circuit_mod.measure_tau_n(circ, v_from=float(p.get("v_from", 0.0)),
                                      v_to=v0,
                                      n_replicas=int(p.get("n_replicas", 2000)),
                                      seed=spec.seed)
    _, r = __import__("bsnsim.resistors", fromlist=["x"]).resistance_series(
        circ.resistor, float(circ.resistor.i_50 or 0.0), 4000 * tau, tau / 80.0,
        spec.seed + 1)
    tau_corr = analysis.autocorrelation_time(r, sample_dt=tau / 80.0)
    io.write_csv(os.path.join(out, "timescales.csv"),
                 ["kind", "tau_corr_s", "tau_c_s", "tau_n_s"],
                 [np.array([circ.resistor.kind.value]), np.array([tau_corr]),
                  np.array([tau_c]), np.array([tau_n])])
    return {"tau_corr_s": tau_corr, "tau_c_s": tau_c, "tau_n_s": tau_n, "v0_V": v0}


def _run_power_energy(spec: ExperimentSpec, out: str) -> dict:
    p = spec.params
    circ = io.circuit_from_dict(p["circuit"])
    tau = circ.resistor.tau_fluct
    v0 = circuit_mod.fitted_midpoint(circ, seed=spec.seed)
    dt = float(p.get("dt", tau / 80.0))
    duration = float(p.get("duration", 4000 * tau))
    trace = circuit_mod.simulate_at(circ, v0, duration, dt, seed=spec.seed)
    power = circuit_mod.average_power(circ, trace)
    tau_c = analysis.autocorrelation_time(trace.output.astype(float), sample_dt=dt)
    tau_n = circuit_mod.measure_tau_n(circ, v_from=0.0, v_to=v0,
                                      n_replicas=int(p.get("n_replicas", 2000)),
                                      seed=spec.seed)
    metrics = circuit_mod.RunMetrics.from_measurements(tau_c, tau_n, power)
    io.write_csv(os.path.join(out, "power_energy.csv"),
                 ["tau_c_s", "tau_n_s", "avg_power_W", "e_c_J", "e_n_J"],
                 [np.array([metrics.tau_c]), np.array([metrics.tau_n]),
                  np.array([metrics.avg_power]), np.array([metrics.e_c]),
                  np.array([metrics.e_n])])
    return {"tau_c_s": metrics.tau_c, "tau_n_s": metrics.tau_n,
            "avg_power_W": metrics.avg_power, "e_c_J": metrics.e_c,
            "e_n_J": metrics.e_n}


def _resolve_problem(p) -> network.IsingProblem:
    if p == "and_gate" or (isinstance(p, dict) and p.get("preset") == "and_gate"):
        i0 = float(p.get("i0", 1.0)) if isinstance(p, dict) else 1.0
        return network.and_gate_problem(i0_anneal=i0)
    return io.problem_from_dict(p)


def _run_network(spec: ExperimentSpec, out: str) -> dict:
    p = spec.params
    problem = _resolve_problem(p["problem"])
    cfg = io.network_from_dict(dict(p.get("network", {}), seed=spec.seed))
    run = (network.run_clocked if cfg.engine == "clocked" else
           network.run_autonomous)(problem, cfg)
    summary = {"engine": cfg.engine, "n_spins": problem.n,
               "n_updates": run.n_updates, "sim_time_s": run.sim_time,
               "fps_reported": network.flips_per_second(run),
               "fps_measured": run.measured_fps}
    if run.histogram is not None:
        hist = run.histogram
        io.write_csv(os.path.join(out, "state_histogram.csv"),
                     ["state_index", "probability"],
                     [np.arange(hist.counts.size), hist.probs()])
        if problem.n <= 20:
            oracle = network.boltzmann_oracle(problem)
            summary["kl_to_boltzmann_nats"] = network.kl_divergence(hist.counts, oracle)
    return summary


# per-class spin-update times [s] used for throughput projections: continuous
# circular IMA fluctuates at ~ns, low-barrier PMA at tens of ns, telegraphic
# magnets at tau_0 * exp(Delta), and digital annealers at a ~10 ns clock
DEFAULT_FPS_CLASSES = {
    "IMA_continuous": 1e-9,
    "PMA_tunable": 4e-8,
    "telegraphic": 7e-8,
    "CMOS_baseline": 1e-8,
}


@dataclass
class FpsProjection:
    """fps = N/tau for each (device class, network size)."""

    classes: dict
    n_values: np.ndarray
    table: list  # rows of (class, tau, n, fps)


def fps_projection(classes: dict | None = None, n_values=None) -> FpsProjection:
    classes = dict(DEFAULT_FPS_CLASSES if classes is None else classes)
    n_values = np.asarray([1e2, 1e3, 1e4, 1e5, 1e6] if n_values is None else n_values,
                          dtype=float)
    table = [(name, tau, n, network.ideal_fps(n, tau))
             for name, tau in classes.items() for n in n_values]
    return FpsProjection(classes=classes, n_values=n_values, table=table)


def _run_fps_projection(spec: ExperimentSpec, out: str) -> dict:
    p = spec.params
    proj = fps_projection(p.get("classes"), p.get("n_values"))
    rows = list(zip(*proj.table))
    io.write_csv(os.path.join(out, "fps_projection.csv"),
                 ["device_class", "tau_s", "n_spins", "fps"],
                 [np.array(rows[0]), np.array(rows[1]), np.array(rows[2]),
                  np.array(rows[3])])
    return {"classes": proj.classes, "n_rows": len(proj.table)}


_RUNNERS = {
    "magnet_dynamics": _run_magnet_dynamics,
    "current_response": _run_current_response,
    "pinning_field": _run_pinning_field,
    "resistor_histogram": _run_resistor_histogram,
    "transfer_curve": _run_transfer_curve,
    "timescales": _run_timescales,
    "power_energy": _run_power_energy,
    "network_run": _run_network,
    "fps_projection": _run_fps_projection,
}


def run_experiment(spec: ExperimentSpec, out_dir: str) -> dict:
    """Run one experiment; writes CSVs plus a manifest, returns the summary."""
    out = os.path.join(out_dir, spec.label)
    os.makedirs(out, exist_ok=True)
    summary = _RUNNERS[spec.kind](spec, out)
    io.write_json(os.path.join(out, "summary.json"), summary)
    io.write_manifest(os.path.join(out, "manifest.json"),
                      {"kind": spec.kind, "name": spec.label, "params": spec.params},
                      spec.seed)
    return summary


def run_many(specs, out_dir: str, threads: int = 1) -> dict:
    """Run a batch of experiments, optionally across worker threads."""
    if threads <= 1:
        return {s.label: run_experiment(s, out_dir) for s in specs}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {s.label: pool.submit(run_experiment, s, out_dir) for s in specs}
        return {label: f.result() for label, f in futures.items()}
