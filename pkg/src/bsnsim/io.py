"""Config ingestion, validation, and deterministic result emission.

Configs are JSON.  Results are CSV files whose bodies are byte-identical
for identical spec+seed; anything time-dependent (timestamps, versions)
lives only in the run manifest.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .circuit import BsnCircuit
from .fet import FetModel
from .magnetics import GEOMETRY_CLASSES, MagnetParams
from .network import IsingProblem, NetworkConfig
from .resistors import ResistorKind, ResistorParams


class ConfigError(ValueError):
    def __init__(self, code: str, message: str, path: str = ""):
        super().__init__(f"{code} at {path or '<root>'}: {message}")
        self.code = code
        self.path = path


@dataclass
class Issue:
    code: str
    path: str
    message: str
    severity: str = "error"  # "error" | "warning"

    def to_dict(self) -> dict:
        return {"code": self.code, "path": self.path,
                "message": self.message, "severity": self.severity}


EXPERIMENT_KINDS = ("magnet_dynamics", "current_response", "pinning_field",
                    "resistor_histogram", "transfer_curve", "timescales",
                    "power_energy", "network_run", "fps_projection")


def load_json(path) -> dict:
    with open(path) as f:
        return json.load(f)


def magnet_from_dict(d: dict) -> MagnetParams:
    return MagnetParams(ms=float(d["ms"]), volume=float(d["volume"]),
                        h_kp_oe=float(d.get("h_kp", 0.0)),
                        h_ki_oe=float(d.get("h_ki", 0.0)),
                        alpha=float(d.get("alpha", 0.01)),
                        temperature=float(d.get("temperature", 300.0)),
                        geometry=d["geometry"])


def resistor_from_dict(d: dict) -> ResistorParams:
    magnet = magnet_from_dict(d["magnet"]) if "magnet" in d else None
    return ResistorParams(kind=ResistorKind(d["kind"]),
                          r_p=float(d["r_p"]), r_ap=float(d["r_ap"]),
                          tau_fluct=float(d["tau_fluct"]) if "tau_fluct" in d else None,
                          i_50=float(d["i_50"]) if "i_50" in d else None,
                          i_0=float(d["i_0"]) if "i_0" in d else None,
                          inverted=bool(d.get("inverted", False)),
                          backend=d.get("backend", "behavioral"),
                          magnet=magnet,
                          p_eff=float(d.get("p_eff", 1.0)),
                          bias_field_oe=float(d.get("bias_field", 0.0)))


def fet_from_dict(d: dict) -> FetModel:
    return FetModel(v_dd=float(d.get("v_dd", 0.8)),
                    v_t=float(d.get("v_t", 0.65)),
                    i_dsat=float(d.get("i_dsat", 15e-6)),
                    i_plus_max=float(d.get("i_plus_max", 40e-6)),
                    slope_factor=float(d.get("slope_factor", 1.354)),
                    lambda_clm=float(d.get("lambda_clm", 0.1)))


def circuit_from_dict(d: dict) -> BsnCircuit:
    return BsnCircuit(resistor=resistor_from_dict(d["resistor"]),
                      fet=fet_from_dict(d.get("fet", {})),
                      c_load=float(d.get("c_load", 10e-18)))


def problem_from_dict(d: dict) -> IsingProblem:
    return IsingProblem.from_dict(d)


def network_from_dict(d: dict, seed: int | None = None, **extra) -> NetworkConfig:
    return NetworkConfig(engine=d.get("engine", "clocked"),
                         n_samples=int(d.get("n_samples", 100000)),
                         seed=int(d.get("seed", seed or 0)),
                         clock_period=float(d.get("clock_period", 10e-9)),
                         tau_neu=float(d.get("tau_neu", 1e-9)),
                         tau_syn=float(d.get("tau_syn", 1e-11)),
                         update_order=d.get("update_order", "random"),
                         **extra)


def _require(d, key, path, issues, types=(int, float)) -> bool:
    if key not in d:
        issues.append(Issue("E_MISSING_KEY", f"{path}.{key}", f"missing required key {key!r}"))
        return False
    if types and not isinstance(d[key], types):
        issues.append(Issue("E_BAD_TYPE", f"{path}.{key}",
                            f"expected {'/'.join(t.__name__ for t in types)}"))
        return False
    return True


def _validate_magnet(d, path, issues):
    for key in ("ms", "volume"):
        if _require(d, key, path, issues) and d[key] <= 0:
            issues.append(Issue("E_BAD_VALUE", f"{path}.{key}", "must be positive"))
    if _require(d, "geometry", path, issues, types=(str,)):
        if d["geometry"] not in GEOMETRY_CLASSES:
            issues.append(Issue("E_MAGNET_GEOMETRY", f"{path}.geometry",
                                f"unknown class; expected one of {GEOMETRY_CLASSES}"))
        else:
            try:
                magnet_from_dict(d)
            except (ValueError, KeyError) as exc:
                issues.append(Issue("E_MAGNET_GEOMETRY", path, str(exc)))


def _validate_resistor(d, path, issues):
    if not _require(d, "kind", path, issues, types=(str,)):
        return
    try:
        kind = ResistorKind(d["kind"])
    except ValueError:
        issues.append(Issue("E_BAD_VALUE", f"{path}.kind",
                            "kind must be one of NTC, NTB, TC, TB"))
        return
    ok = _require(d, "r_p", path, issues) and _require(d, "r_ap", path, issues)
    if ok and not 0 < d["r_p"] < d["r_ap"]:
        issues.append(Issue("E_RESISTOR_ORDER", path, "need 0 < r_p < r_ap"))
    backend = d.get("backend", "behavioral")
    if backend == "behavioral" and ("tau_fluct" not in d or d["tau_fluct"] <= 0):
        issues.append(Issue("E_BAD_VALUE", f"{path}.tau_fluct",
                            "behavioral resistors need tau_fluct > 0"))
    if backend == "mtj":
        if "magnet" not in d:
            issues.append(Issue("E_MISSING_KEY", f"{path}.magnet",
                                "mtj backend needs magnet parameters"))
        else:
            _validate_magnet(d["magnet"], f"{path}.magnet", issues)
    if kind.tunable and backend == "behavioral":
        if "i_0" not in d or d["i_0"] <= 0:
            issues.append(Issue("E_TUNABLE_NO_I0", path,
                                "tunable resistors need a bias current i_0 > 0"))
        if "i_50" not in d or d["i_50"] < 0:
            issues.append(Issue("E_TUNABLE_NO_I50", path,
                                "tunable resistors need a 50:50 current i_50 >= 0"))
    if not kind.tunable and ("i_0" in d or "i_50" in d):
        issues.append(Issue("W_UNUSED_BIAS", path,
                            "i_50/i_0 are ignored for non-tunable kinds",
                            severity="warning"))


def _validate_circuit(d, path, issues):
    if "resistor" not in d:
        issues.append(Issue("E_MISSING_KEY", f"{path}.resistor", "circuit needs a resistor"))
    else:
        _validate_resistor(d["resistor"], f"{path}.resistor", issues)
    fet = d.get("fet", {})
    v_dd = fet.get("v_dd", 0.8)
    if "delta_v" in d and d["delta_v"] >= v_dd:
        issues.append(Issue("E_DELTAV_RANGE", f"{path}.delta_v",
                            "stochastic region must be smaller than V_DD"))
    if "c_load" in d and d["c_load"] <= 0:
        issues.append(Issue("E_BAD_VALUE", f"{path}.c_load", "must be positive"))


def _validate_problem(d, path, issues):
    if d == "and_gate" or (isinstance(d, dict) and d.get("preset") == "and_gate"):
        return
    if not isinstance(d, dict):
        issues.append(Issue("E_BAD_TYPE", path, "problem must be a dict or 'and_gate'"))
        return
    for key in ("n", "j", "h"):
        if key not in d:
            issues.append(Issue("E_MISSING_KEY", f"{path}.{key}", "missing"))
            return
    if d.get("i0", 1.0) <= 0:
        issues.append(Issue("E_ANNEAL_NONPOS", f"{path}.i0",
                            "annealing gain must be positive"))
        return
    try:
        problem_from_dict(d)
    except ValueError as exc:
        msg = str(exc)
        code = "E_PROBLEM_ASYMMETRIC" if "symmetric" in msg else (
            "E_PROBLEM_DIAGONAL" if "diagonal" in msg else "E_BAD_VALUE")
        issues.append(Issue(code, path, msg))


def _validate_network(d, path, issues):
    for key in ("tau_neu", "tau_syn", "clock_period"):
        if key in d and d[key] <= 0:
            issues.append(Issue("E_NETWORK_TIMESCALE", f"{path}.{key}", "must be positive"))
    eng = d.get("engine", "clocked")
    if eng not in ("clocked", "autonomous"):
        issues.append(Issue("E_BAD_VALUE", f"{path}.engine", "clocked or autonomous"))
    if eng == "autonomous" and d.get("tau_syn", 1e-11) / d.get("tau_neu", 1e-9) >= 1:
        issues.append(Issue("W_S_RATIO", path,
                            "s = tau_syn/tau_neu >= 1 degrades sampling fidelity",
                            severity="warning"))


_SECTION_VALIDATORS = {
    "magnet": _validate_magnet,
    "resistor": _validate_resistor,
    "circuit": _validate_circuit,
    "problem": _validate_problem,
    "network": _validate_network,
}


def validate_experiment(spec: dict, path: str = "") -> list[Issue]:
    """Validate one experiment spec; returns a list of issues."""
    issues: list[Issue] = []
    kind = spec.get("kind")
    if kind not in EXPERIMENT_KINDS:
        issues.append(Issue("E_UNKNOWN_KIND", f"{path}.kind",
                            f"kind must be one of {EXPERIMENT_KINDS}"))
        return issues
    params = spec.get("params", {})
    if not isinstance(params, dict):
        issues.append(Issue("E_BAD_TYPE", f"{path}.params", "params must be a dict"))
        return issues
    for section, validator in _SECTION_VALIDATORS.items():
        if section in params:
            validator(params[section], f"{path}.params.{section}", issues)
    if "seed" in spec and not isinstance(spec["seed"], int):
        issues.append(Issue("E_BAD_TYPE", f"{path}.seed", "seed must be an integer"))
    return issues


def validate_config(config: dict) -> dict:
    """Machine-readable validation report for a config document."""
    specs = config.get("experiments", [config]) if isinstance(config, dict) else []
    issues: list[Issue] = []
    if not isinstance(config, dict):
        issues.append(Issue("E_BAD_TYPE", "", "config root must be an object"))
    elif not specs:
        issues.append(Issue("E_MISSING_KEY", "experiments", "no experiments found"))
    for k, spec in enumerate(specs):
        prefix = f"experiments[{k}]" if "experiments" in config else ""
        if not isinstance(spec, dict):
            issues.append(Issue("E_BAD_TYPE", prefix, "experiment must be an object"))
            continue
        issues.extend(validate_experiment(spec, prefix))
    errors = [i for i in issues if i.severity == "error"]
    return {"ok": not errors,
            "n_errors": len(errors),
            "issues": [i.to_dict() for i in issues]}


def _atomic_write(path, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) and x == int(x) and abs(x) < 1e15:
        return repr(x)
    return repr(float(x))


def write_csv(path, header: list[str], columns):
    """Write columns of equal length with a unit-bearing header row.

    Floats are formatted with shortest round-trip repr, so identical data
    produces byte-identical files.
    """
    columns = [np.asarray(c) for c in columns]
    n = columns[0].shape[0]
    lines = [",".join(header)]
    for k in range(n):
        lines.append(",".join(_fmt(c[k]) for c in columns))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, payload: dict):
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_manifest(path, spec: dict, seed: int):
    """Run manifest: the one artifact allowed to carry a timestamp."""
    write_json(path, {"spec": spec, "seed": seed,
                      "package_version": __version__,
                      "created_utc": datetime.now(timezone.utc).isoformat()})
