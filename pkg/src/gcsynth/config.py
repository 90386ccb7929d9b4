"""JSON config and result files, CSV writers.

Floats are written with ``repr`` (shortest round-trip form), so emitted
files re-parse to the same bits and repeated runs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import jsonschema
import numpy as np

from . import __version__
from .augment import MultiplierPoint
from .model import NonlinearChannel, PlantModel, UncertaintyChannel, ValidatedPlant, validate
from .riccati import SynthesisResult
from .sim import Realization, Trajectory
from .synthesis import SearchReport, SearchSpec

__all__ = [
    "ConfigError",
    "Config",
    "load_config",
    "parse_config",
    "example_config_path",
    "result_to_dict",
    "dump_json",
    "load_result",
    "trajectory_csv",
    "sweep_csv",
]

_matrix = {"type": "array", "items": {"anyOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}}]}}
_vector = {"type": "array", "items": {"type": "number"}}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["plant"],
    "properties": {
        "plant": {
            "type": "object",
            "additionalProperties": False,
            "required": ["A", "B2"],
            "properties": {
                "A": _matrix,
                "B2": _matrix,
                "nonlinear_channels": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["B1bar", "C1bar", "psi_poly"],
                        "properties": {
                            "B1bar": _matrix,
                            "C1bar": _matrix,
                            "D1bar": _matrix,
                            "N": _matrix,
                            "psi_poly": _vector,
                        },
                    },
                },
                "uncertainty_channels": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["B1", "C1"],
                        "properties": {"B1": _matrix, "C1": _matrix, "D1": _matrix, "M": _matrix, "S": _matrix},
                    },
                },
            },
        },
        "cost": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"R": _matrix, "G": _matrix},
        },
        "x0": _vector,
        "epsilon_S": {"type": "number", "exclusiveMinimum": 0},
        "search": {
            "type": "object",
            "additionalProperties": False,
            "required": ["tau_grid", "lambda_grid"],
            "properties": {
                "tau_grid": {"type": "array", "items": _vector},
                "lambda_grid": {"type": "array", "items": {"type": "array", "items": _vector}},
                "refine": {"type": "boolean"},
                "refine_iters": {"type": "integer", "minimum": 0},
                "refine_shrink": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "refine_maxfev": {"type": "integer", "minimum": 1},
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "t_final": {"type": "number", "exclusiveMinimum": 0},
                "realization": {"type": "string"},
            },
        },
    },
}


class ConfigError(ValueError):
    """The config or result file cannot be used."""


@dataclass(frozen=True, eq=False)
class Config:
    plant: ValidatedPlant
    search: Optional[SearchSpec]
    dt: float = 1e-3
    t_final: float = 20.0
    realization: Realization = Realization()


def _arr(x):
    return None if x is None else np.array(x, dtype=float)


def parse_config(data: dict, seed: Optional[int] = None) -> Config:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    p = data["plant"]
    nl = []
    for ch in p.get("nonlinear_channels", []):
        kw = {"B1bar": _arr(ch["B1bar"]), "C1bar": _arr(ch["C1bar"]), "D1bar": _arr(ch.get("D1bar"))}
        if "N" in ch:
            kw["N"] = _arr(ch["N"])
        nl.append(NonlinearChannel.from_poly(ch["psi_poly"], **kw))
    unc = [
        UncertaintyChannel(_arr(ch["B1"]), _arr(ch["C1"]), _arr(ch.get("M")), _arr(ch.get("S")), _arr(ch.get("D1")))
        for ch in p.get("uncertainty_channels", [])
    ]
    cost = data.get("cost", {})
    kw = {}
    if "epsilon_S" in data:
        kw["eps_S"] = float(data["epsilon_S"])
    plant = validate(PlantModel(
        _arr(p["A"]), _arr(p["B2"]), nl, unc, _arr(cost.get("R")), _arr(cost.get("G")),
        _arr(data.get("x0")), **kw,
    ))

    spec = None
    if "search" in data:
        s = data["search"]
        spec = SearchSpec(
            tau_grid=s["tau_grid"],
            lambda_grid=s["lambda_grid"],
            refine=s.get("refine", False),
            refine_iters=s.get("refine_iters", 3),
            refine_shrink=s.get("refine_shrink", 0.5),
            refine_maxfev=s.get("refine_maxfev", 200),
            seed=seed,
        )
    sim = data.get("sim", {})
    try:
        real = Realization.parse(sim.get("realization", "zero"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return Config(plant, spec, float(sim.get("dt", 1e-3)), float(sim.get("t_final", 20.0)), real)


def load_config(path, seed: Optional[int] = None) -> Config:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed JSON: {exc}") from None
    return parse_config(data, seed=seed)


def example_config_path(name: str = "compressor") -> str:
    return str(resources.files("gcsynth") / "data" / f"{name}.json")


def _plain(a):
    return np.asarray(a, dtype=float).tolist()


def result_to_dict(res: SynthesisResult) -> dict:
    d = res.diagnostics
    spec = np.asarray(d.closed_loop_spectrum)
    return {
        "K": _plain(res.K),
        "X": _plain(res.X),
        "tau": list(res.point.tau),
        "lambda": [list(t) for t in res.point.lam],
        "V_tau": float(res.Vtau),
        "diagnostics": {
            "pi_count": list(d.pi_counts),
            "detU11": [float(v) for v in d.detU11s],
            "d11_margin": [float(v) for v in d.d11_margins],
            "are_residual": float(d.are_residual),
            "closed_loop_spectrum": [[float(z.real), float(z.imag)] for z in spec],
        },
        "tool_version": __version__,
    }


def dump_json(obj, path):
    text = json.dumps(obj, indent=2, allow_nan=False) + "\n"
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def load_result(path, plant: Optional[ValidatedPlant] = None) -> dict:
    """Read a result file; check ``K`` against ``plant`` when given."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read result file {path}: {exc}") from None
    if "K" not in data:
        raise ConfigError(f"{path}: no gain K")
    K = np.array(data["K"], dtype=float)
    if plant is not None:
        want = (plant.m + 2 * plant.g, plant.n + plant.g)
        if K.shape != want:
            raise ConfigError(f"{path}: K has shape {K.shape}, config needs {want}")
    data["K"] = K
    return data


def _fmt(v) -> str:
    return repr(float(v))


def trajectory_csv(traj: Trajectory) -> str:
    n, g, m = traj.x.shape[1], traj.mu_tilde.shape[1], traj.u.shape[1]
    header = (["t"] + [f"x{i+1}" for i in range(n)] + [f"mu{i+1}" for i in range(g)]
              + [f"u{i+1}" for i in range(m)] + [f"nu{i+1}" for i in range(g)]
              + [f"nut{i+1}" for i in range(g)] + ["J"])
    cols = np.hstack([traj.t[:, None], traj.x, traj.mu_tilde, traj.u, traj.nu, traj.nu_tilde,
                      traj.running_cost[:, None]])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in cols:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def sweep_csv(report: SearchReport) -> str:
    entries = report.trace
    k = len(entries[0].point.tau) if entries else 0
    g = len(entries[0].point.lam) if entries else 0
    header = ([f"tau{j+1}" for j in range(k)]
              + [f"lambda{i+1}_{p+1}" for i in range(g) for p in range(3)]
              + ["status", "V_tau", "stage"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for e in entries:
        vals = [_fmt(t) for t in e.point.tau] + [_fmt(v) for trip in e.point.lam for v in trip]
        status = "feasible" if e.feasible else e.reason
        w.writerow(vals + [status, _fmt(e.Vtau) if e.feasible else "", e.stage])
    return buf.getvalue()


def point_from_flags(tau: Optional[str], lams: Optional[list], plant: ValidatedPlant) -> MultiplierPoint:
    """Parse ``--tau 0.15[,..]`` and repeated ``--lambda a,b,c``."""
    try:
        taus = [float(v) for v in tau.split(",")] if tau else []
        lam = [tuple(float(v) for v in s.split(",")) for s in (lams or [])]
    except ValueError as exc:
        raise ConfigError(f"bad multiplier flag: {exc}") from None
    if len(taus) != plant.k:
        raise ConfigError(f"--tau needs {plant.k} comma-separated values, got {len(taus)}")
    if len(lam) != plant.g or any(len(t) != 3 for t in lam):
        raise ConfigError(f"need {plant.g} --lambda triples")
    try:
        return MultiplierPoint(tuple(taus), tuple(lam))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
