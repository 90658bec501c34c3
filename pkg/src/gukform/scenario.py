"""Scenario files: JSON schema, strict validation, presets, round-tripping.

A scenario document has seven sections:

    {
      "name": "...",                                  (optional)
      "topology":   {"adjacency": [[...]], "leader_links": [...]},
      "robots":     {"params": {...} | [{...}, ...],
                     "initial_states": [[x, y, theta, xdot, ydot, thetadot], ...]},
      "gains":      {"alpha": ..., "beta": ...},
      "formation":  {"type": "circle" | "sampled", ...},
      "leader":     {"type": "line_sine" | "stationary", ...},
      "region":     {"enabled": ..., "x_outer": [lo, hi], "y_outer": [...],
                     "x_inner": [...], "y_inner": [...],
                     "gamma1": ..., "gamma2": ..., "hysteresis": ...},
      "simulation": {"dt": ..., "horizon": ..., "leader_mode": ...,
                     "force_mode": ..., "seed": ...}
    }

Unknown keys are rejected with a message naming the offending key.  The
preset "paper-sec5" carries the reference benchmark scenario bundled with
the package (four followers on a weighted digraph, variable-radius circular
formation, line-plus-sine leader, rectangular region).
"""

from __future__ import annotations

import json
import math
import warnings
from pathlib import Path

import numpy as np

from .engine import ScenarioConfig
from .formation import (
    CircularFormation,
    ConstantRadius,
    CosineSineRadius,
    LineSineLeader,
    SampledFormation,
    StationaryLeader,
)
from .guk import BaumgarteGains
from .region import RegionSpec
from .robot import RobotParams
from .topology import build_augmented_laplacian, check_gains, has_spanning_tree


class ScenarioError(ValueError):
    """Scenario document failed schema or constraint validation."""


def _require_keys(section: dict, path: str, required: tuple, optional: tuple = ()):
    if not isinstance(section, dict):
        raise ScenarioError(f"{path}: expected an object")
    for key in section:
        if key not in required and key not in optional:
            raise ScenarioError(f"{path}.{key}: unknown key")
    for key in required:
        if key not in section:
            raise ScenarioError(f"{path}.{key}: missing required key")


def _number(section, path, key, default=None, positive=False, nonnegative=False):
    if key not in section:
        if default is None:
            raise ScenarioError(f"{path}.{key}: missing required key")
        return float(default)
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{path}.{key}: expected a number")
    v = float(v)
    if positive and v <= 0.0:
        raise ScenarioError(f"{path}.{key}: must be positive")
    if nonnegative and v < 0.0:
        raise ScenarioError(f"{path}.{key}: must be nonnegative")
    return v


def _pair(section, path, key):
    v = section.get(key)
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ScenarioError(f"{path}.{key}: expected a [low, high] pair")
    return float(v[0]), float(v[1])


def _parse_topology(doc):
    _require_keys(doc, "topology", ("adjacency", "leader_links"))
    try:
        return build_augmented_laplacian(doc["adjacency"], doc["leader_links"])
    except ValueError as exc:
        raise ScenarioError(f"topology: {exc}") from exc


def _parse_robots(doc, k):
    _require_keys(doc, "robots", ("params", "initial_states"))
    raw = doc["params"]
    if isinstance(raw, dict):
        raw = [raw] * k
    if not isinstance(raw, list) or len(raw) != k:
        raise ScenarioError(f"robots.params: expected one object or a list of {k}")
    params = []
    for i, entry in enumerate(raw):
        _require_keys(entry, f"robots.params[{i}]", ("m", "J", "l", "d"))
        try:
            params.append(
                RobotParams(
                    m=_number(entry, f"robots.params[{i}]", "m", positive=True),
                    J=_number(entry, f"robots.params[{i}]", "J", positive=True),
                    l=_number(entry, f"robots.params[{i}]", "l", positive=True),
                    d=_number(entry, f"robots.params[{i}]", "d", positive=True),
                )
            )
        except ValueError as exc:
            raise ScenarioError(f"robots.params[{i}]: {exc}") from exc

    states = doc["initial_states"]
    if not isinstance(states, list) or len(states) != k:
        raise ScenarioError(f"robots.initial_states: expected {k} rows (leader first)")
    q0 = np.zeros((k, 3))
    qd0 = np.zeros((k, 3))
    for i, row in enumerate(states):
        if not isinstance(row, (list, tuple)) or len(row) != 6:
            raise ScenarioError(
                f"robots.initial_states[{i}]: expected [x, y, theta, xdot, ydot, thetadot]"
            )
        q0[i] = [float(v) for v in row[:3]]
        qd0[i] = [float(v) for v in row[3:]]
    return params, q0, qd0


def _parse_gains(doc):
    _require_keys(doc, "gains", ("alpha", "beta"))
    try:
        return BaumgarteGains(
            alpha=_number(doc, "gains", "alpha", positive=True),
            beta=_number(doc, "gains", "beta", positive=True),
        )
    except ValueError as exc:
        raise ScenarioError(f"gains: {exc}") from exc


def _parse_radius(doc):
    _require_keys(
        doc,
        "formation.radius",
        ("type",),
        (
            "value", "base", "cos_amplitude", "cos_period",
            "switch_time", "sin_amplitude", "sin_period", "t_max",
        ),
    )
    kind = doc.get("type")
    if kind == "constant":
        return ConstantRadius(value=_number(doc, "formation.radius", "value", positive=True))
    if kind == "cosine_then_sine":
        return CosineSineRadius(
            base=_number(doc, "formation.radius", "base"),
            cos_amplitude=_number(doc, "formation.radius", "cos_amplitude"),
            cos_period=_number(doc, "formation.radius", "cos_period", positive=True),
            switch_time=_number(doc, "formation.radius", "switch_time", positive=True),
            sin_amplitude=_number(doc, "formation.radius", "sin_amplitude"),
            sin_period=_number(doc, "formation.radius", "sin_period", positive=True),
            t_max=_number(doc, "formation.radius", "t_max", positive=True),
        )
    raise ScenarioError(
        f"formation.radius.type: expected 'constant' or 'cosine_then_sine', got {kind!r}"
    )


def _parse_formation(doc, n):
    _require_keys(
        doc,
        "formation",
        ("type",),
        ("angular_rate", "phases", "radius", "times", "offsets", "offset_rates", "offset_accels"),
    )
    kind = doc.get("type")
    if kind == "circle":
        phases = doc.get("phases")
        if phases is not None:
            if not isinstance(phases, list) or len(phases) != n:
                raise ScenarioError(f"formation.phases: expected {n} entries")
            phases = tuple(float(p) for p in phases)
        else:
            phases = ()
        radius = _parse_radius(doc.get("radius", {"type": "constant", "value": 4.0}))
        try:
            return CircularFormation(
                n=n,
                angular_rate=_number(doc, "formation", "angular_rate", default=0.6),
                phases=phases,
                radius=radius,
            )
        except ValueError as exc:
            raise ScenarioError(f"formation: {exc}") from exc
    if kind == "sampled":
        for key in ("times", "offsets", "offset_rates", "offset_accels"):
            if key not in doc:
                raise ScenarioError(f"formation.{key}: missing required key")
        try:
            return SampledFormation(
                times=np.asarray(doc["times"], dtype=float),
                h=np.asarray(doc["offsets"], dtype=float),
                hdot=np.asarray(doc["offset_rates"], dtype=float),
                hddot=np.asarray(doc["offset_accels"], dtype=float),
            )
        except ValueError as exc:
            raise ScenarioError(f"formation: {exc}") from exc
    raise ScenarioError(f"formation.type: expected 'circle' or 'sampled', got {kind!r}")


def _parse_leader(doc):
    _require_keys(doc, "leader", ("type",), ("x_rate", "y_amplitude", "y_period", "pose"))
    kind = doc.get("type")
    if kind == "line_sine":
        return LineSineLeader(
            x_rate=_number(doc, "leader", "x_rate", default=0.1),
            y_amplitude=_number(doc, "leader", "y_amplitude", default=3.0),
            y_period=_number(doc, "leader", "y_period", default=300.0, positive=True),
        )
    if kind == "stationary":
        pose = doc.get("pose", [0.0, 0.0, 0.0])
        if not isinstance(pose, (list, tuple)) or len(pose) != 3:
            raise ScenarioError("leader.pose: expected [x, y, theta]")
        return StationaryLeader(pose=tuple(float(v) for v in pose))
    raise ScenarioError(f"leader.type: expected 'line_sine' or 'stationary', got {kind!r}")


def _parse_region(doc):
    _require_keys(
        doc,
        "region",
        ("enabled", "x_outer", "y_outer", "x_inner", "y_inner"),
        ("gamma1", "gamma2", "hysteresis"),
    )
    enabled = doc["enabled"]
    if not isinstance(enabled, bool):
        raise ScenarioError("region.enabled: expected true or false")
    try:
        spec = RegionSpec(
            x_outer=_pair(doc, "region", "x_outer"),
            y_outer=_pair(doc, "region", "y_outer"),
            x_inner=_pair(doc, "region", "x_inner"),
            y_inner=_pair(doc, "region", "y_inner"),
            gamma1=_number(doc, "region", "gamma1", default=6.0, positive=True),
            gamma2=_number(doc, "region", "gamma2", default=9.0, positive=True),
            hysteresis=_number(doc, "region", "hysteresis", default=0.0, nonnegative=True),
        )
    except ValueError as exc:
        raise ScenarioError(f"region: {exc}") from exc
    return spec, enabled


def _parse_simulation(doc):
    _require_keys(doc, "simulation", (), ("dt", "horizon", "leader_mode", "force_mode", "seed"))
    dt = _number(doc, "simulation", "dt", default=0.01, positive=True)
    horizon = _number(doc, "simulation", "horizon", default=470.0, nonnegative=True)
    leader_mode = doc.get("leader_mode", "prescribed")
    force_mode = doc.get("force_mode", "ideal")
    if leader_mode not in ("prescribed", "dynamic"):
        raise ScenarioError(
            f"simulation.leader_mode: expected 'prescribed' or 'dynamic', got {leader_mode!r}"
        )
    if force_mode not in ("ideal", "actuated"):
        raise ScenarioError(
            f"simulation.force_mode: expected 'ideal' or 'actuated', got {force_mode!r}"
        )
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ScenarioError("simulation.seed: expected an integer")
    return dt, horizon, leader_mode, force_mode, seed


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    """Validate a scenario document and build the runnable configuration.

    Raises ScenarioError naming the offending key on any schema violation;
    a failing gain condition produces a warning, not an error.
    """
    _require_keys(
        doc,
        "scenario",
        ("topology", "robots", "gains", "formation", "leader", "region", "simulation"),
        ("name",),
    )
    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        raise ScenarioError("name: expected a string")
    topology = _parse_topology(doc["topology"])
    if not has_spanning_tree(topology):
        warnings.warn(
            "topology has no leader-rooted spanning tree; formation tracking "
            "cannot converge",
            stacklevel=2,
        )
    k = topology.n + 1
    params, q0, qd0 = _parse_robots(doc["robots"], k)
    gains = _parse_gains(doc["gains"])
    formation = _parse_formation(doc["formation"], topology.n)
    leader = _parse_leader(doc["leader"])
    region, enabled = _parse_region(doc["region"])
    dt, horizon, leader_mode, force_mode, seed = _parse_simulation(doc["simulation"])

    if not check_gains(gains.alpha, gains.beta, topology):
        warnings.warn(
            f"gain condition violated: alpha^2/beta = {gains.alpha**2 / gains.beta:.6g} "
            "does not exceed the topology threshold",
            stacklevel=2,
        )

    config = ScenarioConfig(
        topology=topology,
        params=params,
        gains=gains,
        formation=formation,
        leader=leader,
        region=region,
        region_enabled=enabled,
        q0=q0,
        qdot0=qd0,
        dt=dt,
        horizon=horizon,
        leader_mode=leader_mode,
        force_mode=force_mode,
        seed=seed,
        name=name,
    )
    try:
        config.validate()
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    return config


def config_to_dict(config: ScenarioConfig) -> dict:
    """Serialize a configuration back to the scenario document form."""
    formation = config.formation
    if isinstance(formation, CircularFormation):
        radius = formation.radius
        if isinstance(radius, ConstantRadius):
            radius_doc = {"type": "constant", "value": radius.value}
        else:
            radius_doc = {
                "type": "cosine_then_sine",
                "base": radius.base,
                "cos_amplitude": radius.cos_amplitude,
                "cos_period": radius.cos_period,
                "switch_time": radius.switch_time,
                "sin_amplitude": radius.sin_amplitude,
                "sin_period": radius.sin_period,
                "t_max": radius.t_max,
            }
        formation_doc = {
            "type": "circle",
            "angular_rate": formation.angular_rate,
            "phases": list(formation.phases),
            "radius": radius_doc,
        }
    else:
        formation_doc = {
            "type": "sampled",
            "times": formation.times.tolist(),
            "offsets": formation.h.tolist(),
            "offset_rates": formation.hdot.tolist(),
            "offset_accels": formation.hddot.tolist(),
        }
    leader = config.leader
    if isinstance(leader, LineSineLeader):
        leader_doc = {
            "type": "line_sine",
            "x_rate": leader.x_rate,
            "y_amplitude": leader.y_amplitude,
            "y_period": leader.y_period,
        }
    else:
        leader_doc = {"type": "stationary", "pose": list(leader.pose)}

    q0 = np.asarray(config.q0, float).reshape(-1, 3)
    qd0 = np.asarray(config.qdot0, float).reshape(-1, 3)
    return {
        "name": config.name,
        "topology": {
            "adjacency": config.topology.adjacency.tolist(),
            "leader_links": config.topology.leader_links.tolist(),
        },
        "robots": {
            "params": [
                {"m": p.m, "J": p.J, "l": p.l, "d": p.d} for p in config.params
            ],
            "initial_states": [
                [q0[i, 0], q0[i, 1], q0[i, 2], qd0[i, 0], qd0[i, 1], qd0[i, 2]]
                for i in range(q0.shape[0])
            ],
        },
        "gains": {"alpha": config.gains.alpha, "beta": config.gains.beta},
        "formation": formation_doc,
        "leader": leader_doc,
        "region": {
            "enabled": config.region_enabled,
            "x_outer": list(config.region.x_outer),
            "y_outer": list(config.region.y_outer),
            "x_inner": list(config.region.x_inner),
            "y_inner": list(config.region.y_inner),
            "gamma1": config.region.gamma1,
            "gamma2": config.region.gamma2,
            "hysteresis": config.region.hysteresis,
        },
        "simulation": {
            "dt": config.dt,
            "horizon": config.horizon,
            "leader_mode": config.leader_mode,
            "force_mode": config.force_mode,
            "seed": config.seed,
        },
    }


def _paper_sec5() -> dict:
    """Bundled reference scenario: four followers, variable-radius circle."""
    pi = math.pi
    return {
        "name": "paper-sec5",
        "topology": {
            "adjacency": [
                [0.0, 0.0, 0.0, 0.5],
                [0.6, 0.0, 0.3, 0.0],
                [0.0, 0.3, 0.0, 0.0],
                [0.5, 0.0, 0.3, 0.0],
            ],
            "leader_links": [0.8, 0.0, 0.0, 0.0],
        },
        "robots": {
            "params": {"m": 1.0, "J": 1.0, "l": 0.1, "d": 0.05},
            "initial_states": [
                [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                [-4.0, 4.0, 0.0, 2.0, 0.0, 0.2],
                [-4.0, 2.0, pi / 2, 0.0, 2.0, 0.8],
                [-4.0, -2.0, pi, -3.0, 0.0, 1.8],
                [-4.0, -4.0, 3 * pi / 2, 0.0, -4.0, 2.0],
            ],
        },
        "gains": {"alpha": 4.0, "beta": 0.5},
        "formation": {
            "type": "circle",
            "angular_rate": 0.6,
            "phases": [0.0, pi / 2, pi, 3 * pi / 2],
            "radius": {
                "type": "cosine_then_sine",
                "base": 4.0,
                "cos_amplitude": 2.0,
                "cos_period": 500.0,
                "switch_time": 300.0,
                "sin_amplitude": 2.0,
                "sin_period": 600.0,
                "t_max": 470.0,
            },
        },
        "leader": {
            "type": "line_sine",
            "x_rate": 0.1,
            "y_amplitude": 3.0,
            "y_period": 300.0,
        },
        "region": {
            "enabled": False,
            "x_outer": [-10.0, 50.0],
            "y_outer": [-15.0, 15.0],
            "x_inner": [-9.5, 49.5],
            "y_inner": [-14.5, 14.5],
            "gamma1": 6.0,
            "gamma2": 9.0,
            "hysteresis": 0.0,
        },
        "simulation": {
            "dt": 0.01,
            "horizon": 470.0,
            "leader_mode": "prescribed",
            "force_mode": "ideal",
            "seed": 0,
        },
    }


PRESETS = {"paper-sec5": _paper_sec5}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def load_scenario(source) -> ScenarioConfig:
    """Load a scenario from a preset name or a JSON file path."""
    if isinstance(source, str) and source in PRESETS:
        return scenario_from_dict(PRESETS[source]())
    path = Path(source)
    if not path.exists():
        raise ScenarioError(
            f"scenario {source!r} is neither a preset ({', '.join(preset_names())}) "
            "nor an existing file"
        )
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: scenario document must be a JSON object")
    return scenario_from_dict(doc)
