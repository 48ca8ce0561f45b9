"""Scenario files: one JSON document describing a full experiment."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

from .flow import IntegratorConfig
from .io import dumps
from .path import FrequencyPath
from .perturbation import CHARTS, assemble_system

BUNDLED = ("torus_example", "elliptic_example")


class ScenarioError(ValueError):
    """Malformed scenario document."""


@dataclass(frozen=True)
class PoincareSpec:
    coordinate: int = 0
    value: float = 0.0
    u: int = 1
    v: int = 3
    seeds: int = 3
    crossings: int = 200
    t_max: float = 2000.0


@dataclass(frozen=True)
class Scenario:
    name: str
    path: dict
    sigma: float = 1.0
    epsilon: float = 1.0
    chart: str = "action_angle"
    cutoff: bool = False
    channels: int = 3
    y_start: float = 0.25
    min_delta_fraction: float = 0.2
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    poincare: PoincareSpec = field(default_factory=PoincareSpec)
    out: str = "out"
    seed: int = 0

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise ScenarioError(f"chart must be one of {CHARTS}")
        if not self.sigma > 0:
            raise ScenarioError("sigma must be positive")
        if not (isinstance(self.channels, int) and self.channels >= 1):
            raise ScenarioError("channels must be a positive integer")
        if set(self.path) - {"v1", "v2", "J"} or not {"v1", "v2"} <= set(self.path):
            raise ScenarioError("path needs exactly the keys v1, v2 and optionally J")

    def frequency_path(self):
        return FrequencyPath.from_spec(self.path)

    def system(self, epsilon=None):
        eps = self.epsilon if epsilon is None else epsilon
        return assemble_system(self.frequency_path(), self.sigma, eps, self.chart, self.cutoff,
                               self.channels, self.y_start, self.min_delta_fraction)

    def to_dict(self):
        d = asdict(self)
        d["integrator"] = self.integrator.to_dict()
        d["path"] = {k: list(v) for k, v in self.path.items()}
        return d

    def dumps(self):
        return dumps(self.to_dict())


def _strict(cls, data, where):
    if not isinstance(data, dict):
        raise ScenarioError(f"{where} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ScenarioError(f"unknown keys in {where}: {sorted(unknown)}")


def parse_scenario(data):
    """Validate a decoded scenario mapping."""
    _strict(Scenario, data, "scenario")
    d = dict(data)
    if "name" not in d or "path" not in d:
        raise ScenarioError("scenario needs 'name' and 'path'")
    try:
        if "integrator" in d:
            _strict(IntegratorConfig, d["integrator"], "integrator")
            d["integrator"] = IntegratorConfig.from_dict(d["integrator"])
        if "poincare" in d:
            _strict(PoincareSpec, d["poincare"], "poincare")
            d["poincare"] = PoincareSpec(**d["poincare"])
        for key in ("sigma", "epsilon", "y_start", "min_delta_fraction"):
            if key in d:
                d[key] = float(d[key])
        d["path"] = {k: (list(map(float, v))) for k, v in d["path"].items()}
        return Scenario(**d)
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from exc


def load_scenario(source):
    """Load a scenario from a file path or a bundled name."""
    p = Path(source)
    if p.is_file():
        text = p.read_text()
    elif source in BUNDLED:
        text = resources.files("resdrift.scenarios").joinpath(f"{source}.json").read_text()
    else:
        raise FileNotFoundError(f"scenario {source!r} not found")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    return parse_scenario(data)
