"""Experiment configuration: JSON text checked against a published schema.

Errors carry the line of the offending field so the CLI can point at it.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np

from . import zoo
from .manifold import (
    build_circle,
    build_interval,
    build_mapping_torus,
    build_shell,
    build_sphere,
    build_torus,
    product,
)
from .structure import GeometricStructure, direct_sum, scale_norm


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{message}")


def load_schema() -> dict:
    text = resources.files("geoentropy").joinpath("schema/experiment.schema.json").read_text()
    return json.loads(text)


@dataclass
class ExperimentConfig:
    raw: dict
    text: str = ""
    source: str = "<config>"
    seed: int = 0
    r_grid: list = field(default_factory=list)
    epsilon_grid: list = field(default_factory=list)
    T: int = 1
    q: int = 2
    quantum: float | None = None
    snap_tolerance: float | None = None
    mode: str = "exhaustive"
    width: int = 0
    budget: int = 1_000_000
    packing: str = "greedy"
    fit_window: object = "upper-half"
    saturation: float = 0.25
    compute_H: bool = False
    floor: float | None = None
    lemma_rhos: list | None = None

    @property
    def solver_mode(self):
        if self.mode == "beam":
            return ("beam", self.width, self.seed)
        return "exhaustive"

    def structure(self) -> GeometricStructure:
        return build_structure(self.raw["structure"])

    @property
    def name(self) -> str:
        return self.raw.get("name", "run")

    @property
    def outputs(self) -> dict:
        out = {"dir": ".", "prefix": self.name, "formats": ["csv", "json"]}
        out.update(self.raw.get("outputs", {}))
        return out


def _line_of(text: str, path) -> int | None:
    """Best-effort line number of a JSON path in ``text``."""
    pos = 0
    found = None
    for key in path:
        if isinstance(key, int):
            continue
        m = re.compile(r'"%s"\s*:' % re.escape(str(key))).search(text, pos)
        if not m:
            break
        pos = m.end()
        found = m.start()
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


def _path_str(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg}", exc.lineno) from None
    errors = sorted(jsonschema.Draft202012Validator(load_schema()).iter_errors(raw), key=lambda e: list(e.path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        path = list(err.absolute_path)
        raise ConfigError(f"{_path_str(path)}: {err.message}", _line_of(text, path), _path_str(path))

    def fail(path, message):
        raise ConfigError(f"{_path_str(path)}: {message}", _line_of(text, path), _path_str(path))

    for name in ("r_grid", "epsilon_grid", "lemma_rhos"):
        grid = raw.get(name)
        if grid is not None and any(b <= a for a, b in zip(grid, grid[1:])):
            fail([name], "grid must be strictly ascending")
    _validate_structure(raw["structure"], ["structure"], fail)

    solver = raw.get("solver", {})
    cfg = ExperimentConfig(raw=raw, text=text, source=source)
    cfg.seed = int(raw.get("seed", solver.get("seed", 0)))
    cfg.r_grid = [float(v) for v in raw.get("r_grid", [])]
    cfg.epsilon_grid = [float(v) for v in raw.get("epsilon_grid", [])]
    cfg.T = int(raw.get("T", 1))
    cfg.q = int(raw.get("q", 2))
    cfg.quantum = raw.get("quantum")
    cfg.snap_tolerance = raw.get("snap_tolerance")
    cfg.mode = solver.get("mode", "exhaustive")
    cfg.width = int(solver.get("width", 64)) if cfg.mode == "beam" else 0
    cfg.budget = int(solver.get("budget", 1_000_000))
    cfg.packing = raw.get("packing", "greedy")
    window = raw.get("fit_window", "upper-half")
    cfg.fit_window = tuple(window) if isinstance(window, list) else window
    cfg.saturation = float(raw.get("saturation", 0.25))
    cfg.compute_H = bool(raw.get("compute_H", False))
    cfg.floor = raw.get("floor")
    cfg.lemma_rhos = raw.get("lemma_rhos")
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, str(path))


def _validate_structure(spec, path, fail):
    if "zoo" in spec:
        if spec["zoo"] not in zoo.ZOO:
            fail(path + ["zoo"], f"unknown zoo structure {spec['zoo']!r}")
    elif "of" in spec:
        _validate_structure(spec["of"], path + ["of"], fail)
    else:
        for k, sub in enumerate(spec["direct_sum"]):
            _validate_structure(sub, path + ["direct_sum", k], fail)


def build_manifold(spec: dict):
    kind = spec["kind"]
    if kind == "torus":
        return build_torus(spec.get("points_per_dim", 8), spec.get("dims", 1))
    if kind == "circle":
        return build_circle(spec.get("points", spec.get("points_per_dim", 8)))
    if kind == "interval":
        return build_interval(spec.get("points", 8))
    if kind == "sphere":
        return build_sphere(spec.get("subdivision_level", 1))
    if kind == "shell":
        return build_shell(spec.get("subdivision_level", 1), spec.get("radii", [0.8, 1.2]))
    if kind == "mapping-torus":
        mono = spec.get("monodromy", [[2, 1], [1, 1]])
        return build_mapping_torus(spec.get("points_per_dim", 24), spec.get("levels", 4), np.array(mono))
    if kind == "product":
        a, b = spec["factors"]
        return product(build_manifold(a), build_manifold(b))
    raise ConfigError(f"unknown manifold kind {kind!r}")


def build_structure(spec: dict) -> GeometricStructure:
    if "zoo" in spec:
        m = build_manifold(spec["manifold"]) if "manifold" in spec else None
        return zoo.build(spec["zoo"], m, **spec.get("params", {}))
    if "of" in spec:
        return scale_norm(build_structure(spec["of"]), float(spec["scale"]))
    a, b = spec["direct_sum"]
    return direct_sum(build_structure(a), build_structure(b))


def select_points(m, pred) -> np.ndarray:
    """Point ids satisfying a coordinate predicate (``all``, ``ball``, ``box`` or ``ids``)."""
    if pred == "all":
        return np.arange(len(m))
    if "ids" in pred:
        return np.unique(np.asarray(pred["ids"], dtype=np.int64))
    if "ball" in pred:
        d = m.distances_to(np.asarray(pred["ball"]["center"], dtype=np.float64))
        return np.flatnonzero(d <= pred["ball"]["radius"] + 1e-12)
    lo = np.asarray(pred["box"]["lo"], dtype=np.float64)
    hi = np.asarray(pred["box"]["hi"], dtype=np.float64)
    inside = np.all((m.coords >= lo - 1e-12) & (m.coords <= hi + 1e-12), axis=1)
    return np.flatnonzero(inside)
