"""Experiment configuration: JSON schema, validation with line references, builders."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path as FilePath
from typing import Any

import jsonschema
import numpy as np

from .dynamics import AdversarySpec, default_schedules
from .errors import ConfigError, SBGDError
from .game import CongestionGame
from .graph import Dag, build_dag, count_paths
from .learner import INIT_MODES, PRESETS, Schedule

_PAIR = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2}
_NUM_OR_LIST = {
    "oneOf": [
        {"type": "number", "minimum": 0},
        {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
    ]
}

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "sbgd experiment",
    "type": "object",
    "required": ["graph", "agents", "costs"],
    "additionalProperties": False,
    "properties": {
        "graph": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["nodes", "edges"],
                    "additionalProperties": False,
                    "properties": {
                        "nodes": {"type": "integer", "minimum": 2},
                        "edges": {"type": "array", "items": _PAIR, "minItems": 1},
                    },
                },
                {
                    "type": "object",
                    "required": ["chain"],
                    "additionalProperties": False,
                    "properties": {
                        "chain": {
                            "type": "object",
                            "required": ["segments", "edges_per_segment"],
                            "additionalProperties": False,
                            "properties": {
                                "segments": {"type": "integer", "minimum": 1},
                                "edges_per_segment": {"type": "integer", "minimum": 1},
                            },
                        }
                    },
                },
            ]
        },
        "agents": {"type": "array", "items": _PAIR, "minItems": 1},
        "costs": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["affine"],
                    "additionalProperties": False,
                    "properties": {
                        "affine": {
                            "type": "object",
                            "required": ["a"],
                            "additionalProperties": False,
                            "properties": {"a": _NUM_OR_LIST, "b": _NUM_OR_LIST},
                        }
                    },
                },
                {
                    "type": "object",
                    "required": ["table"],
                    "additionalProperties": False,
                    "properties": {
                        "table": {
                            "type": "array",
                            "items": {"type": "array", "items": {"type": "number", "minimum": 0}},
                        }
                    },
                },
            ]
        },
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"enum": list(PRESETS)},
                "c_gamma": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "c_mu": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "init": {"enum": list(INIT_MODES)},
        "T": {"type": "integer", "minimum": 1},
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "metric_stride": {"type": ["integer", "null"], "minimum": 1},
        "output": {"type": "string"},
        "agent": {"type": "integer", "minimum": 0},
        "adversary": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["fixed_sequence", "iid_random", "load_replay"]},
                "low": {"type": "number", "minimum": 0},
                "high": {"type": "number", "minimum": 0},
                "sequence": {"type": "array", "items": {"type": "array", "items": {"type": "number", "minimum": 0}}},
                "loads": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
            },
        },
    },
}


def gen_chain(k: int, d: int) -> dict:
    """Graph spec for k+1 nodes in a line with d parallel edges between neighbours."""
    if k < 1 or d < 1:
        raise ValueError("segments and edges_per_segment must be at least 1")
    return {"nodes": k + 1, "edges": [[s, s + 1] for s in range(k) for _ in range(d)]}


@dataclass
class ExperimentConfig:
    graph: dict
    agents: list[list[int]]
    costs: dict
    schedule: dict = field(default_factory=lambda: {"preset": "default"})
    init: str = "feasible_construction"
    T: int = 1000
    seeds: list[int] = field(default_factory=lambda: [0])
    metric_stride: int | None = None
    output: str = "runs"
    agent: int = 0
    adversary: dict | None = None

    @classmethod
    def from_dict(cls, data: dict, text: str | None = None) -> "ExperimentConfig":
        validate_config_dict(data, text)
        cfg = cls(**{k: data[k] for k in data})
        cfg.agents = [list(p) for p in cfg.agents]
        cfg.schedule = {"preset": "default", **cfg.schedule}
        try:
            cfg.build_game()
            if cfg.adversary is not None:
                cfg.build_adversary()
        except ConfigError as exc:
            if exc.line is None:
                exc.line = _guess_line(text, _semantic_key(exc))
            raise
        except (SBGDError, ValueError) as exc:
            raise ConfigError(str(exc), _guess_line(text, _semantic_key(exc))) from exc
        return cfg

    def to_dict(self) -> dict:
        out = asdict(self)
        if out["adversary"] is None:
            del out["adversary"]
        return out

    def build_graph(self) -> Dag:
        spec = self.graph
        if "chain" in spec:
            spec = gen_chain(spec["chain"]["segments"], spec["chain"]["edges_per_segment"])
        return build_dag(spec["nodes"], spec["edges"])

    def build_game(self) -> CongestionGame:
        g = self.build_graph()
        agents = [tuple(p) for p in self.agents]
        for i, (s, t) in enumerate(agents):
            if not (s < g.node_count and t < g.node_count) or s == t:
                raise ConfigError(f"agents[{i}] = {[s, t]} is not a valid source/sink pair", None)
            if count_paths(g, s, t) == 0:
                raise ConfigError(f"agents[{i}]: node {t} is unreachable from {s}", None)
        if "affine" in self.costs:
            aff = self.costs["affine"]
            a, b = aff["a"], aff.get("b", 0.0)
            for name, val in (("a", a), ("b", b)):
                if isinstance(val, list) and len(val) != g.m:
                    raise ConfigError(f"costs.affine.{name} needs {g.m} entries, got {len(val)}", None)
            return CongestionGame.affine(g, agents, a, b)
        table = np.array(self.costs["table"], dtype=float)
        return CongestionGame(g, agents, table)

    def build_schedules(self, game: CongestionGame) -> list[Schedule]:
        sched = dict(self.schedule)
        preset = sched.pop("preset", "default")
        return default_schedules(game, preset, **{k: v for k, v in sched.items() if v is not None})

    def build_adversary(self) -> AdversarySpec:
        spec = self.adversary or {"kind": "iid_random"}
        kind = spec["kind"]
        m = self.build_graph().m
        if kind == "iid_random":
            return AdversarySpec(kind, {"low": spec.get("low", 0.0), "high": spec.get("high", 1.0)})
        if kind == "fixed_sequence":
            seq = np.array(spec.get("sequence", []), dtype=float)
            if seq.ndim != 2 or seq.shape[1] != m or len(seq) < self.T:
                raise ConfigError(f"adversary.sequence must have at least T={self.T} rows of {m} costs", None)
            return AdversarySpec(kind, seq)
        game = self.build_game()
        loads = np.array(spec.get("loads", []), dtype=int)
        if loads.ndim != 2 or loads.shape[1] != m or len(loads) < self.T:
            raise ConfigError(f"adversary.loads must have at least T={self.T} rows of {m} loads", None)
        if loads.max() > game.n:
            raise ConfigError(f"adversary.loads entries must be at most n={game.n}", None)
        return AdversarySpec(kind, {"loads": loads, "cost_tables": game.cost_tables})


def _semantic_key(exc: Exception) -> list[str]:
    msg = str(exc)
    for key in ("costs", "agents", "graph", "adversary", "schedule"):
        if key in msg:
            return [key]
    if "cycle" in msg or "node" in msg or "edge" in msg:
        return ["graph"]
    if "cost" in msg:
        return ["costs"]
    return []


def _guess_line(text: str | None, path) -> int | None:
    """Line of the innermost string key of ``path`` in the raw JSON text."""
    if text is None:
        return None
    pos = 0
    found = None
    for part in path:
        if not isinstance(part, str):
            continue
        idx = text.find(f'"{part}"', pos)
        if idx < 0:
            break
        pos = idx
        found = idx
    if found is None:
        return 1
    return text.count("\n", 0, found) + 1


def validate_config_dict(data: Any, text: str | None = None) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {err.message}", _guess_line(text, list(err.absolute_path)))


def load_config(path: str | FilePath) -> ExperimentConfig:
    text = FilePath(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno) from exc
    return ExperimentConfig.from_dict(data, text)
