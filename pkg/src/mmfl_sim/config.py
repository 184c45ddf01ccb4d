"""Simulation configuration: dataclasses, JSON schema and loading."""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Any, Dict, List, Optional

import jsonschema

from .batch_adapt import IterationRule
from .deadline import Direction
from .domain import ConfigurationError, GNSSchedule, ModelState


class Selector(str, Enum):
    FLAMMABLE = "flammable"
    RANDOM = "random"
    ROUND_ROBIN = "round_robin"
    GREEDY = "greedy"


@dataclass
class ModelConfig:
    model_id: str
    target_accuracy: float
    a_max: float
    rate: float
    loss0: float = 2.3
    phi0: float = 20.0
    gns_growth: float = 10.0
    gns_ramp_rounds: int = 300

    def build(self, bias_penalty: float) -> ModelState:
        return ModelState(
            model_id=self.model_id,
            target_accuracy=self.target_accuracy,
            gns_schedule=GNSSchedule(self.phi0, self.gns_growth, self.gns_ramp_rounds),
            a_max=self.a_max, rate=self.rate, bias_penalty=bias_penalty, loss0=self.loss0,
        )


def default_models() -> List[ModelConfig]:
    return [
        ModelConfig("cnn_small", target_accuracy=0.85, a_max=0.90, rate=7.0e-6,
                    loss0=2.3, phi0=60.0),
        ModelConfig("resnet18", target_accuracy=0.75, a_max=0.80, rate=3.5e-6,
                    loss0=2.3, phi0=100.0),
        ModelConfig("mobilenet_v2", target_accuracy=0.60, a_max=0.65, rate=3.2e-6,
                    loss0=3.5, phi0=120.0),
    ]


@dataclass
class ClientsConfig:
    count: int = 200
    availability_rate: float = 1.0
    device_mix: Dict[str, float] = field(
        default_factory=lambda: {"gpu": 1 / 3, "cpu": 1 / 3, "mobile": 1 / 3})
    samples_per_model: int = 300000
    dirichlet_alpha: float = 1.0
    heterogeneity_sigma: float = 0.2
    speed_sigma: float = 0.3
    roster: Optional[str] = None


@dataclass
class SelectionConfig:
    selector: Selector = Selector.FLAMMABLE
    alpha: float = 1.0
    per_model_clients: int = 10
    multi_model: bool = True


@dataclass
class BatchConfig:
    adaptation: bool = True
    m0: int = 10
    k0: int = 20
    m_min: int = 10
    m_max: int = 100
    iteration_rule: IterationRule = IterationRule.PROGRESS_MATCHING


@dataclass
class DeadlineConfig:
    p_init: float = 100.0
    p_min: float = 10.0
    epsilon: float = 5.0
    window: int = 5
    direction: Direction = Direction.STABLE_DECREASE
    # None: dynamic control for the flammable selector only, fixed p_init otherwise
    dynamic: Optional[bool] = None


@dataclass
class LearningConfig:
    beta: float = 0.3
    loss_dispersion: float = 0.1
    novelty_rounds: float = 0.7


@dataclass
class ArmConfig:
    """One experiment arm: a selector plus the two engagement switches."""

    name: str
    selector: Selector = Selector.FLAMMABLE
    batch_adaptation: bool = True
    multi_model: bool = True
    # None: dynamic deadline for the flammable selector only
    dynamic_deadline: Optional[bool] = None

    def __post_init__(self):
        self.selector = Selector(self.selector)


def default_arms() -> List[ArmConfig]:
    return [
        ArmConfig("flammable"),
        ArmConfig("random", Selector.RANDOM, batch_adaptation=False, multi_model=False),
        ArmConfig("round_robin", Selector.ROUND_ROBIN, batch_adaptation=False, multi_model=False),
        ArmConfig("greedy", Selector.GREEDY, batch_adaptation=False, multi_model=False),
    ]


@dataclass
class ExperimentConfig:
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    arms: List[ArmConfig] = field(default_factory=default_arms)


@dataclass
class SweepConfig:
    alphas: List[float] = field(default_factory=lambda: [0.1, 1.0, 10.0])
    # every arm trains all models for this many rounds; final accuracy is read after it
    rounds: int = 200


@dataclass
class SimulationConfig:
    seed: int = 0
    rounds: int = 1500
    continue_after_target: bool = False
    profiles: Optional[str] = None
    clients: ClientsConfig = field(default_factory=ClientsConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    batch: BatchConfig = field(default_factory=BatchConfig)
    deadline: DeadlineConfig = field(default_factory=DeadlineConfig)
    learning: LearningConfig = field(default_factory=LearningConfig)
    models: List[ModelConfig] = field(default_factory=default_models)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def __post_init__(self):
        self.selection.selector = Selector(self.selection.selector)
        self.batch.iteration_rule = IterationRule(self.batch.iteration_rule)
        self.deadline.direction = Direction(self.deadline.direction)
        if self.rounds < 0 or self.clients.count < 1:
            raise ConfigurationError("rounds must be >= 0 and clients.count >= 1")
        if self.selection.per_model_clients < 1:
            raise ConfigurationError("selection.per_model_clients must be >= 1")
        if not 1 <= self.batch.m_min <= self.batch.m_max:
            raise ConfigurationError("batch range must satisfy 1 <= m_min <= m_max")
        if not self.batch.m_min <= self.batch.m0 <= self.batch.m_max or self.batch.k0 < 1:
            raise ConfigurationError("batch.m0 must lie in [m_min, m_max] and k0 >= 1")
        if not 0 <= self.clients.availability_rate <= 1:
            raise ConfigurationError("clients.availability_rate must lie in [0, 1]")
        if not 0 <= self.learning.beta < 1:
            raise ConfigurationError("learning.beta must lie in [0, 1)")
        if not self.models:
            raise ConfigurationError("at least one model is required")
        ids = [m.model_id for m in self.models]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("model ids must be unique")
        if not self.experiment.seeds:
            raise ConfigurationError("experiment.seeds must not be empty")
        names = [a.name for a in self.experiment.arms]
        if len(set(names)) != len(names):
            raise ConfigurationError("experiment arm names must be unique")
        if self.sweep.rounds < 1 or not self.sweep.alphas:
            raise ConfigurationError("sweep needs rounds >= 1 and at least one alpha")

    @property
    def dynamic_deadline(self) -> bool:
        if self.deadline.dynamic is None:
            return self.selection.selector is Selector.FLAMMABLE
        return self.deadline.dynamic

    def to_dict(self) -> Dict[str, Any]:
        return json.loads(json.dumps(asdict(self), default=_enum_value))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SimulationConfig":
        validate_config_dict(data)
        data = copy.deepcopy(data)
        kwargs: Dict[str, Any] = {}
        for f in fields(cls):
            if f.name not in data:
                continue
            value = data[f.name]
            if f.name == "models":
                value = [ModelConfig(**m) for m in value]
            elif f.name == "experiment":
                value = dict(value)
                if "arms" in value:
                    value["arms"] = [ArmConfig(**a) for a in value["arms"]]
                value = ExperimentConfig(**value)
            elif f.name in _SECTIONS:
                value = _SECTIONS[f.name](**value)
            kwargs[f.name] = value
        return cls(**kwargs)

    def replace(self, **overrides) -> "SimulationConfig":
        """Copy with dotted-key overrides, e.g. ``replace(**{"selection.alpha": 0.1})``."""
        data = self.to_dict()
        for key, value in overrides.items():
            node = data
            *parents, leaf = key.split(".")
            for p in parents:
                node = node[p]
            node[leaf] = value.value if isinstance(value, Enum) else value
        return SimulationConfig.from_dict(data)


def _enum_value(obj):
    if isinstance(obj, Enum):
        return obj.value
    raise TypeError(f"not JSON serializable: {obj!r}")


_SECTIONS = {
    "clients": ClientsConfig,
    "selection": SelectionConfig,
    "batch": BatchConfig,
    "deadline": DeadlineConfig,
    "learning": LearningConfig,
    "sweep": SweepConfig,
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int = {"type": "integer"}
_posint = {"type": "integer", "minimum": 1}
_bool = {"type": "boolean"}
_path = {"type": ["string", "null"]}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


CONFIG_SCHEMA: Dict[str, Any] = _obj({
    "seed": {"type": "integer", "minimum": 0},
    "rounds": {"type": "integer", "minimum": 0},
    "continue_after_target": _bool,
    "profiles": _path,
    "clients": _obj({
        "count": _posint,
        "availability_rate": {"type": "number", "minimum": 0, "maximum": 1},
        "device_mix": _obj({"gpu": {"type": "number", "minimum": 0},
                            "cpu": {"type": "number", "minimum": 0},
                            "mobile": {"type": "number", "minimum": 0}}),
        "samples_per_model": _posint,
        "dirichlet_alpha": _pos,
        "heterogeneity_sigma": {"type": "number", "minimum": 0},
        "speed_sigma": {"type": "number", "minimum": 0},
        "roster": _path,
    }),
    "selection": _obj({
        "selector": {"enum": [s.value for s in Selector]},
        "alpha": {"type": "number", "minimum": 0},
        "per_model_clients": _posint,
        "multi_model": _bool,
    }),
    "batch": _obj({
        "adaptation": _bool,
        "m0": _posint, "k0": _posint, "m_min": _posint, "m_max": _posint,
        "iteration_rule": {"enum": [r.value for r in IterationRule]},
    }),
    "deadline": _obj({
        "p_init": {"type": "number", "minimum": 0, "maximum": 100},
        "p_min": {"type": "number", "exclusiveMinimum": 0, "maximum": 100},
        "epsilon": _pos,
        "window": _posint,
        "direction": {"enum": [d.value for d in Direction]},
        "dynamic": {"type": ["boolean", "null"]},
    }),
    "learning": _obj({
        "beta": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "loss_dispersion": {"type": "number", "minimum": 0},
        "novelty_rounds": {"type": "number", "minimum": 0},
    }),
    "models": {"type": "array", "minItems": 1, "items": _obj({
        "model_id": {"type": "string", "minLength": 1},
        "target_accuracy": {"type": "number", "minimum": 0, "maximum": 1},
        "a_max": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "rate": _pos,
        "loss0": _pos,
        "phi0": _pos,
        "gns_growth": {"type": "number", "minimum": 1},
        "gns_ramp_rounds": _posint,
    }, required=("model_id", "target_accuracy", "a_max", "rate"))},
    "experiment": _obj({
        "seeds": {"type": "array", "minItems": 1,
                  "items": {"type": "integer", "minimum": 0}},
        "arms": {"type": "array", "minItems": 1, "items": _obj({
            "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
            "selector": {"enum": [s.value for s in Selector]},
            "batch_adaptation": _bool,
            "multi_model": _bool,
            "dynamic_deadline": {"type": ["boolean", "null"]},
        }, required=("name",))},
    }),
    "sweep": _obj({
        "alphas": {"type": "array", "minItems": 1,
                   "items": {"type": "number", "minimum": 0}},
        "rounds": _posint,
    }),
})


def validate_config_dict(data: Any) -> None:
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for err in errors:
            where = ".".join(str(p) for p in err.absolute_path) or "<root>"
            lines.append(f"{where}: {err.message}")
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(lines))


def load_config(path) -> SimulationConfig:
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return SimulationConfig.from_dict(data)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
