"""Experiment configuration: defaults, validation and (de)serialization."""

import copy
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

import yaml

from ..collab.matrix import Mode
from ..collab.sampling import DEFAULT_SWITCH_FRACTION, SamplingKind, SamplingStrategy
from ..errors import ConfigError
from ..utils.paths import atomic_write_text, expand_path

logger = logging.getLogger(__name__)


class Algorithm(str, Enum):
    LOCAL = "local"
    FEDAVG = "fedavg"
    FINETUNE_FEDAVG = "finetune_fedavg"
    DITTO = "ditto"
    IFCA = "ifca"
    ORACLE = "oracle"
    COBO = "cobo"


class TaskKind(str, Enum):
    CLUSTERED_QUADRATICS = "clustered_quadratics"
    LABEL_PERMUTED = "label_permuted"


@dataclass(frozen=True)
class TaskConfig:
    """Synthetic task instance.

    ``a_range``, ``separation`` and ``sigma`` apply to quadratics;
    ``n_classes``, ``n_per_client``, ``class_sep`` and ``n_holdout`` to
    classification; ``n_holdout`` None means n_per_client // 5.
    """

    kind: TaskKind = TaskKind.CLUSTERED_QUADRATICS
    K: int = 4
    c: int = 2
    d: int = 20
    a_range: Tuple[float, float] = (0.9, 1.1)
    separation: float = 10.0
    sigma: float = 0.1
    n_classes: int = 10
    n_per_client: int = 500
    class_sep: float = 0.75
    n_holdout: Optional[int] = None

    @property
    def n_clients(self) -> int:
        return self.K * self.c


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by every algorithm.

    Attributes:
        eta: Model step size
        gamma: Weight step size (replaced by the calibrated value when auto_gamma is set)
        auto_gamma: Calibrate gamma from a full alignment pass at round 0
        rho: Penalty strength of the collaborative term
        T: Number of rounds
        b: Mini-batch size
        strategy: Pair-sampling strategy of the selection pass
        mode: Box or Simplex weights
        ditto_lambda: Ditto's pull towards the global model
        ifca_k: Number of IFCA cluster models; None means the true cluster count
        seed: Root seed of every random stream
        snapshot_every: W snapshot cadence; None means max(1, T // 20)
        finetune_split: Share of rounds fine-tuned FedAvg spends averaging
        init_scale: Std of the common Gaussian initial model (0 gives the zero vector)
        ifca_init_scale: Std of the IFCA center initialisation around the initial model
        tail_fraction: Share of final rounds averaged into the final loss
    """

    eta: float = 0.05
    gamma: float = 1e-3
    auto_gamma: bool = False
    rho: float = 2.0
    T: int = 2000
    b: int = 1
    strategy: SamplingStrategy = field(default_factory=SamplingStrategy)
    mode: Mode = Mode.BOX
    ditto_lambda: float = 1.0
    ifca_k: Optional[int] = None
    seed: int = 0
    snapshot_every: Optional[int] = None
    finetune_split: float = 0.5
    init_scale: float = 0.0
    ifca_init_scale: float = 1.0
    tail_fraction: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.T < 0:
            raise ConfigError(f"T must be >= 0, got {self.T}", key="train.T")
        if self.b < 1:
            raise ConfigError(f"b must be >= 1, got {self.b}", key="train.b")

    def snapshot_interval(self) -> int:
        if self.snapshot_every is not None:
            return self.snapshot_every
        return max(1, self.T // 20)

    def finetune_rounds(self) -> int:
        """Rounds fine-tuned FedAvg spends on averaging before local steps."""
        return int(self.finetune_split * self.T)


@dataclass(frozen=True)
class ExperimentConfig:
    task: TaskConfig = field(default_factory=TaskConfig)
    algorithms: Tuple[Algorithm, ...] = (Algorithm.COBO,)
    train: TrainConfig = field(default_factory=TrainConfig)
    output_dir: str = "results"
    emit_snapshots: bool = True


Validator = Callable[[str, Any], Any]


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _real(low: Optional[float] = None, high: Optional[float] = None,
          low_open: bool = False, high_open: bool = False) -> Validator:
    def check(key: str, value: Any) -> float:
        if not _is_number(value):
            raise ConfigError(f"expected a number, got {value!r}", key=key)
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"must be finite, got {value}", key=key)
        if low is not None and (value <= low if low_open else value < low):
            raise ConfigError(f"must be {'>' if low_open else '>='} {low}, got {value}", key=key)
        if high is not None and (value >= high if high_open else value > high):
            raise ConfigError(f"must be {'<' if high_open else '<='} {high}, got {value}", key=key)
        return value
    return check


def _integer(low: int) -> Validator:
    def check(key: str, value: Any) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            else:
                raise ConfigError(f"expected an integer, got {value!r}", key=key)
        if value < low:
            raise ConfigError(f"must be >= {low}, got {value}", key=key)
        return value
    return check


def _optional(inner: Validator) -> Validator:
    def check(key: str, value: Any) -> Any:
        return None if value is None else inner(key, value)
    return check


def _boolean(key: str, value: Any) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"expected true or false, got {value!r}", key=key)
    return value


def _choice(enum_cls) -> Validator:
    def check(key: str, value: Any):
        try:
            return enum_cls(value)
        except ValueError:
            allowed = ", ".join(member.value for member in enum_cls)
            raise ConfigError(f"unknown value {value!r}; expected one of: {allowed}", key=key) from None
    return check


def _a_range(key: str, value: Any) -> Tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"expected [low, high], got {value!r}", key=key)
    low = _real(0.0, low_open=True)(key, value[0])
    high = _real(0.0, low_open=True)(key, value[1])
    if low > high:
        raise ConfigError(f"low must not exceed high, got {value!r}", key=key)
    return (low, high)


def _string(key: str, value: Any) -> str:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"expected a non-empty string, got {value!r}", key=key)
    return value


TASK_FIELDS: Dict[str, Validator] = {
    "kind": _choice(TaskKind),
    "K": _integer(1),
    "c": _integer(1),
    "d": _integer(1),
    "a_range": _a_range,
    "separation": _real(0.0, low_open=True),
    "sigma": _real(0.0),
    "n_classes": _integer(2),
    "n_per_client": _integer(1),
    "class_sep": _real(0.0, low_open=True),
    "n_holdout": _optional(_integer(1)),
}

TRAIN_FIELDS: Dict[str, Validator] = {
    "eta": _real(0.0, low_open=True),
    "gamma": _real(0.0, low_open=True),
    "auto_gamma": _boolean,
    "rho": _real(0.0),
    "T": _integer(1),
    "b": _integer(1),
    "mode": _choice(Mode),
    "ditto_lambda": _real(0.0),
    "ifca_k": _optional(_integer(1)),
    "seed": _integer(0),
    "snapshot_every": _optional(_integer(1)),
    "finetune_split": _real(0.0, 1.0),
    "init_scale": _real(0.0),
    "ifca_init_scale": _real(0.0),
    "tail_fraction": _real(0.0, 1.0, low_open=True),
}

STRATEGY_FIELDS: Dict[str, Validator] = {
    "kind": _choice(SamplingKind),
    "p": _optional(_real(0.0, 1.0)),
    "c0": _optional(_real(0.0, low_open=True)),
    "switch_fraction": _real(0.0, 1.0, low_open=True, high_open=True),
}


class ConfigManager:
    """Merges experiment files over the defaults and builds typed configs."""

    DEFAULT_CONFIG: Dict[str, Any] = {
        "task": {
            "kind": TaskKind.CLUSTERED_QUADRATICS.value,
            "K": 4,
            "c": 2,
            "d": 20,
            "a_range": [0.9, 1.1],
            "separation": 10.0,
            "sigma": 0.1,
            "n_classes": 10,
            "n_per_client": 500,
            "class_sep": 0.75,
            "n_holdout": None,
        },
        "algorithms": [Algorithm.COBO.value],
        "train": {
            "eta": 0.05,
            "gamma": 1e-3,
            "auto_gamma": False,
            "rho": 2.0,
            "T": 2000,
            "b": 1,
            "strategy": {
                "kind": SamplingKind.EVERY_PAIR.value,
                "p": None,
                "c0": None,
                "switch_fraction": DEFAULT_SWITCH_FRACTION,
            },
            "mode": Mode.BOX.value,
            "ditto_lambda": 1.0,
            "ifca_k": None,
            "seed": 0,
            "snapshot_every": None,  # None means max(1, T // 20)
            "finetune_split": 0.5,
            "init_scale": 0.0,
            "ifca_init_scale": 1.0,
            "tail_fraction": 0.1,
        },
        "output_dir": "results",
        "emit_snapshots": True,
    }

    def merge(self, raw: Optional[Dict[str, Any]]) -> Dict[str, Any]:
        """Overlay ``raw`` on the defaults section by section, rejecting unknown keys."""
        raw = raw or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"top level must be a mapping, got {type(raw).__name__}")
        merged = copy.deepcopy(self.DEFAULT_CONFIG)
        self._reject_unknown(raw, merged, "")

        for section in ("task", "train"):
            overrides = raw.get(section) or {}
            if not isinstance(overrides, dict):
                raise ConfigError("expected a mapping", key=section)
            self._reject_unknown(overrides, merged[section], f"{section}.")
            for key, value in overrides.items():
                if section == "train" and key == "strategy":
                    merged["train"]["strategy"].update(self._strategy_overrides(value))
                else:
                    merged[section][key] = value

        for key in ("algorithms", "output_dir", "emit_snapshots"):
            if key in raw:
                merged[key] = raw[key]
        return merged

    def _strategy_overrides(self, value: Any) -> Dict[str, Any]:
        if isinstance(value, str):
            return {"kind": value}
        if not isinstance(value, dict):
            raise ConfigError(f"expected a strategy name or mapping, got {value!r}", key="train.strategy")
        self._reject_unknown(value, STRATEGY_FIELDS, "train.strategy.")
        return value

    @staticmethod
    def _reject_unknown(given: Dict[str, Any], known: Dict[str, Any], prefix: str):
        unknown = sorted(set(given) - set(known))
        if unknown:
            raise ConfigError(f"unknown key(s): {', '.join(prefix + k for k in unknown)}", key=prefix + unknown[0])

    def build(self, raw: Optional[Dict[str, Any]]) -> ExperimentConfig:
        """Validate a raw mapping and build the typed configuration.

        Raises:
            ConfigError: Naming the dotted key of the first invalid field
        """
        merged = self.merge(raw)

        task_values = {k: TASK_FIELDS[k](f"task.{k}", v) for k, v in merged["task"].items()}
        task = TaskConfig(**task_values)

        train_raw = dict(merged["train"])
        strategy_raw = train_raw.pop("strategy")
        strategy = SamplingStrategy(
            **{k: STRATEGY_FIELDS[k](f"train.strategy.{k}", v) for k, v in strategy_raw.items()}
        )
        train_values = {k: TRAIN_FIELDS[k](f"train.{k}", v) for k, v in train_raw.items()}
        train = TrainConfig(strategy=strategy, **train_values)

        algorithms = merged["algorithms"]
        if isinstance(algorithms, str):
            algorithms = [algorithms]
        if not isinstance(algorithms, list) or not algorithms:
            raise ConfigError("expected a non-empty list of algorithm names", key="algorithms")
        parsed = tuple(_choice(Algorithm)("algorithms", name) for name in algorithms)

        cfg = ExperimentConfig(
            task=task,
            algorithms=tuple(dict.fromkeys(parsed)),
            train=train,
            output_dir=_string("output_dir", merged["output_dir"]),
            emit_snapshots=_boolean("emit_snapshots", merged["emit_snapshots"]),
        )
        check_feasible(cfg)
        return cfg

    def load(self, path: Union[str, Path]) -> ExperimentConfig:
        cfg = self.build(read_config_file(path))
        logger.debug("Loaded config from %s", path)
        return cfg


def check_feasible(cfg: ExperimentConfig):
    """Cross-field checks that individual validators cannot see."""
    task = cfg.task
    if task.kind is TaskKind.CLUSTERED_QUADRATICS and task.d < task.K:
        raise ConfigError(
            f"cannot separate {task.K} clusters along distinct axes in dimension {task.d} (need d >= K)",
            key="task.d",
        )
    if task.kind is TaskKind.LABEL_PERMUTED and task.K > task.n_classes:
        raise ConfigError(
            f"{task.K} clusters need at least {task.K} classes for distinct label permutations",
            key="task.K",
        )


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse a JSON or YAML experiment file into a raw mapping."""
    path = expand_path(str(path))
    if path is None or not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"could not parse {path}: {e}") from e
    return data or {}


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Load, merge over the defaults and validate an experiment file."""
    return ConfigManager().load(path)


def config_to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
    """Plain-data form of a config; ``ConfigManager().build`` inverts it."""
    task, train, strategy = cfg.task, cfg.train, cfg.train.strategy
    return {
        "task": {
            "kind": task.kind.value,
            "K": task.K,
            "c": task.c,
            "d": task.d,
            "a_range": list(task.a_range),
            "separation": task.separation,
            "sigma": task.sigma,
            "n_classes": task.n_classes,
            "n_per_client": task.n_per_client,
            "class_sep": task.class_sep,
            "n_holdout": task.n_holdout,
        },
        "algorithms": [a.value for a in cfg.algorithms],
        "train": {
            "eta": train.eta,
            "gamma": train.gamma,
            "auto_gamma": train.auto_gamma,
            "rho": train.rho,
            "T": train.T,
            "b": train.b,
            "strategy": {
                "kind": strategy.kind.value,
                "p": strategy.p,
                "c0": strategy.c0,
                "switch_fraction": strategy.switch_fraction,
            },
            "mode": train.mode.value,
            "ditto_lambda": train.ditto_lambda,
            "ifca_k": train.ifca_k,
            "seed": train.seed,
            "snapshot_every": train.snapshot_every,
            "finetune_split": train.finetune_split,
            "init_scale": train.init_scale,
            "ifca_init_scale": train.ifca_init_scale,
            "tail_fraction": train.tail_fraction,
        },
        "output_dir": cfg.output_dir,
        "emit_snapshots": cfg.emit_snapshots,
    }


def dump_config(cfg: ExperimentConfig, suffix: str = ".json") -> str:
    data = config_to_dict(cfg)
    if suffix.lower() in (".yaml", ".yml"):
        return yaml.safe_dump(data, default_flow_style=False, sort_keys=False)
    return json.dumps(data, indent=2) + "\n"


def save_config(cfg: ExperimentConfig, path: Union[str, Path]):
    """Write ``cfg`` as YAML for .yaml/.yml paths and JSON otherwise."""
    path = Path(path)
    atomic_write_text(path, dump_config(cfg, path.suffix))
