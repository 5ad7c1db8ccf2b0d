"""
Experiment configuration files.

A configuration is a JSON object; every field is optional except n_list:

    {
        "activation": "tanh",
        "measure": "jacobi:0.5,0.5,0.5,0.5",
        "norm_measure": "jacobi:0.5,0.5,0.5,0.5",
        "function": "f2",
        "d": 2,
        "n_list": [10, 20, 40],
        "p_list": [1, 2],
        "operator": "measure",
        "quadrature": {"panels": 64, "nodes": 8, "breakpoints": []},
        "resolution": 201,
        "tail_cutoff": 200,
        "threads": 1,
        "dump_grids": false,
        "output": "results/table6.csv"
    }

norm_measure defaults to measure. quadrature.panels defaults to 64 per axis
(16 when d = 3). operator is "measure" for S_n or
"classical" for F_n.
"""

import dataclasses
import json
import logging
import typing

from .activation import ActivationSpec, resolve_activation
from .errors import ArtifactIOError, ConfigError
from .functions import TargetFunction, resolve_function
from .kernel import DEFAULT_TAIL_CUTOFF, KernelHandle, build_kernel
from .measure import DEFAULT_PLAN, MASS_PLAN_3D_PANELS, MeasureSpec, QuadraturePlan, resolve_measure
from .utils.json_patterns import as_float, as_int, force_as_list, force_as_singleton

logger = logging.getLogger("config")

OPERATORS = ("measure", "classical")
KNOWN_FIELDS = {
    "activation", "measure", "norm_measure", "function", "d", "n_list", "p_list",
    "operator", "quadrature", "resolution", "tail_cutoff", "threads", "dump_grids",
    "output", "label",
}


def default_panels(d: int) -> int:
    """panels per axis when the file gives none; 3-d rules use fewer so the
    default tensor grid stays inside the quadrature node budget"""
    return MASS_PLAN_3D_PANELS if d == 3 else DEFAULT_PLAN.panels_per_axis


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    n_list: tuple[int, ...]
    activation: str = "logistic"
    measure: str = "lebesgue"
    norm_measure: str | None = None
    function: str = "f1"
    d: int = 2
    p_list: tuple[float, ...] = (1.0,)
    operator: str = "measure"
    panels: int | None = None
    nodes: int = 8
    breakpoints: tuple[float, ...] = ()
    resolution: int = 201
    tail_cutoff: int = DEFAULT_TAIL_CUTOFF
    threads: int = 1
    dump_grids: bool = False
    output: str | None = None
    label: str | None = None

    def __post_init__(self):
        if not self.n_list:
            raise ConfigError("n_list must not be empty", field="n_list")
        if any(n < 1 for n in self.n_list):
            raise ConfigError("n values must be positive, got %r" % (list(self.n_list),), field="n_list")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ConfigError("n_list must be strictly ascending, got %r" % (list(self.n_list),), field="n_list")
        if not self.p_list or any(not p >= 1.0 for p in self.p_list):
            raise ConfigError("every p must be at least 1, got %r" % (list(self.p_list),), field="p_list")
        if not 1 <= self.d <= 3:
            raise ConfigError("d must be 1, 2 or 3, got %r" % (self.d,), field="d")
        if self.panels is None:
            object.__setattr__(self, "panels", default_panels(self.d))
        if self.operator not in OPERATORS:
            raise ConfigError("operator must be one of %s, got %r" % (", ".join(OPERATORS), self.operator),
                              field="operator")
        if self.resolution < 2:
            raise ConfigError("resolution must be at least 2, got %r" % (self.resolution,), field="resolution")
        if self.panels < 1:
            raise ConfigError("must be positive, got %r" % (self.panels,), field="quadrature.panels")
        if self.nodes < 1:
            raise ConfigError("must be positive, got %r" % (self.nodes,), field="quadrature.nodes")
        if any(not 0.0 < b < 1.0 for b in self.breakpoints):
            raise ConfigError("breakpoints must lie in (0,1), got %r" % (list(self.breakpoints),),
                              field="quadrature.breakpoints")
        if self.tail_cutoff < 1:
            raise ConfigError("must be positive, got %r" % (self.tail_cutoff,), field="tail_cutoff")
        if self.threads < 1:
            raise ConfigError("must be positive, got %r" % (self.threads,), field="threads")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object, got %s" % type(data).__name__)
        for key in data:
            if key not in KNOWN_FIELDS:
                logger.warning("Unknown configuration field: %s" % key)

        quadrature = force_as_singleton(data.get("quadrature")) or {}
        if not isinstance(quadrature, dict):
            raise ConfigError("expected an object, got %r" % (quadrature,), field="quadrature")

        kwargs: dict[str, typing.Any] = {
            "n_list": tuple(as_int(n, "n_list") for n in force_as_list(data.get("n_list"))),
        }
        for key in ("activation", "measure", "norm_measure", "function", "operator", "output", "label"):
            value = force_as_singleton(data.get(key))
            if value is None:
                continue
            if not isinstance(value, str):
                raise ConfigError("expected a string, got %r" % (value,), field=key)
            kwargs[key] = value
        for key in ("d", "resolution", "tail_cutoff", "threads"):
            if data.get(key) is not None:
                kwargs[key] = as_int(data[key], key)
        if data.get("p_list") is not None:
            kwargs["p_list"] = tuple(as_float(p, "p_list") for p in force_as_list(data["p_list"]))
        if data.get("dump_grids") is not None:
            if not isinstance(data["dump_grids"], bool):
                raise ConfigError("expected true or false, got %r" % (data["dump_grids"],), field="dump_grids")
            kwargs["dump_grids"] = data["dump_grids"]
        if quadrature.get("panels") is not None:
            kwargs["panels"] = as_int(quadrature["panels"], "quadrature.panels")
        if quadrature.get("nodes") is not None:
            kwargs["nodes"] = as_int(quadrature["nodes"], "quadrature.nodes")
        if quadrature.get("breakpoints") is not None:
            kwargs["breakpoints"] = tuple(
                sorted(as_float(b, "quadrature.breakpoints") for b in force_as_list(quadrature["breakpoints"]))
            )
        return cls(**kwargs)

    def to_dict(self) -> dict:
        data: dict[str, typing.Any] = {
            "activation": self.activation,
            "measure": self.measure,
            "function": self.function,
            "d": self.d,
            "n_list": list(self.n_list),
            "p_list": list(self.p_list),
            "operator": self.operator,
            "quadrature": {
                "panels": self.panels,
                "nodes": self.nodes,
                "breakpoints": list(self.breakpoints),
            },
            "resolution": self.resolution,
            "tail_cutoff": self.tail_cutoff,
            "threads": self.threads,
            "dump_grids": self.dump_grids,
        }
        for key in ("norm_measure", "output", "label"):
            if getattr(self, key) is not None:
                data[key] = getattr(self, key)
        return data

    def with_overrides(
        self,
        resolution: int | None = None,
        panels: int | None = None,
        nodes: int | None = None,
        output: str | None = None,
        threads: int | None = None,
    ) -> "ExperimentConfig":
        """command line flags win over file values; None keeps the file value"""
        changes = {
            key: value
            for key, value in (
                ("resolution", resolution), ("panels", panels), ("nodes", nodes),
                ("output", output), ("threads", threads),
            )
            if value is not None
        }
        return dataclasses.replace(self, **changes)

    def resolve(self) -> "ResolvedExperiment":
        """turn tags into objects; every failure is a ConfigError naming the field"""
        activation = resolve_activation(self.activation)
        function = resolve_function(self.function, self.d)
        measure = resolve_measure(self.measure, self.d)
        norm_measure = measure if self.norm_measure is None else resolve_measure(self.norm_measure, self.d)
        plan = QuadraturePlan(self.panels, self.nodes, self.breakpoints)
        if function.breakpoints:
            plan = plan.with_breakpoints(function.breakpoints)
            logger.info("registered breakpoints %r of %s" % (function.breakpoints, function.name))
        return ResolvedExperiment(
            config=self,
            activation=activation,
            kernel=build_kernel(activation, self.tail_cutoff),
            function=function,
            measure=measure,
            norm_measure=norm_measure,
            plan=plan,
        )


@dataclasses.dataclass(frozen=True, eq=False)
class ResolvedExperiment:
    config: ExperimentConfig
    activation: ActivationSpec
    kernel: KernelHandle
    function: TargetFunction
    measure: MeasureSpec
    norm_measure: MeasureSpec
    plan: QuadraturePlan


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("invalid JSON: %s (column %i)" % (exc.msg, exc.colno), line=exc.lineno)
    return ExperimentConfig.from_dict(data)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ArtifactIOError("cannot read config %s: %s" % (path, exc.strerror or exc))
    logger.debug("read config from %s" % path)
    return parse_config(text)
