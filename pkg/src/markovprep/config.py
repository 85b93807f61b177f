"""Run configuration: a YAML document validated against a strict schema.

Example::

    system:   {kind: qubits, n: 2}
    process:  {constructor: graph, params: {graph_file: path2.graph}, rates: 1.0}
    task:     {kind: verify, seed: 7}
    output:   {dir: out, stem: path2}

Unknown keys anywhere are rejected with their dotted path.
"""
from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .constructors import GraphSpec, parse_graph


class ConfigError(ValueError):
    """Syntax or schema error in a run configuration."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


SystemKind = Literal["qubits", "qudits", "spin1-chain", "bose-lattice", "fermi-lattice"]

CONSTRUCTORS: dict[str, tuple[str, ...]] = {
    "qubits": ("sigma-minus", "conjugated-sigma-minus", "graph", "global-ladder"),
    "qudits": ("qudit-ladder",),
    "spin1-chain": ("aklt-ladder", "aklt-twirl"),
    "bose-lattice": ("bec",),
    "fermi-lattice": ("eta",),
}


class SystemConfig(_Strict):
    kind: SystemKind
    n: Optional[int] = Field(None, ge=1)
    d: Optional[int] = Field(None, ge=2)
    M: Optional[int] = Field(None, ge=2)
    N: Optional[int] = Field(None, ge=1)
    boundary: Literal["periodic", "open"] = "periodic"

    @model_validator(mode="after")
    def _sizes(self):
        need = {"qubits": ("n",), "qudits": ("n", "d"), "spin1-chain": ("n",),
                "bose-lattice": ("M", "N"), "fermi-lattice": ("M", "N")}[self.kind]
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise ValueError(f"system kind {self.kind!r} needs {', '.join(missing)}")
        if self.kind == "spin1-chain" and self.n < 2:
            raise ValueError("a spin-1 chain needs n >= 2")
        if self.kind == "fermi-lattice":
            if self.M % 2:
                raise ValueError("fermi-lattice needs an even number of sites M")
            if self.N > self.M:
                raise ValueError("fermi-lattice needs N <= M pairs")
        return self


class ProcessParams(_Strict):
    graph_file: Optional[str] = None
    edges: Optional[list[tuple[int, int]]] = None
    unitary: Literal["hadamard", "random"] = "random"
    unitary_seed: int = 0
    basis: Literal["computational", "graph"] = "computational"
    n_twirl: int = Field(9, ge=1, le=81)
    J: float = 1.0
    U: float = 0.0


class ProcessConfig(_Strict):
    constructor: str
    params: ProcessParams = ProcessParams()
    rates: Union[float, list[float]] = 1.0

    @model_validator(mode="after")
    def _rates(self):
        rates = self.rates if isinstance(self.rates, list) else [self.rates]
        if any(g < 0 for g in rates):
            raise ValueError("rates must be nonnegative")
        return self


class TaskConfig(_Strict):
    kind: Literal["spectrum", "evolve", "verify", "gap-scan"]
    t_max: float = Field(10.0, gt=0)
    n_steps: int = Field(100, ge=1)
    initial: Literal["maximally-mixed", "excited", "random"] = "maximally-mixed"
    sizes: list[int] = []
    seed: int = 0
    tol: float = Field(1e-8, gt=0)
    mode: Literal["auto", "full", "gap"] = "auto"
    trials: int = Field(20, ge=1)


class OutputConfig(_Strict):
    dir: str = "out"
    stem: str = "run"

    @model_validator(mode="after")
    def _stem(self):
        if not self.stem or "/" in self.stem or "\\" in self.stem or self.stem in (".", ".."):
            raise ValueError("stem must be a plain file-name prefix")
        return self


class RunConfig(_Strict):
    system: SystemConfig
    process: ProcessConfig
    task: TaskConfig
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def _consistent(self):
        kind = self.system.kind
        allowed = CONSTRUCTORS[kind]
        if self.process.constructor not in allowed:
            raise ValueError(f"constructor {self.process.constructor!r} is not valid for "
                             f"system kind {kind!r} (choose from {', '.join(allowed)})")
        return self

    def graph(self) -> GraphSpec:
        edges = self.process.params.edges
        n = self.system.n
        if edges is None:
            return GraphSpec.path(n)
        return GraphSpec(n, edges)


def expected_jump_count(cfg: RunConfig) -> int:
    s, p = cfg.system, cfg.process
    c = p.constructor
    if c == "global-ladder":
        return 1
    if c in ("sigma-minus", "conjugated-sigma-minus", "graph", "qudit-ladder"):
        return s.n
    if c.startswith("aklt"):
        bonds = s.n - 1 + (1 if s.boundary == "periodic" and s.n > 2 else 0)
        return bonds * (p.params.n_twirl if c == "aklt-twirl" else 1)
    bonds = s.M - 1 + (1 if s.boundary == "periodic" else 0)
    return bonds * (2 if c == "bec" else 4)


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "schema violation: " + "; ".join(lines)


def parse_config(document: str, base_dir: str | Path | None = None) -> RunConfig:
    """Parse and fully validate a YAML run configuration.

    ``graph_file`` paths are resolved against ``base_dir`` and their edges
    are loaded into ``process.params.edges``.
    """
    try:
        raw = yaml.safe_load(document)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"syntax error{where}: {exc.problem}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"syntax error: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("schema violation: <root>: expected a mapping")
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from exc

    params = cfg.process.params
    if params.graph_file is not None:
        if cfg.process.constructor not in ("graph", "global-ladder"):
            raise ConfigError("schema violation: process.params.graph_file: only graph-based "
                              "constructors take a graph")
        path = Path(params.graph_file)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        try:
            with open(path) as fh:
                g = parse_graph(fh)
        except OSError as exc:
            raise ConfigError(f"process.params.graph_file: cannot read {path}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"process.params.graph_file: {exc}") from exc
        if g.n_vertices != cfg.system.n:
            raise ConfigError(f"process.params.graph_file: graph has {g.n_vertices} vertices "
                              f"but system.n = {cfg.system.n}")
        edges = sorted(g.edges)
        if params.edges is not None and sorted(GraphSpec(g.n_vertices, params.edges).edges) != edges:
            raise ConfigError("process.params.edges: disagrees with graph_file")
        params.edges = [tuple(e) for e in edges]
    if params.edges is not None:
        try:
            cfg.graph()
        except ValueError as exc:
            raise ConfigError(f"schema violation: process.params.edges: {exc}") from exc

    if isinstance(cfg.process.rates, list):
        want = expected_jump_count(cfg)
        if len(cfg.process.rates) != want:
            raise ConfigError(f"schema violation: process.rates: expected {want} rates "
                              f"(one per jump), got {len(cfg.process.rates)}")
    if cfg.task.kind == "gap-scan":
        if not cfg.task.sizes:
            raise ConfigError("schema violation: task.sizes: gap-scan needs a size list")
        if cfg.process.constructor not in ("sigma-minus", "graph", "qudit-ladder"):
            raise ConfigError("schema violation: process.constructor: gap-scan supports "
                              "sigma-minus, graph (linear cluster) and qudit-ladder")
        if isinstance(cfg.process.rates, list):
            raise ConfigError("schema violation: process.rates: gap-scan needs a uniform rate")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)


def serialize_config(cfg: RunConfig) -> str:
    data = cfg.model_dump(mode="json", exclude_none=True)
    return yaml.safe_dump(data, sort_keys=False)
