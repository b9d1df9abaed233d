from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from app.cli.expr import Pos, compile_expr, parse_expr
from app.contour.nodes import ContourSpec
from app.errors import ConfigError, FracError, SourceError
from app.problem.models import CutoffProfile, ProblemSpec
from app.problem.presets import Preset, from_name
from app.settings import Settings

logger = logging.getLogger(__name__)

SECTIONS = ("problem", "contour", "checks", "output")
FORMATS = ("csv", "report", "summary")
DATA_KEYS = ("a", "b", "c", "f", "gL", "gR", "u0", "u1")


@dataclass(frozen=True)
class ConfigValue:
    text: str
    line: int
    col: int


@dataclass
class ConfigSection:
    name: str
    line: int
    values: dict[str, ConfigValue] = field(default_factory=dict)


def read_ini(text: str) -> dict[str, ConfigSection]:
    """Flat ``[section]`` / ``key = value`` reader that keeps line and column of every value."""
    sections: dict[str, ConfigSection] = {}
    current: Optional[ConfigSection] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped[0] in "#;":
            continue
        indent = len(raw) - len(raw.lstrip())
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("section header must end with ']'", line=lineno, col=indent + len(stripped))
            name = stripped[1:-1].strip().lower()
            if name not in SECTIONS:
                raise ConfigError(f"unknown section [{name}]; expected one of {', '.join(SECTIONS)}", line=lineno, col=indent + 2)
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", line=lineno, col=indent + 2)
            current = sections[name] = ConfigSection(name=name, line=lineno)
            continue
        if current is None:
            raise ConfigError("key outside of any section", line=lineno, col=indent + 1)
        if "=" not in raw:
            raise ConfigError("expected 'key = value'", line=lineno, col=indent + 1)
        key_part, value_part = raw.split("=", 1)
        key = key_part.strip()
        if not key:
            raise ConfigError("missing key before '='", line=lineno, col=indent + 1)
        if key in current.values:
            raise ConfigError(f"duplicate key {key!r} in [{current.name}]", line=lineno, col=indent + 1)
        comment = value_part.find("#")
        if comment >= 0:
            value_part = value_part[:comment]
        value = value_part.strip()
        if not value:
            raise ConfigError(f"empty value for {key!r}", line=lineno, col=len(key_part) + 2)
        col = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        current.values[key] = ConfigValue(text=value, line=lineno, col=col)
    return sections


class ProblemBlock(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    preset: Optional[str] = None
    label: Optional[str] = None
    alpha: float
    theta: float
    T: float = 1.0
    n: int
    M: int
    grading: float = 1.0
    delta1: Optional[float] = None
    delta2: Optional[float] = None
    a: str = "1"
    b: str = "0"
    c: str = "0"
    f: str = "0"
    gL: str = "0"
    gR: str = "0"
    u0: str = "0"
    u1: Optional[str] = None


class ContourBlock(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    phi: Optional[float] = None
    radius: Optional[float] = None
    nodes_per_ray: Optional[int] = None
    arc_nodes: Optional[int] = None
    truncation: Optional[float] = None


class ChecksBlock(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    bounded: bool = True
    holder: bool = False
    necessity_probe: bool = False
    violation: str = "1"


class OutputBlock(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    directory: str = "out"
    formats: tuple[str, ...] = FORMATS

    @field_validator("formats", mode="before")
    @classmethod
    def _split_formats(cls, value):
        if isinstance(value, str):
            value = [part.strip().lower() for part in value.split(",") if part.strip()]
        unknown = [v for v in value if v not in FORMATS]
        if unknown:
            raise ValueError(f"unknown format(s) {unknown}; choose from {FORMATS}")
        return tuple(value)


_BLOCKS = {"problem": ProblemBlock, "contour": ContourBlock, "checks": ChecksBlock, "output": OutputBlock}


def _validate_block(section: ConfigSection, model: type[BaseModel]) -> BaseModel:
    raw = {key: value.text for key, value in section.values.items()}
    try:
        return model(**raw)
    except ValidationError as exc:
        err = exc.errors()[0]
        key = str(err["loc"][0]) if err["loc"] else ""
        where = section.values.get(key)
        line, col = (where.line, where.col) if where else (section.line, 1)
        raise ConfigError(f"[{section.name}] {key}: {err['msg']}", line=line, col=col) from None


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemBlock
    contour: ContourBlock
    checks: ChecksBlock
    output: OutputBlock
    sections: dict[str, ConfigSection]
    path: Optional[Path] = None

    def _expr(self, key: str, variables: tuple[str, ...]):
        where = self.sections["problem"].values.get(key)
        text = getattr(self.problem, key)
        origin = Pos(where.line, where.col) if where else Pos(1, 1)
        return compile_expr(parse_expr(text, variables=variables, origin=origin), variables)

    def _contour_spec(self) -> Optional[ContourSpec]:
        if self.contour.phi is None:
            return None
        values = {k: v for k, v in self.contour.model_dump().items() if v is not None}
        return ContourSpec(**values)

    def refined(self, times: int) -> "RunConfig":
        """Halve h and T/M ``times`` times: n -> 2n + 1, M -> 2M."""
        n, M = self.problem.n, self.problem.M
        for _ in range(times):
            n, M = 2 * n + 1, 2 * M
        return replace(self, problem=self.problem.model_copy(update={"n": n, "M": M}))

    def settings(self, base: Settings) -> Settings:
        """Settings with the contour block's node counts and radius applied."""
        c = self.contour
        update = {
            "contour_radius": c.radius,
            "nodes_per_ray": c.nodes_per_ray,
            "arc_nodes": c.arc_nodes,
            "contour_truncation": c.truncation,
        }
        return base.model_copy(update={k: v for k, v in update.items() if v is not None})

    def _fail_at(self, key: str, message: str) -> ConfigError:
        section = self.sections["problem"]
        where = section.values.get(key)
        line, col = (where.line, where.col) if where else (section.line, 1)
        return ConfigError(message, line=line, col=col)

    def preset(self) -> Optional[Preset]:
        p = self.problem
        if p.preset is None:
            return None
        clashes = [k for k in DATA_KEYS if k in self.sections["problem"].values]
        if clashes:
            raise self._fail_at(clashes[0], f"{clashes[0]!r} cannot be combined with preset {p.preset!r}")
        try:
            return from_name(p.preset, alpha=p.alpha, theta=p.theta, n=p.n, M=p.M, T=p.T)
        except FracError as exc:
            raise self._fail_at("preset", str(exc)) from None

    def problem_spec(self, settings: Optional[Settings] = None) -> ProblemSpec:
        """ProblemSpec from the preset or the data expressions; unset cutoff widths come from settings."""
        p = self.problem
        try:
            base = CutoffProfile.from_settings(settings)
            cutoff = CutoffProfile(
                delta1=base.delta1 if p.delta1 is None else p.delta1,
                delta2=base.delta2 if p.delta2 is None else p.delta2,
            )
            preset = self.preset()
            if preset is not None:
                return preset.spec.with_data(
                    grading=p.grading, cutoff=cutoff, contour=self._contour_spec(), label=p.label or p.preset
                )
            return ProblemSpec(
                alpha=p.alpha,
                theta=p.theta,
                T=p.T,
                n=p.n,
                M=p.M,
                f=self._expr("f", ("t", "x")),
                gL=self._expr("gL", ("t",)),
                gR=self._expr("gR", ("t",)),
                u0=self._expr("u0", ("x",)),
                u1=self._expr("u1", ("x",)) if p.u1 is not None else None,
                coefficients=(self._expr("a", ("x",)), self._expr("b", ("x",)), self._expr("c", ("x",))),
                grading=p.grading,
                contour=self._contour_spec(),
                cutoff=cutoff,
                label=p.label or (self.path.stem if self.path else "problem"),
            )
        except SourceError:
            raise
        except FracError as exc:
            section = self.sections["problem"]
            raise ConfigError(f"[problem] {exc}", line=section.line, col=1) from None

    def violation(self):
        where = self.sections.get("checks")
        value = where.values.get("violation") if where else None
        origin = Pos(value.line, value.col) if value else Pos(1, 1)
        return compile_expr(parse_expr(self.checks.violation, variables=("t", "x"), origin=origin), ("t", "x"))


def parse_config(text: str, *, path: Optional[Path] = None) -> RunConfig:
    sections = read_ini(text)
    if "problem" not in sections:
        raise ConfigError("missing [problem] section", line=1, col=1)
    blocks = {}
    for name, model in _BLOCKS.items():
        section = sections.get(name) or ConfigSection(name=name, line=1)
        sections[name] = section
        blocks[name] = _validate_block(section, model)
    config = RunConfig(sections=sections, path=path, **blocks)
    logger.info("config path=%s sections=%s preset=%s", path, sorted(k for k in sections), config.problem.preset)
    return config


def load_config(path: Union[str, Path]) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror or exc}", line=1, col=1) from None
    return parse_config(text, path=p)
