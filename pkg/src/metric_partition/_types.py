"""On-disk data models: graph spec files, parts files and run reports."""

from __future__ import annotations

import math
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SPEC_FORMAT_VERSION = "1.0"


def _check_major(kind: str, version: str) -> None:
    expected_major = SPEC_FORMAT_VERSION.split(".")[0]
    actual_major = version.split(".")[0]
    if actual_major != expected_major:
        raise ValueError(
            f"Incompatible {kind} schema version '{version}' "
            f"(expected {expected_major}.x). Fix the schema_version field."
        )


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------


class EdgeSpec(_Strict):
    id: str
    from_: str = Field(alias="from")
    to: str
    length: float


class PointSpec(_Strict):
    """Either ``{vertex: v}`` or ``{edge: e, offset: t}``."""

    vertex: str | None = None
    edge: str | None = None
    offset: float = 0.0

    @model_validator(mode="after")
    def _one_location(self) -> PointSpec:
        if (self.vertex is None) == (self.edge is None):
            raise ValueError("A point needs exactly one of 'vertex' or 'edge'")
        return self


class AtomSpec(PointSpec):
    mass: float


class PieceSpec(_Strict):
    from_: float = Field(alias="from")
    to: float
    value: float


class EdgePiecesSpec(_Strict):
    edge: str
    pieces: list[PieceSpec] = Field(default_factory=list)


class MeasureSpec(_Strict):
    """Point masses plus an optional piecewise-constant density."""

    atoms: list[AtomSpec] = Field(default_factory=list)
    density_default: float | None = None
    density: list[EdgePiecesSpec] = Field(default_factory=list)


class KnotSpec(_Strict):
    edge: str
    offset: float
    value: float


class FunctionSpec(_Strict):
    """Continuous piecewise-linear function: vertex values plus interior knots."""

    vertex_values: dict[str, float]
    knots: list[KnotSpec] = Field(default_factory=list)


class WeightSpec(_Strict):
    """Piecewise-constant function: ``default`` everywhere unless a piece says otherwise."""

    default: float = 1.0
    edges: list[EdgePiecesSpec] = Field(default_factory=list)


# ---------------------------------------------------------------------------
# Graph spec file
# ---------------------------------------------------------------------------


class GraphFile(_Strict):
    schema_version: str = SPEC_FORMAT_VERSION
    vertices: list[str] | None = None
    edges: list[EdgeSpec]
    root: str | PointSpec | None = None
    measures: dict[str, MeasureSpec] = Field(default_factory=dict)
    functions: dict[str, FunctionSpec] = Field(default_factory=dict)
    weights: dict[str, WeightSpec] = Field(default_factory=dict)
    p: float = 2.0
    theta: float | None = None
    alpha: float | None = None

    @model_validator(mode="before")
    @classmethod
    def _alias_measure(cls, data: Any) -> Any:
        """The unnamed ``measure`` section is shorthand for ``measures.mu``."""
        if isinstance(data, dict) and "measure" in data:
            data = dict(data)
            single = data.pop("measure")
            measures = dict(data.get("measures") or {})
            if "mu" in measures:
                raise ValueError("Give either 'measure' or 'measures.mu', not both")
            measures["mu"] = single
            data["measures"] = measures
        return data

    @field_validator("p")
    @classmethod
    def _check_p(cls, p: float) -> float:
        if math.isnan(p) or p < 1.0:
            raise ValueError(f"p must be at least 1 (or inf), got {p}")
        return p

    @model_validator(mode="after")
    def _check_schema_version(self) -> GraphFile:
        _check_major("graph spec", self.schema_version)
        return self


# ---------------------------------------------------------------------------
# Parts file
# ---------------------------------------------------------------------------


class IntervalSpec(_Strict):
    edge: str
    from_: float = Field(alias="from")
    to: float


class PartSpec(_Strict):
    intervals: list[IntervalSpec] = Field(default_factory=list)
    vertices: list[str] = Field(default_factory=list)
    excluded: list[PointSpec] = Field(default_factory=list)


class PartsFile(_Strict):
    schema_version: str = SPEC_FORMAT_VERSION
    parts: list[PartSpec]

    @model_validator(mode="after")
    def _check_schema_version(self) -> PartsFile:
        _check_major("parts", self.schema_version)
        return self


# ---------------------------------------------------------------------------
# Run report
# ---------------------------------------------------------------------------


class RunReport(BaseModel):
    """What a CLI run did, on which inputs, and whether every check passed.

    Verdicts are recomputable from ``outputs``; ``elapsed_s`` is only set
    with ``--timing`` so that reports stay byte-reproducible.
    """

    schema_version: str = SPEC_FORMAT_VERSION
    command: list[str]
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: dict[str, Any] = Field(default_factory=dict)
    verdicts: dict[str, bool] = Field(default_factory=dict)
    passed: bool = False
    elapsed_s: float | None = None

    @model_validator(mode="after")
    def _derive_passed(self) -> RunReport:
        self.passed = all(self.verdicts.values())
        return self
