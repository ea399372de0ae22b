"""Request and response models shared by the service and the CLI."""
from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .expr import ExpressionError, parse_expression


def _expression(v: str) -> str:
    try:
        parse_expression(v)
    except ExpressionError as exc:
        raise ValueError(str(exc)) from None
    return v


class _Request(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class RegIntRequest(_Request):
    expr: str
    lower: float = Field(0.0, alias="from", ge=0.0)
    upper: Optional[float] = Field(None, alias="to")
    model: str = "auto"

    _check_expr = field_validator("expr")(_expression)

    @model_validator(mode="after")
    def _order(self):
        if self.upper is not None and self.upper < self.lower:
            raise ValueError("'to' must not be below 'from'")
        return self


class RegSumRequest(_Request):
    expr: str
    start: int = Field(1, alias="from", ge=1)
    method: Literal["euler_maclaurin", "direct"] = "euler_maclaurin"
    model: str = "auto"

    _check_expr = field_validator("expr")(_expression)


class FamilySpec(_Request):
    """Either a profile ``r`` or the pair ``V``, ``W``."""

    r: Optional[str] = None
    V: Optional[str] = None
    W: str = "0"
    bc0: str = "dirichlet"
    bc1: str = "dirichlet"
    surface_neumann: bool = False

    @field_validator("r", "V", "W")
    @classmethod
    def _check(cls, v):
        return v if v is None else _expression(v)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.r is None) == (self.V is None):
            raise ValueError("give exactly one of 'r' or 'V'")
        return self


class SLRequest(_Request):
    action: Literal["det", "trace", "eig"]
    V: str = "1"
    W: str = "0"
    bc0: str = "dirichlet"
    bc1: str = "dirichlet"
    lam: float = Field(0.0, alias="lambda", ge=0.0)
    z: list[float] = Field(default_factory=lambda: [1.0])
    power: int = Field(1, ge=1)
    count: int = Field(5, ge=1, le=10_000)
    method: Literal["gelfand_yaglom", "resolvent_pf", "resolvent_zeta"] = "gelfand_yaglom"

    _check_v = field_validator("V", "W")(_expression)


class PhgRequest(_Request):
    family: FamilySpec
    K: int = Field(2, ge=0, le=4)
    power: int = Field(2, ge=1)
    r0: Optional[float] = Field(None, gt=0.0)
    samples: int = Field(0, ge=0, description="rows of the sampled-trace table")


class AssembleRequest(_Request):
    family: FamilySpec
    convention: Literal["pf", "zeta"] = "pf"
    sigma: Optional[Literal[1, -1]] = None
    direct: bool = True
    tolerance: float = Field(3e-4, gt=0.0)


class CommandResult(BaseModel):
    command: str
    ok: bool = True
    result: dict[str, Any]
    messages: list[str] = Field(default_factory=list)
    version: str
    cached: bool = False
