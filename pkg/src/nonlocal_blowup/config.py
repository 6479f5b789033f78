"""JSON experiment configuration.

Exponents are read as exact decimals so that strict regime inequalities such
as ``l > (q+1)/2`` are decided without float round-off.  Every model object of
:mod:`nonlocal_blowup.model` has a tagged JSON form (``"type": ...``).
"""

from __future__ import annotations

import hashlib
import json
from decimal import Decimal
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from . import model as m
from .domain import Disc, Interval
from .solver import SolveControls


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ---------------------------------------------------------------------------
# profiles


class SpatialConstantCfg(_Strict):
    type: Literal["constant"]
    c: float = 1.0

    def build(self):
        return m.SpatialConstant(self.c)


class AffineBumpCfg(_Strict):
    type: Literal["affine_bump"]
    c0: float
    c1: float

    def build(self):
        return m.AffineBump(self.c0, self.c1)


class EigenPowerCfg(_Strict):
    type: Literal["eigen_power"]
    c: float
    power: float = 1.0

    def build(self):
        return m.EigenPower(self.c, self.power)


SpatialCfg = Annotated[Union[SpatialConstantCfg, AffineBumpCfg, EigenPowerCfg], Field(discriminator="type")]


class TemporalConstantCfg(_Strict):
    type: Literal["constant"]

    def build(self):
        return m.TemporalConstant()


class TemporalExpCfg(_Strict):
    type: Literal["exp"]
    rho: float

    def build(self):
        return m.TemporalExp(self.rho)


class TemporalPowerCfg(_Strict):
    type: Literal["power"]
    m: float

    def build(self):
        return m.TemporalPower(self.m)


class TemporalRampCfg(_Strict):
    type: Literal["ramp"]
    rho: float

    def build(self):
        return m.TemporalRamp(self.rho)


TemporalCfg = Annotated[
    Union[TemporalConstantCfg, TemporalExpCfg, TemporalPowerCfg, TemporalRampCfg], Field(discriminator="type")
]


# ---------------------------------------------------------------------------
# coefficients and kernels


class ConstantCfg(_Strict):
    type: Literal["constant"]
    c: float = Field(ge=0)

    def build(self):
        return m.Constant(self.c)


class ExpInTimeCfg(_Strict):
    type: Literal["exp_in_time"]
    c: float = Field(ge=0)
    rho: float

    def build(self):
        return m.ExpInTime(self.c, self.rho)


class SeparableCfg(_Strict):
    type: Literal["separable"]
    spatial: SpatialCfg
    temporal: TemporalCfg

    def build(self):
        return m.SeparableProduct(self.spatial.build(), self.temporal.build())


class FixtureCfg(_Strict):
    type: Literal["fixture"]
    tag: Literal["Remark36", "Remark310", "Remark311family"]
    params: dict[str, float] = {}

    def build(self):
        return m.Fixture(self.tag, dict(self.params))


CoefficientCfg = Annotated[Union[ConstantCfg, ExpInTimeCfg, SeparableCfg, FixtureCfg], Field(discriminator="type")]


class KernelZeroCfg(_Strict):
    type: Literal["zero"]

    def build(self):
        return m.KernelZero()


class UniformKernelCfg(_Strict):
    type: Literal["uniform"]
    k0: float = Field(ge=0)

    def build(self):
        return m.UniformConstant(self.k0)


class SeparableTimeKernelCfg(_Strict):
    type: Literal["separable_time"]
    kappa: TemporalCfg
    weight: SpatialCfg = SpatialConstantCfg(type="constant", c=1.0)

    def build(self):
        return m.SeparableTime(self.kappa.build(), self.weight.build())


KernelCfg = Annotated[
    Union[KernelZeroCfg, UniformKernelCfg, SeparableTimeKernelCfg, FixtureCfg], Field(discriminator="type")
]


# ---------------------------------------------------------------------------
# initial data


class InitialConstantCfg(_Strict):
    type: Literal["constant"]
    c: float = Field(ge=0)

    def build(self):
        return m.InitialConstant(self.c)


class ScaledEigenCfg(_Strict):
    type: Literal["scaled_eigen"]
    beta: float = Field(ge=0)
    normalization: Literal["sup_one", "integral_one"] = "sup_one"

    def build(self):
        return m.ScaledEigen(self.beta, self.normalization)


class SineModeCfg(_Strict):
    type: Literal["sine_mode"]
    c: float = Field(ge=0)

    def build(self):
        return m.SineMode(self.c)


class BumpCfg(_Strict):
    type: Literal["bump"]
    A: float = Field(gt=0)
    T: float = Field(gt=0)

    def build(self):
        return m.Bump(self.A, self.T)


class NodalCfg(_Strict):
    type: Literal["nodal"]
    values: list[float]

    @field_validator("values")
    @classmethod
    def _nonneg(cls, v):
        if any(x < 0 for x in v):
            raise ValueError("initial data must be nonnegative")
        return v

    def build(self):
        return m.Nodal(tuple(self.values))


class ScaledDatumCfg(_Strict):
    type: Literal["scaled"]
    c: float = Field(ge=0)
    base: "InitialCfg"

    def build(self):
        return m.ScaledDatum(self.c, self.base.build())


InitialCfg = Annotated[
    Union[InitialConstantCfg, ScaledEigenCfg, SineModeCfg, BumpCfg, NodalCfg, ScaledDatumCfg],
    Field(discriminator="type"),
]
ScaledDatumCfg.model_rebuild()


# ---------------------------------------------------------------------------
# problem


class IntervalCfg(_Strict):
    type: Literal["interval"]
    a: float = 0.0
    b: float = 1.0

    def build(self):
        return Interval(self.a, self.b)


class DiscCfg(_Strict):
    type: Literal["disc"]
    radius: float = Field(1.0, gt=0)

    def build(self):
        return Disc(self.radius)


DomainCfg = Annotated[Union[IntervalCfg, DiscCfg], Field(discriminator="type")]

POSITIVITY = "standing assumption that r, p, q, l are positive constants"


class ExponentsCfg(_Strict):
    r: Decimal
    p: Decimal
    q: Decimal
    l: Decimal

    @field_validator("r", "p", "q", "l", mode="before")
    @classmethod
    def _as_decimal(cls, v):
        # route floats through their shortest repr so 0.1 stays 1/10
        return Decimal(repr(v)) if isinstance(v, float) else v

    @field_validator("r", "p", "q", "l")
    @classmethod
    def _positive(cls, v, info):
        if not v.is_finite() or v <= 0:
            raise ValueError(f"exponent {info.field_name}={v} violates the {POSITIVITY}")
        return v

    def build(self) -> m.Exponents:
        return m.Exponents(float(self.r), float(self.p), float(self.q), float(self.l))


class SpecCfg(_Strict):
    exponents: ExponentsCfg
    a: CoefficientCfg
    b: CoefficientCfg
    k: KernelCfg
    u0: InitialCfg
    domain: DomainCfg

    def build(self) -> m.ProblemSpec:
        return m.ProblemSpec(
            self.exponents.build(), self.a.build(), self.b.build(), self.k.build(), self.u0.build(), self.domain.build()
        )


class GridCfg(_Strict):
    n: int = Field(200, ge=8)


class ControlsCfg(_Strict):
    t_end: float = Field(1.0, gt=0)
    dt_init: Optional[float] = None
    cfl_safety: float = 0.45
    reaction_safety: float = 0.1
    blowup_threshold: float = 1e8
    dt_min: float = 1e-12
    boundary_fixedpoint_tol: float = 1e-12
    trace_stride: int = 50
    snapshot_times: list[float] = []

    def build(self) -> SolveControls:
        d = self.model_dump()
        d["snapshot_times"] = tuple(d["snapshot_times"])
        return SolveControls(**d)


# ---------------------------------------------------------------------------
# kind-specific payloads


class CandidateCfg(_Strict):
    """Either an explicit candidate or a recipe request."""

    family: str
    kind: Optional[Literal["Supersolution", "Subsolution", "ExactSolution"]] = None
    params: Optional[dict[str, Union[float, str]]] = None
    region: Optional[dict[str, float]] = None
    recipe_options: dict[str, float] = {}


class ClassifyCfg(_Strict):
    horizon: float = Field(5.0, gt=0)
    hypotheses: Optional[list[str]] = None
    asserted: list[str] = []
    samples: int = Field(201, ge=16)


class AxisCfg(_Strict):
    name: str
    values: list[Decimal]

    @field_validator("values", mode="before")
    @classmethod
    def _as_decimal(cls, v):
        return [Decimal(repr(x)) if isinstance(x, float) else x for x in v]


class SweepCfg(_Strict):
    axes: list[AxisCfg] = []
    max_cells: int = Field(400, ge=1)
    scales: list[float] = []

    @field_validator("axes")
    @classmethod
    def _two_axes(cls, v):
        if len(v) > 2:
            raise ValueError(f"a sweep has at most 2 axes, got {len(v)}")
        return v


class ExperimentConfig(_Strict):
    kind: Literal["solve", "certify", "classify", "sweep", "compare", "eig"]
    spec: SpecCfg
    grid: GridCfg = GridCfg()
    controls: ControlsCfg = ControlsCfg()
    waive_compatibility: bool = False
    fit_lower_bound_t0: Optional[float] = None
    candidate: Optional[CandidateCfg] = None
    t_samples: int = Field(41, ge=2)
    classify: ClassifyCfg = ClassifyCfg()
    scales: list[float] = []
    sweep: SweepCfg = SweepCfg()
    second_u0: Optional[InitialCfg] = None
    normalization: Literal["integral_one", "sup_one"] = "integral_one"

    def config_hash(self) -> str:
        canon = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def load_config(path) -> ExperimentConfig:
    """Parse and validate a JSON config file (raises ``pydantic.ValidationError``)."""
    text = Path(path).read_text()
    return ExperimentConfig.model_validate_json(text)
