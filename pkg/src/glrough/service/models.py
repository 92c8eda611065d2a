"""Pydantic request/response models for the service API.

Artifact payloads (paths, lifts, bases, representations, signature bundles)
reuse the package's JSON file formats; their internal invariants are checked
by the core loaders, which produce named invariant errors.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

Number = float | int | str  # exact rationals travel as "p/q" strings


class ErrorBody(BaseModel):
    kind: str
    message: str


class ErrorResponse(BaseModel):
    error: ErrorBody


class TreesEnumRequest(BaseModel):
    nodes: int = Field(ge=0)
    labels: int = Field(ge=1)
    forests: bool = False


class TreesEnumResponse(BaseModel):
    items: list[str]
    count: int


class StarRequest(BaseModel):
    a: str
    b: str
    truncation: int | None = None


class SeriesResponse(BaseModel):
    series: str
    data: dict[str, Any]


class CoproductRequest(BaseModel):
    series: str
    kind: Literal["ck", "gl"] = "ck"


class CoproductTerm(BaseModel):
    left: str
    right: str
    coeff: str


class CoproductResponse(BaseModel):
    terms: list[CoproductTerm]


class ExpLogRequest(BaseModel):
    series: str
    level: int = Field(ge=0)


class BasisRequest(BaseModel):
    max_degree: int = Field(ge=1)
    labels: int = Field(ge=1)


class BasisResponse(BaseModel):
    basis: dict[str, Any]
    generator_count: int
    generators: list[str]


class RewriteRequest(BaseModel):
    labels: int = Field(ge=1)
    max_degree: int = Field(ge=1)
    direction: Literal["words", "forests"]
    series: str | None = None
    words: dict[str, Any] | None = None


class RewriteResponse(BaseModel):
    series: str | None = None
    words: dict[str, Any] | None = None


class SimBmRequest(BaseModel):
    dim: int = Field(ge=1)
    steps: int = Field(ge=1)
    cov: list[list[Number]]
    seed: int
    t: float = 1.0


class PathResponse(BaseModel):
    path: dict[str, Any]


class LiftRequest(BaseModel):
    path: dict[str, Any]
    p: Number = "5/2"
    rationalize_bits: int | None = None


class LiftResponse(BaseModel):
    lift: dict[str, Any]


class SignatureRequest(BaseModel):
    lift: dict[str, Any]
    level: int = Field(ge=1)
    route: Literal["star", "tensor", "both"] = "star"
    labels: int | None = None


class SignatureResponse(BaseModel):
    sig: dict[str, Any]
    routes_agree: bool | None = None


class ReverseRequest(BaseModel):
    lift: dict[str, Any]


class EsigClosedRequest(BaseModel):
    cov: list[list[Number]]
    t: Number = 1
    level: int = Field(ge=1)


class EsigMcRequest(BaseModel):
    cov: list[list[Number]]
    t: Number = 1
    level: int = Field(ge=1)
    samples: int = Field(ge=2)
    seed: int
    steps: int = Field(default=32, ge=1)
    workers: int = Field(default=1, ge=1)
    compare_closed_form: bool = True


class EsigMcResponse(BaseModel):
    series: dict[str, Any]
    stderr: dict[str, float]
    meta: dict[str, Any]
    closed_form: dict[str, Any] | None = None
    max_z: float | None = None
    within_4se: bool | None = None


class EsigBoundRequest(BaseModel):
    cov: list[list[Number]]
    t: Number = 1
    K: Number = 2
    k: int = Field(default=2, ge=1)
    max_word_len: int = Field(default=8, ge=1)


class EsigBoundRow(BaseModel):
    word_length: int
    term: str
    partial_sum: str
    ratio_to_previous: str | None


class EsigBoundResponse(BaseModel):
    rows: list[EsigBoundRow]


class RdeCompareRequest(BaseModel):
    driver: dict[str, Any]
    fields_per_component: list[dict[str, Any]]
    p: Number = "5/2"
    y0: list[Number]
    rationalize_bits: int | None = 16
    linear_level: int | None = None


class RdeCompareResponse(BaseModel):
    branched_final: list[str]
    geometric_final: list[str]
    identical: bool
    states_branched: list[list[str]]
    states_geometric: list[list[str]]
    linear_rde_matches_signature: bool | None = None


class SigBundle(BaseModel):
    level: int
    signatures: list[str]


class FourierEvalRequest(BaseModel):
    rep: dict[str, Any]
    sigs: SigBundle
    labels: int = Field(ge=1)
    max_degree: int | None = None


class FourierEvalResponse(BaseModel):
    matrix: list[list[list[float]]]
    stderr: list[list[float]]


class FourierCompareRequest(BaseModel):
    reps: list[dict[str, Any]]
    sigs_a: SigBundle
    sigs_b: SigBundle
    labels: int = Field(ge=1)
    max_degree: int | None = None
    threshold: float = 4.0


class FourierCompareResponse(BaseModel):
    report: dict[str, Any]


class DemoRequest(BaseModel):
    seed: int
    samples: int = Field(default=20000, ge=2)
    steps: int = Field(default=64, ge=1)
    mc_steps: int = Field(default=16, ge=1)
    workers: int = Field(default=1, ge=1)


class DemoResponse(BaseModel):
    report: dict[str, Any]
    passed: bool
