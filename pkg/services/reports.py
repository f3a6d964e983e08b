from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from typing import Any, Optional

from pydantic import BaseModel, computed_field

from .criteria import CriterionReport, EdgeReport, EdgeVerdict, SingleDecisionVerdict
from .policy_search import MEUResult
from .scm_engine import format_fraction


class Rational(BaseModel):
    """Exact value as "p/q"; the decimal is for reading only."""

    value: str
    decimal: str

    @classmethod
    def of(cls, q: Fraction) -> "Rational":
        return cls(value=format_fraction(q), decimal=f"{float(q):.6f}")


class EdgeModel(BaseModel):
    decision: str
    context: str
    verdict: EdgeVerdict
    single_decision: SingleDecisionVerdict
    witness: Optional[dict[str, list[str]]] = None
    paths: Optional[dict[str, Any]] = None
    note: str = ""


class ConditionModel(BaseModel):
    decision: str
    context: Optional[str] = None
    holds: bool


class CheckResult(BaseModel):
    edges: list[EdgeModel]
    soluble: Optional[bool]
    soluble_ordering: Optional[list[str]] = None
    condition_a: list[ConditionModel]
    condition_b: list[ConditionModel]
    condition_c: list[ConditionModel]
    main_theorem_applies: bool


class SynthesisResult(BaseModel):
    decision: str
    context: str
    k: int
    b: int
    c: int
    k_override: Optional[int] = None
    paths: dict[str, Any]
    compliant_utility: Rational
    scm: dict[str, Any]


class MEUModel(BaseModel):
    value: Rational
    scope: dict[str, list[str]]
    witness: dict[str, Any]
    policies_examined: int


class VoIModel(BaseModel):
    decision: str
    context: str
    meu_with: Rational
    meu_without: Rational
    voi: Rational


class Expectation(BaseModel):
    label: str
    expected: str
    actual: str
    ok: bool


class ReproductionResult(BaseModel):
    fixture: str
    checks: list[Expectation]

    @computed_field
    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


class Report(BaseModel):
    command: str
    inputs_digest: str
    seed: int
    threads: int
    ok: bool = True
    warnings: list[str] = []
    result: dict[str, Any] = {}
    timing: Optional[float] = None

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json", exclude_none=True), indent=2, sort_keys=True)


def digest(*parts: str | bytes) -> str:
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode() if isinstance(part, str) else part)
        h.update(b"\0")
    return h.hexdigest()


def edge_model(edge: EdgeReport) -> EdgeModel:
    return EdgeModel(
        decision=edge.decision,
        context=edge.context,
        verdict=edge.verdict,
        single_decision=edge.single_decision,
        witness=edge.witness.describe() if edge.witness is not None else None,
        paths=edge.paths.describe() if edge.paths is not None else None,
        note=edge.note,
    )


def check_result(report: CriterionReport) -> CheckResult:
    thm1 = report.thm1
    return CheckResult(
        edges=[edge_model(e) for e in report.edges],
        soluble=report.soluble,
        soluble_ordering=list(report.soluble_ordering) if report.soluble_ordering else None,
        condition_a=[ConditionModel(decision=x, holds=v) for x, v in sorted(thm1.a.items())],
        condition_b=[ConditionModel(decision=x, context=z, holds=v) for (x, z), v in sorted(thm1.b.items())],
        condition_c=[ConditionModel(decision=x, context=z, holds=v) for (x, z), v in sorted(thm1.c.items())],
        main_theorem_applies=thm1.all_hold,
    )


def meu_model(result: MEUResult) -> MEUModel:
    return MEUModel(
        value=Rational.of(result.value),
        scope={d: list(c) for d, c in sorted(result.witness.scope().items())},
        witness=result.witness.describe(),
        policies_examined=result.policies_examined,
    )


def voi_model(decision: str, context: str, with_context: MEUResult, without_context: MEUResult) -> VoIModel:
    return VoIModel(
        decision=decision,
        context=context,
        meu_with=Rational.of(with_context.value),
        meu_without=Rational.of(without_context.value),
        voi=Rational.of(with_context.value - without_context.value),
    )
