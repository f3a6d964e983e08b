"""Named decision problems with known answers.

Graph fixtures carry the verdicts the criteria must reach and, for graphs meeting the
main-theorem conditions, the (decision, context) edge to synthesize a model for.
SCM fixtures carry exact MEU values with and without one context.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

from .criteria import EdgeVerdict, check_graph
from .errors import UnknownFixture
from .graph_core import NodeKind, ScopedGraph
from .materiality_builder import synthesize
from .policy_search import voi_detail
from .scm_engine import (
    Const,
    Equals,
    FiniteSCM,
    Index,
    NoiseRef,
    NoiseSpec,
    ParentRef,
    ScmDocument,
    Sum,
    VariableSpec,
    Weighted,
    Xor,
    expected_utility,
    format_fraction,
    reference_policy,
)

logger = logging.getLogger(__name__)

MATERIAL = EdgeVerdict.material_by_thm1


@dataclass(frozen=True)
class GraphFixture:
    name: str
    description: str
    graph: ScopedGraph
    target: Optional[tuple[str, str]] = None
    verdicts: dict[tuple[str, str], EdgeVerdict] = field(default_factory=dict)
    soluble: Optional[bool] = None


@dataclass(frozen=True)
class ScmFixture:
    name: str
    description: str
    scm: FiniteSCM
    decision: str
    context: str
    meu_with: Fraction
    meu_without: Fraction


# graphs

def _yes_voi() -> GraphFixture:
    g = ScopedGraph.build(chance=["Z"], decisions={"X": ["Z"]}, edges=[("X", "Y"), ("Z", "Y")])
    return GraphFixture("yes-voi", "Y rewards X for matching Z", g, ("X", "Z"), {("X", "Z"): MATERIAL}, True)


def _yes_voi_no_sr() -> GraphFixture:
    g = ScopedGraph.build(
        chance=["Z"], decisions={"X": ["Z"], "X'": ["X"]}, edges=[("X'", "Y"), ("Z", "Y")])
    return GraphFixture(
        "yes-voi-no-sr", "Z reaches X' only through the decision X", g, ("X", "Z"),
        {("X", "Z"): MATERIAL, ("X'", "X"): MATERIAL}, False)


def _linear_no_voi() -> GraphFixture:
    g = ScopedGraph.build(chance=["Z"], decisions={"X": ["Z"]}, edges=[("X", "Y")])
    return GraphFixture(
        "linear-no-voi", "Z only affects Y through X", g,
        verdicts={("X", "Z"): EdgeVerdict.immaterial_single_decision}, soluble=True)


def _triangle() -> GraphFixture:
    g = ScopedGraph.build(decisions={"Z": [], "X": ["Z"]}, edges=[("X", "Y"), ("Z", "Y")])
    return GraphFixture(
        "triangle", "Two decisions jointly determine Y", g,
        verdicts={("X", "Z"): EdgeVerdict.immaterial_lb2})


def _fixpoint_gap() -> GraphFixture:
    g = ScopedGraph.build(
        chance=["Z", "C"], decisions={"X": ["Z"], "X''": ["C", "Z"]},
        edges=[("Z", "C"), ("X", "Y"), ("X''", "Y"), ("C", "Y")])
    return GraphFixture(
        "fixpoint-gap", "Factorizable, yet the fix-point misses Z", g,
        verdicts={("X", "Z"): EdgeVerdict.unknown})


def _fork_info() -> GraphFixture:
    g = ScopedGraph.build(
        chance=["V", "Z"], decisions={"X": ["Z"]}, edges=[("V", "Z"), ("V", "Y"), ("X", "Y")])
    return GraphFixture("fork-info", "Z carries a noisy view of V", g, ("X", "Z"), {("X", "Z"): MATERIAL})


def _fork_chain_info() -> GraphFixture:
    g = ScopedGraph.build(
        chance=["V", "W", "Z"], decisions={"X": ["Z"]},
        edges=[("V", "W"), ("W", "Z"), ("V", "Y"), ("X", "Y")])
    return GraphFixture(
        "fork-chain-info", "The info path reaches Z through a chain", g, ("X", "Z"), {("X", "Z"): MATERIAL})


def _mediated_control() -> GraphFixture:
    g = ScopedGraph.build(
        chance=["Z", "M"], decisions={"X": ["Z"]}, edges=[("X", "M"), ("M", "Y"), ("Z", "Y")])
    return GraphFixture(
        "mediated-control", "X acts on Y through a mediator", g, ("X", "Z"), {("X", "Z"): MATERIAL})


def _xor_collider_graph() -> GraphFixture:
    g = ScopedGraph.build(
        chance=["Z", "U1", "W1"], decisions={"X": ["W1", "Z"]},
        edges=[("Z", "W1"), ("U1", "W1"), ("U1", "Y"), ("X", "Y")])
    return GraphFixture(
        "xor-collider", "The info path from Z passes a collider", g, ("X", "Z"), {("X", "Z"): MATERIAL})


def _two_info_paths() -> GraphFixture:
    g = ScopedGraph.build(
        chance=["Z", "Z'", "W'", "U'"], decisions={"X": ["Z"], "X'": ["W'", "Z", "Z'"]},
        edges=[("X", "Z'"), ("Z'", "W'"), ("U'", "W'"), ("U'", "Y"), ("X'", "Y"), ("Z", "Y")])
    return GraphFixture(
        "two-info-paths", "Soluble graph needing two info paths", g, ("X", "Z"),
        {("X", "Z"): MATERIAL}, True)


def _remember_decision() -> GraphFixture:
    g = ScopedGraph.build(
        chance=["U"], decisions={"Z0": ["U"], "X0": ["Z0"]},
        edges=[("U", "Y"), ("Z0", "Y"), ("X0", "Y")])
    return GraphFixture(
        "remember-decision", "The context is an earlier decision", g, ("X0", "Z0"), {("X0", "Z0"): MATERIAL})


def _finite_domain() -> GraphFixture:
    g = ScopedGraph.build(
        chance=["Z0", "U1", "W1"], decisions={"X'": ["W1", "Z0"], "X0": ["X'", "Z0"]},
        edges=[("Z0", "W1"), ("U1", "W1"), ("U1", "Y"), ("X0", "Y")])
    return GraphFixture(
        "finite-domain", "X' relays the collider to X0", g, ("X0", "Z0"), {("X0", "Z0"): MATERIAL})


def _multi_collider() -> GraphFixture:
    g = ScopedGraph.build(
        chance=["U0", "Z0", "W1", "U1"], decisions={"X0": ["W1", "Z0"]},
        edges=[("U0", "Z0"), ("U0", "W1"), ("U1", "W1"), ("U1", "Y"), ("X0", "Y")])
    return GraphFixture(
        "multi-collider", "Info path with two forks", g, ("X0", "Z0"), {("X0", "Z0"): MATERIAL})


GRAPH_FIXTURES: dict[str, Callable[[], GraphFixture]] = {
    "yes-voi": _yes_voi,
    "yes-voi-no-sr": _yes_voi_no_sr,
    "linear-no-voi": _linear_no_voi,
    "triangle": _triangle,
    "fixpoint-gap": _fixpoint_gap,
    "fork-info": _fork_info,
    "fork-chain-info": _fork_chain_info,
    "mediated-control": _mediated_control,
    "xor-collider": _xor_collider_graph,
    "two-info-paths": _two_info_paths,
    "remember-decision": _remember_decision,
    "finite-domain": _finite_domain,
    "multi-collider": _multi_collider,
}


# structural causal models

def _source(name: str, bits: int = 1, table: Optional[dict[str, str]] = None) -> VariableSpec:
    noise = NoiseSpec(table=table) if table else NoiseSpec(bits=bits)
    return VariableSpec(name=name, kind=NodeKind.chance, bits=bits, noise=noise, function=NoiseRef())


def _decision(name: str, contexts: list[str], bits: int = 1) -> VariableSpec:
    return VariableSpec(name=name, kind=NodeKind.decision, bits=bits, parents=sorted(contexts))


def _utility(parents: list[str], function) -> VariableSpec:
    return VariableSpec(name="Y", kind=NodeKind.utility, parents=sorted(parents), function=function)


def _bit(name: str, i: int) -> ParentRef:
    return ParentRef(name=name, start=i, stop=i + 1)


def _scm(*variables: VariableSpec) -> FiniteSCM:
    return FiniteSCM(ScmDocument(variables=list(variables), utility="Y"))


def _yes_voi_scm() -> ScmFixture:
    scm = _scm(
        _source("Z"),
        _decision("X", ["Z"]),
        _utility(["X", "Z"], Equals(left=ParentRef(name="Z"), right=ParentRef(name="X"))),
    )
    return ScmFixture("yes-voi", "X must copy Z", scm, "X", "Z", Fraction(1), Fraction(1, 2))


def _yes_voi_no_sr_scm() -> ScmFixture:
    scm = _scm(
        _source("Z"),
        _decision("X", ["Z"]),
        _decision("X'", ["X"]),
        _utility(["X'", "Z"], Equals(left=ParentRef(name="Z"), right=ParentRef(name="X'"))),
    )
    return ScmFixture("yes-voi-no-sr", "X' recovers Z from X", scm, "X'", "X", Fraction(1), Fraction(1, 2))


def _remember_decision_scm() -> ScmFixture:
    scm = _scm(
        _source("U"),
        _decision("Z0", ["U"]),
        _decision("X0", ["Z0"]),
        _utility(["U", "X0", "Z0"], Equals(left=ParentRef(name="Z0"), right=ParentRef(name="X0"))),
    )
    return ScmFixture(
        "remember-decision-1", "Matching an earlier decision needs no observation", scm,
        "X0", "Z0", Fraction(1), Fraction(1))


def _xor_collider_scm() -> ScmFixture:
    scm = _scm(
        _source("Z"),
        _source("U1"),
        VariableSpec(
            name="W1", kind=NodeKind.chance, bits=1, parents=["U1", "Z"],
            function=Xor(parts=[ParentRef(name="Z"), ParentRef(name="U1")])),
        _decision("X", ["W1", "Z"]),
        _utility(["U1", "X"], Equals(left=ParentRef(name="U1"), right=ParentRef(name="X"))),
    )
    return ScmFixture("xor-collider", "X decrypts U1 from W1 with Z", scm, "X", "Z", Fraction(1), Fraction(1, 2))


def _finite_domain_1_scm() -> ScmFixture:
    scm = _scm(
        _source("Z0"),
        _source("U1"),
        VariableSpec(
            name="W1", kind=NodeKind.chance, bits=1, parents=["U1", "Z0"],
            function=Xor(parts=[ParentRef(name="Z0"), ParentRef(name="U1")])),
        _decision("X'", ["W1", "Z0"]),
        _decision("X0", ["X'", "Z0"]),
        _utility(["U1", "X0"], Equals(left=ParentRef(name="U1"), right=ParentRef(name="X0"))),
    )
    return ScmFixture(
        "finite-domain-1", "X' can decrypt U1 on behalf of X0", scm, "X0", "Z0", Fraction(1), Fraction(1))


def _finite_domain_2_scm() -> ScmFixture:
    scm = _scm(
        _source("Z0"),
        _source("U1", bits=2),
        VariableSpec(
            name="W1", kind=NodeKind.chance, bits=1, parents=["U1", "Z0"],
            function=Index(table=ParentRef(name="U1"), key=ParentRef(name="Z0"))),
        _decision("X'", ["W1", "Z0"]),
        _decision("X0", ["X'", "Z0"], bits=2),
        _utility(["U1", "X0"], Equals(
            left=Index(table=ParentRef(name="U1"), key=_bit("X0", 0)), right=_bit("X0", 1))),
    )
    return ScmFixture(
        "finite-domain-2", "X0 must name which bit of U1 it reports", scm,
        "X0", "Z0", Fraction(1), Fraction(3, 4))


_NOISY_COPY = {"0": "99/100", "1": "1/100"}


def _concealed_copy(parents: list[str]) -> VariableSpec:
    return VariableSpec(
        name="C", kind=NodeKind.chance, bits=1, parents=parents, noise=NoiseSpec(table=_NOISY_COPY),
        function=Xor(parts=[ParentRef(name="Z0"), NoiseRef()]))


def _obstacle_terms(copy: str):
    red = Equals(left=Index(table=ParentRef(name="V"), key=_bit("X0", 0)), right=_bit("X0", 1))
    blue = Equals(left=ParentRef(name=copy), right=_bit("X0", 0))
    return Sum(terms=[Weighted(weight="10", term=red), Weighted(term=blue)])


def _obstacle_2_scm() -> ScmFixture:
    scm = _scm(
        _source("Z0"),
        _source("V", bits=2),
        _decision("X1", ["V", "Z0"]),
        _concealed_copy(["X1", "Z0"]),
        _decision("X0", ["C", "X1", "Z0"], bits=2),
        _utility(["C", "V", "X0"], _obstacle_terms("C")),
    )
    return ScmFixture(
        "obstacle-2", "A noisy copy of Z0 conceals it from X0", scm,
        "X0", "Z0", Fraction(1099, 100), Fraction(1095, 100))


def _superimposed_scm() -> ScmFixture:
    blank = [
        VariableSpec(name=a, kind=NodeKind.chance, bits=0, function=Const())
        for a in ("A1", "A2", "A3")
    ]
    scm = _scm(
        _source("Z0"),
        _source("V", bits=2),
        *blank,
        _decision("X1", ["V", "Z0"]),
        _concealed_copy(["A1", "X1", "Z0"]),
        _decision("X2", ["A2", "C", "Z0"]),
        _decision("X3", ["A3", "X2", "Z0"]),
        _decision("X0", ["C", "X1", "X2", "X3", "Z0"], bits=2),
        _utility(["A1", "A2", "A3", "V", "X0", "X3"], _obstacle_terms("X3")),
    )
    return ScmFixture(
        "superimposed", "X2 and X3 pass Z0 on to X0", scm, "X0", "Z0", Fraction(11), Fraction(11))


SCM_FIXTURES: dict[str, Callable[[], ScmFixture]] = {
    "yes-voi": _yes_voi_scm,
    "yes-voi-no-sr": _yes_voi_no_sr_scm,
    "remember-decision-1": _remember_decision_scm,
    "xor-collider": _xor_collider_scm,
    "finite-domain-1": _finite_domain_1_scm,
    "finite-domain-2": _finite_domain_2_scm,
    "obstacle-2": _obstacle_2_scm,
    "superimposed": _superimposed_scm,
}


def fixture_names() -> list[str]:
    return sorted(set(GRAPH_FIXTURES) | set(SCM_FIXTURES))


def materiality_fixtures() -> list[GraphFixture]:
    """Graph fixtures meeting the main-theorem conditions, each with a target edge."""
    return [f for f in (graph_fixture(n) for n in sorted(GRAPH_FIXTURES)) if f.target is not None]


@lru_cache(maxsize=None)
def graph_fixture(name: str) -> GraphFixture:
    if name not in GRAPH_FIXTURES:
        raise UnknownFixture(name, sorted(GRAPH_FIXTURES))
    return GRAPH_FIXTURES[name]()


@lru_cache(maxsize=None)
def scm_fixture(name: str) -> ScmFixture:
    if name not in SCM_FIXTURES:
        raise UnknownFixture(name, sorted(SCM_FIXTURES))
    return SCM_FIXTURES[name]()


def _expect(label: str, expected, actual, ok: Optional[bool] = None) -> "Expectation":
    from .reports import Expectation

    expected_text = format_fraction(expected) if isinstance(expected, Fraction) else str(expected)
    actual_text = format_fraction(actual) if isinstance(actual, Fraction) else str(actual)
    return Expectation(
        label=label, expected=expected_text, actual=actual_text,
        ok=(expected == actual) if ok is None else ok)


def _reproduce_graph(fixture: GraphFixture, k_override: Optional[int], budget, threads) -> list:
    g = fixture.graph
    report = check_graph(g)
    checks = []
    for (decision, context), verdict in sorted(fixture.verdicts.items()):
        actual = report.edge(decision, context).verdict
        checks.append(_expect(f"verdict {context} -> {decision}", verdict.value, actual.value))
    if fixture.soluble is not None:
        checks.append(_expect("soluble", fixture.soluble, report.soluble))
    if fixture.target is None:
        return checks

    decision, context = fixture.target
    paths, params, scm = synthesize(g, decision, context, k_override)
    compliant = expected_utility(scm, reference_policy(scm), threads or 1)
    checks.append(_expect("compliant utility", Fraction(paths.i_max - paths.i_min + 1), compliant))
    with_context, without_context = voi_detail(scm, None, decision, context, budget, threads)
    gap = with_context.value - without_context.value
    checks.append(_expect(f"synthesized VoI of {context} for {decision}", "> 0", gap, ok=gap > 0))
    checks.append(_expect("synthesized MEU", compliant, with_context.value))
    return checks


def _reproduce_scm(fixture: ScmFixture, budget, threads) -> list:
    with_context, without_context = voi_detail(
        fixture.scm, None, fixture.decision, fixture.context, budget, threads)
    return [
        _expect(f"MEU with {fixture.context} -> {fixture.decision}", fixture.meu_with, with_context.value),
        _expect(f"MEU without {fixture.context} -> {fixture.decision}", fixture.meu_without, without_context.value),
    ]


def reproduce(
    name: str,
    k_override: Optional[int] = 1,
    budget: Optional[int] = None,
    threads: Optional[int] = None,
) -> "ReproductionResult":
    """Run every stored expectation attached to a fixture name."""
    from .reports import ReproductionResult

    if name not in GRAPH_FIXTURES and name not in SCM_FIXTURES:
        raise UnknownFixture(name, fixture_names())
    logger.info(f"Reproducing fixture {name}")
    checks = []
    if name in GRAPH_FIXTURES:
        checks += _reproduce_graph(graph_fixture(name), k_override, budget, threads)
    if name in SCM_FIXTURES:
        checks += _reproduce_scm(scm_fixture(name), budget, threads)
    result = ReproductionResult(fixture=name, checks=checks)
    for c in checks:
        if not c.ok:
            logger.warning(f"{name}: {c.label} expected {c.expected}, got {c.actual}")
    return result
