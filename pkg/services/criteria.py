"""Graphical criteria for deciding whether a context can matter to a decision.

Verdicts are one-sided. The single-decision criterion and the LB-2 fix-point check can
only prove immateriality; the main-theorem conditions can only prove materiality. An
edge that neither side settles is reported as unknown.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import permutations
from typing import Iterable, Optional

import networkx as nx

from .errors import (
    GraphError,
    LemmaHypothesisFailed,
    NotAContext,
    PreconditionViolated,
    SearchBudgetExceeded,
)
from .graph_core import Path, ScopedGraph, directed_path, lexicographic_topological_orders
from .separation import (
    PolicyNode,
    active_path_witness,
    closure,
    d_separated,
    is_active,
    observation_closure,
    policy_relevance,
)
from .settings import get_settings

logger = logging.getLogger(__name__)


class SingleDecisionVerdict(str, Enum):
    possibly_material = "PossiblyMaterial"
    immaterial = "Immaterial"


class EdgeVerdict(str, Enum):
    immaterial_single_decision = "ImmaterialSingleDecision"
    immaterial_lb2 = "ImmaterialLB2"
    material_by_thm1 = "MaterialByThm1"
    unknown = "Unknown"


@dataclass(frozen=True)
class OrderingGraph:
    """Precedence graph over Z ∪ X' ∪ C' (parent -> decision, decision -> descendant)."""

    x_prime: frozenset[str]
    z: frozenset[str]
    c_prime: frozenset[str]
    graph: nx.DiGraph

    @property
    def vertices(self) -> frozenset[str]:
        return frozenset(self.graph.nodes)

    @property
    def edges(self) -> list[tuple[str, str]]:
        return sorted(self.graph.edges)

    def is_acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self.graph)

    def descendants(self, v: str) -> frozenset[str]:
        return frozenset(nx.descendants(self.graph, v)) | {v}


@dataclass(frozen=True)
class FactorizationWitness:
    x_prime: frozenset[str]
    z: frozenset[str]
    c_prime: frozenset[str]
    ordering: tuple[str, ...]
    u_prime: frozenset[str] = frozenset()

    def before(self, v: str) -> frozenset[str]:
        return frozenset(self.ordering[:self.ordering.index(v)])

    def describe(self) -> dict[str, list[str]]:
        return {
            "x_prime": sorted(self.x_prime),
            "z": sorted(self.z),
            "c_prime": sorted(self.c_prime),
            "ordering": list(self.ordering),
        }


@dataclass(frozen=True)
class Thm1Report:
    a: dict[str, bool]
    b: dict[tuple[str, str], bool]
    c: dict[tuple[str, str], bool]

    @property
    def all_hold(self) -> bool:
        return all(self.a.values()) and all(self.b.values()) and all(self.c.values())


@dataclass
class EdgeReport:
    decision: str
    context: str
    verdict: EdgeVerdict
    single_decision: SingleDecisionVerdict
    witness: Optional[FactorizationWitness] = None
    paths: Optional[object] = None
    note: str = ""


@dataclass
class CriterionReport:
    edges: list[EdgeReport]
    soluble_ordering: Optional[tuple[str, ...]]
    thm1: Thm1Report
    warnings: list[str] = field(default_factory=list)
    solubility_decided: bool = True

    @property
    def soluble(self) -> Optional[bool]:
        if not self.solubility_decided:
            return None
        return self.soluble_ordering is not None

    def edge(self, decision: str, context: str) -> EdgeReport:
        for e in self.edges:
            if (e.decision, e.context) == (decision, context):
                return e
        raise NotAContext(decision, context)


def _require_context(g: ScopedGraph, decision: str, context: str) -> None:
    if not g.is_decision(decision):
        raise GraphError(f"{decision!r} is not a decision")
    if context not in g.contexts(decision):
        raise NotAContext(decision, context)


def single_decision_criterion(g: ScopedGraph, decision: str, context: str) -> SingleDecisionVerdict:
    """Single-decision test. Immaterial is sound in any scope; PossiblyMaterial is only a
    materiality guarantee when the decision is the only one in its scope."""
    _require_context(g, decision, context)
    if g.utility not in g.descendants(decision):
        return SingleDecisionVerdict.immaterial
    given = ({decision} | g.contexts(decision)) - {context}
    if d_separated(g, context, g.utility, given):
        return SingleDecisionVerdict.immaterial
    return SingleDecisionVerdict.possibly_material


def solubility(g: ScopedGraph) -> Optional[tuple[str, ...]]:
    """First decision ordering (lexicographic over permutations) under which no earlier
    decision or context carries unobserved information relevant to a later decision."""
    limit = get_settings().ordering_limit
    ancestors_of_y = g.ancestors(g.utility)
    for examined, ordering in enumerate(permutations(g.decisions)):
        if examined >= limit:
            raise SearchBudgetExceeded(f"More than {limit} decision orderings")
        earlier: set[str] = set()
        ok = True
        for decision in ordering:
            given = {decision} | g.contexts(decision)
            for v in sorted(earlier - given):
                if v in ancestors_of_y and not d_separated(g, v, g.utility, given):
                    ok = False
                    break
            if not ok:
                break
            earlier |= given
        if ok:
            return ordering
    return None


def thm1_conditions(g: ScopedGraph) -> Thm1Report:
    a = {x: x in g.ancestors(g.utility) for x in g.decisions}
    b: dict[tuple[str, str], bool] = {}
    c: dict[tuple[str, str], bool] = {}
    for x in g.decisions:
        for z in sorted(g.contexts(x)):
            given = ({x} | g.contexts(x)) - {z}
            b[(x, z)] = not d_separated(g, z, g.utility, given)
            c[(x, z)] = policy_relevance(g, x, observation_closure(g, z))
    return Thm1Report(a=a, b=b, c=c)


def _split_sets(g: ScopedGraph, x_prime: Iterable[str], z: Iterable[str]) -> tuple[frozenset, frozenset, frozenset]:
    x_prime, z = frozenset(x_prime), frozenset(z)
    for x in x_prime:
        if not g.is_decision(x):
            raise GraphError(f"{x!r} is not a decision")
    for v in z:
        if v not in g:
            raise GraphError(f"Unknown node {v!r}")
    if x_prime & z:
        raise PreconditionViolated("Z and X' must be disjoint")
    contexts = frozenset().union(*(g.contexts(x) for x in x_prime)) if x_prime else frozenset()
    return x_prime, z, contexts - x_prime - z


def _activated_by_both(g: ScopedGraph, a: str, b: str, first: frozenset, second: frozenset) -> bool:
    """Is some simple path a - b active under both conditioning sets?"""
    skeleton = g.digraph.to_undirected(as_view=True)
    limit = get_settings().path_search_limit
    for examined, vertices in enumerate(nx.all_simple_paths(skeleton, a, b)):
        if examined >= limit:
            raise SearchBudgetExceeded(f"More than {limit} paths between {a!r} and {b!r}")
        path = Path.from_vertices(g, vertices)
        if is_active(g, path, first) and is_active(g, path, second):
            return True
    return False


def build_ordering_graph(
    g: ScopedGraph, x_prime: Iterable[str], z: Iterable[str], refine: bool = False
) -> OrderingGraph:
    """Ordering graph for (X', Z). With refine, context -> Z edges are added until stable
    wherever a Z - C path is active both given the closure of the contexts and decisions
    upstream of them in the graph and given the closure of all of C' ∪ X'."""
    x_prime, z, c_prime = _split_sets(g, x_prime, z)
    h = nx.DiGraph()
    vertices = x_prime | z | c_prime
    h.add_nodes_from(sorted(vertices))
    for x in sorted(x_prime):
        for p in sorted(g.parents(x)):
            h.add_edge(p, x)
        for v in sorted(vertices & g.descendants(x) - {x}):
            h.add_edge(x, v)
    if refine:
        full = closure(g, c_prime | x_prime)
        changed = True
        while changed:
            changed = False
            for c in sorted(c_prime):
                for target in sorted(z):
                    if h.has_edge(c, target):
                        continue
                    upstream = nx.ancestors(h, c) | nx.ancestors(h, target) | {c, target}
                    local = closure(g, (c_prime | x_prime) & upstream)
                    if _activated_by_both(g, target, c, local, full):
                        h.add_edge(c, target)
                        changed = True
    return OrderingGraph(x_prime=x_prime, z=z, c_prime=c_prime, graph=nx.freeze(h))


def _condition_one(g: ScopedGraph, x_prime: frozenset, c_prime: frozenset) -> bool:
    if not x_prime:
        return True
    return d_separated(g, g.utility, {PolicyNode(x) for x in x_prime}, closure(g, x_prime | c_prime))


def _first_condition_two_violation(
    g: ScopedGraph, x_prime: frozenset, z: frozenset, c_prime: frozenset, ordering: tuple[str, ...]
) -> Optional[str]:
    position = {v: i for i, v in enumerate(ordering)}
    for c in ordering:
        if c not in c_prime:
            continue
        earlier = set(ordering[:position[c]])
        z_before = z & earlier
        if not z_before:
            continue
        given = closure(g, (x_prime | c_prime) & earlier)
        if not d_separated(g, c, z_before, given):
            return c
    return None


def lb_factorizable(
    g: ScopedGraph, x_prime: Iterable[str], z: Iterable[str], refine: bool = False
) -> Optional[FactorizationWitness]:
    """Lexicographically first ordering satisfying conditions I–III, if any.

    Condition III holds exactly for the topological orders of the ordering graph, so
    only those are enumerated. Condition II is checked against Z alone.
    """
    x_prime, z, c_prime = _split_sets(g, x_prime, z)
    if not _condition_one(g, x_prime, c_prime):
        logger.debug(f"Condition I fails for X'={sorted(x_prime)}")
        return None
    h = build_ordering_graph(g, x_prime, z, refine=refine)
    if not h.is_acyclic():
        return None
    limit = get_settings().ordering_limit
    for examined, ordering in enumerate(lexicographic_topological_orders(h.graph, limit + 1)):
        if examined >= limit:
            raise SearchBudgetExceeded(f"More than {limit} orderings for X'={sorted(x_prime)}, Z={sorted(z)}")
        violation = _first_condition_two_violation(g, x_prime, z, c_prime, ordering)
        if violation is None:
            return FactorizationWitness(x_prime=x_prime, z=z, c_prime=c_prime, ordering=ordering)
        logger.debug(f"Ordering {ordering} violates condition II at {violation}")
    return None


def descendant_in_h_path(g: ScopedGraph, z: str, v: str, x_prime: Iterable[str]) -> Optional[Path]:
    """Path z -> X ⇢ v with X ∈ X', which exists whenever v descends from z in the ordering graph."""
    for x in sorted(set(x_prime) & g.children(z)):
        tail = directed_path(g, x, v, avoid=[z])
        if tail is not None:
            return Path((z,) + tail.vertices, (True,) + tail.forward)
    return None


def _extraction_ordering(h: OrderingGraph, z0: str) -> tuple[str, ...]:
    below = h.descendants(z0) - {z0}
    above = h.vertices - below - {z0}
    head = next(lexicographic_topological_orders(h.graph.subgraph(above), 1), ())
    tail = next(lexicographic_topological_orders(h.graph.subgraph(below), 1), ())
    return tuple(head) + (z0,) + tuple(tail)


def _detour(g: ScopedGraph, v: str, given: frozenset) -> Optional[Path]:
    best: Optional[Path] = None
    for s in sorted(given):
        p = directed_path(g, v, s)
        if p is not None and (best is None or len(p) < len(best)):
            best = p
    return best


def _loop_erase(steps: list[tuple[str, Optional[bool]]]) -> Path:
    vertices: list[str] = []
    forward: list[bool] = []
    for v, f in steps:
        if v in vertices:
            j = vertices.index(v)
            del vertices[j + 1:]
            del forward[j:]
            continue
        if vertices:
            forward.append(f)
        vertices.append(v)
    return Path(tuple(vertices), tuple(forward))


def extract_paths_from_nonfactorizability(
    g: ScopedGraph, z0: str, x_prime: Iterable[str]
) -> tuple[Path, Path, str]:
    """Info path m: z0 - target and control path d: X ⇢ target for a non-factorizable (X', {z0}).

    Returns (m, d, target) where target is the utility or a member of C'.
    """
    x_prime = frozenset(x_prime)
    report = thm1_conditions(g)
    if not all(report.a.values()) or not all(report.b.values()):
        raise PreconditionViolated("Conditions A and B must hold")
    if not (g.children(z0) & set(g.decisions)) <= x_prime:
        raise PreconditionViolated(f"X' must contain every decision child of {z0}")
    x_prime, z, c_prime = _split_sets(g, x_prime, {z0})
    if lb_factorizable(g, x_prime, z) is not None:
        raise PreconditionViolated(f"X'={sorted(x_prime)}, Z={{{z0}}} are LB-factorizable")

    full = closure(g, x_prime | c_prime)
    candidates = sorted(x_prime & g.children(z0))

    if not _condition_one(g, x_prime, c_prime):
        for x in candidates:
            m = active_path_witness(g, z0, g.utility, full, exclude=[x])
            d = directed_path(g, x, g.utility)
            if m is not None and d is not None:
                return m, d, g.utility
        raise LemmaHypothesisFailed(f"Condition I fails but no info path leaves {z0} towards the utility")

    h = build_ordering_graph(g, x_prime, z)
    ordering = _extraction_ordering(h, z0)
    violated = _first_condition_two_violation(g, x_prime, z, c_prime, ordering)
    if violated is None:
        raise LemmaHypothesisFailed("The extraction ordering satisfies every condition")
    position = {v: i for i, v in enumerate(ordering)}
    given = closure(g, {v for v in x_prime | c_prime if position[v] < position[violated]})
    witness = active_path_witness(g, z0, violated, given)
    if witness is None:
        raise LemmaHypothesisFailed(f"No active path from {z0} to {violated}")

    steps: list[tuple[str, Optional[bool]]] = [(witness.start, None)]
    for i in range(1, len(witness.vertices)):
        v, f = witness.vertices[i], witness.forward[i - 1]
        steps.append((v, f))
        if i < len(witness.vertices) - 1 and f and not witness.forward[i] and v not in given:
            detour = _detour(g, v, given)
            if detour is None:
                raise LemmaHypothesisFailed(f"Collider {v} has no descendant in the conditioning set")
            steps += [(w, True) for w in detour.vertices[1:]]
            steps += [(w, False) for w in reversed(detour.vertices[:-1])]

    after_z0 = {c for c in c_prime if position[c] > position[z0]}
    cut = next(i for i, (v, _) in enumerate(steps) if i > 0 and v in after_z0)
    m = _loop_erase(steps[:cut + 1])
    if not is_active(g, m, full):
        raise LemmaHypothesisFailed(f"Extracted path {m} is blocked given {sorted(full)}")
    target = m.end
    for x in candidates:
        d = directed_path(g, x, target)
        if d is not None:
            return m, d, target
    raise LemmaHypothesisFailed(f"No control path from X' to {target}")


def minimal_context_separator_check(
    g: ScopedGraph, z: str, predecessors: Iterable[str], fixed: Iterable[str], u_prime: Iterable[str] = ()
) -> bool:
    predecessors = frozenset(predecessors)
    implied = closure(g, fixed)
    outside = predecessors - implied
    if not outside:
        return True
    return d_separated(g, z, outside, (predecessors & implied) | frozenset(u_prime))


def fix_point(g: ScopedGraph, witness: FactorizationWitness, t: Iterable[str]) -> frozenset[str]:
    current = frozenset(t)
    while True:
        step = set(closure(g, current))
        for z in sorted(witness.z):
            if minimal_context_separator_check(g, z, witness.before(z), current, witness.u_prime):
                step.add(z)
        step = frozenset(step)
        if step == current:
            return current
        current = step


def _lb2_holds(g: ScopedGraph, witness: FactorizationWitness) -> bool:
    for x in witness.x_prime:
        contexts = g.contexts(x)
        if not fix_point(g, witness, contexts - witness.z) >= contexts:
            return False
    return True


def _grow(g: ScopedGraph, x_prime: frozenset, z: frozenset) -> list[tuple[frozenset, frozenset]]:
    out = []
    for d in g.decisions:
        if d not in x_prime and d not in z and g.contexts(d) & (z | x_prime):
            out.append((x_prime | {d}, z))
    contexts = frozenset().union(*(g.contexts(x) for x in x_prime))
    for c in sorted(contexts - x_prime - z):
        out.append((x_prime, z | {c}))
    return out


def immaterial_by_lb2(g: ScopedGraph, decision: str, context: str) -> Optional[FactorizationWitness]:
    """Search small (X', Z) candidates, grown from ({decision}, {context}), for an LB-2 certificate."""
    _require_context(g, decision, context)
    max_additions = get_settings().lb2_max_additions
    start = (frozenset({decision}), frozenset({context}))
    frontier = [start]
    seen = {start}
    skipped = 0
    for depth in range(max_additions + 1):
        next_frontier = []
        for x_prime, z in frontier:
            try:
                witness = lb_factorizable(g, x_prime, z)
            except SearchBudgetExceeded:
                skipped += 1
                logger.warning(f"Skipping LB-2 candidate X'={sorted(x_prime)}, Z={sorted(z)}: ordering budget")
                continue
            if witness is not None and _lb2_holds(g, witness):
                logger.info(f"LB-2 certificate for {context} -> {decision}: {witness.describe()}")
                return witness
            if depth < max_additions:
                for candidate in _grow(g, x_prime, z):
                    if candidate not in seen:
                        seen.add(candidate)
                        next_frontier.append(candidate)
        frontier = sorted(next_frontier, key=lambda p: (sorted(p[0]), sorted(p[1])))
    if skipped:
        raise SearchBudgetExceeded(f"{skipped} LB-2 candidates exceeded the ordering budget")
    return None


def check_graph(g: ScopedGraph, with_paths: bool = True) -> CriterionReport:
    """Verdict for every context edge, plus solubility and the main-theorem conditions."""
    from .materiality_builder import build_materiality_paths

    warnings: list[str] = []
    thm1 = thm1_conditions(g)
    decided = True
    try:
        soluble = solubility(g)
    except SearchBudgetExceeded:
        soluble = None
        decided = False
        warnings.append("solubility search exceeded the ordering limit")

    edges = []
    for x in g.decisions:
        for z in sorted(g.contexts(x)):
            single = single_decision_criterion(g, x, z)
            if single == SingleDecisionVerdict.immaterial:
                edges.append(EdgeReport(x, z, EdgeVerdict.immaterial_single_decision, single))
                continue
            if thm1.all_hold:
                paths = build_materiality_paths(g, x, z) if with_paths else None
                edges.append(EdgeReport(x, z, EdgeVerdict.material_by_thm1, single, paths=paths))
                continue
            try:
                witness = immaterial_by_lb2(g, x, z)
            except SearchBudgetExceeded as e:
                edges.append(EdgeReport(x, z, EdgeVerdict.unknown, single, note=str(e)))
                warnings.append(f"{z} -> {x}: {e}")
                continue
            verdict = EdgeVerdict.immaterial_lb2 if witness is not None else EdgeVerdict.unknown
            edges.append(EdgeReport(x, z, verdict, single, witness=witness))
    return CriterionReport(
        edges=edges, soluble_ordering=soluble, thm1=thm1, warnings=warnings, solubility_decided=decided
    )
