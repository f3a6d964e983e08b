from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Optional

import networkx as nx
from pydantic import BaseModel, Field, ValidationError

from .errors import (
    CycleError,
    DecisionParentMismatch,
    GraphError,
    MalformedGraph,
    MissingUtility,
    UnknownNode,
)

logger = logging.getLogger(__name__)


class NodeKind(str, Enum):
    chance = "chance"
    decision = "decision"
    utility = "utility"


class Relation(str, Enum):
    parents = "parents"
    children = "children"
    ancestors = "ancestors"
    descendants = "descendants"


class Shape(str, Enum):
    chain = "chain"
    fork = "fork"
    collider = "collider"


# JSON document schema

class NodeSpec(BaseModel):
    name: str = Field(min_length=1)
    kind: NodeKind


class ScopedGraphDocument(BaseModel):
    nodes: list[NodeSpec] = []
    edges: list[tuple[str, str]] = []
    contexts: dict[str, list[str]] = {}
    utility: Optional[str] = None


class ScopedGraph:
    """A DAG of chance, decision and utility nodes whose decision parents are exactly their contexts.

    Instances are immutable. Node iteration order is always lexicographic so that
    every search built on top of the graph breaks ties the same way.
    """

    def __init__(
        self,
        kinds: dict[str, NodeKind],
        edges: Iterable[tuple[str, str]],
        contexts: dict[str, Iterable[str]],
        utility: Optional[str],
    ):
        if not utility or utility not in kinds:
            raise MissingUtility("Scoped graph needs a utility node")
        utilities = [n for n, k in kinds.items() if k == NodeKind.utility]
        if utilities != [utility]:
            raise MissingUtility(f"Expected exactly one utility node named {utility!r}, found {sorted(utilities)}")

        graph = nx.DiGraph()
        graph.add_nodes_from(sorted(kinds))
        seen: set[tuple[str, str]] = set()
        for a, b in edges:
            for v in (a, b):
                if v not in kinds:
                    raise UnknownNode(v)
            if a == b:
                raise MalformedGraph(f"Self-loop on {a!r}")
            if (a, b) in seen:
                raise MalformedGraph(f"Duplicate edge {a!r} -> {b!r}")
            seen.add((a, b))
        graph.add_edges_from(sorted(seen))

        if graph.out_degree(utility):
            raise MalformedGraph(f"Utility node {utility!r} has children")

        ctx: dict[str, frozenset[str]] = {}
        for decision, members in contexts.items():
            if decision not in kinds:
                raise UnknownNode(decision)
            if kinds[decision] != NodeKind.decision:
                raise DecisionParentMismatch(f"Contexts given for non-decision {decision!r}")
            for c in members:
                if c not in kinds:
                    raise UnknownNode(c)
            ctx[decision] = frozenset(members)
        for decision in (n for n, k in kinds.items() if k == NodeKind.decision):
            expected = ctx.setdefault(decision, frozenset())
            actual = frozenset(graph.predecessors(decision))
            if actual != expected:
                raise DecisionParentMismatch(
                    f"Parents of {decision!r} are {sorted(actual)} but contexts are {sorted(expected)}"
                )

        if not nx.is_directed_acyclic_graph(graph):
            cycle = nx.find_cycle(graph)
            raise CycleError(f"Graph has a cycle: {cycle}")

        self._kinds = dict(kinds)
        self._contexts = ctx
        self._utility = utility
        self._graph = nx.freeze(graph)
        self._nodes = tuple(sorted(kinds))
        self._decisions = tuple(n for n in self._nodes if kinds[n] == NodeKind.decision)
        self._ancestors: dict[str, frozenset[str]] = {}
        self._descendants: dict[str, frozenset[str]] = {}

    # construction helpers

    @classmethod
    def from_document(cls, doc: ScopedGraphDocument) -> "ScopedGraph":
        kinds: dict[str, NodeKind] = {}
        for spec in doc.nodes:
            if spec.name in kinds:
                raise MalformedGraph(f"Duplicate node name {spec.name!r}")
            kinds[spec.name] = spec.kind
        return cls(kinds, doc.edges, doc.contexts, doc.utility)

    @classmethod
    def build(
        cls,
        chance: Iterable[str] = (),
        decisions: Optional[dict[str, Iterable[str]]] = None,
        utility: str = "Y",
        edges: Iterable[tuple[str, str]] = (),
    ) -> "ScopedGraph":
        """Convenience constructor: context edges are added from the decisions map."""
        decisions = {d: list(c) for d, c in (decisions or {}).items()}
        kinds = {n: NodeKind.chance for n in chance}
        kinds.update({d: NodeKind.decision for d in decisions})
        kinds[utility] = NodeKind.utility
        all_edges = set(edges)
        for d, members in decisions.items():
            all_edges.update((c, d) for c in members)
        return cls(kinds, sorted(all_edges), decisions, utility)

    def to_document(self) -> ScopedGraphDocument:
        return ScopedGraphDocument(
            nodes=[NodeSpec(name=n, kind=self._kinds[n]) for n in self._nodes],
            edges=sorted(self._graph.edges()),
            contexts={d: sorted(self._contexts[d]) for d in self._decisions},
            utility=self._utility,
        )

    def with_contexts(self, decision: str, contexts: Iterable[str]) -> "ScopedGraph":
        """Same graph with one decision's context set replaced (a scope edit)."""
        self._require(decision)
        contexts = frozenset(contexts)
        edges = [(a, b) for a, b in self._graph.edges() if b != decision]
        edges += [(c, decision) for c in contexts]
        new_contexts = dict(self._contexts)
        new_contexts[decision] = contexts
        return ScopedGraph(self._kinds, edges, new_contexts, self._utility)

    # accessors

    @property
    def nodes(self) -> tuple[str, ...]:
        return self._nodes

    @property
    def decisions(self) -> tuple[str, ...]:
        return self._decisions

    @property
    def utility(self) -> str:
        return self._utility

    @property
    def digraph(self) -> nx.DiGraph:
        return self._graph

    def kind(self, v: str) -> NodeKind:
        self._require(v)
        return self._kinds[v]

    def is_decision(self, v: str) -> bool:
        return self._kinds.get(v) == NodeKind.decision

    def contexts(self, decision: str) -> frozenset[str]:
        self._require(decision)
        if decision not in self._contexts:
            raise GraphError(f"{decision!r} is not a decision")
        return self._contexts[decision]

    def all_contexts(self, excluding: Iterable[str] = ()) -> frozenset[str]:
        skip = set(excluding)
        return frozenset().union(*(self._contexts[d] for d in self._decisions if d not in skip))

    def has_edge(self, a: str, b: str) -> bool:
        return self._graph.has_edge(a, b)

    def parents(self, v: str) -> frozenset[str]:
        self._require(v)
        return frozenset(self._graph.predecessors(v))

    def children(self, v: str) -> frozenset[str]:
        self._require(v)
        return frozenset(self._graph.successors(v))

    def ancestors(self, v: str) -> frozenset[str]:
        """Reflexive: includes v."""
        self._require(v)
        if v not in self._ancestors:
            self._ancestors[v] = frozenset(nx.ancestors(self._graph, v)) | {v}
        return self._ancestors[v]

    def descendants(self, v: str) -> frozenset[str]:
        """Reflexive: includes v."""
        self._require(v)
        if v not in self._descendants:
            self._descendants[v] = frozenset(nx.descendants(self._graph, v)) | {v}
        return self._descendants[v]

    def ancestors_of_set(self, vs: Iterable[str]) -> frozenset[str]:
        return frozenset().union(*(self.ancestors(v) for v in vs))

    def __contains__(self, v: object) -> bool:
        return v in self._kinds

    def __repr__(self) -> str:
        return f"ScopedGraph(nodes={list(self._nodes)}, edges={sorted(self._graph.edges())})"

    def _require(self, v: str) -> None:
        if v not in self._kinds:
            raise UnknownNode(v)


@dataclass(frozen=True)
class Path:
    """A simple path, stored as its vertices plus the direction of every edge.

    forward[i] is True when the i-th edge points from vertices[i] to vertices[i + 1].
    """

    vertices: tuple[str, ...]
    forward: tuple[bool, ...]

    def __post_init__(self):
        if len(self.vertices) == 0:
            raise MalformedGraph("A path needs at least one vertex")
        if len(self.forward) != len(self.vertices) - 1:
            raise MalformedGraph("Edge directions do not match the vertex count")
        if len(set(self.vertices)) != len(self.vertices):
            raise MalformedGraph(f"Path repeats a vertex: {self.vertices}")

    @classmethod
    def from_vertices(cls, g: ScopedGraph, vertices: Iterable[str]) -> "Path":
        vertices = tuple(vertices)
        forward = []
        for a, b in zip(vertices, vertices[1:]):
            if g.has_edge(a, b):
                forward.append(True)
            elif g.has_edge(b, a):
                forward.append(False)
            else:
                for v in (a, b):
                    if v not in g:
                        raise UnknownNode(v)
                raise MalformedGraph(f"{a!r} and {b!r} are not adjacent")
        return cls(vertices, tuple(forward))

    @property
    def start(self) -> str:
        return self.vertices[0]

    @property
    def end(self) -> str:
        return self.vertices[-1]

    def __len__(self) -> int:
        return len(self.forward)

    def __iter__(self) -> Iterator[str]:
        return iter(self.vertices)

    def __contains__(self, v: object) -> bool:
        return v in self.vertices

    def index(self, v: str) -> int:
        return self.vertices.index(v)

    def shape(self, position: int) -> Shape:
        """Local shape of the internal vertex at the given position."""
        if not 0 < position < len(self.vertices) - 1:
            raise IndexError(f"{position} is not an internal position")
        into_from_left = self.forward[position - 1]
        into_from_right = not self.forward[position]
        if into_from_left and into_from_right:
            return Shape.collider
        if not into_from_left and not into_from_right:
            return Shape.fork
        return Shape.chain

    @property
    def shapes(self) -> tuple[Shape, ...]:
        return tuple(self.shape(i) for i in range(1, len(self.vertices) - 1))

    def colliders(self) -> list[str]:
        return [self.vertices[i] for i in range(1, len(self.vertices) - 1) if self.shape(i) == Shape.collider]

    def is_directed(self) -> bool:
        return all(self.forward)

    def edges(self) -> list[tuple[str, str]]:
        return [(a, b) if f else (b, a) for a, b, f in zip(self.vertices, self.vertices[1:], self.forward)]

    def subpath(self, i: int, j: int) -> "Path":
        return Path(self.vertices[i:j + 1], self.forward[i:j])

    def reversed(self) -> "Path":
        return Path(self.vertices[::-1], tuple(not f for f in reversed(self.forward)))

    def parent_along(self, v: str) -> Optional[str]:
        """Neighbour of v on the path with an edge into v, nearest the start."""
        i = self.index(v)
        if i > 0 and self.forward[i - 1]:
            return self.vertices[i - 1]
        if i < len(self.forward) and not self.forward[i]:
            return self.vertices[i + 1]
        return None

    def __str__(self) -> str:
        out = self.vertices[0]
        for v, f in zip(self.vertices[1:], self.forward):
            out += (" -> " if f else " <- ") + v
        return out


def parse_scoped_graph(text: str | bytes) -> ScopedGraph:
    """Parse and validate a scoped-graph JSON document."""
    try:
        doc = ScopedGraphDocument.model_validate_json(text)
    except ValidationError as e:
        raise GraphError(f"Invalid scoped graph document: {e.error_count()} schema errors") from e
    g = ScopedGraph.from_document(doc)
    logger.debug(f"Parsed scoped graph with {len(g.nodes)} nodes and {g.digraph.number_of_edges()} edges")
    return g


def dump_scoped_graph(g: ScopedGraph) -> str:
    return json.dumps(g.to_document().model_dump(mode="json"), indent=2, sort_keys=True)


def relatives(g: ScopedGraph, v: str, relation: Relation | str) -> frozenset[str]:
    relation = Relation(relation)
    if relation == Relation.parents:
        return g.parents(v)
    if relation == Relation.children:
        return g.children(v)
    if relation == Relation.ancestors:
        return g.ancestors(v)
    return g.descendants(v)


def directed_path(g: ScopedGraph, a: str, b: str, avoid: Iterable[str] = ()) -> Optional[Path]:
    """Shortest directed path a ⇢ b, lexicographically smallest among the shortest.

    Breadth-first search expanding successors in sorted order discovers every vertex
    along its lexicographically first shortest path.
    """
    for v in (a, b):
        if v not in g:
            raise UnknownNode(v)
    blocked = set(avoid)
    if a in blocked or b in blocked:
        return None
    previous: dict[str, Optional[str]] = {a: None}
    queue = deque([a])
    while queue:
        v = queue.popleft()
        if v == b:
            break
        for w in sorted(g.children(v)):
            if w not in previous and w not in blocked:
                previous[w] = v
                queue.append(w)
    if b not in previous:
        return None
    out = [b]
    while previous[out[-1]] is not None:
        out.append(previous[out[-1]])
    out.reverse()
    return Path(tuple(out), (True,) * (len(out) - 1))


def lexicographic_topological_orders(graph: nx.DiGraph, limit: Optional[int] = None) -> Iterator[tuple[str, ...]]:
    """Yield topological orders of a DAG in lexicographic order, at most `limit` of them."""
    indegree = {v: graph.in_degree(v) for v in graph.nodes}
    order: list[str] = []
    produced = 0

    def extend() -> Iterator[tuple[str, ...]]:
        nonlocal produced
        if len(order) == len(indegree):
            produced += 1
            yield tuple(order)
            return
        for v in sorted(v for v, d in indegree.items() if d == 0 and v not in placed):
            if limit is not None and produced >= limit:
                return
            placed.add(v)
            order.append(v)
            for w in graph.successors(v):
                indegree[w] -= 1
            yield from extend()
            for w in graph.successors(v):
                indegree[w] += 1
            order.pop()
            placed.discard(v)

    placed: set[str] = set()
    yield from extend()


def topological_orders(g: ScopedGraph, limit: int) -> list[tuple[str, ...]]:
    return list(lexicographic_topological_orders(g.digraph, limit))
