from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .errors import GraphError, SearchBudgetExceeded, UnknownNode
from .graph_core import Path, ScopedGraph, Shape
from .settings import get_settings

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class PolicyNode:
    """Virtual parentless parent of a decision. Exists only inside separation queries."""

    decision: str

    def __str__(self) -> str:
        return f"pi[{self.decision}]"


QueryNode = Union[str, PolicyNode]


def _as_set(nodes: QueryNode | Iterable[QueryNode]) -> set[QueryNode]:
    if isinstance(nodes, (str, PolicyNode)):
        return {nodes}
    return set(nodes)


def _check(g: ScopedGraph, nodes: Iterable[QueryNode]) -> None:
    for v in nodes:
        if isinstance(v, PolicyNode):
            if not g.is_decision(v.decision):
                raise UnknownNode(v)
        elif v not in g:
            raise UnknownNode(v)


def closure(g: ScopedGraph, w: Iterable[str]) -> frozenset[str]:
    """Implied variables: w plus every decision whose whole context set is implied."""
    result = set(w)
    _check(g, result)
    changed = True
    while changed:
        changed = False
        for d in g.decisions:
            if d not in result and g.contexts(d) <= result:
                result.add(d)
                changed = True
    return frozenset(result)


def observation_closure(g: ScopedGraph, z: str) -> frozenset[str]:
    """⌈(X(S) ∪ C_{X(S)\\{z}}) \\ {z}⌉, the conditioning set used for z's information paths."""
    _check(g, [z])
    observed = set(g.decisions) | g.all_contexts(excluding=[z])
    observed.discard(z)
    return closure(g, observed)


def _reachable(g: ScopedGraph, sources: set[QueryNode], given: frozenset[str]) -> set[QueryNode]:
    """Bayes-ball traversal over (node, direction) states.

    "up" means the trail arrived from a child, "down" from a parent.
    """
    activated = g.ancestors_of_set(given)
    reached: set[QueryNode] = set()
    stack: list[tuple[str, str]] = []
    for s in sources:
        if isinstance(s, PolicyNode):
            reached.add(s)
            stack.append((s.decision, "down"))
        elif s not in given:
            stack.append((s, "up"))

    visited: set[tuple[str, str]] = set()
    while stack:
        v, direction = stack.pop()
        if (v, direction) in visited:
            continue
        visited.add((v, direction))
        if v not in given:
            reached.add(v)
        if direction == "up":
            if v in given:
                continue
            stack.extend((p, "up") for p in g.parents(v))
            if g.is_decision(v):
                reached.add(PolicyNode(v))
            stack.extend((c, "down") for c in g.children(v))
        else:
            if v not in given:
                stack.extend((c, "down") for c in g.children(v))
            if v in activated:
                stack.extend((p, "up") for p in g.parents(v))
                if g.is_decision(v):
                    reached.add(PolicyNode(v))
    return reached


def d_separated(
    g: ScopedGraph,
    sources: QueryNode | Iterable[QueryNode],
    targets: QueryNode | Iterable[QueryNode],
    given: Iterable[str] = (),
) -> bool:
    """True iff every path between sources and targets is blocked by `given`.

    A source or target that is itself conditioned on counts as blocked.
    """
    sources, targets, given = _as_set(sources), _as_set(targets), frozenset(given)
    _check(g, sources | targets | given)
    live_targets = {t for t in targets if t not in given}
    if not live_targets:
        return True
    reached = _reachable(g, sources, given)
    return not (reached & live_targets)


def policy_relevance(g: ScopedGraph, decision: str, given: Iterable[str] = ()) -> bool:
    """Is the virtual policy parent of `decision` d-connected to the utility given the set?"""
    if not g.is_decision(decision):
        raise GraphError(f"{decision!r} is not a decision")
    return not d_separated(g, PolicyNode(decision), g.utility, given)


def is_active(g: ScopedGraph, path: Path, given: Iterable[str]) -> bool:
    given = frozenset(given)
    if path.start in given or path.end in given:
        return False
    activated = g.ancestors_of_set(given)
    for i in range(1, len(path.vertices) - 1):
        v = path.vertices[i]
        if path.shape(i) == Shape.collider:
            if v not in activated:
                return False
        elif v in given:
            return False
    return True


def active_path_witness(
    g: ScopedGraph,
    a: str,
    b: str,
    given: Iterable[str] = (),
    exclude: Iterable[str] = (),
    limit: Optional[int] = None,
) -> Optional[Path]:
    """Shortest active path a — b given the set, lexicographically smallest among the shortest.

    Breadth-first over partial simple paths, extending in sorted neighbour order and
    pruning any prefix whose last internal vertex already blocks.
    """
    given = frozenset(given)
    _check(g, {a, b} | given)
    blocked = set(exclude)
    if a in given or b in given or a in blocked or b in blocked:
        return None
    if a == b:
        return Path((a,), ())
    limit = limit or get_settings().path_search_limit
    activated = g.ancestors_of_set(given)

    queue: deque[tuple[tuple[str, ...], tuple[bool, ...]]] = deque([((a,), ())])
    expanded = 0
    while queue:
        vertices, forward = queue.popleft()
        expanded += 1
        if expanded > limit:
            raise SearchBudgetExceeded(f"Active path search {a!r} - {b!r} examined more than {limit} prefixes")
        v = vertices[-1]
        neighbours = sorted(g.parents(v) | g.children(v))
        for w in neighbours:
            if w in vertices or w in blocked:
                continue
            edge_forward = g.has_edge(v, w)
            if len(vertices) > 1:
                collider = forward[-1] and not edge_forward
                if collider and v not in activated:
                    continue
                if not collider and v in given:
                    continue
            if w == b:
                return Path(vertices + (w,), forward + (edge_forward,))
            queue.append((vertices + (w,), forward + (edge_forward,)))
    return None
