"""Materiality paths and the SCM built on them.

Every vertex of the synthesized model is a concatenation of one component per
materiality path passing through it, in path order: the control path first, then the
info paths by index, then the auxiliary paths. Components of width zero are omitted.
The utility is the sum of one 0/1 term per info path.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .bitstrings import adversarial_forks, compatible, consistent, encrypt_forks, exp2_tower
from .errors import (
    DomainExplosion,
    LemmaHypothesisFailed,
    NoControlPath,
    PreconditionViolated,
)
from .graph_core import NodeKind, Path, ScopedGraph, Shape, directed_path
from .scm_engine import (
    Compatible,
    Concat,
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
    reference_policy,
)
from .separation import active_path_witness, is_active, observation_closure
from .settings import get_settings

logger = logging.getLogger(__name__)

__all__ = [
    "MaterialityPaths",
    "SynthesisParams",
    "adversarial_forks",
    "build_materiality_paths",
    "build_materiality_scm",
    "chance_parent",
    "compatible",
    "compliant_policy",
    "compute_params",
    "consistent",
    "encrypt_forks",
    "info_path",
]

PathKey = tuple
CONTROL: PathKey = ("d",)


def info_key(i: int) -> PathKey:
    return ("m", i)


def aux_key(i: int, j: int) -> PathKey:
    return ("r", i, j)


@dataclass(frozen=True)
class IndexedDecision:
    index: int
    decision: str
    context: str


@dataclass
class MaterialityPaths:
    target_decision: str
    target_context: str
    a: str
    d: Path
    decisions: list[IndexedDecision]
    info: dict[int, Path] = field(default_factory=dict)
    truncated: dict[int, Path] = field(default_factory=dict)
    intersections: dict[int, str] = field(default_factory=dict)
    forks: dict[int, list[str]] = field(default_factory=dict)
    colliders: dict[int, list[str]] = field(default_factory=dict)
    auxiliary: dict[tuple[int, int], Path] = field(default_factory=dict)

    @property
    def i_min(self) -> int:
        return self.decisions[0].index

    @property
    def i_max(self) -> int:
        return self.decisions[-1].index

    @property
    def indices(self) -> list[int]:
        return [x.index for x in self.decisions]

    def all_paths(self) -> list[tuple[PathKey, Path]]:
        out: list[tuple[PathKey, Path]] = [(CONTROL, self.d)]
        out += [(info_key(i), self.truncated[i]) for i in self.indices]
        out += [(aux_key(i, j), self.auxiliary[(i, j)]) for i, j in sorted(self.auxiliary)]
        return out

    def entering(self, i: int) -> list[PathKey]:
        """Control path plus the auxiliary paths of other info paths that pass through T_i."""
        t = self.intersections[i]
        keys = [CONTROL]
        for (i2, j2), r in sorted(self.auxiliary.items()):
            if i2 != i and t in r.vertices[1:-1]:
                keys.append(aux_key(i2, j2))
        return keys

    def describe(self) -> dict:
        return {
            "target": {"decision": self.target_decision, "context": self.target_context},
            "a": self.a,
            "control_path": str(self.d),
            "i_min": self.i_min,
            "i_max": self.i_max,
            "info_paths": {
                str(i): {
                    "context": x.context,
                    "decision": x.decision,
                    "full": str(self.info[i]),
                    "truncated": str(self.truncated[i]),
                    "intersection": self.intersections[i],
                    "forks": self.forks[i],
                    "colliders": self.colliders[i],
                    "auxiliary": [str(self.auxiliary[(i, j)]) for j in range(1, len(self.colliders[i]) + 1)],
                }
                for i, x in zip(self.indices, self.decisions)
            },
        }


@dataclass(frozen=True)
class SynthesisParams:
    k: int
    b: int
    c: int
    k_override: Optional[int] = None

    @property
    def overridden(self) -> bool:
        return self.k_override is not None

    @property
    def warning(self) -> Optional[str]:
        if not self.overridden:
            return None
        return f"k overridden to {self.k_override}: the counting guarantees behind the construction no longer apply"


def chance_parent(g: ScopedGraph, z: str) -> str:
    """Smallest non-decision context of decision z outside z's observation closure."""
    if not g.is_decision(z):
        raise PreconditionViolated(f"{z!r} is not a decision")
    candidates = _chance_parents(g, z)
    if not candidates:
        raise LemmaHypothesisFailed(f"Every context of {z} is implied by the other observations")
    return candidates[0]


def _chance_parents(g: ScopedGraph, z: str) -> list[str]:
    given = observation_closure(g, z)
    return [n for n in sorted(g.contexts(z)) if not g.is_decision(n) and n not in given]


def info_path(g: ScopedGraph, z: str) -> Path:
    """Path z - Y active given z's observation closure; a decision z starts with z <- N."""
    given = observation_closure(g, z)
    if not g.is_decision(z):
        path = active_path_witness(g, z, g.utility, given)
        if path is None:
            raise LemmaHypothesisFailed(f"No active path from {z} to the utility")
        return path
    for n in _chance_parents(g, z):
        tail = active_path_witness(g, n, g.utility, given, exclude=[z])
        if tail is not None:
            return Path((z,) + tail.vertices, (False,) + tail.forward)
    raise LemmaHypothesisFailed(f"No chance parent of {z} starts an active path to the utility")


def _decompose(m: Path) -> tuple[list[str], list[str]]:
    forks, colliders = [], []
    if len(m) and not m.forward[0]:
        colliders.append(m.start)
    for pos in range(1, len(m.vertices) - 1):
        shape = m.shape(pos)
        if shape == Shape.fork:
            forks.append(m.vertices[pos])
        elif shape == Shape.collider:
            colliders.append(m.vertices[pos])
    if len(forks) != len(colliders):
        raise LemmaHypothesisFailed(f"Truncated info path {m} does not alternate forks and colliders")
    return forks, colliders


def build_materiality_paths(g: ScopedGraph, decision: str, context: str) -> MaterialityPaths:
    from .criteria import thm1_conditions

    if context not in g.contexts(decision):
        raise PreconditionViolated(f"{context!r} is not a context of {decision!r}")
    if not thm1_conditions(g).all_hold:
        raise PreconditionViolated("Materiality paths need conditions A, B and C to hold")

    a = chance_parent(g, context) if g.is_decision(context) else context
    head = (a, context) if a != context else (context,)
    avoid = (g.parents(decision) - {context}) | set(head)
    tail = directed_path(g, decision, g.utility, avoid=avoid)
    if tail is None:
        raise NoControlPath(f"No directed path from {decision} to the utility avoiding its other parents")
    d = Path.from_vertices(g, head + tail.vertices)

    target_at = d.index(decision)
    indexed = []
    first = -1 if g.is_decision(context) else 0
    for pos, v in enumerate(d.vertices[:-1]):
        if g.is_decision(v):
            index = first + len(indexed)
            if pos == target_at and index != 0:
                raise LemmaHypothesisFailed("Target decision is not indexed 0 on the control path")
            indexed.append(IndexedDecision(index, v, d.vertices[pos - 1]))
    paths = MaterialityPaths(decision, context, a, d, indexed)

    for x in indexed:
        i, z = x.index, x.context
        full = info_path(g, z)
        back = d.vertices[d.index(z)::-1]
        t = 0
        while t + 1 < len(full.vertices) and t + 1 < len(back) and full.vertices[t + 1] == back[t + 1]:
            t += 1
        m = full.subpath(t, len(full.vertices) - 1)
        forks, colliders = _decompose(m)
        paths.info[i] = full
        paths.truncated[i] = m
        paths.intersections[i] = full.vertices[t]
        paths.forks[i] = forks
        paths.colliders[i] = colliders
        for j, w in enumerate(colliders, start=1):
            r = directed_path(g, w, g.utility)
            if r is None:
                raise LemmaHypothesisFailed(f"Collider {w} has no directed path to the utility")
            paths.auxiliary[(i, j)] = r

    _check_paths(g, paths)
    return paths


def _check_paths(g: ScopedGraph, paths: MaterialityPaths) -> None:
    d = paths.d
    if not d.is_directed() or d.end != g.utility:
        raise LemmaHypothesisFailed(f"Control path {d} is not a directed path to the utility")
    if g.is_decision(paths.a):
        raise LemmaHypothesisFailed(f"Control path starts at decision {paths.a}")
    others = g.parents(paths.target_decision) - {paths.target_context}
    if others & set(d.vertices):
        raise LemmaHypothesisFailed(f"Control path contains other parents of {paths.target_decision}")
    for x in paths.decisions:
        i = x.index
        full = paths.info[i]
        if not is_active(g, full, observation_closure(g, x.context)):
            raise LemmaHypothesisFailed(f"Info path {full} is blocked")
        if g.is_decision(x.context):
            n = full.vertices[1]
            if full.forward[0] or g.is_decision(n) or n not in g.contexts(x.context):
                raise LemmaHypothesisFailed(f"Info path {full} does not start at a chance parent")
        t = paths.intersections[i]
        back = d.vertices[d.index(x.context)::-1]
        depth = full.index(t)
        if tuple(full.vertices[:depth + 1]) != tuple(back[:depth + 1]):
            raise LemmaHypothesisFailed(f"Info path {full} leaves the control path before {t}")
        if depth + 1 < len(back) and depth + 1 < len(full.vertices) and full.vertices[depth + 1] == back[depth + 1]:
            raise LemmaHypothesisFailed(f"Intersection node {t} is not the last shared vertex")
    for r in paths.auxiliary.values():
        if not r.is_directed() or r.end != g.utility:
            raise LemmaHypothesisFailed(f"Auxiliary path {r} is not directed to the utility")


def _smallest_k(b: int, c: int) -> int:
    k = 1
    while 2 ** k <= (k + c) * b * c:
        k += 1
    return k


def _bounds(g: ScopedGraph, paths: MaterialityPaths) -> tuple[int, int]:
    b = max((len(g.contexts(x)) for x in g.decisions), default=0)
    through: dict[str, int] = {}
    for _, p in paths.all_paths():
        for v in p.vertices:
            if v != g.utility:
                through[v] = through.get(v, 0) + 1
    return b, max(through.values(), default=0)


def compute_params(g: ScopedGraph, paths: MaterialityPaths, k_override: Optional[int] = None) -> SynthesisParams:
    b, c = _bounds(g, paths)
    if k_override is not None:
        if k_override < 1:
            raise PreconditionViolated("k_override must be a positive integer")
        logger.warning(f"Synthesizing with k={k_override} instead of the guaranteed k={_smallest_k(b, c)}")
        return SynthesisParams(k=k_override, b=b, c=c, k_override=k_override)
    return SynthesisParams(k=_smallest_k(b, c), b=b, c=c)


class _Layout:
    """Widths, offsets and expressions of every (vertex, path) component."""

    def __init__(self, g: ScopedGraph, paths: MaterialityPaths, params: SynthesisParams):
        self.g = g
        self.paths = paths
        self.k = params.k
        self.cap = get_settings().max_variable_bits
        self.routes = dict(paths.all_paths())
        self.order = [key for key, _ in paths.all_paths()]
        self.widths: dict[tuple[str, PathKey], int] = {}
        self.noisy: set[tuple[str, PathKey]] = set()
        self.carried: dict[int, int] = {}
        self._measure()
        self.offsets: dict[tuple[str, PathKey], int] = {}
        self.noise_offsets: dict[tuple[str, PathKey], int] = {}
        self.totals: dict[str, int] = {}
        self.noise_totals: dict[str, int] = {}
        for v in g.nodes:
            offset = noise = 0
            for key in self.order:
                w = self.widths.get((v, key), 0)
                if not w:
                    continue
                self.offsets[(v, key)] = offset
                offset += w
                if (v, key) in self.noisy:
                    self.noise_offsets[(v, key)] = noise
                    noise += w
            if offset > self.cap:
                raise DomainExplosion(f"{v} needs {offset} bits, over the limit of {self.cap}; try a smaller k")
            self.totals[v] = offset
            self.noise_totals[v] = noise

    def _measure(self) -> None:
        d = self.paths.d
        for v in d.vertices[:-1]:
            self.widths[(v, CONTROL)] = self.k
        self.noisy.add((d.start, CONTROL))
        for i in self.paths.indices:
            m = self.paths.truncated[i]
            base = self.k + len(self.paths.entering(i)) - 1
            self.carried[i] = base
            key = info_key(i)
            widths = {0: 1 if not m.forward[0] else 0}
            out = {0: base}
            fork_count = 0
            for pos in range(1, len(m.vertices) - 1):
                shape = m.shape(pos)
                if shape == Shape.fork:
                    fork_count += 1
                    widths[pos] = out[pos] = exp2_tower(fork_count, base, cap=self.cap)
                    self.noisy.add((m.vertices[pos], key))
                elif shape == Shape.collider:
                    widths[pos] = out[pos] = 1
            for pos in range(1, len(m.vertices) - 1):
                if m.shape(pos) == Shape.chain:
                    widths[pos] = out[pos] = self._chain_width(m, pos, out)
            for pos, w in widths.items():
                self.widths[(m.vertices[pos], key)] = w
        for (i, j), r in self.paths.auxiliary.items():
            for v in r.vertices[1:-1]:
                self.widths[(v, aux_key(i, j))] = 1

    def _chain_width(self, m: Path, pos: int, out: dict[int, int]) -> int:
        step = -1 if m.forward[pos - 1] else 1
        source = pos + step
        while source != 0 and m.shape(source) == Shape.chain:
            source += step
        return out[source]

    # expressions

    def ref(self, v: str, key: PathKey) -> ParentRef:
        start = self.offsets[(v, key)]
        return ParentRef(name=v, start=start, stop=start + self.widths[(v, key)])

    def noise(self, v: str, key: PathKey) -> NoiseRef:
        start = self.noise_offsets[(v, key)]
        return NoiseRef(start=start, stop=start + self.widths[(v, key)])

    def sp_out(self, i: int):
        """The information entering T_i, read by a child of T_i."""
        t = self.paths.intersections[i]
        return _concat([self.copy_from(t, key) for key in self.paths.entering(i)])

    def copy_from(self, u: str, key: PathKey):
        """What a child of u along the path reads from u's component."""
        if self.widths.get((u, key), 0):
            return self.ref(u, key)
        if key[0] == "r":
            return self.ref(u, info_key(key[1]))
        if key[0] == "m":
            return self.sp_out(key[1])
        raise LemmaHypothesisFailed(f"{u} carries no component for {key}")

    def component(self, v: str, key: PathKey):
        path = self.routes[key]
        pos = path.index(v)
        if key == CONTROL:
            if pos == 0:
                return self.noise(v, key)
            return self.copy_from(path.vertices[pos - 1], key)
        if key[0] == "r":
            return self.copy_from(path.vertices[pos - 1], key)
        i = key[1]
        if pos == 0:
            inner = _concat([self.component(v, p) for p in self.paths.entering(i)])
            return Index(table=self.copy_from(path.vertices[1], key), key=inner)
        shape = path.shape(pos)
        if shape == Shape.fork:
            return self.noise(v, key)
        if shape == Shape.collider:
            return Index(
                table=self.copy_from(path.vertices[pos + 1], key),
                key=self.copy_from(path.vertices[pos - 1], key),
            )
        parent = path.vertices[pos - 1] if path.forward[pos - 1] else path.vertices[pos + 1]
        return self.copy_from(parent, key)

    def function(self, v: str):
        parts = [self.component(v, key) for key in self.order if self.widths.get((v, key), 0)]
        return _concat(parts)

    def utility_terms(self) -> list:
        y = self.g.utility
        terms = []
        for i in self.paths.indices:
            m = self.paths.truncated[i]
            head = _concat([
                self.copy_from(self.routes[key].vertices[-2], key) for key in self.paths.entering(i)
            ])
            info = self.copy_from(m.vertices[-2], info_key(i))
            if not self.paths.forks[i]:
                terms.append(Equals(left=head, right=info))
                continue
            tail = [
                self.copy_from(self.paths.auxiliary[(i, j)].vertices[-2], aux_key(i, j))
                for j in range(1, len(self.paths.colliders[i]) + 1)
            ]
            terms.append(Compatible(head=head, tail=tail, fork=info))
        return terms


def _concat(parts: list):
    if not parts:
        return Const(bits="")
    if len(parts) == 1:
        return parts[0]
    return Concat(parts=parts)


def build_materiality_scm(g: ScopedGraph, paths: MaterialityPaths, params: SynthesisParams) -> FiniteSCM:
    """Synthesize the materiality SCM; every decision carries its compliant rule as a reference."""
    if _bounds(g, paths) != (params.b, params.c):
        raise PreconditionViolated("Synthesis parameters were computed for different paths")
    layout = _Layout(g, paths, params)
    variables = []
    for v in g.nodes:
        kind = g.kind(v)
        parents = sorted(g.parents(v))
        if kind == NodeKind.utility:
            terms = layout.utility_terms()
            function = terms[0] if len(terms) == 1 else Sum(terms=[Weighted(term=t) for t in terms])
            variables.append(VariableSpec(name=v, kind=kind, parents=parents, function=function))
        elif kind == NodeKind.decision:
            variables.append(VariableSpec(
                name=v, kind=kind, bits=layout.totals[v], parents=parents, reference=layout.function(v)))
        else:
            noise = NoiseSpec(bits=layout.noise_totals[v]) if layout.noise_totals[v] else None
            variables.append(VariableSpec(
                name=v, kind=kind, bits=layout.totals[v], parents=parents, noise=noise,
                function=layout.function(v)))
    notes = {
        "target_decision": paths.target_decision,
        "target_context": paths.target_context,
        "k": str(params.k),
        "compliant_utility": str(paths.i_max - paths.i_min + 1),
    }
    if params.warning:
        notes["warning"] = params.warning
    scm = FiniteSCM(ScmDocument(variables=variables, utility=g.utility, notes=notes))
    logger.info(f"Synthesized materiality SCM for {paths.target_context} -> {paths.target_decision} with k={params.k}")
    return scm


def synthesize(
    g: ScopedGraph, decision: str, context: str, k_override: Optional[int] = None
) -> tuple[MaterialityPaths, SynthesisParams, FiniteSCM]:
    paths = build_materiality_paths(g, decision, context)
    params = compute_params(g, paths, k_override)
    return paths, params, build_materiality_scm(g, paths, params)


compliant_policy = reference_policy
