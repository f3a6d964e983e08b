from __future__ import annotations

import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Annotated, Callable, Iterable, Literal, Mapping, Optional, Union

import networkx as nx
from pydantic import BaseModel, Field, ValidationError

from .bitstrings import all_bitstrings, bit_at, compatible, exp2_tower, is_bitstring
from .errors import (
    CycleError,
    DomainExplosion,
    DomainMismatch,
    DomainViolation,
    IncompletePolicy,
    ScmFormatError,
    UnknownNode,
)
from .graph_core import NodeKind, ScopedGraph
from .settings import get_settings

logger = logging.getLogger(__name__)


# Function descriptors. Bit-valued expressions produce bitstrings; value expressions
# produce exact rationals and are only allowed for the utility variable.

class ParentRef(BaseModel):
    kind: Literal["parent"] = "parent"
    name: str
    start: Optional[int] = None
    stop: Optional[int] = None


class NoiseRef(BaseModel):
    kind: Literal["noise"] = "noise"
    start: Optional[int] = None
    stop: Optional[int] = None


class Const(BaseModel):
    kind: Literal["const"] = "const"
    bits: str = ""


class Concat(BaseModel):
    kind: Literal["concat"] = "concat"
    parts: list["BitExpr"]


class Index(BaseModel):
    kind: Literal["index"] = "index"
    table: "BitExpr"
    key: "BitExpr"


class Xor(BaseModel):
    kind: Literal["xor"] = "xor"
    parts: list["BitExpr"]


class Table(BaseModel):
    kind: Literal["table"] = "table"
    inputs: list["BitExpr"]
    rows: dict[str, str]


class Equals(BaseModel):
    kind: Literal["equals"] = "equals"
    left: "BitExpr"
    right: "BitExpr"


class Compatible(BaseModel):
    """1 if <head, *tail> is compatible with the fork value, else 0."""

    kind: Literal["compatible"] = "compatible"
    head: "BitExpr"
    tail: list["BitExpr"]
    fork: "BitExpr"


class Weighted(BaseModel):
    weight: str = "1"
    term: "ValueExpr"


class Sum(BaseModel):
    kind: Literal["sum"] = "sum"
    terms: list[Weighted]


class ValueTable(BaseModel):
    kind: Literal["value_table"] = "value_table"
    inputs: list["BitExpr"]
    rows: dict[str, str]


class Constant(BaseModel):
    kind: Literal["constant"] = "constant"
    value: str = "0"


BitExpr = Annotated[
    Union[ParentRef, NoiseRef, Const, Concat, Index, Xor, Table],
    Field(discriminator="kind"),
]
ValueExpr = Annotated[
    Union[Equals, Compatible, Sum, ValueTable, Constant],
    Field(discriminator="kind"),
]
AnyExpr = Annotated[
    Union[ParentRef, NoiseRef, Const, Concat, Index, Xor, Table, Equals, Compatible, Sum, ValueTable, Constant],
    Field(discriminator="kind"),
]

for _model in (Concat, Index, Xor, Table, Equals, Compatible, Weighted, Sum, ValueTable):
    _model.model_rebuild()

_VALUE_KINDS = {"equals", "compatible", "sum", "value_table", "constant"}


class NoiseSpec(BaseModel):
    """Exogenous input of one variable: uniform over `bits` bits, or an explicit table."""

    bits: int = Field(0, ge=0)
    table: Optional[dict[str, str]] = None


class VariableSpec(BaseModel):
    name: str = Field(min_length=1)
    kind: NodeKind
    bits: int = Field(0, ge=0)
    parents: list[str] = []
    function: Optional[AnyExpr] = None
    noise: Optional[NoiseSpec] = None
    reference: Optional[BitExpr] = None


class ScmDocument(BaseModel):
    variables: list[VariableSpec]
    utility: str
    notes: dict[str, str] = {}


Scope = dict[str, tuple[str, ...]]
Assignment = dict[str, Union[str, Fraction]]


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise ScmFormatError(f"Not a rational: {text!r}") from e


def format_fraction(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class DecisionRule:
    """Deterministic rule: context values (in `contexts` order) -> decision value."""

    contexts: tuple[str, ...]
    table: Mapping[tuple[str, ...], str]

    def choose(self, values: Mapping[str, object]) -> str:
        key = tuple(values[c] for c in self.contexts)
        try:
            return self.table[key]
        except KeyError:
            raise IncompletePolicy(f"No rule for context assignment {key}")


@dataclass(frozen=True)
class Policy:
    rules: Mapping[str, DecisionRule] = field(default_factory=dict)

    def scope(self) -> Scope:
        return {d: r.contexts for d, r in self.rules.items()}

    def describe(self) -> dict[str, dict]:
        return {
            d: {
                "contexts": list(r.contexts),
                "rules": {",".join(k): v for k, v in sorted(r.table.items())},
            }
            for d, r in sorted(self.rules.items())
        }


# Compilation

def _slice_width(width: int, start: Optional[int], stop: Optional[int]) -> int:
    return len(range(width)[start:stop])


class _Compiler:
    def __init__(self, widths: dict[str, int], var: VariableSpec, noise_width: int):
        self.widths = widths
        self.var = var
        self.noise_width = noise_width

    def fail(self, message: str) -> DomainMismatch:
        return DomainMismatch(f"{self.var.name}: {message}")

    def bits(self, expr) -> tuple[int, Callable]:
        if expr.kind == "parent":
            if expr.name not in self.var.parents:
                raise self.fail(f"refers to non-parent {expr.name!r}")
            name, s, e = expr.name, expr.start, expr.stop
            return _slice_width(self.widths[name], s, e), lambda vals, noise: vals[name][s:e]
        if expr.kind == "noise":
            s, e = expr.start, expr.stop
            return _slice_width(self.noise_width, s, e), lambda vals, noise: noise[s:e]
        if expr.kind == "const":
            if not is_bitstring(expr.bits):
                raise self.fail(f"bad constant {expr.bits!r}")
            bits = expr.bits
            return len(bits), lambda vals, noise: bits
        if expr.kind == "concat":
            parts = [self.bits(p) for p in expr.parts]
            fns = [f for _, f in parts]
            return sum(w for w, _ in parts), lambda vals, noise: "".join(f(vals, noise) for f in fns)
        if expr.kind == "index":
            tw, table = self.bits(expr.table)
            kw, key = self.bits(expr.key)
            if tw != 2 ** kw:
                raise self.fail(f"indexing a {tw}-bit table with a {kw}-bit key")
            return 1, lambda vals, noise: bit_at(table(vals, noise), key(vals, noise))
        if expr.kind == "xor":
            parts = [self.bits(p) for p in expr.parts]
            widths = {w for w, _ in parts}
            if len(widths) != 1:
                raise self.fail("xor of unequal widths")
            fns = [f for _, f in parts]

            def xor(vals, noise):
                acc = 0
                for f in fns:
                    acc ^= int(f(vals, noise) or "0", 2)
                return format(acc, f"0{width}b") if width else ""

            width = widths.pop()
            return width, xor
        if expr.kind == "table":
            inputs = [self.bits(p) for p in expr.inputs]
            key_width = sum(w for w, _ in inputs)
            rows = dict(expr.rows)
            self._check_rows(rows, key_width, lambda out: is_bitstring(out))
            out_widths = {len(v) for v in rows.values()}
            if len(out_widths) != 1:
                raise self.fail("table outputs of unequal widths")
            fns = [f for _, f in inputs]
            return out_widths.pop(), lambda vals, noise: rows["".join(f(vals, noise) for f in fns)]
        raise self.fail(f"{expr.kind!r} is not a bit-valued expression")

    def value(self, expr) -> Callable:
        if expr.kind == "equals":
            lw, left = self.bits(expr.left)
            rw, right = self.bits(expr.right)
            if lw != rw:
                raise self.fail("equality test between unequal widths")
            return lambda vals, noise: Fraction(int(left(vals, noise) == right(vals, noise)))
        if expr.kind == "compatible":
            kw, head = self.bits(expr.head)
            tail = [self.bits(t) for t in expr.tail]
            fw, fork = self.bits(expr.fork)
            if kw == 0 or any(w != 1 for w, _ in tail):
                raise self.fail("compatibility test needs a non-empty head and single-bit tail")
            if fw != exp2_tower(len(tail), kw):
                raise self.fail(f"fork width {fw} does not match a chain of length {len(tail)}")
            tail_fns = [f for _, f in tail]
            return lambda vals, noise: Fraction(int(compatible(
                [head(vals, noise)] + [f(vals, noise) for f in tail_fns], fork(vals, noise))))
        if expr.kind == "sum":
            terms = [(parse_fraction(t.weight), self.value(t.term)) for t in expr.terms]
            return lambda vals, noise: sum((w * f(vals, noise) for w, f in terms), Fraction(0))
        if expr.kind == "value_table":
            inputs = [self.bits(p) for p in expr.inputs]
            key_width = sum(w for w, _ in inputs)
            self._check_rows(expr.rows, key_width, lambda out: True)
            rows = {k: parse_fraction(v) for k, v in expr.rows.items()}
            fns = [f for _, f in inputs]
            return lambda vals, noise: rows["".join(f(vals, noise) for f in fns)]
        if expr.kind == "constant":
            value = parse_fraction(expr.value)
            return lambda vals, noise: value
        raise self.fail(f"{expr.kind!r} is not a value expression")

    def _check_rows(self, rows: dict[str, str], key_width: int, valid_output) -> None:
        if any(len(k) != key_width or not is_bitstring(k) for k in rows):
            raise self.fail(f"table keys must be {key_width}-bit strings")
        if len(rows) != 2 ** key_width:
            raise self.fail(f"table has {len(rows)} rows, needs {2 ** key_width}")
        if not all(valid_output(v) for v in rows.values()):
            raise self.fail("table has malformed outputs")


def _value_bounds(expr) -> tuple[Fraction, Fraction]:
    """Static (lowest, highest) value a utility expression can take."""
    if expr.kind in ("equals", "compatible"):
        return Fraction(0), Fraction(1)
    if expr.kind == "constant":
        value = parse_fraction(expr.value)
        return value, value
    if expr.kind == "value_table":
        values = [parse_fraction(v) for v in expr.rows.values()]
        return min(values), max(values)
    low = high = Fraction(0)
    for t in expr.terms:
        w = parse_fraction(t.weight)
        lo, hi = _value_bounds(t.term)
        low += min(w * lo, w * hi)
        high += max(w * lo, w * hi)
    return low, high


def _noise_support(spec: Optional[NoiseSpec], name: str) -> list[tuple[str, Fraction]]:
    if spec is None:
        return [("", Fraction(1))]
    if spec.table is None:
        p = Fraction(1, 2 ** spec.bits)
        return [(b, p) for b in all_bitstrings(spec.bits)]
    support = [(k, parse_fraction(v)) for k, v in sorted(spec.table.items())]
    widths = {len(k) for k, _ in support}
    if len(widths) != 1 or not all(is_bitstring(k) for k, _ in support):
        raise ScmFormatError(f"{name}: noise table keys must be bitstrings of one width")
    if any(p < 0 for _, p in support):
        raise ScmFormatError(f"{name}: negative probability")
    if sum(p for _, p in support) != 1:
        raise ScmFormatError(f"{name}: noise probabilities do not sum to 1")
    return [(k, p) for k, p in support if p > 0]


class FiniteSCM:
    """Finite-domain SCM over bitstring variables with exact rational exogenous noise.

    Decisions carry a declared width and context list but no structural function;
    a Policy supplies their values at evaluation time.
    """

    def __init__(self, doc: ScmDocument):
        names = [v.name for v in doc.variables]
        if len(set(names)) != len(names):
            raise ScmFormatError("Duplicate variable names")
        specs = {v.name: v for v in doc.variables}
        if doc.utility not in specs or specs[doc.utility].kind != NodeKind.utility:
            raise ScmFormatError(f"Utility {doc.utility!r} is missing or not a utility variable")
        if sum(1 for v in doc.variables if v.kind == NodeKind.utility) != 1:
            raise ScmFormatError("Exactly one utility variable is required")

        widths = {v.name: v.bits for v in doc.variables}
        self._doc = doc
        self._specs = specs
        self._widths = widths
        self._support: dict[str, list[tuple[str, Fraction]]] = {}
        self._functions: dict[str, Callable] = {}
        self._references: dict[str, Callable] = {}

        for v in doc.variables:
            for p in v.parents:
                if p not in specs:
                    raise UnknownNode(p)
            if v.name in v.parents:
                raise ScmFormatError(f"{v.name} lists itself as a parent")
            if specs[doc.utility].name in v.parents:
                raise ScmFormatError(f"{v.name} has the utility as a parent")
            self._support[v.name] = _noise_support(v.noise, v.name)
            noise_width = len(self._support[v.name][0][0]) if self._support[v.name] else 0
            compiler = _Compiler(widths, v, noise_width)
            if v.kind == NodeKind.decision:
                if v.function is not None:
                    raise ScmFormatError(f"Decision {v.name} must not have a structural function")
                if v.noise is not None:
                    raise ScmFormatError(f"Decision {v.name} must not have exogenous noise")
                if v.reference is not None:
                    width, fn = compiler.bits(v.reference)
                    if width != v.bits:
                        raise DomainMismatch(f"{v.name}: reference rule yields {width} bits, domain has {v.bits}")
                    self._references[v.name] = fn
            elif v.kind == NodeKind.utility:
                if v.function is None or v.function.kind not in _VALUE_KINDS:
                    raise ScmFormatError("Utility needs a value-valued function")
                self._functions[v.name] = compiler.value(v.function)
            else:
                function = v.function if v.function is not None else NoiseRef()
                if function.kind in _VALUE_KINDS:
                    raise ScmFormatError(f"{v.name}: only the utility may be rational-valued")
                width, fn = compiler.bits(function)
                if width != v.bits:
                    raise DomainMismatch(f"{v.name}: function yields {width} bits, domain has {v.bits}")
                self._functions[v.name] = fn

        self._decisions = tuple(sorted(v.name for v in doc.variables if v.kind == NodeKind.decision))
        self._orders: dict[tuple, tuple[str, ...]] = {}
        self.order(self.default_scope())
        self._worlds: Optional[list[tuple[Fraction, dict[str, str]]]] = None

    # document round trip

    @classmethod
    def from_json(cls, text: str | bytes) -> "FiniteSCM":
        try:
            doc = ScmDocument.model_validate_json(text)
        except ValidationError as e:
            raise ScmFormatError(f"Invalid SCM document: {e.error_count()} schema errors") from e
        return cls(doc)

    def to_document(self) -> ScmDocument:
        return self._doc.model_copy(deep=True)

    def to_json(self) -> str:
        return json.dumps(self._doc.model_dump(mode="json", exclude_none=True), indent=2, sort_keys=True)

    # structure

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v.name for v in self._doc.variables)

    @property
    def decisions(self) -> tuple[str, ...]:
        return self._decisions

    @property
    def utility(self) -> str:
        return self._doc.utility

    @property
    def notes(self) -> dict[str, str]:
        return dict(self._doc.notes)

    def kind(self, name: str) -> NodeKind:
        return self._spec(name).kind

    def width(self, name: str) -> int:
        return self._spec(name).bits

    def parents(self, name: str) -> tuple[str, ...]:
        return tuple(self._spec(name).parents)

    def default_scope(self) -> Scope:
        return {d: tuple(sorted(self._specs[d].parents)) for d in self._decisions}

    def utility_bounds(self) -> tuple[Fraction, Fraction]:
        return _value_bounds(self._specs[self.utility].function)

    def has_reference_policy(self) -> bool:
        return set(self._references) == set(self._decisions)

    def scoped_graph(self, scope: Optional[Scope] = None) -> ScopedGraph:
        scope = scope or self.default_scope()
        kinds = {v.name: v.kind for v in self._doc.variables}
        edges = []
        for v in self._doc.variables:
            parents = scope[v.name] if v.kind == NodeKind.decision else v.parents
            edges += [(p, v.name) for p in parents]
        contexts = {d: scope[d] for d in self._decisions}
        return ScopedGraph(kinds, edges, contexts, self.utility)

    def order(self, scope: Scope) -> tuple[str, ...]:
        """Evaluation order under the given decision contexts."""
        key = tuple(sorted((d, tuple(c)) for d, c in scope.items()))
        if key not in self._orders:
            graph = nx.DiGraph()
            graph.add_nodes_from(self.variables)
            for v in self._doc.variables:
                if v.kind == NodeKind.decision:
                    if v.name not in scope:
                        raise IncompletePolicy(f"No contexts given for decision {v.name}")
                    parents = scope[v.name]
                else:
                    parents = v.parents
                for p in parents:
                    if p not in self._specs:
                        raise UnknownNode(p)
                    if p == self.utility:
                        raise ScmFormatError("The utility cannot be observed")
                    graph.add_edge(p, v.name)
            if not nx.is_directed_acyclic_graph(graph):
                raise CycleError(f"Dependency cycle under scope {dict(scope)}")
            self._orders[key] = tuple(nx.lexicographical_topological_sort(graph))
        return self._orders[key]

    def context_assignments(self, contexts: Iterable[str]) -> list[tuple[str, ...]]:
        return [tuple(a) for a in product(*(list(all_bitstrings(self.width(c))) for c in contexts))]

    def domain(self, name: str) -> list[str]:
        return list(all_bitstrings(self.width(name)))

    # exogenous worlds

    def world_count(self) -> int:
        count = 1
        for support in self._support.values():
            count *= len(support)
        return count

    def worlds(self) -> list[tuple[Fraction, dict[str, str]]]:
        """Every exogenous world with positive probability, as (probability, noise by variable)."""
        if self._worlds is None:
            count = self.world_count()
            budget = get_settings().world_budget
            if count > budget:
                raise DomainExplosion(f"{count} exogenous worlds exceed the budget of {budget}")
            noisy = [n for n in self.variables if self._specs[n].noise is not None]
            worlds = []
            for combo in product(*(self._support[n] for n in noisy)):
                p = Fraction(1)
                for _, q in combo:
                    p *= q
                worlds.append((p, {n: bits for n, (bits, _) in zip(noisy, combo)}))
            self._worlds = worlds
        return self._worlds

    # evaluation primitives

    def compute(self, name: str, values: Mapping[str, object], noise: Mapping[str, str]) -> object:
        """Value of one non-decision variable given its parents' values."""
        return self._functions[name](values, noise.get(name, ""))

    def reference_choice(self, decision: str, values: Mapping[str, object]) -> str:
        return self._references[decision](values, "")

    def check_decision_value(self, decision: str, value: object) -> None:
        if not is_bitstring(value) or len(value) != self.width(decision):
            raise DomainViolation(f"{value!r} is outside the domain of {decision}")

    def _spec(self, name: str) -> VariableSpec:
        if name not in self._specs:
            raise UnknownNode(name)
        return self._specs[name]


def load_scm(text: str | bytes) -> FiniteSCM:
    return FiniteSCM.from_json(text)


def _noise_for(scm: FiniteSCM, exo: Mapping[str, str]) -> dict[str, str]:
    noise = {}
    for name in scm.variables:
        support = scm._support[name]
        if scm._specs[name].noise is None:
            continue
        if name not in exo:
            raise DomainViolation(f"No exogenous value for {name}")
        if exo[name] not in {bits for bits, _ in support}:
            raise DomainViolation(f"{exo[name]!r} is outside the support of {name}'s noise")
        noise[name] = exo[name]
    return noise


def evaluate(scm: FiniteSCM, policy: Policy, exo: Mapping[str, str]) -> Assignment:
    """Unique full assignment for one exogenous world, in topological order.

    Rules for variables that are no longer decisions (fixed by `intervene`) are ignored.
    """
    for name in policy.rules:
        scm.kind(name)
    missing = set(scm.decisions) - set(policy.rules)
    if missing:
        raise IncompletePolicy(f"Policy has no rule for {sorted(missing)}")
    rules = {d: policy.rules[d] for d in scm.decisions}
    noise = _noise_for(scm, exo)
    values: Assignment = {}
    for name in scm.order({d: r.contexts for d, r in rules.items()}):
        if name in rules:
            value = rules[name].choose(values)
            scm.check_decision_value(name, value)
            values[name] = value
        else:
            values[name] = scm.compute(name, values, noise)
    return values


def _utility_sum(scm: FiniteSCM, policy: Policy, worlds) -> Fraction:
    total = Fraction(0)
    for p, noise in worlds:
        total += p * evaluate(scm, policy, noise)[scm.utility]
    return total


def expected_utility(scm: FiniteSCM, policy: Policy, threads: int = 1) -> Fraction:
    worlds = scm.worlds()
    if threads <= 1 or len(worlds) < 2 * threads:
        return _utility_sum(scm, policy, worlds)
    chunk = -(-len(worlds) // threads)
    parts = [worlds[i:i + chunk] for i in range(0, len(worlds), chunk)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return sum(pool.map(lambda part: _utility_sum(scm, policy, part), parts), Fraction(0))


def reference_policy(scm: FiniteSCM) -> Policy:
    """Tabulate the reference (compliant) rules carried by a synthesized SCM."""
    if not scm.has_reference_policy():
        raise IncompletePolicy("This SCM carries no reference rule for every decision")
    rules = {}
    for d in scm.decisions:
        contexts = scm.default_scope()[d]
        table = {}
        for assignment in scm.context_assignments(contexts):
            table[assignment] = scm.reference_choice(d, dict(zip(contexts, assignment)))
        rules[d] = DecisionRule(contexts, table)
    return Policy(rules)


def intervene(scm: FiniteSCM, fixed: Mapping[str, object]) -> FiniteSCM:
    """Submodel with the fixed variables' functions replaced by constants."""
    doc = scm.to_document()
    specs = {v.name: v for v in doc.variables}
    for name, value in fixed.items():
        if name not in specs:
            raise UnknownNode(name)
        spec = specs[name]
        if spec.kind == NodeKind.utility:
            spec.function = Constant(value=format_fraction(Fraction(value)))
        else:
            if not is_bitstring(value) or len(value) != spec.bits:
                raise DomainViolation(f"{value!r} is outside the domain of {name}")
            spec.kind = NodeKind.chance
            spec.function = Const(bits=value)
            spec.reference = None
        spec.parents = []
        spec.noise = None
    return FiniteSCM(doc)


def joint_distribution(
    scm: FiniteSCM, policy: Policy, over: Iterable[str]
) -> dict[tuple[tuple[str, object], ...], Fraction]:
    """Exact marginal over the listed variables; keys are sorted (variable, value) pairs."""
    over = sorted(set(over))
    for name in over:
        scm.kind(name)
    joint: dict[tuple[tuple[str, object], ...], Fraction] = {}
    for p, noise in scm.worlds():
        values = evaluate(scm, policy, noise)
        key = tuple((name, values[name]) for name in over)
        joint[key] = joint.get(key, Fraction(0)) + p
    return joint


def _marginal(joint, names: set[str]):
    out: dict = {}
    for key, p in joint.items():
        sub = tuple(item for item in key if item[0] in names)
        out[sub] = out.get(sub, Fraction(0)) + p
    return out


def ci_oracle(scm: FiniteSCM, policy: Policy, a: Iterable[str], b: Iterable[str], c: Iterable[str]) -> bool:
    """Exact check of P(A, B | C) = P(A | C) P(B | C) on every supported conditional."""
    a, b, c = set(a), set(b), set(c)
    if a & b or a & c or b & c:
        raise DomainMismatch("ci_oracle needs disjoint sets")
    joint = joint_distribution(scm, policy, a | b | c)
    p_ac = _marginal(joint, a | c)
    p_bc = _marginal(joint, b | c)
    p_c = _marginal(joint, c)
    a_values = {tuple(i for i in k if i[0] in a) for k in joint}
    b_values = {tuple(i for i in k if i[0] in b) for k in joint}
    for c_key, pc in p_c.items():
        for a_key in a_values:
            for b_key in b_values:
                full = tuple(sorted(a_key + b_key + c_key))
                p_abc = joint.get(full, Fraction(0))
                p_a = p_ac.get(tuple(sorted(a_key + c_key)), Fraction(0))
                p_b = p_bc.get(tuple(sorted(b_key + c_key)), Fraction(0))
                if p_abc * pc != p_a * p_b:
                    return False
    return True


def _random_distribution(rng: random.Random, width: int) -> dict[str, str]:
    weights = {bits: rng.randint(1, 5) for bits in all_bitstrings(width)}
    total = sum(weights.values())
    return {bits: format_fraction(Fraction(w, total)) for bits, w in weights.items()}


def random_scm(g: ScopedGraph, seed: int, bits_per_node: int = 1) -> FiniteSCM:
    """Random SCM compatible with the graph: every chance node gets full-support noise
    and a random total table over (parents, noise); the utility gets random integer payoffs."""
    if not 1 <= bits_per_node <= 2:
        raise DomainMismatch("bits_per_node must be 1 or 2")
    rng = random.Random(seed)
    variables = []
    for name in g.nodes:
        kind = g.kind(name)
        parents = sorted(g.parents(name))
        if kind == NodeKind.decision:
            variables.append(VariableSpec(name=name, kind=kind, bits=bits_per_node, parents=parents))
            continue
        inputs = [ParentRef(name=p) for p in parents]
        key_width = bits_per_node * len(parents)
        if kind == NodeKind.utility:
            rows = {k: str(rng.randint(0, 9)) for k in all_bitstrings(key_width)}
            variables.append(VariableSpec(
                name=name, kind=kind, parents=parents,
                function=ValueTable(inputs=inputs, rows=rows)))
            continue
        noise = NoiseSpec(table=_random_distribution(rng, bits_per_node))
        rows = {
            k: format(rng.randrange(2 ** bits_per_node), f"0{bits_per_node}b")
            for k in all_bitstrings(key_width + bits_per_node)
        }
        variables.append(VariableSpec(
            name=name, kind=kind, bits=bits_per_node, parents=parents, noise=noise,
            function=Table(inputs=inputs + [NoiseRef()], rows=rows)))
    return FiniteSCM(ScmDocument(variables=variables, utility=g.utility))
