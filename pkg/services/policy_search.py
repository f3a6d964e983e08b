from __future__ import annotations

import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional

from .bitstrings import MAX_ENUMERATED_WIDTH
from .errors import DomainExplosion, IncompletePolicy, NotAContext, PolicySpaceTooLarge, UnknownNode
from .scm_engine import DecisionRule, FiniteSCM, Policy, Scope, evaluate
from .settings import get_settings

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MEUResult:
    value: Fraction
    witness: Policy
    policies_examined: int


def validate_scope(scm: FiniteSCM, scope: Optional[Mapping[str, Iterable[str]]]) -> Scope:
    """Normalise a scope to sorted context tuples and check it covers exactly the decisions."""
    if scope is None:
        return scm.default_scope()
    normalised = {d: tuple(sorted(set(c))) for d, c in scope.items()}
    missing = set(scm.decisions) - set(normalised)
    if missing:
        raise IncompletePolicy(f"Scope has no contexts for {sorted(missing)}")
    for d, contexts in normalised.items():
        if d not in scm.decisions:
            raise UnknownNode(d)
        for c in contexts:
            scm.kind(c)
    scm.order(normalised)
    return normalised


def scope_without(scope: Scope, decision: str, context: str) -> Scope:
    if context not in scope.get(decision, ()):
        raise NotAContext(decision, context)
    out = dict(scope)
    out[decision] = tuple(c for c in scope[decision] if c != context)
    return out


def apply_scope_edits(scope: Scope, edits: str) -> Scope:
    """Apply edits like "X0-Z0,X1+C": remove Z0 from X0's contexts, add C to X1's."""
    out = dict(scope)
    for item in filter(None, (e.strip() for e in edits.split(","))):
        op = "-" if "-" in item else "+"
        decision, _, context = item.partition(op)
        if not decision or not context:
            raise IncompletePolicy(f"Malformed scope edit {item!r}")
        if decision not in out:
            raise UnknownNode(decision)
        if op == "-":
            out = scope_without(out, decision, context)
        else:
            out[decision] = tuple(sorted(set(out[decision]) | {context}))
    return out


class _RuleSpace:
    """All deterministic rules of one decision, indexable in enumeration order."""

    def __init__(self, scm: FiniteSCM, decision: str, contexts: tuple[str, ...]):
        self.decision = decision
        self.contexts = contexts
        self.domain = scm.domain(decision)
        context_bits = sum(scm.width(c) for c in contexts)
        if context_bits > MAX_ENUMERATED_WIDTH:
            raise DomainExplosion(f"{decision} observes {context_bits} context bits")
        self.assignment_count = 2 ** context_bits
        self.count = len(self.domain) ** self.assignment_count
        self._assignments: Optional[list[tuple[str, ...]]] = None
        self._scm = scm

    @property
    def assignments(self) -> list[tuple[str, ...]]:
        if self._assignments is None:
            self._assignments = self._scm.context_assignments(self.contexts)
        return self._assignments

    def rule_at(self, index: int) -> DecisionRule:
        base = len(self.domain)
        digits = []
        for _ in range(self.assignment_count):
            index, digit = divmod(index, base)
            digits.append(digit)
        digits.reverse()
        return DecisionRule(self.contexts, {a: self.domain[i] for a, i in zip(self.assignments, digits)})


class _PolicySpace:
    def __init__(self, spaces: list[_RuleSpace]):
        self.spaces = spaces
        self.count = 1
        for s in spaces:
            self.count *= s.count

    def rules_at(self, index: int) -> dict[str, DecisionRule]:
        rules = {}
        for s in reversed(self.spaces):
            index, digit = divmod(index, s.count)
            rules[s.decision] = s.rule_at(digit)
        return rules


def _check_budget(count: int, budget: Optional[int]) -> None:
    budget = budget or get_settings().policy_budget
    if count > budget:
        raise PolicySpaceTooLarge(count, budget)


def policy_count(scm: FiniteSCM, scope: Optional[Scope] = None) -> int:
    scope = validate_scope(scm, scope)
    return _PolicySpace([_RuleSpace(scm, d, scope[d]) for d in scm.decisions]).count


def enumerate_policies(scm: FiniteSCM, scope: Optional[Scope] = None, budget: Optional[int] = None) -> Iterator[Policy]:
    """Every deterministic policy following the scope, in a fixed mixed-radix order."""
    scope = validate_scope(scm, scope)
    space = _PolicySpace([_RuleSpace(scm, d, scope[d]) for d in scm.decisions])
    _check_budget(space.count, budget)
    for index in range(space.count):
        yield Policy(space.rules_at(index))


def _best_response(
    scm: FiniteSCM, responder: _RuleSpace, others: dict[str, DecisionRule], worlds
) -> tuple[Fraction, DecisionRule]:
    """Optimal rule for one decision with every other rule fixed: pointwise argmax per context."""
    gains: dict[tuple[str, ...], dict[str, Fraction]] = {}
    for action in responder.domain:
        rules = dict(others)
        rules[responder.decision] = DecisionRule((), {(): action})
        policy = Policy(rules)
        for p, noise in worlds:
            values = evaluate(scm, policy, noise)
            key = tuple(values[c] for c in responder.contexts)
            row = gains.setdefault(key, {})
            row[action] = row.get(action, Fraction(0)) + p * values[scm.utility]
    table = {}
    total = Fraction(0)
    for key in responder.assignments:
        row = gains.get(key)
        if row is None:
            table[key] = responder.domain[0]
            continue
        best = responder.domain[0]
        for action in responder.domain[1:]:
            if row[action] > row[best]:
                best = action
        table[key] = best
        total += row[best]
    return total, DecisionRule(responder.contexts, table)


def _search_range(scm, responder, others_space, start, stop, worlds, ceiling):
    best: Optional[tuple[Fraction, int, Policy]] = None
    for index in range(start, stop):
        rules = others_space.rules_at(index)
        if responder is None:
            value = sum((p * evaluate(scm, Policy(rules), noise)[scm.utility] for p, noise in worlds), Fraction(0))
        else:
            value, rule = _best_response(scm, responder, rules, worlds)
            rules[responder.decision] = rule
        if best is None or value > best[0]:
            best = (value, index, Policy(rules))
            if value >= ceiling:
                break
    return best


def meu(
    scm: FiniteSCM,
    scope: Optional[Scope] = None,
    budget: Optional[int] = None,
    threads: Optional[int] = None,
) -> MEUResult:
    """Exact maximum expected utility over deterministic policies following the scope.

    The decision with the largest rule space best-responds; the remaining decisions'
    rules are enumerated, so the budget applies to that smaller product. The scan stops
    at the first combination reaching the utility's static upper bound.
    """
    scope = validate_scope(scm, scope)
    threads = threads or get_settings().threads
    spaces = [_RuleSpace(scm, d, scope[d]) for d in scm.decisions]
    responder = max(spaces, key=lambda s: s.count) if spaces else None
    others_space = _PolicySpace([s for s in spaces if s is not responder])
    _check_budget(others_space.count, budget)
    worlds = scm.worlds()
    total = others_space.count
    ceiling = scm.utility_bounds()[1]

    if threads <= 1 or total < 2 * threads:
        best = _search_range(scm, responder, others_space, 0, total, worlds, ceiling)
    else:
        chunk = -(-total // threads)
        bounds = [(i, min(i + chunk, total)) for i in range(0, total, chunk)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: _search_range(scm, responder, others_space, b[0], b[1], worlds, ceiling), bounds))
        best = None
        for part in parts:
            if best is None or part[0] > best[0] or (part[0] == best[0] and part[1] < best[1]):
                best = part

    value, _, witness = best
    logger.info(f"MEU {value} over {total} enumerated rule combinations")
    return MEUResult(value=value, witness=witness, policies_examined=total)


def voi_detail(
    scm: FiniteSCM,
    scope: Optional[Scope],
    decision: str,
    context: str,
    budget: Optional[int] = None,
    threads: Optional[int] = None,
) -> tuple[MEUResult, MEUResult]:
    scope = validate_scope(scm, scope)
    if decision not in scope:
        raise UnknownNode(decision)
    reduced = scope_without(scope, decision, context)
    return meu(scm, scope, budget, threads), meu(scm, reduced, budget, threads)


def voi(
    scm: FiniteSCM,
    scope: Optional[Scope],
    decision: str,
    context: str,
    budget: Optional[int] = None,
    threads: Optional[int] = None,
) -> Fraction:
    with_context, without_context = voi_detail(scm, scope, decision, context, budget, threads)
    return with_context.value - without_context.value


def _random_mixture(rng: random.Random, domain: list[str]) -> dict[str, Fraction]:
    weights = [rng.randint(0, 4) for _ in domain]
    if not any(weights):
        weights[rng.randrange(len(weights))] = 1
    total = sum(weights)
    return {a: Fraction(w, total) for a, w in zip(domain, weights) if w}


def _mixed_utility(scm: FiniteSCM, order, mixed, noise, values, position) -> Fraction:
    while position < len(order):
        name = order[position]
        if name in mixed:
            contexts, table = mixed[name]
            dist = table[tuple(values[c] for c in contexts)]
            total = Fraction(0)
            for action, q in dist.items():
                branch = dict(values)
                branch[name] = action
                total += q * _mixed_utility(scm, order, mixed, noise, branch, position + 1)
            return total
        values[name] = scm.compute(name, values, noise)
        position += 1
    return values[scm.utility]


def stochastic_expected_utility(scm: FiniteSCM, scope: Scope, mixed) -> Fraction:
    order = scm.order(scope)
    return sum(
        (p * _mixed_utility(scm, order, mixed, noise, {}, 0) for p, noise in scm.worlds()),
        Fraction(0),
    )


def stochastic_bound_check(
    scm: FiniteSCM,
    scope: Optional[Scope] = None,
    samples: int = 1000,
    seed: int = 0,
    bound: Optional[Fraction] = None,
) -> bool:
    """Sample random rational mixed policies and confirm none beats the deterministic MEU."""
    scope = validate_scope(scm, scope)
    if bound is None:
        bound = meu(scm, scope).value
    rng = random.Random(seed)
    spaces = [_RuleSpace(scm, d, scope[d]) for d in scm.decisions]
    for sample in range(samples):
        mixed = {
            s.decision: (s.contexts, {a: _random_mixture(rng, s.domain) for a in s.assignments})
            for s in spaces
        }
        value = stochastic_expected_utility(scm, scope, mixed)
        if value > bound:
            logger.warning(f"Sampled mixed policy {sample} reaches {value} > {bound}")
            return False
    return True
