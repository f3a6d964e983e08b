from __future__ import annotations


class MaterialityError(Exception):
    """Base class for every error raised by the materiality services."""


# Input problems: the caller handed us something we cannot work with.

class GraphError(MaterialityError, ValueError):
    pass


class CycleError(GraphError):
    pass


class UnknownNode(GraphError):
    def __init__(self, name: object):
        super().__init__(f"Unknown node: {name!r}")
        self.name = name


class MissingUtility(GraphError):
    pass


class DecisionParentMismatch(GraphError):
    pass


class MalformedGraph(GraphError):
    pass


class NotAContext(MaterialityError, ValueError):
    def __init__(self, decision: str, context: str):
        super().__init__(f"{context!r} is not a context of decision {decision!r}")
        self.decision = decision
        self.context = context


class PreconditionViolated(MaterialityError, ValueError):
    pass


class DomainMismatch(MaterialityError, ValueError):
    pass


class DomainViolation(MaterialityError, ValueError):
    pass


class IncompletePolicy(MaterialityError, ValueError):
    pass


class ScmFormatError(MaterialityError, ValueError):
    pass


class UnknownFixture(MaterialityError, LookupError):
    def __init__(self, name: str, known: tuple[str, ...] | list[str] = ()):
        message = f"Unknown fixture {name!r}"
        if known:
            message += f"; known fixtures: {', '.join(known)}"
        super().__init__(message)
        self.name = name


# Budgets: the input is fine but too large for exact desk-scale search.

class BudgetExceeded(MaterialityError, RuntimeError):
    pass


class SearchBudgetExceeded(BudgetExceeded):
    pass


class PolicySpaceTooLarge(BudgetExceeded):
    def __init__(self, count: int, budget: int):
        super().__init__(f"Policy space has {count} deterministic policies, budget is {budget}")
        self.count = count
        self.budget = budget


class DomainExplosion(BudgetExceeded):
    pass


# Internal: a lemma hypothesis did not hold where it must. Always a bug.

class LemmaHypothesisFailed(MaterialityError, AssertionError):
    pass


class NoControlPath(LemmaHypothesisFailed):
    pass


INPUT_ERRORS = (
    GraphError,
    NotAContext,
    PreconditionViolated,
    DomainMismatch,
    DomainViolation,
    IncompletePolicy,
    ScmFormatError,
    UnknownFixture,
)
