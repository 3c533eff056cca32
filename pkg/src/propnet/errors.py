"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class EvaluationBudgetExceeded(RuntimeError):
    """A candidate fee function used more evaluations than allowed."""


class MiningBudgetExhausted(RuntimeError):
    """No proof-of-work solution was found within the attempt budget."""
