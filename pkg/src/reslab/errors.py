"""Exception types shared across the package.

The CLI maps these onto exit codes: DomainError -> 1 (usage),
NumericError -> 2, invariant failures reported by the verify suite -> 3.
ResourceError marks inputs that exceed a configured desk-scale guard.
"""


class DomainError(ValueError):
    """Input outside an operation's stated domain."""


class ResourceError(RuntimeError):
    """Input admissible in principle but beyond a configured capacity guard."""


class NumericError(ArithmeticError):
    """A numerical routine failed to meet its accuracy contract."""
