class DynamicsError(Exception):
    """Base class for every error raised by the simulator. Maps to exit status 1."""
    exit_code = 1


class MalformedAddressError(DynamicsError, ValueError):
    def __init__(self, address):
        super().__init__(f"Malformed vertex address: {address!r}")
        self.address = address


class BudgetExceededError(DynamicsError):
    """Raised when an engine run or the backward oracle exhausts its budget.

    The caller is expected to shrink the horizon or the radius and retry.
    """

    def __init__(self, what: str, budget: int):
        super().__init__(f"{what} budget of {budget} exceeded")
        self.what = what
        self.budget = budget


class ConfigError(DynamicsError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class EstimationError(DynamicsError):
    pass


class DegenerateCurveError(EstimationError):
    pass


class OutputError(DynamicsError):
    def __init__(self, path, reason):
        super().__init__(f"Could not write {path}: {reason}")
        self.path = path


class InvariantViolationError(DynamicsError):
    """A mathematical invariant suite failed. Maps to exit status 2."""
    exit_code = 2

    def __init__(self, check: str, violations: int, detail: str = ""):
        message = f"{check}: {violations} violation(s)"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.check = check
        self.violations = violations
