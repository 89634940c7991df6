"""Exception hierarchy shared by every frugal module."""


class FrugalError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""

    category = "error"
    exit_code = 1


class ContractError(FrugalError, ValueError):
    """A caller broke an operation's precondition."""

    category = "contract"
    exit_code = 2


class ParseError(FrugalError, ValueError):
    category = "parse"
    exit_code = 3

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class SchemaError(FrugalError, ValueError):
    category = "schema"
    exit_code = 3


class InfeasibleSplitError(FrugalError, ValueError):
    """Stratification asked for more bins than the minority class can fill."""

    category = "infeasible"
    exit_code = 4


class BudgetViolation(FrugalError, RuntimeError):
    """A label was read outside the revealed validation slice."""

    category = "budget"
    exit_code = 5


class SelectionExhausted(FrugalError):
    """No violation-score tier is left to try."""

    category = "degenerate"
    exit_code = 6


class DegenerateDataError(FrugalError):
    category = "degenerate"
    exit_code = 6


class TuningError(FrugalError, RuntimeError):
    category = "tuning"
    exit_code = 7
