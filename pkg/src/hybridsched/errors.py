"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so batch runners can
record failures as CSV status values without string-mangling class names.
"""


class HybridSchedError(Exception):
    """Base class for all library errors."""

    code = "Error"


# ---------------------------------------------------------------------------
# Graph validation
# ---------------------------------------------------------------------------

class GraphError(HybridSchedError):
    code = "GraphError"


class CycleDetectedError(GraphError):
    """The precedence relation contains a directed cycle."""

    code = "CycleDetected"

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"precedence cycle: {' -> '.join(map(str, self.cycle))}")


class DanglingEdgeError(GraphError):
    code = "DanglingEdge"


class NegativeTimeError(GraphError):
    code = "NegativeTime"


class ArityMismatchError(GraphError):
    """A task's processing-time vector does not match the platform's type count."""

    code = "ArityMismatch"


class AllTypesForbiddenError(GraphError):
    code = "AllTypesForbidden"


# ---------------------------------------------------------------------------
# Schedule validation
# ---------------------------------------------------------------------------

class ScheduleError(HybridSchedError):
    code = "ScheduleError"


class OverlapError(ScheduleError):
    code = "Overlap"


class PrecedenceViolationError(ScheduleError):
    code = "PrecedenceViolation"


class WrongDurationError(ScheduleError):
    code = "WrongDuration"


class MachineOutOfRangeError(ScheduleError):
    code = "MachineOutOfRange"


class MissingTaskError(ScheduleError):
    code = "MissingTask"


class EmptyScheduleError(ScheduleError):
    code = "EmptySchedule"


# ---------------------------------------------------------------------------
# Linear programming
# ---------------------------------------------------------------------------

class LPError(HybridSchedError):
    code = "LPError"


class InfeasibleError(LPError):
    """The LP has no feasible point.  Well-formed relaxations are always
    feasible, so hitting this on a built model indicates an internal bug."""

    code = "Infeasible"


class UnboundedError(LPError):
    code = "Unbounded"


class IterationLimitError(LPError):
    code = "IterationLimit"


class InfeasibleInjectionError(LPError):
    """An externally supplied solution violates a model row."""

    code = "InfeasibleInjection"

    def __init__(self, row_name, violation):
        self.row_name = row_name
        self.violation = violation
        super().__init__(f"row {row_name!r} violated by {violation:.3e}")


# ---------------------------------------------------------------------------
# Scheduling algorithms
# ---------------------------------------------------------------------------

class AllocatesForbiddenTypeError(HybridSchedError):
    code = "AllocatesForbiddenType"


class PredecessorNotCommittedError(HybridSchedError):
    code = "PredecessorNotCommitted"


# ---------------------------------------------------------------------------
# Generators, oracles, I/O
# ---------------------------------------------------------------------------

class ParameterOutOfRangeError(HybridSchedError):
    code = "ParameterOutOfRange"


class TooLargeError(HybridSchedError):
    code = "TooLarge"


class GraphParseError(HybridSchedError):
    """Malformed graph/config file; ``where`` locates the offending element."""

    code = "ParseError"

    def __init__(self, reason, where=None):
        self.where = where
        self.reason = reason
        msg = reason if where is None else f"{where}: {reason}"
        super().__init__(msg)
