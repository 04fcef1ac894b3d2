"""Exception hierarchy shared by all memtlg modules."""


class MemtlgError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidInputError(MemtlgError, ValueError):
    """A value violates an operation's preconditions (non-finite, empty, ...)."""


class TopologyError(MemtlgError):
    """A resistive network or array topology is malformed (floating node, ...)."""


class NotCalibratedError(MemtlgError):
    """Cell evaluation was requested without calibrated inverter parameters."""


class CalibrationError(MemtlgError):
    """Joint calibration found no feasible parameter point.

    ``violations`` lists (config-label, input-vector, detail) tuples for the
    least-infeasible point examined.
    """

    def __init__(self, message: str, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class WriteError(MemtlgError):
    """A programming pulse failed to bring a target memristor to its goal.

    ``achieved`` maps memristor name -> final state reached.
    """

    def __init__(self, message: str, achieved=None):
        super().__init__(message)
        self.achieved = dict(achieved or {})


class ContentionError(MemtlgError):
    """Two closed switches (or a switch and a primary input) drive one line."""


class RoutingCycleError(MemtlgError):
    """The closed routing switches form a combinational loop.

    ``cycle`` lists the cells on the loop.
    """

    def __init__(self, message: str, cycle=None):
        super().__init__(message)
        self.cycle = list(cycle or [])


class CapacityError(MemtlgError):
    """A netlist does not fit the array (rows/columns exhausted)."""

    def __init__(self, message: str, gate: str | None = None):
        super().__init__(message)
        self.gate = gate


class RoutingError(MemtlgError):
    """No switch path exists from a producer to a consumer line."""

    def __init__(self, message: str, gate: str | None = None):
        super().__init__(message)
        self.gate = gate


class NetlistError(MemtlgError):
    """Netlist text failed to parse; carries line and column (1-based)."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class VerificationError(MemtlgError):
    """Simulated array disagreed with the boolean oracle.

    ``counterexample`` is the first failing input vector (string of bits),
    ``report`` the full verification report.
    """

    def __init__(self, message: str, counterexample=None, report=None):
        super().__init__(message)
        self.counterexample = counterexample
        self.report = report


class ConfigError(MemtlgError):
    """Bad run configuration file or unknown component kind in a cost table."""
