"""Exception hierarchy for the simulator.

Three families map onto the CLI exit codes: deck/input problems (exit 2),
physics failures (exit 3), and linear-algebra failures (exit 4). Plain
OSError covers I/O (exit 5).
"""


class DeckError(Exception):
    """Base class for input-deck problems. Carries a 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownKeyword(DeckError):
    """Keyword or section name not part of the deck grammar."""


class MissingRequiredSection(DeckError):
    """A required deck section is absent."""


class DimensionMismatch(DeckError):
    """Array-valued keyword has the wrong number of entries."""


class NonPhysicalValue(DeckError):
    """Value outside its physical range (saturation, porosity, ...)."""


class StoichiometryImbalance(DeckError):
    """Reaction set fails the mass-balance check beyond tolerance."""


class PhysicsError(Exception):
    """Base class for failures of the physical state or time stepping."""


class PoreSpaceExhausted(PhysicsError):
    """Coke concentration fills (or exceeds) the available pore volume."""


class DegenerateTemperature(PhysicsError):
    """T - kv5 <= 0 in the K-value correlation."""


class MissingCriticalProps(PhysicsError):
    """A gas-phase-capable component lacks critical pressure/temperature."""


class DivergedResidual(PhysicsError):
    """Newton residual grew for several consecutive iterations."""


class SimulationStalled(PhysicsError):
    """Timestep was cut below the minimum without converging.

    `cause` keeps the last underlying failure so the CLI can distinguish
    solver-rooted stalls from physics-rooted ones.
    """

    def __init__(self, message, cause=None):
        super().__init__(message)
        self.cause = cause


class SolverError(Exception):
    """Base class for linear-algebra failures."""


class SingularCellBlock(SolverError):
    """A diagonal cell block could not be pivoted during decoupling."""


class Breakdown(SolverError):
    """BiCGSTAB scalar breakdown (rho or omega vanished) after restart."""


class MaxIterations(SolverError):
    """Krylov iteration limit reached without meeting the tolerance."""


class LinearSolveFailure(SolverError):
    """Catch-all for a linear solve that produced no usable update."""


class SinkFailure(OSError):
    """A report sink could not be created or written."""
