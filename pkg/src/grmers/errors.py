"""Exception taxonomy shared across the package.

Every failure mode raised by the library derives from :class:`GrmersError`
so callers (and the CLI) can map failures to exit codes without matching
on message text.
"""


class GrmersError(Exception):
    """Base class for all library errors."""


class DimensionError(GrmersError):
    """Operands have incompatible or non-square shapes."""


class ValidationError(GrmersError):
    """Structured input violates a documented precondition."""


class DomainError(GrmersError):
    """Input is outside the mathematical domain of the operation
    (unstable A where stability is required, poles on the imaginary
    axis, gamma not exceeding the static gain, ...)."""


class NumericError(GrmersError):
    """A numerical routine broke down (failed factorization, iteration
    divergence). Distinct from a certified 'infeasible' answer."""


class SolvabilityError(GrmersError):
    """A well-posed problem has no solution with the required properties
    (no stabilizing Riccati solution, Lyapunov operator singular)."""


class SynthesisError(GrmersError):
    """A synthesis routine terminated without producing a feasible
    design (no feasible gamma below the cap, GA exhausted its budget
    without meeting the acceptance threshold)."""


class SimulationError(GrmersError):
    """A simulation scenario was rejected (closed loop unstable) or a
    run diverged."""
