"""Exception types shared across the simulation modules."""


class NumericalFaultError(RuntimeError):
    """A computed state violated a physical invariant beyond tolerance."""


class NoPeakError(RuntimeError):
    """No qualifying maximum of the entangled fraction within the horizon."""


class NotPurifiableError(ValueError):
    """Input fidelity at or below 1/2; the recurrence protocol cannot help."""


class ConvergenceError(RuntimeError):
    """Iterative procedure failed to reach its target within the step cap."""
