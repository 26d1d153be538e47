"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class PoleError(DomainError):
    """Evaluation at a pole (e.g. Gamma at a non-positive integer)."""


class ConvergenceError(RuntimeError):
    """A series, root search or grid refinement failed to converge."""


class ResonanceError(DomainError):
    """The quasi-1D coupling diverges at the confinement-induced resonance."""


class OutOfBoxError(DomainError):
    """A position lies outside the hard-wall box of a lattice trap."""


class CoincidenceError(DomainError):
    """Two particles coincide, where drift and local energy are singular."""


class IncompatibleError(ValueError):
    """A trial-function family does not match the trap."""


class SamplerAbort(RuntimeError):
    """A Monte Carlo run had to stop; ``diagnostics`` says why."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(ValueError):
    """An experiment configuration is invalid."""
