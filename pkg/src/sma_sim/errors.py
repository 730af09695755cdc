"""Exception hierarchy shared by every module."""


class SmaSimError(Exception):
    """Base class for all errors raised by :mod:`sma_sim`."""


class ParameterError(SmaSimError, ValueError):
    """A parameter lies outside its domain.

    ``field`` names the offending parameter so callers (and the CLI) can
    report it without parsing the message.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class UnitMismatchError(SmaSimError, ValueError):
    pass


class EmptyWindowError(SmaSimError, ValueError):
    pass


class NumericDegeneracyError(SmaSimError, ArithmeticError):
    pass


class IdentifiabilityError(SmaSimError, ArithmeticError):
    pass


class InstabilityError(SmaSimError, ArithmeticError):
    """An identified or constructed IIR denominator has roots on/outside the unit circle."""

    def __init__(self, root_radii, message=None):
        self.root_radii = tuple(float(r) for r in root_radii)
        bad = [r for r in self.root_radii if r >= 1.0]
        super().__init__(message or f"unstable denominator, root radii >= 1: {bad}")


class ConfigError(SmaSimError, ValueError):
    """Malformed configuration document."""


class SimulationError(SmaSimError, RuntimeError):
    """A simulation failed; ``label`` identifies the scenario or campaign pair."""

    def __init__(self, label, cause):
        self.label = label
        super().__init__(f"[{label}] {cause}")
