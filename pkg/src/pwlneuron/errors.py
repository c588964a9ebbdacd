"""Exception hierarchy.

Each class carries the CLI exit code it maps to (config=2, numeric=3,
infeasible=4).
"""


class PwlNeuronError(Exception):
    exit_code = 1


class ConfigError(PwlNeuronError, ValueError):
    exit_code = 2


class NumericError(PwlNeuronError, ArithmeticError):
    exit_code = 3


class InfeasibleError(PwlNeuronError):
    exit_code = 4


class NonFinite(NumericError):
    """State or input became NaN/Inf during integration."""

    def __init__(self, msg, step=None, neuron=None):
        super().__init__(msg)
        self.step = step
        self.neuron = neuron


class WindowTooShort(PwlNeuronError):
    pass


class NotRepresentable(InfeasibleError):
    """Constant needs more signed power-of-two terms than allowed."""


class InsufficientSamples(NumericError):
    pass


class DivisionGuard(NumericError):
    pass


class NoSpikeFound(NumericError):
    pass


class EmptyGrid(ConfigError):
    pass


class EmptyReference(NumericError):
    pass


class TooShort(NumericError):
    pass


class Infeasible(InfeasibleError):
    pass


class DimensionMismatch(ConfigError):
    pass


class NoFiring(NumericError):
    pass
