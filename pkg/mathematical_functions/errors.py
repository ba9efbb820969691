# mathematical_functions/errors.py

class FpuLabError(Exception):
    """Base class for every error raised by the simulation library and CLI."""


class InvalidStateError(FpuLabError, ValueError):
    """Chain state has the wrong size or contains non-finite values."""


class InvalidModeStateError(FpuLabError, ValueError):
    """Mode amplitudes/momenta violate Hermitian symmetry beyond tolerance."""


class DegenerateSpectrumError(FpuLabError, ValueError):
    """Energy spectrum has no strictly positive entry, so it cannot be normalized."""


class InvalidDistributionError(FpuLabError, ValueError):
    """Normalized energies contain negative entries or do not sum to one."""


class StepSizeError(FpuLabError, ValueError):
    """Integration step is non-finite, non-positive, or beyond the stability bound."""


class ConfigError(FpuLabError, ValueError):
    """Usage error in the run configuration. `key` names the offending setting."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class FileAccessError(FpuLabError, OSError):
    """An input file could not be read or an output file could not be written."""

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path


class IntegrationBlowUpError(FpuLabError, ArithmeticError):
    """
    A stepper produced non-finite positions or momenta.

    `step_index` and `time` locate the failing step once the integration loop
    has filled them in; `partial_record` is attached by the experiment runner.
    """

    def __init__(self, message: str, step_index: int | None = None, time: float | None = None):
        super().__init__(message)
        self.step_index = step_index
        self.time = time
        self.partial_record = None

    def __str__(self) -> str:
        base = super().__str__()
        if self.step_index is None:
            return base
        return f"{base} (step {self.step_index}, t = {self.time!r})"
