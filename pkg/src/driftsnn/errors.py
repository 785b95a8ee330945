"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration/usage problems
exit 2, malformed data files exit 3, an infeasible model search exits 4.
"""


class ConfigError(ValueError):
    """Invalid parameter value, inconsistent configuration, or bad usage."""


class DataFormatError(ValueError):
    """Malformed or inconsistent dataset file (IDX parsing, pairing)."""

    def __init__(self, message: str, path=None, offset=None):
        self.path = path
        self.offset = offset
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if offset is not None:
            detail = f"{detail} (at byte offset {offset})"
        super().__init__(detail)


class InfeasibleSearchError(RuntimeError):
    """Model search found no candidate satisfying the constraints."""


class NumericalFault(FloatingPointError):
    """Non-finite value detected in simulation state.

    Carries the index of the first offending neuron so the failure is
    attributable.
    """

    def __init__(self, what: str, neuron: int):
        self.what = what
        self.neuron = neuron
        super().__init__(f"non-finite {what} at neuron {neuron}")
