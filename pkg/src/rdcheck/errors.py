"""Error types shared across the package.

Plain ``ValueError`` is used for domain errors on scalar arguments (negative
gamma, nonpositive masses, and so on).  The two classes here exist because the
command line maps them to distinct exit codes.
"""

from __future__ import annotations


class ConfigError(Exception):
    """Invalid run configuration.

    Carries the full list of validation messages, not just the first, so a
    user can fix a config file in one pass.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class NumericalFailure(RuntimeError):
    """Unrecoverable numerical breakdown during a run.

    Attributes:
        time: simulation time at which the failure occurred.
        species: index of the offending species, or None.
        value: the offending value (e.g. the minimum after halving was
            exhausted, or a vanishing pivot).
    """

    def __init__(self, message, time=None, species=None, value=None):
        super().__init__(message)
        self.time = time
        self.species = species
        self.value = value
