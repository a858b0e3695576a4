"""Exception and warning types shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
RegimeError -> 3, ValidationFailure -> 4. Everything else is a bug.
"""


class GhostsimError(Exception):
    """Base class for all ghostsim errors."""


class ConfigError(GhostsimError):
    """Bad user input: scene config, grids, masks, file formats."""


class GridSamplingError(ConfigError):
    """A grid violates a sampling bound (e.g. the Fresnel aliasing guard)."""


class RegimeError(GhostsimError):
    """A requested operation is outside its validity regime.

    Carries an optional `hint` with the suggested remediation (the CLI
    prints it), e.g. "intermediate regime: rerun with mode=numeric".
    """

    def __init__(self, message, hint=None):
        super().__init__(message)
        self.hint = hint


class ValidationFailure(GhostsimError):
    """A statistical validation (Monte Carlo vs analytic) failed."""


class RegimeWarning(UserWarning):
    """Parameters drift outside the regime the closed forms assume."""
