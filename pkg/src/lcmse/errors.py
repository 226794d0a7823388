"""Exception and warning taxonomy shared across the package.

Public functions raise these instead of bare ValueError so callers (and the
CLI/service layer) can map failures to exit codes and HTTP statuses without
string matching.
"""

from __future__ import annotations


class LcmseError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDimensionError(LcmseError, ValueError):
    """Source count K outside the supported range, or a size that cannot
    correspond to any K."""


class InvalidModelError(LcmseError, ValueError):
    """A latent class model violates its invariants.

    ``path`` locates the first offending field when the model came from a
    structured document (e.g. ``classes[1].probs[0]``); it is ``None`` for
    models built in code.
    """

    def __init__(self, message: str, path: str | None = None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class InvalidTableError(LcmseError, ValueError):
    """A contingency table violates its invariants (bad counts, missing or
    duplicated patterns, malformed CSV)."""


class DimensionMismatchError(LcmseError, ValueError):
    """Two arguments that must share a source count K (or a length) do not."""


class DegenerateModelError(LcmseError):
    """The missing-cell mass is 1: no individual is observable, so
    conditional probabilities are undefined."""


class RegimeError(LcmseError, ValueError):
    """The requested construction is invalid in this (J, K) regime."""


class DomainError(LcmseError, ValueError):
    """A scalar argument is outside its mathematical domain."""


class NonidentifiableFamilyWarning(UserWarning):
    """The latent class family in use has 2J > K and is therefore not
    identifiable: distinct models can produce identical observable-cell
    distributions while implying different population sizes."""


class OverparameterizedWarning(UserWarning):
    """The family has more free parameters than observable degrees of
    freedom (J(K+1) - 1 > 2^K - 2)."""


class DistinctnessWarning(UserWarning):
    """A fitted model has two classes sharing a sampling probability for some
    source; the family membership restriction is violated (descriptively
    harmless, but the fit is on the family boundary)."""
