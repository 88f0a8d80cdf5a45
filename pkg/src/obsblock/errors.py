"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line frontend, so a
failing design maps to a stable, documented process status.
"""


class ObsBlockError(Exception):
    """Base class for all package errors."""

    exit_code = 1


# -- input / model errors -----------------------------------------------------

class ParseError(ObsBlockError):
    """Network file is not valid JSON."""

    exit_code = 10


class ValidationError(ObsBlockError):
    """Network description violates an invariant.

    ``path`` names the offending field, e.g. ``edges[3].w``.
    """

    exit_code = 11

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InvalidWeight(ValidationError):
    exit_code = 12


class NotStronglyConnected(ObsBlockError):
    exit_code = 13


class DimensionMismatch(ObsBlockError, ValueError):
    exit_code = 14


# -- numerical substrate ------------------------------------------------------

class EigFailure(ObsBlockError):
    exit_code = 20


class KernelDimensionUnexpected(ObsBlockError):
    """Kernel of ``[(L - lam I) B]`` does not have dimension q."""

    exit_code = 21


# -- eigenstructure assignment ------------------------------------------------

class InadmissibleTarget(ObsBlockError):
    """A dictated eigenvector is not attainable at its eigenvalue."""

    exit_code = 30


class CompletionFailed(ObsBlockError):
    exit_code = 31


class SingularModalMatrix(ObsBlockError):
    exit_code = 32


class ResidualTooLarge(ObsBlockError):
    exit_code = 33


# -- blocking designs ---------------------------------------------------------

class NotDistinct(ObsBlockError):
    exit_code = 40


class NotDistinctReal(ObsBlockError):
    exit_code = 41


class RepeatedEigenvalues(NotDistinct, NotDistinctReal):
    """Open-loop spectrum has clustered eigenvalues (Jordan-chain designs
    are not supported)."""

    exit_code = 42


class Uncontrollable(ObsBlockError):
    exit_code = 43


class KernelInfeasible(ObsBlockError):
    exit_code = 44


class ConjugateDegenerate(ObsBlockError):
    """The blocking vector for a complex mode is real up to phase, so it and
    its conjugate cannot both be placed; more actuators are needed."""

    exit_code = 45


class TooManyModes(ObsBlockError):
    exit_code = 46


class AlreadyObservable(ObsBlockError):
    exit_code = 47


class EnableInfeasible(ObsBlockError):
    exit_code = 48


class InsufficientActuators(ObsBlockError):
    exit_code = 49


# -- topology / regional ------------------------------------------------------

class EmptyKeep(ObsBlockError, ValueError):
    exit_code = 50


class NotACut(ObsBlockError):
    exit_code = 51


class NoAdmissibleMode(ObsBlockError):
    exit_code = 52


class AccessibleNotStronglyConnected(ObsBlockError):
    exit_code = 53


class EscalationExhausted(ObsBlockError):
    exit_code = 54

    def __init__(self, message, spectrum=None):
        self.spectrum = spectrum
        super().__init__(message)


# -- verification -------------------------------------------------------------

class VerificationFailed(ObsBlockError):
    exit_code = 60
