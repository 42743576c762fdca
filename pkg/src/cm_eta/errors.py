"""Exception hierarchy shared by all stages of the pipeline."""


class CMEtaError(Exception):
    """Base class; ``stage`` names the pipeline step that failed."""

    stage = "core"

    def __init__(self, message, stage=None):
        super().__init__(message)
        if stage is not None:
            self.stage = stage


class InvalidArgument(CMEtaError, ValueError):
    pass


class InvalidDiscriminant(InvalidArgument):
    stage = "qforms"


class InvalidExponent(InvalidArgument):
    stage = "etaquot"


class InvalidPrimes(InvalidArgument):
    stage = "etaquot"


class UnsupportedConductor(CMEtaError):
    stage = "qforms"


class InertPrime(CMEtaError):
    stage = "qforms"


class NoNormNForm(CMEtaError):
    stage = "qforms"


class DegenerateDiscriminant(CMEtaError):
    stage = "galois-plan"


class NotTotallyRamified(CMEtaError):
    stage = "galois-plan"


class InvarianceConditionsUnmet(CMEtaError):
    stage = "etaquot"


class PrecisionFailure(CMEtaError):
    stage = "classpoly"


class RoundingFailure(PrecisionFailure):
    pass
