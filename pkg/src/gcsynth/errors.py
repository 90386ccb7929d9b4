"""Exception types shared across the package."""


class GcsynthError(Exception):
    """Base class for all package errors."""


class ModelError(GcsynthError, ValueError):
    """Malformed matrices or plant data."""


class NonSquare(ModelError):
    pass


class NotSymmetric(ModelError):
    pass


class DimensionMismatch(ModelError):
    def __init__(self, field, expected, got):
        self.field = field
        self.expected = expected
        self.got = got
        super().__init__(f"{field}: expected shape {expected}, got {got}")


class NotPositiveDefinite(ModelError):
    def __init__(self, field):
        self.field = field
        super().__init__(f"{field} is not positive definite")


class ConstantTermInPsi(ModelError):
    pass


class UnsupportedIQC(ModelError):
    pass


class NotHurwitz(GcsynthError, ValueError):
    pass


class NonFiniteState(GcsynthError, RuntimeError):
    """Simulation diverged. ``trajectory`` holds the samples up to the blow-up."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class EmptySearchSpace(GcsynthError, ValueError):
    pass


class Infeasible(GcsynthError):
    """A multiplier point fails one of the synthesis conditions.

    These are expected outcomes during a multiplier search, not program
    failures; :func:`gcsynth.synthesis.evaluate_point` turns them into values.
    """

    reason = "Infeasible"


class AllZeroMultiplier(Infeasible):
    reason = "AllZeroMultiplier"


class WrongInertia(Infeasible):
    reason = "WrongInertia"


class SingularU11(Infeasible):
    reason = "SingularU11"


class SingularT11(SingularU11):
    pass


class D11TooLarge(Infeasible):
    reason = "D11TooLarge"


class GtauSingular(Infeasible):
    reason = "GtauSingular"


class NoStabilizingSolution(Infeasible):
    reason = "NoStabilizingSolution"


class XNotPSD(Infeasible):
    reason = "XNotPSD"
