"""Exception hierarchy for kerrcrit."""


class KerrError(Exception):
    """Base class for all kerrcrit errors."""


class CutoffOverflow(KerrError):
    pass


class DimensionMismatch(KerrError, ValueError):
    pass


class DimensionTooLarge(KerrError):
    pass


class StepTooLarge(KerrError):
    pass


class SingularSystem(KerrError):
    pass


class SeriesDivergence(KerrError):
    pass


class NotConverged(KerrError):
    pass


class GapAmbiguous(KerrError):
    """Two distinct nonzero eigenvalues tie for the gap."""

    def __init__(self, first, second):
        super().__init__(f"gap ambiguous between {first} and {second}")
        self.candidates = (first, second)


class GridTooSmall(KerrError):
    pass


class NoMinimumInBracket(KerrError):
    pass


class WindowTooSmall(KerrError):
    pass


class DegenerateFit(KerrError):
    pass


class ConfigInvalid(KerrError):
    pass


class TaskFailed(KerrError):
    pass


class MissingInput(KerrError):
    pass
