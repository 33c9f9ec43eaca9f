"""Exception and warning types raised by resonet."""


class ResonetError(Exception):
    """Base class for all resonet errors.

    ``stage`` is filled in by :func:`resonet.calib.run_pipeline` when an error
    escapes one of its stages.
    """

    stage = None

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {msg}"
        return msg


class DomainError(ResonetError, ValueError):
    pass


class SingularElementError(ResonetError, ZeroDivisionError):
    pass


class SingularNetworkError(ResonetError, ZeroDivisionError):
    pass


class OutOfBandError(ResonetError, ValueError):
    """Detuning too large for the small-detuning resonator impedance."""


class ApproximationInvalidError(ResonetError, ValueError):
    """Coupling too strong for the closed-form resonator formulas."""


class NoSuchPortError(ResonetError, KeyError):
    pass


class AsymmetryTooLargeError(ResonetError, ValueError):
    pass


class UnsupportedScenarioError(ResonetError, ValueError):
    pass


class NoResonanceFoundError(ResonetError):
    pass


class WindowTooSparseError(ResonetError):
    pass


class DegenerateGeometryError(ResonetError, ValueError):
    pass


class DelaySearchFailedError(ResonetError):
    pass


class PhaseFitFailedError(ResonetError):
    pass


class NormalizationDegenerateError(ResonetError):
    pass


class UnphysicalFitError(ResonetError):
    pass


class ParseError(ResonetError, ValueError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class UnsupportedFormatError(ResonetError, ValueError):
    pass


class ResonetWarning(UserWarning):
    pass


class ApproximationWarning(ResonetWarning):
    """A closed-form approximation is used outside its stated validity range."""


class AsymmetryWarning(ResonetWarning):
    pass


class SweepCoverageWarning(ResonetWarning):
    pass
