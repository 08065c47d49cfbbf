"""Exception hierarchy shared by the rodtopo modules."""


class RodTopoError(Exception):
    """Base class for all rodtopo errors."""


class SchemaError(RodTopoError):
    """The input text does not match the diagram JSON schema."""


class DiagramValidationError(RodTopoError):
    """A rod diagram violates a structural invariant.

    Carries the offending rod index when one is identifiable.
    """

    def __init__(self, message, rod_index=None):
        if rod_index is not None:
            message = f"rod {rod_index}: {message}"
        super().__init__(message)
        self.rod_index = rod_index


class InadmissibleCornerError(RodTopoError):
    """Two flanking rod structures have second determinant divisor != 1."""

    def __init__(self, message, det2=None):
        super().__init__(message)
        self.det2 = det2


class PlumbingRelationError(RodTopoError):
    """A (bundles, plumbing vectors) collection violates a plumbing relation."""


class CompactifyError(RodTopoError):
    """Horizon filling / end capping could not produce a valid closed diagram."""


class ClassifyError(RodTopoError):
    """The classification chart does not apply to the given diagram."""


class ModelMapError(RodTopoError):
    """The model map cannot be constructed for the given rod data set."""
