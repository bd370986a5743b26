"""Exception types raised across the package."""


class TreeletsError(ValueError):
    """Base class for all package errors."""


class InsufficientDataError(TreeletsError):
    pass


class InvalidDataError(TreeletsError):
    pass


class DegenerateVarianceError(TreeletsError):
    """A variance sits at or below the floor; ``index`` is 0-based."""

    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(
            f"degenerate variance {value!r} at index {index} (1-based {index + 1})"
        )


class DegenerateConstructionError(TreeletsError):
    pass


class SingularFitError(TreeletsError):
    pass


class EmptySelectionError(TreeletsError):
    pass
