class DiffInjectError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(DiffInjectError, ValueError):
    """Inputs have incompatible shapes, lengths or sample rates."""


class ParameterError(DiffInjectError, ValueError):
    """A parameter is outside its valid domain."""


class LoadError(DiffInjectError, ValueError):
    """A data file could not be parsed or validated."""
