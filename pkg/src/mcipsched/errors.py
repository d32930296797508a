class CapExceeded(RuntimeError):
    """A configured size cap (search box, state space, enumeration) was hit."""


class ModelMismatch(ValueError):
    """Schedule variant does not match the instance model."""


class BoundExceeded(ValueError):
    """A schedule's makespan exceeds the bound it is measured against."""
