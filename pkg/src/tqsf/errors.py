"""Exception types shared across the package."""


class CapacityError(Exception):
    """Requested simulation exceeds the exact-mode size limits."""


class DecodeError(Exception):
    """A measured register integer does not map to any valid spin label."""


class AliasingError(Exception):
    """Two distinct eigenvalues collide on the same register integer.

    Raised when a phase-estimation register is too small to separate the
    spectrum of the operator it reads out.
    """
