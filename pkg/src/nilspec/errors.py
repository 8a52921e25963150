"""Exception types raised by nilspec."""


class NilspecError(Exception):
    """Base class for library errors."""


class CompletenessError(NilspecError, ValueError):
    """A query asked for information beyond an eigenvalue stream's cutoff."""


class PoleError(NilspecError, ValueError):
    """Evaluation requested at (or too close to) the pole of a zeta function."""


class CertificateError(NilspecError, RuntimeError):
    """A truncation or quadrature certificate could not be established."""
