"""Exception hierarchy shared by all gensm modules."""


class GensmError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(GensmError, ValueError):
    """A configuration violates its invariants."""


class DimensionError(ConfigError):
    """Array or counting dimensions are inconsistent."""


class NumericalError(GensmError, ArithmeticError):
    """A numerical routine hit an invalid or degenerate input."""


class NumericalDomainError(NumericalError):
    """A covariance that should be positive definite is not."""


class DegenerateCovarianceError(NumericalDomainError):
    """A covariance could not be Cholesky-factorized for sampling."""


class RankDeficientError(NumericalError):
    """The reduced-complexity gradient needs an invertible Gram matrix.

    ``agc_index`` is the zero-based AGC whose N_RF x N_RF Gram matrix is
    singular.
    """

    def __init__(self, agc_index: int, message: str | None = None):
        self.agc_index = agc_index
        super().__init__(
            message
            or f"C_m^H A^H H^H H A C_m is rank deficient for AGC index {agc_index}"
        )
