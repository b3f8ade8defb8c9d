"""Exception hierarchy shared by all modules."""


class AcsphereError(Exception):
    """Base class; carries the module/operation that raised it."""

    where = "acsphere"

    def __init__(self, message, *, where=None):
        super().__init__(message)
        if where is not None:
            self.where = where

    def __str__(self):
        return f"[{self.where}] {super().__str__()}"


class InvalidPotentialError(AcsphereError, ValueError):
    where = "potential"


class UnsupportedGeometryError(AcsphereError, ValueError):
    where = "geometry"


class PreconditionError(AcsphereError, ValueError):
    pass


class BrezisOswaldError(AcsphereError, RuntimeError):
    where = "stationary.brezis_oswald_solve"


class IndeterminateNullityError(AcsphereError, RuntimeError):
    where = "spectrum.assemble"


class OracleMismatchError(AcsphereError, RuntimeError):
    where = "spectrum.constant_spectrum_oracle"


class EigenSolverError(AcsphereError, RuntimeError):
    where = "spectrum.mode_eigenvalues"


class ConfigError(AcsphereError, ValueError):
    where = "cli.config"
