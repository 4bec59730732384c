"""Exception types shared across the package."""


class GridMismatchError(ValueError):
    """Two fields (or a field and a grid) do not live on the same grid."""


class VacuumError(RuntimeError):
    """Density dropped below the vacuum floor during a compressible run."""


class CFLError(ValueError):
    """Requested time step exceeds the stability bound of the integrator."""


class ResolutionError(ValueError):
    """Data carry too much energy in the top retained modes."""


class AdmissibilityError(ValueError):
    """A test pair (r, U) violates the admissibility conditions."""


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
