"""Exception types raised across the toolkit."""


class ParacrystalError(Exception):
    """Base class for all toolkit errors."""


class WavelengthRangeError(ParacrystalError, ValueError):
    def __init__(self, material, wavelength, bounds):
        self.material = material
        self.wavelength = wavelength
        self.bounds = bounds
        lo, hi = bounds
        super().__init__(
            f"wavelength {wavelength} nm outside the valid range of {material} "
            f"[{lo:g}, {hi:g}] nm"
        )


class AngleDomainError(ParacrystalError, ValueError):
    pass


class NotPhaseMatchableError(ParacrystalError, ValueError):
    pass


class InfeasibleDesignError(ParacrystalError):
    """No waveplate design met the constraints; ``best`` holds the closest miss."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateInputError(ParacrystalError, ValueError):
    pass


class FitConvergenceError(ParacrystalError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class BootstrapUnstableError(ParacrystalError):
    pass


class MatrixDomainError(ParacrystalError, ValueError):
    pass


class ConfigError(ParacrystalError):
    pass
