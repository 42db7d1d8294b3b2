"""Exception and warning types shared across solvers."""


class CapacityError(MemoryError):
    """Problem size exceeds the configured capacity of a solver."""


class CutoffOverflow(RuntimeError):
    """Photon population at the Fock-space cutoff exceeds tolerance."""


class NonPositiveDiffusion(RuntimeError):
    """Symmetric-ordered diffusion matrix has a significantly negative eigenvalue.

    Signals operation below the first lasing threshold.
    """

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class TrajectoryDiverged(RuntimeError):
    def __init__(self, message, trajectory=None, time=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.time = time


class InternalQuantaError(RuntimeError):
    """Negative implied photon index in the quanta bookkeeping."""


class DeadState(RuntimeError):
    """All jump channels have zero weight."""


class ConvergenceError(RuntimeError):
    pass


class WindowTooShort(ValueError):
    """Correlation series does not decay far enough to fit a linewidth."""


class BelowNoiseFloor(ValueError):
    """Photon estimate is not significantly above zero."""


class FitQualityWarning(UserWarning):
    pass


class SmallEnsembleWarning(UserWarning):
    pass
