"""Exception hierarchy shared by the analysis, synthesis and simulation modules."""


class CrnError(Exception):
    """Base class for all library errors."""


class UnstableModelError(CrnError, ValueError):
    """Raised when total utilization reaches or exceeds the server count."""

    def __init__(self, rho, n_servers, message=None):
        self.rho = rho
        self.n_servers = n_servers
        if message is None:
            message = (f"unstable model: total utilization rho={rho:.6g} must be "
                       f"strictly below N={n_servers} (stability condition rho < N)")
        super().__init__(message)


class RefinementInstabilityError(UnstableModelError):
    """A sensing/imperfection refinement pushed the model past the stability bound."""

    def __init__(self, rho, n_servers, transform):
        self.transform = transform
        super().__init__(
            rho, n_servers,
            f"refinement-induced instability after {transform}: rho'={rho:.6g} >= N={n_servers}")


class UndefinedDelayError(CrnError, ValueError):
    """Mean delay of a class with zero arrival rate is undefined."""


class TruncationCapError(CrnError):
    def __init__(self, achieved_tail_mass, i_max, j_max, cap):
        self.achieved_tail_mass = achieved_tail_mass
        self.i_max = i_max
        self.j_max = j_max
        self.cap = cap
        super().__init__(
            f"truncation cap exceeded: cap={cap} per axis, last bounds=({i_max}, {j_max}), "
            f"achieved boundary mass={achieved_tail_mass:.3e}")


class ConvergenceError(CrnError):
    def __init__(self, residual, tolerance):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(f"stationary solve did not converge: residual {residual:.3e} > {tolerance:.3e}")


class DegenerateRegionError(CrnError, ValueError):
    """The two absolute-priority vertices do not span a proper segment."""


class InfeasibleThresholdsError(CrnError, ValueError):
    """No mixing parameter satisfies both waiting-time thresholds."""


class SimBudgetError(CrnError):
    """The event budget ran out before the requested departures were measured."""

    def __init__(self, message, partial=None):
        self.partial = partial
        super().__init__(message)
