"""Exception types raised across the package."""


class CureTestError(Exception):
    """Base class for all package errors."""


class AllWeightsZero(CureTestError, ValueError):
    """No observation falls inside the kernel support of the query point."""


class EmptyStratum(CureTestError, ValueError):
    """A requested covariate level has no observations."""


class NoEvents(CureTestError, ValueError):
    """Every observation is censored, so the largest event time is undefined."""


class CureRateOne(CureTestError, ValueError):
    """Estimated incidence is zero; the latency curve is undefined."""


class GSaturated(CureTestError, ValueError):
    """The censoring distribution reaches 1 before the cure threshold."""

    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(
            f"censoring estimate at tau for subject {index} is {value:.6g}; "
            "proxy response is not estimable (enable the saturation cap)"
        )


class MissingBandwidth(CureTestError, ValueError):
    """A continuous conditioning covariate needs a bandwidth."""


class UnexpectedBandwidth(CureTestError, ValueError):
    """A bandwidth was given for a covariate that is not smoothed."""


class TooManyLevels(CureTestError, ValueError):
    """Nominal covariate has too many levels to enumerate orderings."""

    def __init__(self, k, cap):
        self.k = k
        super().__init__(
            f"nominal covariate has {k} levels ({k}! orderings); the limit is "
            f"{cap} levels. Recode it as k-1 dummy variables and test those instead."
        )


class InvalidRange(CureTestError, ValueError):
    """Bad bandwidth grid parameters."""


class BootstrapAbort(CureTestError, RuntimeError):
    """Too many bootstrap resamples failed."""


class UnknownScenario(CureTestError, KeyError):
    """Scenario name not in the registry."""
