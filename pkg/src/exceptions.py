class OrdinalDesignError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(OrdinalDesignError, ValueError):
    """Two vectors that must share the number of categories do not."""


class NonMonotoneResult(OrdinalDesignError, ValueError):
    """An odds-ratio vector implies negative category probabilities."""


class WrongModel(OrdinalDesignError, ValueError):
    """Posterior draws come from a different model than the criterion needs."""


class ChainDegenerate(OrdinalDesignError, RuntimeError):
    """The sampler accepted almost nothing after adaptation."""


class FitFailure(OrdinalDesignError, RuntimeError):
    """The maximum-likelihood fit did not converge."""


class InsufficientDraws(OrdinalDesignError, ValueError):
    """A chain handed to model selection has no retained draws."""


class TrialInvalid(OrdinalDesignError, RuntimeError):
    """A simulated trial could not be analysed."""


class NoFeasiblePair(OrdinalDesignError, RuntimeError):
    """Every cutoff pair on the grid exceeds the type I error target."""


class TargetUnreachable(OrdinalDesignError, RuntimeError):
    """No sample size on the grid reaches the power target."""

    def __init__(self, message: str, max_n: int, max_power: float):
        super().__init__(message)
        self.max_n = max_n
        self.max_power = max_power


class ConfigError(OrdinalDesignError, ValueError):
    """Invalid run configuration; `key` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
