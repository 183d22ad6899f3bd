"""Exception hierarchy for effectlab.

Every error raised on purpose by the library derives from
:class:`EffectLabError`, so callers can catch one base class. Subclasses map
onto the distinct failure modes of the public operations.
"""


class EffectLabError(Exception):
    """Base class for all effectlab errors."""


class ConfigurationError(EffectLabError):
    """A config object carries values outside its documented ranges, or a
    requested configuration is unreachable (e.g. a target treated fraction
    that clipping makes impossible)."""


class InvalidInterventionError(EffectLabError):
    """An intervention references a forbidden node (the outcome/sink) or a
    value incompatible with the node kind."""


class DegenerateTreatmentError(EffectLabError):
    """The chosen treatment node has no directed path to the outcome, so no
    effect can exist by construction."""


class EpisodeGenerationError(EffectLabError):
    """Episode generation exhausted its retry budget without finding an
    eligible treatment contrast."""


class ContractError(EffectLabError):
    """Inputs violate a shape or schema contract (e.g. an episode that does
    not match the model configuration it is evaluated under)."""


class CapacityError(EffectLabError):
    """Encoded covariate dimension exceeds the model's slot budget and
    truncation is disabled."""


class TrainingDivergenceError(EffectLabError):
    """Training hit a non-finite loss. Carries the last finite-loss
    parameters so the run is not lost."""

    def __init__(self, message, last_good_params=None, history=None):
        super().__init__(message)
        self.last_good_params = last_good_params
        self.history = history


class PositivityError(EffectLabError):
    """Estimation requires both treatment arms but the data contains only
    one."""


class NotFittedError(EffectLabError):
    """An estimator was asked for predictions before being fitted."""
