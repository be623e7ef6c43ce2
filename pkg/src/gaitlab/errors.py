"""Exception types shared across gaitlab modules."""


class GaitlabError(Exception):
    """Base class for all gaitlab-specific errors."""


class ConfigError(GaitlabError, ValueError):
    """Invalid configuration value or inconsistent option combination."""


class InsufficientDataError(GaitlabError, ValueError):
    """An operation needs more data than the caller supplied
    (e.g. across-episode statistics from a single episode, or a cycle
    metric from a trace shorter than one cycle)."""


class ExplorationModeError(GaitlabError, ValueError):
    """A learner received a batch collected under the wrong exploration
    mode (action-space vs parameter-space)."""


class DataError(GaitlabError, ValueError):
    """Run artifacts are missing or malformed."""
