"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 2, DependencyError -> 3,
TransportError (and its ProtocolError subclass) -> 4.
"""


class CitefidError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(CitefidError):
    """Invalid configuration file, flag combination, or run environment."""


class DependencyError(CitefidError):
    """A stage was invoked before the stages that produce its inputs."""


class TransportError(CitefidError):
    """Remote scorer/classifier unreachable after bounded retries."""


class ProtocolError(TransportError):
    """Remote endpoint answered but violated the wire contract."""


class InsufficientDataError(CitefidError):
    """Too few observations for the requested estimate."""


class SingularDesignError(CitefidError):
    """Design matrix is rank deficient."""

    def __init__(self, columns: list[str]):
        self.columns = columns
        super().__init__(f"design matrix is rank deficient; collinear columns: {columns}")
