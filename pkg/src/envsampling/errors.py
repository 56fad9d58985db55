"""Exception hierarchy shared by the library and the CLI."""


class EnvSamplingError(Exception):
    pass


class FormatError(EnvSamplingError):
    """A file does not follow the expected layout (bad header, magic, truncation)."""


class DataError(EnvSamplingError):
    """A file parsed correctly but holds values we refuse (NaN, Inf)."""


class CorruptionError(EnvSamplingError):
    """A loaded importance table violates its invariants."""


class BuildError(EnvSamplingError):
    pass


class ConfigurationError(EnvSamplingError, ValueError):
    pass
