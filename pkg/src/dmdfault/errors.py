"""Exception hierarchy.

Every error carries a short machine-readable ``category`` so the CLI can
report failures on stderr without parsing messages.
"""


class DmdFaultError(Exception):
    category = "error"


class MissingChannelError(DmdFaultError, KeyError):
    category = "missing_channel"

    def __init__(self, name, available=()):
        self.name = name
        self.available = tuple(available)
        msg = f"channel {name!r} not found"
        if self.available:
            msg += f" (available: {', '.join(self.available)})"
        super().__init__(msg)

    def __str__(self):
        # KeyError would otherwise repr() the message
        return self.args[0]


class NonUniformSamplingError(DmdFaultError, ValueError):
    category = "non_uniform_sampling"


class InsufficientDataError(DmdFaultError, ValueError):
    category = "insufficient_data"


class ShapeError(DmdFaultError, ValueError):
    category = "shape"


class NumericError(DmdFaultError, ValueError):
    category = "numeric"


class ParameterError(DmdFaultError, ValueError):
    category = "parameter"


class ConfigurationError(DmdFaultError, ValueError):
    category = "configuration"


class SingleClassError(DmdFaultError, ValueError):
    category = "single_class"


class FormatVersionError(DmdFaultError, ValueError):
    category = "incompatible_version"


class ModelParseError(DmdFaultError, ValueError):
    category = "parse"
