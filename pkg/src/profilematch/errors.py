"""Exception types shared across the package."""


class ProfileMatchError(Exception):
    """Base class for all package errors."""


class ParseError(ProfileMatchError):
    """Malformed input record; carries the offending line number."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ReferentialError(ProfileMatchError):
    """A record points at something that does not exist."""


class CapacityError(ProfileMatchError):
    """A request exceeds what the data can supply."""


class ConfigurationError(ProfileMatchError):
    """A metric/model configuration is inconsistent with its inputs."""


class ProviderError(ProfileMatchError):
    """A remote lookup provider failed (distinct from 'not found')."""


class ImageFormatError(ProfileMatchError):
    """An image is undecodable, zero-sized, or has the wrong shape."""


class ModelFormatError(ProfileMatchError):
    """A model file is corrupted or has an unsupported version."""
