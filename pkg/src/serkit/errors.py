"""Exception hierarchy shared across the toolkit.

Every error carries a short machine-readable ``code`` (the class name), which
the command line front end prints as ``error: <code>: <message>``.
"""


class SerError(Exception):
    """Base class for all toolkit errors."""

    @property
    def code(self):
        return type(self).__name__


class ManifestError(SerError, ValueError):
    pass


class DuplicatePath(ManifestError):
    pass


class UnknownSplit(ManifestError):
    pass


class EmptyManifest(ManifestError):
    pass


class TooFewPerClass(SerError, ValueError):
    pass


class WavError(SerError, ValueError):
    pass


class MalformedWav(WavError):
    pass


class UnsupportedEncoding(WavError):
    pass


class EmptySpecs(SerError, ValueError):
    pass


class TooShort(SerError, ValueError):
    pass


class NumericError(SerError, ArithmeticError):
    """A non-finite value appeared in a forward pass, a gradient or a loss."""

    def __init__(self, message, layer=None, epoch=None):
        super().__init__(message)
        self.layer = layer
        self.epoch = epoch


class BackwardBeforeForward(SerError, RuntimeError):
    pass


class CheckpointError(SerError, ValueError):
    pass


class BlobLength(CheckpointError):
    pass


class VersionMismatch(CheckpointError):
    pass


class EmptyEval(SerError, ValueError):
    pass


class ConfigError(SerError, ValueError):
    pass
