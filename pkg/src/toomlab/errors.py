"""Exception hierarchy shared by every module."""


class ToomlabError(Exception):
    """Base class. ``code`` is the short machine-readable tag used by the CLI."""

    code = "error"


class ConfigError(ToomlabError):
    code = "config"


class UnknownModel(ConfigError):
    code = "unknown_model"


class NonMonotone(ToomlabError):
    code = "non_monotone"


class ConstantMap(ToomlabError):
    code = "constant_map"


class WindowTooSmall(ToomlabError):
    code = "window_too_small"


class Infeasible(ToomlabError):
    code = "infeasible"


class ZeroWeight(ToomlabError):
    code = "zero_weight"


class InvalidBeta(ToomlabError):
    code = "invalid_beta"


class CertificateFailed(ToomlabError):
    code = "certificate_failed"


class AllFailed(CertificateFailed):
    code = "all_failed"


class OutOfRange(ToomlabError):
    code = "out_of_range"


class NotConnected(ToomlabError):
    code = "not_connected"


class WindowClip(ToomlabError):
    code = "window_clip"


class Explosion(ToomlabError):
    code = "explosion"


class InvalidPath(ToomlabError):
    code = "invalid_path"


class IoError(ToomlabError):
    code = "io"
