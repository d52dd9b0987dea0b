"""Exception hierarchy; the CLI maps these to exit codes."""


class AdapterError(Exception):
    """Base class for every error the adapter raises on purpose."""


class InvalidConfigError(AdapterError):
    pass


class FramesError(AdapterError):
    """Frame directory missing, empty, unreadable, or inconsistent."""


class BackendUnavailableError(AdapterError):
    """Tracker package or checkpoint not installed on this machine."""


class InferenceError(AdapterError):
    pass


class VideoError(AdapterError):
    pass
