"""Exception hierarchy.

Everything raised by the pipeline derives from :class:`FiberSegError` so the
CLI can map it to exit code 1.
"""


class FiberSegError(Exception):
    pass


class InvalidTensorError(FiberSegError, ValueError):
    pass


class InvalidDirectionError(FiberSegError, ValueError):
    pass


class OutOfBoundsError(FiberSegError, ValueError):
    pass


class InvalidSpecError(FiberSegError, ValueError):
    pass


class InvalidRegionError(FiberSegError, ValueError):
    pass


class InvalidParameterError(FiberSegError, ValueError):
    pass


class EmptyBundleError(FiberSegError):
    pass


class DegenerateTangentError(FiberSegError, ValueError):
    pass


class InvalidGridError(FiberSegError, ValueError):
    pass


class DegenerateFaceError(FiberSegError, ValueError):
    def __init__(self, message, plane=None):
        super().__init__(message)
        self.plane = plane


class InternalConsistencyError(FiberSegError, RuntimeError):
    pass


class IncompatibleMasksError(FiberSegError, ValueError):
    pass


class EmptyReportError(FiberSegError, ValueError):
    pass


class FileFormatError(FiberSegError, OSError):
    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path
