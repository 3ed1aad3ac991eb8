"""Exception types raised across the package."""


class NocsPoseError(Exception):
    """Base class for all errors raised by nocspose."""


class MeshParseError(NocsPoseError, ValueError):
    """A mesh file could not be parsed. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class UnsupportedGeometryError(MeshParseError):
    """The mesh uses faces other than triangles."""


class DegenerateMeshError(NocsPoseError, ValueError):
    pass


class BehindCameraError(NocsPoseError, ValueError):
    pass


class CropError(NocsPoseError, ValueError):
    pass


class InsufficientDataError(NocsPoseError, ValueError):
    pass


class DegenerateConfigurationError(NocsPoseError, ValueError):
    pass


class NoConsensusError(NocsPoseError, RuntimeError):
    """RANSAC found no hypothesis supported by enough inliers."""


class ConfigError(NocsPoseError, ValueError):
    pass
