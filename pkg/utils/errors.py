# =========================================================
# ❗ ERROR HIERARCHY
# Library code raises these; only commands/ catches them.
# =========================================================


class WillmoreLabError(Exception):
    """Base class for every error raised by the lab."""


class MeshError(WillmoreLabError):
    """OBJ parse failures and topological validation failures."""


class DegenerateMeshError(MeshError):
    """Faces or edges collapsed below tolerance."""


class GeometryError(WillmoreLabError):
    """A discrete operator hit pathological geometry (zero normals, infinite weights)."""


class QuadratureError(WillmoreLabError):
    def __init__(self, message, achieved_error=None):
        super().__init__(message)
        self.achieved_error = achieved_error


class FlowError(WillmoreLabError):
    """Non-finite velocities and other step failures."""


class DegenerationError(FlowError):
    def __init__(self, message, step_index=None, time=None):
        super().__init__(message)
        self.step_index = step_index
        self.time = time


class OracleError(WillmoreLabError):
    """Parameters outside the range where the sphere solution is defined."""


class ConfigError(WillmoreLabError):
    """Experiment configuration failed validation."""


class InsufficientDataError(WillmoreLabError):
    """Not enough records or snapshots for an analysis."""
