"""Exception types.  Physics stop conditions carry a short ``reason`` used in run manifests."""


class CapwaveError(Exception):
    reason = "error"


class ConfigError(CapwaveError, ValueError):
    reason = "config"


class GeometryError(CapwaveError, ValueError):
    reason = "geometry"


class DiffeomorphismError(GeometryError):
    reason = "diffeomorphism_loss"


class SelfIntersectionError(GeometryError):
    reason = "self_intersection"


class MeshFoldError(GeometryError):
    reason = "mesh_fold"


class AngleExitError(GeometryError):
    reason = "angle_exit"


class CompatibilityError(CapwaveError, ValueError):
    reason = "compatibility"

    def __init__(self, defect, message=None):
        self.defect = float(defect)
        super().__init__(message or f"Neumann data incompatible, defect {self.defect:.6g}")


class ResolutionError(CapwaveError, ValueError):
    reason = "resolution"


class CFLError(CapwaveError, ValueError):
    reason = "cfl"


class ConvergenceError(CapwaveError, RuntimeError):
    reason = "picard_fail"

    def __init__(self, message, history=()):
        self.history = list(history)
        super().__init__(message)
