"""Exception types shared across the package."""


class SplatNavError(Exception):
    """Base class for all package errors."""


class PlyParseError(SplatNavError, ValueError):
    """Malformed PLY header or payload; message names the offending part."""


class UnsupportedLayoutError(SplatNavError, ValueError):
    """PLY field layout does not match any supported SH degree."""


class ValidationError(SplatNavError, ValueError):
    """Loaded data violates a container invariant (non-finite values, bad weights...)."""


class ConsistencyError(SplatNavError, ValueError):
    """Cross-array mismatch inside a bundle (frame counts, joint counts...)."""


class SchemaError(SplatNavError, ValueError):
    """Config or manifest JSON is missing required keys or has wrong types."""


class ContractViolation(SplatNavError, ValueError):
    """An operation was called outside its documented precondition."""


class NavGridBuildError(SplatNavError, ValueError):
    """Occupancy source produced an unusable grid (e.g. no walkable cells)."""


class InvalidEndpointError(SplatNavError, ValueError):
    """Geodesic query endpoint could not be snapped to a walkable cell."""


class EpisodeGenerationError(SplatNavError, RuntimeError):
    """Episode sampling failed to find a qualifying start/goal pair."""
