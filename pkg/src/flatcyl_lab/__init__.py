"""flatcyl-lab: numerical laboratory for geodesic dynamics on a surface
with a flat cylinder."""

from .surface import GeodesicKind, ProfileParams, UnitVector

__version__ = "0.1.0"

__all__ = ["GeodesicKind", "ProfileParams", "UnitVector", "__version__"]
