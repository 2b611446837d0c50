"""Input checks shared by the estimators."""
from collections.abc import Mapping

import numpy as np

from .errors import InvalidGridError, InvalidParameterError, InvalidRegionError
from .raygrid import EvalGrid
from .tensor import TensorVolume
from .tracking import PlanarRegion


def check_volume(vol):
    if not isinstance(vol, TensorVolume):
        raise InvalidParameterError(f"expected a TensorVolume, got {type(vol).__name__}")
    if not np.all(np.isfinite(vol.data)):
        raise InvalidParameterError("tensor volume contains non-finite values")
    return vol


def check_regions(regions):
    if not isinstance(regions, Mapping):
        raise InvalidRegionError("regions must map 'seed', 'a', 'b' to PlanarRegion objects")
    out = {}
    for key in ("seed", "a", "b"):
        region = regions.get(key)
        if isinstance(region, Mapping):
            region = PlanarRegion.from_dict(region)
        if not isinstance(region, PlanarRegion):
            raise InvalidRegionError(f"missing or invalid region {key!r}")
        out[key] = region
    return out


def check_grid(grid):
    if not isinstance(grid, EvalGrid):
        raise InvalidGridError(f"expected an EvalGrid, got {type(grid).__name__}")
    shape = grid.shape
    for name in ("fa", "alpha_c", "alpha_n", "in_bounds"):
        if getattr(grid, name).shape != shape:
            raise InvalidGridError(f"grid attribute {name} has shape "
                                   f"{getattr(grid, name).shape}, expected {shape}")
    if len(grid.frames) != shape[0]:
        raise InvalidGridError("grid frame count does not match plane count")
    return grid
