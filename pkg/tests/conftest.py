import numpy as np
import pytest

from fiberseg.config import torus_regions
from fiberseg.phantom import TorusPhantomSpec, generate_torus_phantom
from fiberseg.tensor import TensorVolume
from fiberseg.tracking import PlanarRegion


def uniform_volume(direction=(0.0, 0.0, 1.0), dims=(11, 11, 41), origin=(-5.0, -5.0, -20.0),
                   evals=(1.0e-3, 0.2e-3, 0.2e-3)):
    """Constant anisotropic field with principal axis ``direction``."""
    e = np.asarray(direction, dtype=float)
    e /= np.linalg.norm(e)
    mat = evals[1] * np.eye(3) + (evals[0] - evals[1]) * np.outer(e, e)
    six = [mat[0, 0], mat[1, 1], mat[2, 2], mat[0, 1], mat[0, 2], mat[1, 2]]
    return TensorVolume(dims, (1.0, 1.0, 1.0), origin, np.broadcast_to(six, tuple(dims) + (6,)))


@pytest.fixture(scope="session")
def torus():
    spec = TorusPhantomSpec()
    vol, mask = generate_torus_phantom(spec)
    return spec, vol, mask


@pytest.fixture(scope="session")
def torus_regions_obj():
    return {k: PlanarRegion.from_dict(v) for k, v in torus_regions({}).items()}


@pytest.fixture(scope="session")
def torus_bundle(torus, torus_regions_obj):
    from fiberseg.estimators import BundleGridBuilder

    _, vol, _ = torus
    builder = BundleGridBuilder()
    grid = builder.fit_transform(vol, regions=torus_regions_obj)
    return builder, grid
