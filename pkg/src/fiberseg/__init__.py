"""Fiber bundle boundary estimation from diffusion tensor volumes."""
from .estimators import BundleGridBuilder, GraphBoundarySegmenter, RayBoundarySegmenter
from .phantom import (BinaryMask, CurvedTubePhantomSpec, TorusPhantomSpec,
                      generate_curved_tube_phantom, generate_torus_phantom)
from .tensor import DiffusionTensor, EigenSystem, TensorVolume

__version__ = "0.1.0"

__all__ = [
    "BinaryMask", "BundleGridBuilder", "CurvedTubePhantomSpec", "DiffusionTensor",
    "EigenSystem", "GraphBoundarySegmenter", "RayBoundarySegmenter", "TensorVolume",
    "TorusPhantomSpec", "generate_curved_tube_phantom", "generate_torus_phantom",
]
