"""Sparse voxel grids, SVOX I/O, aggregation, sampling and augmentation."""

from ._earthvox import *  # noqa: F401,F403
from ._earthvox import Error, FormatError, SparseVoxelGrid

__version__ = "0.1.0"
