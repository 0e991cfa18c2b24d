##
# File:    TriPlane.py
# Author:  jdw
# Date:    13-Oct-2026
#
# Updates:
#  14-Oct-2026 jdw add pseudo-image packing and [-1, 1] finalization
##
"""
Triplane feature maps: projection, bilinear feature lookup and pseudo-image packing.

Plane axis convention: for plane "ab" the first scene axis a maps to columns and the second
axis b maps to rows.  Texel centers sit at integer coordinates and the box [-0.5, 0.5]
spans texel coordinates [0, N - 1].  Lookups outside that range clamp to the edge texels.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import logging
from collections import namedtuple

import numpy as np
import torch
import torch.nn.functional as F

from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError, ValueRangeError
from rcsb.utils.triplane.TriPlaneIoUtils import TriPlaneIoUtils

logger = logging.getLogger(__name__)

PseudoImageStack = namedtuple("PseudoImageStack", "images orderTag")

PSEUDO_IMAGE_ORDER = "xy0,xy1,xz0,xz1,yz0,yz1"
PSEUDO_IMAGE_CHANNELS = 6


class TriPlane(object):
    """Three axis-aligned C x H x W feature planes stored as one (3, C, H, W) tensor in (xy, xz, yz) order."""

    def __init__(self, planes):
        if not torch.is_tensor(planes):
            planes = torch.as_tensor(np.asarray(planes))
        if planes.dim() != 4 or planes.shape[0] != 3:
            raise ShapeMismatchError("Triplane tensor must have shape (3, C, H, W) (got %r)" % (tuple(planes.shape),))
        if planes.shape[2] != planes.shape[3]:
            raise ShapeMismatchError("Triplane planes must be square (got %r)" % (tuple(planes.shape[2:]),))
        if planes.shape[2] < 2:
            raise ShapeMismatchError("Triplane resolution must be at least 2")
        self.planes = planes

    @classmethod
    def zeros(cls, resolution=64, channels=PSEUDO_IMAGE_CHANNELS, dtype=torch.float32):
        return cls(torch.zeros((3, channels, resolution, resolution), dtype=dtype))

    @classmethod
    def randomNormal(cls, resolution=64, channels=PSEUDO_IMAGE_CHANNELS, std=0.05, generator=None, dtype=torch.float32):
        return cls(std * torch.randn((3, channels, resolution, resolution), generator=generator, dtype=dtype))

    @property
    def resolution(self):
        return int(self.planes.shape[2])

    @property
    def channels(self):
        return int(self.planes.shape[1])

    def getPlane(self, name):
        return self.planes[("xy", "xz", "yz").index(name)]

    def clone(self):
        return TriPlane(self.planes.detach().clone())

    def toNumpy(self):
        return self.planes.detach().cpu().numpy()

    # -- projection and lookup --

    @staticmethod
    def planeCoordinates(points):
        """Scene-space 2D coordinates ((x, y), (x, z), (y, z)) of points (..., 3)."""
        return points[..., [0, 1]], points[..., [0, 2]], points[..., [1, 2]]

    @staticmethod
    def project(points, resolution):
        """Continuous texel coordinates (col, row) of points on the xy, xz and yz planes."""
        scale = float(resolution) - 1.0
        return tuple((pc + 0.5) * scale for pc in TriPlane.planeCoordinates(points))

    @staticmethod
    def samplePlane(plane, uv):
        """Bilinear lookup of a (C, H, W) plane at texel coordinates uv (..., 2) ordered (col, row).

        Returns:
            tensor (..., C): interpolated features, clamped to the edge texels outside [0, N - 1]
        """
        if plane.dim() != 3:
            raise ShapeMismatchError("Plane must have shape (C, H, W) (got %r)" % (tuple(plane.shape),))
        _, hh, ww = plane.shape
        lead = uv.shape[:-1]
        size = torch.as_tensor([ww - 1.0, hh - 1.0], dtype=plane.dtype)
        grid = (uv.reshape(1, -1, 1, 2).to(plane.dtype) / size) * 2.0 - 1.0
        out = F.grid_sample(plane[None], grid, mode="bilinear", padding_mode="border", align_corners=True)
        return out[0, :, :, 0].transpose(0, 1).reshape(lead + (plane.shape[0],))

    def feature(self, points):
        """Concatenated (xy, xz, yz) features of points (..., 3) -> (..., 3 C)."""
        if points.shape[-1] != 3:
            raise ShapeMismatchError("Points must have a trailing dimension of 3")
        lead = points.shape[:-1]
        uvL = self.project(points.reshape(-1, 3).to(self.planes.dtype), self.resolution)
        size = float(self.resolution) - 1.0
        grid = torch.stack(uvL, dim=0)[:, :, None, :] / size * 2.0 - 1.0
        out = F.grid_sample(self.planes, grid, mode="bilinear", padding_mode="border", align_corners=True)
        # (3, C, M, 1) -> (M, 3 C)
        return out[..., 0].permute(2, 0, 1).reshape(lead + (3 * self.channels,))

    # -- pseudo-images --

    def pack(self):
        """Split each plane into channel groups of three: (6, 3, H, W) in canonical order."""
        if self.channels != PSEUDO_IMAGE_CHANNELS:
            raise ShapeMismatchError("Pseudo-image packing requires %d channels (got %d)" % (PSEUDO_IMAGE_CHANNELS, self.channels))
        nn = self.resolution
        return PseudoImageStack(images=self.planes.reshape(3, 2, 3, nn, nn).reshape(6, 3, nn, nn), orderTag=PSEUDO_IMAGE_ORDER)

    @classmethod
    def unpack(cls, stack):
        images = stack.images if isinstance(stack, PseudoImageStack) else stack
        if isinstance(stack, PseudoImageStack) and stack.orderTag != PSEUDO_IMAGE_ORDER:
            raise ShapeMismatchError("Unexpected pseudo-image order %r" % (stack.orderTag,))
        if images.dim() != 4 or images.shape[0] != 6 or images.shape[1] != 3:
            raise ShapeMismatchError("Pseudo-image stack must have shape (6, 3, H, W) (got %r)" % (tuple(images.shape),))
        nn = images.shape[2]
        return cls(images.reshape(3, 2, 3, nn, nn).reshape(3, PSEUDO_IMAGE_CHANNELS, nn, nn))

    # -- value range --

    def inRangeFraction(self, bound=1.0):
        with torch.no_grad():
            return float((self.planes.abs() <= bound).double().mean().item())

    def finalize(self, mode="clip"):
        """Return a copy with every value in [-1, 1] by clipping or by per-object affine rescaling."""
        with torch.no_grad():
            planes = self.planes.detach().clone()
            if mode == "clip":
                planes = planes.clamp(-1.0, 1.0)
            elif mode == "affine":
                peak = float(planes.abs().max().item())
                if peak > 1.0:
                    planes = planes / peak
            else:
                raise ValueRangeError("Unknown finalize mode %r" % (mode,))
        return TriPlane(planes)

    # -- persistence --

    def save(self, filePath):
        return TriPlaneIoUtils().writeTriPlane(filePath, self.toNumpy())

    @classmethod
    def load(cls, filePath, dtype=torch.float32):
        return cls(torch.from_numpy(TriPlaneIoUtils().readTriPlane(filePath)).to(dtype))
