##
# File:    CameraUtils.py
# Author:  jdw
# Date:    12-Oct-2026
#
# Updates:
#  14-Oct-2026 jdw add axis-aligned orthographic cameras and orbit cameras for retrieval views
##
"""
Camera poses, pixel ray generation and camera sampling around the canonical bounding box.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import logging
import math
from collections import namedtuple

import numpy as np

from rcsb.utils.triplane.TriPlaneExceptions import ValueRangeError

logger = logging.getLogger(__name__)

CameraPose = namedtuple("CameraPose", "position lookAt up projection fovY halfExtent", defaults=("perspective", 0.8, 0.5))

BOX_LO = -0.5
BOX_HI = 0.5


class CameraUtils(object):
    """Ray generation and camera sampling for the canonical box [-0.5, 0.5]^3."""

    def __init__(self, **kwargs):
        self.__radius = kwargs.get("radius", 1.5)
        self.__fovY = kwargs.get("fovY", 0.8)
        self.__elevationRange = kwargs.get("elevationRange", (-60.0, 60.0))

    @staticmethod
    def toDict(camera):
        return {
            "position": [float(v) for v in camera.position],
            "lookAt": [float(v) for v in camera.lookAt],
            "up": [float(v) for v in camera.up],
            "projection": camera.projection,
            "fovY": float(camera.fovY),
            "halfExtent": float(camera.halfExtent),
        }

    @staticmethod
    def fromDict(cD):
        return CameraPose(
            position=tuple(cD["position"]),
            lookAt=tuple(cD["lookAt"]),
            up=tuple(cD["up"]),
            projection=cD.get("projection", "perspective"),
            fovY=cD.get("fovY", 0.8),
            halfExtent=cD.get("halfExtent", 0.5),
        )

    @staticmethod
    def getFrame(camera):
        """Return the orthonormal (forward, right, up) frame of the camera."""
        position = np.asarray(camera.position, dtype=np.float64)
        forward = np.asarray(camera.lookAt, dtype=np.float64) - position
        norm = np.linalg.norm(forward)
        if norm <= 0.0:
            raise ValueRangeError("Camera position coincides with look-at point")
        forward = forward / norm
        right = np.cross(forward, np.asarray(camera.up, dtype=np.float64))
        rNorm = np.linalg.norm(right)
        if rNorm < 1.0e-9:
            raise ValueRangeError("Camera up vector is parallel to the view direction")
        right = right / rNorm
        up = np.cross(right, forward)
        return forward, right, up

    @staticmethod
    def validateCamera(camera):
        if camera.projection not in ("perspective", "orthographic"):
            raise ValueRangeError("Unsupported projection %r" % (camera.projection,))
        position = np.asarray(camera.position, dtype=np.float64)
        if np.all(position >= BOX_LO) and np.all(position <= BOX_HI):
            raise ValueRangeError("Camera position %r lies inside the canonical box" % (tuple(position),))
        if camera.projection == "perspective" and not 0.0 < camera.fovY < math.pi:
            raise ValueRangeError("Field of view %r out of range" % camera.fovY)
        if camera.projection == "orthographic" and camera.halfExtent <= 0.0:
            raise ValueRangeError("Orthographic half extent must be positive")
        CameraUtils.getFrame(camera)
        return True

    @staticmethod
    def pixelGrid(resolution):
        hh, ww = resolution
        rows, cols = np.meshgrid(np.arange(hh), np.arange(ww), indexing="ij")
        return np.stack([rows.reshape(-1), cols.reshape(-1)], axis=-1)

    @staticmethod
    def generateRays(camera, resolution, pixels=None):
        """Rays through pixel centers.

        Args:
            camera (CameraPose): camera pose
            resolution (tuple): image (H, W)
            pixels (array, optional): (M, 2) integer (row, col) pairs (default: all pixels row-major)

        Returns:
            (origins, directions): float64 arrays of shape (M, 3); directions have unit length
        """
        CameraUtils.validateCamera(camera)
        hh, ww = resolution
        pixels = CameraUtils.pixelGrid(resolution) if pixels is None else np.asarray(pixels).reshape(-1, 2)
        forward, right, up = CameraUtils.getFrame(camera)
        xN = ((pixels[:, 1] + 0.5) / ww) * 2.0 - 1.0
        yN = 1.0 - ((pixels[:, 0] + 0.5) / hh) * 2.0
        aspect = ww / float(hh)
        position = np.asarray(camera.position, dtype=np.float64)
        if camera.projection == "perspective":
            tanHalf = math.tan(camera.fovY / 2.0)
            directions = forward[None, :] + (xN * tanHalf * aspect)[:, None] * right[None, :] + (yN * tanHalf)[:, None] * up[None, :]
            directions = directions / np.linalg.norm(directions, axis=-1, keepdims=True)
            origins = np.repeat(position[None, :], len(pixels), axis=0)
        else:
            origins = position[None, :] + (xN * camera.halfExtent * aspect)[:, None] * right[None, :] + (yN * camera.halfExtent)[:, None] * up[None, :]
            directions = np.repeat(forward[None, :], len(pixels), axis=0)
        return origins, directions

    @staticmethod
    def boxInterval(origins, directions, lo=BOX_LO, hi=BOX_HI):
        """Slab intersection of rays with the axis-aligned box [lo, hi]^3.

        Returns:
            (tNear, tFar, valid): tNear is clamped at 0; valid marks a non-empty interval
        """
        origins = np.asarray(origins, dtype=np.float64)
        directions = np.asarray(directions, dtype=np.float64)
        tNear = np.zeros(len(origins))
        tFar = np.full(len(origins), np.inf)
        for axis in range(3):
            oA = origins[:, axis]
            dA = directions[:, axis]
            parallel = np.abs(dA) < 1.0e-15
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = (lo - oA) / dA
                t2 = (hi - oA) / dA
            tMin = np.where(parallel, np.where((oA >= lo) & (oA <= hi), -np.inf, np.inf), np.minimum(t1, t2))
            tMax = np.where(parallel, np.where((oA >= lo) & (oA <= hi), np.inf, -np.inf), np.maximum(t1, t2))
            tNear = np.maximum(tNear, tMin)
            tFar = np.minimum(tFar, tMax)
        valid = tFar > tNear
        return tNear, np.where(valid, tFar, tNear), valid

    @staticmethod
    def orbitCamera(azimuthDeg, elevationDeg, radius=1.5, fovY=0.8):
        az = math.radians(azimuthDeg)
        el = math.radians(elevationDeg)
        position = (radius * math.cos(el) * math.sin(az), radius * math.sin(el), radius * math.cos(el) * math.cos(az))
        return CameraPose(position=position, lookAt=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0), projection="perspective", fovY=fovY)

    @staticmethod
    def axisCameras(distance=1.5, halfExtent=0.5):
        """Orthographic cameras looking down the dropped axis of each triplane plane."""
        return {
            "xy": CameraPose(position=(0.0, 0.0, distance), lookAt=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0), projection="orthographic", halfExtent=halfExtent),
            "xz": CameraPose(position=(0.0, distance, 0.0), lookAt=(0.0, 0.0, 0.0), up=(0.0, 0.0, -1.0), projection="orthographic", halfExtent=halfExtent),
            "yz": CameraPose(position=(distance, 0.0, 0.0), lookAt=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0), projection="orthographic", halfExtent=halfExtent),
        }

    def sampleCameras(self, rng, count):
        """Perspective cameras uniform on the sphere of radius r_cam with the elevation band clamp.

        Args:
            rng (numpy.random.Generator): random stream
            count (int): number of cameras
        """
        loS = math.sin(math.radians(self.__elevationRange[0]))
        hiS = math.sin(math.radians(self.__elevationRange[1]))
        cameraL = []
        for _ in range(count):
            az = rng.uniform(0.0, 360.0)
            el = math.degrees(math.asin(rng.uniform(loS, hiS)))
            cameraL.append(self.orbitCamera(az, el, radius=self.__radius, fovY=self.__fovY))
        return cameraL

    def getRetrievalCameras(self, elevationDeg=15.0):
        return [self.orbitCamera(az, elevationDeg, radius=self.__radius, fovY=self.__fovY) for az in (0.0, 90.0, 180.0, 270.0)]
