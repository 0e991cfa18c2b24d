##
# File:    MeshExportUtils.py
# Author:  jdw
# Date:    17-Oct-2026
#
# Updates:
#
##
"""
Iso-surface extraction from radiance field densities and vertex-colored PLY export.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import logging
import math
import time
from collections import namedtuple

import numpy as np
import torch
import trimesh
from skimage import measure

from rcsb.utils.triplane.CameraUtils import BOX_HI, BOX_LO
from rcsb.utils.triplane.TriPlaneExceptions import ValueRangeError

logger = logging.getLogger(__name__)

MeshResult = namedtuple("MeshResult", "vertices faces colors isoLevel empty")


def defaultIsoLevel():
    """Density at which a step of box diagonal / 128 is half opaque: 1 - exp(-sigma * delta) = 0.5."""
    return math.log(2.0) / (math.sqrt(3.0) * (BOX_HI - BOX_LO) / 128.0)


class MeshExportUtils(object):
    def __init__(self, **kwargs):
        self.__isoLevel = kwargs.get("isoLevel", None) or defaultIsoLevel()
        self.__chunkSize = kwargs.get("chunkSize", 65536)

    def getIsoLevel(self):
        return self.__isoLevel

    def __evalField(self, field, points):
        densL, colL = [], []
        with torch.no_grad():
            for start in range(0, len(points), self.__chunkSize):
                pT = torch.as_tensor(points[start : start + self.__chunkSize])
                dens, col = field(pT)
                densL.append(dens.double().cpu().numpy())
                colL.append(col.double().cpu().numpy())
        return np.concatenate(densL), np.concatenate(colL)

    def densityGrid(self, field, gridResolution):
        """Densities on a regular (G, G, G) grid spanning the canonical box, indexed (x, y, z)."""
        axis = np.linspace(BOX_LO, BOX_HI, gridResolution)
        pts = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
        density, _ = self.__evalField(field, pts.astype(np.float32))
        return density.reshape(gridResolution, gridResolution, gridResolution)

    def extractMesh(self, field, gridResolution=128, isoLevel=None):
        """Marching cubes over the density grid, zero padded so every surface closes.

        Returns:
            MeshResult: vertices (V, 3) in scene units, faces (F, 3), vertex colors (V, 3) in [0, 1];
            empty=True with no faces when the field never reaches the iso level
        """
        if gridResolution < 2:
            raise ValueRangeError("Grid resolution must be at least 2 (got %r)" % gridResolution)
        startTime = time.time()
        level = self.__isoLevel if isoLevel is None else isoLevel
        grid = self.densityGrid(field, gridResolution)
        if not np.any(grid > level):
            logger.info("Density never exceeds iso level %.3f; returning an empty mesh", level)
            return MeshResult(vertices=np.zeros((0, 3)), faces=np.zeros((0, 3), dtype=np.int64), colors=np.zeros((0, 3)), isoLevel=level, empty=True)
        spacing = (BOX_HI - BOX_LO) / (gridResolution - 1.0)
        padded = np.pad(grid, 1, mode="constant", constant_values=0.0)
        verts, faces, _, _ = measure.marching_cubes(padded, level=level, spacing=(spacing, spacing, spacing))
        verts = verts + (BOX_LO - spacing)
        _, colors = self.__evalField(field, verts.astype(np.float32))
        logger.info("Extracted mesh with %d vertices %d faces at grid %d (%.4f seconds)", len(verts), len(faces), gridResolution, time.time() - startTime)
        return MeshResult(vertices=verts, faces=faces.astype(np.int64), colors=np.clip(colors, 0.0, 1.0), isoLevel=level, empty=False)

    @staticmethod
    def toTrimesh(meshResult):
        colors = np.concatenate([np.rint(meshResult.colors * 255.0), np.full((len(meshResult.colors), 1), 255.0)], axis=-1).astype(np.uint8)
        return trimesh.Trimesh(vertices=meshResult.vertices, faces=meshResult.faces, vertex_colors=colors, process=False)

    def exportPly(self, meshResult, filePath):
        """Write an ASCII PLY with per-vertex color."""
        mesh = self.toTrimesh(meshResult)
        mesh.export(filePath, file_type="ply", encoding="ascii")
        logger.debug("Wrote %s (%d faces)", filePath, len(meshResult.faces))
        return True
