##
# File:    testMeshExportUtils.py
# Author:  J. Westbrook
# Date:    17-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for iso-surface extraction and PLY export.

"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "jwest@rcsb.rutgers.edu"
__license__ = "Apache 2.0"

import logging
import math
import os
import platform
import resource
import time
import unittest

import torch
import trimesh

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.MeshExportUtils import MeshExportUtils, defaultIsoLevel
from rcsb.utils.triplane.TriPlaneExceptions import ValueRangeError

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()

RADIUS = 0.3


def sphereField(points):
    """Density rising linearly inward, crossing the default iso level at |p| = RADIUS."""
    radius = torch.linalg.norm(points, dim=-1)
    density = torch.clamp(defaultIsoLevel() + 500.0 * (RADIUS - radius), min=0.0)
    return density, torch.tensor([0.9, 0.1, 0.1], dtype=points.dtype).expand(points.shape)


def emptyField(points):
    return torch.zeros(points.shape[:-1], dtype=points.dtype), torch.zeros_like(points)


class MeshExportUtilsTests(unittest.TestCase):
    def setUp(self):
        self.__startTime = time.time()
        self.__workPath = os.path.join(HERE, "test-output")
        if not os.path.isdir(self.__workPath):
            os.makedirs(self.__workPath)
        self.__meshU = MeshExportUtils()
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def testIsoLevel(self):
        delta = math.sqrt(3.0) / 128.0
        self.assertAlmostEqual(1.0 - math.exp(-self.__meshU.getIsoLevel() * delta), 0.5, places=12)

    def testSphereTopology(self):
        """Test a closed genus zero surface at the expected radius."""
        result = self.__meshU.extractMesh(sphereField, gridResolution=40)
        self.assertFalse(result.empty)
        mesh = MeshExportUtils.toTrimesh(result)
        self.assertTrue(mesh.is_watertight)
        self.assertEqual(mesh.euler_number, 2)
        radii = torch.linalg.norm(torch.as_tensor(result.vertices), dim=-1)
        self.assertLess(float((radii - RADIUS).abs().max()), 0.01)
        self.assertEqual(result.colors.shape, result.vertices.shape)
        self.assertAlmostEqual(float(result.colors[0, 0]), 0.9, places=6)

    def testVolumeConvergence(self):
        volL = [abs(MeshExportUtils.toTrimesh(self.__meshU.extractMesh(sphereField, gridResolution=gg)).volume) for gg in (48, 96)]
        logger.info("Enclosed volumes %r (sphere %.6f)", volL, 4.0 / 3.0 * math.pi * RADIUS ** 3)
        self.assertLess(abs(volL[1] - volL[0]) / volL[1], 0.02)

    def testEmptyField(self):
        result = self.__meshU.extractMesh(emptyField, gridResolution=16)
        self.assertTrue(result.empty)
        self.assertEqual(len(result.faces), 0)
        with self.assertRaises(ValueRangeError):
            self.__meshU.extractMesh(sphereField, gridResolution=1)

    def testExportPly(self):
        fp = os.path.join(self.__workPath, "test-sphere.ply")
        result = self.__meshU.extractMesh(sphereField, gridResolution=24)
        self.assertTrue(self.__meshU.exportPly(result, fp))
        mesh = trimesh.load(fp, process=False)
        self.assertEqual(len(mesh.faces), len(result.faces))
        self.assertEqual(len(mesh.vertices), len(result.vertices))


def suiteMeshTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(MeshExportUtilsTests("testSphereTopology"))
    suiteSelect.addTest(MeshExportUtilsTests("testEmptyField"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteMeshTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
