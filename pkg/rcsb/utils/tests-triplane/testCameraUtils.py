##
# File:    testCameraUtils.py
# Author:  J. Westbrook
# Date:    14-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for camera poses, ray generation and box clipping.

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

import numpy as np

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.CameraUtils import CameraPose, CameraUtils
from rcsb.utils.triplane.TriPlaneExceptions import ValueRangeError

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class CameraUtilsTests(unittest.TestCase):
    def setUp(self):
        self.__startTime = time.time()
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def testOrthographicCenterRay(self):
        """Test the center ray of an orthographic camera on the +z axis looking at the origin."""
        camera = CameraPose(position=(0.0, 0.0, 1.5), lookAt=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0), projection="orthographic", halfExtent=0.5)
        origins, directions = CameraUtils.generateRays(camera, (33, 33), pixels=[(16, 16)])
        self.assertTrue(np.allclose(origins[0], [0.0, 0.0, 1.5], atol=1.0e-12))
        self.assertTrue(np.allclose(directions[0], [0.0, 0.0, -1.0], atol=1.0e-12))
        tNear, tFar, valid = CameraUtils.boxInterval(origins, directions)
        self.assertTrue(bool(valid[0]))
        self.assertAlmostEqual(float(tNear[0]), 1.0, places=12)
        self.assertAlmostEqual(float(tFar[0]), 2.0, places=12)

    def testCornerRayMisses(self):
        """Test that a corner ray of a distant narrow field of view camera misses the box."""
        camera = CameraPose(position=(0.0, 0.0, 10.0), lookAt=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0), projection="perspective", fovY=0.3)
        origins, directions = CameraUtils.generateRays(camera, (8, 8), pixels=[(0, 0), (4, 4)])
        _, _, valid = CameraUtils.boxInterval(origins, directions)
        self.assertFalse(bool(valid[0]))
        self.assertTrue(bool(valid[1]))

    def testUnitDirections(self):
        camera = CameraUtils.orbitCamera(37.0, 20.0)
        _, directions = CameraUtils.generateRays(camera, (16, 12))
        self.assertEqual(directions.shape, (16 * 12, 3))
        self.assertTrue(np.allclose(np.linalg.norm(directions, axis=-1), 1.0, atol=1.0e-12))

    def testInvalidCameras(self):
        with self.assertRaises(ValueRangeError):
            CameraUtils.validateCamera(CameraPose(position=(0.0, 0.0, 0.2), lookAt=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0)))
        with self.assertRaises(ValueRangeError):
            CameraUtils.validateCamera(CameraPose(position=(0.0, 1.5, 0.0), lookAt=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0)))
        with self.assertRaises(ValueRangeError):
            CameraUtils.validateCamera(CameraPose(position=(0.0, 0.0, 1.5), lookAt=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0), projection="fisheye"))

    def testSampleCameras(self):
        """Test sampled cameras lie on the camera sphere inside the elevation band and are seed deterministic."""
        cameraU = CameraUtils()
        cameraL = cameraU.sampleCameras(np.random.default_rng(11), 200)
        for camera in cameraL:
            position = np.asarray(camera.position)
            self.assertAlmostEqual(float(np.linalg.norm(position)), 1.5, places=9)
            elevation = math.degrees(math.asin(position[1] / 1.5))
            self.assertLessEqual(abs(elevation), 60.0 + 1.0e-9)
            CameraUtils.validateCamera(camera)
        self.assertEqual(cameraL[:5], cameraU.sampleCameras(np.random.default_rng(11), 5))

    def testAxisAndRetrievalCameras(self):
        axisD = CameraUtils.axisCameras()
        self.assertEqual(sorted(axisD), ["xy", "xz", "yz"])
        for camera in axisD.values():
            self.assertEqual(camera.projection, "orthographic")
            CameraUtils.validateCamera(camera)
        retL = CameraUtils().getRetrievalCameras()
        self.assertEqual(len(retL), 4)
        for camera in retL:
            self.assertAlmostEqual(math.degrees(math.asin(camera.position[1] / 1.5)), 15.0, places=9)

    def testCameraDict(self):
        camera = CameraUtils.orbitCamera(90.0, -10.0)
        self.assertEqual(CameraUtils.fromDict(CameraUtils.toDict(camera)), camera)


def suiteCameraTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(CameraUtilsTests("testOrthographicCenterRay"))
    suiteSelect.addTest(CameraUtilsTests("testCornerRayMisses"))
    suiteSelect.addTest(CameraUtilsTests("testSampleCameras"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteCameraTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
