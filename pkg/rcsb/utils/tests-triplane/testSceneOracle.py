##
# File:    testSceneOracle.py
# Author:  J. Westbrook
# Date:    15-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for the analytic scene oracle: point queries, exact views and hull silhouettes.

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
import torch

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.CameraUtils import CameraPose, CameraUtils
from rcsb.utils.triplane.CaptionGrammar import CaptionGrammar
from rcsb.utils.triplane.SceneOracle import SIGMA_SOLID, OracleField, PrimitiveSpec, SceneOracle
from rcsb.utils.triplane.TriPlaneExceptions import ValueRangeError

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class SceneOracleTests(unittest.TestCase):
    def setUp(self):
        self.__startTime = time.time()
        self.__oracle = SceneOracle()
        self.__grammar = CaptionGrammar()
        self.__red = self.__grammar.getColor("red")
        self.__blue = self.__grammar.getColor("blue")
        self.__sphere = self.__oracle.makeScene([PrimitiveSpec(kind="sphere", center=(0.0, 0.0, 0.0), size=(0.4,), color=self.__red)])
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def testQueryScene(self):
        density, color = self.__oracle.queryScene(self.__sphere, [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.39999, 0.0, 0.0]])
        self.assertEqual(list(density), [SIGMA_SOLID, 0.0, SIGMA_SOLID])
        self.assertTrue(np.allclose(color[0], self.__red))
        self.assertTrue(np.allclose(color[1], 0.0))
        self.assertTrue(np.allclose(color[2], self.__red))

    def testOverlapLastWins(self):
        scene = self.__oracle.makeScene(
            [
                PrimitiveSpec(kind="box", center=(0.0, -0.2, 0.0), size=(0.2, 0.2, 0.2), color=self.__red),
                PrimitiveSpec(kind="sphere", center=(0.0, 0.05, 0.0), size=(0.15,), color=self.__blue),
            ]
        )
        _, color = self.__oracle.queryScene(scene, [[0.0, -0.05, 0.0]])
        self.assertTrue(np.allclose(color[0], self.__blue))

    def testInvalidScenes(self):
        with self.assertRaises(ValueRangeError):
            self.__oracle.makeScene([PrimitiveSpec(kind="sphere", center=(0.3, 0.0, 0.0), size=(0.4,), color=self.__red)])
        with self.assertRaises(ValueRangeError):
            self.__oracle.makeScene([PrimitiveSpec(kind="sphere", center=(0.0, 0.0, 0.0), size=(0.2,), color=(0.3, 0.3, 0.3))])
        with self.assertRaises(ValueRangeError):
            self.__oracle.makeScene([])

    def testRenderSphereCenterPixel(self):
        """Test depth 1.5 - 0.4 at the center pixel of a sphere view."""
        camera = CameraPose(position=(0.0, 0.0, 1.5), lookAt=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0), projection="perspective", fovY=0.8)
        view = self.__oracle.renderOracleView(self.__sphere, camera, (33, 33))
        self.assertEqual(int(view.mask[16, 16]), 1)
        self.assertAlmostEqual(float(view.depth[16, 16]), 1.1, places=12)
        self.assertTrue(np.allclose(view.rgb[16, 16], self.__red))
        # background is black and mask <=> finite depth
        self.assertTrue(np.all(view.rgb[view.mask == 0] == 0.0))
        self.assertTrue(np.array_equal(view.mask.astype(bool), np.isfinite(view.depth)))

    def testRenderEmptyView(self):
        """Test a primitive outside the view frustum gives an all-zero mask."""
        scene = self.__oracle.makeScene([PrimitiveSpec(kind="sphere", center=(0.4, 0.4, -0.4), size=(0.05,), color=self.__red)])
        view = self.__oracle.renderOracleView(scene, CameraPose(position=(0.0, 0.0, 1.5), lookAt=(0.0, 0.0, -10.0), up=(0.0, 1.0, 0.0), fovY=0.2), (16, 16))
        self.assertEqual(int(view.mask.sum()), 0)
        self.assertTrue(np.all(np.isinf(view.depth)))

    def testOrthographicBoxSilhouette(self):
        """Test a box spanning [-0.2, 0.2]^3 covers 40% of each image axis under an axis-aligned orthographic camera."""
        scene = self.__oracle.makeScene([PrimitiveSpec(kind="box", center=(0.0, 0.0, 0.0), size=(0.2, 0.2, 0.2), color=self.__red)])
        camera = CameraPose(position=(0.0, 0.0, 1.5), lookAt=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0), projection="orthographic", halfExtent=0.5)
        view = self.__oracle.renderOracleView(scene, camera, (100, 100))
        self.assertEqual(int(view.mask[50].sum()), 40)
        self.assertEqual(int(view.mask[:, 50].sum()), 40)
        self.assertEqual(int(view.mask.sum()), 1600)
        self.assertTrue(np.allclose(view.depth[view.mask == 1], 1.3))

    def testOracleDepthMatchesDensityCrossing(self):
        """Test exact first-hit depth against a marched and bisected crossing of the point query density."""
        scene = self.__oracle.makeScene(
            [
                PrimitiveSpec(kind="torus", center=(0.0, -0.3, 0.0), size=(0.14, 0.06), color=self.__red),
                PrimitiveSpec(kind="cylinder", center=(0.0, 0.05, 0.0), size=(0.12, 0.17), color=self.__blue),
            ]
        )
        rng = np.random.default_rng(5)
        cameraL = CameraUtils().sampleCameras(rng, 5)
        nAgree = nHit = 0
        for camera in cameraL:
            pixels = rng.integers(0, 48, size=(200, 2))
            origins, directions = CameraUtils.generateRays(camera, (48, 48), pixels=pixels)
            tHit, _ = self.__oracle.intersectRays(scene, origins, directions)
            tNear, tFar, valid = CameraUtils.boxInterval(origins, directions)
            step = 2.0e-4
            for ii in np.nonzero(valid)[0]:
                tS = np.arange(tNear[ii], tFar[ii], step)
                dens, _ = self.__oracle.queryScene(scene, origins[ii] + tS[:, None] * directions[ii])
                inside = np.nonzero(dens > 0.0)[0]
                if len(inside) == 0:
                    continue
                nHit += 1
                lo, hi = tS[max(inside[0] - 1, 0)], tS[inside[0]]
                for _ in range(40):
                    mid = 0.5 * (lo + hi)
                    dd, _ = self.__oracle.queryScene(scene, (origins[ii] + mid * directions[ii])[None])
                    lo, hi = (lo, mid) if dd[0] > 0.0 else (mid, hi)
                if abs(hi - tHit[ii]) < 1.0e-6:
                    nAgree += 1
        logger.info("Depth agreement %d / %d rays", nAgree, nHit)
        self.assertGreater(nHit, 100)
        self.assertGreaterEqual(nAgree, 0.95 * nHit)

    def testHullMasksSphereDisc(self):
        """Test the undilated sphere silhouette area against pi r^2 in texel units."""
        hull = self.__oracle.makeHullMasks(self.__sphere, (64, 64), dHull=0)
        rTexel = 0.4 * 63.0
        for mask in hull:
            self.assertEqual(mask.shape, (64, 64))
            area = float(mask.sum())
            self.assertLess(abs(area - math.pi * rTexel ** 2) / (math.pi * rTexel ** 2), 0.08)
            self.assertEqual(int(mask[32, 32]), 1)
            self.assertEqual(int(mask[0, 0]), 0)

    def testHullMasksFullBox(self):
        scene = self.__oracle.makeScene([PrimitiveSpec(kind="box", center=(0.0, 0.0, 0.0), size=(0.5, 0.5, 0.5), color=self.__red)])
        for mask in self.__oracle.makeHullMasks(scene, (32, 32), dHull=0):
            self.assertTrue(np.all(mask == 1))

    def testHullMasksDilationAndConsistency(self):
        """Test dilation monotonicity and that every occupied point projects into its silhouettes."""
        scene = self.__oracle.canonicalScene("yellow torus on green cylinder")
        res = 48
        hull0 = self.__oracle.makeHullMasks(scene, (res, res), dHull=0)
        hull2 = self.__oracle.makeHullMasks(scene, (res, res), dHull=2)
        for m0, m2 in zip(hull0, hull2):
            self.assertTrue(np.all(m2 >= m0))
            self.assertGreater(int(m2.sum()), int(m0.sum()))
        rng = np.random.default_rng(3)
        points = rng.uniform(-0.5, 0.5, size=(20000, 3))
        density, _ = self.__oracle.queryScene(scene, points)
        points = points[density > 0.0]
        self.assertGreater(len(points), 100)
        idx = np.rint((points + 0.5) * (res - 1)).astype(int)
        for mask, (aU, aV) in zip(hull0, [(0, 1), (0, 2), (1, 2)]):
            self.assertTrue(np.all(mask[idx[:, aV], idx[:, aU]] == 1))

    def testSampleSceneDeterminism(self):
        sceneA = self.__oracle.sampleScene(np.random.default_rng(7), seed=7)
        sceneB = self.__oracle.sampleScene(np.random.default_rng(7), seed=7)
        self.assertEqual(sceneA, sceneB)
        self.assertEqual(SceneOracle.sceneFromDict(SceneOracle.sceneToDict(sceneA)), sceneA)
        for ii in range(50):
            scene = self.__oracle.sampleScene(np.random.default_rng(ii))
            self.assertTrue(self.__oracle.validateScene(scene))
            self.assertIn(" ".join(scene.caption), self.__grammar.enumerateCaptions())

    def testCanonicalScenes(self):
        for caption in self.__grammar.enumerateCaptions():
            scene = self.__oracle.canonicalScene(caption)
            self.assertEqual(" ".join(scene.caption), caption)

    def testOracleField(self):
        field = OracleField(self.__sphere)
        density, color = field(torch.as_tensor([[0.0, 0.0, 0.0], [0.45, 0.0, 0.0]], dtype=torch.float64))
        self.assertEqual(density.dtype, torch.float64)
        self.assertEqual(density.tolist(), [SIGMA_SOLID, 0.0])
        self.assertEqual(tuple(color.shape), (2, 3))


def suiteOracleTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(SceneOracleTests("testQueryScene"))
    suiteSelect.addTest(SceneOracleTests("testRenderSphereCenterPixel"))
    suiteSelect.addTest(SceneOracleTests("testHullMasksSphereDisc"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteOracleTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
