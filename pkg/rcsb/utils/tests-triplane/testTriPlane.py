##
# File:    testTriPlane.py
# Author:  J. Westbrook
# Date:    15-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for triplane projection, bilinear lookup, pseudo-image packing and persistence.

"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "jwest@rcsb.rutgers.edu"
__license__ = "Apache 2.0"

import logging
import os
import platform
import resource
import time
import unittest

import torch

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.TriPlane import PSEUDO_IMAGE_ORDER, PseudoImageStack, TriPlane
from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError, ValueRangeError

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class TriPlaneTests(unittest.TestCase):
    def setUp(self):
        self.__startTime = time.time()
        self.__workPath = os.path.join(HERE, "test-output")
        if not os.path.isdir(self.__workPath):
            os.makedirs(self.__workPath)
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def testProject(self):
        point = torch.tensor([0.3, -0.1, 0.4], dtype=torch.float64)
        pXy, pXz, pYz = TriPlane.planeCoordinates(point)
        self.assertTrue(torch.allclose(pXy, torch.tensor([0.3, -0.1], dtype=torch.float64)))
        self.assertTrue(torch.allclose(pXz, torch.tensor([0.3, 0.4], dtype=torch.float64)))
        self.assertTrue(torch.allclose(pYz, torch.tensor([-0.1, 0.4], dtype=torch.float64)))
        for uv in TriPlane.project(torch.zeros(3, dtype=torch.float64), 64):
            self.assertEqual(uv.tolist(), [31.5, 31.5])
        for uv in TriPlane.project(torch.full((3,), -0.5, dtype=torch.float64), 64):
            self.assertEqual(uv.tolist(), [0.0, 0.0])

    def testSamplePlane(self):
        """Test bilinear interpolation, exact texels and edge clamping on a 2 x 2 plane."""
        plane = torch.tensor([[[0.0, 1.0], [2.0, 3.0]]], dtype=torch.float64)
        uv = torch.tensor([[0.5, 0.5], [0.0, 0.0], [-3.0, -3.0], [1.0, 0.0], [0.0, 1.0]], dtype=torch.float64)
        out = TriPlane.samplePlane(plane, uv)
        self.assertEqual(tuple(out.shape), (5, 1))
        self.assertAlmostEqual(float(out[0, 0]), 1.5, places=12)
        self.assertAlmostEqual(float(out[1, 0]), 0.0, places=12)
        self.assertAlmostEqual(float(out[2, 0]), 0.0, places=12)
        # column coordinate first
        self.assertAlmostEqual(float(out[3, 0]), 1.0, places=12)
        self.assertAlmostEqual(float(out[4, 0]), 2.0, places=12)
        with self.assertRaises(ShapeMismatchError):
            TriPlane.samplePlane(plane[0], uv)

    def testFeature(self):
        tp = TriPlane.zeros(resolution=8, dtype=torch.float64)
        points = torch.tensor([[0.1, 0.2, -0.3], [0.0, 0.0, 0.0]], dtype=torch.float64)
        self.assertTrue(torch.equal(tp.feature(points), torch.zeros((2, 18), dtype=torch.float64)))
        tp.planes[0] = 1.0
        feat = tp.feature(points)
        self.assertTrue(torch.allclose(feat[:, :6], torch.ones((2, 6), dtype=torch.float64)))
        self.assertTrue(torch.allclose(feat[:, 6:], torch.zeros((2, 12), dtype=torch.float64)))
        # feature matches per-plane lookups
        tp = TriPlane.randomNormal(resolution=8, std=1.0, generator=torch.Generator().manual_seed(1), dtype=torch.float64)
        uvL = TriPlane.project(points, 8)
        expected = torch.cat([TriPlane.samplePlane(tp.planes[ii], uvL[ii]) for ii in range(3)], dim=-1)
        self.assertTrue(torch.allclose(tp.feature(points), expected, atol=1.0e-12))

    def testAffinePlaneFieldExact(self):
        """Test that bilinear lookup reproduces an affine plane field exactly inside the box."""
        nn = 8
        rows, cols = torch.meshgrid(torch.arange(nn, dtype=torch.float64), torch.arange(nn, dtype=torch.float64), indexing="ij")
        coefL = [(0.25, 0.5, -0.75), (-1.0, 0.125, 0.375), (0.5, -0.25, 0.0)]
        planes = torch.zeros((3, 6, nn, nn), dtype=torch.float64)
        for ii, (a0, aCol, aRow) in enumerate(coefL):
            planes[ii, :] = a0 + aCol * cols + aRow * rows
        tp = TriPlane(planes)
        points = torch.rand((50, 3), generator=torch.Generator().manual_seed(5), dtype=torch.float64) - 0.5
        feat = tp.feature(points)
        for ii, uv in enumerate(TriPlane.project(points, nn)):
            a0, aCol, aRow = coefL[ii]
            expected = a0 + aCol * uv[:, 0] + aRow * uv[:, 1]
            for cc in range(6):
                self.assertTrue(torch.allclose(feat[:, 6 * ii + cc], expected, rtol=0.0, atol=1.0e-12))

    def testFeatureGradient(self):
        tp = TriPlane.randomNormal(resolution=8, std=1.0, generator=torch.Generator().manual_seed(2), dtype=torch.float64)
        tp.planes.requires_grad_(True)
        points = torch.rand((4, 3), generator=torch.Generator().manual_seed(3), dtype=torch.float64) - 0.5
        self.assertTrue(torch.autograd.gradcheck(lambda planes: TriPlane(planes).feature(points), (tp.planes,)))

    def testPackUnpack(self):
        tp = TriPlane.randomNormal(resolution=4, generator=torch.Generator().manual_seed(4))
        stack = tp.pack()
        self.assertEqual(stack.orderTag, PSEUDO_IMAGE_ORDER)
        self.assertEqual(tuple(stack.images.shape), (6, 3, 4, 4))
        # image k holds channels 3 (k mod 2) .. 3 (k mod 2) + 2 of plane k // 2
        self.assertTrue(torch.equal(stack.images[3], tp.planes[1, 3:6]))
        self.assertTrue(torch.equal(TriPlane.unpack(stack).planes, tp.planes))
        ones = TriPlane.unpack(PseudoImageStack(images=torch.ones((6, 3, 4, 4)), orderTag=PSEUDO_IMAGE_ORDER))
        self.assertTrue(torch.equal(ones.planes, torch.ones((3, 6, 4, 4))))
        with self.assertRaises(ShapeMismatchError):
            TriPlane.unpack(PseudoImageStack(images=stack.images, orderTag="yz0,yz1,xz0,xz1,xy0,xy1"))
        with self.assertRaises(ShapeMismatchError):
            TriPlane.zeros(resolution=4, channels=4).pack()

    def testInvalidShapes(self):
        for shape in [(2, 6, 4, 4), (3, 6, 4, 5), (3, 6, 1, 1), (6, 4, 4)]:
            with self.assertRaises(ShapeMismatchError):
                TriPlane(torch.zeros(shape))

    def testFinalize(self):
        planes = torch.tensor([-3.0, -0.5, 0.25, 2.0]).reshape(1, 1, 2, 2).repeat(3, 1, 1, 1)
        tp = TriPlane(planes)
        self.assertAlmostEqual(tp.inRangeFraction(), 0.5)
        clipped = tp.finalize("clip")
        self.assertEqual(clipped.planes[0, 0].flatten().tolist(), [-1.0, -0.5, 0.25, 1.0])
        scaled = tp.finalize("affine")
        self.assertAlmostEqual(float(scaled.planes.abs().max()), 1.0, places=6)
        self.assertAlmostEqual(float(scaled.planes[0, 0, 1, 1]), 2.0 / 3.0, places=6)
        self.assertEqual(scaled.inRangeFraction(), 1.0)
        # the original is unchanged
        self.assertEqual(float(tp.planes[0, 0, 0, 0]), -3.0)
        with self.assertRaises(ValueRangeError):
            tp.finalize("squash")

    def testSaveLoad(self):
        fp = os.path.join(self.__workPath, "test-triplane.tpln")
        tp = TriPlane.randomNormal(resolution=16, generator=torch.Generator().manual_seed(5))
        self.assertTrue(tp.save(fp))
        tpR = TriPlane.load(fp)
        self.assertEqual(tpR.resolution, 16)
        self.assertEqual(tpR.channels, 6)
        self.assertTrue(torch.equal(tpR.planes, tp.planes))
        self.assertEqual(TriPlane.load(fp, dtype=torch.float64).planes.dtype, torch.float64)


def suiteTriPlaneTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(TriPlaneTests("testProject"))
    suiteSelect.addTest(TriPlaneTests("testSamplePlane"))
    suiteSelect.addTest(TriPlaneTests("testPackUnpack"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteTriPlaneTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
