##
# File:    testVolumeRenderer.py
# Author:  J. Westbrook
# Date:    15-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for volume rendering against analytic transmittance and for its reverse-mode gradients.

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
from rcsb.utils.triplane.CameraUtils import CameraPose
from rcsb.utils.triplane.TriPlane import TriPlane
from rcsb.utils.triplane.TriPlaneDecoder import TriPlaneDecoder
from rcsb.utils.triplane.TriPlaneExceptions import RenderError, RenderGraphError, ShapeMismatchError, ValueRangeError
from rcsb.utils.triplane.VolumeRenderer import TriPlaneField, VolumeRenderer

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


def constantField(sigma, color=(0.2, 0.4, 0.6)):
    def field(points):
        return torch.full(points.shape[:-1], sigma, dtype=points.dtype), torch.as_tensor(color, dtype=points.dtype).expand(points.shape)

    return field


def stepField(zWall, sigma, color=(0.2, 0.4, 0.6)):
    """Empty above the plane z = zWall and dense below it."""

    def field(points):
        density = torch.where(points[:, 2] < zWall, torch.full_like(points[:, 2], sigma), torch.zeros_like(points[:, 2]))
        return density, torch.as_tensor(color, dtype=points.dtype).expand(points.shape)

    return field


class VolumeRendererTests(unittest.TestCase):
    def setUp(self):
        self.__startTime = time.time()
        # one ray down the z axis entering the box at t = 1 and leaving at t = 2
        self.__origins = np.asarray([[0.0, 0.0, 1.5]])
        self.__directions = np.asarray([[0.0, 0.0, -1.0]])
        self.__camera = CameraPose(position=(0.0, 0.0, 1.5), lookAt=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0), projection="orthographic", halfExtent=0.5)
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def __renderOne(self, field, nSamples):
        renderer = VolumeRenderer(nSamples=nSamples, dtype=torch.float64)
        return renderer.renderRays(field, renderer.raysFromArrays(self.__origins, self.__directions))

    def testEmptySpace(self):
        out = self.__renderOne(constantField(0.0), 64)
        self.assertEqual(out.color.tolist(), [[0.0, 0.0, 0.0]])
        self.assertEqual(out.mask.tolist(), [0.0])
        self.assertEqual(out.depth.tolist(), [0.0])

    def testConstantSlab(self):
        """Test opacity 1 - exp(-sigma L) for a constant density over a unit interval."""
        out = self.__renderOne(constantField(2.0), 1000)
        self.assertAlmostEqual(float(out.mask[0]), 1.0 - math.exp(-2.0), delta=1.0e-3)
        self.assertTrue(torch.allclose(out.color[0], out.mask[0] * torch.tensor([0.2, 0.4, 0.6], dtype=torch.float64)))

    def testQuadratureConvergence(self):
        """Test the midpoint opacity error for a quadratic density shrinks with the sample count."""

        def field(points):
            return 6.0 * (points[:, 2] + 0.5) ** 2, torch.zeros_like(points)

        expected = 1.0 - math.exp(-2.0)
        errL = [abs(float(self.__renderOne(field, nS).mask[0]) - expected) for nS in (8, 32, 128)]
        logger.info("Opacity errors %r", errL)
        self.assertLess(errL[1], errL[0])
        self.assertLess(errL[2], errL[1])
        self.assertLess(errL[2], 1.0e-4)

    def testStepMedium(self):
        """Test an opaque wall at t = 1.3 gives depth 1.3 within one bin width."""
        nS = 1000
        out = self.__renderOne(stepField(0.2, 1.0e4), nS)
        self.assertAlmostEqual(float(out.mask[0]), 1.0, places=6)
        self.assertLessEqual(abs(float(out.depth[0]) - 1.3), 1.0 / nS)
        self.assertTrue(torch.allclose(out.color[0], torch.tensor([0.2, 0.4, 0.6], dtype=torch.float64), atol=1.0e-6))

    def testWeightsSumToMask(self):
        renderer = VolumeRenderer(nSamples=32, dtype=torch.float64)
        rays = renderer.makeRays(self.__camera, (6, 6))
        out = renderer.renderRays(stepField(0.0, 3.0), rays)
        self.assertTrue(torch.allclose(out.weights.sum(dim=-1), out.mask))
        self.assertTrue(bool(((out.mask >= 0.0) & (out.mask <= 1.0)).all()))

    def testRenderViewZeroDensity(self):
        tp = TriPlane.zeros(resolution=8, dtype=torch.float64)
        decoder = TriPlaneDecoder().double()
        with torch.no_grad():
            decoder.layers[-1].weight.zero_()
            decoder.layers[-1].bias.fill_(-60.0)
        out = VolumeRenderer(nSamples=16, dtype=torch.float64).renderView(TriPlaneField(tp, decoder), self.__camera, (8, 8))
        self.assertEqual(tuple(out.color.shape), (8, 8, 3))
        self.assertLess(float(out.mask.max()), 1.0e-20)
        self.assertLess(float(out.color.max()), 1.0e-20)

    def testDeterminism(self):
        tp = TriPlane.randomNormal(resolution=8, std=0.5, generator=torch.Generator().manual_seed(0))
        torch.manual_seed(0)
        field = TriPlaneField(tp, TriPlaneDecoder())
        renderer = VolumeRenderer(nSamples=16, chunkSize=20)
        outA = renderer.renderView(field, self.__camera, (8, 8), stratified=True, generator=torch.Generator().manual_seed(9))
        outB = renderer.renderView(field, self.__camera, (8, 8), stratified=True, generator=torch.Generator().manual_seed(9))
        for name in ("color", "mask", "depth"):
            self.assertTrue(torch.equal(getattr(outA, name), getattr(outB, name)))

    def testTriPlaneFieldChecksDecoderInput(self):
        """Test that triplane fields validate the features handed to the decoder."""
        points = torch.zeros((4, 3), dtype=torch.float64)
        tp = TriPlane.zeros(resolution=8, dtype=torch.float64)
        with self.assertRaises(ShapeMismatchError):
            TriPlaneField(tp, TriPlaneDecoder(channels=4).double())(points)
        bad = TriPlane.zeros(resolution=8, dtype=torch.float64)
        bad.planes[0, 0] = float("nan")
        with self.assertRaises(ValueRangeError):
            TriPlaneField(bad, TriPlaneDecoder().double())(points)
        density, color = TriPlaneField(tp, TriPlaneDecoder().double())(points)
        self.assertEqual(tuple(density.shape), (4,))
        self.assertEqual(tuple(color.shape), (4, 3))

    def testNonFiniteDensityPixel(self):
        """Test the error names the pixel and sample of the first non-finite density."""
        nS = 8
        callL = []

        def field(points):
            callL.append(1)
            density = torch.zeros(points.shape[:-1], dtype=points.dtype)
            if len(callL) == 2:
                # second chunk, its ray 1 (pixel (1, 2) of a 3 x 3 view), sample 3
                density[1 * nS + 3] = float("nan")
            return density, torch.zeros_like(points)

        renderer = VolumeRenderer(nSamples=nS, chunkSize=4, dtype=torch.float64)
        with self.assertRaises(RenderError) as ctx:
            renderer.renderView(field, self.__camera, (3, 3))
        self.assertEqual(ctx.exception.pixel, (1, 2))
        self.assertEqual(ctx.exception.sampleIndex, 3)
        self.assertEqual(ctx.exception.rayIndex, 5)

    def testBackward(self):
        tp = TriPlane.randomNormal(resolution=6, std=0.5, generator=torch.Generator().manual_seed(1), dtype=torch.float64)
        tp.planes.requires_grad_(True)
        torch.manual_seed(1)
        decoder = TriPlaneDecoder().double()
        renderer = VolumeRenderer(nSamples=8, dtype=torch.float64)
        rays = renderer.makeRays(self.__camera, (4, 4))
        inputs = [tp.planes] + list(decoder.parameters())
        out = renderer.renderRays(TriPlaneField(tp, decoder), rays)
        zeroL = renderer.backward(out, {"color": torch.zeros_like(out.color), "mask": torch.zeros_like(out.mask)}, inputs, retainGraph=True)
        for gg in zeroL:
            self.assertEqual(float(gg.abs().sum()), 0.0)
        gL = renderer.backward(out, {"mask": torch.ones_like(out.mask)}, inputs)
        self.assertGreater(float(gL[0].abs().sum()), 0.0)
        with self.assertRaises(RenderGraphError):
            renderer.backward(out, {"mask": torch.ones_like(out.mask)}, inputs)

    def testGradientFiniteDifference(self):
        tp = TriPlane.randomNormal(resolution=4, std=0.5, generator=torch.Generator().manual_seed(2), dtype=torch.float64)
        torch.manual_seed(2)
        decoder = TriPlaneDecoder(hiddenWidth=8).double()
        renderer = VolumeRenderer(nSamples=6, dtype=torch.float64)
        rays = renderer.makeRays(self.__camera, (2, 2))

        def fn(planes):
            out = renderer.renderRays(TriPlaneField(TriPlane(planes), decoder), rays)
            return out.color, out.mask, out.depth

        self.assertTrue(torch.autograd.gradcheck(fn, (tp.planes.clone().requires_grad_(True),), atol=1.0e-6))

    def testInvalidSampleCount(self):
        with self.assertRaises(ValueRangeError):
            VolumeRenderer(nSamples=1)


def suiteRendererTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(VolumeRendererTests("testConstantSlab"))
    suiteSelect.addTest(VolumeRendererTests("testStepMedium"))
    suiteSelect.addTest(VolumeRendererTests("testBackward"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteRendererTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
