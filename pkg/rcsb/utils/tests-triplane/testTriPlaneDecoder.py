##
# File:    testTriPlaneDecoder.py
# Author:  J. Westbrook
# Date:    15-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for the shared feature decoder.

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

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.TriPlaneDecoder import TriPlaneDecoder
from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError, ValueRangeError

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class TriPlaneDecoderTests(unittest.TestCase):
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

    def testZeroWeights(self):
        """Test zero parameters decode to gray and softplus(0) density."""
        decoder = TriPlaneDecoder().double()
        with torch.no_grad():
            for param in decoder.parameters():
                param.zero_()
        color, density = decoder.decode(torch.zeros((5, 18), dtype=torch.float64))
        self.assertEqual(tuple(color.shape), (5, 3))
        self.assertEqual(tuple(density.shape), (5,))
        self.assertTrue(torch.allclose(color, torch.full((5, 3), 0.5, dtype=torch.float64)))
        self.assertAlmostEqual(float(density[0]), math.log(2.0), places=12)

    def testOutputRanges(self):
        torch.manual_seed(0)
        decoder = TriPlaneDecoder()
        color, density = decoder.decode(10.0 * torch.randn((200, 18)))
        self.assertTrue(bool(((color >= 0.0) & (color <= 1.0)).all()))
        self.assertTrue(bool((density >= 0.0).all()))

    def testInvalidInput(self):
        decoder = TriPlaneDecoder()
        with self.assertRaises(ShapeMismatchError):
            decoder.decode(torch.zeros((2, 12)))
        with self.assertRaises(ValueRangeError):
            decoder.decode(torch.full((2, 18), float("nan")))

    def testJacobianFiniteDifference(self):
        """Test the input Jacobian of both outputs against central differences."""
        torch.manual_seed(2)
        decoder = TriPlaneDecoder().double()
        feat = torch.randn((3, 18), dtype=torch.float64)

        def flatOutput(xx):
            color, density = decoder.decode(xx)
            return torch.cat([color, density[:, None]], dim=-1)

        jac = torch.autograd.functional.jacobian(flatOutput, feat)
        eps = 1.0e-6
        for jj in range(18):
            delta = torch.zeros_like(feat)
            delta[:, jj] = eps
            with torch.no_grad():
                numeric = (flatOutput(feat + delta) - flatOutput(feat - delta)) / (2.0 * eps)
            for ii in range(3):
                analytic = jac[ii, :, ii, jj]
                scale = max(float(analytic.abs().max()), float(numeric[ii].abs().max()), 1.0e-8)
                self.assertLess(float((analytic - numeric[ii]).abs().max()) / scale, 1.0e-5)

    def testHiddenUnitPermutation(self):
        """Test that permuting hidden units consistently across layers leaves the output unchanged."""
        torch.manual_seed(3)
        decoder = TriPlaneDecoder().double()
        permuted = TriPlaneDecoder().double()
        permuted.load_state_dict(decoder.state_dict())
        gen = torch.Generator().manual_seed(4)
        with torch.no_grad():
            layerL = permuted.layers
            for ii in range(len(layerL) - 1):
                perm = torch.randperm(layerL[ii].out_features, generator=gen)
                layerL[ii].weight.copy_(layerL[ii].weight[perm])
                layerL[ii].bias.copy_(layerL[ii].bias[perm])
                layerL[ii + 1].weight.copy_(layerL[ii + 1].weight[:, perm])
            feat = torch.randn((11, 18), dtype=torch.float64)
            colorA, densityA = decoder.decode(feat)
            colorB, densityB = permuted.decode(feat)
        self.assertFalse(torch.equal(permuted.layers[0].weight, decoder.layers[0].weight))
        self.assertTrue(torch.allclose(colorA, colorB, rtol=0.0, atol=1.0e-12))
        self.assertTrue(torch.allclose(densityA, densityB, rtol=0.0, atol=1.0e-12))

    def testTensorDictAndFreeze(self):
        torch.manual_seed(1)
        decoder = TriPlaneDecoder()
        tensorD = decoder.getTensorDict()
        self.assertIn("decoder.layers.0.weight", tensorD)
        self.assertEqual(tensorD["decoder.layers.0.weight"].shape, (32, 18))
        self.assertEqual(tensorD["decoder.layers.3.bias"].shape, (4,))
        other = TriPlaneDecoder().setTensorDict(tensorD)
        feat = torch.randn((7, 18))
        self.assertTrue(torch.equal(decoder(feat)[0], other(feat)[0]))
        other.freeze()
        self.assertFalse(any(param.requires_grad for param in other.parameters()))


def suiteDecoderTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(TriPlaneDecoderTests("testZeroWeights"))
    suiteSelect.addTest(TriPlaneDecoderTests("testTensorDictAndFreeze"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteDecoderTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
