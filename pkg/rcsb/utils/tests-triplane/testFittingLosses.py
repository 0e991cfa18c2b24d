##
# File:    testFittingLosses.py
# Author:  J. Westbrook
# Date:    16-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for the triplane fitting loss terms.

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
from rcsb.utils.triplane.FittingLosses import FittingLosses
from rcsb.utils.triplane.SceneOracle import HullMasks
from rcsb.utils.triplane.TriPlane import TriPlane
from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError, ValueRangeError
from rcsb.utils.triplane.VolumeRenderer import RenderOutput

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class FittingLossesTests(unittest.TestCase):
    def setUp(self):
        self.__startTime = time.time()
        self.__losses = FittingLosses()
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def testLossColor(self):
        target = torch.tensor([[0.5, 0.5, 0.5]], dtype=torch.float64)
        self.assertEqual(float(self.__losses.lossColor(target.clone(), target)), 0.0)
        pred = target + torch.tensor([[0.1, 0.0, 0.0]], dtype=torch.float64)
        self.assertAlmostEqual(float(self.__losses.lossColor(pred, target)), 0.03, places=12)
        with self.assertRaises(ShapeMismatchError):
            self.__losses.lossColor(pred, target[:, :2])

    def testLossMask(self):
        target = torch.tensor([0.0, 1.0, 1.0], dtype=torch.float64)
        self.assertAlmostEqual(float(self.__losses.lossMask(target.clone(), target)), -math.log(1.0 - 1.0e-6), places=12)
        self.assertAlmostEqual(float(self.__losses.lossMask(torch.tensor([0.5], dtype=torch.float64), torch.tensor([1.0], dtype=torch.float64))), math.log(2.0), places=12)
        with self.assertRaises(ValueRangeError):
            self.__losses.lossMask(torch.tensor([1.5], dtype=torch.float64), torch.tensor([1.0], dtype=torch.float64))
        with self.assertRaises(ValueRangeError):
            self.__losses.lossMask(torch.tensor([0.5], dtype=torch.float64), torch.tensor([0.5], dtype=torch.float64))

    def testLossDepth(self):
        pred = torch.tensor([1.2, 0.3], dtype=torch.float64)
        target = torch.tensor([float("inf"), 9.0], dtype=torch.float64)
        self.assertEqual(float(self.__losses.lossDepth(pred, target, torch.zeros(2, dtype=torch.float64))), 0.0)
        lossV = self.__losses.lossDepth(torch.tensor([1.0], dtype=torch.float64), torch.tensor([1.05], dtype=torch.float64), torch.tensor([1.0], dtype=torch.float64))
        self.assertAlmostEqual(float(lossV), 0.05, places=12)
        # infinite off-mask targets must not poison the gradient
        pred.requires_grad_(True)
        self.__losses.lossDepth(pred, target, torch.tensor([0.0, 1.0], dtype=torch.float64)).backward()
        self.assertTrue(bool(torch.isfinite(pred.grad).all()))
        self.assertEqual(float(pred.grad[0]), 0.0)

    def testLossReg(self):
        tp = TriPlane(torch.full((3, 6, 4, 4), 0.3, dtype=torch.float64))
        l2, tv = self.__losses.lossReg(tp)
        self.assertAlmostEqual(float(l2), 0.09, places=12)
        self.assertEqual(float(tv), 0.0)
        planes = torch.tensor([[0.0, 1.0], [0.0, 1.0]], dtype=torch.float64).reshape(1, 1, 2, 2)
        _, tv = self.__losses.lossReg(planes)
        self.assertAlmostEqual(float(tv), 0.5, places=12)

    def testLossHull(self):
        ones = np.ones((4, 4), dtype=np.uint8)
        zeros = np.zeros((4, 4), dtype=np.uint8)
        planes = torch.ones((3, 6, 4, 4), dtype=torch.float64)
        self.assertEqual(float(self.__losses.lossHull(planes, HullMasks(xy=ones, xz=ones, yz=ones))), 0.0)
        self.assertAlmostEqual(float(self.__losses.lossHull(planes, HullMasks(xy=zeros, xz=zeros, yz=zeros))), 1.0, places=12)
        with self.assertRaises(ShapeMismatchError):
            self.__losses.lossHull(planes, HullMasks(xy=ones[:2, :2], xz=ones[:2, :2], yz=ones[:2, :2]))

    def testTotalLoss(self):
        one = torch.ones((), dtype=torch.float64)
        zero = torch.zeros((), dtype=torch.float64)
        self.assertEqual(float(self.__losses.totalLoss(zero, zero, zero, zero, zero, zero)), 0.0)
        self.assertAlmostEqual(float(self.__losses.totalLoss(one, one, one, one, one, one)), 2.7, places=12)

    def testComputeAll(self):
        output = RenderOutput(
            color=torch.tensor([[0.6, 0.5, 0.5]], dtype=torch.float64),
            mask=torch.tensor([0.5], dtype=torch.float64),
            depth=torch.tensor([1.0], dtype=torch.float64),
            weights=None,
        )
        targetD = {
            "color": torch.tensor([[0.5, 0.5, 0.5]], dtype=torch.float64),
            "mask": torch.tensor([1.0], dtype=torch.float64),
            "depth": torch.tensor([1.05], dtype=torch.float64),
        }
        comp = self.__losses.computeAll(output, targetD, TriPlane.zeros(resolution=4, dtype=torch.float64))
        self.assertAlmostEqual(float(comp.color), 0.03, places=12)
        self.assertAlmostEqual(float(comp.mask), math.log(2.0), places=12)
        self.assertAlmostEqual(float(comp.depth), 0.05, places=12)
        self.assertEqual(float(comp.hull), 0.0)
        self.assertAlmostEqual(float(comp.total), 0.03 + 0.1 * math.log(2.0) + 0.5 * 0.05, places=12)

    def testNegativeCoefficient(self):
        with self.assertRaises(ValueRangeError):
            FittingLosses(lambdaTv=-1.0)


def suiteLossTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(FittingLossesTests("testLossColor"))
    suiteSelect.addTest(FittingLossesTests("testTotalLoss"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteLossTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
