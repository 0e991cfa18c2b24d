##
# File:    testMetricsUtils.py
# Author:  J. Westbrook
# Date:    17-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for image, mask, depth and rank metrics.

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
from rcsb.utils.triplane.MetricsUtils import PSNR_SENTINEL, MetricsUtils
from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class MetricsUtilsTests(unittest.TestCase):
    def setUp(self):
        self.__startTime = time.time()
        self.__rng = np.random.default_rng(7)
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def testPsnr(self):
        imgA = np.full((4, 4, 3), 0.5)
        self.assertAlmostEqual(MetricsUtils.psnr(imgA, imgA + 0.1), 20.0, places=10)
        self.assertEqual(MetricsUtils.psnr(imgA, imgA.copy()), PSNR_SENTINEL)
        imgB = self.__rng.random((8, 8, 3))
        imgC = self.__rng.random((8, 8, 3))
        self.assertEqual(MetricsUtils.psnr(imgB, imgC), MetricsUtils.psnr(imgC, imgB))
        self.assertAlmostEqual(MetricsUtils.psnr(torch.as_tensor(imgB), imgC), MetricsUtils.psnr(imgB, imgC), places=12)
        with self.assertRaises(ShapeMismatchError):
            MetricsUtils.psnr(imgA, imgB)

    def testMaskIou(self):
        predM = np.asarray([[0.9, 0.2], [0.7, 0.1]])
        gtM = np.asarray([[1, 1], [0, 0]])
        self.assertAlmostEqual(MetricsUtils.maskIou(predM, gtM), 1.0 / 3.0)
        self.assertEqual(MetricsUtils.maskIou(np.zeros((3, 3)), np.zeros((3, 3))), 1.0)
        self.assertEqual(MetricsUtils.maskIou(gtM, gtM), 1.0)
        for _ in range(5):
            iou = MetricsUtils.maskIou(self.__rng.random((6, 6)), self.__rng.random((6, 6)) > 0.5)
            self.assertGreaterEqual(iou, 0.0)
            self.assertLessEqual(iou, 1.0)

    def testDepthMae(self):
        gtD = np.asarray([[1.0, math.inf], [1.5, 2.0]], dtype=np.float32)
        gtM = np.asarray([[1, 0], [1, 1]])
        predD = np.asarray([[1.1, 5.0], [1.5, 1.7]])
        self.assertAlmostEqual(MetricsUtils.depthMae(predD, gtD, gtM), (0.1 + 0.0 + 0.3) / 3.0, places=6)
        self.assertEqual(MetricsUtils.depthMae(predD, gtD, np.zeros((2, 2))), 0.0)

    def testRanks(self):
        rankL = [1.0, 2.5, 11.0, 1.0]
        self.assertEqual(MetricsUtils.recallAtK(rankL, 1), 0.5)
        self.assertEqual(MetricsUtils.recallAtK(rankL, 10), 0.75)
        self.assertEqual(MetricsUtils.recallAtK([], 1), 0.0)
        report = MetricsUtils.summarizeRanks(rankL)
        self.assertAlmostEqual(report.meanRank, 3.875)
        self.assertEqual(report.count, 4)
        rD = MetricsUtils.reportToDict(report)
        self.assertNotIn("psnr", rD)
        self.assertEqual(rD["recallAt10"], 0.75)


def suiteMetricsTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(MetricsUtilsTests("testPsnr"))
    suiteSelect.addTest(MetricsUtilsTests("testMaskIou"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteMetricsTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
