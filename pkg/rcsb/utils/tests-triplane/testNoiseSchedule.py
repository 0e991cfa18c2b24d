##
# File:    testNoiseSchedule.py
# Author:  J. Westbrook
# Date:    16-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for the variance preserving noise schedule, v-parameterization and Min-SNR weights.

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
from rcsb.utils.triplane.NoiseSchedule import NoiseSchedule
from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError, ValueRangeError

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class NoiseScheduleTests(unittest.TestCase):
    def setUp(self):
        self.__startTime = time.time()
        self.__schedule = NoiseSchedule(1000)
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def testVariancePreserving(self):
        alpha, sigma = self.__schedule.alpha, self.__schedule.sigma
        self.assertLess(float((alpha ** 2 + sigma ** 2 - 1.0).abs().max()), 1.0e-12)
        self.assertTrue(bool((alpha[1:] < alpha[:-1]).all()))
        self.assertTrue(bool((sigma[1:] > sigma[:-1]).all()))
        self.assertGreater(float(alpha[1]), 0.999)
        self.assertAlmostEqual(float(sigma[1000]), 1.0, places=12)

    def testArithmeticExamples(self):
        """Test the closed form identities at alpha = 0.8 and sigma = 0.6."""
        alpha = torch.tensor(0.8, dtype=torch.float64)
        sigma = torch.tensor(0.6, dtype=torch.float64)
        x0 = torch.tensor([1.0], dtype=torch.float64)
        eps = torch.tensor([0.0], dtype=torch.float64)
        snr = NoiseSchedule.snrFromCoefficients(alpha, sigma)
        self.assertAlmostEqual(float(snr), 16.0 / 9.0, places=12)
        zz = NoiseSchedule.noiseFromCoefficients(x0, eps, alpha, sigma)
        self.assertAlmostEqual(float(zz[0]), 0.8, places=12)
        vv = NoiseSchedule.vFromCoefficients(x0, eps, alpha, sigma)
        self.assertAlmostEqual(float(vv[0]), -0.6, places=12)
        self.assertAlmostEqual(float(alpha * zz[0] - sigma * vv[0]), 1.0, places=12)
        self.assertAlmostEqual(float(NoiseSchedule.minSnrWeight(snr, 5.0)), 0.64, places=12)
        self.assertLess(float(NoiseSchedule.minSnrWeight(1.0e-12, 5.0)), 1.0e-11)
        self.assertAlmostEqual(float(NoiseSchedule.minSnrWeight(100.0, 5.0)), 5.0 / 101.0, places=12)

    def testNoiseAndVIdentities(self):
        gen = torch.Generator().manual_seed(0)
        x0 = torch.rand((4, 6, 3, 8, 8), generator=gen, dtype=torch.float64) * 2.0 - 1.0
        eps = torch.randn((4, 6, 3, 8, 8), generator=gen, dtype=torch.float64)
        tt = torch.tensor([1, 10, 500, 1000])
        zz = self.__schedule.addNoise(x0, eps, tt)
        vv = self.__schedule.vTarget(x0, eps, tt)
        self.assertTrue(torch.allclose(self.__schedule.predictX0(zz, vv, tt), x0, atol=1.0e-12))
        self.assertTrue(torch.allclose(self.__schedule.predictEps(zz, vv, tt), eps, atol=1.0e-12))
        # x0 = 0 gives sigma_t eps
        zz = self.__schedule.addNoise(torch.zeros_like(eps), eps, 500)
        self.assertTrue(torch.allclose(zz, float(self.__schedule.sigma[500]) * eps, atol=1.0e-12))
        # schedule start: z ~ x0 and v = eps at sigma = 0
        aT, sT = self.__schedule.coefficients(0, x0, allowZero=True)
        self.assertEqual(float(sT), 0.0)
        self.assertTrue(torch.equal(NoiseSchedule.vFromCoefficients(x0, eps, aT, sT), eps))
        self.assertTrue(torch.allclose(self.__schedule.addNoise(x0, eps, 1), x0, atol=0.1))

    def testLossWeight(self):
        ww = self.__schedule.lossWeight(torch.arange(1, 1001), gamma=5.0)
        self.assertTrue(bool(((ww > 0.0) & (ww <= 1.0)).all()))
        self.assertLess(float(ww[-1]), 1.0e-6)

    def testSubSchedule(self):
        pairL = self.__schedule.subSchedule(50)
        self.assertEqual(len(pairL), 50)
        self.assertEqual(pairL[0], (1000, 980))
        self.assertEqual(pairL[-1], (20, 0))
        self.assertEqual(self.__schedule.subSchedule(1), [(1000, 0)])
        x0 = torch.zeros((1, 3))
        for tt, ss in pairL:
            _, var = self.__schedule.posterior(tt, ss, x0, x0)
            self.assertGreaterEqual(var, 0.0)

    def testInvalidArguments(self):
        with self.assertRaises(ValueRangeError):
            NoiseSchedule(1)
        with self.assertRaises(ValueRangeError):
            self.__schedule.subSchedule(0)
        with self.assertRaises(ValueRangeError):
            self.__schedule.snr(1001)
        with self.assertRaises(ValueRangeError):
            self.__schedule.snr(0)
        with self.assertRaises(ValueRangeError):
            NoiseSchedule.minSnrWeight(1.0, gamma=0.0)
        with self.assertRaises(ShapeMismatchError):
            self.__schedule.addNoise(torch.zeros(3), torch.zeros(4), 5)
        with self.assertRaises(ShapeMismatchError):
            self.__schedule.addNoise(torch.zeros((2, 3)), torch.zeros((2, 3)), torch.tensor([1, 2, 3]))


def suiteScheduleTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(NoiseScheduleTests("testVariancePreserving"))
    suiteSelect.addTest(NoiseScheduleTests("testArithmeticExamples"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteScheduleTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
