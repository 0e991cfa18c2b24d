##
# File:    testOracleRetrieval.py
# Author:  J. Westbrook
# Date:    17-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for oracle caption retrieval.

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

import numpy as np
import torch

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.CaptionGrammar import CaptionGrammar
from rcsb.utils.triplane.OracleRetrieval import OracleRetrieval
from rcsb.utils.triplane.SceneOracle import OracleField, SceneOracle

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


def emptyField(points):
    return torch.zeros(points.shape[:-1], dtype=points.dtype), torch.zeros_like(points)


class OracleRetrievalTests(unittest.TestCase):
    skipFlag = True

    def setUp(self):
        self.__startTime = time.time()
        self.__oracle = SceneOracle()
        allL = CaptionGrammar().enumerateCaptions()
        # all single primitives and a spread of stacked pairs
        self.__captionL = allL[:20] + allL[20::37]
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def testGroundTruthRanksFirst(self):
        retrieval = OracleRetrieval(resolution=32, nSamples=96, captionList=self.__captionL, dtype=torch.float64)
        for caption in ["red sphere", "yellow torus", self.__captionL[25]]:
            result = retrieval.rankField(OracleField(self.__oracle.canonicalScene(caption)), caption)
            logger.info("%r rank %.1f score %.4f top %r", caption, result.rank, result.score, result.topCaption)
            self.assertEqual(result.rank, 1.0)
            self.assertEqual(result.topCaption, caption)
            self.assertFalse(result.degenerate)
            self.assertGreater(result.score, 0.5)

    def testEmptyFieldIsDegenerate(self):
        retrieval = OracleRetrieval(resolution=16, nSamples=16, captionList=self.__captionL)
        result = retrieval.rankField(emptyField, "red sphere")
        self.assertTrue(result.degenerate)
        self.assertEqual(result.score, 0.0)
        # every candidate ties at zero
        self.assertEqual(result.rank, 1.0 + 0.5 * (len(self.__captionL) - 1))

    def testCandidateOrderInvariance(self):
        field = OracleField(self.__oracle.canonicalScene("blue cube"))
        resA = OracleRetrieval(resolution=24, nSamples=64, captionList=self.__captionL).rankField(field, "blue cube")
        resB = OracleRetrieval(resolution=24, nSamples=64, captionList=list(reversed(self.__captionL))).rankField(field, "blue cube")
        self.assertEqual(resA.rank, resB.rank)
        self.assertEqual(resA.score, resB.score)
        self.assertEqual(resA.topCaption, resB.topCaption)

    def testMidRankAndHistogram(self):
        self.assertEqual(OracleRetrieval.midRank({"a": 0.5, "b": 0.9, "c": 0.5, "d": 0.1}, "a"), 2.5)
        retrieval = OracleRetrieval(captionList=self.__captionL)
        rgb = np.zeros((2, 2, 3))
        rgb[0, 0] = CaptionGrammar().getColor("green")
        hist = retrieval.paletteHistogram(rgb, np.asarray([[1, 0], [0, 0]]))
        self.assertAlmostEqual(float(hist.sum()), 1.0)
        self.assertEqual(int(np.argmax(hist)), list(CaptionGrammar().palette).index("green"))
        self.assertEqual(float(retrieval.paletteHistogram(rgb, np.zeros((2, 2))).sum()), 0.0)

    @unittest.skipIf(skipFlag, "Long test")
    def testFullCaptionSet(self):
        retrieval = OracleRetrieval(resolution=64, nSamples=128)
        self.assertEqual(len(retrieval.getCandidates()), 420)
        result = retrieval.rankField(OracleField(self.__oracle.canonicalScene("red sphere")), "red sphere")
        self.assertEqual(result.rank, 1.0)


def suiteRetrievalTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(OracleRetrievalTests("testGroundTruthRanksFirst"))
    suiteSelect.addTest(OracleRetrievalTests("testEmptyFieldIsDegenerate"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteRetrievalTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
