##
# File:    testPseudoImageDenoiser.py
# Author:  J. Westbrook
# Date:    16-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for the pseudo-image denoiser: shapes, global attention and plane embeddings.

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
from rcsb.utils.triplane.CaptionGrammar import CaptionGrammar
from rcsb.utils.triplane.PseudoImageDenoiser import PseudoImageDenoiser, TrainBatchKind, timestepEmbedding
from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class PseudoImageDenoiserTests(unittest.TestCase):
    def setUp(self):
        self.__startTime = time.time()
        grammar = CaptionGrammar()
        torch.manual_seed(0)
        self.__model = PseudoImageDenoiser(
            vocabSize=grammar.getVocabularySize(), padId=grammar.getPadId(), maxLength=grammar.maxLength, channels=(8, 16, 32), groups=4, numHeads=2, contextDim=16
        ).double()
        self.__model.eval()
        gen = torch.Generator().manual_seed(1)
        self.__z = torch.randn((2, 6, 3, 8, 8), generator=gen, dtype=torch.float64)
        self.__t = torch.tensor([10, 700])
        self.__tokens = torch.as_tensor([grammar.tokenize("red sphere"), grammar.tokenize("blue cube on white torus")], dtype=torch.long)
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def testOutputShape(self):
        with torch.no_grad():
            out = self.__model(self.__z, self.__t, self.__tokens)
            self.assertEqual(tuple(out.shape), (2, 6, 3, 8, 8))
            out2d = self.__model(self.__z[:, :1], self.__t, self.__tokens, kind=TrainBatchKind.IMAGE2D)
            self.assertEqual(tuple(out2d.shape), (2, 1, 3, 8, 8))
        self.assertEqual(tuple(timestepEmbedding(self.__t, 8).shape), (2, 8))
        # plane embeddings are added to the timestep embedding
        self.assertEqual(self.__model.planeEmbedding.shape[-1], self.__model.timeMlp[-1].out_features)

    def testPermutationEquivariance(self):
        """Test that permuting images together with their plane embeddings permutes the prediction."""
        perm = torch.tensor([3, 0, 5, 1, 4, 2])
        with torch.no_grad():
            out = self.__model(self.__z, self.__t, self.__tokens)
            outPerm = self.__model(self.__z[:, perm], self.__t, self.__tokens, planeIndex=perm)
        self.assertTrue(torch.allclose(outPerm, out[:, perm], atol=1.0e-10))

    def testEqualEmbeddingsGiveEqualImages(self):
        """Test that identical images sharing one plane embedding get identical predictions."""
        zSame = self.__z[:, :1].expand(2, 6, 3, 8, 8).contiguous()
        with torch.no_grad():
            out = self.__model(zSame, self.__t, self.__tokens, planeIndex=torch.zeros(6, dtype=torch.long))
            outDistinct = self.__model(zSame, self.__t, self.__tokens)
        for kk in range(1, 6):
            self.assertTrue(torch.allclose(out[:, kk], out[:, 0], rtol=0.0, atol=1.0e-12))
        # distinct plane embeddings break the tie
        self.assertGreater(float((outDistinct[:, 1] - outDistinct[:, 0]).abs().max()), 1.0e-8)

    def testGlobalAttention(self):
        """Test that image 0 sees image 5 through global attention and not when attention is restricted."""
        zAlt = self.__z.clone()
        zAlt[:, 5] = zAlt[:, 5] + 1.0
        with torch.no_grad():
            out = self.__model(self.__z, self.__t, self.__tokens)
            outAlt = self.__model(zAlt, self.__t, self.__tokens)
            self.assertGreater(float((out[:, 0] - outAlt[:, 0]).abs().max()), 1.0e-8)
            out = self.__model(self.__z, self.__t, self.__tokens, restrictAttention=True)
            outAlt = self.__model(zAlt, self.__t, self.__tokens, restrictAttention=True)
            self.assertTrue(torch.allclose(out[:, 0], outAlt[:, 0], atol=1.0e-12))

    def testImage2DMatchesRestrictedTriplanePath(self):
        with torch.no_grad():
            out = self.__model(self.__z, self.__t, self.__tokens, restrictAttention=True, zeroPlaneEmbedding=True)
            for kk in range(6):
                out2d = self.__model(self.__z[:, kk : kk + 1], self.__t, self.__tokens, kind=TrainBatchKind.IMAGE2D)
                self.assertTrue(torch.allclose(out2d[:, 0], out[:, kk], atol=1.0e-10))

    def testCaptionConditioning(self):
        nullTokens = torch.as_tensor([CaptionGrammar().nullTokens()] * 2, dtype=torch.long)
        with torch.no_grad():
            out = self.__model(self.__z, self.__t, self.__tokens)
            outNull = self.__model(self.__z, self.__t, nullTokens)
        self.assertGreater(float((out - outNull).abs().max()), 1.0e-8)

    def testShapeErrors(self):
        with self.assertRaises(ShapeMismatchError):
            self.__model(self.__z[:, :5], self.__t, self.__tokens)
        with self.assertRaises(ShapeMismatchError):
            self.__model(self.__z[..., :6, :6], self.__t, self.__tokens)
        with self.assertRaises(ShapeMismatchError):
            self.__model(self.__z, self.__t[:1], self.__tokens)
        with self.assertRaises(ShapeMismatchError):
            self.__model(self.__z, self.__t, self.__tokens, kind=TrainBatchKind.IMAGE2D)


def suiteDenoiserTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(PseudoImageDenoiserTests("testOutputShape"))
    suiteSelect.addTest(PseudoImageDenoiserTests("testPermutationEquivariance"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteDenoiserTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
