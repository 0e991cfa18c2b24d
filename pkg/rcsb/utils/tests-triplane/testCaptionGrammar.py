##
# File:    testCaptionGrammar.py
# Author:  J. Westbrook
# Date:    14-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for the closed caption grammar and its tokenizer.

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

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.CaptionGrammar import CaptionGrammar
from rcsb.utils.triplane.SceneOracle import PrimitiveSpec
from rcsb.utils.triplane.TriPlaneExceptions import ValueRangeError

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class CaptionGrammarTests(unittest.TestCase):
    def setUp(self):
        self.__startTime = time.time()
        self.__grammar = CaptionGrammar()
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def testEnumerateCaptions(self):
        """Test the caption enumeration counts (5 colors x 4 shapes, and all stacked pairs)."""
        singleL = self.__grammar.enumerateCaptions(maxObjects=1)
        self.assertEqual(len(singleL), 20)
        self.assertEqual(len(set(singleL)), 20)
        allL = self.__grammar.enumerateCaptions()
        self.assertEqual(len(allL), 20 + 400)
        self.assertEqual(allL[:20], singleL)
        self.assertIn("red sphere", singleL)
        self.assertIn("blue cube on white torus", allL)

    def testDescribeAndParse(self):
        """Test that describe() and parse() agree on bottom-to-top ordering."""
        red = self.__grammar.getColor("red")
        green = self.__grammar.getColor("green")
        bottom = PrimitiveSpec(kind="box", center=(0.0, -0.3, 0.0), size=(0.1, 0.1, 0.1), color=red)
        top = PrimitiveSpec(kind="sphere", center=(0.0, 0.0, 0.0), size=(0.1,), color=green)
        self.assertEqual(self.__grammar.describe([bottom]), ["red", "cube"])
        wL = self.__grammar.describe([bottom, top])
        self.assertEqual(" ".join(wL), "green sphere on red cube")
        self.assertEqual(self.__grammar.parse(" ".join(wL)), [("red", "box"), ("green", "sphere")])
        # identical primitives -> identical caption
        self.assertEqual(self.__grammar.describe([bottom, top]), wL)

    def testParseErrors(self):
        for caption in ["purple sphere", "red pyramid", "red", "red sphere under blue cube", "red sphere on blue"]:
            with self.assertRaises(ValueRangeError):
                self.__grammar.parse(caption)

    def testTokenize(self):
        """Test padded tokens, the NULL sequence and detokenization."""
        tokens = self.__grammar.tokenize("white cylinder on yellow torus")
        self.assertEqual(len(tokens), self.__grammar.maxLength)
        self.assertEqual(tokens[5:], [self.__grammar.getPadId()] * 3)
        self.assertEqual(self.__grammar.detokenize(tokens), "white cylinder on yellow torus")
        nullL = self.__grammar.tokenize(None)
        self.assertEqual(nullL, self.__grammar.tokenize(""))
        self.assertEqual(nullL[0], self.__grammar.getNullId())
        self.assertEqual(self.__grammar.detokenize(nullL), "")
        # NULL and padding plus the grammar words
        self.assertEqual(self.__grammar.getVocabularySize(), 2 + 1 + 5 + 4)

    def testBnf(self):
        bnf = self.__grammar.getBnf()
        self.assertIn("<caption>", bnf)
        for word in ["red", "green", "blue", "yellow", "white", "sphere", "cube", "cylinder", "torus"]:
            self.assertIn(word, bnf)


def suiteGrammarTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(CaptionGrammarTests("testEnumerateCaptions"))
    suiteSelect.addTest(CaptionGrammarTests("testDescribeAndParse"))
    suiteSelect.addTest(CaptionGrammarTests("testTokenize"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteGrammarTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
