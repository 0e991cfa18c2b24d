##
# File:    testTriPlaneIoUtils.py
# Author:  J. Westbrook
# Date:    17-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for triplane, checkpoint, depth and image file formats.

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

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.TriPlaneExceptions import FormatError, ShapeMismatchError
from rcsb.utils.triplane.TriPlaneIoUtils import TriPlaneIoUtils

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class TriPlaneIoUtilsTests(unittest.TestCase):
    def setUp(self):
        self.__startTime = time.time()
        self.__workPath = os.path.join(HERE, "test-output")
        if not os.path.isdir(self.__workPath):
            os.makedirs(self.__workPath)
        self.__ioU = TriPlaneIoUtils(dirPath=self.__workPath)
        self.__rng = np.random.default_rng(11)
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def __rewrite(self, fp, transform):
        with open(fp, "rb") as ifh:
            buf = ifh.read()
        with open(fp, "wb") as ofh:
            ofh.write(transform(buf))

    def testTriPlaneFile(self):
        fp = os.path.join(self.__workPath, "test-io.tpl")
        planes = self.__rng.uniform(-1.0, 1.0, (3, 6, 5, 5)).astype(np.float32)
        self.assertTrue(self.__ioU.writeTriPlane(fp, planes))
        self.assertTrue(np.array_equal(self.__ioU.readTriPlane(fp), planes))
        self.__rewrite(fp, lambda buf: buf[:-4])
        with self.assertRaises(FormatError):
            self.__ioU.readTriPlane(fp)
        self.__ioU.writeTriPlane(fp, planes)
        self.__rewrite(fp, lambda buf: b"XXXX" + buf[4:])
        with self.assertRaises(FormatError):
            self.__ioU.readTriPlane(fp)
        with self.assertRaises(ShapeMismatchError):
            self.__ioU.writeTriPlane(fp, planes[:2])

    def testCheckpointFile(self):
        fp = os.path.join(self.__workPath, "test-io.ckpt")
        tensorD = {"decoder.0.weight": self.__rng.normal(size=(4, 6)).astype(np.float32), "scalar": np.float32(2.5), "bias": np.arange(3, dtype=np.float32)}
        self.assertTrue(self.__ioU.writeCheckpoint(fp, tensorD, metaD={"steps": 7}))
        readD, metaD = self.__ioU.readCheckpoint(fp)
        self.assertEqual(list(readD), list(tensorD))
        for key, value in tensorD.items():
            self.assertTrue(np.array_equal(readD[key], value))
        self.assertEqual(readD["scalar"].shape, ())
        self.assertEqual(metaD["steps"], 7)
        self.__rewrite(fp, lambda buf: buf + b"\x00")
        with self.assertRaises(FormatError):
            self.__ioU.readCheckpoint(fp)

    def testDepthFile(self):
        fp = os.path.join(self.__workPath, "test-io.depth")
        depth = self.__rng.uniform(1.0, 2.0, (4, 6)).astype(np.float32)
        depth[0, 0] = math.inf
        self.assertTrue(self.__ioU.writeDepth(fp, depth))
        readD = self.__ioU.readDepth(fp)
        self.assertTrue(np.array_equal(readD, depth))
        self.assertTrue(math.isinf(readD[0, 0]))
        self.__rewrite(fp, lambda buf: buf[:4] + b"\x02\x00" + buf[6:])
        with self.assertRaises(FormatError):
            self.__ioU.readDepth(fp)

    def testPngFiles(self):
        fp = os.path.join(self.__workPath, "test-io-rgb.png")
        rgb = self.__rng.integers(0, 256, (6, 6, 3)) / 255.0
        self.__ioU.writeRgbPng(fp, rgb)
        self.assertTrue(np.allclose(self.__ioU.readRgbPng(fp), rgb, atol=1.0e-6))
        self.assertEqual(self.__ioU.readRgbPng(fp, size=3).shape, (3, 3, 3))
        fp = os.path.join(self.__workPath, "test-io-mask.png")
        mask = self.__rng.random((5, 7)) > 0.5
        self.__ioU.writeMaskPng(fp, mask)
        self.assertTrue(np.array_equal(self.__ioU.readMaskPng(fp), mask.astype(np.uint8)))
        pathL = self.__ioU.writePseudoImagePngs(self.__workPath, np.zeros((6, 3, 4, 4)), "xy0,xy1,xz0,xz1,yz0,yz1")
        self.assertEqual([os.path.basename(fp) for fp in pathL][-1], "pseudo-yz1.png")


def suiteIoTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(TriPlaneIoUtilsTests("testTriPlaneFile"))
    suiteSelect.addTest(TriPlaneIoUtilsTests("testDepthFile"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteIoTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
