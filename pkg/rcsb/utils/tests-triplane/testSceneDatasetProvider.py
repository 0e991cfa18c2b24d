##
# File:    testSceneDatasetProvider.py
# Author:  J. Westbrook
# Date:    15-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for procedural dataset generation, reload and checksum verification.

"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "jwest@rcsb.rutgers.edu"
__license__ = "Apache 2.0"

import glob
import logging
import os
import platform
import resource
import shutil
import time
import unittest

import numpy as np

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.SceneDatasetProvider import SceneDatasetProvider
from rcsb.utils.triplane.TriPlaneExceptions import FormatError, ValueRangeError
from rcsb.utils.triplane.TriPlaneIoUtils import TriPlaneIoUtils

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class SceneDatasetProviderTests(unittest.TestCase):
    skipFlag = True

    def setUp(self):
        self.__startTime = time.time()
        self.__cachePath = os.path.join(HERE, "test-output", "dataset-tests")
        if os.path.exists(self.__cachePath):
            shutil.rmtree(self.__cachePath)
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def __digestTree(self, dirPath):
        ioU = TriPlaneIoUtils()
        return {os.path.relpath(fp, dirPath): ioU.sha256(fp) for fp in sorted(glob.glob(os.path.join(dirPath, "**", "*"), recursive=True)) if os.path.isfile(fp)}

    def __generate(self, name, nScenes=3, viewsPerScene=4, seed=7, numProc=1):
        dsP = SceneDatasetProvider(cachePath=os.path.join(self.__cachePath, name), useCache=False)
        dsP.generateDataset(nScenes, viewsPerScene, (16, 16), seed, numProc=numProc, maxChunkSize=1)
        return dsP

    def testGenerateAndReload(self):
        """Test counts, captions and views of a small generated dataset after reload."""
        self.__generate("a")
        dsP = SceneDatasetProvider(cachePath=os.path.join(self.__cachePath, "a"), useCache=True)
        self.assertTrue(dsP.testCache(minCount=3))
        self.assertEqual(dsP.getSceneCount(), 3)
        self.assertEqual(len(dsP.getCaptions()), 3)
        self.assertTrue(dsP.verifyDataset())
        manifestD = dsP.getManifest()
        self.assertEqual(sum(len(sD["views"]) for sD in manifestD["scenes"]), 12)
        self.assertIn("<caption>", manifestD["grammar"])
        entry = dsP.getSceneEntry(1)
        self.assertEqual(entry.sceneId, "scene-000001")
        self.assertEqual(len(entry.viewL), 4)
        self.assertEqual(" ".join(entry.scene.caption), entry.caption)
        for view in entry.viewL:
            self.assertEqual(view.rgb.shape, (16, 16, 3))
            self.assertEqual(view.mask.shape, (16, 16))
            self.assertTrue(np.array_equal(view.mask.astype(bool), np.isfinite(view.depth)))
            self.assertTrue(np.all(view.rgb[view.mask == 0] == 0.0))

    def testDeterminism(self):
        """Test that the same seed gives byte-identical dataset files."""
        self.__generate("a")
        self.__generate("b")
        self.assertEqual(self.__digestTree(os.path.join(self.__cachePath, "a")), self.__digestTree(os.path.join(self.__cachePath, "b")))
        self.__generate("c", seed=8)
        self.assertNotEqual(self.__digestTree(os.path.join(self.__cachePath, "a")), self.__digestTree(os.path.join(self.__cachePath, "c")))

    def testDeterminismMultiProc(self):
        """Test that output does not depend on the number of rendering processes."""
        self.__generate("a", nScenes=4)
        self.__generate("m", nScenes=4, numProc=2)
        self.assertEqual(self.__digestTree(os.path.join(self.__cachePath, "a")), self.__digestTree(os.path.join(self.__cachePath, "m")))

    def testChecksumMismatch(self):
        dsP = self.__generate("a", nScenes=1, viewsPerScene=2)
        vD = dsP.getManifest()["scenes"][0]["views"][0]
        fp = os.path.join(dsP.getDirPath(), vD["files"]["depth"])
        with open(fp, "r+b") as ofh:
            ofh.seek(-4, os.SEEK_END)
            ofh.write(b"\x00\x00\x80\x3f")
        self.assertFalse(dsP.verifyDataset())
        with self.assertRaises(FormatError):
            dsP.getSceneEntry(0)

    def testInvalidRequest(self):
        dsP = SceneDatasetProvider(cachePath=os.path.join(self.__cachePath, "x"), useCache=False)
        with self.assertRaises(ValueRangeError):
            dsP.generateDataset(0, 4, (16, 16), 0)
        self.assertFalse(dsP.testCache())

    @unittest.skipIf(skipFlag, "Long test")
    def testDeskScaleCounts(self):
        """Test 200 scenes x 64 views gives 200 captions and 12800 view records."""
        dsP = self.__generate("full", nScenes=200, viewsPerScene=64, numProc=4)
        self.assertEqual(len(dsP.getCaptions()), 200)
        self.assertEqual(sum(len(sD["views"]) for sD in dsP.getManifest()["scenes"]), 12800)
        self.assertLessEqual(len({c for c in dsP.getCaptions() if " on " not in c}), 20)


def suiteDatasetTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(SceneDatasetProviderTests("testGenerateAndReload"))
    suiteSelect.addTest(SceneDatasetProviderTests("testDeterminism"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteDatasetTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
