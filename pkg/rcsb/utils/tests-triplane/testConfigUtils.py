##
# File:    testConfigUtils.py
# Author:  J. Westbrook
# Date:    18-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for configuration coercion, key = value files and stage configuration precedence.

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
from unittest import mock

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.ConfigUtils import ConfigUtils, coerceValue
from rcsb.utils.triplane.PseudoImageDiffusion import DiffusionConfig
from rcsb.utils.triplane.TriPlaneExceptions import ValueRangeError
from rcsb.utils.triplane.TriPlaneFitter import FitConfig
from rcsb.utils.triplane.TriPlaneWorkbench import TriPlaneWorkbench

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class ConfigUtilsTests(unittest.TestCase):
    def setUp(self):
        self.__startTime = time.time()
        self.__workPath = os.path.join(HERE, "test-output")
        if not os.path.isdir(self.__workPath):
            os.makedirs(self.__workPath)
        self.__configPath = os.path.join(self.__workPath, "test-workbench.cfg")
        with open(self.__configPath, "w", encoding="utf-8") as ofh:
            ofh.write("# workbench settings\n")
            ofh.write("nScenes = 3\n")
            ofh.write("numProc = 2   # file wins over the environment\n")
            ofh.write("\n")
            ofh.write("steps = 17\n")
            ofh.write("noSuchKey = 1\n")
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def testCoerceValue(self):
        self.assertIs(coerceValue("yes", False), True)
        self.assertIs(coerceValue("0", True), False)
        self.assertEqual(coerceValue("12", 4), 12)
        self.assertEqual(coerceValue("2.5e-3", 1.0), 0.0025)
        self.assertEqual(coerceValue("1, 3 5", (1.0,)), (1.0, 3.0, 5.0))
        self.assertEqual(coerceValue([4, 8], (1, 2)), (4, 8))
        self.assertIsNone(coerceValue(None, 3))
        with self.assertRaises(ValueRangeError):
            coerceValue("maybe", True)
        with self.assertRaises(ValueRangeError):
            coerceValue("x", 1.0)

    def testReadKeyValueFile(self):
        configD = ConfigUtils(workPath=self.__workPath).readKeyValueFile(self.__configPath)
        self.assertEqual(configD["nScenes"], "3")
        self.assertEqual(configD["numProc"], "2")
        self.assertEqual(len(configD), 4)
        self.assertEqual(ConfigUtils().readKeyValueFile(None), {})
        with self.assertRaises(ValueRangeError):
            ConfigUtils().readKeyValueFile(os.path.join(self.__workPath, "missing.cfg"))

    def testFromDict(self):
        with self.assertLogs("rcsb.utils.triplane.ConfigUtils", level="WARNING") as logCtx:
            fCfg = FitConfig.fromDict({"steps": "9", "lambdaDepth": "0", "unknownKey": 1})
        self.assertEqual(fCfg.steps, 9)
        self.assertEqual(fCfg.lambdaDepth, 0.0)
        self.assertTrue(any("unknownKey" in msg for msg in logCtx.output))
        dCfg = DiffusionConfig.fromDict({"channels": "8,16,32"}, groups=4)
        self.assertEqual(dCfg.channels, (8, 16, 32))
        self.assertEqual(DiffusionConfig.fromDict(dCfg.toDict()), dCfg)

    def testPrecedence(self):
        """Test defaults < environment < configuration file < command line values."""
        with mock.patch.dict(os.environ, {"TRIPLANE_NUM_PROC": "4"}):
            wb = TriPlaneWorkbench("gen-data", outPath=self.__workPath)
            self.assertEqual(wb.getStageConfig("workbench").numProc, 4)
            self.assertEqual(wb.getStageConfig("workbench").nScenes, 200)
            wb = TriPlaneWorkbench("gen-data", outPath=self.__workPath, configFilePath=self.__configPath, overrideD={"nScenes": 2, "seed": None})
        wbCfg = wb.getStageConfig("workbench")
        self.assertEqual(wbCfg.numProc, 2)
        self.assertEqual(wbCfg.nScenes, 2)
        self.assertEqual(wbCfg.seed, 0)
        self.assertEqual(wb.getStageConfig("fit").steps, 17)
        self.assertEqual(wb.getStageConfig("diffusion").cfgScale, 5.0)
        self.assertEqual(wb.getStageConfig("refine").cfgScale, 20.0)


def suiteConfigTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(ConfigUtilsTests("testCoerceValue"))
    suiteSelect.addTest(ConfigUtilsTests("testPrecedence"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteConfigTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
