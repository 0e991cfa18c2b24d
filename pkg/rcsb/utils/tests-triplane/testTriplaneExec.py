##
# File:    testTriplaneExec.py
# Author:  J. Westbrook
# Date:    18-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for the triplane_exec command line entry point.

"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "jwest@rcsb.rutgers.edu"
__license__ = "Apache 2.0"

import glob
import json
import logging
import os
import platform
import resource
import shutil
import time
import unittest

import torch

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.CaptionGrammar import CaptionGrammar
from rcsb.utils.triplane.PseudoImageDiffusion import DiffusionConfig, PseudoImageDiffusion
from rcsb.utils.triplane.SceneDatasetProvider import SceneDatasetProvider
from rcsb.utils.triplane.TriPlane import TriPlane
from rcsb.utils.triplane.TriPlaneDecoder import TriPlaneDecoder
from rcsb.utils.triplane.TriPlaneFitter import FitConfig
from rcsb.utils.triplane.TriPlaneIoUtils import TriPlaneIoUtils
from rcsb.utils.triplane.TriPlaneWorkbench import TriPlaneWorkbench
from rcsb.utils.triplane.triplaneExec import EXIT_ABORT, EXIT_INVALID, EXIT_OK, main

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class TriplaneExecTests(unittest.TestCase):
    skipFlag = True

    def setUp(self):
        self.__startTime = time.time()
        self.__workPath = os.path.join(HERE, "test-output", "exec")
        if os.path.isdir(self.__workPath):
            shutil.rmtree(self.__workPath)
        os.makedirs(self.__workPath)
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def __genData(self, outPath, seed=0):
        return main(["gen-data", "--n-scenes", "2", "--views", "2", "--resolution", "8", "--seed", str(seed), "--out", outPath, "--quiet"])

    def testUsageErrors(self):
        self.assertEqual(main(["gen-data", "--no-such-flag"]), EXIT_INVALID)
        self.assertEqual(main(["no-such-subcommand"]), EXIT_INVALID)
        self.assertEqual(main([]), EXIT_INVALID)
        self.assertEqual(main(["sample", "--steps", "many"]), EXIT_INVALID)
        self.assertEqual(main(["--help"]), EXIT_OK)

    def testValidationErrors(self):
        outPath = os.path.join(self.__workPath, "render")
        rc = main(["render", "--triplane", os.path.join(self.__workPath, "missing.tpln"), "--decoder", "missing.ckpt", "--out", outPath, "--quiet"])
        self.assertEqual(rc, EXIT_INVALID)
        self.assertFalse(os.path.exists(os.path.join(outPath, ".lock")))
        self.assertEqual(main(["sample", "--model", "missing.ckpt", "--caption", "purple sphere", "--out", outPath, "--quiet"]), EXIT_INVALID)

    def testMissingDatasetDirectory(self):
        """Test that stages needing the scene dataset reject a missing --data as invalid input."""
        fitPath = os.path.join(self.__workPath, "fitted")
        os.makedirs(fitPath)
        TriPlane.zeros(resolution=64).save(os.path.join(fitPath, "triplane-scene-000000.tpln"))
        entryD = {"index": 0, "sceneId": "scene-000000", "caption": "red sphere", "tokens": CaptionGrammar().tokenize("red sphere"), "file": "triplane-scene-000000.tpln"}
        with open(os.path.join(fitPath, "fit-report.json"), "w", encoding="utf-8") as ofh:
            json.dump({"entries": [entryD]}, ofh)
        outPath = os.path.join(self.__workPath, "diffusion")
        self.assertEqual(main(["train-diffusion", "--triplanes", fitPath, "--steps", "1", "--out", outPath, "--quiet"]), EXIT_INVALID)
        self.assertFalse(os.path.exists(os.path.join(outPath, ".lock")))
        self.assertFalse(os.path.exists(os.path.join(outPath, "diffusion.ckpt")))
        rc = main(["train-decoder", "--data", os.path.join(self.__workPath, "no-such-data"), "--out", os.path.join(self.__workPath, "decoder"), "--quiet"])
        self.assertEqual(rc, EXIT_INVALID)

    def testOutputLock(self):
        outPath = os.path.join(self.__workPath, "locked")
        os.makedirs(outPath)
        with open(os.path.join(outPath, ".lock"), "w", encoding="utf-8") as ofh:
            ofh.write("0\n")
        self.assertEqual(self.__genData(outPath), EXIT_ABORT)
        self.assertFalse(os.path.exists(os.path.join(outPath, "gen-data-config.json")))
        self.assertTrue(os.path.exists(os.path.join(outPath, ".lock")))

    def testGenDataDeterminism(self):
        pathA = os.path.join(self.__workPath, "data-a")
        pathB = os.path.join(self.__workPath, "data-b")
        self.assertEqual(self.__genData(pathA, seed=3), EXIT_OK)
        self.assertEqual(self.__genData(pathB, seed=3), EXIT_OK)
        self.assertFalse(os.path.exists(os.path.join(pathA, ".lock")))
        providerA = SceneDatasetProvider(cachePath=pathA, useCache=True)
        providerB = SceneDatasetProvider(cachePath=pathB, useCache=True)
        self.assertEqual(providerA.getSceneCount(), 2)
        self.assertEqual(providerA.getManifest(), providerB.getManifest())
        self.assertTrue(providerA.verifyDataset())
        with open(os.path.join(pathA, "gen-data-config.json"), "r", encoding="utf-8") as ifh:
            effD = json.load(ifh)
        self.assertEqual(effD["workbench"]["nScenes"], 2)
        self.assertEqual(effD["workbench"]["seed"], 3)
        self.assertEqual(effD["refine"]["cfgScale"], 20.0)

    def __digestTree(self, dirPath):
        ioU = TriPlaneIoUtils()
        return {os.path.relpath(fp, dirPath): ioU.sha256(fp) for fp in sorted(glob.glob(os.path.join(dirPath, "**", "*"), recursive=True)) if os.path.isfile(fp)}

    @unittest.skipIf(skipFlag, "Long test")
    def testPipelineDeterminismAcrossThreads(self):
        """Test byte-identical artifacts from repeated runs and from runs with 1 and 8 threads."""
        inPath = os.path.join(self.__workPath, "inputs")
        os.makedirs(inPath)
        modelFp = os.path.join(inPath, "diffusion.ckpt")
        PseudoImageDiffusion(DiffusionConfig(numSteps=100, channels=(8, 16, 32), groups=4, numHeads=2, contextDim=16, resolution=16, seed=1)).saveCheckpoint(modelFp)
        decoderFp = os.path.join(inPath, "decoder.ckpt")
        torch.manual_seed(2)
        TriPlaneWorkbench("render", outPath=inPath).saveDecoder(TriPlaneDecoder(), decoderFp, {"fitConfig": FitConfig().toDict()})
        tpFp = os.path.join(inPath, "input.tpln")
        TriPlane.randomNormal(resolution=16, std=0.3, generator=torch.Generator().manual_seed(3)).save(tpFp)
        argsD = {
            "gen-data": ["--n-scenes", "3", "--views", "4", "--resolution", "16"],
            "fit": ["--data", os.path.join(self.__workPath, "gen-data-a"), "--decoder", decoderFp, "--steps", "5"],
            "sample": ["--model", modelFp, "--caption", "red sphere", "--steps", "10", "--count", "2"],
            "refine": ["--model", modelFp, "--decoder", decoderFp, "--triplane", tpFp, "--caption", "red sphere", "--steps", "5"],
            "render": ["--triplane", tpFp, "--decoder", decoderFp, "--resolution", "16", "--pseudo-images"],
        }
        savedThreads = torch.get_num_threads()
        try:
            for subCommand, argL in argsD.items():
                digestL = []
                for tag, numThreads in (("a", 1), ("b", 1), ("c", 8)):
                    outPath = os.path.join(self.__workPath, "%s-%s" % (subCommand, tag))
                    self.assertEqual(main([subCommand] + argL + ["--seed", "5", "--num-threads", str(numThreads), "--out", outPath, "--quiet"]), EXIT_OK)
                    digestL.append(self.__digestTree(outPath))
                logger.info("%s wrote %d identical files", subCommand, len(digestL[0]))
                self.assertEqual(digestL[0], digestL[1])
                self.assertEqual(digestL[0], digestL[2])
        finally:
            torch.set_num_threads(savedThreads)


def suiteExecTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(TriplaneExecTests("testUsageErrors"))
    suiteSelect.addTest(TriplaneExecTests("testGenDataDeterminism"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteExecTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
