##
# File:    testTriPlaneFitter.py
# Author:  J. Westbrook
# Date:    16-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for shared decoder training and per-object triplane fitting.

"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "jwest@rcsb.rutgers.edu"
__license__ = "Apache 2.0"

import logging
import os
import platform
import resource
import shutil
import time
import unittest

import numpy as np
import torch

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.CameraUtils import CameraUtils
from rcsb.utils.triplane.CaptionGrammar import CaptionGrammar
from rcsb.utils.triplane.FittingLosses import FittingLosses
from rcsb.utils.triplane.SceneDatasetProvider import SceneDatasetProvider, SceneEntry
from rcsb.utils.triplane.SceneOracle import SceneOracle
from rcsb.utils.triplane.TriPlane import TriPlane
from rcsb.utils.triplane.TriPlaneExceptions import ValueRangeError
from rcsb.utils.triplane.TriPlaneFitter import FitConfig, TriPlaneFitter, fitObjectsMulti
from rcsb.utils.triplane.VolumeRenderer import TriPlaneField, VolumeRenderer

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()


class TriPlaneFitterTests(unittest.TestCase):
    skipFlag = True

    def setUp(self):
        self.__startTime = time.time()
        self.__cachePath = os.path.join(HERE, "test-output", "fitter-tests")
        self.__oracle = SceneOracle()
        self.__grammar = CaptionGrammar()
        self.__config = FitConfig(steps=15, sharedSteps=10, raysPerStep=128, nSamples=12, resolution=16, heldOutViews=1, logEvery=0, seed=3)
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def __makeEntry(self, caption, nViews=4, resolution=(16, 16), seed=0):
        scene = self.__oracle.canonicalScene(caption)
        cameraL = CameraUtils().sampleCameras(np.random.default_rng(seed), nViews)
        viewL = [self.__oracle.renderOracleView(scene, camera, resolution) for camera in cameraL]
        return SceneEntry(index=seed, sceneId="scene-%06d" % seed, scene=scene, caption=caption, tokens=self.__grammar.tokenize(caption), viewL=viewL)

    def testFitObjectDeterminism(self):
        """Test that fitting twice with the same seed gives the same triplane and report."""
        entry = self.__makeEntry("red sphere")
        fitter = TriPlaneFitter(self.__config)
        decoder = fitter.makeDecoder()
        before = {k: v.clone() for k, v in decoder.state_dict().items()}
        tpA, repA = fitter.fitObject(entry, decoder)
        tpB, repB = TriPlaneFitter(self.__config).fitObject(entry, decoder)
        self.assertTrue(torch.equal(tpA.planes, tpB.planes))
        self.assertEqual(repA._replace(wallTime=None), repB._replace(wallTime=None))
        # the caller's decoder is untouched
        for k, v in decoder.state_dict().items():
            self.assertTrue(torch.equal(v, before[k]))
        self.assertEqual(repA.steps, 15)
        self.assertEqual(len(repA.totalL), 15)
        self.assertEqual(tpA.inRangeFraction(), 1.0)
        self.assertTrue(0.0 <= repA.iou <= 1.0)
        self.assertIsNotNone(repA.psnr)

    def testSharedDecoderDeterminism(self):
        entryL = [self.__makeEntry("red sphere", seed=0), self.__makeEntry("blue cube on green torus", seed=1)]
        resA = TriPlaneFitter(self.__config).trainSharedDecoder(entryL)
        resB = TriPlaneFitter(self.__config).trainSharedDecoder(entryL)
        self.assertEqual(len(resA.triPlaneL), 2)
        self.assertEqual(len(resA.totalL), 10)
        self.assertEqual(resA.totalL, resB.totalL)
        for k, v in resA.decoder.getTensorDict().items():
            self.assertTrue(np.array_equal(v, resB.decoder.getTensorDict()[k]))
        self.assertFalse(any(param.requires_grad for param in resA.decoder.parameters()))
        with self.assertRaises(ValueRangeError):
            TriPlaneFitter(self.__config).trainSharedDecoder([])

    def testPerObjectRandomStreams(self):
        """Test that objects with different scene indices start from different triplanes."""
        entryA = self.__makeEntry("red sphere", seed=0)
        entryB = entryA._replace(index=7, sceneId="scene-000007")
        fitter = TriPlaneFitter(self.__config)
        initL = [TriPlane.randomNormal(16, 6, std=0.05, generator=fitter.objectGenerator(entry)).planes for entry in (entryA, entryB, entryA)]
        self.assertFalse(torch.equal(initL[0], initL[1]))
        self.assertTrue(torch.equal(initL[0], initL[2]))
        decoder = fitter.makeDecoder()
        tpA, _ = fitter.fitObject(entryA, decoder)
        tpB, _ = fitter.fitObject(entryB, decoder)
        self.assertFalse(torch.equal(tpA.planes, tpB.planes))

    def testFitObjectsMulti(self):
        if os.path.exists(self.__cachePath):
            shutil.rmtree(self.__cachePath)
        dsP = SceneDatasetProvider(cachePath=self.__cachePath, useCache=False)
        dsP.generateDataset(2, 3, (16, 16), 5)
        fitter = TriPlaneFitter(self.__config)
        decoder = fitter.makeDecoder()
        rL, failList = fitObjectsMulti(dsP, [1, 0], decoder, self.__config)
        self.assertEqual(failList, [])
        self.assertEqual([rD["index"] for rD in rL], [0, 1])
        tp, report = fitter.fitObject(dsP.getSceneEntry(1), decoder)
        self.assertTrue(np.array_equal(rL[1]["planes"], tp.toNumpy()))
        self.assertEqual(rL[1]["report"]["totalL"], report.totalL)

    def testInvalidConfig(self):
        with self.assertRaises(ValueRangeError):
            FitConfig(lambdaDepth=-0.5)
        with self.assertRaises(ValueRangeError):
            FitConfig(finalize="squash")
        with self.assertRaises(ValueRangeError):
            FitConfig(nSamples=1)

    def testTotalLossGradient(self):
        """Test autograd against central differences on random texels and decoder parameters."""
        entry = self.__makeEntry("green cylinder", nViews=2, resolution=(4, 4))
        config = FitConfig(nSamples=6, resolution=4, heldOutViews=0, seed=1)
        fitter = TriPlaneFitter(config, dtype=torch.float64)
        losses = FittingLosses(**config.toDict())
        renderer = VolumeRenderer(nSamples=6, dtype=torch.float64)
        targets = fitter.prepareTargets(entry)
        decoder = fitter.makeDecoder()
        planes = TriPlane.randomNormal(4, 6, std=0.3, generator=torch.Generator().manual_seed(2), dtype=torch.float64).planes
        params = [planes] + list(decoder.parameters())

        def totalLoss():
            out = renderer.renderRays(TriPlaneField(TriPlane(planes), decoder), targets.rays)
            targetD = {"color": targets.color, "mask": targets.mask, "depth": targets.depth}
            return losses.computeAll(out, targetD, TriPlane(planes), targets.hullMasks).total

        for param in params:
            param.requires_grad_(True)
        gradL = torch.autograd.grad(totalLoss(), params)
        rng = np.random.default_rng(4)
        checkL = [(0, int(ii)) for ii in rng.choice(planes.numel(), 50, replace=False)]
        checkL += [(int(jj), int(rng.integers(params[jj].numel()))) for jj in rng.integers(1, len(params), 20)]
        eps = 1.0e-6
        nBad = 0
        with torch.no_grad():
            for jj, ii in checkL:
                flat = params[jj].view(-1)
                saved = float(flat[ii])
                flat[ii] = saved + eps
                lPlus = float(totalLoss())
                flat[ii] = saved - eps
                lMinus = float(totalLoss())
                flat[ii] = saved
                numeric = (lPlus - lMinus) / (2.0 * eps)
                analytic = float(gradL[jj].reshape(-1)[ii])
                if abs(numeric - analytic) > 1.0e-4 * max(abs(numeric), abs(analytic), 1.0e-3):
                    nBad += 1
                    logger.info("Gradient mismatch param %d index %d analytic %r numeric %r", jj, ii, analytic, numeric)
        # kinks of |x| and relu at sampled points may break a rare comparison
        self.assertLessEqual(nBad, 2)

    @unittest.skipIf(skipFlag, "Long test")
    def testSphereAcceptance(self):
        """Test a desk-scale sphere fit on held-out views and the depth supervision ablation."""
        entryL = [self.__makeEntry(caption, nViews=64, resolution=(64, 64), seed=ii) for ii, caption in enumerate(["red sphere", "blue cube", "green cylinder", "white torus"])]
        config = FitConfig(seed=0, sharedSteps=2000, steps=2000)
        fitter = TriPlaneFitter(config)
        shared = fitter.trainSharedDecoder(entryL)
        self.assertLess(np.mean(shared.totalL[-50:]), 0.5 * np.mean(shared.totalL[:4]))
        _, report = fitter.fitObject(entryL[0], shared.decoder)
        logger.info("Sphere fit psnr %.2f iou %.4f depth MAE %.4f", report.psnr, report.iou, report.depthMae)
        self.assertGreaterEqual(report.psnr, 30.0)
        self.assertGreaterEqual(report.iou, 0.95)
        self.assertLessEqual(report.depthMae, 0.02)
        self.assertGreaterEqual(report.inRangeFraction, 0.999)
        _, reportNoDepth = TriPlaneFitter(FitConfig(seed=0, steps=2000, lambdaDepth=0.0)).fitObject(entryL[0], shared.decoder)
        self.assertGreater(reportNoDepth.depthMae, report.depthMae)


def suiteFitterTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(TriPlaneFitterTests("testFitObjectDeterminism"))
    suiteSelect.addTest(TriPlaneFitterTests("testSharedDecoderDeterminism"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteFitterTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
