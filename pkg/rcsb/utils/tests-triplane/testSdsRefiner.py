##
# File:    testSdsRefiner.py
# Author:  J. Westbrook
# Date:    17-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for score distillation gradients and triplane refinement.

"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "jwest@rcsb.rutgers.edu"
__license__ = "Apache 2.0"

import json
import logging
import os
import platform
import resource
import time
import unittest
from collections import namedtuple

import numpy as np
import torch
from skimage.morphology import binary_dilation, disk

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.CameraUtils import CameraUtils
from rcsb.utils.triplane.NoiseSchedule import NoiseSchedule
from rcsb.utils.triplane.OracleRetrieval import OracleRetrieval
from rcsb.utils.triplane.PseudoImageDiffusion import DiffusionConfig, PseudoImageDiffusion
from rcsb.utils.triplane.SceneDatasetProvider import SceneDatasetProvider
from rcsb.utils.triplane.SdsRefiner import RefineConfig, SdsRefiner, SelfModelGuidance
from rcsb.utils.triplane.TriPlane import TriPlane
from rcsb.utils.triplane.TriPlaneDecoder import TriPlaneDecoder
from rcsb.utils.triplane.TriPlaneExceptions import ValueRangeError
from rcsb.utils.triplane.TriPlaneFitter import FitConfig, TriPlaneFitter
from rcsb.utils.triplane.TriPlaneIoUtils import TriPlaneIoUtils
from rcsb.utils.triplane.TriPlaneWorkbench import TriPlaneWorkbench
from rcsb.utils.triplane.VolumeRenderer import TriPlaneField, VolumeRenderer

HERE = os.path.abspath(os.path.dirname(__file__))
TOPDIR = os.path.dirname(os.path.dirname(os.path.dirname(HERE)))

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
logger = logging.getLogger()

# desk-scale acceptance runs share one cached dataset, decoder and fitted corpus
DESK_CONFIG = {
    "nScenes": 200,
    "viewsPerScene": 24,
    "viewResolution": 64,
    "sharedObjects": 32,
    "resolution": 32,
    "sharedSteps": 3000,
    "steps": 1000,
    "raysPerStep": 2048,
    "nSamples": 48,
    "trainSteps": 6000,
    "sampleSteps": 50,
    "evalSeeds": 5,
    "numProc": 8,
}
DESK_OUTPUTS = {"gen-data": os.path.join("dataset", "manifest.json"), "train-decoder": "decoder.ckpt", "fit": "fit-report.json", "train-diffusion": "diffusion.ckpt", "eval": "eval-report.json"}

DeskPaths = namedtuple("DeskPaths", "dataPath decoderFp fitPath modelFp")


def runDeskStage(subCommand, outPath, overrideD=None, **kwargs):
    """Run one workbench stage with the desk configuration unless its primary output exists."""
    fp = os.path.join(outPath, DESK_OUTPUTS[subCommand])
    if not os.path.exists(fp):
        configD = dict(DESK_CONFIG)
        configD.update(overrideD or {})
        fp = TriPlaneWorkbench(subCommand, outPath=outPath, overrideD=configD).run(**kwargs)
    return fp


def buildDeskModel(workPath, p2D=0.5, seed=0):
    dataPath = os.path.join(workPath, "data")
    runDeskStage("gen-data", dataPath)
    decoderFp = runDeskStage("train-decoder", os.path.join(workPath, "decoder"), dataPath=dataPath)
    fitPath = os.path.join(workPath, "fitted")
    runDeskStage("fit", fitPath, dataPath=dataPath, decoderPath=decoderFp)
    modelPath = os.path.join(workPath, "diffusion-p%03d-s%d" % (int(round(100 * p2D)), seed))
    modelFp = runDeskStage("train-diffusion", modelPath, overrideD={"p2D": p2D, "seed": seed}, dataPath=dataPath, triplanesPath=fitPath)
    return DeskPaths(dataPath=dataPath, decoderFp=decoderFp, fitPath=fitPath, modelFp=modelFp)


class FixedGuidance(object):
    """Guidance returning a preset noise estimate."""

    def __init__(self, numSteps, epsHat):
        self.schedule = NoiseSchedule(numSteps)
        self.epsHat = epsHat

    def predictEps(self, zt, t, tokens, scale):
        return self.epsHat

    def tokenize(self, caption):
        return torch.zeros((1, 8), dtype=torch.long)


class SdsRefinerTests(unittest.TestCase):
    skipFlag = True

    def setUp(self):
        self.__startTime = time.time()
        self.__deskPath = os.path.join(HERE, "test-output", "desk")
        self.__config = RefineConfig(steps=3, nSamples=6, renderResolution=4, logEvery=0, seed=2)
        self.__camera = CameraUtils.orbitCamera(30.0, 15.0)
        self.__triPlane = TriPlane.randomNormal(resolution=4, std=0.5, generator=torch.Generator().manual_seed(1), dtype=torch.float64)
        torch.manual_seed(1)
        self.__decoder = TriPlaneDecoder(hiddenWidth=8).double()
        gen = torch.Generator().manual_seed(3)
        self.__noise = torch.randn((1, 3, 4, 4), generator=gen, dtype=torch.float64)
        self.__epsHat = torch.randn((1, 3, 4, 4), generator=gen, dtype=torch.float64)
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def __step(self, epsHat, weight=None):
        refiner = SdsRefiner(FixedGuidance(100, epsHat), self.__config, dtype=torch.float64)
        self.__triPlane.planes.requires_grad_(True)
        return refiner.sdsStep(self.__triPlane, self.__decoder, self.__camera, None, torch.Generator().manual_seed(0), noise=self.__noise, weight=weight)

    def testPerfectPredictionGivesZeroGradient(self):
        res = self.__step(self.__noise.clone())
        self.assertEqual(float(res.planeGrad.abs().sum()), 0.0)
        self.assertTrue(all(float(gg.abs().sum()) == 0.0 for gg in res.decoderGradL))

    def testZeroWeightGivesZeroGradient(self):
        res = self.__step(self.__epsHat, weight=0.0)
        self.assertEqual(res.weight, 0.0)
        self.assertEqual(float(res.planeGrad.abs().sum()), 0.0)
        self.assertTrue(all(float(gg.abs().sum()) == 0.0 for gg in res.decoderGradL))

    def testSurrogateFiniteDifference(self):
        """Test texel gradients against central differences of the surrogate inner product."""
        res = self.__step(self.__epsHat)
        sigma = float(NoiseSchedule(100).sigma[res.timestep])
        self.assertAlmostEqual(res.weight, sigma ** 2, places=12)
        gg = res.weight * (self.__epsHat - self.__noise)
        refiner = SdsRefiner(FixedGuidance(100, self.__epsHat), self.__config, dtype=torch.float64)
        planes = self.__triPlane.planes.detach().clone()
        eps = 1.0e-6
        nChecked = 0
        with torch.no_grad():
            for ii in np.random.default_rng(5).choice(planes.numel(), 20, replace=False):
                flat = planes.view(-1)
                saved = float(flat[ii])
                flat[ii] = saved + eps
                sPlus = float(torch.sum(gg * refiner.renderImage(TriPlane(planes), self.__decoder, self.__camera)))
                flat[ii] = saved - eps
                sMinus = float(torch.sum(gg * refiner.renderImage(TriPlane(planes), self.__decoder, self.__camera)))
                flat[ii] = saved
                numeric = (sPlus - sMinus) / (2.0 * eps)
                analytic = float(res.planeGrad.reshape(-1)[ii])
                if max(abs(numeric), abs(analytic)) < 1.0e-9:
                    continue
                nChecked += 1
                self.assertLess(abs(numeric - analytic) / max(abs(numeric), abs(analytic)), 1.0e-4)
        self.assertGreater(nChecked, 0)

    def testTimestepRange(self):
        refiner = SdsRefiner(FixedGuidance(1000, self.__epsHat), self.__config)
        self.assertEqual(refiner.timestepRange(), (100, 500))
        gen = torch.Generator().manual_seed(4)
        drawL = [refiner.drawTimestep(gen) for _ in range(2000)]
        self.assertGreaterEqual(min(drawL), 100)
        self.assertLessEqual(max(drawL), 500)

    def testInvalidConfig(self):
        with self.assertRaises(ValueRangeError):
            RefineConfig(tMin=0.5, tMax=0.1)
        with self.assertRaises(ValueRangeError):
            RefineConfig(cfgScale=0.5)
        with self.assertRaises(ValueRangeError):
            RefineConfig(tMax=1.5)

    def testRefineWithSelfModel(self):
        """Test determinism and that neither the guidance model, the input triplane nor the shared decoder change."""
        diffusion = PseudoImageDiffusion(DiffusionConfig(numSteps=100, channels=(8, 16, 32), groups=4, numHeads=2, contextDim=16, resolution=8, seed=1))
        guidance = SelfModelGuidance(diffusion)
        guideBefore = {k: v.clone() for k, v in diffusion.getModel().state_dict().items()}
        tp0 = TriPlane.randomNormal(resolution=8, std=0.3, generator=torch.Generator().manual_seed(6))
        planes0 = tp0.planes.clone()
        torch.manual_seed(2)
        decoder = TriPlaneDecoder(hiddenWidth=8)
        decBefore = {k: v.clone() for k, v in decoder.state_dict().items()}
        config = RefineConfig(steps=3, nSamples=6, renderResolution=8, logEvery=0, seed=4)
        resA = SdsRefiner(guidance, config).refine(tp0, decoder, "red sphere")
        resB = SdsRefiner(guidance, config).refine(tp0, decoder, "red sphere")
        self.assertTrue(torch.equal(resA.triPlane.planes, resB.triPlane.planes))
        self.assertEqual(resA.surrogateL, resB.surrogateL)
        self.assertEqual(len(resA.timestepL), 3)
        self.assertTrue(all(10 <= tt <= 50 for tt in resA.timestepL))
        self.assertFalse(torch.equal(resA.triPlane.planes, planes0))
        self.assertTrue(torch.equal(tp0.planes, planes0))
        for k, v in diffusion.getModel().state_dict().items():
            self.assertTrue(torch.equal(v, guideBefore[k]))
        for k, v in decoder.state_dict().items():
            self.assertTrue(torch.equal(v, decBefore[k]))
        self.assertFalse(any(param.requires_grad for param in resA.decoder.parameters()))

    def __hullViolation(self, renderer, cameraL, fieldBefore, fieldAfter, resolution):
        """Fraction of the refined mask mass outside the dilated silhouettes of the starting field."""
        outside, total = 0.0, 0.0
        with torch.no_grad():
            for camera in cameraL:
                hull = binary_dilation(renderer.renderView(fieldBefore, camera, (resolution, resolution)).mask.numpy() > 0.5, disk(2))
                mask = renderer.renderView(fieldAfter, camera, (resolution, resolution)).mask.double().numpy()
                outside += float(mask[~hull].sum())
                total += float(mask.sum())
        return outside / total if total > 0.0 else 0.0

    @unittest.skipIf(skipFlag, "Long test")
    def testDeskRefinement(self):
        """Test refinement of a converged fit and of sampled shapes under the frozen desk guidance model."""
        desk = buildDeskModel(self.__deskPath)
        digest = TriPlaneIoUtils.sha256(desk.modelFp)
        diffusion = PseudoImageDiffusion.fromCheckpoint(desk.modelFp)
        guideBefore = {k: v.clone() for k, v in diffusion.getModel().state_dict().items()}
        decoder = TriPlaneWorkbench("refine", outPath=self.__deskPath).loadDecoder(desk.decoderFp)
        res, nSamples = DESK_CONFIG["resolution"], DESK_CONFIG["nSamples"]
        config = RefineConfig(steps=300, renderResolution=res, nSamples=nSamples, logEvery=0, seed=0)
        #
        with open(os.path.join(desk.fitPath, "fit-report.json"), "r", encoding="utf-8") as ifh:
            eD = json.load(ifh)["entries"][0]
        fitConfig = FitConfig(nSamples=nSamples)
        entry = SceneDatasetProvider(cachePath=desk.dataPath, useCache=True).getSceneEntry(eD["index"])
        evalViewL = entry.viewL[len(entry.viewL) - fitConfig.heldOutViews :]
        fitter = TriPlaneFitter(fitConfig)
        triPlane = TriPlane.load(os.path.join(desk.fitPath, eD["file"]))
        psnrFit, _, _ = fitter.evaluate(triPlane, decoder, evalViewL)
        result = SdsRefiner(SelfModelGuidance(diffusion), config).refine(triPlane, decoder, eD["caption"])
        psnrRefined, _, _ = fitter.evaluate(result.triPlane, result.decoder, evalViewL)
        logger.info("%s held-out psnr %.2f fitted %.2f refined", eD["sceneId"], psnrFit, psnrRefined)
        self.assertLess(psnrFit - psnrRefined, 3.0)
        #
        retrieval = OracleRetrieval(resolution=res, nSamples=nSamples)
        renderer = VolumeRenderer(nSamples=nSamples)
        cameraL = CameraUtils().getRetrievalCameras()
        gainL, violationL = [], []
        for seed in range(10):
            tp = diffusion.sample("red sphere", steps=50, cfgScale=5.0, seed=seed)
            result = SdsRefiner(SelfModelGuidance(diffusion), RefineConfig.fromDict(config.toDict(), seed=seed)).refine(tp, decoder, "red sphere")
            before = retrieval.rankCaption(tp, decoder, "red sphere").score
            after = retrieval.rankCaption(result.triPlane, result.decoder, "red sphere").score
            gainL.append(after - before)
            violationL.append(self.__hullViolation(renderer, cameraL, TriPlaneField(tp, decoder), TriPlaneField(result.triPlane, result.decoder), res))
        logger.info("Oracle score gains %r hull violations %r", gainL, violationL)
        self.assertGreaterEqual(np.median(gainL), 0.0)
        self.assertLess(max(violationL), 0.05)
        # the guidance model is never written
        for k, v in diffusion.getModel().state_dict().items():
            self.assertTrue(torch.equal(v, guideBefore[k]))
        self.assertEqual(TriPlaneIoUtils.sha256(desk.modelFp), digest)


def suiteRefinerTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(SdsRefinerTests("testPerfectPredictionGivesZeroGradient"))
    suiteSelect.addTest(SdsRefinerTests("testSurrogateFiniteDifference"))
    suiteSelect.addTest(SdsRefinerTests("testRefineWithSelfModel"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteRefinerTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
