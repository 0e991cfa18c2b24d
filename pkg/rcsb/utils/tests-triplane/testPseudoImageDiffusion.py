##
# File:    testPseudoImageDiffusion.py
# Author:  J. Westbrook
# Date:    16-Oct-2026
# Version: 0.001
#
# Update:
#
#
##
"""
Tests for pseudo-image diffusion training, guidance, sampling and checkpoints.

"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "jwest@rcsb.rutgers.edu"
__license__ = "Apache 2.0"

import json
import logging
import math
import os
import platform
import resource
import time
import unittest
from collections import namedtuple

import numpy as np
import torch

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.CameraUtils import CameraUtils
from rcsb.utils.triplane.CaptionGrammar import CaptionGrammar
from rcsb.utils.triplane.PseudoImageDiffusion import DiffusionConfig, PseudoImageDiffusion
from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError, ValueRangeError
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
DESK_CAPTIONS = ["red sphere", "blue cube", "green cylinder", "yellow torus", "white sphere"]

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


class PseudoImageDiffusionTests(unittest.TestCase):
    skipFlag = True

    def setUp(self):
        self.__startTime = time.time()
        self.__workPath = os.path.join(HERE, "test-output")
        self.__deskPath = os.path.join(self.__workPath, "desk")
        if not os.path.isdir(self.__workPath):
            os.makedirs(self.__workPath)
        self.__config = DiffusionConfig(
            numSteps=100, channels=(8, 16, 32), groups=4, numHeads=2, contextDim=16, resolution=8, sampleSteps=4, batchSize=2, imageBatchFactor=2, trainSteps=3, logEvery=0, seed=5
        )
        logger.debug("Running tests on version %s", __version__)
        logger.info("Starting %s at %s", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()))

    def tearDown(self):
        unitS = "MB" if platform.system() == "Darwin" else "GB"
        rusageMax = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        logger.info("Maximum resident memory size %.4f %s", rusageMax / 10 ** 6, unitS)
        endTime = time.time()
        logger.info("Completed %s at %s (%.4f seconds)", self.id(), time.strftime("%Y %m %d %H:%M:%S", time.localtime()), endTime - self.__startTime)

    def __corpus(self, diffusion, nItems=3, nImages=4):
        gen = torch.Generator().manual_seed(2)
        captionL = ["red sphere", "blue cube", "green torus on yellow cylinder", "white cylinder"]
        planes = torch.rand((nItems, 3, 6, 8, 8), generator=gen) * 2.0 - 1.0
        tpTokens = torch.cat([diffusion.tokenize(captionL[ii % 4]) for ii in range(nItems)])
        images = torch.rand((nImages, 3, 8, 8), generator=gen) * 2.0 - 1.0
        imTokens = torch.cat([diffusion.tokenize(captionL[ii % 4]) for ii in range(nImages)])
        return (planes, tpTokens), (images, imTokens)

    def testCfgCombine(self):
        uu = torch.tensor([0.1], dtype=torch.float64)
        cc = torch.tensor([0.2], dtype=torch.float64)
        self.assertIs(PseudoImageDiffusion.cfgCombine(uu, cc, 1.0), cc)
        self.assertTrue(torch.equal(PseudoImageDiffusion.cfgCombine(uu, cc, 0.0), uu))
        self.assertAlmostEqual(float(PseudoImageDiffusion.cfgCombine(uu, cc, 5.0)[0]), 0.6, places=12)
        with self.assertRaises(ShapeMismatchError):
            PseudoImageDiffusion.cfgCombine(uu, torch.zeros(2, dtype=torch.float64), 2.0)

    def testGuidedVAtUnitScale(self):
        diffusion = PseudoImageDiffusion(self.__config)
        zz = torch.randn((1, 6, 3, 8, 8), generator=torch.Generator().manual_seed(3))
        tokens = diffusion.tokenize("red sphere")
        with torch.no_grad():
            vCond = diffusion.getModel()(zz, torch.tensor([40]), tokens)
        self.assertTrue(torch.equal(diffusion.guidedV(zz, 40, tokens, 1.0), vCond))

    def testTrain(self):
        diffusion = PseudoImageDiffusion(self.__config)
        tpCorpus, imCorpus = self.__corpus(diffusion)
        lossL = diffusion.train(tpCorpus, imCorpus)
        self.assertEqual(len(lossL), 3)
        self.assertTrue(all(math.isfinite(v) and v >= 0.0 for v in lossL))
        # same seed, same trajectory
        self.assertEqual(PseudoImageDiffusion(self.__config).train(tpCorpus, imCorpus), lossL)

    def testTrainErrors(self):
        diffusion = PseudoImageDiffusion(self.__config)
        (planes, tokens), _ = self.__corpus(diffusion)
        with self.assertRaises(ValueRangeError):
            diffusion.train((planes, tokens))
        with self.assertRaises(ValueRangeError):
            diffusion.train((2.0 * planes, tokens), steps=1)
        with self.assertRaises(ShapeMismatchError):
            diffusion.train((planes[:, :, :4], tokens), steps=1)
        with self.assertRaises(ValueRangeError):
            diffusion.train((planes[:0], tokens[:0]), steps=1)
        with self.assertRaises(ValueRangeError):
            DiffusionConfig(p2D=1.5)
        # triplane-only training is allowed when p2D = 0
        onlyTp = PseudoImageDiffusion(DiffusionConfig.fromDict(self.__config.toDict(), p2D=0.0))
        self.assertEqual(len(onlyTp.train((planes, tokens), steps=2)), 2)

    def testSampleDeterminism(self):
        diffusion = PseudoImageDiffusion(self.__config)
        tpA = diffusion.sample("red sphere", steps=4, cfgScale=3.0, seed=11)
        tpB = diffusion.sample("red sphere", steps=4, cfgScale=3.0, seed=11)
        tpC = diffusion.sample("red sphere", steps=4, cfgScale=3.0, seed=12)
        self.assertEqual(tuple(tpA.planes.shape), (3, 6, 8, 8))
        self.assertTrue(torch.equal(tpA.planes, tpB.planes))
        self.assertFalse(torch.equal(tpA.planes, tpC.planes))
        self.assertEqual(tpA.inRangeFraction(), 1.0)
        tpU = diffusion.sample(None, steps=2, cfgScale=1.0, seed=11)
        self.assertEqual(tpU.inRangeFraction(), 1.0)

    def testSampleBatchInvariance(self):
        """Test that a chain does not depend on the other chains of its batch."""
        diffusion = PseudoImageDiffusion(self.__config)
        tpL = diffusion.sampleBatch(["red sphere", "blue cube"], steps=3, cfgScale=2.0, seedL=[3, 4])
        self.assertTrue(torch.equal(tpL[1].planes, diffusion.sample("blue cube", steps=3, cfgScale=2.0, seed=4).planes))
        with self.assertRaises(ShapeMismatchError):
            diffusion.sampleBatch(["red sphere"], seedL=[1, 2])

    def testCheckpointRoundTrip(self):
        fp = os.path.join(self.__workPath, "test-diffusion.ckpt")
        diffusion = PseudoImageDiffusion(self.__config)
        tpCorpus, imCorpus = self.__corpus(diffusion)
        diffusion.train(tpCorpus, imCorpus, steps=2)
        self.assertTrue(diffusion.saveCheckpoint(fp))
        restored = PseudoImageDiffusion.fromCheckpoint(fp)
        self.assertEqual(restored.getConfig(), diffusion.getConfig())
        for k, v in diffusion.getModel().state_dict().items():
            self.assertTrue(torch.equal(v, restored.getModel().state_dict()[k]))
        tpA = diffusion.sample("white cylinder", steps=2, cfgScale=2.0, seed=1)
        tpB = restored.sample("white cylinder", steps=2, cfgScale=2.0, seed=1)
        self.assertTrue(torch.equal(tpA.planes, tpB.planes))

    def __evalSampled(self, desk, captionL, cfgScaleL, seed):
        """Oracle retrieval sweep of a desk model keyed by guidance scale."""
        tag = os.path.basename(os.path.dirname(desk.modelFp))
        scaleTag = "_".join("%g" % scale for scale in cfgScaleL)
        outPath = os.path.join(self.__deskPath, "eval-%s-%s-cfg%s-s%d" % (tag, captionL[0].replace(" ", "_"), scaleTag, seed))
        overrideD = {"evalCaptions": ",".join(captionL), "seed": seed}
        fp = runDeskStage("eval", outPath, overrideD=overrideD, decoderPath=desk.decoderFp, modelPath=desk.modelFp, sweepCfg=list(cfgScaleL))
        with open(fp, "r", encoding="utf-8") as ifh:
            return {float(sD["cfgScale"]): sD for sD in json.load(ifh)["sampled"]}

    @unittest.skipIf(skipFlag, "Long test")
    def testDeskTrainingCurve(self):
        desk = buildDeskModel(self.__deskPath)
        with open(os.path.join(os.path.dirname(desk.modelFp), "diffusion-losses.json"), "r", encoding="utf-8") as ifh:
            lossL = json.load(ifh)["lossL"]
        early, late = float(np.mean(lossL[:100])), float(np.mean(lossL[-100:]))
        logger.info("Loss moving average %.5f at step 100 and %.5f at step %d", early, late, len(lossL))
        self.assertLess(late, 0.5 * early)

    @unittest.skipIf(skipFlag, "Long test")
    def testMixedDataAblation(self):
        """Test that training without single-image batches retrieves unseen pair captions less often."""
        desk = buildDeskModel(self.__deskPath)
        with open(os.path.join(desk.fitPath, "fit-report.json"), "r", encoding="utf-8") as ifh:
            seenS = {eD["caption"] for eD in json.load(ifh)["entries"]}
        heldOutL = [caption for caption in CaptionGrammar().enumerateCaptions() if " on " in caption and caption not in seenS]
        captionL = heldOutL[:: max(1, len(heldOutL) // 5)][:5]
        recallD = {}
        for p2D in (0.0, 0.5):
            recallD[p2D] = [self.__evalSampled(buildDeskModel(self.__deskPath, p2D=p2D, seed=seed), captionL, [5.0], seed)[5.0]["summary"]["recallAt1"] for seed in range(3)]
        logger.info("Unseen pair caption R@1 by p2D %r", recallD)
        self.assertLess(np.median(recallD[0.0]), np.median(recallD[0.5]))

    @unittest.skipIf(skipFlag, "Long test")
    def testGuidanceScaleSweep(self):
        score1L, score5L = [], []
        for seed in range(3):
            sweepD = self.__evalSampled(buildDeskModel(self.__deskPath, seed=seed), DESK_CAPTIONS, [1.0, 5.0], seed)
            score1L.append(sweepD[1.0]["meanScore"])
            score5L.append(sweepD[5.0]["meanScore"])
        logger.info("Oracle scores at scale 1 %r and scale 5 %r", score1L, score5L)
        self.assertGreater(np.median(score5L), np.median(score1L))

    @unittest.skipIf(skipFlag, "Long test")
    def testEndToEndSampling(self):
        """Test rank one retrieval of seeded single primitive samples and the per-sample time."""
        desk = buildDeskModel(self.__deskPath)
        summaryD = self.__evalSampled(desk, DESK_CAPTIONS, [5.0], 0)[5.0]["summary"]
        logger.info("Single primitive samples R@1 %.3f over %d", summaryD["recallAt1"], summaryD["count"])
        self.assertEqual(summaryD["count"], 25)
        self.assertGreaterEqual(summaryD["recallAt1"], 0.8)
        diffusion = PseudoImageDiffusion.fromCheckpoint(desk.modelFp)
        startTime = time.time()
        diffusion.sample("red sphere", steps=50, cfgScale=5.0, seed=0)
        self.assertLess(time.time() - startTime, 30.0)

    @unittest.skipIf(skipFlag, "Long test")
    def testUnconditionalSamples(self):
        desk = buildDeskModel(self.__deskPath)
        diffusion = PseudoImageDiffusion.fromCheckpoint(desk.modelFp)
        decoder = TriPlaneWorkbench("render", outPath=self.__deskPath).loadDecoder(desk.decoderFp)
        renderer = VolumeRenderer(nSamples=DESK_CONFIG["nSamples"])
        cameraL = CameraUtils().getRetrievalCameras()
        maskL = []
        with torch.no_grad():
            for tp in diffusion.sampleBatch([None] * 5, steps=50, cfgScale=1.0, seedL=list(range(5))):
                field = TriPlaneField(tp, decoder)
                maskL.extend(float(renderer.renderView(field, camera, (32, 32)).mask.mean()) for camera in cameraL)
        logger.info("Mean unconditional mask %.4f", np.mean(maskL))
        self.assertGreater(np.mean(maskL), 0.05)


def suiteDiffusionTests():
    suiteSelect = unittest.TestSuite()
    suiteSelect.addTest(PseudoImageDiffusionTests("testCfgCombine"))
    suiteSelect.addTest(PseudoImageDiffusionTests("testSampleDeterminism"))
    suiteSelect.addTest(PseudoImageDiffusionTests("testCheckpointRoundTrip"))
    return suiteSelect


if __name__ == "__main__":
    mySuite = suiteDiffusionTests()
    unittest.TextTestRunner(verbosity=2).run(mySuite)
