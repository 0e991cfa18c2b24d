##
# File:    TriPlaneFitter.py
# Author:  jdw
# Date:    15-Oct-2026
#
# Updates:
#  16-Oct-2026 jdw add multiprocess per-object fitting worker
#  17-Oct-2026 jdw report in-range texel fraction before finalization
#  19-Oct-2026 jdw per-object random streams keyed by scene index
##
"""
Two-phase triplane fitting: joint training of the shared decoder with a subset of per-object
triplanes, then per-object triplane fitting against the frozen decoder.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import copy
import logging
import time
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import torch

from rcsb.utils.multiproc.MultiProcUtil import MultiProcUtil
from rcsb.utils.triplane.CameraUtils import CameraUtils
from rcsb.utils.triplane.ConfigUtils import ConfigMixin
from rcsb.utils.triplane.FittingLosses import FittingLosses
from rcsb.utils.triplane.MetricsUtils import MetricsUtils
from rcsb.utils.triplane.SceneDatasetProvider import sceneSeedSequence
from rcsb.utils.triplane.SceneOracle import SceneOracle
from rcsb.utils.triplane.TriPlane import TriPlane
from rcsb.utils.triplane.TriPlaneDecoder import TriPlaneDecoder
from rcsb.utils.triplane.TriPlaneExceptions import DivergenceError, ValueRangeError
from rcsb.utils.triplane.VolumeRenderer import RayBatch, TriPlaneField, VolumeRenderer

logger = logging.getLogger(__name__)

FitReport = namedtuple("FitReport", "steps colorL maskL depthL l2L tvL hullL totalL psnr iou depthMae inRangeFraction wallTime")
SharedDecoderResult = namedtuple("SharedDecoderResult", "decoder triPlaneL totalL")
ObjectTargets = namedtuple("ObjectTargets", "rays color mask depth hullMasks evalViewL")


@dataclass
class FitConfig(ConfigMixin):
    lambdaL1: float = 0.2
    lambdaMask: float = 0.1
    lambdaDepth: float = 0.5
    lambdaL2: float = 0.05
    lambdaTv: float = 0.05
    lambdaHull: float = 1.0
    raysPerStep: int = 4096
    steps: int = 2000
    sharedSteps: int = 4000
    lrTriplane: float = 2.0e-2
    lrDecoder: float = 1.0e-3
    nSamples: int = 64
    resolution: int = 64
    channels: int = 6
    hiddenWidth: int = 32
    initStd: float = 0.05
    dHull: int = 1
    finalize: str = "clip"
    heldOutViews: int = 4
    seed: int = 0
    logEvery: int = 100

    def __post_init__(self):
        if min(self.lambdaL1, self.lambdaMask, self.lambdaDepth, self.lambdaL2, self.lambdaTv, self.lambdaHull) < 0.0:
            raise ValueRangeError("Loss coefficients must be non-negative")
        if self.steps < 1 or self.raysPerStep < 1 or self.nSamples < 2:
            raise ValueRangeError("Invalid fitting budget steps=%r raysPerStep=%r nSamples=%r" % (self.steps, self.raysPerStep, self.nSamples))
        if self.finalize not in ("clip", "affine"):
            raise ValueRangeError("Unknown finalize mode %r" % self.finalize)


class TriPlaneFitter(object):
    """Optimize triplanes (and, in the shared phase, the decoder) against oracle supervision views."""

    def __init__(self, config=None, **kwargs):
        self.__cfg = config if config is not None else FitConfig()
        self.__dtype = kwargs.get("dtype", torch.float32)
        self.__losses = FittingLosses(**self.__cfg.toDict())
        self.__renderer = VolumeRenderer(nSamples=self.__cfg.nSamples, stratified=True, dtype=self.__dtype)
        self.__evalRenderer = VolumeRenderer(nSamples=self.__cfg.nSamples, stratified=False, dtype=self.__dtype)
        self.__oracle = SceneOracle()

    def getConfig(self):
        return self.__cfg

    def makeDecoder(self):
        torch.manual_seed(self.__cfg.seed)
        return TriPlaneDecoder(channels=self.__cfg.channels, hiddenWidth=self.__cfg.hiddenWidth).to(self.__dtype)

    def prepareTargets(self, entry):
        """Ray batch and per-ray targets of all training views; the last heldOutViews views are kept for evaluation."""
        nHeld = min(self.__cfg.heldOutViews, max(len(entry.viewL) - 1, 0))
        trainL = entry.viewL[: len(entry.viewL) - nHeld]
        evalL = entry.viewL[len(entry.viewL) - nHeld:]
        oL, dL, cL, mL, zL = [], [], [], [], []
        for view in trainL:
            origins, directions = CameraUtils.generateRays(view.camera, view.mask.shape)
            oL.append(origins)
            dL.append(directions)
            cL.append(np.asarray(view.rgb, dtype=np.float64).reshape(-1, 3))
            mL.append(np.asarray(view.mask, dtype=np.float64).reshape(-1))
            zL.append(np.asarray(view.depth, dtype=np.float64).reshape(-1))
        rays = self.__renderer.raysFromArrays(np.concatenate(oL), np.concatenate(dL))
        hullMasks = self.__oracle.makeHullMasks(entry.scene, (self.__cfg.resolution, self.__cfg.resolution), self.__cfg.dHull)
        return ObjectTargets(
            rays=rays,
            color=torch.as_tensor(np.concatenate(cL), dtype=self.__dtype),
            mask=torch.as_tensor(np.concatenate(mL), dtype=self.__dtype),
            depth=torch.as_tensor(np.concatenate(zL), dtype=self.__dtype),
            hullMasks=hullMasks,
            evalViewL=evalL,
        )

    def objectGenerator(self, entry):
        """Random stream for fitting one object, derived from (seed, scene index)."""
        ss = sceneSeedSequence(self.__cfg.seed, entry.index)
        return torch.Generator().manual_seed(int(ss.generate_state(1, dtype=np.uint64)[0]))

    def __stepLoss(self, triPlane, decoder, targets, generator):
        idx = torch.randint(len(targets.color), (self.__cfg.raysPerStep,), generator=generator)
        rays = RayBatch(*[v[idx] for v in targets.rays])
        out = self.__renderer.renderRays(TriPlaneField(triPlane, decoder), rays, generator=generator)
        targetD = {"color": targets.color[idx], "mask": targets.mask[idx], "depth": targets.depth[idx]}
        return self.__losses.computeAll(out, targetD, triPlane, targets.hullMasks)

    def __linearDecay(self, steps):
        return lambda step: max(0.0, 1.0 - float(step) / float(steps))

    def trainSharedDecoder(self, entries, steps=None):
        """Jointly optimize the shared decoder and one triplane per entry (round-robin object per step).

        Returns:
            SharedDecoderResult: decoder, fitted triplanes (entry order) and per-step total loss
        """
        if not entries:
            raise ValueRangeError("Shared decoder training needs at least one object")
        steps = steps or self.__cfg.sharedSteps
        startTime = time.time()
        decoder = self.makeDecoder()
        generator = torch.Generator().manual_seed(self.__cfg.seed)
        targetL = [self.prepareTargets(entry) for entry in entries]
        triPlaneL = []
        for _ in entries:
            tp = TriPlane.randomNormal(self.__cfg.resolution, self.__cfg.channels, std=self.__cfg.initStd, generator=generator, dtype=self.__dtype)
            tp.planes.requires_grad_(True)
            triPlaneL.append(tp)
        optimizer = torch.optim.Adam(
            [{"params": [tp.planes for tp in triPlaneL], "lr": self.__cfg.lrTriplane}, {"params": list(decoder.parameters()), "lr": self.__cfg.lrDecoder}],
            betas=(0.9, 0.999),
            eps=1.0e-8,
        )
        scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, [self.__linearDecay(steps), lambda step: 1.0])
        totalL = []
        for step in range(steps):
            io = step % len(entries)
            optimizer.zero_grad()
            comp = self.__stepLoss(triPlaneL[io], decoder, targetL[io], generator)
            if not bool(torch.isfinite(comp.total)):
                raise DivergenceError("Non-finite shared decoder loss at step %d" % step, step=step)
            comp.total.backward()
            optimizer.step()
            scheduler.step()
            totalL.append(float(comp.total.item()))
            if self.__cfg.logEvery and step % self.__cfg.logEvery == 0:
                logger.info("Shared decoder step %d object %d loss %.6f", step, io, totalL[-1])
        for tp in triPlaneL:
            tp.planes.requires_grad_(False)
        decoder.freeze()
        logger.info("Trained shared decoder on %d objects in %d steps (%.4f seconds)", len(entries), steps, time.time() - startTime)
        return SharedDecoderResult(decoder=decoder, triPlaneL=triPlaneL, totalL=totalL)

    def fitObject(self, entry, decoder, steps=None):
        """Fit one triplane against the frozen decoder; the caller's decoder is never modified.

        Returns:
            (TriPlane, FitReport): finalized triplane (values in [-1, 1]) and its report
        """
        steps = steps or self.__cfg.steps
        startTime = time.time()
        frozen = copy.deepcopy(decoder).to(self.__dtype).freeze()
        generator = self.objectGenerator(entry)
        targets = self.prepareTargets(entry)
        triPlane = TriPlane.randomNormal(self.__cfg.resolution, self.__cfg.channels, std=self.__cfg.initStd, generator=generator, dtype=self.__dtype)
        triPlane.planes.requires_grad_(True)
        optimizer = torch.optim.Adam([triPlane.planes], lr=self.__cfg.lrTriplane, betas=(0.9, 0.999), eps=1.0e-8)
        scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, self.__linearDecay(steps))
        histD = {k: [] for k in ("color", "mask", "depth", "l2", "tv", "hull", "total")}
        for step in range(steps):
            optimizer.zero_grad()
            comp = self.__stepLoss(triPlane, frozen, targets, generator)
            if not bool(torch.isfinite(comp.total)):
                raise DivergenceError("Non-finite fitting loss at step %d for %s" % (step, entry.sceneId), step=step)
            comp.total.backward()
            optimizer.step()
            scheduler.step()
            for k in histD:
                histD[k].append(float(getattr(comp, k).item()))
            if self.__cfg.logEvery and step % self.__cfg.logEvery == 0:
                logger.debug("%s step %d loss %.6f", entry.sceneId, step, histD["total"][-1])
        triPlane.planes.requires_grad_(False)
        inRange = triPlane.inRangeFraction()
        final = triPlane.finalize(self.__cfg.finalize)
        psnr, iou, mae = self.evaluate(final, frozen, targets.evalViewL)
        report = FitReport(
            steps=steps,
            colorL=histD["color"],
            maskL=histD["mask"],
            depthL=histD["depth"],
            l2L=histD["l2"],
            tvL=histD["tv"],
            hullL=histD["hull"],
            totalL=histD["total"],
            psnr=psnr,
            iou=iou,
            depthMae=mae,
            inRangeFraction=inRange,
            wallTime=time.time() - startTime,
        )
        logger.info("Fitted %s in %d steps psnr %.2f iou %.4f depth MAE %.4f (%.4f seconds)", entry.sceneId, steps, psnr, iou, mae, report.wallTime)
        return final, report

    def evaluate(self, triPlane, decoder, viewL):
        """Mean PSNR, mask IoU and depth MAE of midpoint renders against oracle views."""
        if not viewL:
            return None, None, None
        psnrL, iouL, maeL = [], [], []
        field = TriPlaneField(triPlane, decoder)
        with torch.no_grad():
            for view in viewL:
                out = self.__evalRenderer.renderView(field, view.camera, view.mask.shape)
                psnrL.append(MetricsUtils.psnr(out.color, view.rgb))
                iouL.append(MetricsUtils.maskIou(out.mask, view.mask))
                maeL.append(MetricsUtils.depthMae(out.depth, view.depth, view.mask))
        return float(np.mean(psnrL)), float(np.mean(iouL)), float(np.mean(maeL))

    @staticmethod
    def reportToDict(report):
        return dict(report._asdict())


class TriPlaneFitWorker(object):
    """A skeleton class that implements the interface expected by the multiprocessing
    for fitting triplanes of dataset scenes against a frozen decoder.
    """

    def __init__(self, provider, decoder, config, **kwargs):
        self.__provider = provider
        self.__decoder = decoder
        self.__config = config
        self.__dtype = kwargs.get("dtype", torch.float32)

    def fitList(self, dataList, procName, optionsD, workingDir):
        _ = workingDir
        torch.set_num_threads(optionsD.get("numThreads", 1))
        successList = []
        retList = []
        diagList = []
        fitter = TriPlaneFitter(self.__config, dtype=self.__dtype)
        for index in dataList:
            try:
                entry = self.__provider.getSceneEntry(index)
                triPlane, report = fitter.fitObject(entry, self.__decoder)
                retList.append({"index": index, "sceneId": entry.sceneId, "planes": triPlane.toNumpy(), "report": TriPlaneFitter.reportToDict(report)})
                successList.append(index)
            except Exception as e:
                logger.exception("%s failing for scene %r with %s", procName, index, str(e))
        return successList, retList, diagList


def fitObjectsMulti(provider, indexL, decoder, config, numProc=1, maxChunkSize=1, dtype=torch.float32):
    """Fit the listed dataset scenes, in parallel when numProc > 1; results are ordered by scene index."""
    worker = TriPlaneFitWorker(provider, decoder, config, dtype=dtype)
    if numProc <= 1:
        _, rL, _ = worker.fitList(list(indexL), "main", {"numThreads": torch.get_num_threads()}, ".")
        failList = sorted(set(indexL) - {rD["index"] for rD in rL})
    else:
        mpu = MultiProcUtil(verbose=True)
        mpu.setOptions({"numThreads": 1})
        mpu.set(workerObj=worker, workerMethod="fitList")
        _, failList, resultList, _ = mpu.runMulti(dataList=list(indexL), numProc=numProc, numResults=1, chunkSize=maxChunkSize)
        rL = resultList[0]
    if failList:
        logger.info("Fitting failures (%d): %r", len(failList), failList)
    return sorted(rL, key=lambda rD: rD["index"]), failList
