##
# File:    TriPlaneWorkbench.py
# Author:  jdw
# Date:    18-Oct-2026
#
# Updates:
#  19-Oct-2026 jdw reject a missing dataset directory as invalid input
##
"""
Subcommand pipelines of the triplane workbench: dataset generation, decoder training, fitting,
diffusion training, sampling, refinement, rendering, mesh export and evaluation.

Every pipeline writes into one output directory guarded by a lock file and records its effective
configuration there as <subcommand>-config.json.  Configuration values come from the stage
defaults, then an optional key = value file, then command line overrides.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import contextlib
import dataclasses
import logging
import os
import time
from dataclasses import dataclass

import numpy as np
import torch

from rcsb.utils.io.MarshalUtil import MarshalUtil
from rcsb.utils.triplane.CameraUtils import CameraUtils
from rcsb.utils.triplane.CaptionGrammar import CaptionGrammar
from rcsb.utils.triplane.ConfigUtils import ConfigMixin, ConfigUtils
from rcsb.utils.triplane.MeshExportUtils import MeshExportUtils
from rcsb.utils.triplane.MetricsUtils import MetricsReport, MetricsUtils
from rcsb.utils.triplane.OracleRetrieval import OracleRetrieval
from rcsb.utils.triplane.PseudoImageDiffusion import DiffusionConfig, PseudoImageDiffusion
from rcsb.utils.triplane.SceneDatasetProvider import SceneDatasetProvider
from rcsb.utils.triplane.SdsRefiner import RefineConfig, SdsRefiner, SelfModelGuidance
from rcsb.utils.triplane.TriPlane import PSEUDO_IMAGE_ORDER, TriPlane
from rcsb.utils.triplane.TriPlaneDecoder import TriPlaneDecoder
from rcsb.utils.triplane.TriPlaneExceptions import OutputLockError, ShapeMismatchError, TriPlaneError, ValueRangeError
from rcsb.utils.triplane.TriPlaneFitter import FitConfig, TriPlaneFitter, fitObjectsMulti
from rcsb.utils.triplane.TriPlaneIoUtils import TriPlaneIoUtils
from rcsb.utils.triplane.VolumeRenderer import TriPlaneField, VolumeRenderer

logger = logging.getLogger(__name__)


@dataclass
class WorkbenchConfig(ConfigMixin):
    nScenes: int = 200
    viewsPerScene: int = 64
    viewResolution: int = 128
    sharedObjects: int = 32
    imageViewsPerScene: int = 4
    renderResolution: int = 128
    gridResolution: int = 128
    sampleCount: int = 1
    evalSeeds: int = 5
    evalCaptions: str = ""
    numProc: int = 1
    maxChunkSize: int = 4
    seed: int = 0


STAGE_CONFIGS = {"workbench": WorkbenchConfig, "fit": FitConfig, "diffusion": DiffusionConfig, "refine": RefineConfig}


class TriPlaneWorkbench(object):
    """Run one workbench subcommand against an output directory."""

    def __init__(self, subCommand, **kwargs):
        """
        Args:
            subCommand (str): subcommand name used for the lock and configuration file names
            outPath (str): output directory (default environment variable TRIPLANE_CACHE_PATH or ".")
            configFilePath (str, optional): flat key = value configuration file
            overrideD (dict, optional): command line values taking precedence over the file
        """
        self.__subCommand = subCommand
        self.__outPath = kwargs.get("outPath", None) or os.environ.get("TRIPLANE_CACHE_PATH", ".")
        self.__mU = MarshalUtil(workPath=self.__outPath)
        self.__ioU = TriPlaneIoUtils(dirPath=self.__outPath)
        self.__grammar = CaptionGrammar()
        self.__effectiveD = self.__bootstrapConfig(kwargs.get("configFilePath", None), kwargs.get("overrideD", None) or {})
        self.__wbCfg = self.getStageConfig("workbench")

    def __bootstrapConfig(self, configFilePath, overrideD):
        valD = {}
        if os.environ.get("TRIPLANE_NUM_PROC", None):
            valD["numProc"] = os.environ["TRIPLANE_NUM_PROC"]
        valD.update(ConfigUtils(workPath=self.__outPath).readKeyValueFile(configFilePath))
        valD.update({k: v for k, v in overrideD.items() if v is not None})
        knownS = {fd.name for cls in STAGE_CONFIGS.values() for fd in dataclasses.fields(cls)}
        for key in sorted(set(valD) - knownS):
            logger.warning("Ignoring unknown configuration key %r", key)
        effD = {}
        for stage, cls in STAGE_CONFIGS.items():
            names = {fd.name for fd in dataclasses.fields(cls)}
            effD[stage] = cls.fromDict({k: v for k, v in valD.items() if k in names})
        logger.debug("Bootstrap configuration for %s with %d explicit values", self.__subCommand, len(valD))
        return effD

    def getStageConfig(self, stage):
        return self.__effectiveD[stage]

    def getOutPath(self):
        return self.__outPath

    def writeEffectiveConfig(self):
        fp = os.path.join(self.__outPath, "%s-config.json" % self.__subCommand)
        self.__mU.doExport(fp, {stage: cfg.toDict() for stage, cfg in self.__effectiveD.items()}, fmt="json", indent=3)
        return fp

    @contextlib.contextmanager
    def outputLock(self):
        """Exclusive ownership of the output directory for the duration of one pipeline."""
        if not self.__mU.mkdir(self.__outPath):
            raise TriPlaneError("Cannot create output directory %s" % self.__outPath)
        lockPath = os.path.join(self.__outPath, ".lock")
        try:
            fd = os.open(lockPath, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise OutputLockError("Output directory %s is locked by another writer (%s)" % (self.__outPath, lockPath))
        try:
            os.write(fd, ("%d\n" % os.getpid()).encode("utf-8"))
            os.close(fd)
            yield lockPath
        finally:
            os.remove(lockPath)

    def run(self, **kwargs):
        """Dispatch the subcommand under the output lock; returns the primary output path."""
        methodD = {
            "gen-data": self.genData,
            "train-decoder": self.trainDecoder,
            "fit": self.fit,
            "train-diffusion": self.trainDiffusion,
            "sample": self.sample,
            "refine": self.refine,
            "render": self.render,
            "export-mesh": self.exportMesh,
            "eval": self.evaluate,
        }
        if self.__subCommand not in methodD:
            raise ValueRangeError("Unknown subcommand %r" % self.__subCommand)
        startTime = time.time()
        with self.outputLock():
            self.writeEffectiveConfig()
            retPath = methodD[self.__subCommand](**kwargs)
        logger.info("Completed %s -> %s (%.4f seconds)", self.__subCommand, retPath, time.time() - startTime)
        return retPath

    # -- shared helpers --

    def __outFile(self, fileName):
        return os.path.join(self.__outPath, fileName)

    def __provider(self, dataPath):
        provider = SceneDatasetProvider(cachePath=self.__requirePath(dataPath, "dataset directory"), useCache=True)
        if not provider.testCache():
            raise ValueRangeError("No dataset manifest found under %s" % dataPath)
        return provider

    def __requirePath(self, filePath, what):
        if not filePath or not self.__mU.exists(filePath):
            raise ValueRangeError("Missing %s (%r)" % (what, filePath))
        return filePath

    def loadDecoder(self, decoderPath):
        tensorD, metaD = self.__ioU.readCheckpoint(self.__requirePath(decoderPath, "decoder checkpoint"))
        fCfg = FitConfig.fromDict(metaD.get("fitConfig", {}))
        decoder = TriPlaneDecoder(channels=fCfg.channels, hiddenWidth=fCfg.hiddenWidth).setTensorDict(tensorD)
        return decoder.freeze()

    def saveDecoder(self, decoder, filePath, metaD):
        return self.__ioU.writeCheckpoint(filePath, decoder.getTensorDict(), metaD)

    def loadTriPlane(self, triplanePath):
        return TriPlane.load(self.__requirePath(triplanePath, "triplane file"))

    def __evalCaptions(self):
        if self.__wbCfg.evalCaptions.strip():
            captionL = [c.strip() for c in self.__wbCfg.evalCaptions.split(",") if c.strip()]
            for caption in captionL:
                self.__grammar.parse(caption)
            return captionL
        return self.__grammar.enumerateCaptions(maxObjects=1)

    # -- pipelines --

    def genData(self, **kwargs):
        _ = kwargs
        cfg = self.__wbCfg
        provider = SceneDatasetProvider(cachePath=self.__outPath, useCache=False)
        fp = provider.generateDataset(cfg.nScenes, cfg.viewsPerScene, (cfg.viewResolution, cfg.viewResolution), cfg.seed, numProc=cfg.numProc, maxChunkSize=cfg.maxChunkSize)
        if not provider.verifyDataset():
            raise TriPlaneError("Dataset verification failed for %s" % fp)
        return fp

    def trainDecoder(self, dataPath=None, **kwargs):
        _ = kwargs
        provider = self.__provider(dataPath)
        fCfg = self.getStageConfig("fit")
        count = min(self.__wbCfg.sharedObjects, provider.getSceneCount())
        entries = [provider.getSceneEntry(ii) for ii in range(count)]
        fitter = TriPlaneFitter(fCfg)
        result = fitter.trainSharedDecoder(entries)
        fp = self.__outFile("decoder.ckpt")
        self.saveDecoder(result.decoder, fp, {"fitConfig": fCfg.toDict(), "objects": [entry.sceneId for entry in entries]})
        self.__mU.doExport(self.__outFile("decoder-losses.json"), {"totalL": result.totalL}, fmt="json", indent=3)
        return fp

    def fit(self, dataPath=None, decoderPath=None, indexList=None, **kwargs):
        _ = kwargs
        provider = self.__provider(dataPath)
        decoder = self.loadDecoder(decoderPath)
        indexL = list(indexList) if indexList else list(range(provider.getSceneCount()))
        if any(ii < 0 or ii >= provider.getSceneCount() for ii in indexL):
            raise ValueRangeError("Scene index out of range in %r" % indexL)
        rL, failList = fitObjectsMulti(provider, indexL, decoder, self.getStageConfig("fit"), numProc=self.__wbCfg.numProc, maxChunkSize=1)
        if failList:
            raise TriPlaneError("Fitting failed for %d scenes: %r" % (len(failList), failList))
        sceneD = {sD["index"]: sD for sD in provider.getManifest()["scenes"]}
        entryL = []
        for rD in rL:
            fileName = "triplane-%s.tpln" % rD["sceneId"]
            self.__ioU.writeTriPlane(self.__outFile(fileName), rD["planes"])
            report = {k: v for k, v in rD["report"].items() if k != "wallTime"}
            sD = sceneD[rD["index"]]
            entryL.append({"index": rD["index"], "sceneId": rD["sceneId"], "caption": sD["caption"], "tokens": sD["tokens"], "file": fileName, "report": report})
        fp = self.__outFile("fit-report.json")
        self.__mU.doExport(fp, {"dataPath": os.path.abspath(dataPath), "entries": entryL}, fmt="json", indent=3)
        return fp

    def __readFitCorpus(self, triplanesPath):
        fp = self.__requirePath(os.path.join(triplanesPath or "", "fit-report.json"), "fit report")
        fitD = self.__mU.doImport(fp, fmt="json")
        entryL = fitD.get("entries", [])
        if not entryL:
            raise ValueRangeError("Fit report %s lists no triplanes" % fp)
        return entryL

    def trainDiffusion(self, dataPath=None, triplanesPath=None, **kwargs):
        _ = kwargs
        dCfg = self.getStageConfig("diffusion")
        entryL = self.__readFitCorpus(triplanesPath)
        planeL = [self.__ioU.readTriPlane(os.path.join(triplanesPath, eD["file"])) for eD in entryL]
        if any(pl.shape[1:] != (6, dCfg.resolution, dCfg.resolution) for pl in planeL):
            raise ShapeMismatchError("Fitted triplanes must have shape (3, 6, %d, %d)" % (dCfg.resolution, dCfg.resolution))
        planes = torch.as_tensor(np.stack(planeL))
        tpTokens = torch.as_tensor([eD["tokens"] for eD in entryL], dtype=torch.long)
        imageCorpus = None
        if dCfg.p2D > 0.0:
            provider = self.__provider(dataPath)
            imL, tokL = [], []
            for sD in provider.getManifest()["scenes"]:
                for vD in sD["views"][: self.__wbCfg.imageViewsPerScene]:
                    rgb = self.__ioU.readRgbPng(os.path.join(provider.getDirPath(), vD["files"]["rgb"]), size=dCfg.resolution)
                    imL.append(np.transpose(rgb, (2, 0, 1)) * 2.0 - 1.0)
                    tokL.append(sD["tokens"])
            imageCorpus = (torch.as_tensor(np.stack(imL)), torch.as_tensor(tokL, dtype=torch.long))
            logger.info("Single-image corpus with %d views", len(imL))
        diffusion = PseudoImageDiffusion(dCfg)
        lossL = diffusion.train((planes, tpTokens), imageCorpus)
        fp = self.__outFile("diffusion.ckpt")
        diffusion.saveCheckpoint(fp)
        self.__mU.doExport(self.__outFile("diffusion-losses.json"), {"lossL": lossL}, fmt="json", indent=3)
        return fp

    def sample(self, modelPath=None, caption=None, **kwargs):
        _ = kwargs
        dCfg = self.getStageConfig("diffusion")
        if caption:
            self.__grammar.parse(caption)
        diffusion = PseudoImageDiffusion.fromCheckpoint(self.__requirePath(modelPath, "diffusion checkpoint"))
        count = self.__wbCfg.sampleCount
        seedL = [self.__wbCfg.seed + ii for ii in range(count)]
        tpL = diffusion.sampleBatch([caption] * count, steps=dCfg.sampleSteps, cfgScale=dCfg.cfgScale, seedL=seedL)
        fileL = []
        for ii, tp in enumerate(tpL):
            fileName = "sample-%03d.tpln" % ii
            tp.save(self.__outFile(fileName))
            fileL.append(fileName)
        fp = self.__outFile("sample-report.json")
        self.__mU.doExport(fp, {"caption": caption or "", "steps": dCfg.sampleSteps, "cfgScale": dCfg.cfgScale, "seeds": seedL, "files": fileL}, fmt="json", indent=3)
        return fp

    def refine(self, modelPath=None, decoderPath=None, triplanePath=None, caption=None, **kwargs):
        _ = kwargs
        rCfg = self.getStageConfig("refine")
        self.__grammar.parse(caption or "")
        diffusion = PseudoImageDiffusion.fromCheckpoint(self.__requirePath(modelPath, "diffusion checkpoint"))
        decoder = self.loadDecoder(decoderPath)
        refiner = SdsRefiner(SelfModelGuidance(diffusion), rCfg)
        result = refiner.refine(self.loadTriPlane(triplanePath), decoder, caption)
        result.triPlane.save(self.__outFile("refined.tpln"))
        self.saveDecoder(result.decoder, self.__outFile("refined-decoder.ckpt"), {"fitConfig": {"channels": result.triPlane.channels, "hiddenWidth": result.decoder.layers[0].out_features}})
        fp = self.__outFile("refine-report.json")
        self.__mU.doExport(fp, {"caption": caption, "config": rCfg.toDict(), "surrogateL": result.surrogateL, "timestepL": result.timestepL}, fmt="json", indent=3)
        return fp

    def render(self, triplanePath=None, decoderPath=None, axisViews=False, pseudoImages=False, **kwargs):
        _ = kwargs
        triPlane = self.loadTriPlane(triplanePath)
        decoder = self.loadDecoder(decoderPath)
        res = self.__wbCfg.renderResolution
        if axisViews:
            cameraD = CameraUtils.axisCameras()
        else:
            cameraD = {"az%03d" % (90 * ii): cam for ii, cam in enumerate(CameraUtils().getRetrievalCameras())}
        renderer = VolumeRenderer(nSamples=self.getStageConfig("fit").nSamples, stratified=False)
        field = TriPlaneField(triPlane, decoder)
        viewL = []
        with torch.no_grad():
            for name, camera in cameraD.items():
                out = renderer.renderView(field, camera, (res, res))
                fileD = {"rgb": "view-%s-rgb.png" % name, "mask": "view-%s-mask.png" % name, "depth": "view-%s-depth.raw" % name}
                self.__ioU.writeRgbPng(self.__outFile(fileD["rgb"]), out.color.numpy())
                self.__ioU.writeMaskPng(self.__outFile(fileD["mask"]), out.mask.numpy() > 0.5)
                self.__ioU.writeDepth(self.__outFile(fileD["depth"]), out.depth.numpy())
                viewL.append({"name": name, "camera": CameraUtils.toDict(camera), "files": fileD})
        pseudoL = []
        if pseudoImages:
            stack = triPlane.pack()
            pseudoL = [os.path.basename(fp) for fp in self.__ioU.writePseudoImagePngs(self.__outPath, stack.images.numpy(), stack.orderTag)]
        fp = self.__outFile("render-report.json")
        self.__mU.doExport(fp, {"resolution": res, "views": viewL, "pseudoImages": pseudoL, "pseudoImageOrder": PSEUDO_IMAGE_ORDER}, fmt="json", indent=3)
        return fp

    def exportMesh(self, triplanePath=None, decoderPath=None, **kwargs):
        _ = kwargs
        mxU = MeshExportUtils()
        mesh = mxU.extractMesh(TriPlaneField(self.loadTriPlane(triplanePath), self.loadDecoder(decoderPath)), gridResolution=self.__wbCfg.gridResolution)
        repD = {"vertices": len(mesh.vertices), "faces": len(mesh.faces), "isoLevel": mesh.isoLevel, "empty": mesh.empty, "file": None}
        if mesh.empty:
            logger.warning("Empty density field; no mesh written")
        else:
            mxU.exportPly(mesh, self.__outFile("mesh.ply"))
            repD["file"] = "mesh.ply"
        fp = self.__outFile("mesh-report.json")
        self.__mU.doExport(fp, repD, fmt="json", indent=3)
        return fp

    def __evalFitted(self, dataPath, triplanesPath, decoder, retrieval):
        provider = self.__provider(dataPath)
        fitter = TriPlaneFitter(self.getStageConfig("fit"))
        nHeld = self.getStageConfig("fit").heldOutViews
        rowL = []
        for eD in self.__readFitCorpus(triplanesPath):
            entry = provider.getSceneEntry(eD["index"])
            triPlane = TriPlane.load(os.path.join(triplanesPath, eD["file"]))
            psnr, iou, mae = fitter.evaluate(triPlane, decoder, entry.viewL[len(entry.viewL) - nHeld :])
            rr = retrieval.rankCaption(triPlane, decoder, eD["caption"])
            rowL.append({"sceneId": eD["sceneId"], "caption": eD["caption"], "psnr": psnr, "iou": iou, "depthMae": mae, "rank": rr.rank, "topCaption": rr.topCaption, "degenerate": rr.degenerate})
        rankSummary = MetricsUtils.summarizeRanks([row["rank"] for row in rowL])
        summary = rankSummary._replace(
            psnr=float(np.mean([row["psnr"] for row in rowL])),
            iou=float(np.mean([row["iou"] for row in rowL])),
            depthMae=float(np.mean([row["depthMae"] for row in rowL])),
        )
        return {"summary": MetricsUtils.reportToDict(summary), "entries": rowL}

    def __evalSampled(self, modelPath, decoder, retrieval, cfgScaleL):
        dCfg = self.getStageConfig("diffusion")
        diffusion = PseudoImageDiffusion.fromCheckpoint(self.__requirePath(modelPath, "diffusion checkpoint"))
        captionL = self.__evalCaptions()
        sweepL = []
        for scale in cfgScaleL:
            rowL = []
            for caption in captionL:
                seedL = [self.__wbCfg.seed + kk for kk in range(self.__wbCfg.evalSeeds)]
                for seed, tp in zip(seedL, diffusion.sampleBatch([caption] * len(seedL), steps=dCfg.sampleSteps, cfgScale=scale, seedL=seedL)):
                    rr = retrieval.rankCaption(tp, decoder, caption)
                    rowL.append({"caption": caption, "seed": seed, "rank": rr.rank, "score": rr.score, "topCaption": rr.topCaption, "degenerate": rr.degenerate})
            summary = MetricsUtils.summarizeRanks([row["rank"] for row in rowL])
            logger.info("Guidance scale %.2f R@1 %.3f R@10 %.3f over %d samples", scale, summary.recallAt1, summary.recallAt10, summary.count)
            sweepL.append({"cfgScale": scale, "meanScore": float(np.mean([row["score"] for row in rowL])), "summary": MetricsUtils.reportToDict(summary), "entries": rowL})
        return sweepL

    def evaluate(self, dataPath=None, triplanesPath=None, decoderPath=None, modelPath=None, sweepCfg=None, **kwargs):
        """MetricsReport for a fitted corpus and/or oracle retrieval of sampled triplanes."""
        _ = kwargs
        if not triplanesPath and not modelPath:
            raise ValueRangeError("Evaluation needs fitted triplanes, a diffusion checkpoint or both")
        decoder = self.loadDecoder(decoderPath)
        retrieval = OracleRetrieval(resolution=self.getStageConfig("diffusion").resolution, nSamples=self.getStageConfig("fit").nSamples)
        reportD = {"fields": list(MetricsReport._fields)}
        if triplanesPath:
            reportD["fitted"] = self.__evalFitted(dataPath, triplanesPath, decoder, retrieval)
        if modelPath:
            cfgScaleL = list(sweepCfg) if sweepCfg else [self.getStageConfig("diffusion").cfgScale]
            reportD["sampled"] = self.__evalSampled(modelPath, decoder, retrieval, cfgScaleL)
        fp = self.__outFile("eval-report.json")
        self.__mU.doExport(fp, reportD, fmt="json", indent=3)
        return fp
