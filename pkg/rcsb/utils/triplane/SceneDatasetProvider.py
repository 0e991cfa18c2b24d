##
# File:    SceneDatasetProvider.py
# Author:  jdw
# Date:    13-Oct-2026
#
# Updates:
#  15-Oct-2026 jdw multiprocess scene rendering with per-scene random streams
##
"""
Generate, persist and reload the procedural multi-view scene dataset.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import logging
import os
import time
from collections import namedtuple

import numpy as np

from rcsb.utils.io.MarshalUtil import MarshalUtil
from rcsb.utils.multiproc.MultiProcUtil import MultiProcUtil
from rcsb.utils.triplane.CameraUtils import CameraUtils
from rcsb.utils.triplane.CaptionGrammar import CaptionGrammar
from rcsb.utils.triplane.SceneOracle import SceneOracle, ViewRecord
from rcsb.utils.triplane.TriPlaneExceptions import DatasetWriteError, FormatError, ValueRangeError
from rcsb.utils.triplane.TriPlaneIoUtils import TriPlaneIoUtils

logger = logging.getLogger(__name__)

SceneEntry = namedtuple("SceneEntry", "index sceneId scene caption tokens viewL")

MANIFEST_VERSION = 1


def sceneSeedSequence(seed, index):
    return np.random.SeedSequence([int(seed), int(index)])


class SceneDatasetWorker(object):
    """A skeleton class that implements the interface expected by the multiprocessing
    for rendering procedural scenes and their supervision views.
    """

    def __init__(self, **kwargs):
        self.__oracle = SceneOracle(**kwargs)
        self.__cameraU = CameraUtils(**kwargs)
        self.__grammar = CaptionGrammar()

    def renderScenes(self, dataList, procName, optionsD, workingDir):
        """Render and store the views of the input scene indices and return their manifest entries."""
        _ = workingDir
        successList = []
        retList = []
        diagList = []
        for index in dataList:
            try:
                retList.append(self.__renderScene(index, optionsD))
                successList.append(index)
            except Exception as e:
                logger.exception("%s failing for scene %r with %s", procName, index, str(e))
        logger.debug("%s rendered %d of %d scenes", procName, len(successList), len(dataList))
        return successList, retList, diagList

    def __renderScene(self, index, optionsD):
        seed = optionsD["seed"]
        dirPath = optionsD["dirPath"]
        resolution = tuple(optionsD["resolution"])
        ss = sceneSeedSequence(seed, index)
        rng = np.random.default_rng(ss)
        sceneSeed = int(ss.generate_state(1, dtype=np.uint64)[0])
        scene = self.__oracle.sampleScene(rng, seed=sceneSeed)
        cameraL = self.__cameraU.sampleCameras(rng, optionsD["viewsPerScene"])
        sceneId = "scene-%06d" % index
        scenePath = os.path.join(dirPath, sceneId)
        ioU = TriPlaneIoUtils(dirPath=scenePath)
        os.makedirs(scenePath, exist_ok=True)
        viewL = []
        for iv, camera in enumerate(cameraL):
            vr = self.__oracle.renderOracleView(scene, camera, resolution)
            fD = {kind: os.path.join(sceneId, "view-%04d-%s" % (iv, suffix)) for kind, suffix in (("rgb", "rgb.png"), ("mask", "mask.png"), ("depth", "depth.raw"))}
            ioU.writeRgbPng(os.path.join(dirPath, fD["rgb"]), vr.rgb)
            ioU.writeMaskPng(os.path.join(dirPath, fD["mask"]), vr.mask)
            ioU.writeDepth(os.path.join(dirPath, fD["depth"]), vr.depth)
            viewL.append({"camera": CameraUtils.toDict(camera), "files": fD, "sha256": {k: ioU.sha256(os.path.join(dirPath, v)) for k, v in fD.items()}})
        sD = SceneOracle.sceneToDict(scene)
        sD.update({"index": index, "sceneId": sceneId, "tokens": self.__grammar.tokenize(scene.caption), "views": viewL})
        return sD


class SceneDatasetProvider(object):
    """Generate and reload the dataset container (JSON manifest plus per-view PNG and raw depth files)."""

    def __init__(self, **kwargs):
        self.__cachePath = kwargs.get("cachePath", ".")
        self.__dirPath = os.path.join(self.__cachePath, kwargs.get("dataDirName", "dataset"))
        self.__mU = MarshalUtil(workPath=self.__dirPath)
        self.__ioU = TriPlaneIoUtils(dirPath=self.__dirPath)
        self.__grammar = CaptionGrammar()
        self.__kwargs = kwargs
        self.__manifestD = self.__reload(**kwargs)

    def getDirPath(self):
        return self.__dirPath

    def getManifestFilePath(self):
        return os.path.join(self.__dirPath, "manifest.json")

    def testCache(self, minCount=None):
        sceneL = self.__manifestD.get("scenes", []) if self.__manifestD else []
        return len(sceneL) >= minCount if minCount else bool(sceneL)

    def getManifest(self):
        return self.__manifestD

    def __reload(self, **kwargs):
        manifestD = {}
        useCache = kwargs.get("useCache", True)
        fp = self.getManifestFilePath()
        if useCache and self.__mU.exists(fp):
            manifestD = self.__mU.doImport(fp, fmt="json")
            logger.info("Read dataset manifest %s with %d scenes", fp, len(manifestD.get("scenes", [])))
        return manifestD

    def generateDataset(self, nScenes, viewsPerScene, resolution, seed, numProc=1, maxChunkSize=4):
        """Render nScenes random scenes with viewsPerScene views each and write the container.

        Args:
            nScenes (int): number of scenes (>= 1)
            viewsPerScene (int): views per scene
            resolution (tuple): view (H, W)
            seed (int): dataset seed; scene i draws from the stream SeedSequence([seed, i])
            numProc (int, optional): rendering processes (results do not depend on this)

        Returns:
            (str): manifest file path

        Raises:
            DatasetWriteError: on any failure to render or store the container
        """
        if nScenes < 1 or viewsPerScene < 1:
            raise ValueRangeError("Dataset needs at least one scene and one view (got %r, %r)" % (nScenes, viewsPerScene))
        startTime = time.time()
        optD = {"seed": int(seed), "viewsPerScene": int(viewsPerScene), "resolution": [int(v) for v in resolution], "dirPath": self.__dirPath}
        wKwargs = {k: v for k, v in self.__kwargs.items() if k in ["radius", "fovY", "elevationRange", "pairFraction", "sigmaSolid"]}
        try:
            if not self.__mU.mkdir(self.__dirPath):
                raise DatasetWriteError("Cannot create dataset directory %s" % self.__dirPath)
            indexL = list(range(nScenes))
            worker = SceneDatasetWorker(**wKwargs)
            if numProc <= 1:
                okL, sceneL, _ = worker.renderScenes(indexL, "main", optD, self.__dirPath)
                failList = sorted(set(indexL) - set(okL))
            else:
                mpu = MultiProcUtil(verbose=True)
                mpu.setOptions(optD)
                mpu.set(workerObj=worker, workerMethod="renderScenes")
                _, failList, resultList, _ = mpu.runMulti(dataList=indexL, numProc=numProc, numResults=1, chunkSize=maxChunkSize)
                sceneL = resultList[0]
            if failList:
                raise DatasetWriteError("Failed rendering %d scenes: %r" % (len(failList), failList[:10]))
            sceneL = sorted(sceneL, key=lambda sD: sD["index"])
            manifestD = {
                "version": MANIFEST_VERSION,
                "seed": int(seed),
                "resolution": optD["resolution"],
                "viewsPerScene": int(viewsPerScene),
                "grammar": self.__grammar.getBnf(),
                "scenes": sceneL,
            }
            fp = self.getManifestFilePath()
            if not self.__mU.doExport(fp, manifestD, fmt="json", indent=3):
                raise DatasetWriteError("Failed writing manifest %s" % fp)
        except DatasetWriteError:
            raise
        except Exception as e:
            logger.exception("Failing with %s", str(e))
            raise DatasetWriteError("Dataset generation failed: %s" % str(e))
        self.__manifestD = manifestD
        logger.info("Generated %d scenes x %d views at %r (%.4f seconds)", nScenes, viewsPerScene, tuple(resolution), time.time() - startTime)
        return fp

    def getSceneCount(self):
        return len(self.__manifestD.get("scenes", [])) if self.__manifestD else 0

    def getCaptions(self):
        return [sD["caption"] for sD in self.__manifestD.get("scenes", [])]

    def getSceneEntry(self, index, loadViews=True, verify=True):
        """Return the scene, caption, tokens and (optionally) the decoded supervision views."""
        sD = self.__manifestD["scenes"][index]
        scene = SceneOracle.sceneFromDict(sD)
        viewL = []
        if loadViews:
            for vD in sD["views"]:
                pathD = {k: os.path.join(self.__dirPath, v) for k, v in vD["files"].items()}
                if verify:
                    for kind, fp in pathD.items():
                        if self.__ioU.sha256(fp) != vD["sha256"][kind]:
                            raise FormatError("Checksum mismatch for %s" % fp)
                viewL.append(
                    ViewRecord(
                        camera=CameraUtils.fromDict(vD["camera"]),
                        rgb=self.__ioU.readRgbPng(pathD["rgb"]),
                        mask=self.__ioU.readMaskPng(pathD["mask"]),
                        depth=self.__ioU.readDepth(pathD["depth"]),
                    )
                )
        return SceneEntry(index=sD["index"], sceneId=sD["sceneId"], scene=scene, caption=sD["caption"], tokens=list(sD["tokens"]), viewL=viewL)

    def verifyDataset(self):
        """Check that every manifest view resolves to existing binaries with matching checksums."""
        ok = True
        for sD in self.__manifestD.get("scenes", []):
            for vD in sD["views"]:
                for kind, relPath in vD["files"].items():
                    fp = os.path.join(self.__dirPath, relPath)
                    if not self.__mU.exists(fp) or self.__ioU.sha256(fp) != vD["sha256"][kind]:
                        logger.error("Dataset file %s missing or corrupted", fp)
                        ok = False
        return ok
