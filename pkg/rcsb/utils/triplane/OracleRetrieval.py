##
# File:    OracleRetrieval.py
# Author:  jdw
# Date:    17-Oct-2026
#
# Updates:
#
##
"""
Caption retrieval scored against oracle renderings of the closed caption set.

Each candidate caption is rendered from its canonical scene at four orbit views.  A triplane
rendered from the same views scores a caption by the palette histogram intersection of the
foreground colors times the silhouette IoU, averaged over the views.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import logging
import time
from collections import namedtuple

import numpy as np
import torch

from rcsb.utils.triplane.CameraUtils import CameraUtils
from rcsb.utils.triplane.CaptionGrammar import CaptionGrammar
from rcsb.utils.triplane.MetricsUtils import MetricsUtils
from rcsb.utils.triplane.SceneOracle import SceneOracle
from rcsb.utils.triplane.VolumeRenderer import TriPlaneField, VolumeRenderer

logger = logging.getLogger(__name__)

RetrievalResult = namedtuple("RetrievalResult", "caption rank score topCaption degenerate")


class OracleRetrieval(object):
    def __init__(self, **kwargs):
        self.__resolution = kwargs.get("resolution", 64)
        self.__elevation = kwargs.get("elevation", 15.0)
        self.__renderer = VolumeRenderer(nSamples=kwargs.get("nSamples", 64), stratified=False, dtype=kwargs.get("dtype", torch.float32))
        self.__grammar = CaptionGrammar()
        self.__oracle = SceneOracle()
        self.__cameraL = CameraUtils(**kwargs).getRetrievalCameras(elevationDeg=self.__elevation)
        self.__palette = np.asarray(list(self.__grammar.palette.values()))
        self.__candidateL = kwargs.get("captionList", None) or self.__grammar.enumerateCaptions()
        self.__referenceD = {}

    def getCandidates(self):
        return list(self.__candidateL)

    def paletteHistogram(self, rgb, mask):
        """Normalized histogram of foreground pixels over the nearest palette colors."""
        fg = np.asarray(mask, dtype=bool)
        if not np.any(fg):
            return np.zeros(len(self.__palette))
        pix = np.asarray(rgb, dtype=np.float64)[fg]
        dist = np.sum((pix[:, None, :] - self.__palette[None, :, :]) ** 2, axis=-1)
        counts = np.bincount(np.argmin(dist, axis=-1), minlength=len(self.__palette)).astype(np.float64)
        return counts / counts.sum()

    def __referenceViews(self, caption):
        if caption not in self.__referenceD:
            scene = self.__oracle.canonicalScene(caption)
            viewL = []
            for camera in self.__cameraL:
                vr = self.__oracle.renderOracleView(scene, camera, (self.__resolution, self.__resolution))
                mask = vr.mask.astype(bool)
                viewL.append((mask, self.paletteHistogram(vr.rgb, mask)))
            self.__referenceD[caption] = viewL
        return self.__referenceD[caption]

    def renderFieldViews(self, field):
        """(mask, palette histogram) of the four retrieval views of a radiance field."""
        viewL = []
        with torch.no_grad():
            for camera in self.__cameraL:
                out = self.__renderer.renderView(field, camera, (self.__resolution, self.__resolution))
                alpha = out.mask.double().numpy()
                mask = alpha > 0.5
                # un-premultiply the black-composited color
                rgb = out.color.double().numpy() / np.maximum(alpha, 1.0e-6)[..., None]
                viewL.append((mask, self.paletteHistogram(rgb, mask)))
        return viewL

    def scoreViews(self, viewL, caption):
        scoreL = []
        for (mask, hist), (refMask, refHist) in zip(viewL, self.__referenceViews(caption)):
            iou = MetricsUtils.maskIou(mask, refMask) if np.any(mask) else 0.0
            scoreL.append(float(np.minimum(hist, refHist).sum()) * iou)
        return float(np.mean(scoreL))

    @staticmethod
    def midRank(scoreD, caption):
        """1 + number of strictly better candidates + half the number of other tied candidates."""
        target = scoreD[caption]
        better = sum(1 for c, s in scoreD.items() if s > target)
        ties = sum(1 for c, s in scoreD.items() if s == target and c != caption)
        return 1.0 + better + 0.5 * ties

    def rankCaption(self, triPlane, decoder, trueCaption):
        """Rank of the true caption among all candidates for a rendered triplane."""
        return self.rankField(TriPlaneField(triPlane, decoder), trueCaption)

    def rankField(self, field, trueCaption):
        startTime = time.time()
        viewL = self.renderFieldViews(field)
        degenerate = not any(np.any(mask) for mask, _ in viewL)
        scoreD = {caption: self.scoreViews(viewL, caption) for caption in self.__candidateL}
        if trueCaption not in scoreD:
            scoreD[trueCaption] = self.scoreViews(viewL, trueCaption)
        topCaption = max(sorted(scoreD), key=lambda c: scoreD[c])
        rank = self.midRank(scoreD, trueCaption)
        if degenerate:
            logger.warning("Degenerate retrieval for %r (empty rendered mask)", trueCaption)
        logger.debug("Retrieval %r rank %.1f top %r (%.4f seconds)", trueCaption, rank, topCaption, time.time() - startTime)
        return RetrievalResult(caption=trueCaption, rank=rank, score=scoreD[trueCaption], topCaption=topCaption, degenerate=degenerate)

    def classify(self, triPlane, decoder, caption):
        """Oracle classifier: the caption is recognized when it ranks first."""
        return self.rankCaption(triPlane, decoder, caption).rank == 1.0
