##
# File:    MetricsUtils.py
# Author:  jdw
# Date:    15-Oct-2026
#
# Updates:
#
##
"""
Image, mask, depth and retrieval-rank metrics.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import logging
import math
from collections import namedtuple

import numpy as np
import torch

from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError

logger = logging.getLogger(__name__)

MetricsReport = namedtuple("MetricsReport", "psnr iou depthMae recallAt1 recallAt10 meanRank count", defaults=(None,) * 7)

PSNR_SENTINEL = 99.0


class MetricsUtils(object):
    @staticmethod
    def toNumpy(value):
        if torch.is_tensor(value):
            return value.detach().cpu().double().numpy()
        return np.asarray(value, dtype=np.float64)

    @staticmethod
    def psnr(imgA, imgB):
        """Peak signal to noise ratio (dB) for images in [0, 1]; identical images return the 99 dB sentinel."""
        aA = MetricsUtils.toNumpy(imgA)
        aB = MetricsUtils.toNumpy(imgB)
        if aA.shape != aB.shape:
            raise ShapeMismatchError("Image shapes differ %r %r" % (aA.shape, aB.shape))
        mse = float(np.mean((aA - aB) ** 2))
        if mse <= 0.0:
            return PSNR_SENTINEL
        return 10.0 * math.log10(1.0 / mse)

    @staticmethod
    def maskIou(predMask, gtMask, threshold=0.5):
        pM = MetricsUtils.toNumpy(predMask) > threshold
        gM = MetricsUtils.toNumpy(gtMask) > 0.5
        if pM.shape != gM.shape:
            raise ShapeMismatchError("Mask shapes differ %r %r" % (pM.shape, gM.shape))
        union = int(np.sum(pM | gM))
        if union == 0:
            return 1.0
        return float(np.sum(pM & gM)) / float(union)

    @staticmethod
    def depthMae(predDepth, gtDepth, gtMask):
        """Mean absolute depth error over ground-truth mask pixels (0 when the mask is empty)."""
        pD = MetricsUtils.toNumpy(predDepth)
        gD = MetricsUtils.toNumpy(gtDepth)
        gM = MetricsUtils.toNumpy(gtMask) > 0.5
        if pD.shape != gD.shape or gD.shape != gM.shape:
            raise ShapeMismatchError("Depth shapes differ %r %r %r" % (pD.shape, gD.shape, gM.shape))
        if not np.any(gM):
            return 0.0
        return float(np.mean(np.abs(pD[gM] - gD[gM])))

    @staticmethod
    def recallAtK(rankL, kk):
        if not rankL:
            return 0.0
        return float(np.mean([1.0 if rank <= kk else 0.0 for rank in rankL]))

    @staticmethod
    def summarizeRanks(rankL):
        return MetricsReport(
            recallAt1=MetricsUtils.recallAtK(rankL, 1),
            recallAt10=MetricsUtils.recallAtK(rankL, 10),
            meanRank=float(np.mean(rankL)) if rankL else None,
            count=len(rankL),
        )

    @staticmethod
    def reportToDict(report):
        return {k: v for k, v in report._asdict().items() if v is not None}
