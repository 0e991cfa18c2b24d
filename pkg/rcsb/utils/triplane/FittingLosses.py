##
# File:    FittingLosses.py
# Author:  jdw
# Date:    14-Oct-2026
#
# Updates:
#
##
"""
Loss terms for depth-aware triplane fitting.  All ray and texel sums are reduced as means.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import logging
from collections import namedtuple

import torch

from rcsb.utils.triplane.TriPlane import TriPlane
from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError, ValueRangeError

logger = logging.getLogger(__name__)

LossComponents = namedtuple("LossComponents", "color mask depth l2 tv hull total")

BCE_EPS = 1.0e-6
# compositing roundoff allowance on predicted opacity
MASK_TOL = 1.0e-4


class FittingLosses(object):
    """Color, mask, depth, regularizer and visual hull terms and their weighted total."""

    def __init__(self, **kwargs):
        self.lambdaL1 = kwargs.get("lambdaL1", 0.2)
        self.lambdaMask = kwargs.get("lambdaMask", 0.1)
        self.lambdaDepth = kwargs.get("lambdaDepth", 0.5)
        self.lambdaL2 = kwargs.get("lambdaL2", 0.05)
        self.lambdaTv = kwargs.get("lambdaTv", 0.05)
        self.lambdaHull = kwargs.get("lambdaHull", 1.0)
        for name in ("lambdaL1", "lambdaMask", "lambdaDepth", "lambdaL2", "lambdaTv", "lambdaHull"):
            if getattr(self, name) < 0.0:
                raise ValueRangeError("Loss coefficient %s must be non-negative" % name)

    @staticmethod
    def __checkShapes(pred, target, what):
        if tuple(pred.shape) != tuple(target.shape):
            raise ShapeMismatchError("%s prediction shape %r does not match target %r" % (what, tuple(pred.shape), tuple(target.shape)))

    def lossColor(self, pred, target):
        """Mean over rays of squared L2 plus lambdaL1 times L1 of the color residual."""
        self.__checkShapes(pred, target, "Color")
        diff = pred - target
        return torch.mean(torch.sum(diff * diff, dim=-1) + self.lambdaL1 * torch.sum(torch.abs(diff), dim=-1))

    def lossMask(self, pred, target):
        """Mean binary cross entropy with the prediction clamped to [1e-6, 1 - 1e-6]."""
        self.__checkShapes(pred, target, "Mask")
        with torch.no_grad():
            if bool(((pred < -MASK_TOL) | (pred > 1.0 + MASK_TOL) | ~torch.isfinite(pred)).any()):
                raise ValueRangeError("Mask prediction outside [0, 1]")
            if bool(((target != 0) & (target != 1)).any()):
                raise ValueRangeError("Mask target must be binary")
        pp = torch.clamp(pred, BCE_EPS, 1.0 - BCE_EPS)
        target = target.to(pp.dtype)
        return -torch.mean(target * torch.log(pp) + (1.0 - target) * torch.log(1.0 - pp))

    def lossDepth(self, pred, target, mask):
        """Mean over rays of mask * |pred - target|; off-mask targets (possibly infinite) are ignored."""
        self.__checkShapes(pred, target, "Depth")
        self.__checkShapes(mask, target, "Depth mask")
        onMask = mask > 0
        resid = torch.where(onMask, torch.abs(pred - torch.where(onMask, target, pred.detach())), torch.zeros_like(pred))
        return torch.mean(mask.to(pred.dtype) * resid)

    @staticmethod
    def __planes(triPlane):
        return triPlane.planes if isinstance(triPlane, TriPlane) else triPlane

    def lossReg(self, triPlane):
        """(l2, tv): mean squared texel value, and mean absolute difference over all row and column neighbor pairs."""
        planes = self.__planes(triPlane)
        l2 = torch.mean(planes * planes)
        dCol = torch.abs(planes[..., :, 1:] - planes[..., :, :-1])
        dRow = torch.abs(planes[..., 1:, :] - planes[..., :-1, :])
        tv = (dCol.sum() + dRow.sum()) / float(dCol.numel() + dRow.numel())
        return l2, tv

    def lossHull(self, triPlane, hullMasks):
        """Mean over planes, channels and texels of (1 - O) |F|."""
        planes = self.__planes(triPlane)
        occ = torch.stack([torch.as_tensor(hullMasks.xy), torch.as_tensor(hullMasks.xz), torch.as_tensor(hullMasks.yz)]).to(planes.dtype)
        if tuple(occ.shape[1:]) != tuple(planes.shape[2:]):
            raise ShapeMismatchError("Hull mask resolution %r does not match plane resolution %r" % (tuple(occ.shape[1:]), tuple(planes.shape[2:])))
        return torch.mean((1.0 - occ[:, None, :, :]) * torch.abs(planes))

    def totalLoss(self, color, mask, depth, l2, tv, hull):
        return color + self.lambdaMask * mask + self.lambdaDepth * depth + self.lambdaL2 * l2 + self.lambdaTv * tv + self.lambdaHull * hull

    def computeAll(self, output, targetD, triPlane, hullMasks=None):
        """All components for one ray batch; targetD holds "color", "mask" and "depth" tensors."""
        lColor = self.lossColor(output.color, targetD["color"])
        lMask = self.lossMask(output.mask, targetD["mask"])
        lDepth = self.lossDepth(output.depth, targetD["depth"], targetD["mask"])
        l2, tv = self.lossReg(triPlane)
        planes = self.__planes(triPlane)
        lHull = self.lossHull(triPlane, hullMasks) if hullMasks is not None else torch.zeros((), dtype=planes.dtype)
        total = self.totalLoss(lColor, lMask, lDepth, l2, tv, lHull)
        return LossComponents(color=lColor, mask=lMask, depth=lDepth, l2=l2, tv=tv, hull=lHull, total=total)
