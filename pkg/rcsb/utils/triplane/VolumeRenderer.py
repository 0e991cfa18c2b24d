##
# File:    VolumeRenderer.py
# Author:  jdw
# Date:    14-Oct-2026
#
# Updates:
#  15-Oct-2026 jdw chunked view rendering with pixel-resolved errors
#  19-Oct-2026 jdw triplane fields decode through the checked decoder entry point
##
"""
Differentiable volume rendering of color, opacity mask and expected depth along camera rays.

Each ray interval [tNear, tFar] is split into N equal bins of width delta; one sample is taken
per bin (bin midpoint, or a uniform jitter inside the bin when stratified).  With
alpha_i = 1 - exp(-sigma_i delta) and T_i = exp(-sum_{j<i} sigma_j delta) the weights are
w_i = T_i alpha_i; color = sum w_i c_i, mask = sum w_i, depth = sum w_i t_i.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import logging
from collections import namedtuple

import numpy as np
import torch

from rcsb.utils.triplane.CameraUtils import CameraUtils
from rcsb.utils.triplane.TriPlaneExceptions import RenderError, RenderGraphError, ValueRangeError

logger = logging.getLogger(__name__)

RayBatch = namedtuple("RayBatch", "origins directions tNear tFar valid")
RenderOutput = namedtuple("RenderOutput", "color mask depth weights")


class TriPlaneField(object):
    """Radiance field callable: points (M, 3) -> (density (M,), color (M, 3))."""

    def __init__(self, triPlane, decoder):
        self.triPlane = triPlane
        self.decoder = decoder

    def __call__(self, points):
        color, density = self.decoder.decode(self.triPlane.feature(points))
        return density, color


class VolumeRenderer(object):
    def __init__(self, **kwargs):
        self.__nSamples = kwargs.get("nSamples", 64)
        self.__stratified = kwargs.get("stratified", False)
        self.__chunkSize = kwargs.get("chunkSize", 8192)
        self.__dtype = kwargs.get("dtype", torch.float32)
        if self.__nSamples < 2:
            raise ValueRangeError("Sample count must be at least 2 (got %r)" % self.__nSamples)

    def getSampleCount(self):
        return self.__nSamples

    def makeRays(self, camera, resolution, pixels=None):
        """One ray per requested pixel clipped to the canonical box; rays that miss the box are flagged invalid."""
        origins, directions = CameraUtils.generateRays(camera, resolution, pixels=pixels)
        return self.raysFromArrays(origins, directions)

    def raysFromArrays(self, origins, directions):
        tNear, tFar, valid = CameraUtils.boxInterval(origins, directions)
        tNear = np.where(valid, tNear, 0.0)
        tFar = np.where(valid, tFar, 0.0)
        return RayBatch(
            origins=torch.as_tensor(origins, dtype=self.__dtype),
            directions=torch.as_tensor(directions, dtype=self.__dtype),
            tNear=torch.as_tensor(tNear, dtype=self.__dtype),
            tFar=torch.as_tensor(tFar, dtype=self.__dtype),
            valid=torch.as_tensor(valid),
        )

    def sampleDistances(self, rays, stratified=None, generator=None):
        """Sample distances (M, N) and the per-ray bin width delta (M,)."""
        stratified = self.__stratified if stratified is None else stratified
        nS = self.__nSamples
        span = torch.where(rays.valid, rays.tFar - rays.tNear, torch.zeros_like(rays.tFar))
        delta = span / nS
        if stratified:
            jitter = torch.rand((len(span), nS), generator=generator, dtype=span.dtype)
        else:
            jitter = torch.full((len(span), nS), 0.5, dtype=span.dtype)
        bins = torch.arange(nS, dtype=span.dtype)[None, :]
        tS = rays.tNear[:, None] + (bins + jitter) * delta[:, None]
        return tS, delta

    @staticmethod
    def composite(sigma, color, tS, delta):
        tau = sigma * delta[:, None]
        alpha = 1.0 - torch.exp(-tau)
        # exclusive cumulative optical depth
        cumTau = torch.cumsum(tau, dim=-1) - tau
        weights = torch.exp(-cumTau) * alpha
        return RenderOutput(
            color=torch.sum(weights[..., None] * color, dim=-2),
            mask=torch.sum(weights, dim=-1),
            depth=torch.sum(weights * tS, dim=-1),
            weights=weights,
        )

    def renderRays(self, field, rays, stratified=None, generator=None):
        """Render a ray batch through field(points) -> (density, color).

        Raises:
            RenderError: for a non-finite density, naming the first offending ray and sample
        """
        tS, delta = self.sampleDistances(rays, stratified=stratified, generator=generator)
        mm, nS = tS.shape
        points = rays.origins[:, None, :] + tS[..., None] * rays.directions[:, None, :]
        sigma, color = field(points.reshape(-1, 3))
        sigma = sigma.reshape(mm, nS)
        color = color.reshape(mm, nS, 3)
        finite = torch.isfinite(sigma)
        if not bool(finite.all()):
            rayIndex, sampleIndex = (int(v) for v in torch.nonzero(~finite)[0])
            raise RenderError("Non-finite density at ray %d sample %d" % (rayIndex, sampleIndex), rayIndex=rayIndex, sampleIndex=sampleIndex)
        sigma = torch.where(rays.valid[:, None], sigma, torch.zeros_like(sigma))
        return self.composite(sigma, color, tS, delta)

    def renderView(self, field, camera, resolution, stratified=False, generator=None):
        """Render full (H, W) color, mask and depth images in ray chunks (weights are not retained)."""
        hh, ww = resolution
        rays = self.makeRays(camera, resolution)
        colorL, maskL, depthL = [], [], []
        for start in range(0, hh * ww, self.__chunkSize):
            sl = slice(start, min(start + self.__chunkSize, hh * ww))
            chunk = RayBatch(*[v[sl] for v in rays])
            try:
                out = self.renderRays(field, chunk, stratified=stratified, generator=generator)
            except RenderError as e:
                rayIndex = start + e.rayIndex
                pixel = divmod(rayIndex, ww)
                raise RenderError("Non-finite density at pixel (%d, %d) sample %d" % (pixel[0], pixel[1], e.sampleIndex), rayIndex=rayIndex, sampleIndex=e.sampleIndex, pixel=pixel)
            colorL.append(out.color)
            maskL.append(out.mask)
            depthL.append(out.depth)
        return RenderOutput(
            color=torch.cat(colorL).reshape(hh, ww, 3),
            mask=torch.cat(maskL).reshape(hh, ww),
            depth=torch.cat(depthL).reshape(hh, ww),
            weights=None,
        )

    @staticmethod
    def backward(output, upstreamD, inputs, retainGraph=False):
        """Reverse-mode gradients of the render outputs contracted with upstream gradients.

        Args:
            output (RenderOutput): recorded forward result
            upstreamD (dict): upstream gradients keyed by "color", "mask" or "depth"
            inputs (list): leaf tensors (triplane planes, decoder parameters)

        Returns:
            (list): one gradient per input (zeros for inputs the outputs do not reach)

        Raises:
            RenderGraphError: when the recorded graph was already consumed
        """
        outL, gradL = [], []
        for name in ("color", "mask", "depth"):
            if name in upstreamD and upstreamD[name] is not None:
                outL.append(getattr(output, name))
                gradL.append(upstreamD[name])
        inputs = list(inputs)
        if not outL:
            return [torch.zeros_like(inp) for inp in inputs]
        try:
            gL = torch.autograd.grad(outL, inputs, grad_outputs=gradL, retain_graph=retainGraph, allow_unused=True)
        except RuntimeError as e:
            if "second time" in str(e) or "freed" in str(e):
                raise RenderGraphError("Render graph already consumed: %s" % str(e))
            raise
        return [torch.zeros_like(inp) if gg is None else gg for inp, gg in zip(inputs, gL)]
