##
# File:    SdsRefiner.py
# Author:  jdw
# Date:    17-Oct-2026
#
# Updates:
#
##
"""
Score distillation refinement of a triplane and a private decoder copy, restricted to small
noise levels and guided by the pseudo-image denoiser through its single-image pathway.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import copy
import logging
import math
import time
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import torch

from rcsb.utils.triplane.CameraUtils import CameraUtils
from rcsb.utils.triplane.ConfigUtils import ConfigMixin
from rcsb.utils.triplane.FittingLosses import FittingLosses
from rcsb.utils.triplane.PseudoImageDenoiser import TrainBatchKind
from rcsb.utils.triplane.TriPlane import TriPlane
from rcsb.utils.triplane.TriPlaneExceptions import DivergenceError, ValueRangeError
from rcsb.utils.triplane.VolumeRenderer import TriPlaneField, VolumeRenderer

logger = logging.getLogger(__name__)

SdsResult = namedtuple("SdsResult", "planeGrad decoderGradL timestep weight surrogate")
RefineResult = namedtuple("RefineResult", "triPlane decoder surrogateL timestepL")


@dataclass
class RefineConfig(ConfigMixin):
    steps: int = 2000
    tMin: float = 0.1
    tMax: float = 0.5
    cfgScale: float = 20.0
    viewsPerStep: int = 1
    lrTriplane: float = 5.0e-3
    lrDecoder: float = 1.0e-4
    lambdaTv: float = 0.025
    lambdaL2: float = 0.025
    nSamples: int = 64
    renderResolution: int = 64
    seed: int = 0
    logEvery: int = 100

    def __post_init__(self):
        if not 0.0 < self.tMin < self.tMax <= 1.0:
            raise ValueRangeError("Refinement timestep range must satisfy 0 < tMin < tMax <= 1 (got %r, %r)" % (self.tMin, self.tMax))
        if self.cfgScale < 1.0:
            raise ValueRangeError("Refinement guidance scale must be at least 1 (got %r)" % self.cfgScale)
        if self.steps < 1 or self.viewsPerStep < 1:
            raise ValueRangeError("Invalid refinement step count")


class SelfModelGuidance(object):
    """Noise prediction from the trained pseudo-image diffusion model applied to single rendered views."""

    def __init__(self, diffusion):
        self.__diffusion = diffusion
        self.schedule = diffusion.getSchedule()

    def predictEps(self, zt, t, tokens, scale):
        """Guided noise estimate for zt (1, 3, H, W) at integer timestep t."""
        z5 = zt[:, None]
        vHat = self.__diffusion.guidedV(z5, t, tokens, scale, kind=TrainBatchKind.IMAGE2D)
        return self.schedule.predictEps(z5, vHat, t)[:, 0]

    def tokenize(self, caption):
        return self.__diffusion.tokenize(caption)

    def parameters(self):
        return self.__diffusion.getModel().parameters()


class SdsRefiner(object):
    def __init__(self, guidance, config=None, **kwargs):
        self.__guidance = guidance
        self.__cfg = config if config is not None else RefineConfig()
        self.__dtype = kwargs.get("dtype", torch.float32)
        self.__renderer = VolumeRenderer(nSamples=self.__cfg.nSamples, stratified=False, dtype=self.__dtype)
        self.__losses = FittingLosses(lambdaTv=self.__cfg.lambdaTv, lambdaL2=self.__cfg.lambdaL2)
        self.__cameraU = CameraUtils(**kwargs)

    def timestepRange(self):
        numSteps = self.__guidance.schedule.numSteps
        return int(math.ceil(self.__cfg.tMin * numSteps)), int(math.floor(self.__cfg.tMax * numSteps))

    def drawTimestep(self, generator):
        lo, hi = self.timestepRange()
        return int(torch.randint(lo, hi + 1, (1,), generator=generator))

    def renderImage(self, triPlane, decoder, camera):
        """Differentiable (1, 3, H, W) view scaled from [0, 1] to [-1, 1]."""
        res = self.__cfg.renderResolution
        out = self.__renderer.renderView(TriPlaneField(triPlane, decoder), camera, (res, res))
        return out.color.permute(2, 0, 1)[None] * 2.0 - 1.0

    def sdsStep(self, triPlane, decoder, camera, tokens, generator, noise=None, timestep=None, weight=None):
        """One score distillation gradient for the triplane planes and decoder parameters.

        The surrogate loss <stop-grad(g), x> with g = w(t) (eps_hat - eps) has gradient g dx/dparams.
        """
        xx = self.renderImage(triPlane, decoder, camera)
        schedule = self.__guidance.schedule
        tt = self.drawTimestep(generator) if timestep is None else int(timestep)
        eps = torch.randn(xx.shape, generator=generator, dtype=xx.dtype) if noise is None else noise
        aT, sT = schedule.coefficients(tt, xx)
        zt = aT * xx.detach() + sT * eps
        epsHat = self.__guidance.predictEps(zt, tt, tokens, self.__cfg.cfgScale).to(xx.dtype)
        ww = float(sT.item()) ** 2 if weight is None else float(weight)
        grad = (ww * (epsHat - eps)).detach()
        surrogate = torch.sum(grad * xx)
        decParamL = list(decoder.parameters())
        inputs = [triPlane.planes] + [p for p in decParamL if p.requires_grad]
        gL = torch.autograd.grad(surrogate, inputs, allow_unused=True)
        gL = [torch.zeros_like(inp) if gg is None else gg for inp, gg in zip(inputs, gL)]
        if not all(bool(torch.isfinite(gg).all()) for gg in gL):
            raise DivergenceError("Non-finite score distillation gradient at timestep %d" % tt)
        decGradIt = iter(gL[1:])
        decoderGradL = [next(decGradIt) if p.requires_grad else torch.zeros_like(p) for p in decParamL]
        return SdsResult(planeGrad=gL[0], decoderGradL=decoderGradL, timestep=tt, weight=ww, surrogate=float(surrogate.item()))

    def refine(self, triPlane0, decoder, caption):
        """Adam refinement of a copy of triPlane0 and a private copy of decoder.

        Returns:
            RefineResult: refined triplane, refined decoder copy, per-step surrogate values and timesteps
        """
        startTime = time.time()
        cfg = self.__cfg
        triPlane = TriPlane(triPlane0.planes.detach().clone().to(self.__dtype))
        triPlane.planes.requires_grad_(True)
        decCopy = copy.deepcopy(decoder).to(self.__dtype)
        for param in decCopy.parameters():
            param.requires_grad_(True)
        tokens = self.__guidance.tokenize(caption)
        generator = torch.Generator().manual_seed(cfg.seed)
        rng = np.random.default_rng(cfg.seed)
        optimizer = torch.optim.Adam([{"params": [triPlane.planes], "lr": cfg.lrTriplane}, {"params": list(decCopy.parameters()), "lr": cfg.lrDecoder}])
        surrogateL, timestepL = [], []
        for step in range(cfg.steps):
            optimizer.zero_grad()
            stepSurrogate = 0.0
            for camera in self.__cameraU.sampleCameras(rng, cfg.viewsPerStep):
                try:
                    res = self.sdsStep(triPlane, decCopy, camera, tokens, generator)
                except DivergenceError as e:
                    raise DivergenceError("%s (refinement step %d)" % (str(e), step), step=step)
                triPlane.planes.grad = res.planeGrad if triPlane.planes.grad is None else triPlane.planes.grad + res.planeGrad
                for param, gg in zip(decCopy.parameters(), res.decoderGradL):
                    param.grad = gg if param.grad is None else param.grad + gg
                stepSurrogate += res.surrogate
                timestepL.append(res.timestep)
            l2, tv = self.__losses.lossReg(triPlane)
            reg = cfg.lambdaTv * tv + cfg.lambdaL2 * l2
            if not bool(torch.isfinite(reg)):
                raise DivergenceError("Non-finite regularizer at refinement step %d" % step, step=step)
            reg.backward()
            optimizer.step()
            surrogateL.append(stepSurrogate / cfg.viewsPerStep)
            if cfg.logEvery and step % cfg.logEvery == 0:
                logger.info("Refinement step %d surrogate %.6f", step, surrogateL[-1])
        triPlane.planes.requires_grad_(False)
        decCopy.freeze()
        logger.info("Refined %r for %d steps (%.4f seconds)", caption, cfg.steps, time.time() - startTime)
        return RefineResult(triPlane=triPlane, decoder=decCopy, surrogateL=surrogateL, timestepL=timestepL)
