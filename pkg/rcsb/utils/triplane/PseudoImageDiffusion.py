##
# File:    PseudoImageDiffusion.py
# Author:  jdw
# Date:    16-Oct-2026
#
# Updates:
#  17-Oct-2026 jdw per-chain random streams for batched sampling
##
"""
Training and classifier-free guided ancestral sampling for the pseudo-image denoiser.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import logging
import time
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import torch

from rcsb.utils.triplane.CaptionGrammar import CaptionGrammar
from rcsb.utils.triplane.ConfigUtils import ConfigMixin
from rcsb.utils.triplane.NoiseSchedule import NoiseSchedule
from rcsb.utils.triplane.PseudoImageDenoiser import PseudoImageDenoiser, TrainBatchKind
from rcsb.utils.triplane.TriPlane import PSEUDO_IMAGE_ORDER, PseudoImageStack, TriPlane
from rcsb.utils.triplane.TriPlaneExceptions import DivergenceError, ShapeMismatchError, ValueRangeError
from rcsb.utils.triplane.TriPlaneIoUtils import TriPlaneIoUtils

logger = logging.getLogger(__name__)


@dataclass
class DiffusionConfig(ConfigMixin):
    numSteps: int = 1000
    gamma: float = 5.0
    p2D: float = 0.5
    captionDropout: float = 0.05
    batchSize: int = 4
    imageBatchFactor: int = 6
    lr: float = 1.0e-4
    lrPlaneEmbedding: float = 1.0e-3
    trainSteps: int = 20000
    channels: Tuple[int, int, int] = (64, 128, 256)
    groups: int = 8
    numHeads: int = 4
    contextDim: int = 128
    resolution: int = 64
    sampleSteps: int = 50
    cfgScale: float = 5.0
    seed: int = 0
    logEvery: int = 100

    def __post_init__(self):
        if not 0.0 <= self.p2D <= 1.0 or not 0.0 <= self.captionDropout <= 1.0:
            raise ValueRangeError("Probabilities must lie in [0, 1] (p2D=%r captionDropout=%r)" % (self.p2D, self.captionDropout))
        if self.gamma <= 0.0 or self.batchSize < 1 or self.imageBatchFactor < 1:
            raise ValueRangeError("Invalid diffusion training configuration")
        self.channels = tuple(int(v) for v in self.channels)


class PseudoImageDiffusion(object):
    """Own the denoiser, its schedule and caption tokenizer; train it and sample triplanes from it."""

    def __init__(self, config=None, **kwargs):
        self.__cfg = config if config is not None else DiffusionConfig()
        self.__dtype = kwargs.get("dtype", torch.float32)
        self.__grammar = CaptionGrammar()
        self.__schedule = NoiseSchedule(self.__cfg.numSteps)
        torch.manual_seed(self.__cfg.seed)
        self.__model = PseudoImageDenoiser(
            vocabSize=self.__grammar.getVocabularySize(),
            padId=self.__grammar.getPadId(),
            maxLength=self.__grammar.maxLength,
            channels=self.__cfg.channels,
            groups=self.__cfg.groups,
            numHeads=self.__cfg.numHeads,
            contextDim=self.__cfg.contextDim,
        ).to(self.__dtype)

    def getModel(self):
        return self.__model

    def getSchedule(self):
        return self.__schedule

    def getConfig(self):
        return self.__cfg

    def getGrammar(self):
        return self.__grammar

    def tokenize(self, caption):
        return torch.as_tensor([self.__grammar.tokenize(caption)], dtype=torch.long)

    def nullTokens(self, count=1):
        return torch.as_tensor([self.__grammar.nullTokens()] * count, dtype=torch.long)

    # -- training --

    def __drawBatch(self, data, tokens, count, generator):
        idx = torch.randint(len(data), (count,), generator=generator)
        batchTokens = tokens[idx].clone()
        drop = torch.rand(count, generator=generator) < self.__cfg.captionDropout
        if bool(drop.any()):
            batchTokens[drop] = self.nullTokens(int(drop.sum()))
        return data[idx], batchTokens

    def train(self, triplaneCorpus, imageCorpus=None, steps=None):
        """Mixed triplane / single-image training with Min-SNR weighted v-prediction loss.

        Args:
            triplaneCorpus (tuple): (planes (N, 3, 6, H, W) in [-1, 1], tokens (N, L))
            imageCorpus (tuple, optional): (images (M, 3, H, W) in [-1, 1], tokens (M, L))
            steps (int, optional): step budget (default: config trainSteps)

        Returns:
            (list): per-step training loss
        """
        steps = steps or self.__cfg.trainSteps
        planes, tpTokens = triplaneCorpus
        if len(planes) == 0:
            raise ValueRangeError("Triplane corpus is empty")
        if planes.dim() != 5 or planes.shape[1:3] != (3, 6):
            raise ShapeMismatchError("Triplane corpus must have shape (N, 3, 6, H, W) (got %r)" % (tuple(planes.shape),))
        if float(planes.abs().max()) > 1.0 + 1.0e-6:
            raise ValueRangeError("Triplane corpus values must be scaled to [-1, 1]")
        nn_ = planes.shape[-1]
        stacks = planes.reshape(len(planes), 3, 2, 3, nn_, nn_).reshape(len(planes), 6, 3, nn_, nn_).to(self.__dtype)
        tpTokens = torch.as_tensor(tpTokens, dtype=torch.long)
        if imageCorpus is not None and len(imageCorpus[0]) > 0:
            images = imageCorpus[0].to(self.__dtype)[:, None]
            imTokens = torch.as_tensor(imageCorpus[1], dtype=torch.long)
        elif self.__cfg.p2D > 0.0:
            raise ValueRangeError("Single-image corpus is required when p2D > 0")
        else:
            images, imTokens = None, None
        #
        startTime = time.time()
        generator = torch.Generator().manual_seed(self.__cfg.seed)
        embParamL = [self.__model.planeEmbedding]
        restParamL = [p for n, p in self.__model.named_parameters() if n != "planeEmbedding"]
        optimizer = torch.optim.Adam([{"params": embParamL, "lr": self.__cfg.lrPlaneEmbedding}, {"params": restParamL, "lr": self.__cfg.lr}])
        self.__model.train()
        lossL = []
        for step in range(steps):
            kind = TrainBatchKind.IMAGE2D if float(torch.rand(1, generator=generator)) < self.__cfg.p2D else TrainBatchKind.TRIPLANE
            if kind is TrainBatchKind.IMAGE2D:
                x0, tokens = self.__drawBatch(images, imTokens, self.__cfg.batchSize * self.__cfg.imageBatchFactor, generator)
            else:
                x0, tokens = self.__drawBatch(stacks, tpTokens, self.__cfg.batchSize, generator)
            tt = torch.randint(1, self.__schedule.numSteps + 1, (len(x0),), generator=generator)
            eps = torch.randn(x0.shape, generator=generator, dtype=x0.dtype)
            zt = self.__schedule.addNoise(x0, eps, tt)
            vTarget = self.__schedule.vTarget(x0, eps, tt)
            vHat = self.__model(zt, tt, tokens, kind=kind)
            weight = self.__schedule.lossWeight(tt, self.__cfg.gamma).to(x0.dtype)
            loss = torch.mean(weight * torch.mean((vHat - vTarget) ** 2, dim=(1, 2, 3, 4)))
            if not bool(torch.isfinite(loss)):
                raise DivergenceError("Non-finite diffusion loss at step %d" % step, step=step)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            lossL.append(float(loss.item()))
            if self.__cfg.logEvery and step % self.__cfg.logEvery == 0:
                logger.info("Diffusion step %d (%s) loss %.6f", step, kind.value, lossL[-1])
        self.__model.eval()
        logger.info("Trained denoiser for %d steps (%.4f seconds)", steps, time.time() - startTime)
        return lossL

    # -- guidance and sampling --

    @staticmethod
    def cfgCombine(vUncond, vCond, scale):
        """Classifier-free guidance v_u + s (v_c - v_u); s = 1 returns the conditional prediction itself."""
        if vUncond.shape != vCond.shape:
            raise ShapeMismatchError("Guidance inputs differ in shape %r %r" % (tuple(vUncond.shape), tuple(vCond.shape)))
        if scale == 1.0:
            return vCond
        return vUncond + scale * (vCond - vUncond)

    def guidedV(self, z, t, tokens, scale, kind=TrainBatchKind.TRIPLANE):
        """Guided v prediction for one item; NULL tokens give the unconditional branch."""
        tT = torch.full((z.shape[0],), int(t), dtype=torch.long)
        with torch.no_grad():
            vCond = self.__model(z, tT, tokens, kind=kind)
            if scale == 1.0:
                return vCond
            vUncond = self.__model(z, tT, self.nullTokens(z.shape[0]), kind=kind)
        return self.cfgCombine(vUncond, vCond, scale)

    def __sampleChain(self, tokens, steps, scale, generator):
        nn_ = self.__cfg.resolution
        zz = torch.randn((1, 6, 3, nn_, nn_), generator=generator, dtype=self.__dtype)
        for tt, ss in self.__schedule.subSchedule(steps):
            vHat = self.guidedV(zz, tt, tokens, scale)
            x0 = torch.clamp(self.__schedule.predictX0(zz, vHat, tt), -1.0, 1.0)
            if ss == 0:
                zz = x0
                break
            mean, var = self.__schedule.posterior(tt, ss, zz, x0)
            zz = mean + float(np.sqrt(var)) * torch.randn(zz.shape, generator=generator, dtype=zz.dtype)
        return TriPlane.unpack(PseudoImageStack(images=torch.clamp(zz[0], -1.0, 1.0), orderTag=PSEUDO_IMAGE_ORDER))

    def sample(self, caption, steps=50, cfgScale=5.0, seed=0):
        """Ancestral sampling of one triplane (values in [-1, 1]); None or "" samples unconditionally."""
        return self.sampleBatch([caption], steps=steps, cfgScale=cfgScale, seedL=[seed])[0]

    def sampleBatch(self, captionL, steps=50, cfgScale=5.0, seedL=None):
        """Independent chains, one random stream per chain; chain i defaults to seed i."""
        seedL = list(range(len(captionL))) if seedL is None else list(seedL)
        if len(seedL) != len(captionL):
            raise ShapeMismatchError("One seed per caption is required")
        self.__model.eval()
        startTime = time.time()
        tpL = []
        for caption, seed in zip(captionL, seedL):
            generator = torch.Generator().manual_seed(int(seed))
            tpL.append(self.__sampleChain(self.tokenize(caption), steps, cfgScale, generator))
        logger.info("Sampled %d triplanes with %d steps cfg %.2f (%.4f seconds)", len(tpL), steps, cfgScale, time.time() - startTime)
        return tpL

    # -- checkpoints --

    def saveCheckpoint(self, filePath):
        tensorD = {k: v.detach().cpu().numpy() for k, v in self.__model.state_dict().items()}
        metaD = {"config": self.__cfg.toDict(), "vocabulary": self.__grammar.getVocabulary()}
        return TriPlaneIoUtils().writeCheckpoint(filePath, tensorD, metaD)

    @classmethod
    def fromCheckpoint(cls, filePath, **kwargs):
        tensorD, metaD = TriPlaneIoUtils().readCheckpoint(filePath)
        diffusion = cls(DiffusionConfig.fromDict(metaD.get("config", {})), **kwargs)
        diffusion.getModel().load_state_dict({k: torch.from_numpy(v.copy()) for k, v in tensorD.items()})
        diffusion.getModel().eval()
        return diffusion
