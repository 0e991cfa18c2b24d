##
# File:    PseudoImageDenoiser.py
# Author:  jdw
# Date:    16-Oct-2026
#
# Updates:
#  17-Oct-2026 jdw restricted attention and zeroed plane embeddings for single-image batches
##
"""
Caption-conditioned U-Net predicting v for stacks of pseudo-images.

A triplane item is a stack of 6 pseudo-images processed as 6 images sharing all weights.
Image identity enters only through a learnable per-image embedding added to the timestep
embedding, and the self-attention blocks at the two lowest resolutions attend jointly over
the tokens of all images of an item.  Single-image items use per-image attention and no
plane embedding.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import enum
import logging
import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError

logger = logging.getLogger(__name__)


class TrainBatchKind(enum.Enum):
    TRIPLANE = "triplane"
    IMAGE2D = "image2d"

    @property
    def arity(self):
        return 6 if self is TrainBatchKind.TRIPLANE else 1


def timestepEmbedding(t, dim, maxPeriod=10000.0):
    half = dim // 2
    freqs = torch.exp(-math.log(maxPeriod) * torch.arange(half, dtype=torch.float32) / half)
    args = t.to(torch.float32)[:, None] * freqs[None, :]
    return torch.cat([torch.sin(args), torch.cos(args)], dim=-1)


class ResBlock(nn.Module):
    def __init__(self, inChannels, outChannels, embDim, groups=8):
        super(ResBlock, self).__init__()
        self.norm1 = nn.GroupNorm(groups, inChannels)
        self.conv1 = nn.Conv2d(inChannels, outChannels, 3, padding=1)
        self.embProj = nn.Linear(embDim, outChannels)
        self.norm2 = nn.GroupNorm(groups, outChannels)
        self.conv2 = nn.Conv2d(outChannels, outChannels, 3, padding=1)
        self.skip = nn.Conv2d(inChannels, outChannels, 1) if inChannels != outChannels else nn.Identity()

    def forward(self, x, emb):
        hh = self.conv1(F.silu(self.norm1(x)))
        hh = hh + self.embProj(F.silu(emb))[:, :, None, None]
        hh = self.conv2(F.silu(self.norm2(hh)))
        return hh + self.skip(x)


class AttentionBlock(nn.Module):
    """Self-attention across the images of an item (or per image), then caption cross-attention."""

    def __init__(self, channels, contextDim, numHeads=4, groups=8):
        super(AttentionBlock, self).__init__()
        self.normSelf = nn.GroupNorm(groups, channels)
        self.selfAttn = nn.MultiheadAttention(channels, numHeads, batch_first=True)
        self.normCross = nn.GroupNorm(groups, channels)
        self.crossAttn = nn.MultiheadAttention(channels, numHeads, kdim=contextDim, vdim=contextDim, batch_first=True)

    def forward(self, x, numImages, context, contextPadMask):
        # x: (B * K, C, h, w); joint attention spans the K images of each item
        bk, cc, hh, ww = x.shape
        tokens = self.normSelf(x).reshape(bk, cc, hh * ww).transpose(1, 2)
        if numImages > 1:
            tokens = tokens.reshape(bk // numImages, numImages * hh * ww, cc)
        attn, _ = self.selfAttn(tokens, tokens, tokens, need_weights=False)
        attn = attn.reshape(bk, hh * ww, cc).transpose(1, 2).reshape(bk, cc, hh, ww)
        x = x + attn
        query = self.normCross(x).reshape(bk, cc, hh * ww).transpose(1, 2)
        cross, _ = self.crossAttn(query, context, context, key_padding_mask=contextPadMask, need_weights=False)
        return x + cross.transpose(1, 2).reshape(bk, cc, hh, ww)


class PseudoImageDenoiser(nn.Module):
    """Three-level U-Net (attention at the two lowest levels and the middle) with timestep,
    plane and caption conditioning.
    """

    def __init__(self, vocabSize, padId=0, maxLength=8, channels=(64, 128, 256), groups=8, numHeads=4, contextDim=128, numPlanes=6, inChannels=3):
        super(PseudoImageDenoiser, self).__init__()
        c0, c1, c2 = channels
        self.padId = padId
        self.numPlanes = numPlanes
        self.baseDim = c0
        embDim = 4 * c0
        self.timeMlp = nn.Sequential(nn.Linear(c0, embDim), nn.SiLU(), nn.Linear(embDim, embDim))
        self.planeEmbedding = nn.Parameter(0.02 * torch.randn(numPlanes, embDim))
        self.tokenEmbedding = nn.Embedding(vocabSize, contextDim)
        self.tokenPosition = nn.Parameter(0.02 * torch.randn(maxLength, contextDim))
        #
        self.convIn = nn.Conv2d(inChannels, c0, 3, padding=1)
        self.down0 = ResBlock(c0, c0, embDim, groups)
        self.pool0 = nn.Conv2d(c0, c0, 3, stride=2, padding=1)
        self.down1 = ResBlock(c0, c1, embDim, groups)
        self.attnDown1 = AttentionBlock(c1, contextDim, numHeads, groups)
        self.pool1 = nn.Conv2d(c1, c1, 3, stride=2, padding=1)
        self.down2 = ResBlock(c1, c2, embDim, groups)
        self.attnDown2 = AttentionBlock(c2, contextDim, numHeads, groups)
        self.mid1 = ResBlock(c2, c2, embDim, groups)
        self.attnMid = AttentionBlock(c2, contextDim, numHeads, groups)
        self.mid2 = ResBlock(c2, c2, embDim, groups)
        self.up2 = ResBlock(c2 + c2, c2, embDim, groups)
        self.attnUp2 = AttentionBlock(c2, contextDim, numHeads, groups)
        self.unpool2 = nn.Conv2d(c2, c2, 3, padding=1)
        self.up1 = ResBlock(c2 + c1, c1, embDim, groups)
        self.attnUp1 = AttentionBlock(c1, contextDim, numHeads, groups)
        self.unpool1 = nn.Conv2d(c1, c1, 3, padding=1)
        self.up0 = ResBlock(c1 + c0, c0, embDim, groups)
        self.normOut = nn.GroupNorm(groups, c0)
        self.convOut = nn.Conv2d(c0, inChannels, 3, padding=1)

    def encodeCaption(self, tokens):
        context = self.tokenEmbedding(tokens) + self.tokenPosition[None, : tokens.shape[1]]
        return context, tokens == self.padId

    def forward(self, z, t, tokens, kind=TrainBatchKind.TRIPLANE, restrictAttention=None, zeroPlaneEmbedding=None, planeIndex=None):
        """Predict v for z (B, K, 3, H, W) at timesteps t (B,) under caption tokens (B, L).

        Args:
            kind (TrainBatchKind): TRIPLANE (K = 6) or IMAGE2D (K = 1)
            restrictAttention (bool, optional): per-image self-attention (default: True for IMAGE2D)
            zeroPlaneEmbedding (bool, optional): omit plane embeddings (default: True for IMAGE2D)
            planeIndex (tensor, optional): (K,) plane embedding assigned to each image (default: 0..K-1)
        """
        if z.dim() != 5 or z.shape[1] != kind.arity:
            raise ShapeMismatchError("%s items need %d images (got shape %r)" % (kind.value, kind.arity, tuple(z.shape)))
        bb, kk, cc, hh, ww = z.shape
        if hh % 4 or ww % 4:
            raise ShapeMismatchError("Image size must be divisible by 4 (got %d x %d)" % (hh, ww))
        if t.shape != (bb,) or tokens.shape[0] != bb:
            raise ShapeMismatchError("Timestep and caption batches must match the item batch %d" % bb)
        restrict = kind is TrainBatchKind.IMAGE2D if restrictAttention is None else restrictAttention
        zeroPlane = kind is TrainBatchKind.IMAGE2D if zeroPlaneEmbedding is None else zeroPlaneEmbedding
        numImages = 1 if restrict else kk
        #
        emb = self.timeMlp(timestepEmbedding(t, self.baseDim).to(z.dtype))
        emb = emb[:, None, :].expand(bb, kk, emb.shape[-1])
        if not zeroPlane:
            pIdx = torch.arange(kk) if planeIndex is None else torch.as_tensor(planeIndex, dtype=torch.long)
            emb = emb + self.planeEmbedding[pIdx][None, :, :]
        emb = emb.reshape(bb * kk, -1)
        context, padMask = self.encodeCaption(tokens)
        context = context.repeat_interleave(kk, dim=0)
        padMask = padMask.repeat_interleave(kk, dim=0)
        #
        x = z.reshape(bb * kk, cc, hh, ww)
        h0 = self.down0(self.convIn(x), emb)
        h1 = self.attnDown1(self.down1(self.pool0(h0), emb), numImages, context, padMask)
        h2 = self.attnDown2(self.down2(self.pool1(h1), emb), numImages, context, padMask)
        mm = self.mid2(self.attnMid(self.mid1(h2, emb), numImages, context, padMask), emb)
        uu = self.attnUp2(self.up2(torch.cat([mm, h2], dim=1), emb), numImages, context, padMask)
        uu = self.unpool2(F.interpolate(uu, scale_factor=2, mode="nearest"))
        uu = self.attnUp1(self.up1(torch.cat([uu, h1], dim=1), emb), numImages, context, padMask)
        uu = self.unpool1(F.interpolate(uu, scale_factor=2, mode="nearest"))
        uu = self.up0(torch.cat([uu, h0], dim=1), emb)
        out = self.convOut(F.silu(self.normOut(uu)))
        return out.reshape(bb, kk, cc, hh, ww)
