##
# File:    TriPlaneDecoder.py
# Author:  jdw
# Date:    13-Oct-2026
#
# Updates:
#
##
"""
Shared MLP decoder mapping concatenated triplane features to color and density.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import logging
from collections import OrderedDict

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError, ValueRangeError

logger = logging.getLogger(__name__)


class TriPlaneDecoder(nn.Module):
    """Four fully connected layers (ReLU hidden activations); sigmoid RGB and softplus density heads.

    The decoder sees only the interpolated features, never the point position.
    """

    def __init__(self, channels=6, hiddenWidth=32, numLayers=4):
        super(TriPlaneDecoder, self).__init__()
        self.inputWidth = 3 * channels
        widthL = [self.inputWidth] + [hiddenWidth] * (numLayers - 1) + [4]
        self.layers = nn.ModuleList([nn.Linear(widthL[ii], widthL[ii + 1]) for ii in range(numLayers)])

    def forward(self, feat):
        hh = feat
        for layer in self.layers[:-1]:
            hh = F.relu(layer(hh))
        out = self.layers[-1](hh)
        return torch.sigmoid(out[..., :3]), F.softplus(out[..., 3])

    def decode(self, feat):
        """Return (color (..., 3) in [0, 1], density (...) >= 0) for features (..., 3 C)."""
        if feat.shape[-1] != self.inputWidth:
            raise ShapeMismatchError("Decoder expects %d features (got %d)" % (self.inputWidth, feat.shape[-1]))
        if not torch.isfinite(feat).all():
            raise ValueRangeError("Non-finite decoder input")
        return self.forward(feat)

    def freeze(self):
        for param in self.parameters():
            param.requires_grad_(False)
        return self

    def getTensorDict(self, prefix="decoder."):
        return OrderedDict((prefix + k, v.detach().cpu().numpy()) for k, v in self.state_dict().items())

    def setTensorDict(self, tensorD, prefix="decoder."):
        stateD = OrderedDict((k[len(prefix):], torch.from_numpy(np.asarray(v))) for k, v in tensorD.items() if k.startswith(prefix))
        self.load_state_dict(stateD)
        return self
