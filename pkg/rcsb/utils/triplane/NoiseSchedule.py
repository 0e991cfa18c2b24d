##
# File:    NoiseSchedule.py
# Author:  jdw
# Date:    15-Oct-2026
#
# Updates:
#
##
"""
Discrete variance-preserving cosine noise schedule with v-parameterization helpers and
Min-SNR loss weights.

Index 0 is the clean signal (alpha = 1, sigma = 0); indices 1..T are the diffusion steps with
alpha_t = cos(theta_t), sigma_t = sin(theta_t), theta_t = (t / T + s) / (1 + s) * pi / 2.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import logging
import math

import torch

from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError, ValueRangeError

logger = logging.getLogger(__name__)


class NoiseSchedule(object):
    def __init__(self, numSteps=1000, offset=0.008):
        if int(numSteps) < 2:
            raise ValueRangeError("Schedule needs at least 2 steps (got %r)" % numSteps)
        self.numSteps = int(numSteps)
        tt = torch.arange(self.numSteps + 1, dtype=torch.float64)
        theta = (tt / self.numSteps + offset) / (1.0 + offset) * (math.pi / 2.0)
        alpha = torch.cos(theta)
        sigma = torch.sin(theta)
        alpha[0] = 1.0
        sigma[0] = 0.0
        self.alpha = alpha
        self.sigma = sigma

    def snr(self, t):
        self.__checkRange(t)
        idx = torch.as_tensor(t, dtype=torch.long)
        return self.alpha[idx] ** 2 / self.sigma[idx] ** 2

    def __checkRange(self, t, allowZero=False):
        tT = torch.as_tensor(t)
        lo = 0 if allowZero else 1
        if bool((tT < lo).any()) or bool((tT > self.numSteps).any()):
            raise ValueRangeError("Timestep outside [%d, %d]: %r" % (lo, self.numSteps, t))

    def coefficients(self, t, like, allowZero=False):
        """(alpha_t, sigma_t) shaped to broadcast against like; t is a scalar or a (B,) tensor."""
        self.__checkRange(t, allowZero=allowZero)
        idx = torch.as_tensor(t, dtype=torch.long)
        aT = self.alpha[idx].to(like.dtype)
        sT = self.sigma[idx].to(like.dtype)
        if idx.dim() == 0:
            return aT, sT
        if idx.dim() != 1 or idx.shape[0] != like.shape[0]:
            raise ShapeMismatchError("Timestep batch %r does not match data batch %r" % (tuple(idx.shape), tuple(like.shape)))
        shape = (-1,) + (1,) * (like.dim() - 1)
        return aT.reshape(shape), sT.reshape(shape)

    def addNoise(self, x0, eps, t):
        if x0.shape != eps.shape:
            raise ShapeMismatchError("Signal and noise shapes differ %r %r" % (tuple(x0.shape), tuple(eps.shape)))
        aT, sT = self.coefficients(t, x0)
        return self.noiseFromCoefficients(x0, eps, aT, sT)

    def vTarget(self, x0, eps, t):
        if x0.shape != eps.shape:
            raise ShapeMismatchError("Signal and noise shapes differ %r %r" % (tuple(x0.shape), tuple(eps.shape)))
        aT, sT = self.coefficients(t, x0)
        return self.vFromCoefficients(x0, eps, aT, sT)

    @staticmethod
    def noiseFromCoefficients(x0, eps, alpha, sigma):
        return alpha * x0 + sigma * eps

    @staticmethod
    def vFromCoefficients(x0, eps, alpha, sigma):
        return alpha * eps - sigma * x0

    def predictX0(self, z, v, t):
        aT, sT = self.coefficients(t, z)
        return aT * z - sT * v

    def predictEps(self, z, v, t):
        aT, sT = self.coefficients(t, z)
        return sT * z + aT * v

    def lossWeight(self, t, gamma=5.0):
        """Min-SNR weight for the v-prediction loss: min(snr_t, gamma) / (snr_t + 1)."""
        return self.minSnrWeight(self.snr(t), gamma)

    @staticmethod
    def minSnrWeight(snr, gamma=5.0):
        if gamma <= 0.0:
            raise ValueRangeError("Min-SNR gamma must be positive (got %r)" % gamma)
        snr = torch.as_tensor(snr, dtype=torch.float64)
        return torch.clamp(snr, max=gamma) / (snr + 1.0)

    @staticmethod
    def snrFromCoefficients(alpha, sigma):
        return (alpha / sigma) ** 2

    def subSchedule(self, steps):
        """Uniform-stride (t, s) pairs from T down to 0 for an ancestral sampler with the given step count."""
        if not 1 <= steps <= self.numSteps:
            raise ValueRangeError("Sampling steps must lie in [1, %d] (got %r)" % (self.numSteps, steps))
        tL = [self.numSteps * (steps - k) // steps for k in range(steps + 1)]
        return list(zip(tL[:-1], tL[1:]))

    def posterior(self, t, s, z, x0):
        """Mean and variance of q(z_s | z_t, x0) for s < t (small posterior variance)."""
        aT, sT = self.alpha[t], self.sigma[t]
        aS, sS = self.alpha[s], self.sigma[s]
        aTs = aT / aS
        s2Ts = sT ** 2 - aTs ** 2 * sS ** 2
        mean = (aTs * sS ** 2 / sT ** 2).to(z.dtype) * z + (aS * s2Ts / sT ** 2).to(z.dtype) * x0
        var = s2Ts * sS ** 2 / sT ** 2
        return mean, float(var)
