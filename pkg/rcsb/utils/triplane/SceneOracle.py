##
# File:    SceneOracle.py
# Author:  jdw
# Date:    12-Oct-2026
#
# Updates:
#  13-Oct-2026 jdw exact torus intersection via batched companion-matrix roots
#  15-Oct-2026 jdw analytic silhouettes for visual hull masks
##
"""
Procedural scenes of closed-form primitives and exact supervision rendering (views, depths,
masks and axis silhouettes).
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import logging
from collections import namedtuple

import numpy as np
import torch
import torch.nn.functional as F

from rcsb.utils.triplane.CameraUtils import BOX_HI, BOX_LO, CameraUtils
from rcsb.utils.triplane.CaptionGrammar import CaptionGrammar
from rcsb.utils.triplane.TriPlaneExceptions import ShapeMismatchError, ValueRangeError

logger = logging.getLogger(__name__)

PrimitiveSpec = namedtuple("PrimitiveSpec", "kind center size color")
SceneSpec = namedtuple("SceneSpec", "caption primitives seed", defaults=(0,))
ViewRecord = namedtuple("ViewRecord", "camera rgb mask depth")
HullMasks = namedtuple("HullMasks", "xy xz yz")

SIGMA_SOLID = 40.0
# (first, second) scene axes of each plane; first axis -> columns, second axis -> rows
PLANE_AXES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}
PLANE_NAMES = ("xy", "xz", "yz")


class SceneOracle(object):
    """Analytic occupancy, color, depth and silhouette queries for procedural scenes."""

    # kind -> (size factors for scale e, half height factor, horizontal extent factor)
    __layoutD = {
        "sphere": ((1.0,), 1.0, 1.0),
        "box": ((0.72, 0.72, 0.72), 0.72, 0.72),
        "cylinder": ((0.8, 0.9), 0.9, 0.8),
        "torus": ((0.7, 0.3), 0.3, 1.0),
    }

    def __init__(self, **kwargs):
        self.__sigmaSolid = kwargs.get("sigmaSolid", SIGMA_SOLID)
        self.__singleScaleRange = kwargs.get("singleScaleRange", (0.25, 0.42))
        self.__pairScaleRange = kwargs.get("pairScaleRange", (0.16, 0.23))
        self.__pairFraction = kwargs.get("pairFraction", 0.3)
        self.__grammar = CaptionGrammar()

    def getSigmaSolid(self):
        return self.__sigmaSolid

    # -- scene construction --

    def __makePrimitive(self, kind, center, scale, colorName):
        factorT = self.__layoutD[kind][0]
        return PrimitiveSpec(kind=kind, center=tuple(float(v) for v in center), size=tuple(float(f * scale) for f in factorT), color=self.__grammar.getColor(colorName))

    def __layout(self, objL, scaleL):
        """Place one primitive at the origin or stack two primitives (bottom first) along +y."""
        if len(objL) == 1:
            (colorName, kind), scale = objL[0], scaleL[0]
            return [self.__makePrimitive(kind, (0.0, 0.0, 0.0), scale, colorName)]
        (cB, kB), (cT, kT) = objL
        hB = self.__layoutD[kB][1] * scaleL[0]
        hT = self.__layoutD[kT][1] * scaleL[1]
        yB = BOX_LO + 0.02 + hB
        yT = yB + hB + hT
        return [self.__makePrimitive(kB, (0.0, yB, 0.0), scaleL[0], cB), self.__makePrimitive(kT, (0.0, yT, 0.0), scaleL[1], cT)]

    def makeScene(self, primitives, seed=0):
        primitives = list(primitives)
        scene = SceneSpec(caption=tuple(self.__grammar.describe(primitives)), primitives=primitives, seed=int(seed))
        self.validateScene(scene)
        return scene

    def sampleScene(self, rng, seed=0):
        """Random one- or two-primitive scene drawn from the caption grammar."""
        nObj = 2 if rng.random() < self.__pairFraction else 1
        colorL = self.__grammar.getColorNames()
        kindL = self.__grammar.getShapeKinds()
        objL = [(colorL[rng.integers(len(colorL))], kindL[rng.integers(len(kindL))]) for _ in range(nObj)]
        lo, hi = self.__singleScaleRange if nObj == 1 else self.__pairScaleRange
        scaleL = [float(rng.uniform(lo, hi)) for _ in range(nObj)]
        return self.makeScene(self.__layout(objL, scaleL), seed=seed)

    def canonicalScene(self, caption):
        """Mid-range sized scene for a grammar caption."""
        objL = self.__grammar.parse(caption)
        lo, hi = self.__singleScaleRange if len(objL) == 1 else self.__pairScaleRange
        return self.makeScene(self.__layout(objL, [0.5 * (lo + hi)] * len(objL)))

    @staticmethod
    def primitiveExtent(prim):
        if prim.kind == "sphere":
            return np.full(3, prim.size[0])
        if prim.kind == "box":
            return np.asarray(prim.size, dtype=np.float64)
        if prim.kind == "cylinder":
            return np.asarray([prim.size[0], prim.size[1], prim.size[0]])
        if prim.kind == "torus":
            rr = prim.size[0] + prim.size[1]
            return np.asarray([rr, prim.size[1], rr])
        raise ValueRangeError("Unknown primitive kind %r" % (prim.kind,))

    def validateScene(self, scene):
        if not 1 <= len(scene.primitives) <= 3:
            raise ValueRangeError("Scene must have 1 to 3 primitives (got %d)" % len(scene.primitives))
        for prim in scene.primitives:
            if prim.kind not in self.__layoutD:
                raise ValueRangeError("Unknown primitive kind %r" % (prim.kind,))
            if min(prim.size) <= 0.0:
                raise ValueRangeError("Primitive size must be positive %r" % (prim.size,))
            self.__grammar.getColorName(prim.color)
            center = np.asarray(prim.center, dtype=np.float64)
            ext = self.primitiveExtent(prim)
            if np.any(center - ext < BOX_LO - 1.0e-12) or np.any(center + ext > BOX_HI + 1.0e-12):
                raise ValueRangeError("Primitive %r extends outside the canonical box" % (prim,))
        return True

    @staticmethod
    def sceneToDict(scene):
        return {
            "caption": " ".join(scene.caption),
            "seed": int(scene.seed),
            "primitives": [{"kind": p.kind, "center": list(p.center), "size": list(p.size), "color": list(p.color)} for p in scene.primitives],
        }

    @staticmethod
    def sceneFromDict(sD):
        primL = [PrimitiveSpec(kind=p["kind"], center=tuple(p["center"]), size=tuple(p["size"]), color=tuple(p["color"])) for p in sD["primitives"]]
        return SceneSpec(caption=tuple(sD["caption"].split()), primitives=primL, seed=int(sD.get("seed", 0)))

    # -- point queries --

    @staticmethod
    def insidePrimitive(prim, points):
        dp = np.asarray(points, dtype=np.float64) - np.asarray(prim.center, dtype=np.float64)
        if prim.kind == "sphere":
            return np.sum(dp * dp, axis=-1) < prim.size[0] ** 2
        if prim.kind == "box":
            return np.all(np.abs(dp) < np.asarray(prim.size), axis=-1)
        if prim.kind == "cylinder":
            return (dp[..., 0] ** 2 + dp[..., 2] ** 2 < prim.size[0] ** 2) & (np.abs(dp[..., 1]) < prim.size[1])
        if prim.kind == "torus":
            radial = np.sqrt(dp[..., 0] ** 2 + dp[..., 2] ** 2) - prim.size[0]
            return radial ** 2 + dp[..., 1] ** 2 < prim.size[1] ** 2
        raise ValueRangeError("Unknown primitive kind %r" % (prim.kind,))

    def queryScene(self, scene, points):
        """Density and color at points (..., 3); the last containing primitive sets the color."""
        points = np.asarray(points, dtype=np.float64)
        if points.shape[-1] != 3:
            raise ShapeMismatchError("Query points must have a trailing dimension of 3")
        density = np.zeros(points.shape[:-1])
        color = np.zeros(points.shape[:-1] + (3,))
        for prim in scene.primitives:
            inside = self.insidePrimitive(prim, points)
            density = np.where(inside, self.__sigmaSolid, density)
            color = np.where(inside[..., None], np.asarray(prim.color), color)
        return density, color

    # -- exact ray intersection --

    @staticmethod
    def __hitSphere(prim, origins, directions, eps):
        oc = origins - np.asarray(prim.center)
        bb = np.sum(oc * directions, axis=-1)
        cc = np.sum(oc * oc, axis=-1) - prim.size[0] ** 2
        disc = bb * bb - cc
        root = np.sqrt(np.maximum(disc, 0.0))
        t0 = -bb - root
        t1 = -bb + root
        tHit = np.where(t0 > eps, t0, np.where(t1 > eps, t1, np.inf))
        return np.where(disc > 0.0, tHit, np.inf)

    @staticmethod
    def __hitBox(prim, origins, directions, eps):
        half = np.asarray(prim.size)
        tNear, tFar, valid = CameraUtils.boxInterval((origins - np.asarray(prim.center)) / half, directions / half, lo=-1.0, hi=1.0)
        tHit = np.where(tNear > eps, tNear, tFar)
        return np.where(valid & (tHit > eps), tHit, np.inf)

    @staticmethod
    def __hitCylinder(prim, origins, directions, eps):
        rad, hh = prim.size
        oc = origins - np.asarray(prim.center)
        ox, oy, oz = oc[:, 0], oc[:, 1], oc[:, 2]
        dx, dy, dz = directions[:, 0], directions[:, 1], directions[:, 2]
        candL = []
        aa = dx * dx + dz * dz
        bb = ox * dx + oz * dz
        cc = ox * ox + oz * oz - rad * rad
        disc = bb * bb - aa * cc
        with np.errstate(divide="ignore", invalid="ignore"):
            for sgn in (-1.0, 1.0):
                tS = (-bb + sgn * np.sqrt(np.maximum(disc, 0.0))) / aa
                ok = (disc > 0.0) & (aa > 1.0e-15) & (np.abs(oy + tS * dy) < hh)
                candL.append(np.where(ok, tS, np.inf))
            for cap in (-hh, hh):
                tC = (cap - oy) / dy
                px = ox + tC * dx
                pz = oz + tC * dz
                ok = (np.abs(dy) > 1.0e-15) & (px * px + pz * pz < rad * rad)
                candL.append(np.where(ok, tC, np.inf))
        cand = np.stack(candL, axis=-1)
        cand = np.where(cand > eps, cand, np.inf)
        return np.min(cand, axis=-1)

    @staticmethod
    def __hitTorus(prim, origins, directions, eps):
        bigR, minR = prim.size
        oc = origins - np.asarray(prim.center)
        tHit = np.full(len(origins), np.inf)
        # bounding sphere pre-test
        bb = np.sum(oc * directions, axis=-1)
        disc = bb * bb - (np.sum(oc * oc, axis=-1) - (bigR + minR) ** 2)
        idx = np.nonzero(disc > 0.0)[0]
        if len(idx) == 0:
            return tHit
        o = oc[idx]
        d = directions[idx]
        kk = np.sum(o * d, axis=-1)
        mm = np.sum(o * o, axis=-1) + bigR * bigR - minR * minR
        fr = 4.0 * bigR * bigR
        a3 = 4.0 * kk
        a2 = 4.0 * kk * kk + 2.0 * mm - fr * (d[:, 0] ** 2 + d[:, 2] ** 2)
        a1 = 4.0 * kk * mm - 2.0 * fr * (o[:, 0] * d[:, 0] + o[:, 2] * d[:, 2])
        a0 = mm * mm - fr * (o[:, 0] ** 2 + o[:, 2] ** 2)
        comp = np.zeros((len(idx), 4, 4))
        comp[:, 0, 0] = -a3
        comp[:, 0, 1] = -a2
        comp[:, 0, 2] = -a1
        comp[:, 0, 3] = -a0
        comp[:, 1, 0] = comp[:, 2, 1] = comp[:, 3, 2] = 1.0
        roots = np.linalg.eigvals(comp)
        isReal = np.abs(roots.imag) < 1.0e-6 * (1.0 + np.abs(roots.real))
        tR = roots.real.copy()
        for _ in range(4):
            ff = (((tR + a3[:, None]) * tR + a2[:, None]) * tR + a1[:, None]) * tR + a0[:, None]
            fp = ((4.0 * tR + 3.0 * a3[:, None]) * tR + 2.0 * a2[:, None]) * tR + a1[:, None]
            step = np.where(np.abs(fp) > 1.0e-14, ff / np.where(np.abs(fp) > 1.0e-14, fp, 1.0), 0.0)
            tR = tR - step
        tR = np.where(isReal & (tR > eps), tR, np.inf)
        tHit[idx] = np.min(tR, axis=-1)
        return tHit

    def intersectRays(self, scene, origins, directions, eps=1.0e-9):
        """First-hit distance and color for unit-direction rays; misses return inf and black."""
        origins = np.asarray(origins, dtype=np.float64)
        directions = np.asarray(directions, dtype=np.float64)
        hitD = {"sphere": self.__hitSphere, "box": self.__hitBox, "cylinder": self.__hitCylinder, "torus": self.__hitTorus}
        tBest = np.full(len(origins), np.inf)
        color = np.zeros((len(origins), 3))
        for prim in scene.primitives:
            tP = hitD[prim.kind](prim, origins, directions, eps)
            # ties resolve to the later primitive
            better = np.isfinite(tP) & (tP <= tBest)
            tBest = np.where(better, tP, tBest)
            color = np.where(better[:, None], np.asarray(prim.color), color)
        return tBest, color

    def renderOracleView(self, scene, camera, resolution):
        """Exact first-hit rendering: rgb surface color, hit mask and distance depth (inf off-mask)."""
        hh, ww = resolution
        origins, directions = CameraUtils.generateRays(camera, resolution)
        tHit, color = self.intersectRays(scene, origins, directions)
        mask = np.isfinite(tHit)
        return ViewRecord(
            camera=camera,
            rgb=color.reshape(hh, ww, 3),
            mask=mask.reshape(hh, ww).astype(np.uint8),
            depth=tHit.reshape(hh, ww),
        )

    # -- silhouettes --

    @staticmethod
    def __silhouetteShapes(prim, plane):
        """Union of 2D discs, rectangles and annuli equal to the projection along the dropped axis."""
        aU, aV = PLANE_AXES[plane]
        cU, cV = prim.center[aU], prim.center[aV]
        if prim.kind == "sphere":
            return [("disc", cU, cV, prim.size[0])]
        if prim.kind == "box":
            return [("rect", cU, cV, prim.size[aU], prim.size[aV])]
        ext = SceneOracle.primitiveExtent(prim)
        if prim.kind == "cylinder":
            if plane == "xz":
                return [("disc", cU, cV, prim.size[0])]
            return [("rect", cU, cV, ext[aU], ext[aV])]
        bigR, minR = prim.size
        if plane == "xz":
            return [("annulus", cU, cV, bigR - minR, bigR + minR)]
        if plane == "xy":
            return [("rect", cU, cV, bigR, minR), ("disc", cU - bigR, cV, minR), ("disc", cU + bigR, cV, minR)]
        return [("rect", cU, cV, minR, bigR), ("disc", cU, cV - bigR, minR), ("disc", cU, cV + bigR, minR)]

    @staticmethod
    def __rasterize(shape, uu, vv, hs):
        """Texels whose square footprint (half size hs) meets the open 2D shape."""
        kind = shape[0]
        if kind == "rect":
            _, cU, cV, hU, hV = shape
            return (np.abs(uu - cU) < hU + hs) & (np.abs(vv - cV) < hV + hs)
        _, cU, cV = shape[:3]
        qU = np.clip(cU, uu - hs, uu + hs)
        qV = np.clip(cV, vv - hs, vv + hs)
        dMin2 = (qU - cU) ** 2 + (qV - cV) ** 2
        if kind == "disc":
            return dMin2 < shape[3] ** 2
        fU = np.maximum(np.abs(uu - hs - cU), np.abs(uu + hs - cU))
        fV = np.maximum(np.abs(vv - hs - cV), np.abs(vv + hs - cV))
        return (dMin2 < shape[4] ** 2) & (fU ** 2 + fV ** 2 > shape[3] ** 2)

    def makeHullMasks(self, scene, resolution, dHull=1):
        """Orthographic silhouettes on the three triplane planes dilated by dHull texels.

        Texel j of an axis is centered at -0.5 + j / (N - 1); rows follow the second plane axis
        and columns the first.
        """
        hh, ww = resolution
        if hh < 2 or ww < 2 or dHull < 0:
            raise ValueRangeError("Invalid hull mask resolution %r or dilation %r" % (resolution, dHull))
        uu, vv = np.meshgrid(BOX_LO + np.arange(ww) / (ww - 1.0), BOX_LO + np.arange(hh) / (hh - 1.0), indexing="xy")
        hs = 0.5 / (ww - 1.0)
        maskD = {}
        for plane in PLANE_NAMES:
            mask = np.zeros((hh, ww), dtype=bool)
            for prim in scene.primitives:
                for shape in self.__silhouetteShapes(prim, plane):
                    mask |= self.__rasterize(shape, uu, vv, hs)
            if dHull > 0:
                mT = torch.from_numpy(mask.astype(np.float32))[None, None]
                mask = F.max_pool2d(mT, kernel_size=2 * dHull + 1, stride=1, padding=dHull)[0, 0].numpy() > 0.5
            maskD[plane] = mask.astype(np.uint8)
        return HullMasks(**maskD)


class OracleField(object):
    """Radiance field callable over the analytic scene: points (M, 3) tensor -> (density (M,), color (M, 3))."""

    def __init__(self, scene, oracle=None):
        self.scene = scene
        self.oracle = oracle or SceneOracle()

    def __call__(self, points):
        density, color = self.oracle.queryScene(self.scene, points.detach().cpu().double().numpy())
        return torch.as_tensor(density, dtype=points.dtype), torch.as_tensor(color, dtype=points.dtype)
