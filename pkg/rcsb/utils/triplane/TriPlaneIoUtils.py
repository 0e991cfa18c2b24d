##
# File:    TriPlaneIoUtils.py
# Author:  jdw
# Date:    13-Oct-2026
#
# Updates:
#  16-Oct-2026 jdw add named-tensor checkpoint container
##
"""
Binary and image codecs for triplanes, model checkpoints, depth maps, views and masks.

All binary containers are little-endian with an ASCII magic and a u16 format version.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import hashlib
import logging
import os
from collections import OrderedDict

import numpy as np
from PIL import Image

from rcsb.utils.io.MarshalUtil import MarshalUtil
from rcsb.utils.triplane.TriPlaneExceptions import FormatError, ShapeMismatchError

logger = logging.getLogger(__name__)

TRIPLANE_MAGIC = b"TPLN"
CHECKPOINT_MAGIC = b"TPCK"
DEPTH_MAGIC = b"DPTH"
FORMAT_VERSION = 1
PLANE_ORDER_TAG = "xy,xz,yz"


class TriPlaneIoUtils(object):
    """Read and write the workbench binary formats."""

    def __init__(self, **kwargs):
        self.__dirPath = kwargs.get("dirPath", ".")
        self.__mU = MarshalUtil(workPath=self.__dirPath)

    @staticmethod
    def sha256(filePath):
        hObj = hashlib.sha256()
        with open(filePath, "rb") as ifh:
            for chunk in iter(lambda: ifh.read(1 << 20), b""):
                hObj.update(chunk)
        return hObj.hexdigest()

    @staticmethod
    def __readExact(ifh, nBytes, what):
        buf = ifh.read(nBytes)
        if len(buf) != nBytes:
            raise FormatError("Truncated %s (expected %d bytes, read %d)" % (what, nBytes, len(buf)))
        return buf

    def __readHeader(self, ifh, magic):
        tag = self.__readExact(ifh, 4, "magic")
        if tag != magic:
            raise FormatError("Bad magic %r (expected %r)" % (tag, magic))
        version = int(np.frombuffer(self.__readExact(ifh, 2, "version"), dtype="<u2")[0])
        if version != FORMAT_VERSION:
            raise FormatError("Unsupported format version %d" % version)
        return version

    # -- triplane files --

    def writeTriPlane(self, filePath, planes):
        """Write a (3, C, H, W) array as a TriplaneFile.

        Layout: magic, u16 version, u32 H, W, C, u16 tag length, ascii order tag, float32 payload
        in (plane, channel, row, col) order.
        """
        planes = np.asarray(planes)
        if planes.ndim != 4 or planes.shape[0] != 3:
            raise ShapeMismatchError("Triplane payload must have shape (3, C, H, W) (got %r)" % (planes.shape,))
        _, cc, hh, ww = planes.shape
        tag = PLANE_ORDER_TAG.encode("ascii")
        with open(filePath, "wb") as ofh:
            ofh.write(TRIPLANE_MAGIC)
            ofh.write(np.asarray([FORMAT_VERSION], dtype="<u2").tobytes())
            ofh.write(np.asarray([hh, ww, cc], dtype="<u4").tobytes())
            ofh.write(np.asarray([len(tag)], dtype="<u2").tobytes())
            ofh.write(tag)
            ofh.write(np.ascontiguousarray(planes, dtype="<f4").tobytes())
        return True

    def readTriPlane(self, filePath):
        with open(filePath, "rb") as ifh:
            self.__readHeader(ifh, TRIPLANE_MAGIC)
            hh, ww, cc = (int(v) for v in np.frombuffer(self.__readExact(ifh, 12, "dimensions"), dtype="<u4"))
            tagLen = int(np.frombuffer(self.__readExact(ifh, 2, "tag length"), dtype="<u2")[0])
            tag = self.__readExact(ifh, tagLen, "order tag").decode("ascii")
            if tag != PLANE_ORDER_TAG:
                raise FormatError("Unexpected plane order tag %r" % tag)
            payload = ifh.read()
        nExpected = 3 * cc * hh * ww * 4
        if len(payload) != nExpected:
            raise FormatError("Triplane payload length %d does not match header (expected %d)" % (len(payload), nExpected))
        return np.frombuffer(payload, dtype="<f4").reshape(3, cc, hh, ww).astype(np.float32)

    # -- checkpoints --

    def writeCheckpoint(self, filePath, tensorD, metaD=None):
        """Write named float32 tensors; metadata goes to a JSON sidecar <filePath>.json.

        Per tensor: u16 name length, utf-8 name, u32 ndim, u32 dims, float32 payload.
        """
        with open(filePath, "wb") as ofh:
            ofh.write(CHECKPOINT_MAGIC)
            ofh.write(np.asarray([FORMAT_VERSION], dtype="<u2").tobytes())
            ofh.write(np.asarray([len(tensorD)], dtype="<u4").tobytes())
            for name, value in tensorD.items():
                arr = np.asarray(value, dtype="<f4")
                bName = name.encode("utf-8")
                ofh.write(np.asarray([len(bName)], dtype="<u2").tobytes())
                ofh.write(bName)
                ofh.write(np.asarray([arr.ndim] + list(arr.shape), dtype="<u4").tobytes())
                ofh.write(np.ascontiguousarray(arr).tobytes())
        if metaD is not None:
            self.__mU.doExport(filePath + ".json", metaD, fmt="json", indent=3)
        return True

    def readCheckpoint(self, filePath):
        tensorD = OrderedDict()
        with open(filePath, "rb") as ifh:
            self.__readHeader(ifh, CHECKPOINT_MAGIC)
            count = int(np.frombuffer(self.__readExact(ifh, 4, "tensor count"), dtype="<u4")[0])
            for _ in range(count):
                nameLen = int(np.frombuffer(self.__readExact(ifh, 2, "name length"), dtype="<u2")[0])
                name = self.__readExact(ifh, nameLen, "tensor name").decode("utf-8")
                ndim = int(np.frombuffer(self.__readExact(ifh, 4, "ndim"), dtype="<u4")[0])
                shape = tuple(int(v) for v in np.frombuffer(self.__readExact(ifh, 4 * ndim, "shape"), dtype="<u4")) if ndim else ()
                nBytes = 4 * int(np.prod(shape, dtype=np.int64))
                tensorD[name] = np.frombuffer(self.__readExact(ifh, nBytes, "tensor %s" % name), dtype="<f4").reshape(shape).astype(np.float32)
            if ifh.read(1):
                raise FormatError("Trailing bytes after %d checkpoint tensors" % count)
        metaD = self.__mU.doImport(filePath + ".json", fmt="json") if self.__mU.exists(filePath + ".json") else {}
        return tensorD, metaD

    # -- depth raw --

    def writeDepth(self, filePath, depth):
        depth = np.asarray(depth)
        if depth.ndim != 2:
            raise ShapeMismatchError("Depth image must be 2D (got %r)" % (depth.shape,))
        with open(filePath, "wb") as ofh:
            ofh.write(DEPTH_MAGIC)
            ofh.write(np.asarray([FORMAT_VERSION], dtype="<u2").tobytes())
            ofh.write(np.asarray(depth.shape, dtype="<u4").tobytes())
            ofh.write(np.ascontiguousarray(depth, dtype="<f4").tobytes())
        return True

    def readDepth(self, filePath):
        with open(filePath, "rb") as ifh:
            self.__readHeader(ifh, DEPTH_MAGIC)
            hh, ww = (int(v) for v in np.frombuffer(self.__readExact(ifh, 8, "dimensions"), dtype="<u4"))
            payload = ifh.read()
        if len(payload) != hh * ww * 4:
            raise FormatError("Depth payload length %d does not match %d x %d" % (len(payload), hh, ww))
        return np.frombuffer(payload, dtype="<f4").reshape(hh, ww).astype(np.float32)

    # -- images --

    @staticmethod
    def toUint8(img):
        return np.clip(np.rint(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)

    def writeRgbPng(self, filePath, rgb):
        """Write an (H, W, 3) image in [0, 1] as 8-bit PNG."""
        Image.fromarray(self.toUint8(rgb), mode="RGB").save(filePath, format="PNG")
        return True

    def readRgbPng(self, filePath, size=None):
        """Read an 8-bit PNG as (H, W, 3) float32 in [0, 1], optionally resampled (bilinear) to size x size."""
        with Image.open(filePath) as img:
            img = img.convert("RGB")
            if size and img.size != (size, size):
                img = img.resize((size, size), resample=Image.BILINEAR)
            return np.asarray(img, dtype=np.float32) / 255.0

    def writeMaskPng(self, filePath, mask):
        Image.fromarray(np.asarray(mask, dtype=bool)).convert("1").save(filePath, format="PNG")
        return True

    def readMaskPng(self, filePath):
        with Image.open(filePath) as img:
            return (np.asarray(img.convert("L")) > 127).astype(np.uint8)

    def writePseudoImagePngs(self, dirPath, images, orderTag):
        """Write pseudo-images (K, 3, H, W) in [-1, 1] as PNGs named by the order tag."""
        pathL = []
        for name, img in zip(orderTag.split(","), np.asarray(images)):
            fp = os.path.join(dirPath, "pseudo-%s.png" % name)
            self.writeRgbPng(fp, (np.transpose(img, (1, 2, 0)) + 1.0) / 2.0)
            pathL.append(fp)
        return pathL

