##
# File:    CaptionGrammar.py
# Author:  jdw
# Date:    12-Oct-2026
#
# Updates:
#
##
"""
Closed caption grammar for procedural scenes: palette, vocabulary, tokenizer and enumeration.

    <caption>   ::= <object> | <object> "on" <object>
    <object>    ::= <color> <shape>
    <color>     ::= "red" | "green" | "blue" | "yellow" | "white"
    <shape>     ::= "sphere" | "cube" | "cylinder" | "torus"

"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import logging
from collections import OrderedDict

from rcsb.utils.triplane.TriPlaneExceptions import ValueRangeError

logger = logging.getLogger(__name__)


class CaptionGrammar(object):
    """Vocabulary and tokenizer for the closed caption grammar."""

    palette = OrderedDict(
        [
            ("red", (0.9, 0.1, 0.1)),
            ("green", (0.1, 0.8, 0.2)),
            ("blue", (0.15, 0.25, 0.9)),
            ("yellow", (0.95, 0.85, 0.1)),
            ("white", (0.95, 0.95, 0.95)),
        ]
    )
    # primitive kind -> caption word
    shapeWords = OrderedDict([("sphere", "sphere"), ("box", "cube"), ("cylinder", "cylinder"), ("torus", "torus")])
    padToken = "<pad>"
    nullToken = "<null>"
    relationWord = "on"
    maxLength = 8

    def __init__(self):
        self.__vocabL = [self.padToken, self.nullToken, self.relationWord] + list(self.palette.keys()) + list(self.shapeWords.values())
        self.__idD = {w: ii for ii, w in enumerate(self.__vocabL)}
        self.__kindD = {v: k for k, v in self.shapeWords.items()}

    def getVocabulary(self):
        return list(self.__vocabL)

    def getVocabularySize(self):
        return len(self.__vocabL)

    def getPadId(self):
        return self.__idD[self.padToken]

    def getNullId(self):
        return self.__idD[self.nullToken]

    def getColorNames(self):
        return list(self.palette.keys())

    def getShapeKinds(self):
        return list(self.shapeWords.keys())

    def getColor(self, colorName):
        try:
            return self.palette[colorName]
        except KeyError:
            raise ValueRangeError("Unknown palette color %r" % colorName)

    def getColorName(self, rgb, tol=1.0e-6):
        for name, pRgb in self.palette.items():
            if all(abs(float(a) - b) <= tol for a, b in zip(rgb, pRgb)):
                return name
        raise ValueRangeError("Color %r is not a palette color" % (tuple(rgb),))

    def getShapeWord(self, kind):
        try:
            return self.shapeWords[kind]
        except KeyError:
            raise ValueRangeError("Unknown primitive kind %r" % kind)

    def getKind(self, shapeWord):
        try:
            return self.__kindD[shapeWord]
        except KeyError:
            raise ValueRangeError("Unknown shape word %r" % shapeWord)

    def describe(self, primitives):
        """Return the caption word list for primitives ordered bottom to top.

        A single primitive reads "<color> <shape>"; a stacked pair reads "<top> on <bottom>".
        """
        if not 1 <= len(primitives) <= 2:
            raise ValueRangeError("Caption grammar describes one or two primitives (got %d)" % len(primitives))
        objL = [[self.getColorName(prim.color), self.getShapeWord(prim.kind)] for prim in primitives]
        if len(objL) == 1:
            return objL[0]
        return objL[1] + [self.relationWord] + objL[0]

    def parse(self, caption):
        """Parse caption text into (colorName, kind) pairs ordered bottom to top."""
        wL = caption.split() if isinstance(caption, str) else list(caption)
        if len(wL) == 2:
            self.getColor(wL[0])
            return [(wL[0], self.getKind(wL[1]))]
        if len(wL) == 5 and wL[2] == self.relationWord:
            _ = self.getColor(wL[0]), self.getColor(wL[3])
            return [(wL[3], self.getKind(wL[4])), (wL[0], self.getKind(wL[1]))]
        raise ValueRangeError("Caption %r is not in the grammar" % (caption,))

    def tokenize(self, caption):
        """Return padded token ids of length maxLength; None or "" selects the NULL sequence."""
        if caption is None or (isinstance(caption, str) and not caption.strip()):
            return self.nullTokens()
        wL = caption.split() if isinstance(caption, str) else list(caption)
        self.parse(wL)
        return [self.__idD[w] for w in wL] + [self.getPadId()] * (self.maxLength - len(wL))

    def nullTokens(self):
        return [self.getNullId()] + [self.getPadId()] * (self.maxLength - 1)

    def detokenize(self, tokenIds):
        wL = [self.__vocabL[int(ii)] for ii in tokenIds if int(ii) != self.getPadId()]
        if wL == [self.nullToken]:
            return ""
        return " ".join(wL)

    def enumerateCaptions(self, maxObjects=2):
        """All captions of the grammar in a fixed order (singles first)."""
        singleL = ["%s %s" % (color, shape) for shape in self.shapeWords.values() for color in self.palette]
        if maxObjects < 2:
            return singleL
        pairL = ["%s on %s" % (top, bottom) for bottom in singleL for top in singleL]
        return singleL + pairL

    def getBnf(self):
        return __doc__.strip().split("\n\n", 1)[1]
