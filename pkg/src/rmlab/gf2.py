"""Linear algebra over F_2 on Python-int bitsets."""

from __future__ import annotations

from typing import Iterable


class XorBasis:
    """Incrementally maintained row-echelon basis of a subspace of F_2^width.

    Vectors are Python ints; bit j is coordinate j. ``pivots[b]`` holds the
    reduced vector whose highest set bit is ``b``.
    """

    __slots__ = ("width", "pivots")

    def __init__(self, width: int):
        self.width = width
        self.pivots: dict[int, int] = {}

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def full(self) -> bool:
        return len(self.pivots) == self.width

    def reduce(self, v: int) -> int:
        pivots = self.pivots
        while v:
            top = v.bit_length() - 1
            p = pivots.get(top)
            if p is None:
                return v
            v ^= p
        return 0

    def add(self, v: int) -> bool:
        """Insert ``v``; return True iff it was independent of the current span."""
        v = self.reduce(v)
        if not v:
            return False
        self.pivots[v.bit_length() - 1] = v
        return True

    def contains(self, v: int) -> bool:
        return self.reduce(v) == 0

    def copy(self) -> XorBasis:
        other = XorBasis(self.width)
        other.pivots = dict(self.pivots)
        return other


def rank(vectors: Iterable[int]) -> int:
    basis = XorBasis(0)
    for v in vectors:
        basis.add(v)
    return basis.rank
