"""Diagonal boxes of the square lattice and subsets of their levels.

A box of half-width ``w`` and length ``ell`` is the union of ``ell + 1``
overlapping radius-``w`` diamonds stacked along the diagonal ``(1, 1)``.
Oriented in that direction it splits into ``2 * (ell + w) + 1`` levels
``x + y = const``.  After rotating by 45 degrees, even levels hold ``w + 1``
columns and odd levels ``w`` columns.  Columns are numbered from 0 (smallest
``x``) upwards, and a level subset is stored as a bitmask with bit ``j`` for
column ``j``.

Edges go one level up.  Column ``j`` of an even level feeds columns ``j - 1``
and ``j`` of the odd level above; column ``j`` of an odd level feeds columns
``j`` and ``j + 1`` of the even level above.  Successors falling outside the
box are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

MAX_WIDTH = 63


class GuardError(ValueError):
    """Input is well formed but exceeds a size limit of an exhaustive method."""


@dataclass(frozen=True)
class BoxGeometry:
    """Half-width ``w`` and length ``ell`` of a diagonal box."""

    w: int
    ell: int

    def __post_init__(self):
        if isinstance(self.w, bool) or not isinstance(self.w, int) or self.w < 1:
            raise ValueError(f"box half-width must be an integer >= 1, got {self.w!r}")
        if isinstance(self.ell, bool) or not isinstance(self.ell, int) or self.ell < 0:
            raise ValueError(f"box length must be an integer >= 0, got {self.ell!r}")
        if self.w + 1 > MAX_WIDTH:
            raise ValueError(f"level width {self.w + 1} exceeds {MAX_WIDTH} columns")

    @property
    def num_levels(self) -> int:
        return 2 * (self.ell + self.w) + 1

    @property
    def top(self) -> int:
        return self.num_levels - 1

    def level_width(self, i: int) -> int:
        if not 0 <= i < self.num_levels:
            raise ValueError(f"level {i} outside box with {self.num_levels} levels")
        return self.w + 1 if i % 2 == 0 else self.w

    def level_mask(self, i: int) -> int:
        return (1 << self.level_width(i)) - 1

    def full_level(self, i: int) -> "LevelSubset":
        return LevelSubset(self.level_width(i), self.level_mask(i), i)

    def empty_level(self, i: int) -> "LevelSubset":
        return LevelSubset(self.level_width(i), 0, i)

    def parents(self, i: int, j: int) -> tuple[int, ...]:
        """Columns of level ``i - 1`` with an edge into column ``j`` of level ``i``."""
        if i < 1:
            raise ValueError("level 0 has no parents")
        below = self.level_width(i - 1)
        cand = (j, j + 1) if i % 2 == 1 else (j - 1, j)
        return tuple(c for c in cand if 0 <= c < below)

    def children(self, i: int, j: int) -> tuple[int, ...]:
        """Columns of level ``i + 1`` reachable from column ``j`` of level ``i``."""
        if i >= self.top:
            raise ValueError(f"level {i} is the top level of the box")
        above = self.level_width(i + 1)
        cand = (j - 1, j) if i % 2 == 0 else (j, j + 1)
        return tuple(c for c in cand if 0 <= c < above)

    def lattice_point(self, i: int, j: int) -> tuple[int, int]:
        """Square-lattice coordinates of column ``j`` on level ``i``.

        The bottom diamond is centred at the origin, so level ``i`` lies on
        ``x + y = i - w``.
        """
        s = i - self.w
        d = 2 * j - self.w + (i % 2)
        return (s + d) // 2, (s - d) // 2


def box_levels(w: int, ell: int) -> list[int]:
    """Level widths of the ``(w, ell)`` box, bottom to top."""
    geom = BoxGeometry(w, ell)
    return [geom.level_width(i) for i in range(geom.num_levels)]


@dataclass(frozen=True)
class LevelSubset:
    """Occupied columns of one level, as a bitmask."""

    width: int
    bits: int
    level_index: int = 0

    def __post_init__(self):
        if not 0 <= self.width <= MAX_WIDTH:
            raise ValueError(f"width must lie in [0, {MAX_WIDTH}], got {self.width}")
        if not 0 <= self.bits < (1 << self.width):
            raise ValueError(f"bits {self.bits:#x} do not fit in width {self.width}")

    @classmethod
    def from_string(cls, s: str, level_index: int = 0) -> "LevelSubset":
        """Parse ``"1011"``; the first character is column 0."""
        if any(c not in "01" for c in s):
            raise ValueError(f"not a bitstring: {s!r}")
        bits = sum(1 << j for j, c in enumerate(s) if c == "1")
        return cls(len(s), bits, level_index)

    @classmethod
    def from_columns(cls, width: int, cols, level_index: int = 0) -> "LevelSubset":
        bits = 0
        for c in cols:
            if not 0 <= c < width:
                raise ValueError(f"column {c} outside width {width}")
            bits |= 1 << c
        return cls(width, bits, level_index)

    def to_string(self) -> str:
        return "".join("1" if self.bits >> j & 1 else "0" for j in range(self.width))

    def columns(self) -> list[int]:
        return [j for j in range(self.width) if self.bits >> j & 1]

    def __len__(self) -> int:
        return bin(self.bits).count("1")

    def __bool__(self) -> bool:
        return self.bits != 0

    def __contains__(self, j: int) -> bool:
        return 0 <= j < self.width and bool(self.bits >> j & 1)

    def issubset(self, other: "LevelSubset") -> bool:
        return self.bits & ~other.bits == 0

    def __repr__(self) -> str:
        return f"LevelSubset({self.to_string() or '-'}, level={self.level_index})"


def runs(bits: int) -> list[tuple[int, int]]:
    """Maximal runs of set bits as ``(start, length)``, lowest bit first."""
    out = []
    while bits:
        low = bits & -bits
        start = low.bit_length() - 1
        # adding the lowest bit carries through the run
        end = ((bits + low) & ~bits).bit_length() - 1
        out.append((start, end - start))
        bits &= ~((1 << end) - 1)
    return out


def interval_decompose(W: LevelSubset) -> list[tuple[int, int]]:
    """Split ``W`` into maximal intervals of consecutive columns."""
    return runs(W.bits)


def successor_bits(bits: int, level: int, geom: BoxGeometry) -> int:
    """Bitmask of in-box out-neighbours on ``level + 1``."""
    if level % 2 == 0:
        return (bits | bits >> 1) & geom.level_mask(level + 1)
    return (bits | bits << 1) & geom.level_mask(level + 1)


def successors(W: LevelSubset, geom: BoxGeometry) -> LevelSubset:
    """Out-neighbourhood of ``W`` within the box, on the next level."""
    i = W.level_index
    if not 0 <= i < geom.top:
        raise ValueError(f"level {i} has no successor level in a box with {geom.num_levels} levels")
    if W.width != geom.level_width(i):
        raise ValueError(f"subset width {W.width} does not match level {i} width {geom.level_width(i)}")
    return LevelSubset(geom.level_width(i + 1), successor_bits(W.bits, i, geom), i + 1)
