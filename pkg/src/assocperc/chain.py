"""The lower-bound Markov chain on level subsets of a diagonal box.

From a level subset ``W`` the chain moves to a random subset of the in-box
successors of ``W``.  Each maximal interval of ``W`` acts independently.  An
interval of length ``l`` whose successor set inside the box has ``l + 1``
columns is special: it goes to the empty set with probability ``(1-p)**l``,
never to its rightmost successor alone, and otherwise every successor is
kept independently with probability ``p``.  Any other interval keeps each of
its successors independently with probability ``p``.

The sampler realises this law as an increasing function of one
Bernoulli(``p``) bit per vertex of the next level: a special interval drops
its rightmost successor when none of its other successors fired.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BoxGeometry, GuardError, LevelSubset, runs, successor_bits
from .latent import LatentBits, hash_key

ROW_WIDTH_LIMIT = 20


@dataclass(frozen=True)
class TransitionRow:
    """Exact one-step law out of ``source``."""

    source: LevelSubset
    entries: dict

    def prob(self, target: LevelSubset) -> float:
        return self.entries.get(target, 0.0)

    def by_bits(self) -> dict[int, float]:
        return {k.bits: v for k, v in self.entries.items()}

    def total(self) -> float:
        return float(sum(self.entries.values()))


def interval_structure(bits: int, level: int, geom: BoxGeometry):
    """Yield ``(run_mask, length, succ_mask, special)`` per maximal interval."""
    for start, length in runs(bits):
        mask = ((1 << length) - 1) << start
        succ = successor_bits(mask, level, geom)
        yield mask, length, succ, bin(succ).count("1") == length + 1


def _check_p(p: float):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")


def _check_source(W: LevelSubset, geom: BoxGeometry):
    i = W.level_index
    if not 0 <= i < geom.top:
        raise ValueError(f"level {i} has no successor level in a box with {geom.num_levels} levels")
    if W.width != geom.level_width(i):
        raise ValueError(f"subset width {W.width} does not match level {i} width {geom.level_width(i)}")


def _submasks(mask: int):
    s = mask
    while True:
        yield s
        if s == 0:
            return
        s = (s - 1) & mask


def interval_row(length: int, succ: int, special: bool, p: float) -> dict[int, float]:
    """Law of the successor subset of one interval, keyed by bitmask."""
    m = bin(succ).count("1")
    top = 1 << (succ.bit_length() - 1)
    row = {}
    for s in _submasks(succ):
        k = bin(s).count("1")
        if special and s == 0:
            row[s] = (1.0 - p) ** length
        elif special and s == top:
            row[s] = 0.0
        else:
            row[s] = p**k * (1.0 - p) ** (m - k)
    return row


def transition_prob(W: LevelSubset, geom: BoxGeometry, p: float) -> TransitionRow:
    """Exact transition row of the chain out of ``W``.

    Rows are enumerated explicitly, so the level width is capped at
    ``ROW_WIDTH_LIMIT``.
    """
    _check_p(p)
    _check_source(W, geom)
    if W.width > ROW_WIDTH_LIMIT:
        raise GuardError(f"row enumeration limited to width {ROW_WIDTH_LIMIT}, got {W.width}")
    row = {0: 1.0}
    for _, length, succ, special in interval_structure(W.bits, W.level_index, geom):
        part = interval_row(length, succ, special, p)
        # successor sets of distinct intervals are disjoint
        row = {a | b: pa * pb for a, pa in row.items() for b, pb in part.items()}
    width = geom.level_width(W.level_index + 1)
    nxt = W.level_index + 1
    return TransitionRow(W, {LevelSubset(width, b, nxt): v for b, v in row.items()})


def next_bits(bits: int, z: int, level: int, geom: BoxGeometry) -> int:
    """Apply the monotone update to ``bits`` given the next level's latent bits ``z``."""
    out = 0
    for _, _, succ, special in interval_structure(bits, level, geom):
        fired = z & succ
        top = 1 << (succ.bit_length() - 1)
        if special and fired & ~top == 0:
            continue
        out |= fired
    return out


def level_latent_bits(bits: LatentBits, level: int, width: int) -> int:
    """Pack the latent bits of one level into a mask (scalar seeds only)."""
    z = 0
    for j in range(width):
        if bits.bit(level, j):
            z |= 1 << j
    return z


def sample_next(W: LevelSubset, geom: BoxGeometry, bits: LatentBits) -> LevelSubset:
    """One monotone step of the chain driven by ``bits`` at the next level."""
    _check_source(W, geom)
    nxt = W.level_index + 1
    width = geom.level_width(nxt)
    z = level_latent_bits(bits, nxt, width)
    return LevelSubset(width, next_bits(W.bits, z, W.level_index, geom), nxt)


def run_chain(initial: LevelSubset, geom: BoxGeometry, bits: LatentBits) -> list[LevelSubset]:
    """Trajectory from level 0 to the top of the box."""
    if initial.level_index != 0:
        raise ValueError("the chain starts on level 0")
    if initial.width != geom.level_width(0):
        raise ValueError(f"initial width {initial.width} does not match level 0 width {geom.level_width(0)}")
    traj = [initial]
    cur = initial
    for i in range(geom.top):
        if cur.bits == 0:
            cur = geom.empty_level(i + 1)
        else:
            cur = sample_next(cur, geom, bits)
        traj.append(cur)
    return traj


# -- vectorised form -------------------------------------------------------

_ONE = np.uint64(1)


def next_masks(W: np.ndarray, Z: np.ndarray, level: int, w: int) -> np.ndarray:
    """``next_bits`` over arrays of uint64 masks, via carry propagation.

    Adding the low bit of a run to the run's unfired columns carries into the
    column just past the run exactly when none of them fired.  That column
    lines up with the run's rightmost successor.
    """
    W = np.asarray(W, dtype=np.uint64)
    Z = np.asarray(Z, dtype=np.uint64)
    starts = W & ~(W << _ONE)
    if level % 2 == 0:
        succ = (W | (W >> _ONE)) & np.uint64((1 << w) - 1)
        others = (Z << _ONE) & W
        # runs starting at column 0 lose their left successor to the box edge
        empty = ((W & ~others) + (starts & ~_ONE)) & ~W
        drop = empty >> _ONE
    else:
        succ = (W | (W << _ONE)) & np.uint64((1 << (w + 1)) - 1)
        others = Z & W
        drop = ((W & ~others) + starts) & ~W
    return Z & succ & ~drop


def pack_level(bits: LatentBits, level: int, width: int, threshold: float | None = None) -> np.ndarray:
    """Latent bits of one level for a batch of trial seeds, packed to uint64."""
    q = bits.p if threshold is None else threshold
    cols = np.arange(width, dtype=np.int64)
    seeds = np.asarray(bits.seed)[:, None]
    h = hash_key(seeds, level, cols[None, :])
    u = (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
    fired = (u < q).astype(np.uint64)
    return (fired << cols.astype(np.uint64)[None, :]).sum(axis=1, dtype=np.uint64)


def survival_batch(geom: BoxGeometry, bits: LatentBits, initial: int | None = None) -> np.ndarray:
    """Whether each trial's chain is nonempty on the top level.

    ``bits.seed`` is an array of trial seeds; trial ``k`` uses exactly the bits
    ``run_chain`` would draw from ``LatentBits(bits.seed[k], bits.p)``.
    """
    n = len(np.asarray(bits.seed))
    start = geom.level_mask(0) if initial is None else initial
    W = np.full(n, start, dtype=np.uint64)
    alive = np.arange(n)
    seeds = np.asarray(bits.seed)
    for i in range(geom.top):
        if alive.size == 0:
            break
        sub = LatentBits(seeds[alive], bits.p)
        Z = pack_level(sub, i + 1, geom.level_width(i + 1))
        W_new = next_masks(W[alive], Z, i, geom.w)
        W[alive] = W_new
        alive = alive[W_new != 0]
    return W != 0
