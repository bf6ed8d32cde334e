"""Exact level-by-level law of the chain by a column sweep.

While moving from level ``i`` to level ``i + 1`` the state is a word of
``w + 1`` occupancy bits plus a flag.  Positions below the sweep column
``t`` already describe level ``i + 1``, positions from ``t`` on still
describe level ``i``.  The flag is ``R`` when the interval being swept has
already put a vertex on the next level and ``L`` otherwise; it decides
whether the interval's rightmost successor may fire.

A state is encoded as ``occupancy | flag << (w + 1)`` with ``R = 1``, and a
level law is a dense float64 vector of length ``2 ** (w + 2)``.  Odd levels
carry a leading zero column so that both parities sweep the same word.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BoxGeometry, GuardError

MAX_EXACT_W = 24
FLAG_L = 0
FLAG_R = 1


@dataclass
class LevelDistribution:
    """Dense law over swept states ``{0,1}^(w+1) x {L, R}``."""

    w: int
    probs: np.ndarray

    def __post_init__(self):
        n = 1 << (self.w + 2)
        if self.probs.shape != (n,):
            raise ValueError(f"expected {n} entries for w={self.w}, got shape {self.probs.shape}")

    @classmethod
    def point_mass(cls, w: int, occupancy: int, flag: int = FLAG_R) -> "LevelDistribution":
        probs = np.zeros(1 << (w + 2))
        probs[encode_state(w, occupancy, flag)] = 1.0
        return cls(w, probs)

    def total(self) -> float:
        return float(self.probs.sum())

    def occupancy_law(self) -> np.ndarray:
        """Marginal law of the occupancy word (flag summed out)."""
        half = 1 << (self.w + 1)
        return self.probs[:half] + self.probs[half:]

    def nonzero(self) -> dict[tuple[int, int], float]:
        half = 1 << (self.w + 1)
        return {(int(k) % half, int(k) // half): float(self.probs[k]) for k in np.flatnonzero(self.probs)}


def encode_state(w: int, occupancy: int, flag: int) -> int:
    if not 0 <= occupancy < 1 << (w + 1):
        raise ValueError(f"occupancy {occupancy:#x} does not fit in {w + 1} bits")
    if flag not in (FLAG_L, FLAG_R):
        raise ValueError(f"flag must be {FLAG_L} (L) or {FLAG_R} (R)")
    return occupancy | flag << (w + 1)


def _column_step(src: np.ndarray, dst: np.ndarray, w: int, t: int, p: float, last_odd: bool):
    q = 1.0 - p
    if last_odd:
        # axes: flag, c_t, lower positions
        P = src.reshape(2, 2, 1 << t)
        N = dst.reshape(2, 2, 1 << t)
        np.add(P[FLAG_L, 0], P[FLAG_L, 1], out=N[FLAG_L, 0])
        N[FLAG_L, 0] += P[FLAG_R, 0]
        N[FLAG_L, 1] = 0.0
        np.multiply(P[FLAG_R, 1], p, out=N[FLAG_R, 1])
        np.multiply(P[FLAG_R, 1], q, out=N[FLAG_R, 0])
        return
    # axes: flag, positions above t+1, c_{t+1}, c_t, positions below t
    P = src.reshape(2, 1 << (w - t - 1), 2, 2, 1 << t)
    N = dst.reshape(2, 1 << (w - t - 1), 2, 2, 1 << t)
    Lf, Rf = FLAG_L, FLAG_R
    # c_{t+1} = 0: everything except an open R-run closes column t, flag L
    np.add(P[Lf, :, 0, 0], P[Lf, :, 0, 1], out=N[Lf, :, 0, 0])
    N[Lf, :, 0, 0] += P[Rf, :, 0, 0]
    N[Lf, :, 0, 1] = 0.0
    np.multiply(P[Rf, :, 0, 1], p, out=N[Rf, :, 0, 1])
    np.multiply(P[Rf, :, 0, 1], q, out=N[Rf, :, 0, 0])
    # c_{t+1} = 1: column t opens with probability p
    s = N[Lf, :, 1, 0]
    np.add(P[Lf, :, 1, 0], P[Lf, :, 1, 1], out=s)
    s += P[Rf, :, 1, 0]
    np.multiply(P[Rf, :, 1, 1], q, out=N[Rf, :, 1, 0])
    # N[R, 1, 1] = p * (S1 + P[R, 1, 1]) where S1 is held in N[L, 1, 0]
    np.add(s, P[Rf, :, 1, 1], out=N[Rf, :, 1, 1])
    N[Rf, :, 1, 1] *= p
    s *= q
    N[Lf, :, 1, 1] = 0.0


def dp_column_step(dist: LevelDistribution, t: int, parity: str, p: float,
                   is_last_odd_column: bool = False) -> LevelDistribution:
    """Advance the sweep by one column.

    ``parity`` is ``"even"`` or ``"odd"`` (the parity of the level being
    left).  Even sweeps use ``0 <= t < w``; odd sweeps use ``0 <= t <= w``
    with ``is_last_odd_column`` set exactly at ``t == w``, where the column
    has a single parent.
    """
    w = dist.w
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    hi = w - 1 if parity == "even" else w
    if not 0 <= t <= hi:
        raise ValueError(f"column {t} out of range for a {parity} sweep with w={w}")
    if is_last_odd_column != (parity == "odd" and t == w):
        raise ValueError("is_last_odd_column must be set exactly at the last column of an odd sweep")
    out = np.empty_like(dist.probs)
    _column_step(dist.probs, out, w, t, p, is_last_odd_column)
    return LevelDistribution(w, out)


def _restart_even_to_odd(src: np.ndarray, dst: np.ndarray, w: int):
    # keep positions 0..w-1, shift them up one place, flag R
    half = 1 << (w + 1)
    occ = src[:half] + src[half:]
    occ = occ.reshape(2, 1 << w).sum(axis=0)
    dst[:] = 0.0
    dst.reshape(2, 1 << w, 2)[FLAG_R, :, 0] = occ


def _restart_odd_to_even(src: np.ndarray, dst: np.ndarray, w: int):
    half = 1 << (w + 1)
    np.add(src[:half], src[half:], out=dst[half:])
    dst[:half] = 0.0


def _check_params(w: int, ell: int, p: float):
    if isinstance(w, bool) or not isinstance(w, int) or w < 1:
        raise ValueError(f"w must be a positive integer, got {w!r}")
    if w > MAX_EXACT_W:
        raise GuardError(f"exact computation is limited to w <= {MAX_EXACT_W}, got {w}")
    if isinstance(ell, bool) or not isinstance(ell, int) or ell < 0:
        raise ValueError(f"ell must be a nonnegative integer, got {ell!r}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")


def level_laws(w: int, ell: int, p: float, initial: int | None = None):
    """Yield ``(level, law)`` for every level, ``law`` indexed by occupancy.

    Odd-level laws are indexed by the ``w`` column bits directly (the sweep's
    leading zero column removed).
    """
    _check_params(w, ell, p)
    geom = BoxGeometry(w, ell)
    n = 1 << (w + 2)
    half = 1 << (w + 1)
    a = np.zeros(n)
    b = np.empty(n)
    a[encode_state(w, geom.level_mask(0) if initial is None else initial, FLAG_R)] = 1.0
    yield 0, a[:half] + a[half:]
    for i in range(geom.top):
        if i % 2 == 0:
            for t in range(w):
                _column_step(a, b, w, t, p, False)
                a, b = b, a
            _restart_even_to_odd(a, b, w)
            a, b = b, a
            occ = a[half:].reshape(1 << w, 2)[:, 0]
            yield i + 1, occ.copy()
        else:
            for t in range(w + 1):
                _column_step(a, b, w, t, p, t == w)
                a, b = b, a
            _restart_odd_to_even(a, b, w)
            a, b = b, a
            yield i + 1, a[half:].copy()


def exact_survival(w: int, ell: int, p: float) -> float:
    """Probability that the chain started from a full bottom level reaches the top.

    The top level of the ``(w, ell)`` box is level ``2 * (ell + w)``.
    """
    _check_params(w, ell, p)
    geom = BoxGeometry(w, ell)
    n = 1 << (w + 2)
    half = 1 << (w + 1)
    a = np.zeros(n)
    b = np.empty(n)
    a[encode_state(w, geom.level_mask(0), FLAG_R)] = 1.0
    for i in range(geom.top):
        if i % 2 == 0:
            for t in range(w):
                _column_step(a, b, w, t, p, False)
                a, b = b, a
            _restart_even_to_odd(a, b, w)
        else:
            for t in range(w + 1):
                _column_step(a, b, w, t, p, t == w)
                a, b = b, a
            _restart_odd_to_even(a, b, w)
        a, b = b, a
    # the top level is even; its law sits in the R half
    return float(a[half + 1:].sum() + a[1:half].sum())
