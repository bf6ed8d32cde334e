"""Renormalisation map built from two box-crossing probabilities.

One step sends ``p`` to ``q_long(p) * q_square(p)``, where ``q_long`` is the
survival probability through the ``(w, w + 1)`` box (``4w + 2`` level
transitions) and ``q_square`` through the ``(w, 0)`` box (``2w``
transitions).  If a step increases ``p`` the iterates are driven to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .transfer import MAX_EXACT_W, exact_survival

VERDICTS = ("escapes_to_one", "contracts", "inconclusive")


@lru_cache(maxsize=256)
def _survival(w: int, ell: int, p: float) -> float:
    return exact_survival(w, ell, p)


def crossing_pair(p: float, w: int) -> tuple[float, float]:
    """``(q_long, q_square)`` at parameter ``p``."""
    _check(p, w)
    return _survival(w, w + 1, float(p)), _survival(w, 0, float(p))


def renorm_map(p: float, w: int) -> float:
    q_long, q_square = crossing_pair(p, w)
    return q_long * q_square


def _check(p: float, w: int):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if isinstance(w, bool) or not isinstance(w, int) or not 1 <= w <= MAX_EXACT_W:
        raise ValueError(f"w must be an integer in [1, {MAX_EXACT_W}], got {w!r}")


@dataclass
class RenormStep:
    n: int
    p: float
    q_long: float
    q_square: float

    @property
    def p_next(self) -> float:
        return self.q_long * self.q_square


@dataclass
class RenormTrajectory:
    """Iterates ``p_0, p_1, ...``; ``steps[n]`` records the crossings at ``p_n``."""

    w: int
    p0: float
    steps: list[RenormStep] = field(default_factory=list)
    verdict: str = "inconclusive"

    @property
    def values(self) -> list[float]:
        """``[p_0, p_1, ..., p_N]``."""
        out = [self.p0]
        out += [s.p_next for s in self.steps]
        return out

    def as_rows(self) -> list[dict]:
        return [{"n": s.n, "p_n": s.p, "q_long": s.q_long, "q_square": s.q_square,
                 "p_next": s.p_next} for s in self.steps]


def iterate(p0: float, w: int, max_iters: int = 50, eps: float = 1e-3, callback=None) -> RenormTrajectory:
    """Iterate the map from ``p0``.

    Stops with ``escapes_to_one`` once some ``p_n > 1 - eps``, with
    ``contracts`` once some ``p_n < p0``, and with ``inconclusive`` after
    ``max_iters`` steps.  ``callback(step)`` is called after each step.
    """
    _check(p0, w)
    if max_iters < 1:
        raise ValueError(f"max_iters must be at least 1, got {max_iters}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    traj = RenormTrajectory(w, p0)
    if p0 > 1.0 - eps:
        traj.verdict = "escapes_to_one"
        return traj
    p = p0
    for n in range(max_iters):
        q_long, q_square = crossing_pair(p, w)
        step = RenormStep(n, p, q_long, q_square)
        traj.steps.append(step)
        if callback is not None:
            callback(step)
        p = step.p_next
        if p > 1.0 - eps:
            traj.verdict = "escapes_to_one"
            break
        if p < p0:
            traj.verdict = "contracts"
            break
    return traj
