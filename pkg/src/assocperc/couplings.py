"""Level kernels, monotone couplings against the chain, and a domination test.

A level kernel opens edges between two consecutive levels of a box as an
increasing function of latent Bernoulli bits, so every kernel here is
positively associated, and edges without a common endpoint read disjoint
bits (1-independence).

* ``product``: one bit per edge, marginal ``p``.
* ``pi_pp``: edge ``(u, v)`` open iff ``Zplus(u) * Zminus(v)``, marginal ``p**2``.
* ``sibling_block``: from an even level all out-edges of ``u`` share
  ``Zout(u)``; from an odd level all in-edges of ``v`` share ``Zin(v)``.
  Marginal ``p``.
* ``truncated_square``: the contracted truncated-square site model.  Each
  lattice vertex carries two sites, each shared by two of its four edges,
  and an edge is open iff the sites at both of its ends are.  Marginal
  ``p**2``.

The couplings take the chain parameter to be the kernel's marginal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .chain import interval_structure, transition_prob
from .geometry import BoxGeometry, GuardError, LevelSubset
from .latent import LatentBits, derive_seed

TAG_EDGE = 101
TAG_PLUS = 102
TAG_MINUS = 103
TAG_OUT = 104
TAG_IN = 105
TAG_SITE = 106
TAG_AUX = 107

KINDS = ("product", "pi_pp", "sibling_block", "truncated_square")


def _site_group(x: int, y: int, direction: str) -> int:
    # even vertices pair N with E, odd vertices pair N with W
    even = (x + y) % 2 == 0
    return {"N": 0, "S": 1, "E": 0 if even else 1, "W": 1 if even else 0}[direction]


@dataclass(frozen=True)
class LevelKernel:
    kind: str
    p: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    @property
    def marginal(self) -> float:
        return self.p**2 if self.kind in ("pi_pp", "truncated_square") else self.p

    def edge_open(self, level: int, cu: int, cv: int, geom: BoxGeometry, src):
        """Status of the edge from column ``cu`` of ``level`` to column ``cv`` above."""
        p = self.p
        if self.kind == "product":
            return src.bernoulli(p, TAG_EDGE, level, cu, cv)
        if self.kind == "pi_pp":
            return src.bernoulli(p, TAG_PLUS, level, cu) & src.bernoulli(p, TAG_MINUS, level + 1, cv)
        if self.kind == "sibling_block":
            if level % 2 == 0:
                return src.bernoulli(p, TAG_OUT, level, cu)
            return src.bernoulli(p, TAG_IN, level + 1, cv)
        xu, yu = geom.lattice_point(level, cu)
        xv, yv = geom.lattice_point(level + 1, cv)
        out_dir, in_dir = ("E", "W") if xv == xu + 1 else ("N", "S")
        gu = _site_group(xu, yu, out_dir)
        gv = _site_group(xv, yv, in_dir)
        return src.bernoulli(p, TAG_SITE, xu, yu, gu) & src.bernoulli(p, TAG_SITE, xv, yv, gv)

    def right_given_left(self, level: int, cu: int, geom: BoxGeometry) -> float:
        """P[right out-edge of ``cu`` open | left out-edge open], in closed form."""
        p = self.p
        if self.kind in ("product", "pi_pp"):
            return p
        if self.kind == "sibling_block":
            return 1.0 if level % 2 == 0 else p
        x, y = geom.lattice_point(level, cu)
        return p if (x + y) % 2 == 0 else p * p


# -- latent sources for exact enumeration ----------------------------------


class _Recorder:
    def __init__(self):
        self.keys: dict[tuple, float] = {}

    def bernoulli(self, q, *coords):
        if coords in self.keys and self.keys[coords] != q:
            raise ValueError(f"latent key {coords} queried with two thresholds")
        self.keys[coords] = q
        return np.False_


class _Assignment:
    def __init__(self, keys: dict[tuple, float]):
        self.index = {k: n for n, k in enumerate(keys)}
        n = len(keys)
        rows = np.arange(1 << n, dtype=np.int64)
        self.values = [(rows >> k & 1).astype(bool) for k in range(n)]
        weights = np.ones(1 << n)
        for k, q in enumerate(keys.values()):
            weights *= np.where(self.values[k], q, 1.0 - q)
        self.weights = weights

    def bernoulli(self, q, *coords):
        return self.values[self.index[coords]]


def enumerate_law(fn, max_keys: int = 22):
    """Exact law of ``fn(src)`` over all assignments of the latent bits it reads.

    ``fn`` must read the same keys whatever their values.  Returns a dict
    from the (tuple of) integer outputs to probability.
    """
    rec = _Recorder()
    fn(rec)
    if len(rec.keys) > max_keys:
        raise GuardError(f"{len(rec.keys)} latent bits exceed the enumeration limit {max_keys}")
    src = _Assignment(rec.keys)
    out = fn(src)
    outs = out if isinstance(out, tuple) else (out,)
    n = len(src.weights)
    cols = [np.broadcast_to(np.asarray(o, dtype=np.int64), (n,)) for o in outs]
    law: dict = {}
    for idx, wgt in zip(zip(*cols), src.weights):
        key = tuple(int(v) for v in idx) if isinstance(out, tuple) else int(idx[0])
        law[key] = law.get(key, 0.0) + float(wgt)
    return law


# -- kernel steps and couplings -------------------------------------------


def _pack(cols: dict[int, np.ndarray]):
    acc = np.uint64(0)
    for j, c in cols.items():
        acc = acc | (np.asarray(c).astype(np.uint64) << np.uint64(j))
    return acc


def _check_step(W: LevelSubset, geom: BoxGeometry):
    i = W.level_index
    if not 0 <= i < geom.top:
        raise ValueError(f"level {i} has no successor level in a box with {geom.num_levels} levels")
    if W.width != geom.level_width(i):
        raise ValueError(f"subset width {W.width} does not match level {i} width {geom.level_width(i)}")


def _reached(kernel: LevelKernel, W: LevelSubset, geom: BoxGeometry, src) -> dict[int, np.ndarray]:
    i = W.level_index
    cols: dict[int, np.ndarray] = {}
    for v in range(geom.level_width(i + 1)):
        for u in geom.parents(i + 1, v):
            if u in W:
                e = kernel.edge_open(i, u, v, geom, src)
                cols[v] = cols[v] | e if v in cols else e
    return cols


def kernel_step_masks(kernel: LevelKernel, active: LevelSubset, geom: BoxGeometry, src):
    """Next-level reached set as uint64 mask(s); array-valued for batched sources."""
    _check_step(active, geom)
    return _pack(_reached(kernel, active, geom, src))


def kernel_step(kernel: LevelKernel, active: LevelSubset, geom: BoxGeometry, bits: LatentBits) -> LevelSubset:
    """Vertices of the next level with an open edge from ``active``."""
    m = kernel_step_masks(kernel, active, geom, bits)
    i = active.level_index + 1
    return LevelSubset(geom.level_width(i), int(m), i)


def kernel_row(kernel: LevelKernel, W: LevelSubset, geom: BoxGeometry) -> dict[int, float]:
    """Exact one-step law of ``kernel_step`` from ``W``, keyed by bitmask."""
    return enumerate_law(lambda src: kernel_step_masks(kernel, W, geom, src))


def _interval_columns(mask: int, succ: int):
    us = [j for j in range(mask.bit_length()) if mask >> j & 1]
    vs = [j for j in range(succ.bit_length()) if succ >> j & 1]
    return us, vs


def _eta_vs_x(W: LevelSubset, geom: BoxGeometry, src, p: float):
    i = W.level_index
    eta: dict[int, np.ndarray] = {}
    x: dict[int, np.ndarray] = {}
    for mask, length, succ, special in interval_structure(W.bits, i, geom):
        us, vs = _interval_columns(mask, succ)
        zp = {u: src.bernoulli(p, TAG_PLUS, i, u) for u in us}
        zm = {v: src.bernoulli(p, TAG_MINUS, i + 1, v) for v in vs}
        for v in vs:
            hit = None
            for u in geom.parents(i + 1, v):
                if u in zp:
                    hit = zp[u] if hit is None else hit | zp[u]
            eta[v] = hit & zm[v]
        if not special:
            for v in vs:
                x[v] = zm[v]
            continue
        # special interval: v_j sits between u_{j-1} and u_j
        found = np.False_
        for j, v in enumerate(vs):
            if j < length:
                x[v] = np.where(found, zm[v], zp[us[j]])
                found = found | zp[us[j]]
            else:
                x[v] = found & zm[v]
    return _pack(eta), _pack(x)


def coupled_masks_eta_vs_x(W: LevelSubset, geom: BoxGeometry, src, p: float):
    _check_step(W, geom)
    return _eta_vs_x(W, geom, src, p)


def coupled_step_eta_vs_x(W: LevelSubset, geom: BoxGeometry, bits: LatentBits):
    """Monotone coupling of the ``pi_pp`` step below the chain step.

    Both sides read the vertex bits ``Zplus`` (current level) and ``Zminus``
    (next level) of ``bits``; the chain side has parameter ``bits.p``.
    Returns ``(W_eta, W_x)`` with ``W_eta`` a subset of ``W_x``.
    """
    e, x = coupled_masks_eta_vs_x(W, geom, bits, bits.p)
    i = W.level_index + 1
    width = geom.level_width(i)
    return LevelSubset(width, int(e), i), LevelSubset(width, int(x), i)


def _x_vs_kernel(W: LevelSubset, kernel: LevelKernel, geom: BoxGeometry, src):
    i = W.level_index
    m = kernel.marginal
    x: dict[int, np.ndarray] = {}
    hat = _reached(kernel, W, geom, src)
    for mask, length, succ, special in interval_structure(W.bits, i, geom):
        us, vs = _interval_columns(mask, succ)
        if not special:
            # distinct parents give vertex-disjoint, hence independent, edges
            used = set()
            for v in vs:
                u = min(c for c in geom.parents(i + 1, v) if c in us and c not in used)
                used.add(u)
                x[v] = kernel.edge_open(i, u, v, geom, src)
            continue
        left = [kernel.edge_open(i, us[j], vs[j], geom, src) for j in range(length)]
        right = [kernel.edge_open(i, us[j], vs[j + 1], geom, src) for j in range(length)]
        ys = []
        for j in range(length):
            cond = kernel.right_given_left(i, us[j], geom)
            q = 1.0 if cond == 0.0 else min(1.0, m / cond)
            ys.append(src.bernoulli(q, TAG_AUX, i, us[j]))
        before = np.False_   # j* < j
        prev = np.False_     # j* < j - 1
        for j in range(length + 1):
            val = np.False_
            if j < length:
                val = val | (~before & left[j])
            if j > 0:
                val = val | (before & ~prev & right[j - 1] & ys[j - 1]) | (prev & right[j - 1])
            x[vs[j]] = val
            prev = before
            if j < length:
                before = before | left[j]
    return _pack(x), _pack(hat)


def coupled_masks_x_vs_kernel(W: LevelSubset, kernel: LevelKernel, geom: BoxGeometry, src):
    _check_step(W, geom)
    return _x_vs_kernel(W, kernel, geom, src)


def coupled_step_x_vs_kernel(W: LevelSubset, kernel: LevelKernel, geom: BoxGeometry, bits: LatentBits):
    """Monotone coupling of the chain step below a kernel step.

    The chain side has parameter ``kernel.marginal``.  Returns
    ``(W_x, W_hat)`` with ``W_x`` a subset of ``W_hat``.
    """
    x, h = coupled_masks_x_vs_kernel(W, kernel, geom, bits)
    i = W.level_index + 1
    width = geom.level_width(i)
    return LevelSubset(width, int(x), i), LevelSubset(width, int(h), i)


# -- stochastic domination -------------------------------------------------


@dataclass
class FiniteDistribution:
    """Law on subsets of ``{0, ..., width-1}`` given by bitmask support."""

    width: int
    support: list
    probs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.support = [s.bits if isinstance(s, LevelSubset) else int(s) for s in self.support]
        self.probs = np.asarray(self.probs, dtype=float)
        if len(self.support) != len(self.probs):
            raise ValueError("support and probs differ in length")
        if len(set(self.support)) != len(self.support):
            raise ValueError("support entries must be distinct")
        if any(not 0 <= s < 1 << self.width for s in self.support):
            raise ValueError(f"support entry outside width {self.width}")
        if np.any(self.probs < 0):
            raise ValueError("negative probability")

    @classmethod
    def from_dict(cls, width: int, law: dict) -> "FiniteDistribution":
        keys = sorted(law)
        return cls(width, keys, np.array([law[k] for k in keys]))

    @classmethod
    def from_row(cls, row) -> "FiniteDistribution":
        width = next(iter(row.entries)).width
        return cls.from_dict(width, row.by_bits())

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.support, self.probs.tolist()))


_SCALE = 1 << 60
_FLOW_TOL = 1e-10


def check_domination(a: FiniteDistribution, b: FiniteDistribution) -> bool:
    """Decide ``a`` <= ``b`` stochastically by max-flow feasibility.

    Source arcs carry the masses of ``a``, sink arcs the masses of ``b``,
    and uncapacitated arcs join ``x`` to ``y`` whenever ``x`` is a subset of
    ``y``.  Capacities are scaled to integers so the flow is exact.
    """
    if a.width != b.width:
        raise ValueError(f"widths differ: {a.width} vs {b.width}")
    for d in (a, b):
        if abs(d.probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"mass not normalised (total {d.probs.sum()!r})")
    if len(a.support) > 4096 or len(b.support) > 4096:
        raise GuardError("supports larger than 4096 states")
    A = {s: int(round(v * _SCALE)) for s, v in zip(a.support, a.probs) if v > 0}
    B = {s: int(round(v * _SCALE)) for s, v in zip(b.support, b.probs) if v > 0}
    G = nx.DiGraph()
    for x, cap in A.items():
        G.add_edge("src", ("a", x), capacity=cap)
    for y, cap in B.items():
        G.add_edge(("b", y), "sink", capacity=cap)
    if len(A) * len(B) <= (1 << a.width) * max(a.width, 1):
        for x in A:
            for y in B:
                if x & ~y == 0:
                    G.add_edge(("a", x), ("b", y))
    else:
        # route through the hypercube: x -> x + {i} -> ... -> y
        for x in A:
            G.add_edge(("a", x), ("h", x))
        for y in B:
            G.add_edge(("h", y), ("b", y))
        for s in range(1 << a.width):
            for k in range(a.width):
                if not s >> k & 1:
                    G.add_edge(("h", s), ("h", s | 1 << k))
    if "sink" not in G or "src" not in G:
        return not A
    value = nx.maximum_flow_value(G, "src", "sink")
    return value >= sum(A.values()) - _FLOW_TOL * _SCALE


# -- truncated square lattice ----------------------------------------------


@dataclass
class BondSample:
    """Bond statuses on a vertex rectangle.

    ``horizontal[..., y, x]`` is the edge ``(x, y)-(x+1, y)`` and
    ``vertical[..., y, x]`` the edge ``(x, y)-(x, y+1)``, relative to
    ``origin``.
    """

    origin: tuple[int, int]
    horizontal: np.ndarray
    vertical: np.ndarray

    def flat(self) -> np.ndarray:
        lead = self.horizontal.shape[:-2]
        return np.concatenate([self.horizontal.reshape(*lead, -1), self.vertical.reshape(*lead, -1)], axis=-1)


def truncated_square_bonds(cells: tuple[int, int], p: float, src, origin=(0, 0)) -> BondSample:
    nx_, ny_ = cells
    if nx_ < 0 or ny_ < 0:
        raise ValueError("window must have nonnegative size")
    x0, y0 = origin

    def site(x, y, d):
        return src.bernoulli(p, TAG_SITE, x, y, _site_group(x, y, d))

    hor = [[site(x0 + x, y0 + y, "E") & site(x0 + x + 1, y0 + y, "W") for x in range(nx_)]
           for y in range(ny_ + 1)]
    ver = [[site(x0 + x, y0 + y, "N") & site(x0 + x, y0 + y + 1, "S") for x in range(nx_ + 1)]
           for y in range(ny_)]

    def stack(rows, shape):
        if not rows or not rows[0]:
            return np.zeros(shape, dtype=bool)
        arr = np.array([[np.asarray(c) for c in r] for r in rows])
        return np.moveaxis(arr, (0, 1), (-2, -1)) if arr.ndim > 2 else arr

    return BondSample((x0, y0), stack(hor, (ny_ + 1, nx_)), stack(ver, (ny_, nx_ + 1)))


def truncated_square_sample(window: tuple[int, int], p: float, seed: int, trials: int | None = None,
                            origin=(0, 0)) -> BondSample:
    """Contracted truncated-square bonds on a window of ``window`` unit cells.

    With ``trials`` set, the leading axis indexes independent trials.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if trials is None:
        src = LatentBits(seed, p)
    else:
        src = LatentBits(derive_seed(seed, np.arange(trials, dtype=np.int64)), p)
    return truncated_square_bonds(window, p, src, origin)


def truncated_square_law(window: tuple[int, int], p: float, origin=(0, 0)) -> dict[int, float]:
    """Exact law of the flattened bond vector, by enumerating the sites.

    Bond ``k`` of the code follows the order of ``BondSample.flat``.
    """
    return enumerate_law(_flat_code_fn(window, p, origin))


def _flat_code_fn(window, p, origin):
    nx_, ny_ = window
    x0, y0 = origin

    def fn(src):
        def site(x, y, d):
            return src.bernoulli(p, TAG_SITE, x, y, _site_group(x, y, d))

        edges = [site(x0 + x, y0 + y, "E") & site(x0 + x + 1, y0 + y, "W")
                 for y in range(ny_ + 1) for x in range(nx_)]
        edges += [site(x0 + x, y0 + y, "N") & site(x0 + x, y0 + y + 1, "S")
                  for y in range(ny_) for x in range(nx_ + 1)]
        code = np.int64(0)
        for k, e in enumerate(edges):
            code = code | (np.asarray(e).astype(np.int64) << k)
        return code

    return fn


def chain_row(W: LevelSubset, geom: BoxGeometry, p: float) -> FiniteDistribution:
    return FiniteDistribution.from_row(transition_prob(W, geom, p))
