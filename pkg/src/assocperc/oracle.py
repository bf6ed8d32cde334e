"""Exhaustive ground truth on tiny instances.

* ``brute_force_survival`` rebuilds the diagonal box directly from lattice
  points, applies the monotone chain rule to every assignment of the latent
  bits and adds up the weight of the surviving ones.  It shares no code with
  the transfer-matrix solver.
* ``JointTable`` holds an explicit law on ``{0,1}^E`` for ``|E| <= 5``.
  Positive association, k-independence and the closure form of the
  correlation inequality are checked by enumerating every increasing event.
* Closed-form comparison bounds (``domination_bound``,
  ``branching_bound_formula``).

Configurations of a table are integers: bit ``e`` is the status of edge
``e``.  Events over ``n`` coordinates are integers with ``2**n`` bits, one
per configuration.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import GuardError

MAX_TABLE_EDGES = 5
MAX_LATENT_BITS = 24
PROB_TOL = 1e-12
NORM_TOL = 1e-12


# -- survival by enumeration -------------------------------------------------


def _box_levels(w: int, ell: int):
    """Lattice points of the box, grouped by ``x + y`` and sorted by ``x``."""
    levels = []
    for s in range(-w, 2 * ell + w + 1):
        pts = [(x, s - x) for x in range(-w - ell, ell + w + 1) if abs(2 * x - s) <= w]
        levels.append(pts)
    return levels


def _level_rule(lower, upper):
    """Table ``nxt[W, Z]`` of the monotone chain step between two levels."""
    index = {pt: j for j, pt in enumerate(upper)}
    succ = [[index[q] for q in ((x + 1, y), (x, y + 1)) if q in index] for x, y in lower]
    nw, nz = 1 << len(lower), 1 << len(upper)
    table = np.zeros((nw, nz), dtype=np.int64)
    for W in range(nw):
        # maximal runs of occupied, horizontally adjacent lattice points
        intervals, cur = [], []
        for j in range(len(lower)):
            if W >> j & 1:
                cur.append(j)
            elif cur:
                intervals.append(cur)
                cur = []
        if cur:
            intervals.append(cur)
        for Z in range(nz):
            out = 0
            for run in intervals:
                targets = sorted({v for u in run for v in succ[u]})
                fired = [v for v in targets if Z >> v & 1]
                special = len(targets) == len(run) + 1
                if special and all(v == targets[-1] for v in fired):
                    continue
                for v in fired:
                    out |= 1 << v
            table[W, Z] = out
    return table


def latent_bit_count(w: int, ell: int) -> int:
    return sum(len(lv) for lv in _box_levels(w, ell)[1:])


def brute_force_survival(w: int, ell: int, p: float) -> float:
    """Survival probability from the full bottom level, by enumeration."""
    if w < 1 or ell < 0:
        raise ValueError(f"need w >= 1 and ell >= 0, got w={w}, ell={ell}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    levels = _box_levels(w, ell)
    K = latent_bit_count(w, ell)
    if K > MAX_LATENT_BITS:
        raise GuardError(f"box has {K} latent bits, enumeration limit is {MAX_LATENT_BITS}")
    assign = np.arange(1 << K, dtype=np.int64)
    state = np.full(1 << K, (1 << len(levels[0])) - 1, dtype=np.int64)
    offset = 0
    for lower, upper in zip(levels, levels[1:]):
        z = (assign >> offset) & ((1 << len(upper)) - 1)
        state = _level_rule(lower, upper)[state, z]
        offset += len(upper)
    ones = np.zeros(1 << K, dtype=np.int64)
    for k in range(K):
        ones += (assign >> k) & 1
    counts = np.bincount(ones[state != 0], minlength=K + 1)
    return float(sum(int(c) * p**k * (1.0 - p) ** (K - k) for k, c in enumerate(counts) if c))


# -- graphs and tables -------------------------------------------------------


@dataclass
class SmallGraph:
    """Undirected graph with all-pairs edge distances.

    ``edge_dist[a][b]`` is the least vertex distance between an endpoint of
    edge ``a`` and an endpoint of edge ``b`` (``inf`` if disconnected).
    """

    vertices: list
    edges: list
    edge_dist: np.ndarray = field(init=False)

    def __post_init__(self):
        adj = {v: set() for v in self.vertices}
        for u, v in self.edges:
            if u not in adj or v not in adj:
                raise ValueError(f"edge ({u}, {v}) has an endpoint outside the vertex set")
            adj[u].add(v)
            adj[v].add(u)
        vd = {v: self._bfs(adj, v) for v in self.vertices}
        m = len(self.edges)
        d = np.zeros((m, m))
        for a, e in enumerate(self.edges):
            for b, f in enumerate(self.edges):
                d[a, b] = min(vd[u].get(v, math.inf) for u in e for v in f)
        self.edge_dist = d

    @staticmethod
    def _bfs(adj, src):
        dist = {src: 0}
        todo = deque([src])
        while todo:
            u = todo.popleft()
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    todo.append(v)
        return dist

    @classmethod
    def cycle(cls, n: int) -> "SmallGraph":
        """Cycle ``1 - 2 - ... - n - 1`` with edges ``{1,2}, {2,3}, ..., {n,1}``."""
        vs = list(range(1, n + 1))
        return cls(vs, [(i, i % n + 1) for i in vs])


@dataclass
class JointTable:
    """Explicit law on ``{0,1}^E``; ``probs[c]`` is the mass of configuration ``c``."""

    edges: list
    probs: np.ndarray
    edge_dist: np.ndarray | None = None

    def __post_init__(self):
        m = len(self.edges)
        if m > MAX_TABLE_EDGES:
            raise GuardError(f"tables are limited to {MAX_TABLE_EDGES} edges, got {m}")
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (1 << m,):
            raise ValueError(f"expected {1 << m} probabilities, got shape {self.probs.shape}")
        if self.edge_dist is not None:
            self.edge_dist = np.asarray(self.edge_dist, dtype=float)

    @property
    def n(self) -> int:
        return len(self.edges)

    def check_normalised(self, tol: float = NORM_TOL):
        if np.any(self.probs < -tol) or abs(self.probs.sum() - 1.0) > tol:
            raise ValueError(f"table is not a probability vector (total {self.probs.sum()!r})")

    def prob(self, event) -> float:
        """Mass of ``{c : event(c)}`` for a predicate on configuration ints."""
        return float(sum(v for c, v in enumerate(self.probs) if event(c)))

    def conditional(self, edge: int, given: dict[int, int]) -> float:
        """``P[edge open | edge statuses in given]``."""
        def match(c):
            return all((c >> e & 1) == s for e, s in given.items())
        den = self.prob(match)
        if den == 0.0:
            raise ValueError("conditioning event has probability zero")
        return self.prob(lambda c: match(c) and c >> edge & 1) / den

    def marginal(self, coords) -> np.ndarray:
        """Law of the restriction to ``coords`` (bit ``k`` of the index is ``coords[k]``)."""
        out = np.zeros(1 << len(coords))
        idx = np.zeros(len(self.probs), dtype=np.int64)
        cs = np.arange(len(self.probs))
        for k, e in enumerate(coords):
            idx |= ((cs >> e) & 1) << k
        np.add.at(out, idx, self.probs)
        return out

    def distances(self, graph: SmallGraph | None = None) -> np.ndarray:
        if graph is not None:
            if len(graph.edges) != self.n:
                raise ValueError("graph and table have different edge counts")
            return graph.edge_dist
        if self.edge_dist is None:
            raise ValueError("table carries no edge distances and no graph was given")
        return self.edge_dist


# -- increasing events -------------------------------------------------------


@lru_cache(maxsize=None)
def upsets(n: int) -> tuple[int, ...]:
    """All increasing subsets of ``{0,1}^n`` as ``2**n``-bit masks.

    Splitting on the top coordinate, an up-set is a pair ``A <= B`` of
    up-sets of ``{0,1}^(n-1)`` (the slices at 0 and 1).
    """
    if n == 0:
        return (0, 1)
    lower = upsets(n - 1)
    half = 1 << (n - 1)
    return tuple(a | b << half for b in lower for a in lower if a & ~b == 0)


@lru_cache(maxsize=None)
def upset_matrix(n: int) -> np.ndarray:
    """Indicator matrix, one row per up-set of ``{0,1}^n``."""
    masks = upsets(n)
    cols = np.arange(1 << n)
    return np.array([(m >> cols) & 1 for m in masks], dtype=np.float64).reshape(len(masks), 1 << n)


def _lift(coords, n_total):
    """Map configurations of ``{0,1}^E`` to their restriction index on ``coords``."""
    cs = np.arange(1 << n_total)
    idx = np.zeros(1 << n_total, dtype=np.int64)
    for k, e in enumerate(coords):
        idx |= ((cs >> e) & 1) << k
    return idx


def _pa_defect(probs: np.ndarray, n: int, chunk: int = 1024) -> float:
    U = upset_matrix(n)
    pa = U @ probs
    worst = 0.0
    for s in range(0, len(U), chunk):
        joint = (U[s:s + chunk] * probs) @ U.T
        worst = min(worst, float((joint - np.outer(pa[s:s + chunk], pa)).min()))
    return worst


def check_positive_association(table: JointTable, tol: float = PROB_TOL) -> bool:
    """FKG inequality over every pair of increasing events."""
    table.check_normalised()
    return _pa_defect(table.probs, table.n) >= -tol


def _set_distance(d: np.ndarray, F1, F2) -> float:
    return min(d[a, b] for a in F1 for b in F2)


def _nonempty_subsets(items):
    items = list(items)
    for r in range(1, len(items) + 1):
        yield from itertools.combinations(items, r)


def check_k_independence(table: JointTable, graph: SmallGraph | None, k: int, tol: float = PROB_TOL) -> bool:
    """Independence of every pair of disjoint edge sets at distance ``>= k``."""
    table.check_normalised()
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    d = table.distances(graph)
    E = range(table.n)
    for F1 in _nonempty_subsets(E):
        rest = [e for e in E if e not in F1]
        for F2 in _nonempty_subsets(rest):
            if F1 > F2 or _set_distance(d, F1, F2) < k:
                continue
            joint = table.marginal(F1 + F2)
            m1 = table.marginal(F1)
            m2 = table.marginal(F2)
            if np.abs(joint - np.outer(m2, m1).ravel()).max() > tol:
                return False
    return True


def closure(F, d: np.ndarray, k: int) -> tuple[int, ...]:
    """Edges at distance ``< k`` from ``F`` (``F`` itself when ``k == 0``)."""
    if k == 0 or not F:
        return tuple(sorted(F))
    return tuple(e for e in range(len(d)) if min(d[e, f] for f in F) < k)


def condition_ii_defect(table: JointTable, d: np.ndarray, k: int) -> float:
    """Least value of ``P[A and B] - P[A] P[B]`` over the admissible triples.

    For fixed ``F`` and ``A`` the quantity is a sum over configurations
    ``eta`` outside ``C = cl_k(F)`` of terms that each depend only on the
    slice of ``B`` at ``eta``, an up-set of ``{0,1}^C``; each slice is
    minimised on its own.  ``F`` empty only admits trivial ``A``.
    """
    n = table.n
    probs = table.probs
    worst = 0.0
    for F in _nonempty_subsets(range(n)):
        C = closure(F, d, k)
        R = [e for e in range(n) if e not in C]
        UA = upset_matrix(len(F))[:, _lift(F, n)]          # A indicators on {0,1}^E
        pA = UA @ probs
        # cell (c, eta) of each configuration
        cell = _lift(C, n) + (_lift(R, n) << len(C))
        onehot = np.zeros((1 << n, 1 << n))
        onehot[np.arange(1 << n), cell] = 1.0
        joint = (UA * probs) @ onehot                       # P[A, c, eta]
        cellp = probs @ onehot                              # P[c, eta]
        g = (joint - pA[:, None] * cellp[None, :]).reshape(len(pA), 1 << len(R), 1 << len(C))
        UC = upset_matrix(len(C))
        for s in range(0, len(pA), 256):
            vals = np.einsum("arc,uc->aru", g[s:s + 256], UC)
            total = vals.min(axis=2).sum(axis=1)
            worst = min(worst, float(total.min()))
    return worst


def check_lemma1_condition_ii(table: JointTable, graph: SmallGraph | None, k: int, tol: float = PROB_TOL) -> bool:
    """Correlation inequality between increasing events on ``F`` and events increasing on ``cl_k(F)``."""
    table.check_normalised()
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    return condition_ii_defect(table, table.distances(graph), k) >= -tol


# -- table families ----------------------------------------------------------


def table_from_function(n_edges: int, n_bits: int, fn, q) -> np.ndarray:
    """Law of ``fn(x)`` for ``x`` i.i.d. Bernoulli bits with parameters ``q``."""
    q = np.broadcast_to(np.asarray(q, dtype=float), (n_bits,))
    probs = np.zeros(1 << n_edges)
    for x in range(1 << n_bits):
        wgt = 1.0
        for b in range(n_bits):
            wgt *= q[b] if x >> b & 1 else 1.0 - q[b]
        probs[fn(x)] += wgt
    return probs


def product_table(n_edges: int, p) -> np.ndarray:
    return table_from_function(n_edges, n_edges, lambda x: x, p)


def fully_correlated_table(n_edges: int, p: float) -> np.ndarray:
    return table_from_function(n_edges, 1, lambda x: (1 << n_edges) - 1 if x else 0, p)


def example1_table() -> JointTable:
    """Edge ``{i, j}`` of the 4-cycle open iff ``X_i == X_j`` for fair i.i.d. ``X``.

    Edges are ordered ``{1,2}, {2,3}, {3,4}, {4,1}``.
    """
    g = SmallGraph.cycle(4)

    def fn(x):
        X = [x >> v & 1 for v in range(4)]
        return sum(1 << e for e, (u, v) in enumerate(g.edges) if X[u - 1] == X[v - 1])

    return JointTable([f"{u}{v}" for u, v in g.edges], table_from_function(4, 4, fn, 0.5), g.edge_dist)


def example1_witnesses(table: JointTable | None = None) -> tuple[float, float, float]:
    """``P[{1,2}]``, ``P[{1,2} | {4,1}, {2,3}]``, ``P[{1,2} | {4,1}, {2,3}, not {3,4}]``."""
    t = example1_table() if table is None else table
    e12, e23, e34, e41 = range(4)
    return (t.conditional(e12, {}),
            t.conditional(e12, {e41: 1, e23: 1}),
            t.conditional(e12, {e41: 1, e23: 1, e34: 0}))


def _random_monotone_map(rng, n_edges: int, n_bits: int):
    """Each edge is an OR of ANDs of random latent bit groups (increasing)."""
    clauses = []
    for _ in range(n_edges):
        terms = []
        for _ in range(rng.integers(1, 3)):
            size = rng.integers(1, min(3, n_bits) + 1)
            terms.append(int(sum(1 << int(b) for b in rng.choice(n_bits, size=size, replace=False))))
        clauses.append(terms)

    def fn(x):
        return sum(1 << e for e, terms in enumerate(clauses) if any(x & t == t for t in terms))

    return fn


def random_monotone_table(rng, graph: SmallGraph, n_bits: int = 6, local: bool = False) -> JointTable:
    """Increasing image of i.i.d. bits, hence positively associated.

    With ``local`` set, each edge reads only bits attached to its endpoints,
    which makes the law 1-independent on ``graph``.
    """
    m = len(graph.edges)
    if local:
        verts = list(graph.vertices)
        nb = len(verts)
        vid = {v: i for i, v in enumerate(verts)}
        masks = []
        for u, v in graph.edges:
            own = [vid[u], vid[v]]
            mode = rng.integers(0, 3)
            if mode == 0:
                masks.append([1 << own[0] | 1 << own[1]])
            elif mode == 1:
                masks.append([1 << own[0], 1 << own[1]])
            else:
                masks.append([1 << int(rng.choice(own))])

        def fn(x):
            return sum(1 << e for e, terms in enumerate(masks) if any(x & t == t for t in terms))

        q = rng.uniform(0.2, 0.8, size=nb)
        return JointTable(list(graph.edges), table_from_function(m, nb, fn, q), graph.edge_dist)
    fn = _random_monotone_map(rng, m, n_bits)
    q = rng.uniform(0.2, 0.8, size=n_bits)
    return JointTable(list(graph.edges), table_from_function(m, n_bits, fn, q), graph.edge_dist)


def perturbed_table(rng, base: JointTable, strength: float = 0.3) -> JointTable:
    """Shift mass from the top configuration onto a mixed one (negatively correlating)."""
    probs = base.probs.copy()
    top = len(probs) - 1
    mixed = int(rng.integers(1, top)) if top > 1 else 0
    move = strength * probs[top]
    probs[top] -= move
    probs[mixed] += move
    if base.n >= 2:
        # anticorrelate edges 0 and 1 as well
        a, b = 1, 2
        both = [c for c in range(len(probs)) if c & 3 == 3]
        for c in both:
            m = strength * probs[c]
            probs[c] -= m
            probs[c ^ (a if rng.integers(2) else b)] += m
    return JointTable(base.edges, probs, base.edge_dist)


def generated_tables(seed: int = 0, count: int = 60):
    """Mixed family of tables on graphs with at most four edges.

    Yields ``(table, graph)``; the family contains product, fully
    correlated, local and nonlocal monotone tables, and perturbed tables.
    """
    rng = np.random.default_rng(seed)
    graphs = [SmallGraph.cycle(4), SmallGraph([0, 1, 2, 3], [(0, 1), (1, 2), (2, 3)]),
              SmallGraph([0, 1, 2, 3, 4], [(0, 1), (1, 2), (2, 3), (3, 4)]),
              SmallGraph([0, 1, 2, 3], [(0, 1), (2, 3)]),
              SmallGraph([0, 1, 2, 3, 4, 5], [(0, 1), (2, 3), (4, 5)])]
    for i in range(count):
        g = graphs[i % len(graphs)]
        m = len(g.edges)
        kind = (i // len(graphs)) % 6
        if kind == 0:
            t = JointTable(list(g.edges), product_table(m, rng.uniform(0.1, 0.9, size=m)), g.edge_dist)
        elif kind == 1:
            t = JointTable(list(g.edges), fully_correlated_table(m, rng.uniform(0.2, 0.8)), g.edge_dist)
        elif kind == 2:
            t = random_monotone_table(rng, g, local=True)
        elif kind == 3:
            t = random_monotone_table(rng, g, n_bits=int(rng.integers(3, 7)))
        elif kind == 4:
            t = perturbed_table(rng, random_monotone_table(rng, g, local=True))
        else:
            t = perturbed_table(rng, JointTable(list(g.edges), product_table(m, 0.5), g.edge_dist), 0.5)
        yield t, g


# -- text format ---------------------------------------------------------------


def parse_joint_table(text: str) -> JointTable:
    """Parse the plain-text table format.

    ::

        edges: e1 e2 e3
        dist: 0 2 1
        001 0.25
        ...

    ``dist: i j d`` gives the distance between edges ``i`` and ``j``
    (0-based, symmetric; unspecified distinct pairs are infinite).  In a
    configuration line character ``k`` is the status of edge ``k``.
    Configurations not listed have probability 0.  Lines starting with
    ``#`` are ignored.
    """
    edges = None
    dists = []
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("edges:"):
            edges = line[len("edges:"):].split()
        elif line.startswith("dist:"):
            parts = line[len("dist:"):].split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'dist: i j d'")
            dists.append((int(parts[0]), int(parts[1]), float(parts[2])))
        else:
            parts = line.split()
            if len(parts) != 2 or set(parts[0]) - {"0", "1"}:
                raise ValueError(f"line {lineno}: expected 'bitstring probability', got {raw!r}")
            rows.append((parts[0], float(parts[1]), lineno))
    if edges is None:
        raise ValueError("missing 'edges:' header")
    m = len(edges)
    if m > MAX_TABLE_EDGES:
        raise GuardError(f"tables are limited to {MAX_TABLE_EDGES} edges, got {m}")
    d = np.full((m, m), math.inf)
    np.fill_diagonal(d, 0.0)
    for i, j, v in dists:
        if not (0 <= i < m and 0 <= j < m):
            raise ValueError(f"distance entry ({i}, {j}) refers to a missing edge")
        d[i, j] = d[j, i] = v
    probs = np.zeros(1 << m)
    for bits, v, lineno in rows:
        if len(bits) != m:
            raise ValueError(f"line {lineno}: bitstring has {len(bits)} characters, expected {m}")
        if v < 0:
            raise ValueError(f"line {lineno}: negative probability")
        probs[sum(1 << k for k, ch in enumerate(bits) if ch == "1")] += v
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
    return JointTable(edges, probs / probs.sum(), d)


def format_joint_table(table: JointTable) -> str:
    lines = ["edges: " + " ".join(str(e) for e in table.edges)]
    if table.edge_dist is not None:
        for i in range(table.n):
            for j in range(i + 1, table.n):
                if math.isfinite(table.edge_dist[i, j]):
                    lines.append(f"dist: {i} {j} {table.edge_dist[i, j]:g}")
    for c, v in enumerate(table.probs):
        if v > 0:
            lines.append("".join("1" if c >> k & 1 else "0" for k in range(table.n)) + f" {float(v)!r}")
    return "\n".join(lines) + "\n"


# -- closed-form bounds ------------------------------------------------------


def domination_bound(p: float, delta: int, k: int) -> tuple[float, float]:
    """``(rho(p), sigma(p))`` for maximal degree ``delta`` and range ``k``.

    With ``n = 2 (delta - 1)**k + 1`` and ``1 - p = (1 - p')**n``,
    ``rho(p) = p'**2`` and ``sigma(p) = 1 - rho(1 - p)``.
    """
    if delta < 2 or k < 1:
        raise ValueError(f"need delta >= 2 and k >= 1, got delta={delta}, k={k}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    n = 2 * (delta - 1) ** k + 1

    def rho(x):
        return (1.0 - (1.0 - x) ** (1.0 / n)) ** 2

    return rho(p), 1.0 - rho(1.0 - p)


def branching_bound_formula(n: int, p: float, i: int) -> float:
    """``min(1, (n (n + 1) / 2 * p**2) ** i)``."""
    if n < 1 or i < 0:
        raise ValueError(f"need n >= 1 and i >= 0, got n={n}, i={i}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return min(1.0, (n * (n + 1) / 2 * p * p) ** i)


# -- domination by enumeration of up-sets --------------------------------------


def dominated_by_upsets(a: dict[int, float], b: dict[int, float], width: int, tol: float = 1e-10) -> bool:
    """``a <= b`` iff ``a(U) <= b(U)`` for every up-set ``U`` of the joint support.

    The up-sets are enumerated over the union of the two supports with the
    subset order, so this is limited to small supports.
    """
    pts = sorted(set(a) | set(b))
    if len(pts) > 14:
        raise GuardError("support too large for up-set enumeration")
    above = [[j for j, y in enumerate(pts) if x & ~y == 0] for x in pts]
    n = len(pts)
    va = np.array([a.get(x, 0.0) for x in pts])
    vb = np.array([b.get(x, 0.0) for x in pts])
    for S in range(1 << n):
        closed = all(all(S >> j & 1 for j in above[i]) for i in range(n) if S >> i & 1)
        if not closed:
            continue
        sel = np.array([S >> i & 1 for i in range(n)], dtype=bool)
        if va[sel].sum() > vb[sel].sum() + tol:
            return False
    return True


def coupling_exists(a: dict[int, float], b: dict[int, float], tol: float = 1e-9) -> bool:
    """Search for a monotone coupling of ``a`` and ``b`` by linear programming.

    Variables are the masses of pairs ``(x, y)`` with ``x`` a subset of
    ``y``; marginals must equal ``a`` and ``b``.
    """
    from scipy.optimize import linprog

    xs, ys = sorted(a), sorted(b)
    pairs = [(i, j) for i, x in enumerate(xs) for j, y in enumerate(ys) if x & ~y == 0]
    if not pairs:
        return not any(v > tol for v in a.values())
    A = np.zeros((len(xs) + len(ys), len(pairs)))
    for k, (i, j) in enumerate(pairs):
        A[i, k] = 1.0
        A[len(xs) + j, k] = 1.0
    rhs = np.array([a[x] for x in xs] + [b[y] for y in ys])
    # minimise the marginal violation; zero means a coupling exists
    n = len(pairs)
    m = len(rhs)
    c = np.concatenate([np.zeros(n), np.ones(2 * m)])
    A_eq = np.hstack([A, np.eye(m), -np.eye(m)])
    res = linprog(c, A_eq=A_eq, b_eq=rhs, bounds=(0, None), method="highs")
    return res.status == 0 and res.fun <= tol
