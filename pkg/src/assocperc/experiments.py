"""Monte Carlo experiments and table reproduction.

Trial ``k`` of a run with master seed ``s`` always draws its latent bits from
``derive_seed(s, k)``, and batches are fixed slices of the trial range, so
results depend only on ``(seed, trials)`` and not on the thread count.
Sweeps over ``p`` with one seed share their uniforms, which makes survival
indicators monotone in ``p`` trial by trial.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.stats import beta

from .chain import survival_batch
from .couplings import TAG_EDGE, TAG_IN, TAG_OUT
from .geometry import BoxGeometry, GuardError
from .latent import LatentBits, derive_seed, trial_bits
from .oracle import branching_bound_formula
from .renorm import crossing_pair

BATCH = 8192
MAX_BRANCH_N = 6
MAX_BRANCH_I = 6
MAX_TREE_LEAVES = 10**6


def clopper_pearson(k: int, n: int, confidence: float) -> tuple[float, float]:
    """Exact two-sided binomial interval for ``k`` successes in ``n`` trials."""
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    a = 1.0 - confidence
    lo = 0.0 if k == 0 else float(beta.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


def _batches(trials: int, size: int = BATCH):
    return [(s, min(s + size, trials)) for s in range(0, trials, size)]


def _run_batches(fn, trials: int, threads: int):
    spans = _batches(trials)
    if threads <= 1 or len(spans) == 1:
        return [fn(a, b) for a, b in spans]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), spans))


@dataclass
class McEstimate:
    w: int
    ell: int
    p: float
    trials: int
    survivors: int
    point_estimate: float
    ci_low: float
    ci_high: float
    confidence: float
    seed: int

    def as_dict(self) -> dict:
        return asdict(self)


def _check_mc(w, ell, p, trials, confidence):
    if w < 1 or w > 63 or ell < 0:
        raise ValueError(f"need 1 <= w <= 63 and ell >= 0, got w={w}, ell={ell}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")


def survival_indicators(w: int, ell: int, p: float, trials: int, seed: int, threads: int = 1) -> np.ndarray:
    """Per-trial survival flags from the full bottom level."""
    geom = BoxGeometry(w, ell)
    parts = _run_batches(lambda a, b: survival_batch(geom, trial_bits(seed, a, b, p)), trials, threads)
    return np.concatenate(parts)


def mc_survival(w: int, ell: int, p: float, trials: int, seed: int = 0,
                confidence: float = 0.99, threads: int = 1) -> McEstimate:
    """Survival frequency over seeded chains with a Clopper-Pearson interval."""
    _check_mc(w, ell, p, trials, confidence)
    k = int(survival_indicators(w, ell, p, trials, seed, threads).sum())
    lo, hi = clopper_pearson(k, trials, confidence)
    return McEstimate(w, ell, p, trials, k, k / trials, lo, hi, confidence, seed)


# -- subcritical branching on oriented Z^n -----------------------------------


def _level_points(n: int, s: int) -> list[tuple[int, ...]]:
    """Points of the nonnegative orthant of ``Z^n`` with coordinate sum ``s``."""
    pts = []
    for combo in itertools.combinations_with_replacement(range(n), s):
        v = [0] * n
        for c in combo:
            v[c] += 1
        pts.append(tuple(v))
    return pts


def _grandchild_matrix(lower, upper, n):
    index = {v: j for j, v in enumerate(upper)}
    G = np.zeros((len(lower), len(upper)), dtype=np.float32)
    for a, u in enumerate(lower):
        for i in range(n):
            for j in range(i, n):
                v = list(u)
                v[i] += 1
                v[j] += 1
                G[a, index[tuple(v)]] = 1.0
    return G


def branching_experiment(n: int, p: float, i_max: int, trials: int, seed: int = 0,
                         threads: int = 1) -> list[dict]:
    """Nonemptiness of the origin's cluster on even levels ``0, 2, ..., 2 i_max``.

    Even-level vertices carry ``Z_out`` (all outgoing edges) and ``Z_in``
    (all incoming edges), so ``w`` two levels above ``u`` is reached from an
    active ``u`` iff ``Z_out(u) = Z_in(w) = 1``.
    """
    if n < 1 or i_max < 0:
        raise ValueError(f"need n >= 1 and i_max >= 0, got n={n}, i_max={i_max}")
    if n > MAX_BRANCH_N or i_max > MAX_BRANCH_I:
        raise GuardError(f"branching runs are limited to n <= {MAX_BRANCH_N}, i_max <= {MAX_BRANCH_I}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    levels = [_level_points(n, 2 * i) for i in range(i_max + 1)]
    mats = [_grandchild_matrix(levels[i], levels[i + 1], n) for i in range(i_max)]

    def run(a, b):
        seeds = derive_seed(seed, np.arange(a, b, dtype=np.int64))[:, None]
        bits = LatentBits(seeds, p)
        active = np.ones((b - a, 1), dtype=bool)
        counts = [b - a]
        for i in range(i_max):
            out = bits.bernoulli(p, TAG_OUT, 2 * i, np.arange(len(levels[i]))[None, :])
            zin = bits.bernoulli(p, TAG_IN, 2 * i + 2, np.arange(len(levels[i + 1]))[None, :])
            active = (((active & out).astype(np.float32) @ mats[i]) > 0) & zin
            counts.append(int(active.any(axis=1).sum()))
        return counts

    totals = np.sum(_run_batches(run, trials, threads), axis=0)
    return [{"i": i, "level": 2 * i, "nonempty": int(totals[i]), "trials": trials,
             "empirical": float(totals[i] / trials), "bound": branching_bound_formula(n, p, i)}
            for i in range(i_max + 1)]


# -- moments on the d-ary tree -----------------------------------------------


@dataclass
class TreeMomentReport:
    d: int
    p: float
    depth: int
    trials: int
    mean_X: float
    second_moment: float
    kernel: str
    seed: int
    flow: str = "uniform"

    @property
    def stderr_mean(self) -> float:
        var = max(self.second_moment - self.mean_X**2, 0.0)
        return math.sqrt(var / self.trials)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["stderr_mean"] = self.stderr_mean
        return out


def tree_second_moment(d: int, p: float, depth: int) -> float:
    """Exact second moment of the normalised count under the product kernel.

    Two uniform leaves share a path of length ``k`` with probability
    ``(1 - 1/d) d**-k`` (``k < depth``) or ``d**-depth``, and given that the
    pair is connected with probability ``p**(2 depth - k)``.
    """
    r = 1.0 / (d * p)
    return sum((1 - 1 / d) * r**k for k in range(depth)) + r**depth


def tree_moment_bound(d: int, p: float) -> float:
    """Geometric-series bound ``1 / (1 - 1/(d p))`` on the second moment."""
    if d * p <= 1:
        return math.inf
    return 1.0 / (1.0 - 1.0 / (d * p))


def tree_moments(d: int, p: float, depth: int, trials: int, seed: int = 0,
                 kernel: str = "product", threads: int = 1) -> TreeMomentReport:
    """Moments of ``X_n = #(leaves connected to the root) / (d p)**n``.

    ``product`` opens each edge independently.  ``sibling_block`` opens all
    child edges of a vertex at even depth together and edges below odd
    depths independently.  Both have root-to-leaf path probability ``p**n``.
    """
    if d < 2:
        raise ValueError(f"arity must be at least 2, got {d}")
    if depth < 0:
        raise ValueError(f"depth must be nonnegative, got {depth}")
    if d**depth > MAX_TREE_LEAVES:
        raise GuardError(f"tree runs are limited to d**depth <= {MAX_TREE_LEAVES}, got {d}**{depth}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if kernel not in ("product", "sibling_block"):
        raise ValueError(f"tree kernels are 'product' and 'sibling_block', got {kernel!r}")
    scale = (d * p) ** depth
    rows = max(1, (1 << 22) // d**depth)

    def run(a, b):
        s1 = s2 = 0.0
        for lo in range(a, b, rows):
            hi = min(b, lo + rows)
            bits = LatentBits(derive_seed(seed, np.arange(lo, hi, dtype=np.int64))[:, None], p)
            conn = np.ones((hi - lo, 1), dtype=bool)
            for k in range(depth):
                kids = np.arange(d ** (k + 1))[None, :]
                if kernel == "sibling_block" and k % 2 == 0:
                    z = np.repeat(bits.bernoulli(p, TAG_OUT, k, np.arange(d**k)[None, :]), d, axis=1)
                else:
                    z = bits.bernoulli(p, TAG_EDGE, k + 1, kids)
                conn = np.repeat(conn, d, axis=1) & z
            X = conn.sum(axis=1) / scale
            s1 += float(X.sum())
            s2 += float((X * X).sum())
        return s1, s2

    parts = _run_batches(run, trials, threads)
    s1 = sum(a for a, _ in parts)
    s2 = sum(b for _, b in parts)
    return TreeMomentReport(d, p, depth, trials, s1 / trials, s2 / trials, kernel, seed)


# -- table reproduction ------------------------------------------------------

FIG5_P = (0.767, 0.77)
FIG6_P = (0.76, 0.77)


def fig5_rows(w: int = 20, ps=FIG5_P) -> list[dict]:
    rows = []
    for p0 in ps:
        q_long, q_square = crossing_pair(p0, w)
        rows.append({"p0": p0, "q_long": q_long, "q_square": q_square, "p1": q_long * q_square})
    return rows


def fig6_rows(w: int = 50, ps=FIG6_P, trials: int = 10**5, seed: int = 0,
              confidence: float = 0.99, threads: int = 1) -> list[dict]:
    rows = []
    for p0 in ps:
        lg = mc_survival(w, w + 1, p0, trials, seed, confidence, threads)
        sq = mc_survival(w, 0, p0, trials, seed, confidence, threads)
        rows.append({"p0": p0, "q_long": lg.point_estimate, "q_long_low": lg.ci_low,
                     "q_long_high": lg.ci_high, "q_square": sq.point_estimate,
                     "q_square_low": sq.ci_low, "q_square_high": sq.ci_high,
                     "p1": lg.point_estimate * sq.point_estimate,
                     "p1_low": lg.ci_low * sq.ci_low, "p1_high": lg.ci_high * sq.ci_high})
    return rows


def write_rows(rows: list[dict], path: Path, fmt: str, document: dict | None = None):
    """Write ``rows`` as CSV, or ``document`` (defaulting to the rows) as JSON."""
    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            if rows:
                writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
                writer.writeheader()
                writer.writerows(rows)
    elif fmt == "json":
        path.write_text(json.dumps(rows if document is None else document, indent=2, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def reproduce_tables(which: str, out_path, trials: int = 10**5, seed: int = 0,
                     threads: int = 1, w: int | None = None) -> list[dict]:
    """Recompute a survival table and write it as CSV and JSON.

    ``out_path`` names one of the two files; the other gets the sibling
    suffix.  ``fig5`` is exact at ``w = 20``, ``fig6`` is Monte Carlo at
    ``w = 50`` with 99% intervals.
    """
    if which == "fig5":
        rows = fig5_rows(20 if w is None else w)
    elif which == "fig6":
        rows = fig6_rows(50 if w is None else w, trials=trials, seed=seed, threads=threads)
    else:
        raise ValueError(f"unknown table {which!r}; expected 'fig5' or 'fig6'")
    out = Path(out_path)
    stem = out.with_suffix("") if out.suffix in (".csv", ".json") else out
    write_rows(rows, stem.with_suffix(".csv"), "csv")
    write_rows(rows, stem.with_suffix(".json"), "json")
    return rows


# -- built-in verification suites ----------------------------------------------


def _suite_oracle_equivalence():
    from .oracle import brute_force_survival
    from .transfer import exact_survival
    worst = 0.0
    n = 0
    for w in (1, 2):
        for ell in (0, 1, 2):
            for p in (0.2, 0.5, 0.77):
                worst = max(worst, abs(exact_survival(w, ell, p) - brute_force_survival(w, ell, p)))
                n += 1
    return worst <= 1e-12, n, f"max |dp - brute force| = {worst:.3g}"


def _suite_example1():
    from .oracle import (SmallGraph, check_k_independence, check_lemma1_condition_ii,
                         check_positive_association, example1_table, example1_witnesses)
    t = example1_table()
    g = SmallGraph.cycle(4)
    wit = example1_witnesses(t)
    flags = (check_k_independence(t, g, 1), check_positive_association(t), check_lemma1_condition_ii(t, g, 1))
    ok = flags == (True, False, False) and wit == (0.5, 0.5, 0.0)
    return ok, 1, f"1-indep={flags[0]} PA={flags[1]} closure-FKG={flags[2]} witnesses={wit}"


def _suite_lemma1():
    from .oracle import (check_k_independence, check_lemma1_condition_ii, check_positive_association,
                         generated_tables)
    bad = n = 0
    for table, graph in generated_tables(0, 60):
        for k in (0, 1):
            lhs = check_lemma1_condition_ii(table, graph, k)
            rhs = check_positive_association(table) and check_k_independence(table, graph, k)
            bad += lhs != rhs
            n += 1
    return bad == 0, n, f"{bad} disagreements"


def _suite_domination_chain():
    from .chain import transition_prob
    from .couplings import FiniteDistribution, LevelKernel, check_domination, kernel_row
    from .geometry import LevelSubset
    geom = BoxGeometry(4, 1)
    bad = n = 0
    for level in (0, 1):
        width = geom.level_width(level)
        nxt = geom.level_width(level + 1)
        for start in range(width):
            for length in range(1, min(4, width - start) + 1):
                W = LevelSubset(width, ((1 << length) - 1) << start, level)
                for p in (0.3, 0.5, 0.8):
                    eta = FiniteDistribution.from_dict(nxt, kernel_row(LevelKernel("pi_pp", p), W, geom))
                    x = FiniteDistribution.from_dict(nxt, transition_prob(W, geom, p).by_bits())
                    hat = FiniteDistribution.from_dict(nxt, kernel_row(LevelKernel("product", p), W, geom))
                    bad += not (check_domination(eta, x) and check_domination(x, hat))
                    n += 1
    return bad == 0, n, f"{bad} failed chains"


SUITES = {
    "oracle_equivalence": _suite_oracle_equivalence,
    "example1": _suite_example1,
    "lemma1_equivalence": _suite_lemma1,
    "domination_chain": _suite_domination_chain,
}


def verification_suites(names=None) -> list[dict]:
    """Run the built-in exhaustive checks; one row per suite."""
    rows = []
    for name in names or SUITES:
        ok, n, detail = SUITES[name]()
        rows.append({"suite": name, "passed": bool(ok), "cases": n, "detail": detail})
    return rows
