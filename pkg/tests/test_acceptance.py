"""Acceptance criteria, one marked group per criterion.

Criteria 1, 6 and 7 are the slow tier (minutes each); the rest run in
seconds.  A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from assocperc.chain import next_masks, pack_level, transition_prob
from assocperc.couplings import (KINDS, FiniteDistribution, LevelKernel, check_domination,
                                 coupled_masks_eta_vs_x, coupled_masks_x_vs_kernel, kernel_row)
from assocperc.experiments import branching_experiment, mc_survival, tree_moment_bound, tree_moments
from assocperc.geometry import BoxGeometry, LevelSubset
from assocperc.latent import LatentBits, derive_seed, trial_bits
from assocperc.oracle import (SmallGraph, branching_bound_formula, brute_force_survival, check_k_independence,
                              check_lemma1_condition_ii, check_positive_association, coupling_exists,
                              example1_table, example1_witnesses, generated_tables)
from assocperc.renorm import crossing_pair, iterate
from assocperc.transfer import exact_survival

MILLION = 10**6


def intervals(geom, level, max_len):
    width = geom.level_width(level)
    for length in range(1, max_len + 1):
        for start in range(width - length + 1):
            yield LevelSubset(width, ((1 << length) - 1) << start, level)


def tv(counts: dict, row: dict, n: int) -> float:
    keys = set(counts) | set(row)
    return 0.5 * sum(abs(counts.get(k, 0) / n - row.get(k, 0.0)) for k in keys)


def empirical(masks) -> dict:
    vals, cnt = np.unique(np.asarray(masks), return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, cnt)}


# -- 1. exact survival table at w = 20 -------------------------------------------


@pytest.mark.slow
@pytest.mark.criterion(1)
def test_c1_fig5_p077(note):
    q_long, q_square = crossing_pair(0.77, 20)
    note(f"p0=0.77: q_long={q_long:.6f} q_square={q_square:.6f} p1={q_long * q_square:.6f}")
    assert q_long >= 0.8187
    assert q_square >= 0.949
    assert q_long * q_square >= 0.776 > 0.77


@pytest.mark.slow
@pytest.mark.criterion(1)
def test_c1_fig5_p0767(note):
    q_long, q_square = crossing_pair(0.767, 20)
    note(f"p0=0.767: q_long={q_long:.6f} q_square={q_square:.6f} p1={q_long * q_square:.6f}")
    assert q_long < 0.7872
    assert q_square < 0.939
    assert q_long * q_square < 0.74


# -- 2. transfer matrix against enumeration --------------------------------------


@pytest.mark.criterion(2)
def test_c2_oracle_equivalence(note):
    worst = 0.0
    for w in (1, 2):
        for ell in (0, 1, 2):
            for p in (0.2, 0.5, 0.77):
                worst = max(worst, abs(exact_survival(w, ell, p) - brute_force_survival(w, ell, p)))
    note(f"max |dp - enumeration| over 18 cases = {worst:.2e}")
    assert worst <= 1e-12


@pytest.mark.criterion(2)
def test_c2_square_law():
    for k in range(11):
        p = k / 10
        assert abs(exact_survival(1, 0, p) - p * p) <= 1e-12


# -- 3. chain rows and sampler -----------------------------------------------------


@pytest.mark.criterion(3)
def test_c3_row_sums(note):
    worst = 0.0
    count = 0
    for w in range(1, 11):
        geom = BoxGeometry(w, 1)
        for level in (0, 1):
            width = geom.level_width(level)
            if width > 10:
                continue
            for bits in range(1 << width):
                r = transition_prob(LevelSubset(width, bits, level), geom, 0.37)
                vals = np.array(list(r.entries.values()))
                assert np.all((vals >= 0) & (vals <= 1))
                worst = max(worst, abs(r.total() - 1.0))
                count += 1
    note(f"{count} rows, max |sum - 1| = {worst:.1e}")
    assert worst <= 1e-12


@pytest.mark.criterion(3)
def test_c3_rightmost_alone_zero():
    geom = BoxGeometry(7, 1)
    checked = 0
    for level in (0, 1):
        for W in intervals(geom, level, geom.level_width(level)):
            succ = geom.level_mask(level + 1) & sum(
                1 << v for j in W.columns() for v in geom.children(level, j))
            if bin(succ).count("1") == len(W) + 1:
                top = 1 << (succ.bit_length() - 1)
                for p in (0.1, 0.5, 0.9):
                    assert transition_prob(W, geom, p).by_bits()[top] == 0.0
                checked += 1
    assert checked > 0


@pytest.mark.criterion(3)
def test_c3_sampler_law(note):
    geom = BoxGeometry(4, 1)
    worst = 0.0
    for p in (0.5, 0.77):
        bits = trial_bits(31, 0, MILLION, p)
        for level in (0, 1):
            Z = pack_level(bits, level + 1, geom.level_width(level + 1))
            for W in intervals(geom, level, 3):
                out = next_masks(np.full(MILLION, W.bits, dtype=np.uint64), Z, level, geom.w)
                d = tv(empirical(out), transition_prob(W, geom, p).by_bits(), MILLION)
                worst = max(worst, d)
    note(f"max TV(sampler, row) = {worst:.4f}")
    assert worst <= 0.005


# -- 4. couplings ---------------------------------------------------------------------


@pytest.mark.criterion(4)
def test_c4_subset_relations(note):
    geom = BoxGeometry(3, 1)
    p = 0.6
    violations = 0
    trials = 0
    chunk = 250_000
    sources = [W for level in (0, 1) for W in intervals(geom, level, 3)]
    for lo in range(0, MILLION, chunk):
        bits = LatentBits(derive_seed(77, np.arange(lo, lo + chunk, dtype=np.int64)), p)
        for W in sources:
            eta, x = coupled_masks_eta_vs_x(W, geom, bits, p)
            violations += int(np.count_nonzero(eta & ~x))
            for kind in KINDS:
                x, hat = coupled_masks_x_vs_kernel(W, LevelKernel(kind, p), geom, bits)
                violations += int(np.count_nonzero(x & ~hat))
        trials += chunk
    note(f"{violations} violations over {trials} trials x {len(sources)} sources x 5 couplings")
    assert violations == 0


@pytest.mark.criterion(4)
def test_c4_coupling_marginals(note):
    geom = BoxGeometry(3, 1)
    p = 0.5
    W = LevelSubset(4, 0b0110, 0)
    bits = LatentBits(derive_seed(5, np.arange(MILLION, dtype=np.int64)), p)
    eta, x = coupled_masks_eta_vs_x(W, geom, bits, p)
    d_x = tv(empirical(x), transition_prob(W, geom, p).by_bits(), MILLION)
    d_eta = tv(empirical(eta), kernel_row(LevelKernel("pi_pp", p), W, geom), MILLION)
    note(f"TV: x side {d_x:.4f}, eta side {d_eta:.4f}")
    assert d_x <= 0.005 and d_eta <= 0.005


@pytest.mark.criterion(4)
@pytest.mark.parametrize("p", [0.3, 0.5, 0.8])
def test_c4_domination_chain(p):
    geom = BoxGeometry(4, 1)
    for level in (0, 1):
        nxt = geom.level_width(level + 1)
        for W in intervals(geom, level, 4):
            eta = FiniteDistribution.from_dict(nxt, kernel_row(LevelKernel("pi_pp", p), W, geom))
            x = FiniteDistribution.from_dict(nxt, transition_prob(W, geom, p).by_bits())
            hat = FiniteDistribution.from_dict(nxt, kernel_row(LevelKernel("product", p), W, geom))
            assert check_domination(eta, x)
            assert check_domination(x, hat)


# -- 5. correlation inequality equivalence ------------------------------------------------


@pytest.mark.criterion(5)
def test_c5_equivalence(note):
    n = bad = 0
    for table, graph in generated_tables(0, 60):
        assert table.n <= 4
        for k in (0, 1):
            lhs = check_lemma1_condition_ii(table, graph, k)
            rhs = check_positive_association(table) and check_k_independence(table, graph, k)
            bad += lhs != rhs
            n += 1
    note(f"{n} (table, k) cases from 60 tables, {bad} disagreements")
    assert bad == 0


@pytest.mark.criterion(5)
def test_c5_example1(note):
    t = example1_table()
    g = SmallGraph.cycle(4)
    assert check_k_independence(t, g, 1) is True
    assert check_positive_association(t) is False
    assert check_lemma1_condition_ii(t, g, 1) is False
    wit = example1_witnesses(t)
    note(f"witnesses {wit}")
    assert wit == (0.5, 0.5, 0.0)


# -- 6. renormalisation --------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.criterion(6)
def test_c6_escape(note):
    tr = iterate(0.77, 20, 50, 1e-3)
    vals = tr.values
    note(f"p0=0.77 trajectory {[round(v, 6) for v in vals]} -> {tr.verdict}")
    assert tr.verdict == "escapes_to_one"
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 0.999 and len(tr.steps) <= 50


@pytest.mark.slow
@pytest.mark.criterion(6)
def test_c6_contract(note):
    tr = iterate(0.767, 20, 50, 1e-3)
    note(f"p0=0.767: p1={tr.values[1]:.6f} -> {tr.verdict} after {len(tr.steps)} step(s)")
    assert tr.verdict == "contracts" and len(tr.steps) == 1


# -- 7. Monte Carlo at w = 50 ------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.criterion(7)
def test_c7_long(note):
    est = mc_survival(50, 51, 0.77, 10**5, seed=2024, confidence=0.99)
    note(f"long: {est.survivors}/{est.trials}, 99% CI [{est.ci_low:.4f}, {est.ci_high:.4f}]")
    assert est.ci_low >= 0.81


@pytest.mark.slow
@pytest.mark.criterion(7)
def test_c7_square(note):
    est = mc_survival(50, 0, 0.77, 10**5, seed=2024, confidence=0.99)
    note(f"square: {est.survivors}/{est.trials}, 99% CI [{est.ci_low:.4f}, {est.ci_high:.4f}]")
    assert est.ci_low >= 0.94


# -- 8. subcritical branching ------------------------------------------------------------------


@pytest.mark.criterion(8)
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_c8_branching_bound(n, note):
    p = math.sqrt(2) / (n + 1)
    trials = 10**5
    rows = branching_experiment(n, p, 4, trials, seed=100 + n)
    worst = -1.0
    for r in rows[1:]:
        b = branching_bound_formula(n, p, r["i"])
        slack = r["empirical"] - b - 3 * math.sqrt(b * (1 - b) / trials)
        worst = max(worst, slack)
        assert r["empirical"] <= b + 3 * math.sqrt(b * (1 - b) / trials)
    note(f"n={n}: max(empirical - bound - 3se) = {worst:.4f}")


# -- 9. tree moments -----------------------------------------------------------------------------


@pytest.mark.criterion(9)
def test_c9_tree_moments(note):
    rep = tree_moments(2, 0.6, 10, 10**5, seed=9)
    bound = tree_moment_bound(2, 0.6)
    note(f"mean={rep.mean_X:.4f} second={rep.second_moment:.4f} bound+0.1={bound + 0.1:.4f}")
    assert 0.97 <= rep.mean_X <= 1.03
    assert rep.second_moment < bound + 0.1


# -- 10. properties --------------------------------------------------------------------------------


@pytest.mark.criterion(10)
@pytest.mark.parametrize("w,ell", [(4, 3), (10, 2), (14, 0)])
def test_c10_monotone_in_p(w, ell):
    grid = [exact_survival(w, ell, k / 20) for k in range(21)]
    assert all(a <= b for a, b in zip(grid, grid[1:]))


@pytest.mark.criterion(10)
@pytest.mark.parametrize("w", [3, 7, 12])
def test_c10_monotone_in_ell(w):
    vals = [exact_survival(w, ell, 0.75) for ell in range(8)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


@pytest.mark.criterion(10)
def test_c10_strassen_vs_coupling_search(note):
    rng = np.random.default_rng(10)
    outcomes = []
    for _ in range(400):
        width = int(rng.integers(2, 4))
        size = int(rng.integers(1, min(6, 1 << width) + 1))

        def law(size=size, width=width):
            sup = rng.choice(1 << width, size=size, replace=False)
            wts = rng.integers(1, 5, size=size).astype(float)
            return {int(s): float(v) for s, v in zip(sup, wts / wts.sum())}

        a = law()
        if rng.random() < 0.5:
            b = {}
            for x, v in a.items():
                y = x | int(rng.integers(0, 1 << width))
                b[y] = b.get(y, 0.0) + v
        else:
            b = law()
        got = check_domination(FiniteDistribution.from_dict(width, a), FiniteDistribution.from_dict(width, b))
        assert got == coupling_exists(a, b)
        outcomes.append(got)
    note(f"{len(outcomes)} pairs agree ({sum(outcomes)} dominated)")
    assert 0 < sum(outcomes) < len(outcomes)


@pytest.mark.criterion(10)
@pytest.mark.parametrize("argv", [
    ["mc-survival", "--w", "6", "--ell", "3", "--p-sweep", "0.6:0.8:0.1", "--trials", "20000", "--seed", "17"],
    ["exact-survival", "--w", "8", "--ell", "2", "--p", "0.77"],
    ["tree-moments", "--d", "2", "--depth", "6", "--p", "0.7", "--trials", "5000", "--seed", "3"],
])
def test_c10_byte_identical_reruns(argv):
    cmd = [sys.executable, "-m", "assocperc", *argv, "--no-timing"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd + ["--threads", "2"], capture_output=True, check=True).stdout
    assert first == second
    assert json.loads(first)["wall_time_ms"] is None
