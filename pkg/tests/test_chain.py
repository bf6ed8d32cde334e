import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from assocperc.chain import (interval_structure, next_bits, next_masks, run_chain, sample_next,
                             survival_batch, transition_prob)
from assocperc.geometry import BoxGeometry, GuardError, LevelSubset, successor_bits
from assocperc.latent import LatentBits, trial_bits


def row(W, geom, p):
    return transition_prob(W, geom, p).by_bits()


def test_empty_row():
    geom = BoxGeometry(3, 1)
    assert row(LevelSubset(4, 0, 0), geom, 0.4) == {0: 1.0}


def test_single_vertex_with_two_successors():
    # odd level of a w = 2 box: column 0 feeds even columns 0 and 1
    geom = BoxGeometry(2, 1)
    r = row(LevelSubset(2, 0b01, 1), geom, 0.5)
    assert r == {0b00: 0.5, 0b01: 0.25, 0b10: 0.0, 0b11: 0.25}


def test_truncated_interval_uses_plain_product():
    # even level of a w = 1 box: both columns share the single odd column
    geom = BoxGeometry(1, 0)
    assert row(LevelSubset(2, 0b11, 0), geom, 0.5) == {0: 0.5, 1: 0.5}


def brute_row(W, geom, p):
    """Law of the monotone rule under i.i.d. bits on the next level."""
    width = geom.level_width(W.level_index + 1)
    out = {}
    for z in range(1 << width):
        k = bin(z).count("1")
        nb = next_bits(W.bits, z, W.level_index, geom)
        out[nb] = out.get(nb, 0.0) + p**k * (1 - p) ** (width - k)
    return out


@pytest.mark.parametrize("w", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("p", [0.2, 0.5, 0.77])
def test_rows_match_monotone_rule(w, p):
    geom = BoxGeometry(w, 1)
    for level in (0, 1):
        for bits in range(1 << geom.level_width(level)):
            W = LevelSubset(geom.level_width(level), bits, level)
            exact = row(W, geom, p)
            brute = brute_row(W, geom, p)
            for k in set(exact) | set(brute):
                assert abs(exact.get(k, 0.0) - brute.get(k, 0.0)) < 1e-12


@pytest.mark.parametrize("w", range(1, 9))
def test_product_structure_over_intervals(w):
    geom = BoxGeometry(w, 1)
    p = 0.37
    for level in (0, 1):
        width = geom.level_width(level)
        for bits in range(1 << width):
            full = row(LevelSubset(width, bits, level), geom, p)
            conv = {0: 1.0}
            for mask, *_ in interval_structure(bits, level, geom):
                part = row(LevelSubset(width, mask, level), geom, p)
                conv = {a | b: x * y for a, x in conv.items() for b, y in part.items()}
            assert conv.keys() == full.keys()
            assert all(abs(conv[k] - full[k]) < 1e-15 for k in full)


def test_rightmost_alone_is_zero_for_full_successor_sets():
    geom = BoxGeometry(6, 1)
    for level in (0, 1):
        width = geom.level_width(level)
        for bits in range(1, 1 << width):
            for mask, length, succ, special in interval_structure(bits, level, geom):
                if bin(succ).count("1") == length + 1:
                    assert special
                    top = 1 << (succ.bit_length() - 1)
                    r = row(LevelSubset(width, mask, level), geom, 0.6)
                    assert r[top] == 0.0


def test_row_support_inside_successors():
    geom = BoxGeometry(5, 0)
    for bits in range(1 << 6):
        W = LevelSubset(6, bits, 0)
        succ = successor_bits(bits, 0, geom)
        assert all(k & ~succ == 0 for k, v in row(W, geom, 0.5).items() if v > 0)


def test_row_guards():
    geom = BoxGeometry(2, 0)
    with pytest.raises(ValueError):
        transition_prob(LevelSubset(3, 1, 0), geom, 1.2)
    with pytest.raises(ValueError):
        transition_prob(LevelSubset(3, 1, geom.top), geom, 0.5)
    wide = BoxGeometry(21, 0)
    with pytest.raises(GuardError):
        transition_prob(LevelSubset(22, 1, 0), wide, 0.5)


def test_sampler_extremes():
    geom = BoxGeometry(4, 2)
    for level in (0, 1):
        width = geom.level_width(level)
        for bits in range(1, 1 << width):
            W = LevelSubset(width, bits, level)
            assert sample_next(W, geom, LatentBits(1, 1.0)).bits == successor_bits(bits, level, geom)
            assert sample_next(W, geom, LatentBits(1, 0.0)).bits == 0


@pytest.mark.parametrize("w", [1, 2, 3, 4, 5, 6])
def test_vectorised_rule_matches_scalar(w):
    geom = BoxGeometry(w, 0)
    for level in (0, 1):
        wl, wn = geom.level_width(level), geom.level_width(level + 1)
        W, Z = np.meshgrid(np.arange(1 << wl, dtype=np.uint64), np.arange(1 << wn, dtype=np.uint64))
        fast = next_masks(W.ravel(), Z.ravel(), level, w)
        slow = [next_bits(int(a), int(b), level, geom) for a, b in zip(W.ravel(), Z.ravel())]
        assert fast.tolist() == slow


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 30), st.integers(0, 1), st.data())
def test_rule_is_monotone_in_bits_and_state(w, level, data):
    geom = BoxGeometry(w, 0)
    wl, wn = geom.level_width(level), geom.level_width(level + 1)
    W = data.draw(st.integers(0, (1 << wl) - 1))
    V = W | data.draw(st.integers(0, (1 << wl) - 1))
    z = data.draw(st.integers(0, (1 << wn) - 1))
    k = data.draw(st.integers(0, wn - 1))
    out = next_bits(W, z, level, geom)
    assert out & ~next_bits(W, z | 1 << k, level, geom) == 0
    assert out & ~successor_bits(V, level, geom) == 0


def test_run_chain_absorbs_and_matches_batch():
    geom = BoxGeometry(4, 3)
    for s in range(200):
        traj = run_chain(geom.full_level(0), geom, LatentBits(s, 0.6))
        assert len(traj) == geom.num_levels
        dead = [i for i, W in enumerate(traj) if not W]
        if dead:
            assert all(not W for W in traj[dead[0]:])
    batch = survival_batch(geom, trial_bits(5, 0, 300, 0.6))
    from assocperc.latent import derive_seed
    scalar = [bool(run_chain(geom.full_level(0), geom, LatentBits(derive_seed(5, k), 0.6))[-1]) for k in range(300)]
    assert batch.tolist() == scalar


def test_run_chain_trivial_cases():
    geom = BoxGeometry(3, 2)
    assert all(not W for W in run_chain(geom.empty_level(0), geom, LatentBits(0, 0.5)))
    assert all(W.bits == geom.level_mask(i) for i, W in enumerate(run_chain(geom.full_level(0), geom, LatentBits(0, 1.0))))


def test_survival_frequency_small_box():
    # exact value p**2 at (w, ell) = (1, 0)
    s = survival_batch(BoxGeometry(1, 0), trial_bits(2024, 0, 10**6, 0.5))
    assert abs(s.mean() - 0.25) < 0.002
