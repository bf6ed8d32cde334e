import pytest

from assocperc.renorm import crossing_pair, iterate, renorm_map
from assocperc.transfer import exact_survival


def test_map_is_product_of_crossings():
    w, p = 6, 0.8
    assert renorm_map(p, w) == exact_survival(w, w + 1, p) * exact_survival(w, 0, p)
    assert crossing_pair(p, w) == (exact_survival(w, w + 1, p), exact_survival(w, 0, p))


def test_trivial_values():
    assert renorm_map(1.0, 5) == 1.0
    assert renorm_map(0.0, 5) == 0.0


def test_map_monotone_and_bounded_by_square():
    w = 5
    vals = [renorm_map(k / 20, w) for k in range(21)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    for k in range(21):
        assert renorm_map(k / 20, w) <= exact_survival(w, 0, k / 20)


def test_escape_and_contraction_small_box():
    up = iterate(0.95, 6, 50, 1e-3)
    assert up.verdict == "escapes_to_one"
    vals = up.values
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 1 - 1e-3
    down = iterate(0.6, 6, 50, 1e-3)
    assert down.verdict == "contracts" and len(down.steps) == 1


def test_immediate_escape_at_one():
    tr = iterate(1.0, 4, 1, 1e-3)
    assert tr.verdict == "escapes_to_one"


def test_inconclusive_when_out_of_iterations():
    tr = iterate(0.95, 6, 1, 1e-12)
    assert tr.verdict == "inconclusive" and len(tr.steps) == 1


def test_rows_record_each_step():
    tr = iterate(0.95, 4, 3, 1e-3)
    for row, step in zip(tr.as_rows(), tr.steps):
        assert row["p_next"] == row["q_long"] * row["q_square"]
        assert row["p_n"] == step.p


def test_validation():
    with pytest.raises(ValueError):
        renorm_map(0.5, 0)
    with pytest.raises(ValueError):
        iterate(0.5, 4, 0)
    with pytest.raises(ValueError):
        iterate(1.2, 4)
