import numpy as np
import pytest

from hardycabello.boxes import CABELLO_MAP, HARDY_MAP, box_arrays
from hardycabello.oracle import TRANSCRIBED_IC_INDEX, OracleResult, sample_max, transcribed_ic
from hardycabello.principles import ic_values
from hardycabello.scenarios import build_problem, case_lr


def test_transcribed_ic_agrees_on_random_boxes(rng):
    p = rng.dirichlet(np.ones(16), size=10_000).reshape(-1, 2, 2, 2, 2)
    np.testing.assert_allclose(transcribed_ic(p), ic_values(p)[:, list(TRANSCRIBED_IC_INDEX)],
                               atol=1e-12, rtol=0)


@pytest.mark.parametrize("dim, linear_map", [(6, HARDY_MAP), (11, CABELLO_MAP)])
def test_transcribed_ic_agrees_on_decompositions(dim, linear_map, rng):
    p = box_arrays(rng.dirichlet(np.ones(dim), size=10_000), linear_map)
    np.testing.assert_allclose(transcribed_ic(p), ic_values(p)[:, list(TRANSCRIBED_IC_INDEX)],
                               atol=1e-12, rtol=0)


def test_ns_without_lr_approaches_one_half():
    res = sample_max("HNA", "NS", case_lr(16), 100_000, seed=1)
    assert res.best_value >= 0.49


def test_ic_without_lr_is_bounded_by_solver_value():
    res = sample_max("HNA", "IC", case_lr(16), 100_000, seed=1)
    assert 0.18 < res.best_value <= (np.sqrt(2) - 1) / 2 + 1e-8


def test_best_point_is_feasible_and_matches_value():
    res = sample_max("CNA", "ML", case_lr(9), 20_000, seed=4)
    prob = build_problem("CNA", "ML", case_lr(9))
    c = np.array(res.best_point)
    assert prob.objective(c) == pytest.approx(res.best_value, abs=1e-15)
    assert prob.inequality_residuals(c).max() <= 1e-12
    A, b = prob.eq_system()
    assert np.abs(A @ c - b).max() <= 1e-6
    assert 0 < res.feasible_fraction <= 1


def test_deterministic_given_seed():
    a = sample_max("HNA", "LO", case_lr(13), 15_000, seed=9)
    b = sample_max("HNA", "LO", case_lr(13), 15_000, seed=9)
    assert a == b
    c = sample_max("HNA", "LO", case_lr(13), 15_000, seed=10)
    assert c.best_value != a.best_value


def test_repeat_runs_match_with_small_batches():
    a = sample_max("HNA", "IC", case_lr(6), 4_000, seed=2, batch_size=1_000)
    b = sample_max("HNA", "IC", case_lr(6), 4_000, seed=2, batch_size=1_000)
    assert a.best_point == b.best_point


def test_none_found_is_distinct_from_zero():
    empty = OracleResult(None, None, 10, 0.0)
    assert not empty.found and empty.describe() == "none found"
    zero = OracleResult(0.0, (1.0,), 10, 1.0)
    assert zero.found and zero.describe() == "0.000000"


def test_zero_optimum_case_is_witnessed():
    res = sample_max("HNA", "IC", case_lr(1), 20_000, seed=1)
    assert res.found
    assert abs(res.best_value) <= 1e-6


def test_requires_positive_samples():
    with pytest.raises(ValueError):
        sample_max("HNA", "NS", case_lr(16), 0)
