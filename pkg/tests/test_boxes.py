import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hardycabello.boxes import (
    CABELLO_DIM,
    CABELLO_VERTEX_LABELS,
    HARDY_DIM,
    HARDY_VERTEX_LABELS,
    PR_BOX,
    InfeasibleParametersError,
    JointBox,
    NSParams,
    SignalingBoxError,
    SimplexError,
    box_arrays,
    cabello_box,
    cabello_ns_params,
    check_box,
    from_ns_params,
    hardy_box,
    hardy_ns_params,
    local_vertex,
    marginals,
    nonlocal_vertex,
    ns_param_arrays,
    to_ns_params,
    vertex_from_label,
    CABELLO_MAP,
    HARDY_MAP,
)


def vertex_sum(labels, c):
    """Reference box: explicit convex combination of vertex boxes."""
    return sum(w * vertex_from_label(lab).p for w, lab in zip(c, labels))


def simplex_points(dim):
    return arrays(np.float64, dim, elements=st.floats(0.0, 1.0)).filter(
        lambda v: v.sum() > 1e-3).map(lambda v: v / v.sum())


# --- vertices ----------------------------------------------------------------

@pytest.mark.parametrize("bits", list(itertools.product((0, 1), repeat=4)))
def test_local_vertex_is_deterministic_and_valid(bits):
    box = local_vertex(*bits)
    assert check_box(box).valid
    assert set(np.unique(box.p)) == {0.0, 1.0}
    al, be, ga, de = bits
    for x, y in itertools.product((0, 1), repeat=2):
        assert box.prob((al * x) ^ be, (ga * y) ^ de, x, y) == 1.0


@pytest.mark.parametrize("bits", list(itertools.product((0, 1), repeat=3)))
def test_nonlocal_vertex_is_valid_with_uniform_marginals(bits):
    box = nonlocal_vertex(*bits)
    assert check_box(box).valid
    m = marginals(box)
    np.testing.assert_allclose(m.pA, 0.5)
    np.testing.assert_allclose(m.pB, 0.5)


def test_pr_box_matrix():
    expected = [[0.5, 0, 0, 0.5], [0.5, 0, 0, 0.5], [0.5, 0, 0, 0.5], [0, 0.5, 0.5, 0]]
    np.testing.assert_array_equal(PR_BOX.as_matrix(), expected)


def test_vertex_bits_are_validated():
    with pytest.raises(ValueError):
        local_vertex(0, 2, 0, 0)


# --- decompositions against the vertex sums --------------------------------------

@pytest.mark.parametrize("i", range(HARDY_DIM))
def test_hardy_unit_vectors_are_the_vertices(i):
    c = np.eye(HARDY_DIM)[i]
    np.testing.assert_array_equal(hardy_box(c).p, vertex_from_label(HARDY_VERTEX_LABELS[i]).p)


@pytest.mark.parametrize("i", range(CABELLO_DIM))
def test_cabello_unit_vectors_are_the_vertices(i):
    c = np.eye(CABELLO_DIM)[i]
    np.testing.assert_array_equal(cabello_box(c).p, vertex_from_label(CABELLO_VERTEX_LABELS[i]).p)


@given(simplex_points(HARDY_DIM))
@settings(max_examples=200, deadline=None)
def test_hardy_box_matches_vertex_sum(c):
    np.testing.assert_allclose(hardy_box(c).p, vertex_sum(HARDY_VERTEX_LABELS, c), atol=1e-14)


@given(simplex_points(CABELLO_DIM))
@settings(max_examples=200, deadline=None)
def test_cabello_box_matches_vertex_sum(c):
    np.testing.assert_allclose(cabello_box(c).p, vertex_sum(CABELLO_VERTEX_LABELS, c), atol=1e-14)


def test_hardy_zeros_and_success_entry(rng):
    c = rng.dirichlet(np.ones(HARDY_DIM))
    box = hardy_box(c)
    assert box.prob(0, 1, 0, 1) == 0.0  # P(01|01)
    assert box.prob(0, 0, 1, 1) == 0.0  # P(00|11)
    assert box.prob(1, 0, 0, 0) == 0.0  # P(10|00)
    assert box.prob(0, 0, 1, 0) == pytest.approx(c[5] / 2)


def test_cabello_zeros_and_q1(rng):
    c = rng.dirichlet(np.ones(CABELLO_DIM))
    box = cabello_box(c)
    assert box.prob(0, 0, 1, 1) == 0.0
    assert box.prob(1, 0, 0, 0) == 0.0
    q1 = c[6] + c[7] + c[8] + c[9] + c[10] / 2
    assert box.prob(0, 1, 0, 1) == pytest.approx(q1)


def test_cabello_extends_hardy(rng):
    c = rng.dirichlet(np.ones(HARDY_DIM))
    np.testing.assert_allclose(cabello_box(np.r_[c, np.zeros(5)]).p, hardy_box(c).p)


def test_delta6_reaches_one_half():
    assert hardy_box(np.eye(6)[5]).prob(0, 0, 1, 0) == 0.5


def test_batched_boxes_match_single(rng):
    cs = rng.dirichlet(np.ones(CABELLO_DIM), size=7)
    batch = box_arrays(cs, CABELLO_MAP)
    for c, p in zip(cs, batch):
        np.testing.assert_allclose(p, cabello_box(c).p, atol=1e-15)
    assert box_arrays(cs[:, :6], HARDY_MAP).shape == (7, 2, 2, 2, 2)


# --- simplex checks --------------------------------------------------------------

@pytest.mark.parametrize("c, match", [
    ([0.5, 0.5, 0, 0, 0], "expected 6"),
    ([0.6, 0.5, 0, 0, 0, 0], "sum"),
    ([1.1, -0.1, 0, 0, 0, 0], "negative"),
    ([np.nan, 1, 0, 0, 0, 0], "finite"),
])
def test_simplex_errors(c, match):
    with pytest.raises(SimplexError, match=match):
        hardy_box(c)


def test_tiny_negatives_are_clipped():
    c = np.array([1.0 + 1e-13, -1e-13, 0, 0, 0, 0])
    assert hardy_box(c).p.min() >= 0.0


# --- validity and NS parameters --------------------------------------------------------

def test_box_is_read_only():
    with pytest.raises(ValueError):
        PR_BOX.p[0, 0, 0, 0] = 1.0


def test_box_shape_is_checked():
    with pytest.raises(ValueError, match="16 entries"):
        JointBox(np.ones(15) / 15)


def test_check_box_flags_signaling_and_normalization():
    m = np.full((4, 4), 0.25)
    m[0] = [0.5, 0.5, 0, 0]  # Alice's x=0 marginal differs between y=0 and y=1
    rep = check_box(JointBox.from_rows(m))
    assert rep.no_signaling == pytest.approx(0.5)
    assert not rep.valid
    m = np.full((4, 4), 0.3)
    assert check_box(JointBox.from_rows(m)).normalization == pytest.approx(0.2)


def test_marginals_reject_signaling_box():
    m = np.full((4, 4), 0.25)
    m[0] = [0.5, 0.5, 0, 0]
    with pytest.raises(SignalingBoxError):
        marginals(JointBox.from_rows(m))


def test_ns_params_round_trip_on_decompositions(rng):
    for _ in range(1000):
        ch = rng.dirichlet(np.ones(HARDY_DIM))
        cc = rng.dirichlet(np.ones(CABELLO_DIM))
        for box, params in ((hardy_box(ch), hardy_ns_params(ch)), (cabello_box(cc), cabello_ns_params(cc))):
            np.testing.assert_allclose(to_ns_params(box).as_array(), params.as_array(), atol=1e-12)
            np.testing.assert_allclose(from_ns_params(params).p, box.p, atol=1e-12)


def test_ns_param_arrays_batched(rng):
    cs = rng.dirichlet(np.ones(HARDY_DIM), size=5)
    arr = ns_param_arrays(box_arrays(cs, HARDY_MAP))
    for c, row in zip(cs, arr):
        np.testing.assert_allclose(row, hardy_ns_params(c).as_array(), atol=1e-15)


def test_from_ns_params_rejects_out_of_band():
    with pytest.raises(InfeasibleParametersError):
        from_ns_params(NSParams(0.9, 0.25, 0.25, 0.25, 0.5, 0.5, 0.5, 0.5))


@given(arrays(np.float64, 8, elements=st.floats(0.0, 1.0)))
@settings(max_examples=300, deadline=None)
def test_in_band_params_give_valid_boxes(raw):
    f1, f2, g1, g2 = raw[4:]
    es = []
    for t, f, g in zip(raw[:4], (f1, f1, f2, f2), (g1, g2, g1, g2)):
        lo, hi = max(0.0, f + g - 1), min(f, g)
        es.append(lo + t * (hi - lo))
    params = NSParams(*es, f1, f2, g1, g2)
    box = from_ns_params(params)
    assert check_box(box).valid
    np.testing.assert_allclose(to_ns_params(box).as_array(), params.as_array(), atol=1e-12)
