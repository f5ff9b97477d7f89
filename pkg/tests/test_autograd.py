import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from chaptering import autograd as ag
from chaptering.errors import AllMasked, DoubleBackward, NonScalarLoss, OddDimension, ShapeMismatch

from oracles import loop_attention, loop_matmul, loop_rope
from primitives import PRIMITIVES


@pytest.mark.parametrize("name", sorted(PRIMITIVES))
def test_primitive_gradients_match_finite_differences(name):
    f, shapes, _ = PRIMITIVES[name]
    for seed in range(3):
        assert ag.grad_check(f, shapes, seed=seed) < 1e-6


def test_matmul_matches_triple_loop():
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal((4, 3)), rng.standard_normal((3, 5))
    np.testing.assert_allclose(ag.matmul(ag.Tensor(a), ag.Tensor(b)).data, loop_matmul(a, b), rtol=1e-12)


def test_attention_matches_row_loop():
    rng = np.random.default_rng(1)
    q, k, v = (rng.standard_normal((6, 4)) for _ in range(3))
    mask = np.tril(np.ones((6, 6), dtype=bool)) | np.eye(6, k=2, dtype=bool)
    out = ag.masked_attention(ag.Tensor(q), ag.Tensor(k), ag.Tensor(v), mask).data
    np.testing.assert_allclose(out, loop_attention(q, k, v, mask), rtol=1e-10, atol=1e-12)


def test_rope_matches_pairwise_rotation():
    x = np.random.default_rng(2).standard_normal((7, 6))
    np.testing.assert_allclose(ag.rope_rotate(ag.Tensor(x)).data, loop_rope(x), rtol=1e-12, atol=1e-12)


def test_rope_scores_depend_on_relative_position_only():
    rng = np.random.default_rng(3)
    q, k = rng.standard_normal(8), rng.standard_normal(8)
    rows = np.zeros((12, 8))

    def score(i, j):
        qs, ks = rows.copy(), rows.copy()
        qs[i], ks[j] = q, k
        return ag.rope_rotate(ag.Tensor(qs)).data[i] @ ag.rope_rotate(ag.Tensor(ks)).data[j]

    assert score(5, 2) == pytest.approx(score(9, 6), rel=1e-10)


def test_rope_rejects_odd_width():
    with pytest.raises(OddDimension):
        ag.rope_rotate(ag.Tensor(np.zeros((3, 5))))


def test_masked_keys_get_exactly_zero_weight():
    rng = np.random.default_rng(4)
    q, k, v = (rng.standard_normal((5, 3)) for _ in range(3))
    mask = np.tril(np.ones((5, 5), dtype=bool))
    base = ag.masked_attention(ag.Tensor(q), ag.Tensor(k), ag.Tensor(v), mask).data
    k2, v2 = k.copy(), v.copy()
    k2[4] += 100.0
    v2[4] -= 7.0
    out = ag.masked_attention(ag.Tensor(q), ag.Tensor(k2), ag.Tensor(v2), mask).data
    assert np.array_equal(out[:4], base[:4])


def test_attention_needs_a_visible_key_per_row():
    q = ag.Tensor(np.zeros((2, 2)))
    with pytest.raises(ShapeMismatch):
        ag.masked_attention(q, q, q, np.array([[True, False], [False, False]]))


def test_backward_rejects_non_scalar_and_second_call():
    x = ag.Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(NonScalarLoss):
        ag.backward(ag.mul(x, 2.0))
    loss = ag.tsum(ag.mul(x, 2.0))
    ag.backward(loss)
    with pytest.raises(DoubleBackward):
        ag.backward(loss)


def test_gradients_accumulate_over_shared_uses_and_reset_per_backward():
    x = ag.Tensor(np.array([1.0, 2.0]), requires_grad=True)
    ag.backward(ag.tsum(ag.add(ag.mul(x, x), x)))
    np.testing.assert_array_equal(x.grad, [3.0, 5.0])
    ag.backward(ag.tsum(x))
    np.testing.assert_array_equal(x.grad, [1.0, 1.0])


def test_constants_build_no_graph():
    out = ag.matmul(ag.Tensor(np.ones((2, 2))), ag.Tensor(np.ones((2, 2))))
    assert out.parents == () and not out.requires_grad


def test_mean_pool_ignores_padding_and_rejects_empty_rows():
    x = np.random.default_rng(5).standard_normal((1, 4, 3))
    valid = np.array([[True, True, False, False]])
    padded = x.copy()
    padded[0, 2:] = 1e6
    a = ag.mean_pool(ag.Tensor(x), valid).data
    b = ag.mean_pool(ag.Tensor(padded), valid).data
    assert np.array_equal(a, b)
    with pytest.raises(AllMasked):
        ag.mean_pool(ag.Tensor(x), np.zeros((1, 4), dtype=bool))


def test_gate_passes_values_and_blocks_gradient():
    x = ag.Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
    y = ag.gate_gradient(x, np.array([[True], [False], [True]]))
    assert np.array_equal(y.data, x.data)
    ag.backward(ag.tsum(ag.mul(y, 3.0)))
    np.testing.assert_array_equal(x.grad, [[3, 3], [0, 0], [3, 3]])


def test_dropout_is_identity_without_generator():
    x = ag.Tensor(np.ones(4))
    assert ag.dropout(x, 0.5, None) is x


def test_weighted_bce_ignores_invalid_positions():
    p = ag.Tensor(np.array([0.9, 0.2, 0.3]))
    full = ag.weighted_bce(p, np.array([1, 0, 1]), valid=np.array([True, True, False])).item()
    expected = -(2 * np.log(0.9) + np.log(0.8)) / 3
    assert full == pytest.approx(expected, rel=1e-12)


def test_weighted_bce_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        ag.weighted_bce(ag.Tensor(np.ones(3) / 2), np.ones(4))


@settings(max_examples=60, deadline=None)
@given(
    p=hnp.arrays(np.float64, 6, elements=st.floats(0.01, 0.99)),
    y=hnp.arrays(np.int64, 6, elements=st.integers(0, 1)),
)
def test_raising_positive_weight_raises_positive_contribution(p, y):
    if not y.any() or y.all():
        return  # with only positives the normalised share is 1 under any weights
    pos = y.astype(bool)

    def positive_share(weights):
        w = np.where(pos, weights[1], weights[0])
        return -(w * np.log(p) * pos).sum() / w.sum()

    # the loss itself equals the weighted mean the share is taken from
    total = ag.weighted_bce(ag.Tensor(p), y, (1.0, 2.0)).item()
    w = np.where(pos, 2.0, 1.0)
    ll = np.where(pos, np.log(p), np.log1p(-p))
    assert total == pytest.approx(-(w * ll).sum() / w.sum(), rel=1e-12)
    assert positive_share((1.0, 2.0)) > positive_share((1.0, 1.0))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(1, 3), st.integers(0, 10_000))
def test_softmax_rows_sum_to_one(n, batch, seed):
    x = np.random.default_rng(seed).standard_normal((batch, n)) * 10
    np.testing.assert_allclose(ag.softmax(ag.Tensor(x)).data.sum(axis=-1), 1.0, rtol=1e-12)


def test_grad_check_detects_a_wrong_backward():
    def broken(ts):
        x = ts[0]
        y = ag._node(x.data**2, (x,), lambda g: (g * x.data,), "broken")  # should be 2x
        return ag.tsum(y)

    assert ag.grad_check(broken, [(4,)]) > 0.1
