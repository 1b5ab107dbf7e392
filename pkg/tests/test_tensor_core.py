import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from tensorpower import (
    ComponentSet,
    Rank1SumTensor,
    build_tensor,
    contract_full,
    contract_vector,
    deflate,
    to_dense,
)
from helpers import dense_loops, loop_contract_full, loop_contract_vector, rand_components, rand_unit


def test_component_set_basic_invariants():
    comps = ComponentSet(vectors=np.eye(3)[:2], weights=np.array([1.0, 2.0]))
    assert comps.d == 3
    assert comps.k == 2
    assert comps.matrix.shape == (3, 2)
    assert not comps.vectors.flags.writeable
    assert not comps.weights.flags.writeable


def test_component_set_rejects_bad_input():
    with pytest.raises(ValueError):
        ComponentSet(vectors=np.eye(2) * 1.001, weights=np.ones(2))
    with pytest.raises(ValueError):
        ComponentSet(vectors=np.eye(3), weights=np.array([1.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        ComponentSet(vectors=np.vstack([np.eye(2), [1.0, 0.0]]), weights=np.ones(3))
    with pytest.raises(ValueError):
        ComponentSet(vectors=np.zeros((0, 4)), weights=np.zeros(0))


def test_component_set_json_round_trip():
    rng = np.random.default_rng(11)
    comps = rand_components(rng, 5, 3, 0.5, 2.0)
    text = comps.dumps()
    again = ComponentSet.loads(text)
    assert_allclose(again.vectors, comps.vectors, rtol=0, atol=0)
    assert_allclose(again.weights, comps.weights, rtol=0, atol=0)
    # deterministic field order in the serialized object
    assert list(json.loads(text)) == ["d", "k", "weights", "vectors"]
    assert again.dumps() == text


def test_build_tensor_identity_construction():
    comps = ComponentSet(vectors=np.eye(2), weights=np.ones(2))
    t = build_tensor(comps)
    assert t.d == 2
    assert_allclose(t.coefficients, [1.0, 1.0])
    single = build_tensor(ComponentSet(vectors=np.eye(3)[:1], weights=np.array([2.0])))
    assert len(single.coefficients) == 1
    assert single.coefficients[0] == 2.0


def test_contract_full_analytic_cases():
    t = build_tensor(ComponentSet(vectors=np.eye(2), weights=np.ones(2)))
    assert contract_full(t, np.array([1.0, 0.0])) == pytest.approx(1.0, abs=1e-15)
    mid = np.array([1.0, 1.0]) / math.sqrt(2.0)
    assert contract_full(t, mid) == pytest.approx(0.5, abs=1e-15)


def test_contract_vector_analytic_cases():
    t = build_tensor(ComponentSet(vectors=np.eye(2), weights=np.ones(2)))
    assert_allclose(contract_vector(t, np.array([1.0, 0.0])), [1.0, 0.0], atol=1e-15)
    mid = np.array([1.0, 1.0]) / math.sqrt(2.0)
    expected = (1.0 / math.sqrt(2.0)) ** 3
    assert_allclose(contract_vector(t, mid), [expected, expected], atol=1e-15)


@pytest.mark.parametrize("d,k,seed", [(2, 1, 0), (3, 2, 1), (4, 3, 2), (5, 4, 3)])
def test_contractions_match_loop_oracle(d, k, seed):
    """Implicit contractions against a quadruple-loop dense evaluation."""
    rng = np.random.default_rng(seed)
    comps = rand_components(rng, d, k, 0.5, 2.0)
    t = build_tensor(comps)
    dense = dense_loops(comps)
    assert_allclose(to_dense(t).entries, dense, atol=1e-12)
    for _ in range(10):
        w = rand_unit(rng, d)
        full = contract_full(t, w)
        ref = loop_contract_full(dense, w)
        assert abs(full - ref) <= 1e-10 * max(1.0, abs(ref))
        vec = contract_vector(t, w)
        assert_allclose(vec, loop_contract_vector(dense, w), atol=1e-10)


def test_contraction_includes_negative_coefficients():
    rng = np.random.default_rng(5)
    comps = rand_components(rng, 4, 2)
    t = deflate(build_tensor(comps), rand_unit(rng, 4), 0.7)
    dense = to_dense(t)
    for _ in range(10):
        w = rand_unit(rng, 4)
        assert contract_full(t, w) == pytest.approx(dense.contract_full(w), rel=1e-10)


@given(st.integers(0, 10_000))
def test_full_equals_w_dot_vector(seed):
    rng = np.random.default_rng(seed)
    comps = rand_components(rng, 6, 3, 0.5, 1.5)
    t = build_tensor(comps)
    w = rand_unit(rng, 6)
    full = contract_full(t, w)
    assert abs(float(w @ contract_vector(t, w)) - full) <= 1e-12 * max(1.0, abs(full))


def test_linearity_in_coefficients():
    rng = np.random.default_rng(7)
    comps = rand_components(rng, 5, 3, 0.5, 1.5)
    t = build_tensor(comps)
    scaled = Rank1SumTensor(
        d=t.d, coefficients=3.0 * np.asarray(t.coefficients), directions=t.directions
    )
    w = rand_unit(rng, 5)
    assert contract_full(scaled, w) == pytest.approx(3.0 * contract_full(t, w), rel=1e-15)


def test_rotation_equivariance():
    rng = np.random.default_rng(13)
    comps = rand_components(rng, 5, 3)
    q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    rotated = ComponentSet(vectors=comps.vectors @ q.T, weights=comps.weights)
    t = build_tensor(comps)
    tr = build_tensor(rotated)
    for _ in range(10):
        w = rand_unit(rng, 5)
        assert contract_full(tr, q @ w) == pytest.approx(contract_full(t, w), abs=1e-10)


def test_deflate_identity_and_exact_cancellation():
    rng = np.random.default_rng(17)
    comps = rand_components(rng, 4, 3, 0.5, 2.0)
    t = build_tensor(comps)
    u_hat = rand_unit(rng, 4)
    lam_hat = 1.3
    deflated = deflate(t, u_hat, lam_hat)
    for _ in range(50):
        w = rand_unit(rng, 4)
        lhs = contract_full(deflated, w)
        rhs = contract_full(t, w) - lam_hat * float(u_hat @ w) ** 4
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))

    ortho = ComponentSet(vectors=np.eye(4)[:2], weights=np.ones(2))
    t2 = deflate(build_tensor(ortho), np.eye(4)[0], 1.0)
    assert contract_full(t2, np.eye(4)[0]) == pytest.approx(0.0, abs=1e-15)

    unchanged = deflate(t, u_hat, 0.0)
    w = rand_unit(rng, 4)
    assert contract_full(unchanged, w) == pytest.approx(contract_full(t, w), rel=1e-15)


def test_to_dense_symmetry_and_cap():
    rng = np.random.default_rng(23)
    t = build_tensor(rand_components(rng, 4, 3))
    entries = to_dense(t).entries
    perm = (2, 0, 3, 1)
    assert_allclose(entries, np.transpose(entries, perm), atol=1e-12)

    single = build_tensor(ComponentSet(vectors=np.eye(2)[:1], weights=np.ones(1)))
    dense = to_dense(single).entries
    expected = np.zeros((2, 2, 2, 2))
    expected[0, 0, 0, 0] = 1.0
    assert_allclose(dense, expected, atol=0)

    big = build_tensor(rand_components(rng, 9, 2))
    with pytest.raises(ValueError):
        to_dense(big)


def test_operation_input_validation():
    t = build_tensor(ComponentSet(vectors=np.eye(3), weights=np.ones(3)))
    with pytest.raises(ValueError):
        contract_full(t, np.array([0.9, 0.0, 0.0]))
    with pytest.raises(ValueError):
        contract_vector(t, np.ones(4) / 2.0)
    with pytest.raises(ValueError):
        deflate(t, np.array([0.5, 0.5, 0.5]), 1.0)
