import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_design, random_nonsingular
from groupl0.groups import (
    InvalidPartitionError,
    RankDeficientGroupError,
    build_partition,
    group_norm,
    group_support,
    make_active,
    objective,
    partition_from_labels,
    prepare_design,
    sparsity_report,
    transform_dual,
    transform_primal,
)
from groupl0.harness import GenParams, correlate_groups, generate_instance


def test_build_partition_basic():
    part = build_partition([2, 2])
    assert part.p == 4
    assert part.offsets.tolist() == [0, 2]
    assert part.n_groups == 2


def test_scalar_groups():
    part = build_partition([1, 1, 1])
    assert part.p == 3 and part.s_max == 1
    x = np.array([0.0, 2.0, -1.0])
    assert group_norm(x, part, 0, 2) == np.count_nonzero(x)


def test_large_partition():
    part = build_partition([3] * 4096)
    assert part.p == 12288
    assert part.offsets[-1] == 12285


@pytest.mark.parametrize("sizes", [[], [2, 0], [1, -1]])
def test_invalid_partition(sizes):
    with pytest.raises(InvalidPartitionError):
        build_partition(sizes)


def test_partition_from_labels_roundtrip(rng):
    labels = np.array([2, 0, 1, 0, 2, 2, 1])
    part, order = partition_from_labels(labels)
    assert part.sizes.tolist() == [2, 2, 3]
    A = rng.standard_normal((10, 7))
    A /= np.linalg.norm(A, axis=0)
    design = prepare_design(A, part, column_order=order)
    assert np.array_equal(design.matrix, A[:, order])
    x = rng.standard_normal(7)
    assert np.array_equal(design.to_original(design.from_original(x)), x)
    # fitted values agree regardless of layout
    assert np.allclose(design.matrix @ design.from_original(x), A @ x)


def test_orthonormal_group_factor_is_identity(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((12, 6)))
    design = prepare_design(Q, build_partition([3, 3]))
    for F, Finv in zip(design.group_factor, design.group_factor_inv):
        assert np.allclose(F, np.eye(3), atol=1e-12)
        assert np.allclose(Finv, np.eye(3), atol=1e-12)


def test_duplicated_column_is_rank_deficient(rng):
    c = rng.standard_normal(8)
    c /= np.linalg.norm(c)
    other = rng.standard_normal((8, 2))
    other /= np.linalg.norm(other, axis=0)
    A = np.column_stack([other, c, c])
    with pytest.raises(RankDeficientGroupError) as exc:
        prepare_design(A, build_partition([2, 2]))
    assert exc.value.group == 1


def test_factor_squares_to_gram_on_correlated_group(rng):
    raw = rng.standard_normal((10, 4))
    A = correlate_groups(raw, 4, 3.0)
    A /= np.linalg.norm(A, axis=0)
    design = prepare_design(A, build_partition([4]))
    F, Finv = design.group_factor[0], design.group_factor_inv[0]
    gram = A.T @ A
    assert np.linalg.norm(F @ F - gram) <= 1e-10 * np.linalg.norm(gram)
    assert np.allclose(F, F.T, atol=1e-14)
    assert np.linalg.norm(Finv @ F - np.eye(4)) <= 1e-10


def test_non_unit_columns_warn(rng):
    A = 3 * rng.standard_normal((6, 4))
    with pytest.warns(UserWarning, match="unit length"):
        prepare_design(A, build_partition([2, 2]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        prepare_design(A / np.linalg.norm(A, axis=0), build_partition([2, 2]))


def test_shape_errors(rng):
    with pytest.raises(ValueError):
        prepare_design(rng.standard_normal((5, 5)), build_partition([2, 2]))
    design = random_design(rng, 6, [2, 2])
    with pytest.raises(ValueError):
        transform_primal(design, np.zeros(5))
    with pytest.raises(ValueError):
        objective(design, np.zeros(5), np.zeros(4), 1.0)


def test_transforms_orthonormal_and_zero(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((12, 6)))
    design = prepare_design(Q, build_partition([3, 3]))
    x = rng.standard_normal(6)
    assert np.allclose(transform_primal(design, x), x)
    assert np.allclose(transform_dual(design, x), x)
    assert np.array_equal(transform_primal(design, np.zeros(6)), np.zeros(6))


def test_transform_roundtrip_and_isometry(rng):
    design = generate_instance(GenParams(30, 40, 10, 2, 4, theta=3.0, seed=1)).design
    v = rng.standard_normal(40)
    # Psi_bar^{-1} (Psi_bar v) = v
    assert np.allclose(transform_dual(design, transform_primal(design, v)), v, rtol=1e-10, atol=1e-10)
    for i in range(design.n_groups):
        w = rng.standard_normal(4)
        lhs = np.linalg.norm(design.group_matrix(i) @ design.group_factor_inv[i] @ w)
        assert abs(lhs - np.linalg.norm(w)) <= 1e-10 * np.linalg.norm(w)


def test_group_norm_closed_forms():
    part = build_partition([2, 2])
    x = np.array([3.0, 4.0, 0.0, 0.0])
    assert group_norm(x, part, 0, 2) == 1
    assert group_norm(x, part, np.inf, 2) == 5.0
    assert group_norm(x, part, 2, 2) == pytest.approx(5.0)
    for r in (0, 1, 2, np.inf):
        assert group_norm(np.zeros(4), part, r, 2) == 0
    with pytest.raises(ValueError):
        group_norm(x, part, 1, 0)


def test_group_norm_r_equals_q_is_plain_norm(rng):
    part = build_partition([3, 1, 2, 4])
    for _ in range(20):
        x = rng.standard_normal(10)
        assert group_norm(x, part, 1, 1) == pytest.approx(np.sum(np.abs(x)), rel=1e-12)
        assert group_norm(x, part, 2, 2) == pytest.approx(np.linalg.norm(x), rel=1e-12)
        assert group_norm(x, part, 3, 3) == pytest.approx(np.sum(np.abs(x) ** 3) ** (1 / 3), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), mask=st.lists(st.booleans(), min_size=5, max_size=5))
def test_penalty_invariant_under_group_transforms(seed, mask):
    rng = np.random.default_rng(seed)
    part = build_partition([3, 2, 4, 1, 3])
    x = rng.standard_normal(part.p)
    for i, keep in enumerate(mask):
        if not keep:
            x[part.indices(i)] = 0.0
    y = x.copy()
    for i in range(part.n_groups):
        idx = part.indices(i)
        y[idx] = random_nonsingular(rng, idx.size) @ x[idx]
    assert group_norm(y, part, 0, 2) == group_norm(x, part, 0, 2) == sum(mask)


def test_objective_values(rng):
    inst = generate_instance(GenParams(20, 40, 10, 3, 4, sigma=0.0, seed=3))
    d, y = inst.design, inst.y
    assert objective(d, y, np.zeros(40), 0.7) == pytest.approx(0.5 * y @ y)
    assert objective(d, y, inst.x_true, 0.7) == pytest.approx(0.7 * 3, abs=1e-12)
    x = rng.standard_normal(40)
    x[d.partition.columns([0, 5])] = 0.0
    lam = 0.37
    resid = sum((sum(d.matrix[k, j] * x[j] for j in range(40)) - y[k]) ** 2 for k in range(20))
    count = sum(1 for i in range(10) if any(x[j] != 0 for j in d.partition.indices(i)))
    assert objective(d, y, x, lam) == pytest.approx(0.5 * resid + lam * count, rel=1e-12)


def test_support_helpers():
    part = build_partition([2, 2, 2])
    x = np.array([0.0, 1e-14, 1.0, 0.0, 0.0, 0.0])
    assert group_support(x, part) == (0, 1)
    rep = sparsity_report(x, part)
    assert rep["support"] == (1,) and rep["n_exact_nonzero"] == 2


def test_make_active():
    assert make_active([3, 1], 5) == (1, 3)
    with pytest.raises(ValueError):
        make_active([1, 1], 5)
    with pytest.raises(ValueError):
        make_active([5], 5)


def test_design_is_immutable(rng):
    design = random_design(rng, 6, [2, 2])
    with pytest.raises(ValueError):
        design.matrix[0, 0] = 1.0
    with pytest.raises(ValueError):
        design.group_factor[0][0, 0] = 1.0
