"""Group partitions, grouped designs and the l0(l2) objective.

Signals are plain 1-d numpy arrays of length ``p``; the partition carried by a
:class:`GroupedDesign` says how to cut them into blocks. Group indices are
0-based throughout.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "InvalidPartitionError",
    "RankDeficientGroupError",
    "GroupPartition",
    "GroupedDesign",
    "build_partition",
    "partition_from_labels",
    "prepare_design",
    "make_active",
    "transform_primal",
    "transform_dual",
    "group_norms",
    "group_norm",
    "group_support",
    "sparsity_report",
    "objective",
]

UNIT_COLUMN_TOL = 1e-8


class InvalidPartitionError(ValueError):
    pass


class RankDeficientGroupError(ValueError):
    def __init__(self, group, min_eig, tol):
        self.group = group
        super().__init__(
            f"group {group} is rank deficient: smallest gram eigenvalue "
            f"{min_eig:.3e} <= {tol:.3e}"
        )


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GroupPartition:
    """Contiguous, non-overlapping groups covering ``range(p)``."""

    sizes: np.ndarray
    offsets: np.ndarray = field(init=False)

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=np.intp)
        if sizes.ndim != 1 or sizes.size == 0:
            raise InvalidPartitionError("partition needs at least one group")
        if np.any(sizes < 1):
            raise InvalidPartitionError("group sizes must be positive")
        offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        object.__setattr__(self, "sizes", _frozen(sizes))
        object.__setattr__(self, "offsets", _frozen(offsets))
        # per-size index tables used for batched block operations
        classes = {}
        for s in np.unique(sizes):
            gids = np.flatnonzero(sizes == s)
            cols = offsets[gids, None] + np.arange(s)[None, :]
            classes[int(s)] = (_frozen(gids), _frozen(cols))
        object.__setattr__(self, "_classes", classes)

    @property
    def p(self) -> int:
        return int(self.sizes.sum())

    @property
    def n_groups(self) -> int:
        return int(self.sizes.size)

    @property
    def s_max(self) -> int:
        return int(self.sizes.max())

    def indices(self, i: int) -> np.ndarray:
        """Column indices of group ``i``."""
        o = self.offsets[i]
        return np.arange(o, o + self.sizes[i])

    def columns(self, groups: Iterable[int]) -> np.ndarray:
        """Concatenated column indices of ``groups`` (in the given order)."""
        groups = list(groups)
        if not groups:
            return np.zeros(0, dtype=np.intp)
        return np.concatenate([self.indices(i) for i in groups])

    def block(self, x: np.ndarray, i: int) -> np.ndarray:
        o = self.offsets[i]
        return x[o:o + self.sizes[i]]

    def size_classes(self):
        """Yield ``(size, group_ids, column_table)`` for each distinct group size."""
        for s, (gids, cols) in self._classes.items():
            yield s, gids, cols

    def __eq__(self, other):
        return isinstance(other, GroupPartition) and np.array_equal(self.sizes, other.sizes)

    def __hash__(self):
        return hash(tuple(self.sizes.tolist()))

    def __repr__(self):
        return f"GroupPartition(p={self.p}, n_groups={self.n_groups}, s_max={self.s_max})"


def build_partition(sizes: Sequence[int]) -> GroupPartition:
    """Contiguous partition with the given group sizes."""
    sizes = list(sizes)
    if not sizes:
        raise InvalidPartitionError("empty size list")
    if any(int(s) != s for s in sizes):
        raise InvalidPartitionError("group sizes must be integers")
    return GroupPartition(np.asarray(sizes, dtype=np.intp))


def partition_from_labels(labels: Sequence[int]):
    """Build a contiguous partition from per-column group labels.

    Returns ``(partition, order)`` where ``order`` is the column permutation
    that makes groups contiguous: ``matrix[:, order]`` is laid out according
    to ``partition``. Groups appear in increasing label order and columns keep
    their relative order within a group.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise InvalidPartitionError("labels must be a non-empty 1-d sequence")
    order = np.argsort(labels, kind="stable")
    _, sizes = np.unique(labels, return_counts=True)
    return build_partition(sizes.tolist()), order


@dataclass(frozen=True, eq=False)
class GroupedDesign:
    """Design matrix with per-group square-root factors of the group grams.

    ``group_factor[i]`` is ``(Psi_Gi^t Psi_Gi)^{1/2}`` and ``group_factor_inv[i]``
    its inverse; both come from the same symmetric eigendecomposition.
    ``column_order`` is set when the design was permuted to make groups
    contiguous; use :meth:`to_original` to map signals back.
    """

    matrix: np.ndarray
    partition: GroupPartition
    group_factor: tuple
    group_factor_inv: tuple
    rank_tol: float
    column_norm_tol: float = UNIT_COLUMN_TOL
    column_order: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def p(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_groups(self) -> int:
        return self.partition.n_groups

    def group_matrix(self, i: int) -> np.ndarray:
        o = self.partition.offsets[i]
        return self.matrix[:, o:o + self.partition.sizes[i]]

    def stacked_factors(self, size: int, inverse: bool = False) -> np.ndarray:
        """Factors of all groups with the given size as a ``(k, s, s)`` array."""
        cache = self._inv_stacks if inverse else self._stacks
        return cache[size]

    def __post_init__(self):
        stacks, inv_stacks = {}, {}
        for s, gids, _ in self.partition.size_classes():
            stacks[s] = _frozen(np.stack([self.group_factor[g] for g in gids]))
            inv_stacks[s] = _frozen(np.stack([self.group_factor_inv[g] for g in gids]))
        object.__setattr__(self, "_stacks", stacks)
        object.__setattr__(self, "_inv_stacks", inv_stacks)

    def to_original(self, x: np.ndarray) -> np.ndarray:
        """Map a signal in grouped (contiguous) order back to input column order."""
        if self.column_order is None:
            return np.array(x, copy=True)
        out = np.empty_like(x)
        out[self.column_order] = x
        return out

    def from_original(self, x: np.ndarray) -> np.ndarray:
        if self.column_order is None:
            return np.array(x, copy=True)
        return np.asarray(x)[self.column_order]


def prepare_design(matrix, partition: GroupPartition, rank_tol: float | None = None,
                   column_order=None, check_unit_columns: bool = True,
                   column_norm_tol: float = UNIT_COLUMN_TOL) -> GroupedDesign:
    """Compute the group square-root factors of ``matrix``.

    Parameters
    ----------
    matrix : (n, p) array
        Design matrix. If ``column_order`` is given the matrix is in original
        column order and gets permuted to the contiguous layout of ``partition``.
    partition : GroupPartition
    rank_tol : float, optional
        A group is rejected when the smallest eigenvalue of its gram matrix is
        ``<= rank_tol**2``. Defaults to ``1e-8`` times the square root of the
        largest gram eigenvalue of that group, i.e. a relative tolerance on the
        singular values of the group.
    check_unit_columns : bool
        Warn (never raise) when columns deviate from unit length.

    Raises
    ------
    RankDeficientGroupError
        If some group does not have full column rank.
    """
    A = np.array(matrix, dtype=float)
    if A.ndim != 2:
        raise ValueError("design matrix must be 2-d")
    if column_order is not None:
        column_order = _frozen(np.asarray(column_order, dtype=np.intp))
        A = A[:, column_order]
    if A.shape[1] != partition.p:
        raise ValueError(f"matrix has {A.shape[1]} columns, partition expects {partition.p}")
    if A.shape[0] < partition.s_max:
        raise ValueError("need n >= largest group size for full column rank groups")
    if check_unit_columns:
        norms = np.linalg.norm(A, axis=0)
        dev = np.max(np.abs(norms - 1.0))
        if dev > column_norm_tol:
            warnings.warn(
                f"design columns are not unit length (max deviation {dev:.2e})",
                stacklevel=2,
            )

    factors = [None] * partition.n_groups
    inverses = [None] * partition.n_groups
    for s, gids, cols in partition.size_classes():
        blocks = A[:, cols]                                  # (n, k, s)
        grams = np.einsum("nki,nkj->kij", blocks, blocks)
        grams = 0.5 * (grams + grams.transpose(0, 2, 1))
        w, V = np.linalg.eigh(grams)                         # ascending
        if rank_tol is None:
            tol2 = (1e-8) ** 2 * w[:, -1]
        else:
            tol2 = np.full(len(gids), float(rank_tol) ** 2)
        bad = np.flatnonzero(w[:, 0] <= tol2)
        if bad.size:
            k = bad[0]
            raise RankDeficientGroupError(int(gids[k]), float(w[k, 0]), float(tol2[k]))
        root = np.sqrt(w)
        F = np.einsum("kij,kj,klj->kil", V, root, V)
        Finv = np.einsum("kij,kj,klj->kil", V, 1.0 / root, V)
        for k, g in enumerate(gids):
            factors[g] = _frozen(F[k])
            inverses[g] = _frozen(Finv[k])

    A.setflags(write=False)
    return GroupedDesign(
        matrix=A,
        partition=partition,
        group_factor=tuple(factors),
        group_factor_inv=tuple(inverses),
        rank_tol=float("nan") if rank_tol is None else float(rank_tol),
        column_norm_tol=column_norm_tol,
        column_order=column_order,
    )


def make_active(members, n_groups: int) -> tuple:
    """Validated, sorted, duplicate-free tuple of group indices."""
    out = sorted(int(i) for i in members)
    if len(set(out)) != len(out):
        raise ValueError("duplicate group index in active set")
    if out and (out[0] < 0 or out[-1] >= n_groups):
        raise ValueError(f"group index out of range [0, {n_groups})")
    return tuple(out)


def _check_signal(design, v):
    v = np.asarray(v, dtype=float)
    if v.shape != (design.p,):
        raise ValueError(f"signal has shape {v.shape}, expected ({design.p},)")
    return v


def _apply_blockwise(design, v, inverse):
    out = np.empty_like(v)
    for s, _, cols in design.partition.size_classes():
        F = design.stacked_factors(s, inverse=inverse)
        out[cols] = np.einsum("kij,kj->ki", F, v[cols])
    return out


def transform_primal(design: GroupedDesign, x) -> np.ndarray:
    """Per group ``x_bar_Gi = Psi_bar_Gi x_Gi``."""
    return _apply_blockwise(design, _check_signal(design, x), inverse=False)


def transform_dual(design: GroupedDesign, d) -> np.ndarray:
    """Per group ``d_bar_Gi = Psi_bar_Gi^{-1} d_Gi``."""
    return _apply_blockwise(design, _check_signal(design, d), inverse=True)


def group_norms(x, partition: GroupPartition, q: float = 2.0) -> np.ndarray:
    """Vector of per-group l^q norms."""
    if q <= 0:
        raise ValueError("q must be positive")
    x = np.asarray(x, dtype=float)
    if x.shape != (partition.p,):
        raise ValueError(f"signal has shape {x.shape}, expected ({partition.p},)")
    out = np.empty(partition.n_groups)
    for _, gids, cols in partition.size_classes():
        blocks = np.abs(x[cols])
        if q == 2:
            out[gids] = np.sqrt(np.einsum("ki,ki->k", blocks, blocks))
        elif np.isinf(q):
            out[gids] = blocks.max(axis=1)
        else:
            out[gids] = np.sum(blocks ** q, axis=1) ** (1.0 / q)
    return out


def group_norm(x, partition: GroupPartition, r: float = 0, q: float = 2.0) -> float:
    """The l^r(l^q) group penalty.

    ``r = 0`` counts groups whose l^q norm is exactly nonzero, ``r = inf`` gives
    the largest group norm, otherwise ``(sum_i ||x_Gi||_q^r)^(1/r)``.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    norms = group_norms(x, partition, q)
    if r == 0:
        return int(np.count_nonzero(norms != 0.0))
    if np.isinf(r):
        return float(norms.max())
    return float(np.sum(norms ** r) ** (1.0 / r))


def group_support(x, partition: GroupPartition, tol: float = 0.0) -> tuple:
    """Groups whose l2 norm exceeds ``tol`` (exact nonzero test for ``tol=0``)."""
    norms = group_norms(x, partition)
    return tuple(int(i) for i in np.flatnonzero(norms > tol))


def sparsity_report(x, partition: GroupPartition, tol: float = 1e-12) -> dict:
    """Group sparsity of a signal that may carry round-off instead of exact zeros."""
    norms = group_norms(x, partition)
    support = np.flatnonzero(norms > tol)
    return {
        "n_groups": partition.n_groups,
        "n_active": int(support.size),
        "n_exact_nonzero": int(np.count_nonzero(norms != 0.0)),
        "support": tuple(int(i) for i in support),
        "tol": tol,
    }


def objective(design: GroupedDesign, y, x, lam: float) -> float:
    """``0.5 * ||Psi x - y||^2 + lam * ||x||_{l0(l2)}``."""
    x = _check_signal(design, x)
    y = np.asarray(y, dtype=float)
    if y.shape != (design.n,):
        raise ValueError(f"data has shape {y.shape}, expected ({design.n},)")
    r = design.matrix @ x - y
    return 0.5 * float(r @ r) + lam * group_norm(x, design.partition, 0, 2)
