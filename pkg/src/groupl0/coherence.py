"""Mutual coherence and blockwise mutual coherence (BMC).

The BMC between groups ``i`` and ``j`` is the cosine of the smallest principal
angle between the column spans of ``Psi_Gi`` and ``Psi_Gj``. With orthonormal
bases ``U_i``, ``U_j`` (thin QR) it is the largest singular value of
``U_i^t U_j``.

The pairwise loop is O(N^2) small SVDs; it is done in row chunks so memory stays
bounded by ``chunk * s_max * p`` floats.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .groups import GroupedDesign

__all__ = [
    "CoherenceReport",
    "mutual_coherence",
    "orthonormal_bases",
    "pair_coherence",
    "pairwise_coherence",
    "bmc",
    "cross_gram",
    "check_assumption",
    "max_admissible_sparsity",
    "bmc_bound_from_mc",
]


@dataclass(frozen=True)
class CoherenceReport:
    mc: float
    bmc: float
    pairwise: np.ndarray
    assumption_T_max: int | None
    zero_bmc: bool

    def to_dict(self) -> dict:
        return {"mc": self.mc, "bmc": self.bmc, "assumption_T_max": self.assumption_T_max,
                "zero_bmc": self.zero_bmc}


def mutual_coherence(matrix) -> float:
    """``max_{i != j} |<psi_i, psi_j>|`` over unit-normalized columns."""
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[1] < 2:
        raise ValueError("mutual coherence needs at least two columns")
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ValueError("zero column")
    if np.max(np.abs(norms - 1.0)) > 1e-8:
        warnings.warn("columns are not unit length; normalizing", stacklevel=2)
        A = A / norms
    G = np.abs(A.T @ A)
    np.fill_diagonal(G, 0.0)
    return float(min(G.max(), 1.0))


def orthonormal_bases(design: GroupedDesign) -> np.ndarray:
    """``(n, p)`` matrix whose group blocks are orthonormal bases of each group span."""
    Q = np.empty_like(design.matrix)
    for _, _, cols in design.partition.size_classes():
        blocks = design.matrix[:, cols].transpose(1, 0, 2)       # (k, n, s)
        q, _ = np.linalg.qr(blocks)
        Q[:, cols] = q.transpose(1, 0, 2)
    return Q


def _sigma_max(M):
    return float(np.linalg.svd(M, compute_uv=False)[0])


def pair_coherence(design: GroupedDesign, i: int, j: int) -> float:
    """Cosine of the first principal angle between spans of groups ``i`` and ``j``.

    ``i == j`` returns 1 by convention.
    """
    N = design.n_groups
    if not (0 <= i < N and 0 <= j < N):
        raise IndexError("group index out of range")
    if i == j:
        return 1.0
    Ui, _ = np.linalg.qr(design.group_matrix(i))
    Uj, _ = np.linalg.qr(design.group_matrix(j))
    return min(_sigma_max(Ui.T @ Uj), 1.0)


def pairwise_coherence(design: GroupedDesign, chunk: int = 256) -> np.ndarray:
    """Symmetric ``(N, N)`` matrix of ``mu_ij`` with unit diagonal."""
    part = design.partition
    N = part.n_groups
    Q = orthonormal_bases(design)
    out = np.ones((N, N))
    if len(set(part.sizes.tolist())) == 1:
        s = int(part.sizes[0])
        for a in range(0, N, chunk):
            b = min(a + chunk, N)
            C = Q[:, a * s:b * s].T @ Q                          # (b-a)s x p
            C = C.reshape(b - a, s, N, s).transpose(0, 2, 1, 3)
            out[a:b] = np.linalg.svd(C, compute_uv=False)[..., 0]
    else:
        bases = [Q[:, part.indices(i)] for i in range(N)]
        for i in range(N):
            for j in range(i + 1, N):
                out[i, j] = out[j, i] = _sigma_max(bases[i].T @ bases[j])
    np.clip(out, 0.0, 1.0, out=out)
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return out


def max_admissible_sparsity(mu: float) -> int | None:
    """Largest ``T >= 0`` with ``mu < 1/(3T)``; ``None`` when ``mu == 0`` (unbounded)."""
    if mu <= 0:
        return None
    T = math.ceil(1.0 / (3.0 * mu)) - 1
    while T > 0 and not mu < 1.0 / (3.0 * T):
        T -= 1
    while mu < 1.0 / (3.0 * (T + 1)):
        T += 1
    return max(T, 0)


def bmc(design: GroupedDesign, chunk: int = 256) -> CoherenceReport:
    if design.n_groups < 2:
        raise ValueError("BMC needs at least two groups")
    pw = pairwise_coherence(design, chunk=chunk)
    off = pw.copy()
    np.fill_diagonal(off, -np.inf)
    mu = float(off.max())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        nu = mutual_coherence(design.matrix) if design.p >= 2 else 0.0
    return CoherenceReport(
        mc=nu,
        bmc=mu,
        pairwise=pw,
        assumption_T_max=max_admissible_sparsity(mu),
        zero_bmc=mu == 0.0,
    )


def cross_gram(design: GroupedDesign, i: int, j: int) -> np.ndarray:
    """``D_ij = Psi_bar_Gi^{-1} Psi_Gi^t Psi_Gj Psi_bar_Gj^{-1}``."""
    N = design.n_groups
    if not (0 <= i < N and 0 <= j < N):
        raise IndexError("group index out of range")
    C = design.group_matrix(i).T @ design.group_matrix(j)
    return design.group_factor_inv[i] @ C @ design.group_factor_inv[j]


def check_assumption(report: CoherenceReport | float, T: int) -> bool:
    """Strict check ``0 < mu < 1/(3T)``.

    A zero BMC fails the check even though it is the most favorable case; the
    report's ``zero_bmc`` flag tells the two apart.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    mu = report.bmc if isinstance(report, CoherenceReport) else float(report)
    return 0.0 < mu < 1.0 / (3.0 * T)


def bmc_bound_from_mc(nu: float, s: int) -> float:
    """Upper bound ``nu s / (1 - nu (s-1))`` on the BMC, valid when ``(s-1) nu < 1``."""
    if not (s - 1) * nu < 1:
        return math.inf
    return nu * s / (1.0 - nu * (s - 1))
