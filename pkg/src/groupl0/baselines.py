"""Group orthogonal matching pursuit (GOMP)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .groups import GroupedDesign, group_norms, transform_dual
from .solver import IllPosedActiveSetError, ls_on_active

__all__ = ["GompConfig", "GompResult", "gomp"]


@dataclass(frozen=True)
class GompConfig:
    """``selection="raw"`` scores groups by ``||Psi_Gi^t r||``; ``"transformed"``
    by ``||Psi_bar_Gi^{-1} Psi_Gi^t r||``, the norm of the residual's projection
    onto the group span."""

    max_groups: int
    residual_tol: float = 0.0
    selection: str = "raw"

    def __post_init__(self):
        if self.max_groups < 1:
            raise ValueError("max_groups must be >= 1")
        if self.selection not in ("raw", "transformed"):
            raise ValueError("selection must be 'raw' or 'transformed'")


@dataclass(eq=False)
class GompResult:
    x: np.ndarray
    active: tuple
    residual_norms: list = field(default_factory=list)
    order: list = field(default_factory=list)
    ill_posed: bool = False


def gomp(design: GroupedDesign, y, config: GompConfig) -> GompResult:
    """Greedy group selection with a full least-squares refit after each pick.

    Stops when the residual norm is ``<= residual_tol``, ``max_groups`` groups
    have been picked, or the next refit would be ill posed (``ill_posed`` is
    then set and the last well-posed iterate is returned).
    """
    y = np.asarray(y, dtype=float)
    part = design.partition
    x = np.zeros(design.p)
    r = y.copy()
    order = []
    res = [float(np.linalg.norm(r))]
    chosen = np.zeros(part.n_groups, dtype=bool)
    ill = False
    while len(order) < config.max_groups and res[-1] > config.residual_tol:
        corr = design.matrix.T @ r
        if config.selection == "transformed":
            corr = transform_dual(design, corr)
        score = group_norms(corr, part)
        score[chosen] = -np.inf
        i = int(np.argmax(score))
        if not np.isfinite(score[i]):
            break
        try:
            x_new = ls_on_active(design, y, order + [i])
        except IllPosedActiveSetError:
            ill = True
            break
        order.append(i)
        chosen[i] = True
        x = x_new
        r = y - design.matrix @ x
        res.append(float(np.linalg.norm(r)))
    return GompResult(x=x, active=tuple(sorted(order)), residual_norms=res, order=order,
                      ill_posed=ill)
