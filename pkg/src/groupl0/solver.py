"""Group primal-dual active set solver with continuation (GPDASC).

For a fixed ``lam`` the inner loop alternates

* active set from the transformed primal/dual pair,
  ``A = {i : ||x_bar_Gi + d_bar_Gi|| > sqrt(2 lam)}``,
* least squares on the columns of the active groups,
* dual update ``d = Psi^t (y - Psi x)`` (exactly zero on active groups),

and stops when the active set repeats. The outer loop decreases ``lam``
geometrically from ``0.5 ||y||^2`` and warm-starts each problem from the
previous solution, stopping at the first ``lam`` whose residual is below the
noise level when one is given.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .groups import GroupedDesign, group_norms, make_active, objective, transform_dual, transform_primal

__all__ = [
    "IllPosedActiveSetError",
    "CombinatorialBlowupError",
    "PrimalDualState",
    "SolverConfig",
    "PathStep",
    "SolutionPath",
    "hard_threshold_group",
    "hard_threshold",
    "zero_state",
    "optimality_residual",
    "optimality_details",
    "active_from_state",
    "ls_on_active",
    "gpdas_fixed_lambda",
    "gpdasc_path",
    "solve_at_lambda",
    "oracle_solution",
    "brute_force_global_min",
]

DISCREPANCY = "discrepancy-met"
LAMBDA_MIN = "lambda-min-reached"
MAX_OUTER = "max-outer"
OVERFLOW = "active-set-overflow"
TARGET = "target-lambda-reached"


class IllPosedActiveSetError(RuntimeError):
    """Least squares on the active columns is underdetermined or singular."""


class CombinatorialBlowupError(ValueError):
    pass


def hard_threshold_group(g, lam: float) -> np.ndarray:
    """Keep ``g`` if ``||g|| > sqrt(2 lam)``, else zero (ties go to zero)."""
    g = np.asarray(g, dtype=float)
    if lam <= 0:
        raise ValueError("lam must be positive")
    if np.linalg.norm(g) > math.sqrt(2.0 * lam):
        return g.copy()
    return np.zeros_like(g)


def hard_threshold(v, partition, lam: float) -> np.ndarray:
    """Group hard thresholding of a full ``p``-vector."""
    v = np.asarray(v, dtype=float)
    keep = group_norms(v, partition) > math.sqrt(2.0 * lam)
    out = np.zeros_like(v)
    for _, gids, cols in partition.size_classes():
        sel = keep[gids]
        out[cols[sel]] = v[cols[sel]]
    return out


@dataclass(frozen=True, eq=False)
class PrimalDualState:
    x: np.ndarray
    d: np.ndarray
    active: tuple
    residual_norm: float


def zero_state(design: GroupedDesign, y) -> PrimalDualState:
    y = np.asarray(y, dtype=float)
    return PrimalDualState(
        x=np.zeros(design.p), d=design.matrix.T @ y, active=(),
        residual_norm=float(np.linalg.norm(y)),
    )


@dataclass(frozen=True)
class SolverConfig:
    """Continuation settings.

    ``lambda0=None`` means ``0.5 ||y||^2``; ``lambda_min=None`` means
    ``1e-15 * lambda0``. ``eps=None`` runs the whole path down to
    ``lambda_min`` (or until the active set overflows).
    """

    lambda0: float | None = None
    rho: float = 0.7
    k_max: int = 5
    eps: float | None = None
    lambda_min: float | None = None
    max_outer: int = 1000
    t_cap: int | None = None

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if self.lambda0 is not None and self.lambda0 <= 0:
            raise ValueError("lambda0 must be positive")
        if (self.lambda0 is not None and self.lambda_min is not None
                and not self.lambda_min < self.lambda0):
            raise ValueError("lambda_min must be below lambda0")


@dataclass(frozen=True, eq=False)
class PathStep:
    index: int
    lam: float
    x: np.ndarray
    d: np.ndarray
    active: tuple
    residual_norm: float
    inner_iters: int
    converged: bool
    time_ms: float
    inner_actives: tuple = ()


@dataclass(eq=False)
class SolutionPath:
    steps: list = field(default_factory=list)
    termination: str = ""

    @property
    def final(self) -> PathStep:
        return self.steps[-1]

    @property
    def x(self) -> np.ndarray:
        return self.final.x

    @property
    def active(self) -> tuple:
        return self.final.active

    @property
    def lam(self) -> float:
        return self.final.lam

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([st.lam for st in self.steps])

    @property
    def inner_iters(self) -> np.ndarray:
        """Inner iteration counts of the solved steps (the initial point excluded)."""
        return np.array([st.inner_iters for st in self.steps[1:]], dtype=int)

    def state(self, k: int = -1) -> PrimalDualState:
        st = self.steps[k]
        return PrimalDualState(st.x, st.d, st.active, st.residual_norm)


def _transformed_sum_norms(design, x, d):
    return group_norms(transform_primal(design, x) + transform_dual(design, d), design.partition)


def active_from_state(design: GroupedDesign, x, d, lam: float) -> tuple:
    """Groups with ``||x_bar_Gi + d_bar_Gi|| > sqrt(2 lam)`` (strict)."""
    norms = _transformed_sum_norms(design, x, d)
    return tuple(int(i) for i in np.flatnonzero(norms > math.sqrt(2.0 * lam)))


def optimality_details(design: GroupedDesign, y, state: PrimalDualState, lam: float) -> dict:
    """Fixed-point residual of ``x_bar in H_lam(x_bar + d_bar)`` plus the separation
    ``||x_bar_Gi|| >= sqrt(2 lam) >= ||d_bar_Gi||`` on active/inactive groups."""
    part = design.partition
    xb = transform_primal(design, state.x)
    db = transform_dual(design, state.d)
    g = xb + db
    thr = math.sqrt(2.0 * lam)
    gnorm = group_norms(g, part)
    keep = gnorm > thr
    diff = xb - np.where(np.repeat(keep, part.sizes), g, 0.0)
    residual = float(group_norms(diff, part).max())
    xn = group_norms(xb, part)
    dn = group_norms(db, part)
    act = np.zeros(part.n_groups, dtype=bool)
    act[list(state.active)] = True
    min_x = float(xn[act].min()) if act.any() else math.inf
    max_d = float(dn[~act].max()) if (~act).any() else 0.0
    return {
        "residual": residual,
        "threshold": thr,
        "min_active_xbar": min_x,
        "max_inactive_dbar": max_d,
        "max_active_dbar": float(dn[act].max()) if act.any() else 0.0,
    }


def optimality_residual(design: GroupedDesign, y, state: PrimalDualState, lam: float) -> float:
    """Largest group distance between ``x_bar`` and ``H_lam(x_bar + d_bar)``.

    Zero exactly when ``state.x`` is a block coordinatewise minimizer of the
    objective at ``lam``.
    """
    return optimality_details(design, y, state, lam)["residual"]


def ls_on_active(design: GroupedDesign, y, active, *, _pty=None) -> np.ndarray:
    """Least squares restricted to the columns of ``active`` groups.

    The system is solved in the decorrelated variables ``z_i = Psi_bar_i x_i``,
    whose design blocks have orthonormal columns, so ill-conditioned groups do
    not degrade the fit. Cholesky on the normal equations, with a QR fallback
    when it breaks down.

    Raises
    ------
    IllPosedActiveSetError
        If the active columns outnumber the rows or are (numerically) rank
        deficient.
    """
    y = np.asarray(y, dtype=float)
    x = np.zeros(design.p)
    if len(active) == 0:
        return x
    active = sorted(active)
    part = design.partition
    B = part.columns(active)
    if B.size > design.n:
        raise IllPosedActiveSetError(f"{B.size} active columns exceed n = {design.n}")
    inv = [design.group_factor_inv[i] for i in active]
    A = np.concatenate([design.matrix[:, part.indices(i)] @ m for i, m in zip(active, inv)], axis=1)
    if _pty is not None:
        rhs = np.concatenate([m.T @ _pty[part.indices(i)] for i, m in zip(active, inv)])
    else:
        rhs = A.T @ y
    try:
        c = scipy.linalg.cho_factor(A.T @ A, check_finite=False)
        z = scipy.linalg.cho_solve(c, rhs, check_finite=False)
    except np.linalg.LinAlgError:
        Q, R = np.linalg.qr(A)
        diag = np.abs(np.diag(R))
        if diag.min() <= 1e-12 * diag.max():
            raise IllPosedActiveSetError("active columns are rank deficient") from None
        z = scipy.linalg.solve_triangular(R, Q.T @ y, check_finite=False)
    start = 0
    for i, m in zip(active, inv):
        k = m.shape[0]
        x[part.indices(i)] = m @ z[start:start + k]
        start += k
    return x


def _primal_dual_update(design, y, active, pty):
    x = ls_on_active(design, y, active, _pty=pty)
    r = y - design.matrix @ x
    d = design.matrix.T @ r
    if active:
        d[design.partition.columns(active)] = 0.0
    return x, d, float(np.linalg.norm(r))


def gpdas_fixed_lambda(design: GroupedDesign, y, lam: float, warm_start: PrimalDualState,
                       k_max: int = 5, *, _pty=None, _record=None):
    """Inner GPDAS loop at fixed ``lam``.

    Runs at most ``k_max + 1`` active-set evaluations. Returns
    ``(state, inner_count, converged)`` where ``inner_count`` is the number of
    active-set evaluations performed (1 means the warm start's active set was
    already a fixed point). ``state.active`` is always the set the primal
    variable was fitted on.
    """
    y = np.asarray(y, dtype=float)
    if lam <= 0:
        raise ValueError("lam must be positive")
    pty = design.matrix.T @ y if _pty is None else _pty
    x, d, prev = warm_start.x, warm_start.d, tuple(warm_start.active)
    res = warm_start.residual_norm
    for k in range(k_max + 1):
        active = active_from_state(design, x, d, lam)
        if active == prev:
            return PrimalDualState(x, d, prev, res), k + 1, True
        x, d, res = _primal_dual_update(design, y, active, pty)
        prev = active
        if _record is not None:
            _record.append(active)
    return PrimalDualState(x, d, prev, res), k_max + 1, False


def _initial_path(design, y, lam0):
    st = zero_state(design, y)
    step = PathStep(index=0, lam=lam0, x=st.x, d=st.d, active=(), residual_norm=st.residual_norm,
                    inner_iters=0, converged=True, time_ms=0.0)
    return st, SolutionPath(steps=[step])


def _run_step(design, y, lam, state, config, pty, index, path):
    t0 = time.perf_counter()
    record = []
    new, count, conv = gpdas_fixed_lambda(design, y, lam, state, config.k_max, _pty=pty,
                                          _record=record)
    if config.t_cap is not None and len(new.active) > config.t_cap:
        raise IllPosedActiveSetError(f"active set size {len(new.active)} exceeds cap {config.t_cap}")
    path.steps.append(PathStep(
        index=index, lam=lam, x=new.x, d=new.d, active=new.active,
        residual_norm=new.residual_norm, inner_iters=count, converged=conv,
        time_ms=1e3 * (time.perf_counter() - t0), inner_actives=tuple(record),
    ))
    return new


def gpdasc_path(design: GroupedDesign, y, config: SolverConfig | None = None) -> SolutionPath:
    """Run the continuation path and return every visited point.

    ``path.steps[0]`` is the zero solution at ``lambda0``; the last step is the
    output. ``path.termination`` is one of ``discrepancy-met``,
    ``lambda-min-reached``, ``max-outer`` or ``active-set-overflow``. On
    overflow the offending step is not recorded.
    """
    config = config or SolverConfig()
    y = np.asarray(y, dtype=float)
    if y.shape != (design.n,):
        raise ValueError(f"data has shape {y.shape}, expected ({design.n},)")
    lam0 = config.lambda0 if config.lambda0 is not None else 0.5 * float(y @ y)
    if lam0 <= 0:
        raise ValueError("lambda0 is zero (y == 0); nothing to recover")
    lam_min = config.lambda_min if config.lambda_min is not None else 1e-15 * lam0
    state, path = _initial_path(design, y, lam0)
    if config.eps is not None and state.residual_norm <= config.eps:
        path.termination = DISCREPANCY
        return path
    pty = state.d.copy()
    lam = lam0
    for s in range(1, config.max_outer + 1):
        lam *= config.rho
        if lam < lam_min:
            path.termination = LAMBDA_MIN
            return path
        try:
            state = _run_step(design, y, lam, state, config, pty, s, path)
        except IllPosedActiveSetError:
            path.termination = OVERFLOW
            return path
        if config.eps is not None and state.residual_norm <= config.eps:
            path.termination = DISCREPANCY
            return path
    path.termination = MAX_OUTER
    return path


def solve_at_lambda(design: GroupedDesign, y, lam: float,
                    config: SolverConfig | None = None) -> SolutionPath:
    """Continuation from ``lambda0`` that ends exactly at ``lam``.

    The geometric schedule is followed until the next value would drop below
    ``lam``; the last step is then taken at ``lam`` itself. No discrepancy
    stop is applied. If ``lam >= lambda0`` a single inner solve from zero is
    done.
    """
    config = replace(config or SolverConfig(), eps=None)
    y = np.asarray(y, dtype=float)
    lam0 = config.lambda0 if config.lambda0 is not None else 0.5 * float(y @ y)
    state, path = _initial_path(design, y, max(lam0, lam))
    pty = state.d.copy()
    if lam >= lam0:
        lams = [lam]
    else:
        lams = []
        cur = lam0
        while len(lams) < config.max_outer:
            cur = max(cur * config.rho, lam)
            lams.append(cur)
            if cur == lam:
                break
    for s, cur in enumerate(lams, start=1):
        try:
            state = _run_step(design, y, cur, state, config, pty, s, path)
        except IllPosedActiveSetError:
            path.termination = OVERFLOW
            return path
    path.termination = TARGET if path.lam == lam else MAX_OUTER
    return path


def oracle_solution(design: GroupedDesign, y, true_active) -> np.ndarray:
    """Least-squares fit supported on the true active groups."""
    active = make_active(true_active, design.n_groups)
    return ls_on_active(design, y, active)


def brute_force_global_min(design: GroupedDesign, y, lam: float, max_groups: int | None = None,
                           limit: int = 10 ** 6):
    """Global minimizer of the objective over supports of at most ``max_groups`` groups.

    Every subset is enumerated in order of size and then lexicographically; a
    later subset replaces the incumbent only on strict improvement, so ties go
    to the smaller and lexicographically earlier support. Returns
    ``(x, value)``.
    """
    y = np.asarray(y, dtype=float)
    N = design.n_groups
    m = N if max_groups is None else min(int(max_groups), N)
    total = sum(math.comb(N, k) for k in range(m + 1))
    if total > limit:
        raise CombinatorialBlowupError(f"{total} subsets exceed the enumeration limit {limit}")
    best_x = np.zeros(design.p)
    best_val = objective(design, y, best_x, lam)
    for k in range(1, m + 1):
        for subset in itertools.combinations(range(N), k):
            B = design.partition.columns(subset)
            x = np.zeros(design.p)
            x[B] = np.linalg.lstsq(design.matrix[:, B], y, rcond=None)[0]
            val = objective(design, y, x, lam)
            if val < best_val:
                best_x, best_val = x, val
    return best_x, best_val
