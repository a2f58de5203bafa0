import numpy as np
import pytest

from groupl0.groups import build_partition, prepare_design

ACCEPTANCE_LINES = []


def random_design(rng, n, sizes, normalize=True, check=False):
    part = build_partition(sizes)
    A = rng.standard_normal((n, part.p))
    if normalize:
        A /= np.linalg.norm(A, axis=0)
    return prepare_design(A, part, check_unit_columns=check)


def random_nonsingular(rng, s, max_cond=1e3):
    """Random s x s matrix with condition number at most ``max_cond``."""
    U, _ = np.linalg.qr(rng.standard_normal((s, s)))
    V, _ = np.linalg.qr(rng.standard_normal((s, s)))
    sv = np.exp(rng.uniform(0, np.log(max_cond), size=s))
    sv[0], sv[-1] = 1.0, max(sv[-1], 1.0)
    return U @ np.diag(sv) @ V.T


def transform_groups(design, mats):
    """Design whose group ``i`` is ``Psi_Gi @ mats[i]``."""
    A = design.matrix.copy()
    for i, M in enumerate(mats):
        cols = design.partition.indices(i)
        A[:, cols] = A[:, cols] @ M
    return prepare_design(A, design.partition, check_unit_columns=False)


def tall_instance(rng, n, N, s, T, dr=10.0, sigma=1e-3):
    """Gaussian instance with ``n > p`` (outside what ``GenParams`` allows) so that
    the block coherence can be small. Returns ``(design, x, y, active, eps)``."""
    design = random_design(rng, n, [s] * N)
    active = tuple(sorted(rng.choice(N, size=T, replace=False).tolist()))
    x = np.zeros(N * s)
    cols = design.partition.columns(active)
    mags = rng.uniform(1.0, dr, size=cols.size)
    mags[rng.integers(cols.size)] = 1.0
    x[cols] = mags * rng.choice([-1.0, 1.0], size=cols.size)
    noise = sigma * rng.standard_normal(n)
    return design, x, design.matrix @ x + noise, active, float(np.linalg.norm(noise))


def min_transformed_norm(design, x, active):
    """``min_{i in active} ||Psi_bar_Gi x_Gi||`` (equal to ``||Psi_Gi x_Gi||``)."""
    return min(float(np.linalg.norm(design.group_matrix(i) @ design.partition.block(x, i)))
               for i in active)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
