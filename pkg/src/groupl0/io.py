"""Plain-text file formats.

* matrix: CSV, one matrix row per line, no header
* partition: a single line of comma-separated group sizes
* vector: one value per line
"""
from __future__ import annotations

import csv

import numpy as np

from .groups import GroupPartition, build_partition

FLOAT_FMT = "%.17g"


def read_matrix(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_matrix(path, matrix) -> None:
    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt=FLOAT_FMT)


def read_partition(path) -> GroupPartition:
    with open(path) as fh:
        text = fh.read().strip()
    if not text:
        return build_partition([])
    return build_partition([int(tok) for tok in text.replace("\n", ",").split(",") if tok.strip()])


def write_partition(path, partition: GroupPartition) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(str(int(s)) for s in partition.sizes) + "\n")


def read_vector(path) -> np.ndarray:
    return np.atleast_1d(np.loadtxt(path, ndmin=1))


def write_vector(path, v) -> None:
    np.savetxt(path, np.asarray(v, dtype=float).ravel(), fmt=FLOAT_FMT)


PATH_LOG_FIELDS = ["s", "lambda", "residual", "n_active", "inner_iters", "time_ms"]


def write_path_log(path, solution_path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PATH_LOG_FIELDS)
        for st in solution_path.steps:
            w.writerow([st.index, format(st.lam, ".17g"), format(st.residual_norm, ".17g"),
                        len(st.active), st.inner_iters, format(st.time_ms, ".17g")])
