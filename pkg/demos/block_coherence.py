"""Block coherence of a grouped design and what it guarantees.

The block mutual coherence is the cosine of the smallest principal angle
between any two group subspaces. It ignores correlation inside a group, so it
can be small even when the columns of each group are nearly collinear.
"""
import numpy as np

from groupl0 import bmc, build_partition, mutual_coherence, prepare_design, bmc_bound_from_mc

rng = np.random.default_rng(3)
n, N, s = 1000, 8, 3
part = build_partition([s] * N)
A = rng.standard_normal((n, N * s))
A /= np.linalg.norm(A, axis=0)
design = prepare_design(A, part)

rep = bmc(design)
nu = mutual_coherence(design.matrix)
print(f"column coherence {nu:.3f}, block coherence {rep.bmc:.3f}, "
      f"bound from column coherence {bmc_bound_from_mc(nu, s):.3f}")
print(f"largest group count with mu < 1/(3T): {rep.assumption_T_max}")

# Mix the columns inside every group; block coherence is unchanged while the
# column coherence blows up.
B = A.copy()
for i in range(N):
    cols = part.indices(i)
    B[:, cols] = A[:, cols] @ (np.eye(s) + 5.0 * np.ones((s, s)))
B /= np.linalg.norm(B, axis=0)
mixed = prepare_design(B, part)
print(f"after mixing: column coherence {mutual_coherence(mixed.matrix):.3f}, "
      f"block coherence {bmc(mixed).bmc:.3f}")
