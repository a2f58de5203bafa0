"""Group sparse recovery with the l0(l2) penalty."""
from .baselines import GompConfig, gomp
from .coherence import (CoherenceReport, bmc, check_assumption, cross_gram, mutual_coherence,
                        pair_coherence, pairwise_coherence, bmc_bound_from_mc)
from .groups import (GroupedDesign, GroupPartition, build_partition, group_norm, objective,
                     partition_from_labels, prepare_design, transform_dual, transform_primal)
from .harness import GenParams, ProblemInstance, generate_instance, metrics, run_benchmark
from .solver import (PrimalDualState, SolutionPath, SolverConfig, brute_force_global_min,
                     gpdas_fixed_lambda, gpdasc_path, hard_threshold_group, oracle_solution,
                     solve_at_lambda)

__version__ = "0.1.0"
