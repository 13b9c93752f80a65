"""Weighted Cramér-von Mises test of independence between two spatial fields."""
from .competing import (PermutationPolicy, TestOutcome, cross_k_test, distance_covariance_test,
                        mantel_test)
from .copula import CopulaSpec, copula_pair, gaussian_copula_pair, t_copula_pair
from .critical_values import critical_value_tables, simulate_limit_sample, verify_table1
from .matern import (FieldGrid, GenerationError, MaternParams, generate_independent_bivariate_field,
                     generate_matern_field, matern_covariance, pit_transform)
from .seeding import derive_seed
from .simulation import (ExperimentConfig, ExperimentTable, run_bandwidth_experiment,
                         run_comparison_experiment, run_experiment, run_power_experiment,
                         run_size_experiment)
from .statistic import CvMResult, compute_cvm_statistic, cvm_permutation_pvalue
from .weights import (WeightSpec, centering_constant, eigenvalues, get_weight,
                      marginal_kernel_matrix, register_custom_weight)

__version__ = "0.1.0"
