"""Pseudospectral simulator and verification harness for the stochastic
Cauchy-Riemann equation dzbar r = r x conj(r) + i gamma W on the 2-torus."""

__version__ = "0.1.0"

from .spectral import (ScalarField, TorusGrid, VectorField3, apply_multiplier,
                       make_grid, mean, project_zero_mean, to_physical, to_spectral)
from .noise import (MollifierTable, NoiseRealization, mollifier_hat,
                    mollifier_table, realize, sample)
from .products import (StochasticObjects, build_xi, build_zeta, cross,
                       theta_direct, theta_renormalized)
from .norms import (NormReport, TestFunctionFamily, default_family, event_gate,
                    norm_holder, norm_neg, pair_all, vector_norm_holder,
                    vector_norm_neg, young_check)
from .solver import (SolveResult, SolverParams, backlund_b, closure_residual,
                     constants_abc, gamma_map, residual_llg, residual_mcr,
                     solve_fixed_point)
from .studies import (ExperimentConfig, RateFit, calibrate_lambda, renorm_check,
                      run_ensemble, run_rate_study)
from .crf1 import read_crf1, read_vector_field, write_crf1, write_vector_field

__all__ = [name for name in dir() if not name.startswith("_")]
