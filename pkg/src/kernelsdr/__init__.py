"""Kernel sufficient dimension reduction with semiparametric estimators."""
from .data import DataSet
from .errors import DataError, DegenerateInputError, InputError, NumericError, SDRError
from .estimators import (FitConfig, FitResult, Objective, fit, gsksave_objective,
                         gsksir1_objective, gsksir2_objective, ksir_init,
                         projected_features, transform)
from .evaluation import (CvReport, PredictionReport, cv_prediction, cv_select_lambda,
                         kcca_score, kernel_ridge_fit, kernel_ridge_predict,
                         multiple_correlation, pmae)
from .kernels import (GramMatrix, KernelSpec, center_gram, cross_gram, gram,
                      kernel_eval, median_heuristic_sigma)
from .optimize import minimize, quasi_newton
from .simbench import BenchmarkRow, SimCase, generate, run_benchmark
from .smoothing import (BandwidthSpec, SmootherMatrix, default_bandwidth,
                        epanechnikov, nw_weights)

__version__ = "0.1.0"
