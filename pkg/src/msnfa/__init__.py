"""Mixtures of skew-normal factor analyzers fitted by ECM."""

from .ecm import EStepStats, FitConfig, FitResult, cm_steps, e_step, factor_scores, fit
from .errors import *  # noqa: F401,F403
from .inference import observed_info, score, se_report, standard_errors
from .initialization import InitStrategy, init_model, kmeans, multi_start_fit
from .io import Dataset, load_csv, load_model, save_model, standardize
from .model import (
    Family,
    MsnfaModel,
    SnfaComponent,
    component_marginal,
    log_likelihood,
    mixture_log_pdf,
    mixture_sample,
    param_count,
)
from .rmsn import RmsnParams, rmsn_affine, rmsn_log_mgf, rmsn_log_pdf, rmsn_mean_cov, rmsn_pdf, rmsn_sample
from .selection import adjusted_rand_index, classification_table, correct_classification_rate, criteria, entropy
from .special import mills_ratio_inv, tn_first_two_moments, tn_moments

__version__ = "0.1.0"
