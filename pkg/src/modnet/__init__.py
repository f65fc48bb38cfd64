"""Moderated network models.

Gaussian graphical models extended with 3-way interactions, so that each
pairwise interaction can depend linearly on other variables. Models are
estimated by nodewise lasso regression with EBIC selection and sampled with
a Gibbs rejection sampler; the harness measures how well each parameter type
is recovered.
"""
from .core import (
    DataError,
    MnmModel,
    ModeratorSet,
    RawData,
    StandardizedData,
    count_terms,
    nodewise_param_count,
    read_csv,
    standardize,
)
from .estimator import (
    CombinedSequentialModel,
    NodewiseFit,
    aggregate,
    build_design,
    fit_mnm,
    fit_mnm_full,
    fit_nodewise,
    fit_sequential,
    show_interaction,
)
from .factorgraph import FactorGraph, export_dot, export_json, import_json, to_factor_graph, to_nodewise_factor_graph
from .sampler import SampleBatch, SamplerAbort, SamplerConfig, bias_check, conditional_mean, gibbs_sample, screen_models
from .simgen import GeneratingModelInfo, isolated_types_model, random_mnm, uncorrelated_neighbors_ggm
from .solver import DesignMatrix, EbicConfig, LassoFit, PathConfig, ebic, fit_lasso, fit_path, lambda_path, select_lambda, soft_threshold

__version__ = "0.1.0"
