# Model Module
from .priors import (
    Hyperparams,
    LeafPosterior,
    SigmaPosterior,
    log_split_probability,
    log_stop_probability,
    log_tree_structure_prior,
    leaf_log_marginal,
    log_marginal_likelihood,
    leaf_posterior,
    leaf_posterior_params,
    sigma_posterior,
    calibrate_lambda,
    draw_tree_from_prior,
)

__all__ = [
    "Hyperparams",
    "LeafPosterior",
    "SigmaPosterior",
    "log_split_probability",
    "log_stop_probability",
    "log_tree_structure_prior",
    "leaf_log_marginal",
    "log_marginal_likelihood",
    "leaf_posterior",
    "leaf_posterior_params",
    "sigma_posterior",
    "calibrate_lambda",
    "draw_tree_from_prior",
]
