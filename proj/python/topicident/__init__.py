"""Topic-model identifiability classification and convergence-rate toolkit."""

from topicident._core import (
    classify_order,
    fit_mle,
    kl_divergence,
    likelihood,
    project_row,
    sample_corpus,
    table1,
    tv_distance,
    wasserstein_distance,
)

__all__ = [
    "classify_order",
    "fit_mle",
    "kl_divergence",
    "likelihood",
    "project_row",
    "sample_corpus",
    "table1",
    "tv_distance",
    "wasserstein_distance",
]
