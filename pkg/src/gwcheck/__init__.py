"""Exchangeability checking for claimed exact G-Wishart samplers.

The package pairs a trusted sampler construction (exact on decomposable
graphs) with a clique-wise Gibbs transition that preserves the target law,
then tests whether a claimed sampler's output is exchangeable with the state
of a chain started from it. A permutation test on a quantile-gap statistic
gives a p-value; a CLI wraps sample generation, trace and ECDF dumps, the
test itself, and null calibration.
"""

from ._version import __version__
from . import backend, cli, graphs, gwishart, matrix, mcmc, ptest, rng
from .graphs import Graph, benchmark_graphs
from .gwishart import (
    GWishartParams,
    SamplerSpec,
    gibbs_clique_update,
    log_density_unnormalized,
    sample_claimed,
    sample_exact_decomposable,
    sample_wishart,
)
from .matrix import NotPositiveDefiniteError, NumericalError, PatternViolationError
from .mcmc import (
    GibbsCliqueKernel,
    RandomPermutationKernel,
    RandomUpdateKernel,
    make_composite,
    mh_step,
    run_chain,
)
from .ptest import TestReport, p_value, run_test
from .rng import RngStream, substream

__all__ = [
    "Graph",
    "GWishartParams",
    "GibbsCliqueKernel",
    "NotPositiveDefiniteError",
    "NumericalError",
    "PatternViolationError",
    "RandomPermutationKernel",
    "RandomUpdateKernel",
    "RngStream",
    "SamplerSpec",
    "TestReport",
    "__version__",
    "backend",
    "benchmark_graphs",
    "cli",
    "gibbs_clique_update",
    "graphs",
    "gwishart",
    "log_density_unnormalized",
    "make_composite",
    "matrix",
    "mcmc",
    "mh_step",
    "p_value",
    "ptest",
    "rng",
    "run_chain",
    "run_test",
    "sample_claimed",
    "sample_exact_decomposable",
    "sample_wishart",
    "substream",
]
