"""Transition kernels, kernel combinators, and the r-step chain runner.

A kernel is a one-step state transformer step(state, rng) -> state. The
random-update combinator picks one component kernel uniformly per step; the
random-permutation combinator applies all components once per step in a
uniformly drawn order. Both are reversible whenever their components are;
a fixed-order sweep carries no such contract and none is asserted for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import graphs as graphlib
from . import gwishart
from .rng import RngStream

__all__ = [
    "Kernel",
    "FunctionKernel",
    "DiscreteProposalKernel",
    "GibbsCliqueKernel",
    "RandomUpdateKernel",
    "RandomPermutationKernel",
    "ChainTrace",
    "mh_step",
    "gibbs_composite_kernels",
    "make_composite",
    "run_chain",
    "run_chains_batch",
]


class Kernel:
    """One-step state transformer; subclasses implement step(state, rng)."""

    name: str = "kernel"

    def step(self, state, rng):
        raise NotImplementedError


@dataclass
class FunctionKernel(Kernel):
    fn: Callable
    name: str = "function"

    def step(self, state, rng):
        return self.fn(state, rng)


def mh_step(state, proposal, log_target_ratio: float, rng):
    """Accept `proposal` with probability min(1, exp(log_target_ratio)).

    The caller supplies log of (target ratio times reverse/forward proposal
    ratio). One uniform is always consumed; accept iff u < alpha, so ratios
    of +inf always accept and -inf never do. NaN is rejected as an error.
    """
    if math.isnan(log_target_ratio):
        raise ValueError("acceptance log-ratio is NaN")
    alpha = 1.0 if log_target_ratio >= 0 else math.exp(log_target_ratio)
    u = rng.uniform01()
    return proposal if u < alpha else state


@dataclass
class DiscreteProposalKernel(Kernel):
    """Metropolis-Hastings on a finite state space {0..n-1}.

    `pi` is the (unnormalized) target mass, `proposal` a row-stochastic
    matrix. Each step consumes one uniform for the proposal and one inside
    mh_step. Exists chiefly so the accept/reject rule can be probed by exact
    transition-matrix oracles.
    """

    pi: np.ndarray
    proposal: np.ndarray
    name: str = "discrete-mh"

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=np.float64)
        self.proposal = np.asarray(self.proposal, dtype=np.float64)
        if (self.pi <= 0).any():
            raise ValueError("target mass must be positive everywhere")
        if self.proposal.shape != (len(self.pi), len(self.pi)):
            raise ValueError("proposal shape mismatch")
        rows = self.proposal.sum(axis=1)
        if not np.allclose(rows, 1.0, atol=1e-12):
            raise ValueError("proposal rows must sum to 1")

    def propose(self, state: int, u: float) -> int:
        acc = 0.0
        for y, mass in enumerate(self.proposal[state]):
            acc += mass
            if u < acc:
                return y
        return len(self.pi) - 1

    def step(self, state: int, rng) -> int:
        y = self.propose(state, rng.uniform01())
        num = self.pi[y] * self.proposal[y, state]
        den = self.pi[state] * self.proposal[state, y]
        if num == 0.0:
            log_ratio = -math.inf
        else:
            log_ratio = math.log(num / den)
        return mh_step(state, y, log_ratio, rng)


@dataclass
class GibbsCliqueKernel(Kernel):
    """Resample one clique block from its conditional; acceptance is unity,
    so no accept uniform is consumed."""

    clique: tuple
    params: gwishart.GWishartParams
    name: str = ""

    def __post_init__(self):
        self.clique = tuple(sorted(int(v) for v in self.clique))
        if not self.name:
            self.name = "gibbs" + "".join(f"_{v}" for v in self.clique)

    def step(self, state, rng):
        return gwishart.gibbs_clique_update(state, self.clique, self.params, rng)


@dataclass
class RandomUpdateKernel(Kernel):
    """Each step applies one component kernel, picked uniformly at random."""

    kernels: Sequence[Kernel]
    name: str = "random-update"

    def __post_init__(self):
        self.kernels = list(self.kernels)
        if not self.kernels:
            raise ValueError("need at least one kernel")

    def step(self, state, rng):
        k = rng.uniform_int(len(self.kernels))
        return self.kernels[k - 1].step(state, rng)


@dataclass
class RandomPermutationKernel(Kernel):
    """Each step applies every component once, in a fresh uniform order."""

    kernels: Sequence[Kernel]
    name: str = "random-permutation"

    def __post_init__(self):
        self.kernels = list(self.kernels)
        if not self.kernels:
            raise ValueError("need at least one kernel")

    def step(self, state, rng):
        sigma = rng.random_permutation(len(self.kernels))
        for k in sigma:
            state = self.kernels[k - 1].step(state, rng)
        return state


def gibbs_composite_kernels(params: gwishart.GWishartParams) -> list:
    """One Gibbs kernel per maximal clique, in canonical clique order."""
    return [
        GibbsCliqueKernel(clique=c, params=params)
        for c in graphlib.maximal_cliques(params.graph)
    ]


def make_composite(kind: str, kernels: Sequence[Kernel]) -> Kernel:
    if kind == "ru":
        return RandomUpdateKernel(kernels)
    if kind == "rp":
        return RandomPermutationKernel(kernels)
    raise ValueError("kind must be 'ru' or 'rp'")


@dataclass
class ChainTrace:
    """States of one chain: all r+1 states, or just (initial, final)."""

    states: list
    record: str
    chain_id: Optional[int] = None
    stream_id: Optional[int] = None


def run_chain(x0, kernel: Kernel, r: int, rng, record: str = "all") -> ChainTrace:
    """Apply `kernel` r times from x0."""
    if r < 0:
        raise ValueError("r must be >= 0")
    if record not in ("all", "endpoints"):
        raise ValueError("record must be 'all' or 'endpoints'")
    state = x0
    states = [x0]
    for _ in range(r):
        state = kernel.step(state, rng)
        if record == "all":
            states.append(state)
    if record == "endpoints" and r > 0:
        states.append(state)
    stream_id = rng.stream_id if isinstance(rng, RngStream) else None
    return ChainTrace(states=states, record=record, stream_id=stream_id)


def run_chains_batch(
    q0: np.ndarray,
    prep: gwishart.CliquePrep,
    r: int,
    kind: str,
    gens,
    summary_codes: np.ndarray,
    record_all: bool,
) -> np.ndarray:
    """Run len(q0) independent Gibbs-composite chains through the backend.

    Chain i starts at q0[i] and consumes gens[i] only. Returns summaries with
    shape (n, r+1, n_summaries) when record_all else (n, 2, n_summaries)
    holding steps 0 and r.
    """
    from . import backend

    if kind not in ("ru", "rp"):
        raise ValueError("kind must be 'ru' or 'rp'")
    q0 = np.ascontiguousarray(q0, dtype=np.float64)
    n = q0.shape[0]
    return backend.run_chains(
        q0, prep, int(r), 0 if kind == "ru" else 1,
        backend.normalize_gens(gens, n),
        np.ascontiguousarray(summary_codes, dtype=np.int64),
        bool(record_all),
    )
