"""
Backfitting Sampler
Metropolis-within-Gibbs over a sum of trees: one structural move per tree,
conjugate leaf redraws, then a conjugate noise-variance redraw.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
import structlog

from dataset import AugmentedDataset, DatasetError, scale_response
from model import (
    Hyperparams,
    SigmaPosterior,
    calibrate_lambda,
    leaf_log_marginal,
    leaf_posterior_params,
    log_tree_structure_prior,
    sigma_posterior,
)
from trees import Ensemble, InvalidProposal, RuleSpaceCache, Tree

from .draws import MOVES, PosteriorDraws, _zero_counts

logger = structlog.get_logger(__name__)

SeedLike = Union[int, np.random.SeedSequence, None]

DEGENERATE_SIGMA_SQ = 1e-12
LOG_THIRD = math.log(1.0 / 3.0)


class ChainError(RuntimeError):
    """Raised when the chain state loses fit/residual consistency."""


@dataclass
class ChainState:
    """Mutable chain state.

    ``fits[j]`` holds tree j's fitted values on the training rows and
    ``residuals`` is the scaled response minus the sum of all fits.
    """
    trees: List[Tree]
    fits: np.ndarray
    residuals: np.ndarray
    sigma_sq: float
    rng: np.random.Generator
    iteration: int = 0

    @property
    def ensemble(self) -> Ensemble:
        return Ensemble(trees=list(self.trees), sigma_sq=self.sigma_sq)


@dataclass(frozen=True)
class Proposal:
    """Candidate tree from one structural move.

    ``tree`` is None when the move could not be built (no usable rule, or a
    rule leaving a child empty); such proposals are rejected.
    """
    move: str
    tree: Optional[Tree]
    log_ratio: float
    node: int = -1


def _move_probability(tree: Tree, move: str) -> float:
    if tree.is_stump:
        return 1.0 if move == "grow" else 0.0
    return 1.0 / 3.0


class BackfittingSampler:
    """Runs one chain on an augmented dataset with a pre-scaled response."""

    def __init__(
        self,
        data: AugmentedDataset,
        y_scaled: np.ndarray,
        hyper: Hyperparams,
        lam: float,
        sample_prior: bool = False,
        debug_checks: bool = False
    ):
        self.X = data.matrix
        self.M = data.mask
        self.y = np.asarray(y_scaled, dtype=float)
        self.n = self.X.shape[0]
        self.hyper = hyper
        self.lam = lam
        self.sigma_mu_sq = hyper.sigma_mu_sq
        self.sample_prior = sample_prior
        self.debug_checks = debug_checks
        self.rule_spaces = RuleSpaceCache(self.X, self.M)

        self.proposed = _zero_counts()
        self.accepted = _zero_counts()
        self.nonfinite_rejections = 0

    def initial_state(self, rng: np.random.Generator) -> ChainState:
        n_columns = self.X.shape[1]
        return ChainState(
            trees=[Tree.stump(n_columns) for _ in range(self.hyper.m)],
            fits=np.zeros((self.hyper.m, self.n)),
            residuals=self.y.copy(),
            sigma_sq=float(np.var(self.y, ddof=1)),
            rng=rng,
        )

    # --- structural moves --------------------------------------------------

    def propose_move(self, tree: Tree, rng: np.random.Generator) -> Proposal:
        """Draw a grow, prune or change proposal and its log proposal ratio."""
        move = "grow" if tree.is_stump else MOVES[int(rng.integers(3))]
        if move == "grow":
            return self._propose_grow(tree, rng)
        if move == "prune":
            return self._propose_prune(tree, rng)
        return self._propose_change(tree, rng)

    def _splits_rows(self, rule, rows: np.ndarray) -> bool:
        go_left = rule.goes_left(self.X[rows, rule.attribute], self.M[rows, rule.attribute])
        return bool(go_left.any() and not go_left.all())

    def _propose_grow(self, tree: Tree, rng: np.random.Generator) -> Proposal:
        leaves = tree.leaves()
        leaf = int(leaves[rng.integers(leaves.size)])
        rows = tree.node_rows(leaf, self.X, self.M)
        space = self.rule_spaces(rows)
        if space.is_empty:
            return Proposal("grow", None, -math.inf, leaf)
        rule = space.sample(rng)
        if not self._splits_rows(rule, rows):
            return Proposal("grow", None, -math.inf, leaf)
        new = tree.grow(leaf, rule)

        log_forward = math.log(_move_probability(tree, "grow")) - math.log(leaves.size) + space.log_probability(rule)
        log_reverse = LOG_THIRD - math.log(new.prunable_nodes().size)
        return Proposal("grow", new, log_reverse - log_forward, leaf)

    def _propose_prune(self, tree: Tree, rng: np.random.Generator) -> Proposal:
        prunable = tree.prunable_nodes()
        node = int(prunable[rng.integers(prunable.size)])
        rows = tree.node_rows(node, self.X, self.M)
        space = self.rule_spaces(rows)
        new = tree.prune(node)

        log_forward = LOG_THIRD - math.log(prunable.size)
        log_reverse = (math.log(_move_probability(new, "grow")) - math.log(new.n_leaves)
                       + space.log_probability(tree.rule(node)))
        return Proposal("prune", new, log_reverse - log_forward, node)

    def _propose_change(self, tree: Tree, rng: np.random.Generator) -> Proposal:
        internal = tree.internal_nodes()
        node = int(internal[rng.integers(internal.size)])
        rows = tree.node_rows(node, self.X, self.M)
        space = self.rule_spaces(rows)
        if space.is_empty:
            return Proposal("change", None, -math.inf, node)
        rule = space.sample(rng)
        if not self._splits_rows(rule, rows):
            return Proposal("change", None, -math.inf, node)
        new = tree.change(node, rule)
        # both rules are scored in the same rule space
        log_ratio = space.log_probability(tree.rule(node)) - space.log_probability(rule)
        return Proposal("change", new, log_ratio, node)

    # --- acceptance --------------------------------------------------------

    def tree_log_likelihood(self, tree: Tree, residuals: np.ndarray, sigma_sq: float) -> float:
        """Leaf-integrated log likelihood of ``residuals`` under ``tree``."""
        if self.sample_prior:
            return 0.0
        leaf_index = tree.route_rows(self.X, self.M)
        capacity = tree.capacity
        counts = np.bincount(leaf_index, minlength=capacity)
        sums = np.bincount(leaf_index, weights=residuals, minlength=capacity)
        sq_sums = np.bincount(leaf_index, weights=residuals * residuals, minlength=capacity)
        leaves = tree.leaves()
        return float(leaf_log_marginal(counts[leaves], sums[leaves], sq_sums[leaves],
                                       sigma_sq, self.sigma_mu_sq).sum())

    def log_acceptance_ratio(
        self,
        current: Tree,
        proposal: Proposal,
        residuals: np.ndarray,
        sigma_sq: float
    ) -> float:
        if proposal.tree is None:
            return -math.inf
        rows = current.node_rows(proposal.node, self.X, self.M)
        log_prior_new = log_tree_structure_prior(proposal.tree, self.X, self.M, self.hyper,
                                                 node=proposal.node, rows=rows, rule_spaces=self.rule_spaces)
        if log_prior_new == -math.inf:
            return -math.inf
        log_prior_old = log_tree_structure_prior(current, self.X, self.M, self.hyper,
                                                 node=proposal.node, rows=rows, rule_spaces=self.rule_spaces)
        log_lik_delta = (self.tree_log_likelihood(proposal.tree, residuals, sigma_sq)
                         - self.tree_log_likelihood(current, residuals, sigma_sq))
        return log_lik_delta + log_prior_new - log_prior_old + proposal.log_ratio

    def mh_accept(
        self,
        current: Tree,
        proposal: Proposal,
        residuals: np.ndarray,
        sigma_sq: float,
        rng: np.random.Generator
    ) -> Tuple[Tree, bool]:
        """Metropolis-Hastings step; returns the kept tree and whether it changed."""
        self.proposed[proposal.move] += 1
        log_ratio = self.log_acceptance_ratio(current, proposal, residuals, sigma_sq)
        if math.isnan(log_ratio) or log_ratio == math.inf:
            self.nonfinite_rejections += 1
            return current, False
        if math.log(rng.random()) < log_ratio:
            self.accepted[proposal.move] += 1
            return proposal.tree, True
        return current, False

    # --- Gibbs steps -------------------------------------------------------

    def redraw_leaves(
        self,
        tree: Tree,
        residuals: np.ndarray,
        sigma_sq: float,
        rng: np.random.Generator
    ) -> Tuple[Tree, np.ndarray]:
        """Fresh copy of ``tree`` with conjugate leaf draws, and its fitted values."""
        leaf_index = tree.route_rows(self.X, self.M)
        leaves = tree.leaves()
        if self.sample_prior:
            counts = np.zeros(leaves.size)
            sums = np.zeros(leaves.size)
        else:
            counts = np.bincount(leaf_index, minlength=tree.capacity)[leaves]
            sums = np.bincount(leaf_index, weights=residuals, minlength=tree.capacity)[leaves]
        means, variances = leaf_posterior_params(counts, sums, sigma_sq, self.sigma_mu_sq)
        updated = tree.copy()
        updated.value[leaves] = rng.normal(means, np.sqrt(variances))
        return updated, updated.value[leaf_index]

    def redraw_sigma(self, residuals: np.ndarray, rng: np.random.Generator) -> float:
        if self.sample_prior:
            posterior = SigmaPosterior(shape=self.hyper.nu / 2.0, scale=self.hyper.nu * self.lam / 2.0)
        else:
            posterior = sigma_posterior(residuals, self.hyper.nu, self.lam)
        return posterior.draw(rng)

    def check_consistency(self, state: ChainState) -> None:
        total = np.zeros(self.n)
        for tree in state.trees:
            total += tree.predict(self.X, self.M)
        if not np.allclose(total + state.residuals, self.y, atol=1e-8):
            worst = float(np.max(np.abs(total + state.residuals - self.y)))
            raise ChainError(f"fit/residual mismatch of {worst:.3g} at iteration {state.iteration}")

    def gibbs_iteration(self, state: ChainState) -> ChainState:
        rng = state.rng
        for j in range(len(state.trees)):
            partial = state.residuals + state.fits[j]
            proposal = self.propose_move(state.trees[j], rng)
            try:
                tree, _ = self.mh_accept(state.trees[j], proposal, partial, state.sigma_sq, rng)
            except InvalidProposal as e:
                logger.debug("Rejected malformed proposal", move=proposal.move, reason=str(e))
                tree = state.trees[j]
            tree, fit = self.redraw_leaves(tree, partial, state.sigma_sq, rng)
            state.trees[j] = tree
            state.fits[j] = fit
            state.residuals = partial - fit

        state.sigma_sq = self.redraw_sigma(state.residuals, rng)
        state.iteration += 1
        if self.debug_checks:
            self.check_consistency(state)
        return state

    def run(self, rng: np.random.Generator, n_burn: Optional[int] = None,
            n_post: Optional[int] = None) -> Tuple[List[Ensemble], np.ndarray, np.ndarray, np.ndarray]:
        """Iterate the chain; returns kept ensembles and per-iteration traces."""
        n_burn = self.hyper.n_burn if n_burn is None else n_burn
        n_post = self.hyper.n_post if n_post is None else n_post
        total = n_burn + n_post

        state = self.initial_state(rng)
        kept: List[Ensemble] = []
        sigma_trace = np.empty(total)
        depth_trace = np.empty(total)
        leaves_trace = np.empty(total)
        for i in range(total):
            self.gibbs_iteration(state)
            sigma_trace[i] = state.sigma_sq
            ensemble = state.ensemble
            depth_trace[i] = ensemble.mean_depth()
            leaves_trace[i] = ensemble.mean_leaves()
            if i >= n_burn:
                kept.append(ensemble)
            if total >= 10 and (i + 1) % (total // 10) == 0:
                logger.debug(f"Chain at iteration {i + 1}/{total}",
                             sigma_sq=round(state.sigma_sq, 6), mean_depth=round(depth_trace[i], 3))
        return kept, sigma_trace, depth_trace, leaves_trace


def _degenerate_draws(data: AugmentedDataset, hyper: Hyperparams, transform) -> PosteriorDraws:
    n_columns = data.n_columns
    total = hyper.n_burn + hyper.n_post
    ensembles = [
        Ensemble(trees=[Tree.stump(n_columns) for _ in range(hyper.m)], sigma_sq=DEGENERATE_SIGMA_SQ)
        for _ in range(hyper.n_post)
    ]
    return PosteriorDraws(
        ensembles=ensembles,
        transform=transform,
        column_names=data.base.column_names,
        dummy_map=data.dummy_map,
        n_burn=hyper.n_burn,
        sigma_trace=np.full(total, DEGENERATE_SIGMA_SQ),
        depth_trace=np.zeros(total),
        leaves_trace=np.ones(total),
    )


def run_chain(
    data: AugmentedDataset,
    hyper: Hyperparams,
    seed: SeedLike,
    sample_prior: bool = False,
    debug_checks: bool = False
) -> PosteriorDraws:
    """Fit one chain and keep the post-burn-in ensembles."""
    if data.base.n < 2:
        raise DatasetError(f"a chain needs at least 2 training rows, got {data.base.n}")

    y_scaled, transform = scale_response(data.base.response)
    if transform.degenerate:
        logger.warning("Constant response; returning constant-prediction draws",
                       value=transform.y_min, n_post=hyper.n_post)
        return _degenerate_draws(data, hyper, transform)

    lam = calibrate_lambda(y_scaled, hyper.nu, hyper.q)
    sampler = BackfittingSampler(data, y_scaled, hyper, lam,
                                 sample_prior=sample_prior, debug_checks=debug_checks)
    rng = np.random.default_rng(seed)
    logger.debug("Starting chain", n=data.base.n, columns=data.n_columns, m=hyper.m,
                 n_burn=hyper.n_burn, n_post=hyper.n_post, sample_prior=sample_prior)

    kept, sigma_trace, depth_trace, leaves_trace = sampler.run(rng)
    draws = PosteriorDraws(
        ensembles=kept,
        transform=transform,
        column_names=data.base.column_names,
        dummy_map=data.dummy_map,
        n_burn=hyper.n_burn,
        sigma_trace=sigma_trace,
        depth_trace=depth_trace,
        leaves_trace=leaves_trace,
        proposed=dict(sampler.proposed),
        accepted=dict(sampler.accepted),
        nonfinite_rejections=sampler.nonfinite_rejections,
    )
    logger.info("Chain finished", iterations=hyper.n_burn + hyper.n_post,
                acceptance={k: round(v, 3) for k, v in draws.acceptance_rates().items()},
                nonfinite_rejections=draws.nonfinite_rejections,
                rule_space_hit_rate=round(sampler.rule_spaces.hit_rate, 3),
                mean_depth=round(float(depth_trace[hyper.n_burn:].mean()), 3))
    return draws


def _chain_task(args) -> PosteriorDraws:
    chain, data, hyper, seed, sample_prior, debug_checks = args
    with structlog.contextvars.bound_contextvars(chain=chain):
        return run_chain(data, hyper, seed, sample_prior=sample_prior, debug_checks=debug_checks)


def run_chains(
    data: AugmentedDataset,
    hyper: Hyperparams,
    seed: SeedLike,
    n_chains: int = 1,
    workers: int = 1,
    sample_prior: bool = False,
    debug_checks: bool = False
) -> PosteriorDraws:
    """Run independent chains on spawned seed streams and pool them in chain order."""
    if n_chains < 1:
        raise ValueError(f"n_chains must be >= 1, got {n_chains}")
    if n_chains == 1:
        return run_chain(data, hyper, seed, sample_prior=sample_prior, debug_checks=debug_checks)

    streams = np.random.SeedSequence(seed).spawn(n_chains)
    tasks = [(chain, data, hyper, stream, sample_prior, debug_checks) for chain, stream in enumerate(streams)]
    if workers <= 1:
        chains = [_chain_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, n_chains)) as executor:
            chains = list(executor.map(_chain_task, tasks))
    return PosteriorDraws.pool(chains)
