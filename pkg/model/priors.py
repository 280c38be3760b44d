"""
BART Priors
Hyperparameters, the tree-structure prior and the conjugate computations
used inside the sampler.
"""

import math
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import chi2, invgamma

from trees import RuleSpaceCache, Tree, collect_candidate_rules


class Hyperparams(BaseModel):
    """Prior constants and chain lengths.

    ``k`` sets the leaf prior scale: sigma_mu = 0.5 / (k * sqrt(m)) in
    scaled-response units.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    m: int = Field(50, ge=1, description="number of trees")
    alpha: float = Field(0.95, gt=0, lt=1, description="depth prior base")
    beta: float = Field(2.0, gt=0, description="depth prior power")
    k: float = Field(2.0, gt=0, description="leaf shrinkage multiplier")
    nu: float = Field(3.0, gt=0, description="noise prior degrees of freedom")
    q: float = Field(0.9, gt=0, lt=1, description="noise prior quantile")
    n_burn: int = Field(1000, ge=0, description="burn-in iterations")
    n_post: int = Field(1000, ge=1, description="kept posterior iterations")

    @property
    def sigma_mu(self) -> float:
        return 0.5 / (self.k * math.sqrt(self.m))

    @property
    def sigma_mu_sq(self) -> float:
        return self.sigma_mu ** 2

    @classmethod
    def from_config(cls, section: Optional[Mapping[str, Any]]) -> "Hyperparams":
        section = section or {}
        return cls(**{name: section[name] for name in cls.model_fields if name in section})

    def with_overrides(self, **overrides) -> "Hyperparams":
        """Validated copy with the non-None overrides applied."""
        values = self.model_dump()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return Hyperparams(**values)

    def full_fidelity(self) -> "Hyperparams":
        """Same priors with the 1000 burn-in / 1000 kept chain length."""
        return self.with_overrides(n_burn=1000, n_post=1000)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Hyperparams":
        return cls.model_validate_json(text)


@dataclass(frozen=True)
class LeafPosterior:
    mean: float
    variance: float

    def draw(self, rng: np.random.Generator) -> float:
        return float(rng.normal(self.mean, math.sqrt(self.variance)))


@dataclass(frozen=True)
class SigmaPosterior:
    """Inverse-gamma with density proportional to x^(-shape-1) exp(-scale/x)."""
    shape: float
    scale: float

    @property
    def mean(self) -> float:
        return self.scale / (self.shape - 1) if self.shape > 1 else math.inf

    @property
    def variance(self) -> float:
        if self.shape <= 2:
            return math.inf
        return self.scale ** 2 / ((self.shape - 1) ** 2 * (self.shape - 2))

    def draw(self, rng: np.random.Generator, size=None):
        draws = invgamma.rvs(a=self.shape, scale=self.scale, size=size, random_state=rng)
        return float(draws) if size is None else draws


def log_split_probability(depth: int, hyper: Hyperparams) -> float:
    """log of alpha * (1 + depth)^(-beta)."""
    return math.log(hyper.alpha) - hyper.beta * math.log1p(depth)


def log_stop_probability(depth: int, hyper: Hyperparams) -> float:
    return math.log1p(-hyper.alpha * (1.0 + depth) ** (-hyper.beta))


def log_tree_structure_prior(
    tree: Tree,
    X: np.ndarray,
    M: np.ndarray,
    hyper: Hyperparams,
    node: int = 0,
    rows: Optional[np.ndarray] = None,
    rule_spaces: Optional[RuleSpaceCache] = None
) -> float:
    """Log prior of the subtree rooted at ``node`` (the whole tree by default).

    Internal nodes contribute the split probability at their depth plus the
    log probability of their rule in the node's rule space. Leaves contribute
    the stop probability, or nothing when no rule is available there. A rule
    outside its node's rule space, or one leaving a child without rows,
    makes the tree impossible (-inf). ``rule_spaces`` must be built on the
    same ``X`` and ``M``.
    """
    if rows is None:
        rows = tree.node_rows(node, X, M)
    if rule_spaces is None:
        rule_spaces = RuleSpaceCache(X, M)

    def walk(current: int, current_rows: np.ndarray) -> float:
        depth = tree.depth(current)
        if tree.is_leaf(current):
            if rule_spaces.has_rules(current_rows):
                return log_stop_probability(depth, hyper)
            return 0.0
        rule = tree.rule(current)
        space = rule_spaces(current_rows)
        log_rule = space.log_probability(rule)
        if not math.isfinite(log_rule):
            return -math.inf
        go_left = rule.goes_left(X[current_rows, rule.attribute], M[current_rows, rule.attribute])
        if go_left.all() or not go_left.any():
            # empty child
            return -math.inf
        left, right = tree.children(current)
        return (log_split_probability(depth, hyper) + log_rule
                + walk(left, current_rows[go_left])
                + walk(right, current_rows[~go_left]))

    return walk(node, np.asarray(rows))


def leaf_log_marginal(
    counts: np.ndarray,
    sums: np.ndarray,
    sq_sums: np.ndarray,
    sigma_sq: float,
    sigma_mu_sq: float
) -> np.ndarray:
    """Per-leaf log marginal likelihood with the leaf mean integrated out."""
    counts = np.asarray(counts, dtype=float)
    sums = np.asarray(sums, dtype=float)
    sq_sums = np.asarray(sq_sums, dtype=float)
    pooled = sigma_sq + counts * sigma_mu_sq
    return (-0.5 * counts * math.log(2.0 * math.pi * sigma_sq)
            + 0.5 * np.log(sigma_sq / pooled)
            - sq_sums / (2.0 * sigma_sq)
            + sigma_mu_sq * sums ** 2 / (2.0 * sigma_sq * pooled))


def log_marginal_likelihood(
    groups: Sequence[np.ndarray],
    sigma_sq: float,
    sigma_mu_sq: float
) -> float:
    """Sum of per-leaf log marginal likelihoods over residual groups."""
    if sigma_sq <= 0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
    groups = [np.asarray(g, dtype=float).reshape(-1) for g in groups]
    if any(g.size == 0 for g in groups):
        raise ValueError("every leaf group must hold at least one residual")
    counts = np.array([g.size for g in groups])
    sums = np.array([g.sum() for g in groups])
    sq_sums = np.array([np.dot(g, g) for g in groups])
    return float(leaf_log_marginal(counts, sums, sq_sums, sigma_sq, sigma_mu_sq).sum())


def leaf_posterior_params(counts, sums, sigma_sq: float, sigma_mu_sq: float):
    """Vectorized posterior means and variances of leaf values."""
    counts = np.asarray(counts, dtype=float)
    pooled = sigma_sq + counts * sigma_mu_sq
    return sigma_mu_sq * np.asarray(sums, dtype=float) / pooled, sigma_sq * sigma_mu_sq / pooled


def leaf_posterior(residuals, sigma_sq: float, sigma_mu_sq: float) -> LeafPosterior:
    residuals = np.asarray(residuals, dtype=float).reshape(-1)
    if residuals.size == 0:
        raise ValueError("leaf posterior needs at least one residual")
    mean, variance = leaf_posterior_params(residuals.size, residuals.sum(), sigma_sq, sigma_mu_sq)
    return LeafPosterior(mean=float(mean), variance=float(variance))


def sigma_posterior(residuals, nu: float, lam: float) -> SigmaPosterior:
    residuals = np.asarray(residuals, dtype=float).reshape(-1)
    if residuals.size == 0:
        raise ValueError("sigma posterior needs at least one residual")
    return SigmaPosterior(
        shape=(nu + residuals.size) / 2.0,
        scale=(nu * lam + float(np.dot(residuals, residuals))) / 2.0,
    )


def calibrate_lambda(y_scaled, nu: float, q: float) -> float:
    """Noise prior scale such that P(sigma^2 < sample variance) = q."""
    y_scaled = np.asarray(y_scaled, dtype=float).reshape(-1)
    if y_scaled.size < 2:
        raise ValueError("lambda calibration needs at least two responses")
    sample_variance = float(np.var(y_scaled, ddof=1))
    if sample_variance <= 0:
        raise ValueError("lambda calibration needs a non-constant response")
    return sample_variance * float(chi2.ppf(1.0 - q, df=nu)) / nu


def draw_tree_from_prior(
    X: np.ndarray,
    M: np.ndarray,
    hyper: Hyperparams,
    rng: np.random.Generator,
    max_attempts: int = 1000
) -> Tree:
    """Sample a tree directly from the structure prior on a fixed design.

    Draws that produce an empty child are discarded and redrawn, matching
    the sampler, which never accepts such trees.
    """
    n_columns = X.shape[1]
    for _ in range(max_attempts):
        tree = Tree.stump(n_columns)
        pending = [(0, np.arange(X.shape[0]))]
        valid = True
        while pending and valid:
            node, rows = pending.pop()
            space = collect_candidate_rules(X, M, rows)
            if space.is_empty or rng.random() >= math.exp(log_split_probability(tree.depth(node), hyper)):
                continue
            rule = space.sample(rng)
            go_left = rule.goes_left(X[rows, rule.attribute], M[rows, rule.attribute])
            if go_left.all() or not go_left.any():
                valid = False
                break
            tree = tree.grow(node, rule)
            left, right = tree.children(node)
            pending.append((right, rows[~go_left]))
            pending.append((left, rows[go_left]))
        if valid:
            leaves = tree.leaves()
            tree.value[leaves] = rng.normal(0.0, hyper.sigma_mu, size=leaves.size)
            return tree
    raise RuntimeError(f"no valid prior tree after {max_attempts} attempts")
