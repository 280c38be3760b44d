"""
Generated Response Surface
Trivariate normal covariates with a nonlinear response, the test bed for the
credible-interval illustration and the selection-model sweeps.
"""

import math
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from dataset import Dataset

SURFACE_COLUMNS = ("X1", "X2", "X3")


class GeneratedModelSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(500, ge=1)
    sigma_x_sq: float = Field(1.0, gt=0)
    rho1: float = 0.2
    rho2: float = 0.4
    sigma_e_sq: float = Field(1.0, ge=0)
    seed: Optional[int] = None

    def covariance(self) -> np.ndarray:
        r1, r2 = self.rho1, self.rho2
        return self.sigma_x_sq * np.array([
            [1.0, r1, r2],
            [r1, 1.0, r1],
            [r2, r1, 1.0],
        ])


def response_function(X: np.ndarray) -> np.ndarray:
    """x1 + x2 + 2 x3 - x1^2 + x2^2 + x1 x2."""
    X = np.atleast_2d(X)
    x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
    return x1 + x2 + 2.0 * x3 - x1 ** 2 + x2 ** 2 + x1 * x2


def generate_surface(spec: GeneratedModelSpec, seed=None) -> Dataset:
    """Draw a complete dataset; ``seed`` overrides ``spec.seed``."""
    covariance = spec.covariance()
    try:
        chol = np.linalg.cholesky(covariance)
    except np.linalg.LinAlgError as e:
        raise ValueError(
            f"covariance with rho1={spec.rho1}, rho2={spec.rho2} is not positive definite"
        ) from e

    rng = np.random.default_rng(spec.seed if seed is None else seed)
    X = rng.standard_normal((spec.n, 3)) @ chol.T
    noise = rng.normal(0.0, math.sqrt(spec.sigma_e_sq), size=spec.n)
    return Dataset(
        covariates=X,
        missing_mask=np.zeros_like(X, dtype=bool),
        response=response_function(X) + noise,
        column_names=SURFACE_COLUMNS,
    )


def true_conditional_mean(point: Sequence[Optional[float]], mu_b: float = 10.0, rho2: float = 0.4) -> float:
    """Reference E[Y | observed entries, mask] for the illustration test points.

    ``point`` is (x1, x2, x3) with None marking a missing entry. Missing X2
    contributes E[X2 + X2^2 | X2 > 0]; missing X3 contributes the offset mean
    plus rho2 * E[X1 | X1 > 0] (the X3 term is not doubled). Observed
    entries must be zero, which is where these references are defined.
    """
    if len(point) != 3:
        raise ValueError("illustration points have three coordinates")
    if point[0] is None:
        raise ValueError("reference means need X1 observed")
    observed = [v for v in point if v is not None]
    if any(v != 0 for v in observed):
        raise ValueError("reference means are defined for zero-valued observed coordinates")

    half_normal_mean = math.sqrt(2.0 / math.pi)
    total = 0.0
    if point[1] is None:
        total += half_normal_mean + 1.0
    if point[2] is None:
        total += rho2 * half_normal_mean + mu_b
    return total
