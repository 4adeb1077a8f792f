"""Data-driven choice of the tuning parameter ``lambda``.

The score of ``lambda`` is the standardized mean shift

    q(lambda) = (sum_k c_k(lambda) Abar_k - E_0[T_n]) / sqrt(Var_0[T_n]),

where ``Abar_k`` estimates ``E[A_k]`` under the alternative from a pilot
sample and the null moments are closed-form. One pilot pass is reused for
the whole grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import DomainError, NumericError
from .sampleset import as_points
from .specfun import dim_kp, gamma_kp, gegenbauer_at_one, gegenbauer_table
from .statistic import c_kp, pair_sums, truncation_order

__all__ = [
    "LambdaGrid",
    "PilotEstimate",
    "GridWeights",
    "abar",
    "q_score",
    "q_scores",
    "select_lambda_tilde",
    "select_lambda_kfold",
    "kfold_scores",
    "fold_labels",
]


@dataclass(frozen=True)
class LambdaGrid:
    """Strictly increasing positive grid; the default is ``{i/10 : i = 1..300}``."""

    values: tuple = tuple(i / 10 for i in range(1, 301))

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise DomainError("grid must be a nonempty 1-D sequence")
        if np.any(v <= 0) or np.any(np.diff(v) <= 0):
            raise DomainError("grid values must be positive and strictly increasing")
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values)

    def order(self, p: int) -> int:
        """Truncation order shared by every grid point (that of the largest ``lambda``)."""
        return truncation_order(p, max(self.values))


@dataclass(frozen=True)
class PilotEstimate:
    """``Abar_1..Abar_K`` for a target sample size ``n`` from a pilot of size ``N``."""

    abar: np.ndarray
    n: int
    N: int
    p: int

    @property
    def K(self) -> int:
        return self.abar.size


@lru_cache(maxsize=32)
def _grid_weights(p: int, values: tuple, K: int):
    k = np.arange(1, K + 1)
    C = np.array([c_kp(k, p, lam) for lam in values])
    g = gamma_kp(k, p)
    d = np.array([dim_kp(int(j), p) for j in k], dtype=float)
    mean = C @ gegenbauer_at_one(k, p)
    limit_var = (2.0 * (C * g) ** 2) @ d
    return C, mean, limit_var


@dataclass(frozen=True)
class GridWeights:
    """Stein weights and closed-form null moments for every grid point.

    ``C[i, k-1] = c_k(lambda_i)``; ``mean`` is ``E_0[T_n]`` and ``limit_var``
    the limit null variance (``Var_0[T_n] = (n-1)/n * limit_var``).
    """

    p: int
    grid: LambdaGrid
    K: int
    C: np.ndarray
    mean: np.ndarray
    limit_var: np.ndarray

    @classmethod
    def build(cls, p: int, grid: LambdaGrid | None = None, K: int | None = None) -> "GridWeights":
        grid = LambdaGrid() if grid is None else grid
        K = grid.order(p) if K is None else int(K)
        return cls(p, grid, K, *_grid_weights(p, grid.values, K))

    def scores(self, abar: np.ndarray, n: int) -> np.ndarray:
        """``q(lambda)`` for every grid point; ``abar`` may be stacked ``(..., K)``."""
        if n < 2:
            raise DomainError(f"target size must be >= 2, got {n}")
        var = (n - 1) / n * self.limit_var
        if np.any(var <= 0):
            bad = self.grid.array[var <= 0][0]
            raise NumericError(f"null variance vanishes at lambda={bad:g}")
        return (np.asarray(abar)[..., : self.K] @ self.C.T - self.mean) / np.sqrt(var)


def abar(pilot, n_target: int, K: int) -> PilotEstimate:
    """``Abar_k = (n-1) U_k + C_k(1)`` with ``U_k`` the pilot U-statistic of ``C_k(Y_i'Y_j)``."""
    Y = as_points(pilot)
    N, p = Y.shape
    if N < 2:
        raise DomainError(f"pilot needs N >= 2 points, got {N}")
    if n_target < 1:
        raise DomainError("n_target must be >= 1")
    U = 2.0 * pair_sums(Y, K) / (N * (N - 1))
    A = (n_target - 1) * U + gegenbauer_at_one(np.arange(1, K + 1), p)
    return PilotEstimate(A, int(n_target), N, p)


def q_scores(estimate: PilotEstimate, grid: LambdaGrid | None = None) -> np.ndarray:
    """``q(lambda)`` over ``grid`` (weights truncated at ``estimate.K``)."""
    return GridWeights.build(estimate.p, grid, estimate.K).scores(estimate.abar, estimate.n)


def q_score(lam: float, estimate: PilotEstimate) -> float:
    return float(q_scores(estimate, LambdaGrid((lam,)))[0])


def select_lambda_tilde(pilot, n_target: int, grid: LambdaGrid | None = None, K: int | None = None) -> float:
    """Grid maximizer of the pilot score; ties go to the smallest ``lambda``."""
    grid = LambdaGrid() if grid is None else grid
    p = as_points(pilot).shape[1]
    K = grid.order(p) if K is None else K
    scores = q_scores(abar(pilot, n_target, K), grid)
    return grid.values[int(np.argmax(scores))]


def fold_labels(n: int, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Random balanced assignment of ``n`` points to ``folds`` folds."""
    if folds < 2:
        raise DomainError(f"need at least 2 folds, got {folds}")
    if n < folds:
        raise DomainError(f"cannot split n={n} points into {folds} nonempty folds")
    labels = np.empty(n, dtype=int)
    for f, idx in enumerate(np.array_split(rng.permutation(n), folds)):
        labels[idx] = f
    return labels


def kfold_scores(sample, labels: np.ndarray, weights: GridWeights, C_pairs: np.ndarray | None = None) -> np.ndarray:
    """Across-fold mean score per grid point, each fold scored with its complement as pilot.

    ``C_pairs`` (shape ``(K, n, n)``, the ``C_k(X_i'X_j)``) may be passed in
    to reuse a Gram pass.
    """
    X = as_points(sample)
    n, p = X.shape
    K = weights.K
    if C_pairs is None:
        C_pairs = gegenbauer_table(K, p, np.clip(X @ X.T, -1.0, 1.0))[1:]
    folds = int(labels.max()) + 1
    comp = (labels[None, :] != np.arange(folds)[:, None]).astype(float)
    size = n - comp.sum(axis=1)
    N = comp.sum(axis=1)
    if np.any(N < 2):
        raise DomainError("every fold complement needs at least 2 points")
    if np.any(size < 1):
        raise DomainError("every fold needs at least one point")
    ck1 = gegenbauer_at_one(np.arange(1, K + 1), p)
    full = np.einsum("fi,kij,fj->fk", comp, C_pairs, comp)
    U = (full - N[:, None] * ck1) / (N * (N - 1))[:, None]
    total = np.zeros(len(weights.grid))
    for f in range(folds):
        if size[f] < 2:
            continue  # T_n of a single point is constant; its score is undefined and counts as 0
        total += weights.scores((size[f] - 1) * U[f] + ck1, int(size[f]))
    return total / folds


def select_lambda_kfold(sample, folds: int, grid: LambdaGrid | None = None, rng: np.random.Generator | None = None) -> float:
    """K-fold choice of ``lambda``: mean complement-pilot score, smallest maximizer."""
    if rng is None:
        raise DomainError("pass an explicit numpy Generator")
    X = as_points(sample)
    weights = GridWeights.build(X.shape[1], grid)
    scores = kfold_scores(X, fold_labels(X.shape[0], folds, rng), weights)
    return weights.grid.values[int(np.argmax(scores))]
