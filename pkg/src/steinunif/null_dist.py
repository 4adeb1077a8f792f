"""Null distribution of the Stein statistic: moments, chi-square mixture limit
and Monte Carlo critical values.

Under uniformity ``E[A_k] = C_k(1)`` and, since the ``C_k(X_i' X_j)`` for
``i < j`` are uncorrelated with variance ``gamma_k C_k(1)``,
``Var[T_n] = sum_k 2 ((n-1)/n) (c_k gamma_k)^2 d_k`` (using
``gamma_k d_k = C_k(1)``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .exceptions import DomainError
from .parallel import map_replicates
from .sampleset import SampleSet, replicate_rng, uniform_points
from .specfun import dim_kp, gamma_kp
from .statistic import c_kp, d_n, gram_from_pair_sums, pair_sums, truncation_order

__all__ = [
    "limit_moments",
    "finite_n_mean_h0",
    "finite_n_variance_h0",
    "ChiSquareMixture",
    "sample_limit",
    "CriticalValueTable",
    "order_statistic",
    "null_draws",
    "null_gram_draws",
    "mc_critical_value",
    "p_value_mc",
    "write_critical_values",
    "read_critical_values",
]

NULL_STREAM = 0


def _mixture_terms(p: int, lam: float, K: int | None) -> tuple[np.ndarray, np.ndarray]:
    if K is None:
        K = truncation_order(p, lam)
    ks = np.arange(1, K + 1)
    w = c_kp(ks, p, lam) * gamma_kp(ks, p)
    dof = np.array([dim_kp(int(k), p) for k in ks], dtype=float)
    return w, dof


def limit_moments(p: int, lam: float, K: int | None = None) -> tuple[float, float]:
    """Mean ``sum c_k gamma_k d_k`` and variance ``sum 2 (c_k gamma_k)^2 d_k`` of the limit law."""
    w, dof = _mixture_terms(p, lam, K)
    return float(np.sum(w * dof)), float(np.sum(2.0 * w * w * dof))


def finite_n_mean_h0(p: int, lam: float, K: int | None = None) -> float:
    """``E[T_n(lam)]`` under uniformity; equals :func:`d_n` for every ``n``."""
    return d_n(p, lam, K)


def finite_n_variance_h0(n: int, p: int, lam: float, K: int | None = None) -> float:
    """``Var[T_n(lam)]`` under uniformity: ``(n-1)/n`` times the limit variance."""
    if n < 2:
        raise DomainError(f"variance formula needs n >= 2, got {n}")
    return (n - 1) / n * limit_moments(p, lam, K)[1]


@dataclass(frozen=True)
class ChiSquareMixture:
    """``sum_k w_k Z_k`` with independent ``Z_k ~ chi^2(dof_k)``."""

    weights: np.ndarray
    dofs: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        d = np.array(self.dofs, dtype=float).ravel()
        if w.shape != d.shape:
            raise DomainError("weights and dofs must have equal length")
        if np.any(w < 0) or np.any(d < 1):
            raise DomainError("need weights >= 0 and dofs >= 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "dofs", d)

    @classmethod
    def stein(cls, p: int, lam: float, K: int | None = None) -> "ChiSquareMixture":
        """Limit law of ``T_n(lam)`` under uniformity."""
        return cls(*_mixture_terms(p, lam, K))

    @property
    def mean(self) -> float:
        return float(np.sum(self.weights * self.dofs))

    @property
    def variance(self) -> float:
        return float(np.sum(2.0 * self.weights**2 * self.dofs))


def sample_limit(mixture: ChiSquareMixture, rng: np.random.Generator, size=None):
    """Draw(s) from the mixture; chi-square(d) is sampled as gamma(d/2, scale 2)."""
    shape = () if size is None else np.atleast_1d(size).tolist()
    total = np.zeros(shape)
    for w, d in zip(mixture.weights, mixture.dofs):
        g = rng.gamma(d / 2.0, 2.0, size=size)
        total = total + w * g
    return float(total) if size is None else total


@dataclass(frozen=True)
class CriticalValueTable:
    """One Monte Carlo critical value with the settings that reproduce it."""

    statistic: str
    n: int
    p: int
    alpha: float
    M: int
    seed: int
    value: float
    params: dict = field(default_factory=dict)

    @property
    def lam(self):
        return self.params.get("lambda", "")


def order_statistic(draws, alpha: float) -> float:
    """The ``ceil((1 - alpha) M)``-th smallest draw (1-based)."""
    x = np.sort(np.asarray(draws, dtype=float))
    if x.size == 0:
        raise DomainError("need at least one draw")
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    idx = math.ceil(round((1.0 - alpha) * x.size, 9))
    return float(x[min(max(idx, 1), x.size) - 1])


def _null_statistic(statistic, n: int, p: int, seed: int, r: int) -> float:
    X = uniform_points(n, p, replicate_rng(seed, r, (NULL_STREAM, n)))
    return float(statistic(SampleSet(X)))


def null_draws(statistic, n: int, p: int, M: int, seed: int, workers: int = 1) -> np.ndarray:
    """``statistic`` evaluated on ``M`` seeded uniform samples, in replicate order."""
    return map_replicates(partial(_null_statistic, statistic, n, p, seed), M, workers)


def _null_gram(n: int, p: int, K: int, seed: int, r: int) -> np.ndarray:
    X = uniform_points(n, p, replicate_rng(seed, r, (NULL_STREAM, n)))
    return gram_from_pair_sums(pair_sums(X, K), n, p)


def null_gram_draws(n: int, p: int, K: int, M: int, seed: int, workers: int = 1) -> np.ndarray:
    """``(M, K)`` array of ``A_1..A_K`` on the same samples as :func:`null_draws`.

    Any Sobolev statistic ``sum_k b_k A_k`` follows by one matrix product.
    """
    return map_replicates(partial(_null_gram, n, p, K, seed), M, workers)


def mc_critical_value(
    statistic,
    n: int,
    p: int,
    M: int,
    alpha: float,
    seed: int,
    statistic_id: str = "custom",
    params: dict | None = None,
    workers: int = 1,
) -> CriticalValueTable:
    """Upper-``alpha`` Monte Carlo critical value of ``statistic`` for samples of size ``n``."""
    if M < 100:
        raise DomainError(f"M must be >= 100, got {M}")
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    draws = null_draws(statistic, n, p, M, seed, workers)
    return CriticalValueTable(statistic_id, n, p, alpha, M, seed, order_statistic(draws, alpha), dict(params or {}))


def p_value_mc(observed: float, null_draws) -> float:
    """Add-one Monte Carlo p-value ``(1 + #{draws >= observed}) / (M + 1)``."""
    d = np.asarray(null_draws, dtype=float)
    if d.size == 0:
        raise DomainError("need at least one null draw")
    return float((1 + np.count_nonzero(d >= observed)) / (d.size + 1))


_CV_COLUMNS = ["statistic", "n", "p", "lambda", "alpha", "M", "seed", "critical_value"]


def write_critical_values(tables, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_CV_COLUMNS)
        for t in tables:
            w.writerow([t.statistic, t.n, t.p, t.lam, repr(t.alpha), t.M, t.seed, repr(t.value)])


def read_critical_values(path) -> list[CriticalValueTable]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            params = {"lambda": float(row["lambda"])} if row["lambda"] else {}
            out.append(
                CriticalValueTable(
                    row["statistic"],
                    int(row["n"]),
                    int(row["p"]),
                    float(row["alpha"]),
                    int(row["M"]),
                    int(row["seed"]),
                    float(row["critical_value"]),
                    params,
                )
            )
    return out
