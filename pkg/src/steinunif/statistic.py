"""Sobolev-type uniformity statistics built from Gegenbauer weights.

Every statistic here has the form

    S_n = (1/n) sum_{i,j} sum_{k>=1} b_k C_k^{(p-2)/2}(X_i' X_j) = sum_k b_k A_k,

with ``A_k = (1/n) sum_{i,j} C_k(X_i' X_j)`` independent of the weights. The
Stein statistic ``T_n(lambda)`` uses ``b_k = c_kp(lambda)``. Rayleigh, Bingham
and the max-pair statistic are provided in their classical closed forms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .exceptions import DomainError, RangeError
from .sampleset import SampleSet, as_points
from .specfun import (
    gamma_kp,
    gegenbauer_at_one,
    log_bessel_i,
    log_m_kp,
    m_kp,
)

__all__ = [
    "c_kp",
    "c_dksd",
    "softmax_weights",
    "truncation_order",
    "CoefficientSequence",
    "GegenbauerGram",
    "pair_sums",
    "batch_pair_sums",
    "gram_from_pair_sums",
    "gegenbauer_gram",
    "sobolev_statistic",
    "stein_statistic",
    "t_n_bruteforce_p2",
    "d_n",
    "rayleigh",
    "bingham",
    "max_pair",
    "large_lambda_prediction",
    "stein_kernel",
]

K_FLOOR = 8
K_CAP = 400
_LOG_MAX = 709.0

FAMILIES = ("stein", "dksd", "softmax", "custom")


def _check_k(k) -> np.ndarray:
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 1):
        raise DomainError("Sobolev weights are defined for k >= 1 (the constant term is absent)")
    return k_arr


def _eigen(k_arr: np.ndarray, p: int) -> np.ndarray:
    return k_arr * (k_arr + p - 2)


def _ret(val):
    return float(val) if np.ndim(val) == 0 else np.asarray(val)


def c_kp(k, p: int, lam: float):
    """Stein weights ``c_kp(lam) = (m_kp(lam) k (k+p-2))^2 gamma_kp``, ``k >= 1``."""
    k_arr = _check_k(k)
    log_c = 2.0 * (log_m_kp(k_arr, p, lam) + np.log(_eigen(k_arr, p))) + np.log(gamma_kp(k_arr, p))
    if np.any(log_c > _LOG_MAX):
        raise RangeError(f"c_kp overflows double precision at lambda={lam:g}")
    return _ret(np.exp(log_c))


def c_dksd(k, p: int, lam: float):
    """Directional KSD weights ``m_kp(lam) (k (k+p-2))^2``, ``k >= 1``."""
    k_arr = _check_k(k)
    return _ret(np.exp(log_m_kp(k_arr, p, lam) + 2.0 * np.log(_eigen(k_arr, p))))


def softmax_weights(k, p: int, lam: float):
    """Softmax-test weights ``m_kp(lam)`` (up to a lambda-only factor), ``k >= 1``."""
    k_arr = _check_k(k)
    return _ret(m_kp(k_arr, p, lam))


_WEIGHTS = {"stein": c_kp, "dksd": c_dksd, "softmax": softmax_weights}


def truncation_order(p: int, lam: float, tol: float = 1e-12, family: str = "stein") -> int:
    """Smallest ``K >= 8`` whose last term ``b_K C_K(1)`` is below ``tol`` times the partial sum.

    Raises :class:`RangeError` if no ``K <= 400`` qualifies.
    """
    if tol <= 0:
        raise DomainError("tol must be > 0")
    ks = np.arange(1, K_CAP + 1)
    terms = _WEIGHTS[family](ks, p, lam) * gegenbauer_at_one(ks, p)
    partial = np.cumsum(terms)
    ok = terms[K_FLOOR - 1 :] < tol * partial[K_FLOOR - 1 :]
    if not np.any(ok):
        raise RangeError(f"truncation for p={p}, lambda={lam} exceeds K={K_CAP}")
    return int(K_FLOOR + np.argmax(ok))


@dataclass(frozen=True)
class CoefficientSequence:
    """Weights ``b_1..b_K`` of a Sobolev statistic."""

    family: str
    p: int
    coeffs: np.ndarray
    lam: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        b = np.array(self.coeffs, dtype=float)
        if b.ndim != 1 or b.size < 1:
            raise DomainError("need at least one coefficient")
        if np.any(b < 0) or not np.all(np.isfinite(b)):
            raise DomainError("coefficients must be finite and >= 0")
        b.setflags(write=False)
        object.__setattr__(self, "coeffs", b)

    @property
    def K(self) -> int:
        return self.coeffs.size

    @classmethod
    def from_family(cls, family: str, p: int, lam: float, K: int | None = None, tol: float = 1e-12):
        if family not in _WEIGHTS:
            raise DomainError(f"family {family!r} is not parametric")
        if K is None:
            K = truncation_order(p, lam, tol, family)
        return cls(family, p, _WEIGHTS[family](np.arange(1, K + 1), p, lam), lam)

    @classmethod
    def stein(cls, p: int, lam: float, K: int | None = None):
        return cls.from_family("stein", p, lam, K)

    @classmethod
    def dksd(cls, p: int, lam: float, K: int | None = None):
        return cls.from_family("dksd", p, lam, K)

    @classmethod
    def softmax(cls, p: int, lam: float, K: int | None = None):
        return cls.from_family("softmax", p, lam, K)


@dataclass(frozen=True)
class GegenbauerGram:
    """``A_k = (1/n) sum_{i,j} C_k(X_i' X_j)`` for ``k = 1..K`` (stored at index ``k-1``)."""

    A: np.ndarray
    n: int
    p: int
    offdiag: np.ndarray = field(repr=False, default=None)

    @property
    def K(self) -> int:
        return self.A.size

    def statistic(self, coeffs, diagonal: bool = True) -> float:
        b = coeffs.coeffs if isinstance(coeffs, CoefficientSequence) else np.asarray(coeffs, dtype=float)
        if b.size > self.K:
            raise DomainError(f"need K={b.size} Gegenbauer terms, gram has {self.K}")
        A = self.A if diagonal else self.offdiag
        return float(b @ A[: b.size])


def _recurrence_coeffs(K: int, p: int) -> tuple[np.ndarray, np.ndarray]:
    """``C_k(u) = a_k u C_(k-1)(u) - b_k C_(k-2)(u)``; index 1 holds ``C_1 = a_1 u``."""
    alpha = (p - 2) / 2.0
    k = np.arange(K + 1, dtype=float)
    if alpha == 0:
        a, b = np.full(K + 1, 2.0), np.ones(K + 1)
        a[1] = 1.0
    else:
        kk = np.maximum(k, 1.0)
        a = 2.0 * (k + alpha - 1.0) / kk
        b = (k + 2.0 * alpha - 2.0) / kk
    b[1] = 0.0
    return a, b


@njit(cache=True)
def _pair_sums_kernel(X, a, b):  # pragma: no cover - compiled
    n, p = X.shape
    K = a.size - 1
    out = np.zeros(K)
    row = np.zeros(K)
    for i in range(n - 1):
        row[:] = 0.0
        for j in range(i + 1, n):
            u = 0.0
            for d in range(p):
                u += X[i, d] * X[j, d]
            u = min(1.0, max(-1.0, u))
            prev = 1.0
            cur = a[1] * u
            row[0] += cur
            for k in range(2, K + 1):
                nxt = a[k] * u * cur - b[k] * prev
                prev = cur
                cur = nxt
                row[k - 1] += cur
        out += row
    return out


def pair_sums(points, K: int) -> np.ndarray:
    """``S_k = sum_{i<j} C_k(X_i' X_j)`` for ``k = 1..K``; O(n^2 K), compiled loop."""
    X = points if isinstance(points, np.ndarray) else as_points(points)
    X = np.ascontiguousarray(X, dtype=float)
    if K < 1:
        raise DomainError("K must be >= 1")
    a, b = _recurrence_coeffs(int(K), X.shape[1])
    return _pair_sums_kernel(X, a, b)


def batch_pair_sums(X: np.ndarray, K: int) -> np.ndarray:
    """:func:`pair_sums` for a stack of samples ``X`` of shape ``(B, n, p)`` -> ``(B, K)``."""
    return np.stack([pair_sums(x, K) for x in X]) if len(X) else np.zeros((0, K))


def gram_from_pair_sums(S: np.ndarray, n: int, p: int) -> np.ndarray:
    """Turn pair sums ``S_k`` into ``A_k = C_k(1) + 2 S_k / n`` (works on stacked rows)."""
    K = S.shape[-1]
    return gegenbauer_at_one(np.arange(1, K + 1), p) + 2.0 * S / n


def _monomial_table(p: int, K: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exponents, degrees and multinomial weights of all monomials of degree 1..K in p variables."""
    exps, degs, weights = [], [], []
    for m in range(1, K + 1):
        for combo in itertools.combinations_with_replacement(range(p), m):
            e = np.bincount(combo, minlength=p)
            exps.append(e)
            degs.append(m)
            weights.append(math.factorial(m) / math.prod(math.factorial(int(x)) for x in e))
    return np.array(exps), np.array(degs), np.array(weights)


def _gegenbauer_monomial_coeffs(K: int, p: int) -> np.ndarray:
    """``P[k, m]`` with ``C_k(u) = sum_m P[k, m] u^m`` for ``k = 0..K``."""
    a, b = _recurrence_coeffs(K, p)
    P = np.zeros((K + 1, K + 1))
    P[0, 0] = 1.0
    if K >= 1:
        P[1, 1] = a[1]
    for k in range(2, K + 1):
        P[k, 1:] = a[k] * P[k - 1, :-1]
        P[k] -= b[k] * P[k - 2]
    return P


def gram_by_moments(points, K: int) -> np.ndarray:
    """``A_1..A_K`` from power sums of monomials instead of pairs.

    Uses ``sum_{i,j} (X_i' X_j)^m = sum_{|e| = m} (m! / e!) (sum_i X_i^e)^2``,
    so the cost is O(n binom(K + p, p)) rather than O(n^2 K). Worth it only
    for small ``K`` and ``p`` with large ``n``; agrees with
    :func:`gegenbauer_gram` to rounding.
    """
    X = points if isinstance(points, np.ndarray) else as_points(points)
    if K < 1:
        raise DomainError("K must be >= 1")
    n, p = X.shape
    exps, degs, weights = _monomial_table(p, int(K))
    powers = X.T[:, None, :] ** np.arange(K + 1)[None, :, None]  # (p, K+1, n)
    mono = np.ones((len(exps), n))
    for d in range(p):
        mono *= powers[d, exps[:, d]]
    sums = mono.sum(axis=1)
    moments = np.zeros(K + 1)
    moments[0] = n * n
    np.add.at(moments, degs, weights * sums * sums)
    return _gegenbauer_monomial_coeffs(int(K), p)[1:] @ moments / n


def gegenbauer_gram(sample, K: int) -> GegenbauerGram:
    """The lambda-free Gegenbauer Gram summaries ``A_1..A_K`` of a sample."""
    if K < 1:
        raise DomainError("K must be >= 1")
    X = as_points(sample)
    n, p = X.shape
    S = pair_sums(X, K)
    return GegenbauerGram(A=gram_from_pair_sums(S, n, p), n=n, p=p, offdiag=2.0 * S / n)


def sobolev_statistic(sample, coeffs: CoefficientSequence, v_statistic: bool = False, diagonal: bool = True) -> float:
    """``(1/n) sum_{i,j} sum_k b_k C_k(X_i' X_j)``.

    ``v_statistic=True`` divides by a further ``n`` (the ``1/n^2`` V-statistic
    scaling of the directional KSD). ``diagonal=False`` drops the ``i = j``
    terms, i.e. returns ``S_n - sum_k b_k C_k(1)``.
    """
    X = as_points(sample)
    if coeffs.p != X.shape[1]:
        raise DomainError(f"coefficients are for p={coeffs.p}, sample has p={X.shape[1]}")
    value = gegenbauer_gram(X, coeffs.K).statistic(coeffs, diagonal=diagonal)
    return value / X.shape[0] if v_statistic else value


def stein_statistic(sample, lam: float, K: int | None = None) -> float:
    """``T_n(lam)`` via its Gegenbauer expansion."""
    X = as_points(sample)
    return sobolev_statistic(X, CoefficientSequence.stein(X.shape[1], lam, K))


def t_n_bruteforce_p2(sample, lam: float, nodes: int = 4096) -> float:
    """``T_n(lam)`` on the circle by direct quadrature over ``t = (cos th, sin th)``.

    Uses the closed-form Laplacian on S^1,
    ``(lam^2 sin^2(th - phi) - lam cos(th - phi)) exp(lam cos(th - phi))``,
    and a periodic trapezoid rule against ``dth / (2 pi)``.
    """
    X = as_points(sample)
    if X.shape[1] != 2:
        raise DomainError("the quadrature oracle is for p = 2 only")
    phi = np.arctan2(X[:, 1], X[:, 0])
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    d = theta[:, None] - phi[None, :]
    lap = (lam**2 * np.sin(d) ** 2 - lam * np.cos(d)) * np.exp(lam * np.cos(d))
    field_vals = lap.sum(axis=1)
    return float(np.mean(field_vals**2) / X.shape[0])


def d_n(p: int, lam: float, K: int | None = None) -> float:
    """Diagonal part ``sum_{k<=K} c_kp(lam) C_k(1)`` of ``T_n``; sample independent."""
    if K is None:
        K = truncation_order(p, lam)
    ks = np.arange(1, K + 1)
    return float(np.sum(c_kp(ks, p, lam) * gegenbauer_at_one(ks, p)))


def stein_kernel(p: int, lam: float, u):
    """Closed form of the Stein kernel ``h(u) = sum_{k>=1} c_kp(lam) C_k(u)``.

    ``h`` is the zonal bi-Laplacian of ``G(u) = m_0p(lam sqrt(2 + 2u))``:
    with ``L = (1 - u^2) d^2/du^2 - (p - 1) u d/du`` one has ``h = L(L G)``.
    Derivatives follow from ``d/dz [(sqrt z / 2)^-nu I_nu(sqrt z)] =
    (1/4) (sqrt z / 2)^-(nu+1) I_(nu+1)(sqrt z)`` with ``z = 2 lam^2 (1 + u)``,
    so ``h`` needs only ``I_alpha, ..., I_(alpha+4)`` at ``lam sqrt(2 + 2u)``.
    Independent of any truncation; ``T_n = h(1) + (2/n) sum_{i<j} h(X_i' X_j)``.
    """
    _check_p_lam(p, lam)
    alpha = (p - 2) / 2.0
    u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
    a = lam * np.sqrt(2.0 + 2.0 * u)
    g = []
    for j in range(5):
        nu = alpha + j
        with np.errstate(divide="ignore"):
            log_f = np.where(a > 0, -nu * np.log(np.where(a > 0, a, 1.0) / 2.0) + log_bessel_i(nu, a), -math.lgamma(nu + 1.0))
        g.append(np.exp(math.lgamma(alpha + 1.0) + j * math.log(lam * lam / 2.0) + log_f))
    _, g1, g2, g3, g4 = g
    lg1 = (1.0 - u * u) * g3 - (p + 1.0) * u * g2 - (p - 1.0) * g1
    lg2 = (1.0 - u * u) * g4 - (p + 3.0) * u * g3 - 2.0 * p * g2
    return _ret((1.0 - u * u) * lg2 - (p - 1.0) * u * lg1)


def _check_p_lam(p: int, lam: float) -> None:
    if p < 2 or int(p) != p:
        raise DomainError(f"dimension p must be an integer >= 2, got {p!r}")
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")


def rayleigh(sample) -> float:
    """Rayleigh statistic ``n p |mean|^2``."""
    X = as_points(sample)
    n, p = X.shape
    xbar = X.mean(axis=0)
    return float(n * p * xbar @ xbar)


def bingham(sample) -> float:
    """Bingham statistic ``(n p (p+2) / 2) (tr(S^2) - 1/p)``, ``S`` the scatter matrix."""
    X = as_points(sample)
    n, p = X.shape
    S = X.T @ X / n
    return float(n * p * (p + 2) / 2.0 * (np.sum(S * S) - 1.0 / p))


def max_pair(sample) -> float:
    """Largest off-diagonal inner product ``max_{i<j} X_i' X_j``."""
    X = as_points(sample)
    n = X.shape[0]
    if n < 2:
        raise DomainError("max_pair needs at least two points")
    G = X @ X.T
    return float(G[np.triu_indices(n, 1)].max())


def large_lambda_prediction(sample, lam: float) -> tuple[float, float]:
    """Leading-order prediction of ``log(T_n(lam) - D_n(lam)) / lam`` for large ``lam``.

    Each off-diagonal pair contributes
    ``P(c)^2 m_0p(lam r) ~ poly(lam) exp(lam r)`` with ``r = |X_i + X_j|``,
    ``c = r / 2`` and ``P(v) = lam^2 (1 - v^2) - lam (p - 1) v``, from a Laplace
    approximation at ``t = (X_i + X_j) / r``. Returns
    ``(sqrt(2 + 2 max_pair), correction)`` where the prediction is their sum and
    ``correction`` collects the logarithmic prefactor and the contribution of
    the non-maximal pairs, divided by ``lam``.
    """
    X = as_points(sample)
    n, p = X.shape
    u = (X @ X.T)[np.triu_indices(n, 1)]
    r = np.sqrt(np.clip(2.0 + 2.0 * u, 0.0, 4.0))
    r_max = float(r.max())
    c = r / 2.0
    P = lam**2 * (1.0 - c**2) - lam * (p - 1) * c
    a = lam * r
    alpha = (p - 2) / 2.0
    if p == 2:
        log_m0 = log_bessel_i(0.0, a)
    else:
        log_m0 = math.lgamma(alpha + 1.0) + alpha * np.log(2.0 / a) + log_bessel_i(alpha, a)
    log_terms = 2.0 * np.log(np.abs(P)) + log_m0 - lam * r_max
    top = log_terms.max()
    log_sum = top + math.log(np.sum(np.exp(log_terms - top)))
    correction = (math.log(2.0 / n) + log_sum) / lam
    return r_max, correction
