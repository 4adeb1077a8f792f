"""Asymptotics of ``T_n(lambda)`` under a fixed rotationally symmetric alternative.

For a density ``q(x) = sum_k beta_k C_k(mu' x)`` (with ``beta_0 = 1``) the
Funk-Hecke formula gives ``E[C_k(s' X)] = beta_k gamma_k C_k(mu' s)``. From
this follow the mean field ``z``, the limit ``tau`` of ``T_n / n`` and the
variance ``sigma^2`` of ``sqrt(n) (T_n / n - tau)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .alternatives import AlternativeModel
from .exceptions import DomainError, NumericError, RangeError
from .specfun import gamma_kp, gegenbauer_at_one, gegenbauer_table, linearization_coeffs, m_kp
from .statistic import K_CAP, K_FLOOR, c_kp, truncation_order

__all__ = [
    "AlternativeHarmonics",
    "psi",
    "psi_closed",
    "psi_coeffs",
    "psi_order",
    "kernel_K",
    "z_value",
    "tau_rotsym",
    "xi_diag",
    "sigma2_rotsym",
    "kernel_Kprime_mc",
    "power_approx",
    "norm_sf",
]


@dataclass(frozen=True)
class AlternativeHarmonics:
    """Gegenbauer coefficients ``beta_0..beta_K`` of a density symmetric about ``mu``."""

    p: int
    betas: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        b = np.array(self.betas, dtype=float)
        mu = np.array(self.mu, dtype=float)
        if b.ndim != 1 or b.size < 1:
            raise DomainError("need beta_0 at least")
        if mu.shape != (self.p,) or abs(np.linalg.norm(mu) - 1.0) > 1e-12:
            raise DomainError("mu must be a unit vector of length p")
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "mu", mu)

    @property
    def K(self) -> int:
        return self.betas.size - 1

    @classmethod
    def from_model(cls, model: AlternativeModel, K: int) -> "AlternativeHarmonics":
        return cls(model.p, model.betas(K), model.mu)

    @classmethod
    def uniform(cls, p: int, K: int = 0) -> "AlternativeHarmonics":
        mu = np.zeros(p)
        mu[0] = 1.0
        return cls(p, np.concatenate([[1.0], np.zeros(K)]), mu)

    def beta(self, k) -> np.ndarray:
        """``beta_k``, zero beyond the stored range."""
        k = np.asarray(k)
        out = np.zeros(k.shape)
        ok = k <= self.K
        out[ok] = self.betas[k[ok]]
        return out


def _order(p: int, lam: float, K: int | None) -> int:
    return truncation_order(p, lam) if K is None else int(K)


def psi_order(p: int, lam: float, tol: float = 1e-15) -> int:
    """Truncation for the ``Psi`` and ``z`` series, whose weights ``m_kp k (k+p-2)``
    decay like the square root of the Stein weights: smallest ``K >= 8`` whose
    last term ``m_K K (K+p-2) C_K(1)`` is below ``tol`` times the partial sum."""
    k = np.arange(1, K_CAP + 1)
    terms = m_kp(k, p, lam) * k * (k + p - 2) * gegenbauer_at_one(k, p)
    ok = terms[K_FLOOR - 1 :] < tol * np.cumsum(terms)[K_FLOOR - 1 :]
    if not np.any(ok):
        raise RangeError(f"Psi truncation for p={p}, lambda={lam} exceeds K={K_CAP}")
    return int(K_FLOOR + np.argmax(ok))


def _dot(a, b) -> np.ndarray:
    return np.clip(np.asarray(a, dtype=float) @ np.asarray(b, dtype=float), -1.0, 1.0)


def psi_coeffs(p: int, lam: float, K: int) -> np.ndarray:
    """``m_kp(lam) (-k)(k+p-2)`` for ``k = 0..K`` (the ``k = 0`` entry is 0)."""
    k = np.arange(K + 1)
    return -m_kp(k, p, lam) * k * (k + p - 2)


def psi(p: int, lam: float, t, x, K: int | None = None):
    """Spherical Laplacian of ``x -> exp(lam t'x)``, as a Gegenbauer series in ``t'x``."""
    K = psi_order(p, lam) if K is None else int(K)
    u = _dot(t, x)
    val = np.tensordot(psi_coeffs(p, lam, K), gegenbauer_table(K, p, u), axes=1)
    return float(val) if np.ndim(val) == 0 else val


def psi_closed(p: int, lam: float, u):
    """Closed form ``(lam^2 (1 - u^2) - lam (p-1) u) exp(lam u)`` of :func:`psi` at ``u = t'x``."""
    u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
    return (lam * lam * (1.0 - u * u) - lam * (p - 1) * u) * np.exp(lam * u)


def kernel_K(p: int, lam: float, dot, K: int | None = None):
    """Null covariance kernel ``sum_{k>=1} c_kp(lam) C_k(dot)``."""
    K = _order(p, lam, K)
    u = np.clip(np.asarray(dot, dtype=float), -1.0, 1.0)
    val = np.tensordot(c_kp(np.arange(1, K + 1), p, lam), gegenbauer_table(K, p, u)[1:], axes=1)
    return float(val) if np.ndim(val) == 0 else val


def z_value(h: AlternativeHarmonics, lam: float, s, K: int | None = None):
    """Mean field ``z(s) = E[Psi(s, X)] = sum_k beta_k m_k gamma_k (-k)(k+p-2) C_k(mu's)``.

    Terms beyond the stored ``beta`` range count as zero.
    """
    K = min(psi_order(h.p, lam), h.K) if K is None else int(K)
    k = np.arange(K + 1)
    coef = h.beta(k) * gamma_kp(k, h.p) * psi_coeffs(h.p, lam, K)
    val = np.tensordot(coef, gegenbauer_table(K, h.p, _dot(s, h.mu)), axes=1)
    return float(val) if np.ndim(val) == 0 else val


def tau_rotsym(h: AlternativeHarmonics, lam: float, K: int | None = None) -> float:
    """Almost-sure limit of ``T_n / n``: ``sum_k (beta_k gamma_k)^2 c_k C_k(1)``."""
    K = _order(h.p, lam, K)
    k = np.arange(1, K + 1)
    return float(np.sum((h.beta(k) * gamma_kp(k, h.p)) ** 2 * c_kp(k, h.p, lam) * gegenbauer_at_one(k, h.p)))


def xi_diag(h: AlternativeHarmonics, k1: int, k2: int, s) -> float:
    """``E[C_k1(s'X) C_k2(s'X)] = sum_ell L(ell) beta_j gamma_j C_j(mu's)``, ``j = k1 + k2 - 2 ell``."""
    L = linearization_coeffs(k1, k2, h.p)
    j = k1 + k2 - 2 * np.arange(L.size)
    u = float(_dot(s, h.mu))
    Cj = gegenbauer_table(k1 + k2, h.p, u)[j]
    return float(np.sum(L * h.beta(j) * gamma_kp(j, h.p) * Cj))


def sigma2_rotsym(h: AlternativeHarmonics, lam: float, K: int | None = None) -> float:
    """``4 Var(sum_k gamma_k c_k beta_k C_k(mu'X))`` via the linearization formula.

    ``betas`` must be stored up to ``2K`` (products of degree-``K`` terms reach
    degree ``2K``). A result below ``-1e-8`` relative to the second moment
    signals an inadequate truncation and raises :class:`NumericError`.
    """
    p = h.p
    K = _order(p, lam, K)
    if h.K < 2 * K:
        raise DomainError(f"need beta_0..beta_{2 * K}, have up to beta_{h.K}")
    k = np.arange(1, K + 1)
    a = gamma_kp(k, p) * c_kp(k, p, lam) * h.beta(k)
    jj = np.arange(2 * K + 1)
    moment_j = h.beta(jj) * gamma_kp(jj, p) * gegenbauer_at_one(jj, p)
    second = 0.0
    for i1, k1 in enumerate(k):
        for i2 in range(i1, K):
            k2 = int(k[i2])
            L = linearization_coeffs(int(k1), k2, p)
            term = a[i1] * a[i2] * float(np.sum(L * moment_j[k1 + k2 - 2 * np.arange(L.size)]))
            second += term if i1 == i2 else 2.0 * term
    mean = float(np.sum(a * h.beta(k) * gamma_kp(k, p) * gegenbauer_at_one(k, p)))
    var = second - mean * mean
    if var < -1e-8 * max(abs(second), 1e-300):
        raise NumericError(f"negative variance {var:.3g}; truncation K={K} too small")
    return 4.0 * max(var, 0.0)


def kernel_Kprime_mc(
    h: AlternativeHarmonics | None,
    model: AlternativeModel,
    lam: float,
    s,
    t,
    M: int = 10000,
    rng: np.random.Generator | None = None,
    K: int | None = None,
) -> float:
    """Monte Carlo ``K'(s, t) = E[Psi(s,X) Psi(t,X)] - z(s) z(t)`` over ``M`` draws of ``model``.

    With harmonics ``h`` the centering uses the series :func:`z_value`;
    with ``h=None`` it uses the sample means of ``Psi``.
    """
    if rng is None:
        raise DomainError("pass an explicit numpy Generator")
    X = model.sample(M, rng)
    ps = psi_closed(model.p, lam, X @ np.asarray(s, dtype=float))
    pt = psi_closed(model.p, lam, X @ np.asarray(t, dtype=float))
    if h is None:
        zs, zt = ps.mean(), pt.mean()
    else:
        zs, zt = z_value(h, lam, s, K), z_value(h, lam, t, K)
    return float(np.mean(ps * pt) - zs * zt)


def norm_sf(x):
    """Standard normal upper tail ``1 - Phi(x)`` via ``erfc``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def power_approx(c_n: float, n: int, tau: float, sigma: float, d_n: float | None = None) -> float:
    """``1 - Phi(sqrt(n) / sigma * (c_n / n - tau))``.

    With ``d_n`` given, the diagonal part of ``T_n`` is removed first, using
    ``E[T_n] = d_n + (n - 1) tau``:
    ``1 - Phi(sqrt(n) / sigma * ((c_n - d_n) / n - (n - 1) tau / n))``.
    The uncentered form is noticeably pessimistic at ``n`` of a few hundred.
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    if d_n is None:
        x = c_n / n - tau
    else:
        x = (c_n - d_n) / n - (n - 1) * tau / n
    return float(norm_sf(math.sqrt(n) / sigma * x))
