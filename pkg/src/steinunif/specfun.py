"""Special functions and constants for zonal harmonic analysis on S^{p-1}.

Everything here works with the Gegenbauer index ``alpha = (p - 2) / 2``; the
circle (``p = 2``) uses Chebyshev polynomials ``cos(k arccos u)`` instead.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .exceptions import DomainError, NumericError, RangeError

__all__ = [
    "log_gamma",
    "log_bessel_i",
    "bessel_i",
    "gegenbauer",
    "gegenbauer_table",
    "gegenbauer_at_one",
    "gamma_kp",
    "dim_kp",
    "surface_measure",
    "log_m_kp",
    "m_kp",
    "linearization_coeff",
    "linearization_coeffs",
]

_SERIES_EPS = 1e-16
_SERIES_MAX_TERMS = 5000


def log_gamma(x):
    """Natural log of the gamma function for positive ``x``.

    Accepts a scalar or an array; scalars return a Python float.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"log_gamma requires finite x > 0, got {x!r}")
    if arr.ndim == 0:
        return math.lgamma(float(arr))
    return gammaln(arr)


def log_bessel_i(nu, x):
    """Log of the modified Bessel function of the first kind, ``log I_nu(x)``.

    Evaluated with the ascending series

        I_nu(x) = sum_m (x/2)^(nu + 2m) / (m! Gamma(nu + m + 1)),

    with the leading factor ``(x/2)^nu / Gamma(nu + 1)`` kept in log space and
    the remaining (positive) terms accumulated as ratios, so there is neither
    cancellation nor premature overflow for large orders. The series is cut
    once a term drops below ``1e-16`` times the running sum.

    ``nu`` and ``x`` broadcast against each other. ``x = 0`` is allowed and
    yields ``0`` for ``nu = 0`` and ``-inf`` otherwise.
    """
    nu_arr, x_arr = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(x, dtype=float))
    if np.any(~np.isfinite(nu_arr)) or np.any(nu_arr < 0):
        raise DomainError(f"Bessel order must be finite and >= 0, got {nu!r}")
    if np.any(~np.isfinite(x_arr)) or np.any(x_arr < 0):
        raise DomainError(f"Bessel argument must be finite and >= 0, got {x!r}")
    scalar = nu_arr.ndim == 0
    nu_arr = np.atleast_1d(nu_arr).astype(float)
    x_arr = np.atleast_1d(x_arr).astype(float)

    out = np.empty(nu_arr.shape)
    zero = x_arr == 0
    out[zero] = np.where(nu_arr[zero] == 0, 0.0, -np.inf)
    live = ~zero
    if np.any(live):
        nv = nu_arr[live]
        half = x_arr[live] / 2.0
        q = half * half
        log_lead = nv * np.log(half) - gammaln(nv + 1.0)
        term = np.ones_like(nv)
        total = np.ones_like(nv)
        with np.errstate(over="ignore", invalid="ignore"):
            for m in range(_SERIES_MAX_TERMS):
                term = term * q / ((m + 1.0) * (m + 1.0 + nv))
                total = total + term
                if not np.all(np.isfinite(total)):
                    bad = float(np.max(x_arr[live][~np.isfinite(total)]))
                    raise RangeError(f"Bessel series overflows for x = {bad:g}")
                if np.all(term < _SERIES_EPS * total):
                    break
            else:
                raise NumericError("Bessel series did not converge")
        out[live] = log_lead + np.log(total)
    return float(out[0]) if scalar else out


def bessel_i(nu, x):
    """Modified Bessel function of the first kind ``I_nu(x)`` (ascending series)."""
    logv = log_bessel_i(nu, x)
    with np.errstate(over="ignore"):
        val = np.exp(logv)
    if np.any(np.isinf(val)):
        raise RangeError(f"I_nu(x) overflows double precision (log value {np.max(logv):.1f})")
    return float(val) if np.ndim(val) == 0 else val


def _alpha(p: int) -> float:
    if p < 2 or int(p) != p:
        raise DomainError(f"dimension p must be an integer >= 2, got {p!r}")
    return (p - 2) / 2.0


def gegenbauer(k: int, p: int, u):
    """Gegenbauer polynomial ``C_k^{(p-2)/2}(u)``; Chebyshev ``cos(k arccos u)`` for ``p = 2``."""
    alpha = _alpha(p)
    if k < 0:
        raise DomainError(f"degree must be >= 0, got {k}")
    u_arr = np.asarray(u, dtype=float)
    if np.any(np.abs(u_arr) > 1.0):
        raise DomainError("Gegenbauer argument must lie in [-1, 1]")
    if alpha == 0:
        val = np.cos(k * np.arccos(u_arr))
    else:
        val = gegenbauer_table(k, p, u_arr)[k]
    return float(val) if val.ndim == 0 else val


def gegenbauer_table(K: int, p: int, u) -> np.ndarray:
    """All of ``C_0(u), ..., C_K(u)`` by upward three-term recurrence.

    Returns an array of shape ``(K + 1,) + u.shape``. No range check on ``u``;
    callers feeding inner products of unit vectors should clip first.
    """
    alpha = _alpha(p)
    u = np.asarray(u, dtype=float)
    out = np.empty((K + 1,) + u.shape)
    out[0] = 1.0
    if K == 0:
        return out
    if alpha == 0:
        out[1] = u
        for k in range(2, K + 1):
            out[k] = 2.0 * u * out[k - 1] - out[k - 2]
        return out
    out[1] = 2.0 * alpha * u
    for k in range(2, K + 1):
        out[k] = (2.0 * (k + alpha - 1.0) * u * out[k - 1] - (k + 2.0 * alpha - 2.0) * out[k - 2]) / k
    return out


def gegenbauer_at_one(k, p: int):
    """``C_k(1)``: binom(k + 2 alpha - 1, k) for ``p > 2`` and 1 on the circle."""
    alpha = _alpha(p)
    k_arr = np.asarray(k, dtype=float)
    if alpha == 0:
        val = np.ones_like(k_arr)
    else:
        val = np.exp(gammaln(k_arr + 2 * alpha) - gammaln(2 * alpha) - gammaln(k_arr + 1))
    return float(val) if val.ndim == 0 else val


def gamma_kp(k, p: int):
    """Funk-Hecke constant: ``int C_k(t.x) C_k(t.y) dnu(t) = gamma_kp * C_k(x.y)``."""
    _alpha(p)
    k_arr = np.asarray(k, dtype=float)
    if p == 2:
        val = np.where(k_arr == 0, 1.0, 0.5)
    else:
        val = (p - 2) / (2 * k_arr + p - 2)
    return float(val) if val.ndim == 0 else val


def _comb0(n: int, r: int) -> int:
    return math.comb(n, r) if 0 <= r <= n else 0


def dim_kp(k: int, p: int) -> int:
    """Dimension of the space of degree-``k`` spherical harmonics on S^{p-1}."""
    _alpha(p)
    if k < 0:
        raise DomainError(f"degree must be >= 0, got {k}")
    d = _comb0(p + k - 3, p - 2) + _comb0(p + k - 2, p - 2)
    if d >= 2**63:
        raise RangeError(f"d_(k={k}, p={p}) exceeds 64-bit range")
    return d


def surface_measure(m: int) -> float:
    """Surface area ``omega_m`` of the unit sphere S^m (``omega_0 = 2``)."""
    if m < 0:
        raise DomainError(f"sphere dimension must be >= 0, got {m}")
    return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)


def log_m_kp(k, p: int, lam):
    """Log of the Gegenbauer coefficient of ``u -> exp(lam u)``; see :func:`m_kp`."""
    alpha = _alpha(p)
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0):
        raise DomainError("degree must be >= 0")
    if lam <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    if alpha == 0:
        val = np.where(k_arr == 0, 0.0, math.log(2.0)) + log_bessel_i(k_arr, lam)
    else:
        val = (
            alpha * math.log(2.0 / lam)
            + math.lgamma(alpha)
            + np.log(k_arr + alpha)
            + log_bessel_i(alpha + k_arr, lam)
        )
    return float(val) if np.ndim(val) == 0 else np.asarray(val)


def m_kp(k, p: int, lam):
    """Coefficients of ``exp(lam u) = sum_k m_kp(lam) C_k^{(p-2)/2}(u)``.

    ``(2 - 1{k=0}) I_k(lam)`` on the circle, and
    ``(2/lam)^alpha Gamma(alpha) (k + alpha) I_{alpha + k}(lam)`` for ``p > 2``.
    """
    val = np.exp(log_m_kp(k, p, lam))
    return float(val) if np.ndim(val) == 0 else val


def _log_poch(a: float, n: int) -> float:
    return math.lgamma(a + n) - math.lgamma(a)


def linearization_coeff(k1: int, k2: int, ell: int, p: int) -> float:
    """Coefficient of ``C_{k1+k2-2 ell}`` in the product ``C_k1 * C_k2``.

    On the circle this is ``(1{ell=0} + 1{ell=min(k1,k2)}) / 2``; for ``p >= 3``
    the Pochhammer symbols are evaluated as differences of log-gamma values.
    """
    alpha = _alpha(p)
    if k1 < 0 or k2 < 0:
        raise DomainError("degrees must be >= 0")
    if not 0 <= ell <= min(k1, k2):
        raise DomainError(f"ell={ell} outside [0, min(k1, k2)] = [0, {min(k1, k2)}]")
    if alpha == 0:
        return 0.5 * ((ell == 0) + (ell == min(k1, k2)))
    s = k1 + k2
    log_val = (
        math.log(s + alpha - 2 * ell)
        - math.log(s + alpha - ell)
        + math.lgamma(s - 2 * ell + 1)
        - math.lgamma(ell + 1)
        - math.lgamma(k1 - ell + 1)
        - math.lgamma(k2 - ell + 1)
        + _log_poch(alpha, ell)
        + _log_poch(alpha, k1 - ell)
        + _log_poch(alpha, k2 - ell)
        + _log_poch(2 * alpha, s - ell)
        - _log_poch(alpha, s - ell)
        - _log_poch(2 * alpha, s - 2 * ell)
    )
    return math.exp(log_val)


def linearization_coeffs(k1: int, k2: int, p: int) -> np.ndarray:
    """All ``L(ell)``, ``ell = 0..min(k1, k2)``, so that
    ``C_k1 C_k2 = sum_ell L(ell) C_{k1+k2-2 ell}``."""
    alpha = _alpha(p)
    if k1 < 0 or k2 < 0:
        raise DomainError("degrees must be >= 0")
    m = min(k1, k2)
    ell = np.arange(m + 1, dtype=float)
    if alpha == 0:
        out = np.zeros(m + 1)
        out[0] += 0.5
        out[m] += 0.5
        return out
    s = k1 + k2

    def lpoch(a, n):
        return gammaln(a + n) - gammaln(a)

    log_val = (
        np.log(s + alpha - 2 * ell)
        - np.log(s + alpha - ell)
        + gammaln(s - 2 * ell + 1)
        - gammaln(ell + 1)
        - gammaln(k1 - ell + 1)
        - gammaln(k2 - ell + 1)
        + lpoch(alpha, ell)
        + lpoch(alpha, k1 - ell)
        + lpoch(alpha, k2 - ell)
        + lpoch(2 * alpha, s - ell)
        - lpoch(alpha, s - ell)
        - lpoch(2 * alpha, s - 2 * ell)
    )
    return np.exp(log_val)
