"""Uniformity tests on the sphere S^{p-1} based on the Laplace-Beltrami Stein operator.

The main entry points:

* :func:`stein_statistic` and :func:`sobolev_statistic` evaluate test statistics;
* :mod:`steinunif.null_dist` gives null moments, the chi-square mixture limit
  and Monte Carlo critical values;
* :class:`AlternativeModel` samples the benchmark alternatives;
* :mod:`steinunif.asymptotics` has fixed-alternative limits (tau, sigma^2);
* :mod:`steinunif.tuning` selects lambda; :mod:`steinunif.harness` runs
  power studies; :mod:`steinunif.fields` exports diagnostic fields on S^2.
"""

from .alternatives import AlternativeModel
from .exceptions import DomainError, NumericError, RangeError
from .null_dist import ChiSquareMixture, mc_critical_value, p_value_mc
from .sampleset import SampleSet, read_csv, write_csv
from .statistic import (
    CoefficientSequence,
    bingham,
    max_pair,
    rayleigh,
    sobolev_statistic,
    stein_kernel,
    stein_statistic,
)

__version__ = "0.1.0"

__all__ = [
    "AlternativeModel",
    "ChiSquareMixture",
    "CoefficientSequence",
    "DomainError",
    "NumericError",
    "RangeError",
    "SampleSet",
    "bingham",
    "max_pair",
    "mc_critical_value",
    "p_value_mc",
    "rayleigh",
    "read_csv",
    "sobolev_statistic",
    "stein_kernel",
    "stein_statistic",
    "write_csv",
]
