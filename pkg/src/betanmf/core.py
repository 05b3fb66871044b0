"""Beta-divergence evaluation and the shared elementwise kernel machinery.

Everything here is a pure function of its inputs and safe to call
concurrently on read-only data.  All arithmetic is in 64-bit floats and
all matrices are dense 2-D arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

#: Default floor used to keep update denominators away from exact zero.
#: Exact arithmetic would never need it: the multiplicative structure of
#: the updates preserves positivity, but floating-point underflow does not.
DEFAULT_FLOOR = 1e-300


class DivergenceDomainError(ValueError):
    """The pair (x, y) is outside the domain of d_beta for the given beta.

    Typically raised for zero data entries with beta < 1; applying a
    positive shift to the data (see :class:`DataMatrix`) resolves it.
    """


def gamma_exponent(beta):
    """Exponent applied to the multiplicative update ratio.

    Equals 1/(2-beta) for beta < 1, 1 on [1, 2] and 1/(beta-1) above 2.
    The function is continuous in beta and takes values in (0, 1].
    """
    if beta < 1.0:
        return 1.0 / (2.0 - beta)
    if beta <= 2.0:
        return 1.0
    return 1.0 / (beta - 1.0)


def beta_divergence(x, y, beta):
    """Scalar beta-divergence d_beta(x | y).

    beta=2 is the half squared error, beta=1 the generalized
    Kullback-Leibler divergence (with x log x -> 0 as x -> 0) and beta=0
    the Itakura-Saito divergence; any other real beta uses the generic
    three-term form.

    Parameters
    ----------
    x : float
        Nonnegative observation; must be positive when ``beta <= 0``.
    y : float
        Positive approximation.
    beta : float
        Divergence shape parameter.

    Returns
    -------
    float
        d_beta(x | y), nonnegative, and zero exactly when x == y.
    """
    if not np.isfinite(x) or not np.isfinite(y):
        raise DivergenceDomainError("divergence arguments must be finite")
    if y <= 0.0:
        raise DivergenceDomainError(f"second argument must be positive, got {y}")
    if x < 0.0 or (x == 0.0 and beta <= 0.0):
        raise DivergenceDomainError(
            f"first argument must be {'positive' if beta <= 0 else 'nonnegative'} "
            f"for beta={beta}, got {x}; a positive data shift restores the domain"
        )
    if x == y:
        return 0.0
    if beta == 2.0:
        return 0.5 * (x - y) ** 2
    if beta == 1.0:
        return (x * np.log(x / y) if x > 0.0 else 0.0) - x + y
    if beta == 0.0:
        r = x / y
        return r - np.log(r) - 1.0
    return (
        x**beta / (beta * (beta - 1.0))
        + y**beta / beta
        - x * y ** (beta - 1.0) / (beta - 1.0)
    )


def beta_divergence_elements(x, y, beta):
    """Entrywise d_beta(x | y) for arrays of equal shape.

    Domain checking is the caller's responsibility; use :func:`objective`
    for the checked entry point.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if beta == 2.0:
        d = x - y
        return 0.5 * d * d
    if beta == 1.0:
        return xlogy(x, x / y) - x + y
    if beta == 0.0:
        r = x / y
        return r - np.log(r) - 1.0
    return (
        np.power(x, beta) / (beta * (beta - 1.0))
        + np.power(y, beta) / beta
        - x * np.power(y, beta - 1.0) / (beta - 1.0)
    )


def divergence_total(x, y, beta):
    """Sum of entrywise beta-divergences between two arrays (unchecked)."""
    return float(np.sum(beta_divergence_elements(x, y, beta)))


def guarded_divide(numerator, denominator, floor=DEFAULT_FLOOR):
    """Entrywise numerator / max(denominator, floor).

    Never produces infinities or NaNs for finite nonnegative inputs.
    """
    numerator = np.asarray(numerator, dtype=float)
    denominator = np.asarray(denominator, dtype=float)
    if numerator.shape != denominator.shape:
        raise ValueError(
            f"shape mismatch: {numerator.shape} vs {denominator.shape}"
        )
    if floor <= 0.0:
        raise ValueError("floor must be positive")
    return numerator / np.maximum(denominator, floor)


def elementwise_power(m, p):
    """m**p with short circuits for the exponents the update rules produce.

    Powers 0 and 1 never call ``np.power`` (they return an all-ones array
    and the input itself, respectively -- callers must not mutate the
    result in place for p == 1), and small integer / half-integer
    exponents use multiply, divide and sqrt instead.
    """
    if p == 0.0:
        return np.ones_like(m)
    if p == 1.0:
        return m
    if p == 2.0:
        return m * m
    if p == -1.0:
        return 1.0 / m
    if p == -2.0:
        return 1.0 / (m * m)
    if p == 0.5:
        return np.sqrt(m)
    return np.power(m, p)


def power_pair(m, p):
    """Return (m**p, m**(p+1)), reusing the first power for the second.

    ``None`` stands for an all-ones array in either slot; the update
    kernels turn those into plain copies or row/column sums instead of
    materializing a matrix of ones.
    """
    if p == -2.0:
        a = 1.0 / (m * m)
        return a, 1.0 / m
    if p == -1.0:
        return 1.0 / m, None
    if p == 0.0:
        return None, m
    if p == 1.0:
        return m, m * m
    a = np.power(m, p)
    return a, a * m


def default_kappa(values, beta):
    """Default data shift: 0 where the divergence domain allows it.

    Zero when beta lies in [1, 2] and the data has no zeros, otherwise
    1e-9 times the mean data value.
    """
    values = np.asarray(values, dtype=float)
    if 1.0 <= beta <= 2.0 and values.min() > 0.0:
        return 0.0
    return 1e-9 * float(values.mean())


@dataclass
class DataMatrix:
    """Dense nonnegative observation matrix with an optional positive shift.

    The shift ``kappa`` is applied as V + kappa (entrywise) whenever the
    matrix enters a divergence, an update rule or a residual, so that
    zero entries stay inside the domain of d_beta for beta < 1.
    """

    values: np.ndarray
    kappa: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or min(self.values.shape) < 1:
            raise ValueError("data must be a 2-D matrix with positive dimensions")
        if not np.isfinite(self.values).all():
            raise ValueError("data entries must be finite")
        if self.values.min() < 0.0:
            raise ValueError("data entries must be nonnegative")
        self.kappa = float(self.kappa)
        if not np.isfinite(self.kappa) or self.kappa < 0.0:
            raise ValueError("kappa must be a nonnegative finite real")

    @property
    def shape(self):
        return self.values.shape

    def shifted(self):
        """The matrix actually factorized: values + kappa."""
        if self.kappa == 0.0:
            return self.values
        return self.values + self.kappa

    def check_domain(self, beta):
        """Raise if this matrix cannot be used with the given beta."""
        if beta < 1.0 and self.kappa == 0.0 and self.values.min() == 0.0:
            raise DivergenceDomainError(
                f"data contains zeros, which is outside the domain of "
                f"d_beta for beta={beta}; set a positive kappa shift"
            )


@dataclass
class FactorPair:
    """Strictly positive factors w (F x K) and h (K x N)."""

    w: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        if self.w.ndim != 2 or self.h.ndim != 2:
            raise ValueError("factors must be 2-D matrices")
        if self.w.shape[1] != self.h.shape[0]:
            raise ValueError(
                f"inner dimensions disagree: w is {self.w.shape}, h is {self.h.shape}"
            )
        if not (np.isfinite(self.w).all() and np.isfinite(self.h).all()):
            raise ValueError("factor entries must be finite")
        if self.w.min() <= 0.0 or self.h.min() <= 0.0:
            raise ValueError("factor entries must be strictly positive")

    @property
    def rank(self):
        return self.w.shape[1]

    def product(self, kappa=0.0):
        p = self.w @ self.h
        if kappa:
            p += kappa
        return p


@dataclass
class BetaParam:
    """Divergence parameter together with its derived update exponent."""

    beta: float
    gamma: float = field(init=False)

    def __post_init__(self):
        self.beta = float(self.beta)
        self.gamma = gamma_exponent(self.beta)


def objective(data, factors, beta):
    """Total beta-divergence between the shifted data and the shifted model.

    Evaluates D_beta(V + kappa | WH + kappa), summing the scalar
    divergence over all entries.

    Parameters
    ----------
    data : DataMatrix or ndarray
        Observations; a bare array is treated as shift-free.
    factors : FactorPair
        Current factors.
    beta : float
        Divergence shape parameter.
    """
    if not isinstance(data, DataMatrix):
        data = DataMatrix(np.asarray(data, dtype=float))
    if data.shape != (factors.w.shape[0], factors.h.shape[1]):
        raise ValueError(
            f"dimension mismatch: data is {data.shape}, "
            f"model is {(factors.w.shape[0], factors.h.shape[1])}"
        )
    x = data.shifted()
    if beta <= 0.0 and x.min() <= 0.0:
        raise DivergenceDomainError(
            f"data entries must be positive for beta={beta}; "
            f"set a positive kappa shift"
        )
    y = factors.product(data.kappa)
    if y.min() <= 0.0:
        raise DivergenceDomainError("model product has nonpositive entries")
    return divergence_total(x, y, beta)
