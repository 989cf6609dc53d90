"""Order statistics of the symmetric Dirichlet density.

A draw from Dir(beta, ..., beta) is n independent Gamma(beta, 1) variates
divided by their sum. Sorting the coordinates in non-increasing order gives
the ranked frequencies theta_(1) >= ... >= theta_(n). Their moments reduce
to one-dimensional integrals over the scale variable y of a single gamma
variate:

    <theta_(r)^m> = integral_0^inf y^m chi_r(y; m) dy

    chi_r(y; m) = Gamma(n b) / Gamma(n b + m) * n! / ((n-r)! (r-1)!)
                  * y^(b-1) e^-y / Gamma(b) * P(y)^(n-r) * Q(y)^(r-1)

with P, Q the lower/upper regularized incomplete gamma functions.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .numerics import (
    DomainError,
    Tolerance,
    integrate_semi_infinite,
    inverse_regularized_incomplete_gamma,
    log_gamma_pq,
)

QUAD_TOL = Tolerance(rel=1e-11, abs=1e-16, max_iter=4000)


@dataclass(frozen=True)
class DirichletModel:
    n: int
    beta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n}")
        if not self.beta > 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "beta", float(self.beta))

    def check_rank(self, r: int) -> None:
        if not 1 <= r <= self.n:
            raise DomainError(f"rank must lie in [1, {self.n}], got {r}")


@dataclass(frozen=True, eq=False)
class RankedSpectrum:
    """Frequencies sorted non-increasing and summing to one.

    ``labels`` optionally names the unit owning each rank.
    """

    freqs: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        freqs = np.array(self.freqs, dtype=float)
        if freqs.ndim != 1 or len(freqs) < 1:
            raise ValueError("freqs must be a non-empty 1-D vector")
        if np.any(freqs < 0) or np.any(freqs > 1):
            raise ValueError("frequencies must lie in [0, 1]")
        if np.any(np.diff(freqs) > 0):
            raise ValueError("frequencies must be non-increasing")
        if abs(freqs.sum() - 1.0) > 1e-9:
            raise ValueError(f"frequencies sum to {freqs.sum()!r}, not 1")
        if self.labels is not None and len(self.labels) != len(freqs):
            raise ValueError("labels must match freqs in length")
        freqs.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)

    def __len__(self) -> int:
        return len(self.freqs)

    def __eq__(self, other):
        if not isinstance(other, RankedSpectrum):
            return NotImplemented
        return np.array_equal(self.freqs, other.freqs) and self.labels == other.labels

    @classmethod
    def from_values(cls, values, labels=None) -> "RankedSpectrum":
        """Sort arbitrary non-negative values and normalize them to sum one."""
        values = np.asarray(values, dtype=float)
        order = np.argsort(-values, kind="stable")
        freqs = values[order] / values.sum()
        if labels is not None:
            labels = tuple(labels[i] for i in order)
        return cls(freqs, labels)


@dataclass(frozen=True)
class OrderStatMoments:
    rank: int
    mean: float
    second_moment: float
    relative_fluctuation: float = field(init=False)

    def __post_init__(self):
        if self.second_moment < self.mean ** 2 - 1e-12:
            raise ValueError("second moment below squared mean")
        eps = (self.second_moment - self.mean ** 2) / self.mean ** 2
        object.__setattr__(self, "relative_fluctuation", max(eps, 0.0))


# ---------------------------------------------------------------------------
# exact moments by quadrature


def _log_prefactors(n: int, beta: float, m: int) -> np.ndarray:
    r = np.arange(1, n + 1)
    log_binom = np.array([math.lgamma(n + 1) - math.lgamma(n - k + 1) - math.lgamma(k) for k in r])
    return math.lgamma(n * beta) - math.lgamma(n * beta + m) + log_binom - math.lgamma(beta)


def _log_chi(n: int, beta: float, m: int, y: np.ndarray) -> np.ndarray:
    """log chi_r(y; m) for all ranks; shape (len(y), n)."""
    y = np.asarray(y, dtype=float)
    log_p, log_q = log_gamma_pq(y, beta)
    r = np.arange(1, n + 1)
    upper, lower = n - r, r - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        power = 0.0 if beta == 1.0 else (beta - 1.0) * np.log(y)
        out = (
            _log_prefactors(n, beta, m)[None, :]
            + (power - y)[:, None]
            + np.where(upper == 0, 0.0, upper[None, :] * log_p[:, None])
            + np.where(lower == 0, 0.0, lower[None, :] * log_q[:, None])
        )
    at_zero = y == 0
    if np.any(at_zero):
        # chi ~ y^(beta (n - r + 1) - 1) as y -> 0 since P(y) ~ y^beta / Gamma(beta + 1)
        exponent = beta * (upper + 1) - 1.0
        limit = _log_prefactors(n, beta, m) - upper * math.lgamma(beta + 1.0)
        limit = np.where(np.isclose(exponent, 0.0, atol=1e-14), limit, np.where(exponent > 0, -np.inf, np.inf))
        out[at_zero] = limit
    return out


def chi_r_density(model: DirichletModel, r: int, m: int, y):
    """chi_r(y; m), evaluated in log space. Scalar or array ``y``."""
    model.check_rank(r)
    if m < 0 or int(m) != m:
        raise DomainError(f"m must be a non-negative integer, got {m}")
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y_arr < 0):
        raise DomainError("y must be >= 0")
    out = np.exp(_log_chi(model.n, model.beta, int(m), y_arr)[:, r - 1])
    return float(out[0]) if np.ndim(y) == 0 else out


class _MomentCache:
    """Thread-safe memo of rank-moment vectors keyed by (n, beta, m)."""

    def __init__(self):
        self._data: dict[tuple[int, float, int], np.ndarray] = {}
        self._lock = threading.Lock()

    def get(self, key):
        return self._data.get(key)

    def put(self, key, value: np.ndarray) -> np.ndarray:
        value = np.array(value)
        value.setflags(write=False)
        with self._lock:
            return self._data.setdefault(key, value)

    def clear(self) -> None:
        with self._lock:
            self._data.clear()


moment_cache = _MomentCache()


def rank_moments(model: DirichletModel, m: int, tol: Tolerance = QUAD_TOL) -> np.ndarray:
    """<theta_(r)^m> for r = 1..n as one vector (cached)."""
    if m < 1 or int(m) != m:
        raise DomainError(f"m must be a positive integer, got {m}")
    key = (model.n, model.beta, int(m))
    cached = moment_cache.get(key)
    if cached is not None:
        return cached
    n, beta = model.n, model.beta

    def integrand(y):
        with np.errstate(divide="ignore"):
            return np.exp(_log_chi(n, beta, m, y) + (m * np.log(y))[:, None])

    result = integrate_semi_infinite(integrand, singular_exponent=beta - 1.0, tol=tol)
    return moment_cache.put(key, result.value)


def moment(model: DirichletModel, r: int, m: int, tol: Tolerance = QUAD_TOL) -> float:
    model.check_rank(r)
    return float(rank_moments(model, m, tol)[r - 1])


def order_stat_moments(model: DirichletModel, r: int) -> OrderStatMoments:
    model.check_rank(r)
    return OrderStatMoments(r, moment(model, r, 1), moment(model, r, 2))


def expected_spectrum(model: DirichletModel) -> RankedSpectrum:
    """Mean ranked frequencies <theta_(r)>, r = 1..n."""
    means = rank_moments(model, 1)
    total = means.sum()
    if abs(total - 1.0) > 1e-6:
        raise ArithmeticError(f"rank means sum to {total!r} for {model}")
    if np.any(np.diff(means) > 0):
        raise ArithmeticError(f"rank means are not non-increasing for {model}")
    return RankedSpectrum(means / total)


def relative_fluctuation_exact(model: DirichletModel, r: int) -> float:
    """(<theta_(r)^2> - <theta_(r)>^2) / <theta_(r)>^2."""
    return order_stat_moments(model, r).relative_fluctuation


def relative_fluctuations(model: DirichletModel) -> np.ndarray:
    """Vector form of :func:`relative_fluctuation_exact` over all ranks."""
    m1, m2 = rank_moments(model, 1), rank_moments(model, 2)
    return np.maximum((m2 - m1 ** 2) / m1 ** 2, 0.0)


# ---------------------------------------------------------------------------
# approximations


def approx_spectrum(model: DirichletModel) -> np.ndarray:
    """Closed-form estimate of the rank means from r/n = 1 - P(f_r n beta).

    Each f_r is the saddle-point location for its rank scaled by 1/(n beta);
    at r = n the relation gives f_n = 0. The result is non-increasing but
    deliberately left unnormalized (its mass falls short of one by roughly
    the missing upper tail), so it is returned as a plain array rather than
    a :class:`RankedSpectrum`.
    """
    n, beta = model.n, model.beta
    head = [inverse_regularized_incomplete_gamma(1.0 - r / n, beta) for r in range(1, n)]
    return np.append(np.array(head) / (n * beta), 0.0)


def saddle_point(model: DirichletModel, r: int) -> float:
    """y0 solving (n - r)/n = P(y0); the peak of chi_r for 1 << r << n."""
    model.check_rank(r)
    if r == model.n:
        raise DomainError("saddle point undefined at r = n")
    return inverse_regularized_incomplete_gamma((model.n - r) / model.n, model.beta)


def relative_fluctuation_asymptotic(model: DirichletModel, r: int) -> float:
    """Saddle-point (Gaussian) estimate of the relative fluctuation.

    Only meaningful when both r and n - r are large; used for diagnostics.
    """
    n, beta = model.n, model.beta
    y0 = saddle_point(model, r)
    log_term = (
        math.log(beta) + math.log(n - r) + math.log(r) - 2.0 * math.log(n)
        + 2.0 * math.lgamma(beta) - 2.0 * beta * math.log(y0) + 2.0 * y0
    )
    return (math.exp(log_term) - 1.0) / (n * beta + 1.0)


# ---------------------------------------------------------------------------
# Monte Carlo oracle


def _gamma_variates(rng: np.random.Generator, beta: float, size) -> np.ndarray:
    if beta < 1.0:
        # Gamma(b) = Gamma(b + 1) * U^(1/b)
        return rng.standard_gamma(beta + 1.0, size) * rng.random(size) ** (1.0 / beta)
    return rng.standard_gamma(beta, size)


def sample_batches(model: DirichletModel, count: int, seed: int,
                   batch_size: int = 100_000, sort: bool = True) -> Iterator[np.ndarray]:
    """Yield arrays of Dirichlet draws, shape (<= batch_size, n).

    Rows are sorted non-increasing unless ``sort`` is false. The stream is
    a deterministic function of ``seed`` and ``batch_size``.
    """
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    remaining = count
    while remaining:
        size = min(batch_size, remaining)
        g = _gamma_variates(rng, model.beta, (size, model.n))
        theta = g / g.sum(axis=1, keepdims=True)
        if sort:
            theta = -np.sort(-theta, axis=1)
        remaining -= size
        yield theta


def sample_spectra(model: DirichletModel, count: int, seed: int) -> Iterator[RankedSpectrum]:
    """Stream of ``count`` random ranked spectra."""
    for batch in sample_batches(model, count, seed, batch_size=min(count, 10_000)):
        for row in batch:
            yield RankedSpectrum(row / row.sum())


@dataclass(frozen=True)
class MonteCarloMoments:
    count: int
    mean: np.ndarray
    mean_se: np.ndarray
    second_moment: np.ndarray
    second_moment_se: np.ndarray


def monte_carlo_moments(model: DirichletModel, count: int, seed: int,
                        batch_size: int = 100_000, sort: bool = True,
                        keep: int | None = None) -> MonteCarloMoments:
    """Sample estimates of the first two rank moments with standard errors.

    With ``keep``, only the first ``keep`` coordinates of each draw are
    retained and renormalized before ranking.
    """
    width = keep or model.n
    s1 = np.zeros(width)
    s2 = np.zeros(width)
    s4 = np.zeros(width)
    for batch in sample_batches(model, count, seed, batch_size, sort=sort and keep is None):
        if keep is not None:
            batch = batch[:, :keep] / batch[:, :keep].sum(axis=1, keepdims=True)
            if sort:
                batch = -np.sort(-batch, axis=1)
        sq = batch * batch
        s1 += batch.sum(axis=0)
        s2 += sq.sum(axis=0)
        s4 += (sq * sq).sum(axis=0)
    mean = s1 / count
    second = s2 / count
    var1 = (second - mean ** 2) * count / (count - 1)
    var2 = (s4 / count - second ** 2) * count / (count - 1)
    return MonteCarloMoments(count, mean, np.sqrt(var1 / count), second, np.sqrt(var2 / count))
