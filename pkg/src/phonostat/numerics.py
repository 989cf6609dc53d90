"""Special functions and 1-D numerical routines shared by the rest of the package.

Everything here is a pure function of its inputs. Array arguments are
handled with numpy so the order-statistic integrands can be evaluated for
all ranks on a shared set of abscissae.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

EPS = 2.220446049250313e-16
FPMIN = 1e-300
# integrand tail is dropped once it falls this many nats below its peak
CUTOFF_NATS = 40.0


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, result: "QuadratureResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class Tolerance:
    rel: float = 1e-10
    abs: float = 1e-15
    max_iter: int = 2000

    def __post_init__(self):
        if not self.rel > 0:
            raise ValueError(f"rel must be > 0, got {self.rel}")
        if not self.abs >= 0:
            raise ValueError(f"abs must be >= 0, got {self.abs}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class QuadratureResult:
    value: float | np.ndarray
    error_estimate: float | np.ndarray
    evaluations: int


class ScalarMinimum(NamedTuple):
    argmin: float
    min_value: float
    converged: bool


# ---------------------------------------------------------------------------
# regularized incomplete gamma


def _series_log_p(y: np.ndarray, beta: float) -> np.ndarray:
    """log P(beta, y) by the power series; valid for any y > 0, fast for y < beta + 1."""
    ap = np.full_like(y, beta)
    term = np.full_like(y, 1.0 / beta)
    total = term.copy()
    active = np.ones(y.shape, dtype=bool)
    for _ in range(100_000):
        ap[active] += 1.0
        term[active] *= y[active] / ap[active]
        total[active] += term[active]
        active &= np.abs(term) >= np.abs(total) * EPS
        if not active.any():
            break
    else:
        raise ArithmeticError("incomplete gamma series did not converge")
    return np.log(total) - y + beta * np.log(y) - math.lgamma(beta)


def _cf_log_q(y: np.ndarray, beta: float) -> np.ndarray:
    """log Q(beta, y) by the modified Lentz continued fraction; for y >= beta + 1."""
    b = y + 1.0 - beta
    c = np.full_like(y, 1.0 / FPMIN)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(y.shape, dtype=bool)
    for i in range(1, 100_000):
        an = -i * (i - beta)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < FPMIN, FPMIN, d)
        c = b + an / c
        c = np.where(np.abs(c) < FPMIN, FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= EPS
        if not active.any():
            break
    else:
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return np.log(h) - y + beta * np.log(y) - math.lgamma(beta)


def _log1mexp(x: np.ndarray) -> np.ndarray:
    """log(1 - exp(x)) for x <= 0, accurate at both ends."""
    with np.errstate(divide="ignore"):
        return np.where(x > -math.log(2.0), np.log(-np.expm1(x)), np.log1p(-np.exp(x)))


def log_gamma_pq(y, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Return (log P, log Q) of the regularized incomplete gamma function.

    P is the lower and Q = 1 - P the upper regularized function. Both logs
    are computed directly on the side where they are well conditioned, so
    ``log Q`` stays accurate in the far tail and ``log P`` near zero.
    """
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(np.isnan(y)):
        raise DomainError("y must be >= 0")
    flat = np.atleast_1d(y).ravel()
    log_p = np.empty_like(flat)
    log_q = np.empty_like(flat)

    zero = flat == 0
    big = np.isinf(flat)
    low = (flat < beta + 1.0) & ~zero
    high = ~low & ~zero & ~big
    log_p[zero], log_q[zero] = -np.inf, 0.0
    log_p[big], log_q[big] = 0.0, -np.inf
    if low.any():
        log_p[low] = _series_log_p(flat[low], beta)
        log_q[low] = _log1mexp(log_p[low])
    if high.any():
        log_q[high] = _cf_log_q(flat[high], beta)
        log_p[high] = _log1mexp(log_q[high])
    return log_p.reshape(y.shape), log_q.reshape(y.shape)


def regularized_incomplete_gamma(y, beta: float):
    """P(beta, y) = (1/Gamma(beta)) * integral_0^y x^(beta-1) e^-x dx.

    Accepts a scalar or an array for ``y``; returns the same shape.
    """
    log_p, _ = log_gamma_pq(y, beta)
    out = np.exp(log_p)
    return float(out) if out.ndim == 0 else out


def gamma_pdf(y, beta: float):
    """Derivative of :func:`regularized_incomplete_gamma` with respect to y."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.exp((beta - 1.0) * np.log(y) - y - math.lgamma(beta))
    return float(out) if out.ndim == 0 else out


def inverse_regularized_incomplete_gamma(p: float, beta: float, rtol: float = 1e-14) -> float:
    """Solve P(beta, y) = p for y >= 0.

    Bracketed Newton iteration: each Newton step uses the analytic density,
    and falls back to bisection whenever it would leave the current bracket.
    """
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    if not 0.0 <= p < 1.0:
        raise DomainError(f"p must lie in [0, 1), got {p}")
    if p == 0.0:
        return 0.0
    q = 1.0 - p

    def residual(x: float) -> float:
        log_p, log_q = log_gamma_pq(x, beta)
        # subtract on the side of the smaller tail to keep precision
        if p < 0.5:
            return math.exp(float(log_p)) - p
        return q - math.exp(float(log_q))

    lo, hi = 0.0, max(1.0, beta)
    while residual(hi) < 0:
        lo, hi = hi, 2.0 * hi
    # small-y asymptote P ~ y^beta / Gamma(beta+1) as a starting point
    x = math.exp((math.log(p) + math.lgamma(beta + 1.0)) / beta)
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    for _ in range(500):
        r = residual(x)
        if r == 0.0:
            return x
        if r < 0:
            lo = x
        else:
            hi = x
        slope = gamma_pdf(x, beta)
        step = r / slope if slope > 0 else math.inf
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= rtol * x_new or hi - lo <= rtol * hi:
            return x_new
        x = x_new
    raise ArithmeticError(f"inverse incomplete gamma did not converge for p={p}, beta={beta}")


# ---------------------------------------------------------------------------
# quadrature

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[1:-1:2] = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk15(func, a: float, b: float):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = np.asarray(func(mid + half * _NODES), dtype=float)
    kron = half * np.tensordot(_KWEIGHTS, vals, axes=(0, 0))
    gauss = half * np.tensordot(_GWEIGHTS, vals, axes=(0, 0))
    return kron, np.abs(kron - gauss)


@dataclass(eq=False)
class _Panel:
    a: float
    b: float
    which: int
    value: np.ndarray
    error: np.ndarray


def _find_cutoff(f, start: float = 1.0, limit: float = 1e8) -> float:
    """Upper limit beyond which every component of |f| is CUTOFF_NATS below its peak."""
    ys = np.geomspace(1e-6 * start, start, 25)
    vals = np.abs(np.asarray(f(ys), dtype=float))
    peak = vals.max(axis=0)
    b = start
    while b < limit:
        new = np.linspace(b, 2.0 * b, 9)[1:]
        b *= 2.0
        tail = np.abs(np.asarray(f(new), dtype=float))
        peak = np.maximum(peak, tail.max(axis=0))
        if np.all(tail <= peak * math.exp(-CUTOFF_NATS)):
            return b
    raise QuadratureError(
        f"integrand does not decay below e^-{CUTOFF_NATS:g} of its peak before y={limit:g}",
        QuadratureResult(np.nan, np.inf, 0),
    )


def integrate_semi_infinite(
    f: Callable[[np.ndarray], np.ndarray],
    singular_exponent: float = 0.0,
    tol: Tolerance = Tolerance(),
) -> QuadratureResult:
    """Integrate ``f`` over [0, inf) by globally adaptive Gauss-Kronrod (7/15).

    ``f`` is called with a 1-D array of abscissae and returns either an array
    of the same length or a 2-D array (points x components); in the latter
    case every component is integrated on the same panels and convergence
    requires all of them to meet the tolerance.

    Near zero ``f`` is assumed to behave like ``y**singular_exponent`` times
    a smooth function. The first panel [0, 1] is mapped through
    y = t**(1/(s+1)), which removes that power; the remaining panel runs up
    to the point where the integrand has decayed by CUTOFF_NATS.
    """
    s = float(singular_exponent)
    if not s > -1.0:
        raise DomainError(f"singular_exponent must be > -1, got {s}")
    power = 1.0 / (s + 1.0)
    evaluations = 0

    def counted(func):
        def wrapper(x):
            nonlocal evaluations
            evaluations += len(x)
            return func(x)
        return wrapper

    def mapped(t):
        vals = np.asarray(f(t ** power), dtype=float)
        jac = power * t ** (power - 1.0)
        return vals * (jac[:, None] if vals.ndim == 2 else jac)

    integrands = (counted(mapped), counted(f))
    cutoff = _find_cutoff(f)
    split = 1.0
    panels: list[_Panel] = []
    for which, (lo, hi, pieces) in enumerate(((0.0, split ** (s + 1.0), 4), (split, cutoff, 16))):
        edges = np.linspace(lo, hi, pieces + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            value, error = _gk15(integrands[which], a, b)
            panels.append(_Panel(a, b, which, value, error))

    def totals():
        value = sum(p.value for p in panels)
        error = sum(p.error for p in panels)
        return value, error

    for iteration in range(tol.max_iter + 1):
        value, error = totals()
        allowed = np.maximum(tol.abs, tol.rel * np.abs(value))
        if np.all(error <= allowed):
            return QuadratureResult(_unwrap(value), _unwrap(error), evaluations)
        if iteration == tol.max_iter:
            break
        # bisect the panel contributing most to the worst normalized error
        splittable = [p for p in panels if p.b - p.a > 64 * EPS * max(abs(p.b), 1e-300)]
        if not splittable:
            break
        worst = max(splittable, key=lambda p: float(np.max(p.error / allowed)))
        panels.remove(worst)
        mid = 0.5 * (worst.a + worst.b)
        for a, b in ((worst.a, mid), (mid, worst.b)):
            v, e = _gk15(integrands[worst.which], a, b)
            panels.append(_Panel(a, b, worst.which, v, e))

    value, error = totals()
    raise QuadratureError(
        f"quadrature did not converge within {tol.max_iter} subdivisions "
        f"(error estimate {np.max(error):.3g})",
        QuadratureResult(_unwrap(value), _unwrap(error), evaluations),
    )


def _unwrap(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


# ---------------------------------------------------------------------------
# scalar minimization

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def minimize_scalar(f: Callable[[float], float], lo: float, hi: float,
                    tol: Tolerance = Tolerance(rel=1e-12, abs=1e-7, max_iter=200)) -> ScalarMinimum:
    """Golden-section search for the minimum of a unimodal ``f`` on [lo, hi].

    Stops once the bracket half-width is below ``tol.abs``. If ``max_iter``
    is exhausted first, the bracket midpoint is returned with
    ``converged=False``.
    """
    if not lo < hi:
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    a, b = float(lo), float(hi)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    converged = False
    for _ in range(tol.max_iter):
        if 0.5 * (b - a) <= tol.abs:
            converged = True
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    candidates = [(fc, c), (fd, d), (f(x), x)]
    best_value, best_x = min(candidates)
    if converged:
        return ScalarMinimum(best_x, best_value, True)
    return ScalarMinimum(x, f(x), False)
