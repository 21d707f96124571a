"""Scalar numerical kernels used throughout the package.

Provides log-gamma, the upper incomplete gamma function for arbitrary real
order (including the negative non-integer orders produced by the service
Mellin transform), and adaptive quadrature on [0, inf).

All functions are pure and safe to call concurrently. Quantities that can
over- or underflow double precision are carried as natural logs (LogValue).
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import scipy.integrate

__all__ = [
    "LogValue",
    "NumericalError",
    "ln_gamma",
    "upper_incomplete_gamma",
    "integrate_semi_infinite",
]

EULER_GAMMA = 0.5772156649015328606

# Regime boundaries for Gamma(a, x); see _log_upper_gamma.
_X_SERIES_MAX = 1.5
_A_CF_ALWAYS = -32.0
_MAX_ITER = 10_000
_TINY = 1e-300


class NumericalError(ArithmeticError):
    """An iterative scheme failed to reach its tolerance.

    Carries the best estimate and an error bound so callers can decide
    whether the partial result is still usable.
    """

    def __init__(self, message, best_estimate=None, error_bound=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_bound = error_bound


@dataclass(frozen=True)
class LogValue:
    """A nonnegative quantity stored as its natural log.

    Zero is encoded as -inf. The represented value is exp(log_magnitude).
    """

    log_magnitude: float

    @classmethod
    def from_value(cls, value: float) -> "LogValue":
        if value < 0.0:
            raise ValueError(f"LogValue represents nonnegative reals, got {value}")
        return cls(math.log(value) if value > 0.0 else -math.inf)

    def value(self) -> float:
        return math.exp(self.log_magnitude)


def ln_gamma(a: float) -> float:
    """ln Gamma(a) for a > 0."""
    if not a > 0.0:
        raise ValueError(f"ln_gamma requires a > 0, got a={a}")
    return math.lgamma(a)


def _log_upper_gamma_cf(a: float, x: float) -> float:
    """log Gamma(a, x) via the Legendre continued fraction (modified Lentz).

    Reliable for x >= a + 1, and for a <= 0 whenever x is not tiny; for very
    negative a the partial denominators grow like |a| and the fraction
    converges in a handful of steps regardless of x.
    """
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 3e-16:
            if not h > 0.0:
                raise NumericalError(
                    f"continued fraction for Gamma({a}, {x}) lost positivity"
                )
            return -x + a * math.log(x) + math.log(h)
    raise NumericalError(
        f"continued fraction for Gamma({a}, {x}) did not converge",
        best_estimate=-x + a * math.log(x) + math.log(abs(h)),
    )


def _log_lower_regularized(a: float, x: float) -> float:
    """log P(a, x) via the standard ascending series; needs a > 0, x < a + 1."""
    total = 1.0 / a
    term = total
    for n in range(1, _MAX_ITER + 1):
        term *= x / (a + n)
        total += term
        if term < total * 1e-17:
            return a * math.log(x) - x - math.lgamma(a) + math.log(total)
    raise NumericalError(f"lower gamma series for ({a}, {x}) did not converge")


def _log_upper_gamma_series(a: float, x: float) -> float:
    """log Gamma(a, x) for -1 < a <= 0.5 and 0 < x <= ~1.5.

    Uses Gamma(a, x) = x^a * (B + S) with
      B = expm1(lgamma(a+1) - a*log(x)) / a   (limit -gamma_E - log(x) at a=0)
      S = sum_{n>=1} (-1)^(n+1) x^n / (n! (a+n)),
    which stays well conditioned across a = 0, unlike the raw splitting
    Gamma(a) - lower_gamma(a, x).
    """
    log_x = math.log(x)
    if a == 0.0:
        bracket = -EULER_GAMMA - log_x
    else:
        bracket = math.expm1(math.lgamma(a + 1.0) - a * log_x) / a
    s = 0.0
    p = 1.0
    for n in range(1, 500):
        p *= x / n
        t = p / (a + n)
        s += t if (n & 1) else -t
        if p < 1e-18 * max(1.0, abs(bracket) + abs(s)):
            break
    total = bracket + s
    if not total > 0.0:
        raise NumericalError(f"series for Gamma({a}, {x}) lost all significance")
    return a * log_x + math.log(total)


@lru_cache(maxsize=1 << 18)
def _log_upper_gamma(a: float, x: float) -> float:
    if math.isnan(a) or math.isnan(x):
        raise ValueError("upper_incomplete_gamma got NaN input")
    if not x > 0.0:
        raise ValueError(
            f"upper_incomplete_gamma requires x > 0 (integral diverges at 0 "
            f"for a <= 0), got x={x}"
        )
    if a > 0.5:
        if x < a + 1.0:
            p = math.exp(_log_lower_regularized(a, x))
            return math.lgamma(a) + math.log1p(-p)
        return _log_upper_gamma_cf(a, x)
    if x > _X_SERIES_MAX or a <= _A_CF_ALWAYS:
        return _log_upper_gamma_cf(a, x)
    if a > -0.5:
        return _log_upper_gamma_series(a, x)

    # Shift the order into (-0.5, 0.5] and recur back down:
    #   Gamma(b, x) = (x^b e^-x - Gamma(b+1, x)) / (-b),  b < 0.
    # For the small x handled here the subtraction is benign: the two terms
    # stay a factor >= 1 + (|b|+1)/x apart, and every divisor |b| >= 0.5.
    n_steps = int(math.floor(0.5 - a))
    a0 = a + n_steps
    log_val = _log_upper_gamma_series(a0, x)
    log_x = math.log(x)
    b = a0
    for _ in range(n_steps):
        b -= 1.0
        log_pow = b * log_x - x
        z = log_val - log_pow
        if z >= 0.0:
            raise NumericalError(
                f"downward recurrence for Gamma({a}, {x}) lost significance"
            )
        log_val = log_pow + math.log1p(-math.exp(z)) - math.log(-b)
    return log_val


def upper_incomplete_gamma(a: float, x: float) -> LogValue:
    """log of Gamma(a, x) = int_x^inf t^(a-1) e^-t dt, for any real order a.

    The result is strictly positive for every real a when x > 0, so a plain
    log representation suffices. x must be positive.
    """
    return LogValue(_log_upper_gamma(float(a), float(x)))


def integrate_semi_infinite(f: Callable[[float], float], rel_tol: float = 1e-10) -> float:
    """Integrate f over [0, inf) to the requested relative tolerance.

    Wraps QUADPACK's adaptive scheme (scipy.integrate.quad), which maps the
    half-line onto a finite interval and subdivides adaptively. Subdivisions
    are capped so the evaluation budget stays below 2^20 points. If the
    budget is exhausted, or the estimated error exceeds the tolerance by
    more than an order of magnitude, a NumericalError carrying the best
    estimate and error bound is raised.
    """
    limit = (1 << 20) // 21  # 21-point Gauss-Kronrod per subinterval
    out = scipy.integrate.quad(
        f, 0.0, math.inf, epsabs=0.0, epsrel=rel_tol, limit=limit, full_output=True
    )
    value, abserr = out[0], out[1]
    if len(out) > 3 and abserr > 10.0 * rel_tol * abs(value):
        raise NumericalError(
            f"semi-infinite quadrature did not converge: {out[3]}",
            best_estimate=value,
            error_bound=abserr,
        )
    return value
