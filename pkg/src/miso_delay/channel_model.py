"""Effective channel-gain model for the zero-forcing downlink.

After zero-forcing precoding (linear or with successive dirty-paper
encoding), the scalar gain xi that a scheduled user sees in the rate
log2(1 + rho*xi) is Gamma(m, 1) distributed, where 2m is the number of
degrees of freedom left after nulling the other users. This module holds
that distribution, samplers for it, the instantaneous-rate map, and a
matrix-level oracle that re-derives the gains from raw Rayleigh channel
matrices so the distributional claim can be validated from first
principles.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .special_functions import ln_gamma

__all__ = [
    "Scheme",
    "EffectiveGain",
    "DofAssignment",
    "gain_pdf",
    "sample_gain",
    "zfbf_gain_oracle",
    "zfbf_gain_samples",
    "dof_assignment",
    "service_bits",
]

log = logging.getLogger(__name__)

# Condition-number ceiling above which a channel draw counts as singular.
_COND_LIMIT = 1e12
_MAX_RESAMPLES = 100


class Scheme(enum.Enum):
    """Precoding strategy for the simultaneously scheduled users."""

    ZFBF = "zfbf"
    ZF_DPC = "zfdpc"

    @classmethod
    def parse(cls, text: str) -> "Scheme":
        for scheme in cls:
            if scheme.value == text.strip().lower():
                return scheme
        raise ValueError(f"unknown scheme {text!r}; expected 'zfbf' or 'zfdpc'")


@dataclass(frozen=True)
class EffectiveGain:
    """One realized channel gain and the shape of its law: xi ~ Gamma(m, 1)."""

    xi: float
    m: int

    def __post_init__(self):
        if self.xi < 0.0:
            raise ValueError(f"gain must be nonnegative, got {self.xi}")
        if self.m < 1:
            raise ValueError(f"shape m must be >= 1, got {self.m}")


@dataclass(frozen=True)
class DofAssignment:
    """Distribution of the gain shape parameter m for one slot type.

    entries: tuple of (m, probability). ZFBF gives every user the same m;
    successive encoding gives a uniform mixture over the encoding positions.
    """

    entries: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        total = sum(p for _, p in self.entries)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"assignment probabilities sum to {total}, not 1")
        if any(m < 1 for m, _ in self.entries):
            raise ValueError("gain shape m must be >= 1")


def gain_pdf(xi: float, m: int) -> float:
    """Density of the effective gain: xi^(m-1) e^-xi / Gamma(m), xi >= 0."""
    if xi < 0.0:
        raise ValueError(f"gain must be nonnegative, got {xi}")
    if m < 1:
        raise ValueError(f"shape m must be >= 1, got {m}")
    if xi == 0.0:
        return 1.0 if m == 1 else 0.0
    return math.exp((m - 1) * math.log(xi) - xi - ln_gamma(m))


def sample_gain(m: int, rng: np.random.Generator, size=None):
    """Draw effective gains, distributed Gamma(m, 1) (i.e. (1/2)*chi^2_2m)."""
    if m < 1:
        raise ValueError(f"shape m must be >= 1, got {m}")
    return rng.gamma(float(m), 1.0, size=size)


def zfbf_gain_samples(nt: int, k: int, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Matrix-level gain draws for k users zero-forced from nt antennas.

    Draws n_samples Rayleigh channel matrices H (k x nt, i.i.d. CN(0,1)
    entries), forms the pseudo-inverse H^H (H H^H)^-1 and returns
    xi_j = 1 / ||column j||^2 for each user, shape (n_samples, k). These are
    the normalizers that give the precoder unit-norm columns. Numerically
    singular draws (condition number of H H^H above 1e12) are resampled and
    logged rather than regularized, so the distribution under test is not
    biased.
    """
    if not 1 <= k <= nt:
        raise ValueError(f"need 1 <= k <= nt, got k={k}, nt={nt}")
    out = np.empty((n_samples, k))
    pending = np.arange(n_samples)
    for attempt in range(_MAX_RESAMPLES + 1):
        n = pending.size
        if n == 0:
            return out
        h = math.sqrt(0.5) * (
            rng.standard_normal((n, k, nt)) + 1j * rng.standard_normal((n, k, nt))
        )
        gram = h @ h.conj().transpose(0, 2, 1)
        eigs = np.linalg.eigvalsh(gram)
        good = eigs[:, 0] * _COND_LIMIT > eigs[:, -1]
        n_bad = int(np.count_nonzero(~good))
        if n_bad:
            log.debug("resampling %d singular channel draws (nt=%d, k=%d)", n_bad, nt, k)
        pinv = h[good].conj().transpose(0, 2, 1) @ np.linalg.inv(gram[good])
        out[pending[good]] = 1.0 / np.sum(np.abs(pinv) ** 2, axis=1)
        pending = pending[~good]
    raise RuntimeError(
        f"exceeded {_MAX_RESAMPLES} resampling rounds for singular channels"
    )


def zfbf_gain_oracle(nt: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """One matrix-level draw of the k effective gains (see zfbf_gain_samples)."""
    return zfbf_gain_samples(nt, k, 1, rng)[0]


def dof_assignment(scheme: Scheme, nt: int, k: int) -> DofAssignment:
    """Shape-parameter distribution for a slot serving k of nt antennas' users.

    ZFBF: every user gets m = nt - k + 1. With dirty-paper encoding the user
    at (random, uniform) encoding position kappa gets m = nt - kappa + 1, so
    m is uniform on {nt - k + 1, ..., nt}.
    """
    if not 1 <= k <= nt:
        raise ValueError(f"need 1 <= k <= nt, got k={k}, nt={nt}")
    if scheme is Scheme.ZFBF:
        return DofAssignment(((nt - k + 1, 1.0),))
    entries = tuple((m, 1.0 / k) for m in range(nt - k + 1, nt + 1))
    return DofAssignment(entries)


def service_bits(rho: float, xi: float, nd: int) -> float:
    """Bits delivered in one slot of nd channel uses: nd * log2(1 + rho*xi)."""
    if rho <= 0.0:
        raise ValueError(f"power rho must be positive, got {rho}")
    if xi < 0.0:
        raise ValueError(f"gain must be nonnegative, got {xi}")
    if nd < 1:
        raise ValueError(f"slot length nd must be >= 1, got {nd}")
    return nd * math.log2(1.0 + rho * xi)
