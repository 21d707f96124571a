"""Round-robin superframe arithmetic.

Every user is scheduled exactly once per superframe of t_super slots. When
the average number of scheduled users k_tot / t_super is not an integer,
the superframe mixes two slot sizes (ceil and floor of the average) so the
counts work out exactly. This module builds those schedules, the equal
power split across a slot's users, the probability-weighted service
mixture that the delay analysis consumes, and randomized per-superframe
user/slot assignments for the simulator.
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .channel_model import Scheme, dof_assignment

__all__ = [
    "SystemConfig",
    "SchedulePlan",
    "MixtureComponent",
    "ServiceMixture",
    "feasible_t_super",
    "build_schedule",
    "service_mixture",
    "draw_assignment",
    "group_split",
]


@dataclass(frozen=True)
class SystemConfig:
    """Full experiment description.

    nt: transmit antennas; k_tot: total users; nd: channel uses per slot;
    p_total_db: total transmit power in dB (linearized as 10^(dB/10));
    alpha: arrival bits per user per slot; w: target delay in slots.
    """

    nt: int
    k_tot: int
    nd: int
    p_total_db: float
    alpha: float
    w: int
    scheme: Scheme

    def __post_init__(self):
        if self.nt < 1:
            raise ValueError(f"nt must be >= 1, got {self.nt}")
        if self.k_tot < 1:
            raise ValueError(f"k_tot must be >= 1, got {self.k_tot}")
        if self.nd < 1:
            raise ValueError(f"nd must be >= 1, got {self.nd}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.w < 0:
            raise ValueError(f"w must be >= 0, got {self.w}")
        if not isinstance(self.scheme, Scheme):
            raise ValueError(f"scheme must be a Scheme, got {self.scheme!r}")

    @property
    def p_total(self) -> float:
        """Total power on linear scale. dB conversion happens exactly here."""
        return 10.0 ** (self.p_total_db / 10.0)


@dataclass(frozen=True)
class SchedulePlan:
    """One superframe layout: t_a slots serving k_a users, t_b serving k_b."""

    k_tot: int
    t_super: int
    t_a: int
    k_a: int
    t_b: int
    k_b: int

    @property
    def k_avg(self) -> float:
        return self.k_tot / self.t_super


@dataclass(frozen=True)
class MixtureComponent:
    prob: float
    rho: float
    m: int


@dataclass(frozen=True)
class ServiceMixture:
    """Per-superframe service distribution: P(power=rho, shape=m) weights."""

    components: Tuple[MixtureComponent, ...]

    def __post_init__(self):
        total = sum(c.prob for c in self.components)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"mixture probabilities sum to {total}, not 1")
        if any(c.prob <= 0.0 for c in self.components):
            raise ValueError("mixture probabilities must be strictly positive")


def feasible_t_super(k_tot: int, nt: int) -> range:
    """Superframe lengths keeping 1 <= k_tot/t_super <= nt."""
    return range(math.ceil(k_tot / nt), k_tot + 1)


def build_schedule(k_tot: int, t_super: int, nt: int) -> SchedulePlan:
    """Slot-type counts for a superframe of t_super slots covering k_tot users.

    With k_avg = k_tot / t_super, slots serve either ceil(k_avg) or
    floor(k_avg) users; the counts t_a, t_b are forced by
    t_a + t_b = t_super and t_a*k_a + t_b*k_b = k_tot. An integer k_avg
    degenerates to a single slot type (t_b = 0).
    """
    lo = math.ceil(k_tot / nt)
    if t_super < lo:
        raise ValueError(
            f"t_super={t_super} too short: needs ceil(k_tot/nt)={lo} so that "
            f"k_avg <= nt={nt}"
        )
    if t_super > k_tot:
        raise ValueError(
            f"t_super={t_super} too long: needs t_super <= k_tot={k_tot} so "
            f"that k_avg >= 1"
        )
    if k_tot % t_super == 0:
        k = k_tot // t_super
        return SchedulePlan(k_tot, t_super, t_a=t_super, k_a=k, t_b=0, k_b=k)
    k_b = k_tot // t_super
    k_a = k_b + 1
    t_a = k_tot - t_super * k_b
    return SchedulePlan(k_tot, t_super, t_a=t_a, k_a=k_a, t_b=t_super - t_a, k_b=k_b)


def service_mixture(plan: SchedulePlan, p_total: float, scheme: Scheme, nt: int) -> ServiceMixture:
    """Weights of (rho, m) a randomly placed user sees in one superframe.

    A user lands in a size-k_a slot with probability k_a*t_a/k_tot, there
    gets the equal power share p_total/k_a, and draws its gain shape from
    the scheme's degree-of-freedom assignment; likewise for size-k_b slots.
    Zero-probability branches (t_b = 0) are omitted.
    """
    if p_total <= 0.0:
        raise ValueError(f"p_total must be positive, got {p_total}")
    comps: List[MixtureComponent] = []
    for t_slots, k_slot in ((plan.t_a, plan.k_a), (plan.t_b, plan.k_b)):
        if t_slots == 0:
            continue
        p_type = k_slot * t_slots / plan.k_tot
        rho = p_total / k_slot
        for m, p_m in dof_assignment(scheme, nt, k_slot).entries:
            comps.append(MixtureComponent(prob=p_type * p_m, rho=rho, m=m))
    return ServiceMixture(tuple(comps))


def draw_assignment(plan: SchedulePlan, rng: np.random.Generator) -> List[np.ndarray]:
    """Random user-to-slot assignment for one superframe.

    Returns t_super arrays of user indices (0-based); their concatenation is
    a uniform permutation of all users and the slot-size positions are
    themselves uniformly permuted, so any user is equally likely to land in
    any slot. For successive encoding, each array's order is the encoding
    order.
    """
    users = rng.permutation(plan.k_tot)
    sizes = np.array([plan.k_a] * plan.t_a + [plan.k_b] * plan.t_b)
    rng.shuffle(sizes)
    bounds = np.cumsum(sizes)[:-1]
    return np.split(users, bounds)


def group_split(w: int, t_super: int) -> Tuple[float, float, int, int]:
    """Deadline split across superframes: (p1, p2, j1, j2).

    A user fits j1 = ceil(w/t_super) service opportunities before the
    deadline with probability p1, and only j2 = floor(w/t_super) with
    probability p2 = (w mod t_super) / t_super.
    """
    if t_super < 1:
        raise ValueError(f"t_super must be >= 1, got {t_super}")
    if w < 0:
        raise ValueError(f"w must be >= 0, got {w}")
    p2 = (w % t_super) / t_super
    return 1.0 - p2, p2, math.ceil(w / t_super), w // t_super
