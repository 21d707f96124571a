"""Discrete-time Monte Carlo simulation of the per-user transmit queues.

Each user owns a FIFO buffer fed by a constant arrival of alpha bits per
slot. Once per superframe the user is scheduled (slot position, power share
and gain shape drawn exactly as the scheduler defines) and drains up to
nd*log2(1 + rho*xi) bits. The simulator records the virtual delay

    W(t) = inf{u >= 0 : A(0, t) <= D(0, t + u)}

for every tracked user at every slot of the measurement window, which is
what the analytic bound constrains.

Conventions (applied consistently here and in the hand-traced tests):
arrivals land at the slot start and are eligible for same-slot service;
W(t) is measured each slot, not only at arrival instants; the measurement
window starts after a discarded warm-up and the simulation keeps running
past the window until every pending delay sample has resolved.

Randomness: one master seed spawns one child stream per replication via
numpy's SeedSequence, so replications are independent and every run is
reproducible from (seed, config) alone.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numba
import numpy as np

from .channel_model import Scheme
from .scheduling import SchedulePlan, SystemConfig, build_schedule

__all__ = ["SimResult", "simulate", "empirical_pv"]

_MAX_BIN = 1 << 16
_TARGET_CHUNK_ELEMS = 2_000_000


@dataclass(frozen=True)
class SimResult:
    """Delay samples from one simulate() call.

    delay_histogram maps delay (slots) to sample count, merged over all
    replications; rep_histograms keeps the per-replication split that the
    confidence intervals need. slots_simulated counts measured slots summed
    over replications, so histogram counts total
    slots_simulated * users_tracked. censored counts samples that had not
    resolved when the drain budget ran out (recorded at their lower bound).
    """

    slots_simulated: int
    users_tracked: int
    delay_histogram: Dict[int, int]
    replications: int
    seed: int
    t_super: int
    rep_histograms: Tuple[Dict[int, int], ...]
    censored: int = 0


@numba.njit(cache=True)
def _advance_chunk(
    queue,
    cum_dep,
    next_target,
    counts,
    offsets,
    sbits,
    alpha,
    t_super,
    slot0,
    window_start,
    window_end,
):
    """Advance every tracked user through one chunk of superframes.

    queue / cum_dep / next_target are per-user state carried across chunks;
    counts[d] accumulates delay samples. next_target[u] is the next slot t
    whose delay sample is still waiting for D(0, t') to reach A(0, t) = alpha*t.
    """
    n_frames, n_users = offsets.shape
    for u in range(n_users):
        qu = queue[u]
        du = cum_dep[u]
        pu = next_target[u]
        for i in range(n_frames):
            base = slot0 + i * t_super
            serve_at = offsets[i, u]
            for tau in range(t_super):
                s = base + tau
                # resolve pending samples against D(0, s), before this slot acts
                while pu < window_end and pu <= s and alpha * pu <= du:
                    d = s - pu
                    if d > _MAX_BIN:
                        d = _MAX_BIN
                    counts[d] += 1
                    pu += 1
                qu += alpha
                if tau == serve_at:
                    dep = sbits[i, u]
                    if dep >= qu:
                        # queue fully drained: resync the departure counter to
                        # the exact cumulative arrivals so float drift cannot
                        # blur the A(0,t) <= D(0,t') comparisons
                        qu = 0.0
                        du = alpha * (s + 1.0)
                    else:
                        qu -= dep
                        du += dep
        queue[u] = qu
        cum_dep[u] = du
        next_target[u] = pu


def _assignment_arrays(
    plan: SchedulePlan,
    scheme: Scheme,
    nt: int,
    n_frames: int,
    rng: np.random.Generator,
):
    """Vectorized per-superframe scheduling draws, user-indexed.

    Returns (offsets, sizes, shapes): for each superframe and user, the slot
    offset they are served in, the number of users sharing that slot, and
    the gain shape m (position-dependent under successive encoding). The
    underlying draw is a uniform permutation of users into a uniformly
    permuted slot-size pattern, matching draw_assignment.
    """
    k_tot, t_super = plan.k_tot, plan.t_super
    order = np.argsort(rng.random((n_frames, k_tot)), axis=1)

    size_pattern = np.array([plan.k_a] * plan.t_a + [plan.k_b] * plan.t_b, dtype=np.int64)
    if plan.t_b > 0:
        pattern_perm = np.argsort(rng.random((n_frames, t_super)), axis=1)
        sizes_by_slot = size_pattern[pattern_perm]
    else:
        sizes_by_slot = np.broadcast_to(size_pattern, (n_frames, t_super))

    flat_sizes = np.ascontiguousarray(sizes_by_slot).ravel()
    slot_of_pos = np.repeat(np.tile(np.arange(t_super), n_frames), flat_sizes).reshape(
        n_frames, k_tot
    )
    starts = np.repeat(
        (np.cumsum(sizes_by_slot, axis=1) - sizes_by_slot).ravel(), flat_sizes
    ).reshape(n_frames, k_tot)
    rank_in_slot = np.tile(np.arange(k_tot), (n_frames, 1)) - starts
    size_of_pos = np.repeat(flat_sizes, flat_sizes).reshape(n_frames, k_tot)
    if scheme is Scheme.ZFBF:
        m_of_pos = nt - size_of_pos + 1
    else:
        m_of_pos = nt - rank_in_slot

    offsets = np.empty((n_frames, k_tot), dtype=np.int64)
    sizes = np.empty((n_frames, k_tot), dtype=np.int64)
    shapes = np.empty((n_frames, k_tot), dtype=np.int64)
    np.put_along_axis(offsets, order, slot_of_pos, axis=1)
    np.put_along_axis(sizes, order, size_of_pos, axis=1)
    np.put_along_axis(shapes, order, m_of_pos, axis=1)
    return offsets, sizes, shapes


def _service_chunk(plan, scheme, nt, p_total, nd, n_frames, n_tracked, rng):
    """Slot offsets and service bits for the tracked users, one chunk."""
    offsets, sizes, shapes = _assignment_arrays(plan, scheme, nt, n_frames, rng)
    offsets = offsets[:, :n_tracked]
    sizes = sizes[:, :n_tracked]
    shapes = shapes[:, :n_tracked]
    xi = rng.gamma(shapes.astype(np.float64))
    sbits = nd * np.log2(1.0 + (p_total / sizes) * xi)
    return np.ascontiguousarray(offsets), np.ascontiguousarray(sbits)


def simulate(
    config: SystemConfig,
    t_super: int,
    superframes: int,
    seed: int,
    tracked_users: Optional[int] = None,
    replications: int = 1,
    warmup_superframes: int = 100,
    max_drain_superframes: int = 100_000,
) -> SimResult:
    """Simulate the round-robin downlink and collect virtual-delay samples.

    Runs `replications` independent replications of `superframes` measured
    superframes each (after `warmup_superframes` discarded ones). One delay
    sample is recorded per tracked user per measured slot. Queues of
    non-tracked users never interact with tracked ones, so only the first
    `tracked_users` queues are evolved; the slot assignment is still drawn
    jointly over all users.
    """
    if superframes < 1:
        raise ValueError(f"superframes must be >= 1, got {superframes}")
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications}")
    plan = build_schedule(config.k_tot, t_super, config.nt)
    n_tracked = config.k_tot if tracked_users is None else int(tracked_users)
    if not 1 <= n_tracked <= config.k_tot:
        raise ValueError(f"tracked_users must be in [1, {config.k_tot}]")

    chunk_frames = max(64, _TARGET_CHUNK_ELEMS // config.k_tot)
    window_start = warmup_superframes * t_super
    window_end = (warmup_superframes + superframes) * t_super
    total_frames = warmup_superframes + superframes

    children = np.random.SeedSequence(seed).spawn(replications)
    rep_histograms: List[Dict[int, int]] = []
    censored_total = 0
    for child in children:
        rng = np.random.default_rng(child)
        counts = np.zeros(_MAX_BIN + 1, dtype=np.int64)
        queue = np.zeros(n_tracked)
        cum_dep = np.zeros(n_tracked)
        next_target = np.full(n_tracked, window_start, dtype=np.int64)

        frame = 0
        while frame < total_frames:
            n = min(chunk_frames, total_frames - frame)
            offsets, sbits = _service_chunk(
                plan, config.scheme, config.nt, config.p_total, config.nd,
                n, n_tracked, rng,
            )
            _advance_chunk(
                queue, cum_dep, next_target, counts, offsets, sbits,
                config.alpha, t_super, frame * t_super, window_start, window_end,
            )
            frame += n

        drained = 0
        while np.any(next_target < window_end) and drained < max_drain_superframes:
            n = min(chunk_frames, max_drain_superframes - drained)
            offsets, sbits = _service_chunk(
                plan, config.scheme, config.nt, config.p_total, config.nd,
                n, n_tracked, rng,
            )
            _advance_chunk(
                queue, cum_dep, next_target, counts, offsets, sbits,
                config.alpha, t_super, frame * t_super, window_start, window_end,
            )
            frame += n
            drained += n
        if np.any(next_target < window_end):
            # drain budget exhausted: record the unresolved samples at their
            # observable lower bound and report them as censored
            end_slot = frame * t_super
            for target in next_target:
                for t in range(int(target), window_end):
                    counts[min(end_slot - t, _MAX_BIN)] += 1
                    censored_total += 1

        hist = {int(d): int(c) for d, c in enumerate(counts) if c}
        rep_histograms.append(hist)

    merged: Dict[int, int] = {}
    for hist in rep_histograms:
        for d, c in hist.items():
            merged[d] = merged.get(d, 0) + c
    return SimResult(
        slots_simulated=superframes * t_super * replications,
        users_tracked=n_tracked,
        delay_histogram=merged,
        replications=replications,
        seed=seed,
        t_super=t_super,
        rep_histograms=tuple(rep_histograms),
        censored=censored_total,
    )


def empirical_pv(result: SimResult, w: int) -> Tuple[float, float]:
    """Estimate P(delay > w) with a 95% confidence half-width.

    The estimate pools all replications; the half-width is the normal
    approximation across the per-replication estimates (they use
    independent seeds). With fewer than 2 replications no interval exists
    and the half-width is NaN.
    """
    if result.slots_simulated <= 0:
        raise ValueError("empty simulation result")
    if w < 0:
        raise ValueError(f"w must be >= 0, got {w}")
    per_rep = []
    for hist in result.rep_histograms:
        n = sum(hist.values())
        tail = sum(c for d, c in hist.items() if d > w)
        per_rep.append(tail / n)
    estimate = float(np.mean(per_rep))
    if result.replications < 2:
        return estimate, math.nan
    half = 1.96 * float(np.std(per_rep, ddof=1)) / math.sqrt(result.replications)
    return estimate, half
