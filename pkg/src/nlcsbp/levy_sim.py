"""Event-driven simulation of the parent processes (reference engines).

Per-path, pure-Python; the batch kernels in ``_kernels`` mirror these
semantics for throughput.  Every random event consumes exactly one block of
the path's counter-based stream (see ``rng``), so a path is reproducible
from (seed, stream_id) alone and reference and batch engines agree path
for path.

Event kinds: ``JUMP`` is a compound-Poisson jump (post >= pre), ``GRID_STEP``
is one exact-increment grid cell of a stable-type family (pre is the value
after the cell's drift, post adds the cell increment), ``DRIFT_CROSS`` is an
exact barrier hit located on a linear segment.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass

from .errors import DomainError, HorizonError, UndecidedError
from .mechanisms import (LogCriticalSubordinator, LogTailSubordinator,
                         PureDriftSubordinator, StableMinusDrift,
                         StableSubordinator, psi_largest_zero)
from .rng import RngStream, derive_seed

__all__ = [
    "RngStream", "derive_seed", "PathState", "PathEvent", "EventKind",
    "stable_positive_sample", "tail_inverse_jump_sample", "next_event",
    "simulate_until_level", "first_passage_down", "dump_events", "load_events",
    "PASSAGE_THETA", "PASSAGE_FLOOR_FRAC",
]

# grid-refinement defaults: the increment scale of a passage step tracks
# theta*gap and is floored at floor_frac*level, keeping the grid-induced
# overshoot perturbation at the 1e-3*level scale
PASSAGE_THETA = 0.005
PASSAGE_FLOOR_FRAC = 5e-5

DOWN_THETA = 0.1
DOWN_FLOOR_FRAC = 1e-3
ESCAPE_DECADES = 40.0


class EventKind(enum.Enum):
    JUMP = 1
    GRID_STEP = 2
    DRIFT_CROSS = 3


@dataclass(frozen=True)
class PathState:
    time: float
    value: float
    segment_slope: float


@dataclass(frozen=True)
class PathEvent:
    kind: EventKind
    t_event: float
    pre_value: float
    post_value: float


def kanter_standard(alpha, u, w):
    """One-sided stable with E exp(-s Z) = exp(-s^alpha) from (u, w)."""
    v = math.pi * u
    la = (math.log(math.sin((1.0 - alpha) * v))
          + alpha / (1.0 - alpha) * math.log(math.sin(alpha * v))
          - 1.0 / (1.0 - alpha) * math.log(math.sin(v)))
    return math.exp((1.0 - alpha) / alpha * (la - math.log(w)))


def stable_positive_sample(alpha, c0, dt, rng):
    """One subordinator increment with E exp(-s inc) = exp(-dt c0 s^alpha).

    Consumes one stream block (lanes 0 and 1), like the batch engines.
    """
    if not (0.0 < alpha < 1.0 and c0 > 0 and dt > 0):
        raise DomainError("need alpha in (0,1), c0 > 0, dt > 0")
    u1, u2, _, _ = rng.block_uniforms()
    return (c0 * dt) ** (1.0 / alpha) * kanter_standard(alpha, u1, -math.log(u2))


def tail_inverse_jump_sample(mech, u):
    """u-quantile of the normalized jump law P(J > z) = nu_bar(z)/nu_bar(0+)."""
    if not 0.0 < u < 1.0:
        raise DomainError("u must lie in (0, 1)")
    if not isinstance(mech, (LogTailSubordinator, LogCriticalSubordinator)):
        raise DomainError("jump sampling requires a compound-Poisson family")
    return float(mech.jump_quantile(u))


def next_event(mech, state, grid_dt, rng):
    """Advance the path by one event; returns (new_state, event)."""
    t, v = state.time, state.value
    if isinstance(mech, PureDriftSubordinator):
        post = v + mech.delta * grid_dt
        ev = PathEvent(EventKind.GRID_STEP, t + grid_dt, v, post)
        return PathState(t + grid_dt, post, mech.delta), ev
    if isinstance(mech, (LogTailSubordinator, LogCriticalSubordinator)):
        u1, u2, _, _ = rng.block_uniforms()
        dt = -math.log(u1) / mech.jump_rate
        pre = v + mech.drift_eff * dt
        post = pre + float(mech.jump_quantile(u2))
        ev = PathEvent(EventKind.JUMP, t + dt, pre, post)
        return PathState(t + dt, post, mech.drift_eff), ev
    if isinstance(mech, StableSubordinator):
        u1, u2, _, _ = rng.block_uniforms()
        inc = (mech.c0 * grid_dt) ** (1.0 / mech.alpha) \
            * kanter_standard(mech.alpha, u1, -math.log(u2))
        ev = PathEvent(EventKind.GRID_STEP, t + grid_dt, v, v + inc)
        return PathState(t + grid_dt, v + inc, 0.0), ev
    if isinstance(mech, StableMinusDrift):
        u1, u2, _, _ = rng.block_uniforms()
        inc = (mech.c0 * grid_dt) ** (1.0 / mech.alpha) \
            * kanter_standard(mech.alpha, u1, -math.log(u2))
        pre = v - mech.c * grid_dt
        ev = PathEvent(EventKind.GRID_STEP, t + grid_dt, pre, pre + inc)
        return PathState(t + grid_dt, pre + inc, -mech.c), ev
    raise DomainError(f"{type(mech).__name__} is not simulable")


def _passage_dt(mech, gap, level, theta, floor_frac):
    s_t = max(min(theta * gap, theta * level), floor_frac * level)
    return s_t ** mech.alpha / mech.c0


def simulate_until_level(mech, x0, level, rng, theta=PASSAGE_THETA,
                         floor_frac=PASSAGE_FLOOR_FRAC, max_steps=10 ** 7,
                         record=None):
    """First passage above ``level``: returns (tau_plus, pre_value, post_value).

    Compound-Poisson passage is exact (crossing at a jump); stable-grid
    passage locates the crossing within one auto-refined grid cell.  Pass a
    list as ``record`` to collect the events.
    """
    if x0 >= level:
        return 0.0, float(x0), float(x0)
    if isinstance(mech, PureDriftSubordinator):
        if mech.delta <= 0:
            raise HorizonError("zero drift never crosses the level")
        tau = (level - x0) / mech.delta
        if record is not None:
            record.append(PathEvent(EventKind.DRIFT_CROSS, tau, x0, level))
        return tau, level, level  # creeping: overshoot exactly 0
    state = PathState(0.0, float(x0), 0.0)
    for _ in range(max_steps):
        if isinstance(mech, (LogTailSubordinator, LogCriticalSubordinator)):
            grid_dt = 0.0  # unused: event times are exponential
        else:
            grid_dt = _passage_dt(mech, level - state.value, level, theta, floor_frac)
        state, ev = next_event(mech, state, grid_dt, rng)
        if record is not None:
            record.append(ev)
        if state.value > level:
            return state.time, ev.pre_value, ev.post_value
    raise HorizonError(f"no crossing within {max_steps} events")


def first_passage_down(mech, x0, a, horizon, rng, theta=DOWN_THETA,
                       floor_frac=DOWN_FLOOR_FRAC, escape_decades=ESCAPE_DECADES,
                       max_steps=10 ** 7):
    """First time the stable-minus-drift path drops below ``a``; None when
    the path escapes above a + escape_decades/p without returning.

    Crossings happen on the downward drift segments and are located there
    exactly (the within-cell jumps are placed at the cell end; the cell size
    shrinks near the barrier to bound the misplacement).
    """
    if not isinstance(mech, StableMinusDrift):
        raise DomainError("downward passage requires the stable-minus-drift family")
    if not x0 > a:
        raise DomainError("need x0 > a")
    if mech.c == 0:
        return None  # monotone paths never cross down
    p = psi_largest_zero(mech)
    x_esc = a + escape_decades / p
    v, t = float(x0), 0.0
    dt_floor = floor_frac * (x0 - a) / mech.c
    for _ in range(max_steps):
        if v >= x_esc:
            return None
        dt = max(theta * (v - a) / mech.c, dt_floor)
        u1, u2, _, _ = rng.block_uniforms()
        inc = (mech.c0 * dt) ** (1.0 / mech.alpha) \
            * kanter_standard(mech.alpha, u1, -math.log(u2))
        if v - mech.c * dt <= a:
            return t + (v - a) / mech.c
        v = v - mech.c * dt + inc
        t += dt
        if t > horizon:
            raise UndecidedError("horizon exhausted while undecided",
                                 state=PathState(t, v, -mech.c))
    raise HorizonError(f"undecided after {max_steps} events")


# ---------------------------------------------------------------------------
# binary path dump (debug interface)

_EVENT_PACK = struct.Struct("<Bddd")
_COUNT_PACK = struct.Struct("<Q")


def dump_events(fileobj, events):
    """Little-endian dump: u64 count, then {kind:u8, t:f64, pre:f64, post:f64}."""
    fileobj.write(_COUNT_PACK.pack(len(events)))
    for ev in events:
        fileobj.write(_EVENT_PACK.pack(ev.kind.value, ev.t_event,
                                       ev.pre_value, ev.post_value))


def load_events(fileobj):
    (count,) = _COUNT_PACK.unpack(fileobj.read(_COUNT_PACK.size))
    out = []
    for _ in range(count):
        kind, t, pre, post = _EVENT_PACK.unpack(fileobj.read(_EVENT_PACK.size))
        out.append(PathEvent(EventKind(kind), t, pre, post))
    return out
