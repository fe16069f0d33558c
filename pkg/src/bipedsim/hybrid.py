"""Four-domain walking cycle: guard detection, resets, and event-accurate
integration of one control step.

The cycle is fixed: LeftSS -> DS1 -> RightSS -> DS2 -> LeftSS. Single-support
domains end on swing-sole touchdown (plastic impact, contact added);
double-support domains end on schedule (tau = 1, trailing contact released,
velocities untouched). step_index increments on every touchdown event.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

import numpy as np

from .dynamics import (
    CONTACTS_BOTH,
    CONTACTS_LEFT,
    CONTACTS_RIGHT,
    forward_dynamics,
    impact_map,
    swing_foot_clearance,
    chain_state,
)
from .model import GeneralizedState, IDX_PITCH, RobotModel, Side

GUARD_TOL = 1e-10  # bisection target on the guard value (m) / tau residual
TAU_ARM = 0.05  # touchdown crossings earlier than this are liftoff remnants
TAU_PREMATURE = 0.5  # touchdown at tau <= this is a scuff, i.e. a fall


class DomainId(str, Enum):
    LEFT_SS = "left_ss"
    DS1 = "ds1"
    RIGHT_SS = "right_ss"
    DS2 = "ds2"


class GuardKind(str, Enum):
    TOUCHDOWN = "touchdown"
    PHASE_COMPLETE = "phase_complete"


_SUCCESSOR = {
    DomainId.LEFT_SS: DomainId.DS1,
    DomainId.DS1: DomainId.RIGHT_SS,
    DomainId.RIGHT_SS: DomainId.DS2,
    DomainId.DS2: DomainId.LEFT_SS,
}

DOMAIN_ORDER = (DomainId.LEFT_SS, DomainId.DS1, DomainId.RIGHT_SS, DomainId.DS2)


@dataclass(frozen=True)
class Domain:
    """One continuous regime: its contact set, guard and nominal duration."""

    id: DomainId
    contacts: frozenset[Side]
    guard: GuardKind
    duration: float
    swing: Side | None  # swinging sole in SS domains
    pin: Side  # reference stance sole (used for gait reconstruction)

    @property
    def successor(self) -> DomainId:
        return _SUCCESSOR[self.id]

    @property
    def is_single_support(self) -> bool:
        return self.guard is GuardKind.TOUCHDOWN


def make_schedule(durations: dict[DomainId, float]) -> dict[DomainId, Domain]:
    """Build the four domains of the fixed cycle from per-domain durations."""
    for d in DOMAIN_ORDER:
        if not durations.get(d, 0.0) > 0.0:
            raise ValueError(f"domain {d.value}: duration must be > 0")
    return {
        DomainId.LEFT_SS: Domain(
            DomainId.LEFT_SS, CONTACTS_LEFT, GuardKind.TOUCHDOWN, durations[DomainId.LEFT_SS],
            swing=Side.RIGHT, pin=Side.LEFT,
        ),
        DomainId.DS1: Domain(
            DomainId.DS1, CONTACTS_BOTH, GuardKind.PHASE_COMPLETE, durations[DomainId.DS1],
            swing=None, pin=Side.LEFT,
        ),
        DomainId.RIGHT_SS: Domain(
            DomainId.RIGHT_SS, CONTACTS_RIGHT, GuardKind.TOUCHDOWN, durations[DomainId.RIGHT_SS],
            swing=Side.LEFT, pin=Side.RIGHT,
        ),
        DomainId.DS2: Domain(
            DomainId.DS2, CONTACTS_BOTH, GuardKind.PHASE_COMPLETE, durations[DomainId.DS2],
            swing=None, pin=Side.RIGHT,
        ),
    }


@dataclass(frozen=True)
class HybridState:
    """Where the walker is: domain, phase, step count, continuous state, time."""

    domain_id: DomainId
    tau: float
    step_index: int
    state: GeneralizedState
    t: float


class FallError(RuntimeError):
    """Raised by advance() when the rollout cannot continue as walking."""


class MissedTouchdownError(FallError):
    """Touchdown guard never fired within twice the nominal domain duration."""


class PrematureTouchdownError(FallError):
    """Swing sole hit the ground at tau <= 0.5 (scuffing)."""


def guard_value(domain: Domain, model: RobotModel, hs: HybridState) -> float:
    """Positive inside the domain; a zero-crossing from positive triggers the
    transition. Touchdown: min(toe, heel) height of the swing sole.
    Phase-complete: 1 - tau."""
    if domain.guard is GuardKind.TOUCHDOWN:
        return swing_foot_clearance(model, hs.state.q, domain.swing)
    return 1.0 - hs.tau


def detect_fall(model: RobotModel, state: GeneralizedState) -> bool:
    """Fall heuristic: torso past 1 rad or pelvis below half standing height."""
    if abs(state.q[IDX_PITCH]) > 1.0:
        return True
    return state.q[1] < 0.5 * model.standing_height


TorqueProvider = Callable[[RobotModel, HybridState], np.ndarray]


def _sub_state(q0, v0, qdd, h: float) -> GeneralizedState:
    """Partial semi-implicit Euler step of size h from (q0, v0) with the
    acceleration evaluated once at the step start; h = dt reproduces
    semi_implicit_step exactly."""
    v = v0 + h * qdd
    return GeneralizedState(q=q0 + h * v, qd=v)


def _bisect_touchdown(model, swing, q0, v0, qdd, lo, hi, g_hi):
    """Locate the touchdown time within [lo, hi] along the one-step flow."""

    def g(h):
        return swing_foot_clearance(model, _sub_state(q0, v0, qdd, h).q, swing)

    g_lo = g(lo)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if abs(g_mid) < GUARD_TOL:
            return mid
        if g_mid > 0.0:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    return 0.5 * (lo + hi)


def advance(
    model: RobotModel,
    schedule: dict[DomainId, Domain],
    hs: HybridState,
    torque_provider: TorqueProvider,
    dt: float,
    f_ext=(0.0, 0.0),
) -> HybridState:
    """Integrate exactly one control step of length dt (zero-order-hold
    torques). If the domain's guard crosses zero inside the step, the
    crossing is located by bisection, the reset is applied (impact map on
    touchdown, contact release on phase completion) and the remainder of the
    step is integrated in the successor domain with the same torques.

    Raises MissedTouchdownError when a touchdown domain runs past twice its
    nominal duration, and PrematureTouchdownError on scuffing (touchdown at
    tau <= 0.5). Both are falls.
    """
    if not dt > 0.0:
        raise ValueError("advance: dt must be > 0")
    domain = schedule[hs.domain_id]
    u = np.asarray(torque_provider(model, hs), dtype=float)

    q0, v0 = hs.state.q, hs.state.qd
    qdd, _ = forward_dynamics(model, hs.state, u, domain.contacts, f_ext)

    if domain.guard is GuardKind.PHASE_COMPLETE:
        h_event = (1.0 - hs.tau) * domain.duration
        if h_event > dt:
            return replace(hs, state=_sub_state(q0, v0, qdd, dt), tau=hs.tau + dt / domain.duration, t=hs.t + dt)
        # scheduled release: velocities are continuous, contacts only drop
        h_event = max(h_event, 0.0)
        state_minus = _sub_state(q0, v0, qdd, h_event) if h_event > 0.0 else hs.state
        nxt = schedule[domain.successor]
        out = HybridState(
            domain_id=nxt.id, tau=0.0, step_index=hs.step_index, state=state_minus, t=hs.t + h_event
        )
        remainder = dt - h_event
        if remainder > 0.0:
            qdd2, _ = forward_dynamics(model, out.state, u, nxt.contacts, f_ext)
            out = replace(
                out,
                state=_sub_state(out.state.q, out.state.qd, qdd2, remainder),
                tau=remainder / nxt.duration,
                t=out.t + remainder,
            )
        return out

    # touchdown domain
    if (hs.tau + dt / domain.duration) > 2.0:
        raise MissedTouchdownError(
            f"{domain.id.value}: no touchdown after 2x nominal duration (tau = {hs.tau:.3f})"
        )
    g0 = guard_value(domain, model, hs)
    cand = _sub_state(q0, v0, qdd, dt)
    g1 = swing_foot_clearance(model, cand.q, domain.swing)
    tau1 = hs.tau + dt / domain.duration

    crossed = g0 > 0.0 and g1 <= 0.0 and tau1 > TAU_ARM
    if not crossed:
        return replace(hs, state=cand, tau=tau1, t=hs.t + dt)

    h_event = _bisect_touchdown(model, domain.swing, q0, v0, qdd, 0.0, dt, g1)
    tau_event = hs.tau + h_event / domain.duration
    if tau_event <= TAU_PREMATURE:
        raise PrematureTouchdownError(
            f"{domain.id.value}: swing sole touched down at tau = {tau_event:.3f} <= {TAU_PREMATURE}"
        )
    state_minus = _sub_state(q0, v0, qdd, h_event)
    nxt = schedule[domain.successor]
    qd_plus, _ = impact_map(model, state_minus, nxt.contacts)
    out = HybridState(
        domain_id=nxt.id,
        tau=0.0,
        step_index=hs.step_index + 1,
        state=GeneralizedState(q=state_minus.q, qd=qd_plus),
        t=hs.t + h_event,
    )
    remainder = dt - h_event
    if remainder > 0.0:
        qdd2, _ = forward_dynamics(model, out.state, u, nxt.contacts, f_ext)
        out = replace(
            out,
            state=_sub_state(out.state.q, out.state.qd, qdd2, remainder),
            tau=remainder / nxt.duration,
            t=out.t + remainder,
        )
    return out
