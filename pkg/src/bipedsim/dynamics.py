"""Rigid-body dynamics of the planar biped: inertia matrix, bias forces,
flat-sole contact Jacobians, constrained forward dynamics and the plastic
impact map.

All quantities are assembled from per-link COM Jacobians of the 7-link
chain. Conventions (see model.py): world x forward, z up, angles CCW.
A planted sole contributes three constraint rows in the fixed order
(ankle x, ankle z, foot orientation); left sole rows always precede right
sole rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import (
    NQ,
    NU,
    IDX_PITCH,
    GeneralizedState,
    ModelError,
    RobotModel,
    Side,
)

# link order inside the chain arrays
TORSO, L_THIGH, L_SHANK, L_FOOT, R_THIGH, R_SHANK, R_FOOT = range(7)
_FOOT_LINK = {Side.LEFT: L_FOOT, Side.RIGHT: R_FOOT}

# absolute link angle = _ANG_SEL @ q  (constant selector matrix)
_ANG_SEL = np.zeros((7, NQ))
_ANG_SEL[TORSO, 2] = 1.0
_ANG_SEL[L_THIGH, [2, 3]] = 1.0
_ANG_SEL[L_SHANK, [2, 3, 4]] = 1.0
_ANG_SEL[L_FOOT, [2, 3, 4, 5]] = 1.0
_ANG_SEL[R_THIGH, [2, 6]] = 1.0
_ANG_SEL[R_SHANK, [2, 6, 7]] = 1.0
_ANG_SEL[R_FOOT, [2, 6, 7, 8]] = 1.0

# chain attachment: link i's frame origin sits at attach point d (expressed in
# the attach link's local frame) on link _ATTACH[i]; -1 means the pelvis point
_ATTACH = {
    TORSO: -1,
    L_THIGH: -1,
    L_SHANK: L_THIGH,
    L_FOOT: L_SHANK,
    R_THIGH: -1,
    R_SHANK: R_THIGH,
    R_FOOT: R_SHANK,
}


class DynamicsError(ValueError):
    """Non-finite inputs or an unsolvable contact system."""


def _require_finite(name: str, arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DynamicsError(f"{name}: non-finite entries {arr}")
    return arr


def _local_com(model: RobotModel, link: int) -> np.ndarray:
    """COM offset in the link frame used by the chain (x right, z up at
    zero angle). Converts the along/perp convention per link type."""
    l = model.links()[link]
    if link == TORSO:
        return np.array([l.com_perp, l.com_along])  # along = up
    if link in (L_FOOT, R_FOOT):
        return np.array([l.com_along, l.com_perp])  # along = toe direction
    return np.array([l.com_perp, -l.com_along])  # legs: along = down


def _attach_offset(model: RobotModel, link: int) -> np.ndarray:
    """Offset from the attach link's origin to this link's origin, in the
    attach link's frame (legs extend downward)."""
    a = _ATTACH[link]
    if a == -1:
        return np.zeros(2)
    return np.array([0.0, -model.links()[a].length])


@lru_cache(maxsize=16)
def _model_constants(model: RobotModel):
    """Per-model constant arrays shared by every dynamics call."""
    masses = np.array([l.mass for l in model.links()])
    inertias = np.array([l.inertia for l in model.links()])
    rot_term = _ANG_SEL.T @ (inertias[:, None] * _ANG_SEL)
    local_com = np.stack([_local_com(model, i) for i in range(7)])
    attach = np.stack([_attach_offset(model, i) for i in range(7)])
    return masses, rot_term, local_com, attach


@dataclass
class ChainState:
    """Kinematic pass over the chain at a given q (and optionally qd):
    absolute angles, frame origins, COM positions, their Jacobians, and the
    velocity-product (qdd = 0) accelerations needed for bias forces."""

    phi: np.ndarray  # (7,) absolute link angles
    origin: np.ndarray  # (7, 2) link frame origins
    com: np.ndarray  # (7, 2)
    jac_com: np.ndarray  # (7, 2, NQ)
    jac_origin: np.ndarray  # (7, 2, NQ)
    avp_com: np.ndarray | None  # (7, 2) COM acceleration at qdd = 0
    avp_origin: np.ndarray | None


def _rot(c: float, s: float, v: np.ndarray) -> np.ndarray:
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def _perp(v: np.ndarray) -> np.ndarray:
    """90 deg CCW rotation; d/dphi of a vector rotating with angle phi."""
    return np.array([-v[1], v[0]])


def chain_state(model: RobotModel, q: np.ndarray, qd: np.ndarray | None = None) -> ChainState:
    q = _require_finite("q", q).reshape(NQ)
    _, _, local_com, attach = _model_constants(model)
    phi = _ANG_SEL @ q
    c, s = np.cos(phi), np.sin(phi)
    phid = _ANG_SEL @ qd if qd is not None else None

    origin = np.zeros((7, 2))
    jac_origin = np.zeros((7, 2, NQ))
    avp_origin = np.zeros((7, 2)) if qd is not None else None
    com = np.zeros((7, 2))
    jac_com = np.zeros((7, 2, NQ))
    avp_com = np.zeros((7, 2)) if qd is not None else None

    # rotate all local vectors at once
    w_all = np.empty((7, 2))
    w_all[:, 0] = c * local_com[:, 0] - s * local_com[:, 1]
    w_all[:, 1] = s * local_com[:, 0] + c * local_com[:, 1]

    base = q[0:2]
    base_jac = np.zeros((2, NQ))
    base_jac[0, 0] = 1.0
    base_jac[1, 1] = 1.0

    for link in range(7):
        a = _ATTACH[link]
        if a == -1:
            origin[link] = base
            jac_origin[link] = base_jac
        else:
            d = attach[link]
            v = np.array([c[a] * d[0] - s[a] * d[1], s[a] * d[0] + c[a] * d[1]])
            origin[link] = origin[a] + v
            jac_origin[link] = jac_origin[a] + np.outer(_perp(v), _ANG_SEL[a])
            if qd is not None:
                avp_origin[link] = avp_origin[a] - phid[a] ** 2 * v
        w = w_all[link]
        com[link] = origin[link] + w
        jac_com[link] = jac_origin[link] + np.outer(_perp(w), _ANG_SEL[link])
        if qd is not None:
            avp_com[link] = avp_origin[link] - phid[link] ** 2 * w

    return ChainState(
        phi=phi,
        origin=origin,
        com=com,
        jac_com=jac_com,
        jac_origin=jac_origin,
        avp_com=avp_com,
        avp_origin=avp_origin,
    )


def _mass_matrix_from_chain(model: RobotModel, cs: ChainState) -> np.ndarray:
    masses, rot_term, _, _ = _model_constants(model)
    J = cs.jac_com.reshape(14, NQ)
    M = J.T @ (np.repeat(masses, 2)[:, None] * J) + rot_term
    return 0.5 * (M + M.T)  # kill rounding asymmetry


def _bias_from_chain(model: RobotModel, cs: ChainState) -> np.ndarray:
    masses, _, _, _ = _model_constants(model)
    acc = cs.avp_com.copy()
    acc[:, 1] += model.gravity
    return cs.jac_com.reshape(14, NQ).T @ (np.repeat(masses, 2) * acc.reshape(14))


def mass_matrix(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """Joint-space inertia matrix M(q), symmetric positive definite."""
    return _mass_matrix_from_chain(model, chain_state(model, q))


def bias_forces(model: RobotModel, q: np.ndarray, qd: np.ndarray) -> np.ndarray:
    """Coriolis/centrifugal + gravity vector H(q, qd) with the convention
    M(q) qdd + H(q, qd) = B u + J^T lambda."""
    qd = _require_finite("qd", qd).reshape(NQ)
    return _bias_from_chain(model, chain_state(model, q, qd))


def gravity_forces(model: RobotModel, q: np.ndarray) -> np.ndarray:
    return bias_forces(model, q, np.zeros(NQ))


def kinetic_energy(model: RobotModel, q: np.ndarray, qd: np.ndarray) -> float:
    return 0.5 * float(qd @ mass_matrix(model, q) @ qd)


def potential_energy(model: RobotModel, q: np.ndarray) -> float:
    cs = chain_state(model, q)
    masses = _model_constants(model)[0]
    return float(model.gravity * (masses @ cs.com[:, 1]))


def total_energy(model: RobotModel, state: GeneralizedState) -> float:
    return kinetic_energy(model, state.q, state.qd) + potential_energy(model, state.q)


# -- foot kinematics ---------------------------------------------------------


def sole_pose(model: RobotModel, q: np.ndarray, side: Side) -> np.ndarray:
    """(ankle_x, ankle_z, foot_angle) of one sole."""
    cs = chain_state(model, q)
    link = _FOOT_LINK[side]
    return np.array([cs.origin[link, 0], cs.origin[link, 1], cs.phi[link]])


def sole_points(model: RobotModel, q: np.ndarray, side: Side) -> tuple[np.ndarray, np.ndarray]:
    """World toe and heel positions of one sole."""
    cs = chain_state(model, q)
    link = _FOOT_LINK[side]
    c, s = np.cos(cs.phi[link]), np.sin(cs.phi[link])
    toe = cs.origin[link] + _rot(c, s, np.array([model.foot_geometry.toe_offset, 0.0]))
    heel = cs.origin[link] + _rot(c, s, np.array([-model.foot_geometry.heel_offset, 0.0]))
    return toe, heel


def swing_foot_clearance(model: RobotModel, q: np.ndarray, side: Side) -> float:
    """min(toe height, heel height) of the given sole; the touchdown guard."""
    toe, heel = sole_points(model, q, side)
    return float(min(toe[1], heel[1]))


def pelvis_velocity(state: GeneralizedState) -> np.ndarray:
    return state.qd[0:2].copy()


# -- contacts ----------------------------------------------------------------

CONTACTS_NONE: frozenset[Side] = frozenset()
CONTACTS_LEFT: frozenset[Side] = frozenset({Side.LEFT})
CONTACTS_RIGHT: frozenset[Side] = frozenset({Side.RIGHT})
CONTACTS_BOTH: frozenset[Side] = frozenset({Side.LEFT, Side.RIGHT})


def ordered_contacts(contacts: frozenset[Side]) -> list[Side]:
    """Fixed stacking order: left sole rows before right sole rows."""
    return [s for s in (Side.LEFT, Side.RIGHT) if s in contacts]


@dataclass(frozen=True)
class SoleWrench:
    """Ground reaction on one planted sole, expressed at the ankle point:
    tangential (N, +x), normal (N, +z), moment (N*m, CCW)."""

    tangential: float
    normal: float
    moment: float

    def as_array(self) -> np.ndarray:
        return np.array([self.tangential, self.normal, self.moment])

    @property
    def cop(self) -> float:
        """Center of pressure along the sole, relative to the ankle (m)."""
        return self.moment / self.normal


def _contact_rows_from_chain(cs: ChainState, contacts: frozenset[Side]) -> tuple[np.ndarray, np.ndarray]:
    rows_j = []
    rows_b = []
    for side in ordered_contacts(contacts):
        link = _FOOT_LINK[side]
        rows_j.append(cs.jac_origin[link])
        rows_j.append(_ANG_SEL[link][None, :])
        if cs.avp_origin is not None:
            rows_b.append(cs.avp_origin[link])
            rows_b.append(np.zeros(1))  # link angles are linear in q
    J = np.vstack(rows_j)
    jdot_qd = np.concatenate(rows_b) if rows_b else np.zeros(J.shape[0])
    return J, jdot_qd


def contact_jacobian(
    model: RobotModel, q: np.ndarray, contacts: frozenset[Side], qd: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Stacked sole constraint Jacobian J (3c x 9) and the constraint
    acceleration bias Jdot*qd (3c,). Rows per sole: ankle x, ankle z, foot
    orientation. Requires qd when the bias is wanted; otherwise the bias
    comes back as zeros."""
    if len(contacts) == 0:
        raise DynamicsError("contact_jacobian: empty contact set (use the unconstrained path)")
    cs = chain_state(model, q, qd if qd is not None else np.zeros(NQ))
    return _contact_rows_from_chain(cs, contacts)


def _wrench_dict(contacts: frozenset[Side], lam: np.ndarray) -> dict[Side, SoleWrench]:
    out = {}
    for i, side in enumerate(ordered_contacts(contacts)):
        t, n, m = lam[3 * i : 3 * i + 3]
        out[side] = SoleWrench(tangential=float(t), normal=float(n), moment=float(m))
    return out


_COND_LIMIT = 1e10
_RESIDUAL_LIMIT = 1e-8


def _solve_contact_system(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve A x = rhs for the contact-space operator A = J M^-1 J^T.
    Falls back to the minimum-norm least-squares solution when A is
    rank-deficient (redundant double-support rows)."""
    cond = np.linalg.cond(A)
    if np.isfinite(cond) and cond < _COND_LIMIT:
        return np.linalg.solve(A, rhs)
    x, *_ = np.linalg.lstsq(A, rhs, rcond=1e-10)
    return x


def forward_dynamics(
    model: RobotModel,
    state: GeneralizedState,
    u: np.ndarray,
    contacts: frozenset[Side],
    f_ext: np.ndarray | tuple[float, float] = (0.0, 0.0),
) -> tuple[np.ndarray, dict[Side, SoleWrench]]:
    """Accelerations and contact wrenches for the constrained dynamics

        M qdd + H = B u + J^T lambda + J_pelvis^T f_ext,   J qdd + Jdot qd = 0

    f_ext is a world-frame force applied at the pelvis point (the push input
    of the experiments). With no contacts the unconstrained system is solved
    and the wrench dict is empty.
    """
    u = _require_finite("u", u).reshape(NU)
    f_ext = _require_finite("f_ext", np.asarray(f_ext, dtype=float)).reshape(2)
    q, qd = state.q, state.qd
    _require_finite("qd", qd)

    cs = chain_state(model, q, qd)
    M = _mass_matrix_from_chain(model, cs)
    H = _bias_from_chain(model, cs)
    rhs = -H
    rhs[3:9] += u  # B maps actuator torques onto the six joint coordinates
    rhs[0:2] += f_ext  # pelvis point is the floating base origin

    if len(contacts) == 0:
        return np.linalg.solve(M, rhs), {}

    J, jdot_qd = _contact_rows_from_chain(cs, contacts)
    Minv_rhs = np.linalg.solve(M, rhs)
    Minv_JT = np.linalg.solve(M, J.T)
    A = J @ Minv_JT
    lam = _solve_contact_system(A, -jdot_qd - J @ Minv_rhs)
    qdd = Minv_rhs + Minv_JT @ lam

    residual = float(np.linalg.norm(J @ qdd + jdot_qd))
    if residual > _RESIDUAL_LIMIT:
        raise DynamicsError(
            f"contact system unsolvable: constraint acceleration residual {residual:.3e}, "
            f"cond(J M^-1 J^T) = {np.linalg.cond(A):.3e}"
        )
    return qdd, _wrench_dict(contacts, lam)


def impact_map(
    model: RobotModel, state: GeneralizedState, new_contacts: frozenset[Side]
) -> tuple[np.ndarray, dict[Side, SoleWrench]]:
    """Plastic (inelastic, instantaneous) impact: momentum is conserved in
    the directions orthogonal to the new constraints and J qd+ = 0 after.
    Returns post-impact velocities and the contact impulses (N*s, N*m*s).
    Kinetic energy never increases."""
    if len(new_contacts) == 0:
        raise DynamicsError("impact_map: empty contact set")
    q, qd_minus = state.q, state.qd
    M = mass_matrix(model, q)
    J, _ = contact_jacobian(model, q, new_contacts)
    Minv_JT = np.linalg.solve(M, J.T)
    A = J @ Minv_JT
    impulse = _solve_contact_system(A, -J @ qd_minus)
    qd_plus = qd_minus + Minv_JT @ impulse

    residual = float(np.linalg.norm(J @ qd_plus))
    if residual > _RESIDUAL_LIMIT:
        raise DynamicsError(
            f"impact system unsolvable: post-impact constraint velocity {residual:.3e}"
        )
    return qd_plus, _wrench_dict(new_contacts, impulse)


# -- integrators --------------------------------------------------------------


def semi_implicit_step(
    model: RobotModel,
    state: GeneralizedState,
    u: np.ndarray,
    contacts: frozenset[Side],
    f_ext=(0.0, 0.0),
    dt: float = 1e-3,
) -> GeneralizedState:
    """Symplectic Euler: velocity first, then position with the new velocity."""
    qdd, _ = forward_dynamics(model, state, u, contacts, f_ext)
    qd = state.qd + dt * qdd
    q = state.q + dt * qd
    return GeneralizedState(q=q, qd=qd)


def rk4_step(
    model: RobotModel,
    state: GeneralizedState,
    u: np.ndarray,
    contacts: frozenset[Side],
    f_ext=(0.0, 0.0),
    dt: float = 1e-3,
) -> GeneralizedState:
    """Classical RK4 on (q, qd) with the contact set held fixed."""

    def f(q, qd):
        qdd, _ = forward_dynamics(model, GeneralizedState(q=q, qd=qd), u, contacts, f_ext)
        return qd, qdd

    q0, v0 = state.q, state.qd
    k1q, k1v = f(q0, v0)
    k2q, k2v = f(q0 + 0.5 * dt * k1q, v0 + 0.5 * dt * k1v)
    k3q, k3v = f(q0 + 0.5 * dt * k2q, v0 + 0.5 * dt * k2v)
    k4q, k4v = f(q0 + dt * k3q, v0 + dt * k3v)
    q = q0 + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
    qd = v0 + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return GeneralizedState(q=q, qd=qd)
