"""Desired-output gaits: Bernstein/Bezier joint trajectories per domain,
an inverse-kinematics pattern generator, and the feasibility checker
(torso posture, swing clearance, touchdown velocity, friction cone, CoP,
periodicity).

A gait stores, for each of the four domains, a duration and a 6 x (deg+1)
coefficient matrix (one row per actuated joint, ordered lhip, lknee,
lankle, rhip, rknee, rankle).
"""
from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from pathlib import Path

import numpy as np

from .dynamics import (
    bias_forces,
    contact_jacobian,
    mass_matrix,
    ordered_contacts,
    sole_pose,
)
from .hybrid import DOMAIN_ORDER, Domain, DomainId, make_schedule
from .model import NQ, GeneralizedState, RobotModel, Side

log = logging.getLogger(__name__)

GAIT_SCHEMA = "bipedsim-gait-v1"
DEFAULT_DEGREE = 5
BOUNDARY_TOL = 1e-9

_JOINT_COLS = {Side.LEFT: (3, 4, 5), Side.RIGHT: (6, 7, 8)}


class GaitError(ValueError):
    """Synthesis or gait-file failure."""


class GaitFingerprintWarning(UserWarning):
    """Loaded gait was synthesized against a different robot model."""


# -- Bernstein-basis evaluation ------------------------------------------------

_clamp_warn_count = 0


@lru_cache(maxsize=32)
def _binomials(degree: int) -> np.ndarray:
    return np.array([comb(degree, k) for k in range(degree + 1)], dtype=float)


def _bernstein_row(degree: int, tau: float) -> np.ndarray:
    """Bernstein basis values B_{k,degree}(tau), k = 0..degree."""
    k = np.arange(degree + 1)
    return _binomials(degree) * tau**k * (1.0 - tau) ** (degree - k)


def bezier_eval(alpha: np.ndarray, tau: float, duration: float):
    """Evaluate Bezier rows at phase tau in [0, 1]: position, velocity and
    acceleration, the latter two time-scaled by the domain duration. alpha
    may be a single coefficient row (deg+1,) -> scalars, or a stack
    (n, deg+1) -> arrays. tau outside [0, 1] is clamped (late-touchdown
    support) with a rate-limited warning."""
    global _clamp_warn_count
    arr = np.asarray(alpha, dtype=float)
    single_row = arr.ndim == 1
    rows = np.atleast_2d(arr)
    deg = rows.shape[1] - 1
    if deg < 2:
        raise GaitError(f"bezier_eval: degree must be >= 2, got {deg}")
    if tau < 0.0 or tau > 1.0:
        if _clamp_warn_count % 1000 == 0:
            log.warning("bezier_eval: tau = %.4f outside [0, 1], clamping", tau)
        _clamp_warn_count += 1
        tau = float(np.clip(tau, 0.0, 1.0))

    y = rows @ _bernstein_row(deg, tau)
    d1 = deg * np.diff(rows, axis=1)  # control points of the derivative curve
    yd = (d1 @ _bernstein_row(deg - 1, tau)) / duration
    d2 = (deg - 1) * np.diff(d1, axis=1)
    ydd = (d2 @ _bernstein_row(deg - 2, tau)) / duration**2

    if single_row:
        return float(y[0]), float(yd[0]), float(ydd[0])
    return y, yd, ydd


def fit_bezier(samples: np.ndarray, taus: np.ndarray, degree: int) -> np.ndarray:
    """Least-squares Bezier fit with both endpoints interpolated exactly
    (keeps domain junctions continuous). samples: (n,) at the given taus."""
    B = np.stack([_bernstein_row(degree, t) for t in taus])
    coeffs = np.zeros(degree + 1)
    coeffs[0] = samples[0]
    coeffs[-1] = samples[-1]
    resid = samples - B[:, [0, -1]] @ coeffs[[0, -1]]
    inner, *_ = np.linalg.lstsq(B[:, 1:-1], resid, rcond=None)
    coeffs[1:-1] = inner
    return coeffs


# -- gait container ------------------------------------------------------------


@dataclass(frozen=True)
class DomainTrajectory:
    domain_id: DomainId
    duration: float
    alpha: np.ndarray  # (6, deg+1) rows in joint order

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if a.ndim != 2 or a.shape[0] != 6 or a.shape[1] < 3:
            raise GaitError(f"alpha must be (6, deg+1) with deg >= 2, got {a.shape}")
        object.__setattr__(self, "alpha", a)
        if not self.duration > 0.0:
            raise GaitError(f"domain {self.domain_id.value}: duration must be > 0")


@dataclass(frozen=True)
class Gait:
    domains: tuple[DomainTrajectory, DomainTrajectory, DomainTrajectory, DomainTrajectory]
    design_speed: float
    model_fingerprint: str

    def __post_init__(self):
        ids = tuple(d.domain_id for d in self.domains)
        if ids != DOMAIN_ORDER:
            raise GaitError(f"domains must be ordered {[d.value for d in DOMAIN_ORDER]}, got {ids}")

    def domain(self, domain_id: DomainId) -> DomainTrajectory:
        return self.domains[DOMAIN_ORDER.index(domain_id)]

    @property
    def degree(self) -> int:
        return self.domains[0].alpha.shape[1] - 1

    def durations(self) -> dict[DomainId, float]:
        return {d.domain_id: d.duration for d in self.domains}

    def boundary_residual(self) -> float:
        """Worst mismatch between a domain's endpoint outputs and its
        successor's start, over the four junctions of the cycle."""
        worst = 0.0
        for i, dom in enumerate(self.domains):
            nxt = self.domains[(i + 1) % 4]
            y_end, _, _ = bezier_eval(dom.alpha, 1.0, dom.duration)
            y_start, _, _ = bezier_eval(nxt.alpha, 0.0, nxt.duration)
            worst = max(worst, float(np.max(np.abs(y_end - y_start))))
        return worst

    def validate(self) -> "Gait":
        r = self.boundary_residual()
        if r > BOUNDARY_TOL:
            raise GaitError(f"domain boundary mismatch {r:.3e} exceeds {BOUNDARY_TOL}")
        return self

    # -- file round-trip ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": GAIT_SCHEMA,
            "model_fingerprint": self.model_fingerprint,
            "design_speed": self.design_speed,
            "domains": [
                {"id": d.domain_id.value, "T": d.duration, "alpha": d.alpha.flatten().tolist()}
                for d in self.domains
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @staticmethod
    def from_dict(data: dict) -> "Gait":
        if not isinstance(data, dict):
            raise GaitError("gait file: top level must be an object")
        unknown = set(data) - {"schema", "model_fingerprint", "design_speed", "domains"}
        if unknown:
            raise GaitError(f"gait file: unknown field(s) {sorted(unknown)}")
        if data.get("schema") != GAIT_SCHEMA:
            raise GaitError(f"gait file: schema must be '{GAIT_SCHEMA}', got {data.get('schema')!r}")
        domains = []
        raw_domains = data.get("domains")
        if not isinstance(raw_domains, list) or len(raw_domains) != 4:
            raise GaitError("gait file: 'domains' must list the four cycle domains")
        for entry in raw_domains:
            unknown = set(entry) - {"id", "T", "alpha"}
            if unknown:
                raise GaitError(f"gait file domain: unknown field(s) {sorted(unknown)}")
            flat = np.asarray(entry["alpha"], dtype=float)
            if flat.size % 6 != 0:
                raise GaitError("gait file: alpha length must be 6 * (deg+1)")
            domains.append(
                DomainTrajectory(
                    domain_id=DomainId(entry["id"]),
                    duration=float(entry["T"]),
                    alpha=flat.reshape(6, -1),
                )
            )
        return Gait(
            domains=tuple(domains),
            design_speed=float(data["design_speed"]),
            model_fingerprint=str(data["model_fingerprint"]),
        ).validate()

    @staticmethod
    def load(path: str | Path, model: RobotModel | None = None) -> "Gait":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise GaitError(f"gait file {path}: invalid JSON ({exc})") from exc
        gait = Gait.from_dict(data)
        if model is not None and gait.model_fingerprint != model.fingerprint():
            warnings.warn(
                f"gait file {path}: fingerprint {gait.model_fingerprint} does not match the "
                f"given model ({model.fingerprint()}); gait was synthesized for a different model",
                GaitFingerprintWarning,
                stacklevel=2,
            )
        return gait


def desired_outputs(gait: Gait, domain_id: DomainId, tau: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Desired joint positions/velocities/accelerations at phase tau."""
    d = gait.domain(domain_id)
    return bezier_eval(d.alpha, tau, d.duration)


# -- two-link leg inverse kinematics -------------------------------------------


def leg_ik(model: RobotModel, pelvis: np.ndarray, pitch: float, ankle: np.ndarray,
           foot_pitch: float, side: Side) -> tuple[float, float, float]:
    """Closed-form planar IK: joint angles (hip, knee, ankle) putting the
    leg's ankle point at the target with the given absolute foot pitch.
    The knee bends human-like (shank behind the thigh line)."""
    thigh, shank, _ = model.leg(side)
    l1, l2 = thigh.length, shank.length
    delta = np.asarray(ankle, dtype=float) - np.asarray(pelvis, dtype=float)
    d = float(np.hypot(delta[0], delta[1]))
    if d > (l1 + l2) * (1.0 - 1e-12) or d < abs(l1 - l2) * (1.0 + 1e-9) or d == 0.0:
        raise GaitError(f"leg_ik: target distance {d:.4f} m unreachable for leg {l1}+{l2}")
    cos_knee = (l1**2 + l2**2 - d**2) / (2.0 * l1 * l2)
    knee_interior = float(np.arccos(np.clip(cos_knee, -1.0, 1.0)))
    q_knee = -(np.pi - knee_interior)  # human-like branch: knee in front
    gamma = float(np.arctan2(delta[0], -delta[1]))  # leg axis angle from straight down
    cos_alpha = (l1**2 + d**2 - l2**2) / (2.0 * l1 * d)
    alpha = float(np.arccos(np.clip(cos_alpha, -1.0, 1.0)))
    phi_thigh = gamma + alpha
    q_hip = phi_thigh - pitch
    q_ankle = foot_pitch - (pitch + q_hip + q_knee)
    return q_hip, q_knee, q_ankle


# -- pattern generation ----------------------------------------------------------


@dataclass(frozen=True)
class GaitParams:
    """Inputs of the pattern generator. step_length must equal
    design_speed * (t_ss + t_ds)."""

    design_speed: float
    step_length: float
    t_ss: float
    t_ds: float
    pelvis_height: float
    clearance: float
    touchdown_velocity: float = 0.04  # swing sole descent rate at landing (m/s)
    degree: int = DEFAULT_DEGREE
    samples: int = 41
    fit_tolerance: float = 1e-3

    def validate(self) -> "GaitParams":
        if abs(self.step_length - self.design_speed * (self.t_ss + self.t_ds)) > 1e-9:
            raise GaitError(
                "step_length must equal design_speed * (t_ss + t_ds): "
                f"{self.step_length} vs {self.design_speed * (self.t_ss + self.t_ds)}"
            )
        if not (self.t_ss > 0 and self.t_ds > 0):
            raise GaitError("t_ss and t_ds must be > 0")
        if not self.pelvis_height > 0:
            raise GaitError("pelvis_height must be > 0")
        if self.clearance < 0:
            raise GaitError("clearance must be >= 0")
        if self.touchdown_velocity < 0:
            raise GaitError("touchdown_velocity must be >= 0")
        return self

    def to_dict(self) -> dict:
        return {
            "design_speed": self.design_speed,
            "step_length": self.step_length,
            "t_ss": self.t_ss,
            "t_ds": self.t_ds,
            "pelvis_height": self.pelvis_height,
            "clearance": self.clearance,
            "touchdown_velocity": self.touchdown_velocity,
            "degree": self.degree,
            "samples": self.samples,
            "fit_tolerance": self.fit_tolerance,
        }

    @staticmethod
    def from_dict(data: dict) -> "GaitParams":
        allowed = {
            "design_speed", "step_length", "t_ss", "t_ds", "pelvis_height", "clearance",
            "touchdown_velocity", "degree", "samples", "fit_tolerance",
        }
        unknown = set(data) - allowed
        if unknown:
            raise GaitError(f"gait params: unknown field(s) {sorted(unknown)}")
        kwargs = {k: (int(v) if k in ("degree", "samples") else float(v)) for k, v in data.items()}
        return GaitParams(**kwargs).validate()

    @staticmethod
    def load(path: str | Path) -> "GaitParams":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise GaitError(f"gait params {path}: invalid JSON ({exc})") from exc
        return GaitParams.from_dict(data)


def _swing_height_poly(clearance: float, v_td: float, t_ss: float) -> np.ndarray:
    """Quintic swing-height profile h(tau): starts and ends on the ground,
    peaks at the clearance mid-swing, lands descending at v_td (m/s)."""
    # conditions: h(0)=0, h'(0)=0, h(.5)=clearance, h'(.5)=0, h(1)=0, h'(1)=-v_td*t_ss
    A = np.zeros((6, 6))
    b = np.zeros(6)
    for r, (t, order, val) in enumerate(
        [
            (0.0, 0, 0.0),
            (0.0, 1, 0.0),
            (0.5, 0, clearance),
            (0.5, 1, 0.0),
            (1.0, 0, 0.0),
            (1.0, 1, -v_td * t_ss),
        ]
    ):
        for k in range(6):
            if order == 0:
                A[r, k] = t**k
            else:
                A[r, k] = k * t ** (k - 1) if k >= 1 else 0.0
        b[r] = val
    return np.linalg.solve(A, b)


def _poly_eval(coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.polyval(coeffs[::-1], t)


def _smoothstep5(t: np.ndarray) -> np.ndarray:
    """Quintic smoothstep: zero velocity and acceleration at both ends."""
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


@dataclass(frozen=True)
class _TaskPlan:
    """Task-space plan of one domain: pelvis, both ankles (world frame,
    stance ankle of the leading SS at the origin)."""

    pelvis: callable
    left_ankle: callable
    right_ankle: callable


def _plans(params: GaitParams) -> dict[DomainId, _TaskPlan]:
    """Steady-cycle task plan. Left stance ankle pinned at x = 0 during
    LeftSS/DS1; the mirrored second half-cycle is obtained by swapping leg
    roles, so only these two domains are planned."""
    s = params.step_length
    v = params.design_speed
    h0 = params.pelvis_height
    t_step = params.t_ss + params.t_ds
    x_p0 = -0.5 * s * params.t_ss / t_step  # pelvis symmetric about the stance ankle in SS
    h_poly = _swing_height_poly(params.clearance, params.touchdown_velocity, params.t_ss)

    def pelvis_ss(tau):
        return np.array([x_p0 + v * params.t_ss * tau, h0])

    def left_ss(tau):
        return np.array([0.0, 0.0])

    def right_ss(tau):
        x = -s + 2.0 * s * _smoothstep5(np.asarray(tau))
        return np.array([float(x), float(_poly_eval(h_poly, np.asarray(tau)))])

    def pelvis_ds(tau):
        return np.array([x_p0 + v * (params.t_ss + params.t_ds * tau), h0])

    def left_ds(tau):
        return np.array([0.0, 0.0])

    def right_ds(tau):
        return np.array([s, 0.0])

    return {
        DomainId.LEFT_SS: _TaskPlan(pelvis=pelvis_ss, left_ankle=left_ss, right_ankle=right_ss),
        DomainId.DS1: _TaskPlan(pelvis=pelvis_ds, left_ankle=left_ds, right_ankle=right_ds),
    }


def _swap_legs(alpha: np.ndarray) -> np.ndarray:
    return np.vstack([alpha[3:6], alpha[0:3]])


def synthesize_gait(model: RobotModel, params: GaitParams) -> Gait:
    """IK pattern generator: constant-height, constant-speed pelvis; swing
    sole follows a smooth clearance bump with flat-foot orientation and a
    small negative touchdown velocity; per-domain least-squares Bezier fit.
    The result satisfies the domain-boundary continuity invariant and passes
    check_gait with the default bounds."""
    params.validate()
    plans = _plans(params)
    fitted: dict[DomainId, np.ndarray] = {}
    durations = {
        DomainId.LEFT_SS: params.t_ss,
        DomainId.DS1: params.t_ds,
        DomainId.RIGHT_SS: params.t_ss,
        DomainId.DS2: params.t_ds,
    }

    worst_fit = 0.0
    for domain_id in (DomainId.LEFT_SS, DomainId.DS1):
        plan = plans[domain_id]
        taus = np.linspace(0.0, 1.0, params.samples)
        joints = np.zeros((params.samples, 6))
        for i, tau in enumerate(taus):
            pelvis = plan.pelvis(tau)
            try:
                jl = leg_ik(model, pelvis, 0.0, plan.left_ankle(tau), 0.0, Side.LEFT)
                jr = leg_ik(model, pelvis, 0.0, plan.right_ankle(tau), 0.0, Side.RIGHT)
            except GaitError as exc:
                raise GaitError(f"{domain_id.value}: IK failed at tau = {tau:.3f}: {exc}") from exc
            joints[i] = (*jl, *jr)
        alpha = np.stack([fit_bezier(joints[:, j], taus, params.degree) for j in range(6)])
        dense = np.linspace(0.0, 1.0, 161)
        fit = np.stack([bezier_eval(alpha, t, durations[domain_id])[0] for t in dense])
        ref = np.zeros_like(fit)
        for i, tau in enumerate(dense):
            pelvis = plan.pelvis(tau)
            jl = leg_ik(model, pelvis, 0.0, plan.left_ankle(tau), 0.0, Side.LEFT)
            jr = leg_ik(model, pelvis, 0.0, plan.right_ankle(tau), 0.0, Side.RIGHT)
            ref[i] = (*jl, *jr)
        worst_fit = max(worst_fit, float(np.max(np.abs(fit - ref))))
        fitted[domain_id] = alpha

    if worst_fit > params.fit_tolerance:
        raise GaitError(
            f"Bezier fit residual {worst_fit:.2e} rad exceeds {params.fit_tolerance} "
            f"(degree {params.degree}); use a higher degree or a gentler plan"
        )

    fitted[DomainId.RIGHT_SS] = _swap_legs(fitted[DomainId.LEFT_SS])
    fitted[DomainId.DS2] = _swap_legs(fitted[DomainId.DS1])

    gait = Gait(
        domains=tuple(
            DomainTrajectory(domain_id=d, duration=durations[d], alpha=fitted[d]) for d in DOMAIN_ORDER
        ),
        design_speed=params.design_speed,
        model_fingerprint=model.fingerprint(),
    )
    return gait.validate()


# -- gait-consistent full configurations ----------------------------------------


def configuration_at(
    model: RobotModel, gait: Gait, domain: Domain, tau: float, pin_ankle=(0.0, 0.0)
) -> GeneralizedState:
    """Full (q, qd) consistent with the gait at phase tau: the domain's pin
    sole is flat at pin_ankle, which determines the floating base. Velocities
    come from the Bezier time derivatives."""
    d = gait.domain(domain.id)
    y, yd, _ = bezier_eval(d.alpha, tau, d.duration)
    thigh, shank, _ = model.leg(domain.pin)
    cols = _JOINT_COLS[domain.pin]
    hip, knee, ankle = (y[cols[0] - 3], y[cols[1] - 3], y[cols[2] - 3])
    hip_d, knee_d, ankle_d = (yd[cols[0] - 3], yd[cols[1] - 3], yd[cols[2] - 3])

    pitch = -(hip + knee + ankle)  # pin sole flat: absolute foot angle is zero
    pitch_d = -(hip_d + knee_d + ankle_d)
    phi_th = pitch + hip
    phi_sh = phi_th + knee
    phi_th_d = pitch_d + hip_d
    phi_sh_d = phi_th_d + knee_d

    def down(a):
        return np.array([np.sin(a), -np.cos(a)])

    def down_d(a, ad):
        return np.array([np.cos(a), np.sin(a)]) * ad

    pin = np.asarray(pin_ankle, dtype=float)
    pelvis = pin - thigh.length * down(phi_th) - shank.length * down(phi_sh)
    pelvis_d = -thigh.length * down_d(phi_th, phi_th_d) - shank.length * down_d(phi_sh, phi_sh_d)

    q = np.zeros(NQ)
    q[0:2] = pelvis
    q[2] = pitch
    q[3:9] = y
    qd = np.zeros(NQ)
    qd[0:2] = pelvis_d
    qd[2] = pitch_d
    qd[3:9] = yd
    return GeneralizedState(q=q, qd=qd)


# -- feasibility checks ----------------------------------------------------------


@dataclass(frozen=True)
class GaitBounds:
    """Configurable constraint set the checker evaluates. The clearance
    envelopes are piecewise-linear tents over the swing phase, peaking
    mid-swing."""

    pitch_min: float = -0.15
    pitch_max: float = 0.15
    clearance_min_peak: float = 0.012  # h_min tent apex (m)
    clearance_max_base: float = 0.02  # h_max tent at the ends (m)
    clearance_max_peak: float = 0.12  # h_max tent apex (m)
    touchdown_velocity_max: float = 0.10  # |swing sole descent| bound (m/s)
    friction: float | None = None  # None: use the model's mu
    grid: int = 200

    def h_min(self, tau: np.ndarray) -> np.ndarray:
        return self.clearance_min_peak * (1.0 - np.abs(2.0 * np.asarray(tau) - 1.0))

    def h_max(self, tau: np.ndarray) -> np.ndarray:
        tent = 1.0 - np.abs(2.0 * np.asarray(tau) - 1.0)
        return self.clearance_max_base + (self.clearance_max_peak - self.clearance_max_base) * tent


@dataclass(frozen=True)
class ConstraintResult:
    name: str
    satisfied: bool
    worst_margin: float  # signed: >= 0 satisfied, < 0 violated; units in `units`
    units: str
    tau_at_worst: float
    domain: str


@dataclass(frozen=True)
class ConstraintReport:
    entries: tuple[ConstraintResult, ...]

    @property
    def all_satisfied(self) -> bool:
        return all(e.satisfied for e in self.entries)

    def entry(self, name: str) -> ConstraintResult:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def violated(self) -> list[str]:
        return [e.name for e in self.entries if not e.satisfied]


CONSTRAINT_NAMES = (
    "torso_pitch",
    "swing_clearance",
    "impact_velocity",
    "friction_cone",
    "cop_bounds",
    "periodicity",
)


def _finite_diff(values: np.ndarray, dt: float) -> np.ndarray:
    return np.gradient(values, dt, axis=0)


def check_gait(model: RobotModel, gait: Gait, bounds: GaitBounds | None = None) -> ConstraintReport:
    """Evaluate the constraint set on a dense phase grid per domain. The
    report always covers exactly the six named constraints; it never raises
    on a violation."""
    bounds = bounds or GaitBounds()
    mu = model.friction if bounds.friction is None else bounds.friction
    schedule = make_schedule(gait.durations())
    n = bounds.grid
    taus = np.linspace(0.0, 1.0, n)

    worst = {
        name: (np.inf, 0.0, "") for name in CONSTRAINT_NAMES
    }  # margin, tau, domain

    def consider(name: str, margin: float, tau: float, domain: str):
        if margin < worst[name][0]:
            worst[name] = (float(margin), float(tau), domain)

    for domain_id in DOMAIN_ORDER:
        domain = schedule[domain_id]
        dt = domain.duration / (n - 1)
        states = [configuration_at(model, gait, domain, t) for t in taus]
        qs = np.stack([s.q for s in states])
        qds = np.stack([s.qd for s in states])
        qdds = _finite_diff(qds, dt)

        # torso posture
        for i, t in enumerate(taus):
            pitch = qs[i, 2]
            consider("torso_pitch", min(pitch - bounds.pitch_min, bounds.pitch_max - pitch), t, domain_id.value)

        # swing clearance and touchdown velocity (single support only)
        if domain.is_single_support:
            h = np.zeros(n)
            for i in range(n):
                pose = sole_pose(model, qs[i], domain.swing)
                h[i] = pose[1]
            hmin = bounds.h_min(taus)
            hmax = bounds.h_max(taus)
            for i, t in enumerate(taus):
                consider("swing_clearance", min(h[i] - hmin[i], hmax[i] - h[i]), t, domain_id.value)
            # landing velocity from the pinned-configuration velocity
            Jsw, _ = contact_jacobian(model, qs[-1], frozenset({domain.swing}))
            hdot_td = float(Jsw[1] @ qds[-1])
            consider(
                "impact_velocity",
                min(-hdot_td, bounds.touchdown_velocity_max + hdot_td),
                1.0,
                domain_id.value,
            )

        # ground reaction feasibility via inverse dynamics on the base rows
        contacts = domain.contacts
        for i, t in enumerate(taus):
            M = mass_matrix(model, qs[i])
            Hbias = bias_forces(model, qs[i], qds[i])
            lhs = (M @ qdds[i] + Hbias)[0:3]
            J, _ = contact_jacobian(model, qs[i], contacts)
            JT_base = J.T[0:3, :]
            if JT_base.shape[1] == 3:
                lam = np.linalg.solve(JT_base, lhs)
            else:
                lam, *_ = np.linalg.lstsq(JT_base, lhs, rcond=None)  # minimum-norm split
            for ci, side in enumerate(ordered_contacts(contacts)):
                lt, ln, lm = lam[3 * ci : 3 * ci + 3]
                consider("friction_cone", min(ln, mu * ln - abs(lt)), t, domain_id.value)
                if ln > 1e-9:
                    cop = lm / ln
                    consider(
                        "cop_bounds",
                        min(
                            model.foot_geometry.toe_offset - cop,
                            cop + model.foot_geometry.heel_offset,
                        ),
                        t,
                        domain_id.value,
                    )

    consider("periodicity", BOUNDARY_TOL - gait.boundary_residual(), 0.0, "cycle")

    entries = tuple(
        ConstraintResult(
            name=name,
            satisfied=worst[name][0] >= -1e-9,
            worst_margin=worst[name][0],
            units={"torso_pitch": "rad", "swing_clearance": "m", "impact_velocity": "m/s",
                   "friction_cone": "N", "cop_bounds": "m", "periodicity": "rad"}[name],
            tau_at_worst=worst[name][1],
            domain=worst[name][2],
        )
        for name in CONSTRAINT_NAMES
    )
    return ConstraintReport(entries=entries)
