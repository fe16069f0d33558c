"""Planar 7-link flat-footed biped: parameters, validation, JSON round-trip.

Generalized coordinates (9):

    q = [p_x, p_z, pitch, lhip, lknee, lankle, rhip, rknee, rankle]

``(p_x, p_z)`` is the pelvis point (both hip joints coincide there in the
sagittal plane), ``pitch`` the absolute torso angle (0 = upright; positive
is CCW, tipping the torso top toward -x). Joint angles are relative: hip
relative to torso, knee relative to thigh, ankle relative to shank. At
q = 0 the robot stands upright with straight legs and both soles
flat on the ground, ankles at height 0 (the ankle joint lies in the sole
plane; the sole spans [-heel_offset, +toe_offset] along the foot axis).

Per-link local frames at zero angle:
  torso: +along = up, +perp = forward (+x)
  thigh/shank: +along = down toward the distal joint, +perp = forward
  foot: +along = forward toward the toe, +perp = up
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

NQ = 9
NU = 6
IDX_X, IDX_Z, IDX_PITCH = 0, 1, 2
IDX_L_HIP, IDX_L_KNEE, IDX_L_ANKLE = 3, 4, 5
IDX_R_HIP, IDX_R_KNEE, IDX_R_ANKLE = 6, 7, 8
ACTUATED_INDICES = (3, 4, 5, 6, 7, 8)

ROBOT_SCHEMA = "bipedsim-robot-v1"

# canonical joint list the parser insists on (topology is fixed, the file
# still spells it out so a reader can tell what the numbers mean)
_CANONICAL_JOINTS = [
    {"name": "left_hip", "parent": "torso", "child": "left_thigh", "sign": 1},
    {"name": "left_knee", "parent": "left_thigh", "child": "left_shank", "sign": 1},
    {"name": "left_ankle", "parent": "left_shank", "child": "left_foot", "sign": 1},
    {"name": "right_hip", "parent": "torso", "child": "right_thigh", "sign": 1},
    {"name": "right_knee", "parent": "right_thigh", "child": "right_shank", "sign": 1},
    {"name": "right_ankle", "parent": "right_shank", "child": "right_foot", "sign": 1},
]

_LINK_NAMES = (
    "torso",
    "left_thigh",
    "left_shank",
    "left_foot",
    "right_thigh",
    "right_shank",
    "right_foot",
)


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def other(self) -> "Side":
        return Side.RIGHT if self is Side.LEFT else Side.LEFT


class ModelError(ValueError):
    """Invalid robot description (bad file, bad invariant, non-finite input)."""


@dataclass(frozen=True)
class LinkParams:
    """One rigid link. Units: kg, m, kg*m^2 (inertia about the COM)."""

    mass: float
    length: float  # joint-to-joint distance (feet: 0, sole extent is separate)
    com_along: float  # COM offset along the link's local +along axis
    com_perp: float  # COM offset along the link's local +perp axis
    inertia: float


@dataclass(frozen=True)
class FootGeometry:
    """Sole extent measured from the ankle along the foot axis, both > 0."""

    toe_offset: float
    heel_offset: float


@dataclass(frozen=True)
class RobotModel:
    torso: LinkParams
    left_thigh: LinkParams
    left_shank: LinkParams
    left_foot: LinkParams
    right_thigh: LinkParams
    right_shank: LinkParams
    right_foot: LinkParams
    foot_geometry: FootGeometry
    gravity: float = 9.81
    friction: float = 0.8

    # -- derived quantities ------------------------------------------------

    def links(self) -> tuple[LinkParams, ...]:
        return (
            self.torso,
            self.left_thigh,
            self.left_shank,
            self.left_foot,
            self.right_thigh,
            self.right_shank,
            self.right_foot,
        )

    @property
    def total_mass(self) -> float:
        return sum(l.mass for l in self.links())

    @property
    def standing_height(self) -> float:
        """Pelvis height above ground when standing with straight legs."""
        return self.left_thigh.length + self.left_shank.length

    def leg(self, side: Side) -> tuple[LinkParams, LinkParams, LinkParams]:
        if side is Side.LEFT:
            return self.left_thigh, self.left_shank, self.left_foot
        return self.right_thigh, self.right_shank, self.right_foot

    def validate(self) -> "RobotModel":
        for name, link in zip(_LINK_NAMES, self.links()):
            if not (link.mass > 0):
                raise ModelError(f"link '{name}': mass must be > 0, got {link.mass}")
            if not (link.inertia > 0):
                raise ModelError(f"link '{name}': inertia must be > 0, got {link.inertia}")
            if name.endswith("foot"):
                if link.length != 0.0:
                    raise ModelError(f"link '{name}': foot length must be 0 (sole extent is in foot_geometry)")
            elif not (link.length > 0):
                raise ModelError(f"link '{name}': length must be > 0, got {link.length}")
        fg = self.foot_geometry
        if not (fg.toe_offset > 0.0 and fg.heel_offset > 0.0):
            raise ModelError(
                f"degenerate sole: need toe_offset > 0 and heel_offset > 0, got {fg.toe_offset}, {fg.heel_offset}"
            )
        if not (self.gravity >= 0.0 and np.isfinite(self.gravity)):
            raise ModelError(f"gravity must be finite and >= 0, got {self.gravity}")
        if not (self.friction >= 0.0 and np.isfinite(self.friction)):
            raise ModelError(f"friction must be finite and >= 0, got {self.friction}")
        return self

    # -- perturbations (the uncertainty surface of the experiments) ---------

    def with_pelvis_perturbation(self, mass_delta: float = 0.0, com_offset_x: float = 0.0) -> "RobotModel":
        """Return a copy whose torso link carries the given mass delta and
        forward COM shift. The gait synthesis model is never touched."""
        t = self.torso
        new_torso = replace(t, mass=t.mass + mass_delta, com_perp=t.com_perp + com_offset_x)
        return replace(self, torso=new_torso).validate()

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        def link_d(l: LinkParams) -> dict:
            return {
                "mass": l.mass,
                "length": l.length,
                "com_along": l.com_along,
                "com_perp": l.com_perp,
                "inertia": l.inertia,
            }

        return {
            "schema": ROBOT_SCHEMA,
            "links": {name: link_d(l) for name, l in zip(_LINK_NAMES, self.links())},
            "joints": [dict(j) for j in _CANONICAL_JOINTS],
            "actuated_joint_indices": list(ACTUATED_INDICES),
            "foot_geometry": {
                "toe_offset": self.foot_geometry.toe_offset,
                "heel_offset": self.foot_geometry.heel_offset,
            },
            "gravity": self.gravity,
            "friction": self.friction,
        }

    @staticmethod
    def from_dict(data: dict) -> "RobotModel":
        if not isinstance(data, dict):
            raise ModelError("robot file: top level must be an object")
        _check_fields(
            data,
            {"schema", "links", "joints", "actuated_joint_indices", "foot_geometry", "gravity", "friction"},
            "robot file",
        )
        if data.get("schema") != ROBOT_SCHEMA:
            raise ModelError(f"robot file: schema must be '{ROBOT_SCHEMA}', got {data.get('schema')!r}")

        links_raw = data["links"]
        _check_fields(links_raw, set(_LINK_NAMES), "links")
        links = {}
        for name in _LINK_NAMES:
            if name not in links_raw:
                raise ModelError(f"links: missing '{name}'")
            entry = links_raw[name]
            _check_fields(entry, {"mass", "length", "com_along", "com_perp", "inertia"}, f"links.{name}")
            try:
                links[name] = LinkParams(
                    mass=float(entry["mass"]),
                    length=float(entry["length"]),
                    com_along=float(entry["com_along"]),
                    com_perp=float(entry["com_perp"]),
                    inertia=float(entry["inertia"]),
                )
            except (KeyError, TypeError) as exc:
                raise ModelError(f"links.{name}: {exc}") from exc

        joints = data["joints"]
        if joints != _CANONICAL_JOINTS:
            raise ModelError("joints: topology must be the canonical planar biped chain (see docs)")
        if list(data["actuated_joint_indices"]) != list(ACTUATED_INDICES):
            raise ModelError(f"actuated_joint_indices must be {list(ACTUATED_INDICES)}")

        fg_raw = data["foot_geometry"]
        _check_fields(fg_raw, {"toe_offset", "heel_offset"}, "foot_geometry")
        model = RobotModel(
            torso=links["torso"],
            left_thigh=links["left_thigh"],
            left_shank=links["left_shank"],
            left_foot=links["left_foot"],
            right_thigh=links["right_thigh"],
            right_shank=links["right_shank"],
            right_foot=links["right_foot"],
            foot_geometry=FootGeometry(
                toe_offset=float(fg_raw["toe_offset"]), heel_offset=float(fg_raw["heel_offset"])
            ),
            gravity=float(data["gravity"]),
            friction=float(data["friction"]),
        )
        return model.validate()

    def fingerprint(self) -> str:
        """Stable hash of the physical parameters; stored in gait files so a
        gait synthesized for a different model is detectable on load."""
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @staticmethod
    def load(path: str | Path) -> "RobotModel":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ModelError(f"robot file {path}: invalid JSON ({exc})") from exc
        return RobotModel.from_dict(data)


def _check_fields(obj: dict, allowed: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ModelError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ModelError(f"{where}: unknown field(s) {sorted(unknown)}")


def default_model() -> RobotModel:
    """Desk-scale biped (~10.9 kg, 0.44 m legs) used throughout the tests."""
    return RobotModel(
        torso=LinkParams(mass=6.0, length=0.30, com_along=0.15, com_perp=0.0, inertia=0.050),
        left_thigh=LinkParams(mass=1.2, length=0.22, com_along=0.11, com_perp=0.0, inertia=0.0050),
        left_shank=LinkParams(mass=0.9, length=0.22, com_along=0.11, com_perp=0.0, inertia=0.0038),
        left_foot=LinkParams(mass=0.35, length=0.0, com_along=0.02, com_perp=0.01, inertia=0.0009),
        right_thigh=LinkParams(mass=1.2, length=0.22, com_along=0.11, com_perp=0.0, inertia=0.0050),
        right_shank=LinkParams(mass=0.9, length=0.22, com_along=0.11, com_perp=0.0, inertia=0.0038),
        right_foot=LinkParams(mass=0.35, length=0.0, com_along=0.02, com_perp=0.01, inertia=0.0009),
        foot_geometry=FootGeometry(toe_offset=0.10, heel_offset=0.08),
        gravity=9.81,
        friction=0.8,
    ).validate()


@dataclass(frozen=True)
class GeneralizedState:
    """Continuous state (q, qd) in the 9 generalized coordinates."""

    q: np.ndarray
    qd: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(NQ)
        qd = np.asarray(self.qd, dtype=float).reshape(NQ)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))):
            raise ModelError("GeneralizedState: non-finite entries")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qd", qd)

    def validate(self) -> "GeneralizedState":
        if not abs(self.q[IDX_PITCH]) < np.pi:
            raise ModelError(f"GeneralizedState: |pitch| must be < pi, got {self.q[IDX_PITCH]}")
        return self
