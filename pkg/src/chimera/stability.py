"""Rigid-body flight dynamics: mass properties, numeric stability
derivatives about trim, sign-test classification and the canonical linear
models.

The wing loads come from the vortex-lattice solver; horizontal and
vertical tail contributions are analytic lifting-line estimates (the tail
is not meshed). Trim is straight, level, symmetric flight: the wing is
rigged at the design incidence relative to the fuselage axis, and the
fuselage axis is aligned with the velocity, so the body velocity is
(V, 0, 0) and the pitch attitude is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Callable, Optional

import numpy as np

from . import vlm
from .errors import ConfigError, InvalidInputError, NumericalError
from .geometry import DesignVector, camber_line, build_mesh, mac_spanwise_station, reference_quantities
from .vlm import FlowState, GRAVITY, WingSolver, body_to_wind, dynamic_pressure, isa_density, wake_direction

__all__ = [
    "FixedAirframe", "MassProperties", "RigidBodyState", "DerivativeSet",
    "StabilityReport", "Thresholds", "body_to_stability", "body_to_wind",
    "mass_properties", "sixdof_derivative", "tail_loads", "flow_jacobian",
    "numeric_derivatives", "analyze_design", "map_coefficient_slopes",
    "rate_slope_nondimensional", "classify", "linear_models", "LinearModels",
    "UNSTABLE", "SEMI_STABLE", "STABLE", "CLASS_NAMES", "TESTED_DERIVATIVES",
]

UNSTABLE, SEMI_STABLE, STABLE = 0, 1, 2
CLASS_NAMES = ("Unstable", "SemiStable", "Stable")

# the ten derivatives that get a stability label, in report order
TESTED_DERIVATIVES = (
    "x_u", "m_u", "y_v", "z_w", "m_alpha",
    "l_beta", "n_beta", "l_p", "m_q", "n_r",
)

# sign that counts as stable for each tested derivative (weathercock N_beta
# is the only positive one)
_STABLE_SIGN = {name: 1.0 if name == "n_beta" else -1.0 for name in TESTED_DERIVATIVES}


@dataclass(frozen=True)
class FixedAirframe:
    """Fixed geometry and mass parameters of everything except the wing.

    Positions are in the sheet convention: x aft of the nose, z a common
    height datum (all components sit at the same height by default).
    Internally converted to body axes (x forward, z down, origin at nose,
    z = 0 on the wing height datum).
    """

    fuselage_length: float = 6.00
    fuselage_diameter: float = 0.50
    htail_root_chord: float = 1.95
    htail_tip_chord: float = 0.60
    htail_span: float = 1.00
    vtail_root_chord: float = 1.95
    vtail_tip_chord: float = 1.00
    vtail_span: float = 1.30
    wing_x: float = 1.75
    wing_z: float = 1.90
    htail_x: float = 4.05
    htail_z: float = 1.90
    vtail_x: float = 4.05
    vtail_z: float = 1.90
    fuselage_mass_per_length: float = 1.00
    tail_mass_per_area: float = 10.00
    total_mass: float = 600.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name.endswith("_z"):
                continue
            if not (np.isfinite(v) and v > 0.0):
                raise ConfigError(f"airframe field {f.name} must be positive, got {v}")

    def _z_body(self, z_sheet: float) -> float:
        # z down; the wing height datum is the body-frame zero plane
        return self.wing_z - z_sheet

    @property
    def wing_origin(self) -> np.ndarray:
        """Body-frame root quarter-chord of the wing."""
        return np.array([-self.wing_x, 0.0, self._z_body(self.wing_z)])


def _trapezoid_mac(c_root: float, c_tip: float) -> float:
    return (2.0 / 3.0) * (c_root**2 + c_root * c_tip + c_tip**2) / (c_root + c_tip)


@dataclass(frozen=True)
class MassProperties:
    mass: float
    cg: np.ndarray
    inertia: np.ndarray


def mass_properties(airframe: FixedAirframe, dv: DesignVector) -> MassProperties:
    """Composite mass, CG and inertia tensor about the CG.

    Fuselage: slender rod along x from the nose. Tails: flat trapezoidal
    plates (areal density) at their quarter-chord stations, rectangular
    plate own-inertia with the mean chord. The remaining mass is ballast at
    the wing MAC quarter-chord, bringing the total to the configured mass.
    """
    af = airframe
    parts = []  # (mass, position, own inertia diag-ish 3x3)

    m_fus = af.fuselage_length * af.fuselage_mass_per_length
    i_rod = m_fus * af.fuselage_length**2 / 12.0
    parts.append((m_fus,
                  np.array([-af.fuselage_length / 2.0, 0.0, af._z_body(af.wing_z)]),
                  np.diag([0.0, i_rod, i_rod])))

    s_ht = 0.5 * (af.htail_root_chord + af.htail_tip_chord) * af.htail_span
    m_ht = s_ht * af.tail_mass_per_area
    c_ht = s_ht / af.htail_span
    parts.append((m_ht,
                  np.array([-af.htail_x - 0.25 * _trapezoid_mac(af.htail_root_chord, af.htail_tip_chord),
                            0.0, af._z_body(af.htail_z)]),
                  m_ht / 12.0 * np.diag([af.htail_span**2, c_ht**2, af.htail_span**2 + c_ht**2])))

    s_vt = 0.5 * (af.vtail_root_chord + af.vtail_tip_chord) * af.vtail_span
    m_vt = s_vt * af.tail_mass_per_area
    c_vt = s_vt / af.vtail_span
    # trapezoid area centroid sits (b/3)(c_r+2c_t)/(c_r+c_t) above the root
    z_vt = af.vtail_span / 3.0 * (af.vtail_root_chord + 2.0 * af.vtail_tip_chord) \
        / (af.vtail_root_chord + af.vtail_tip_chord)
    parts.append((m_vt,
                  np.array([-af.vtail_x - 0.25 * _trapezoid_mac(af.vtail_root_chord, af.vtail_tip_chord),
                            0.0, af._z_body(af.vtail_z) - z_vt]),
                  m_vt / 12.0 * np.diag([af.vtail_span**2, af.vtail_span**2 + c_vt**2, c_vt**2])))

    m_ballast = af.total_mass - sum(p[0] for p in parts)
    if m_ballast <= 0.0:
        raise ConfigError(
            f"component masses ({af.total_mass - m_ballast:.2f} kg) exceed total {af.total_mass} kg")
    ybar = mac_spanwise_station(dv)
    ballast_pos = airframe.wing_origin + np.array([
        -ybar * math.tan(math.radians(dv.sweep_deg)), 0.0,
        -ybar * math.tan(math.radians(dv.dihedral_deg))])
    parts.append((m_ballast, ballast_pos, np.zeros((3, 3))))

    total = sum(p[0] for p in parts)
    cg = sum(p[0] * p[1] for p in parts) / total
    inertia = np.zeros((3, 3))
    for m, pos, own in parts:
        d = pos - cg
        inertia += own + m * (np.dot(d, d) * np.eye(3) - np.outer(d, d))
    return MassProperties(mass=total, cg=cg, inertia=inertia)


def body_to_stability(alpha: float) -> np.ndarray:
    """Rotation taking body-axis vectors to stability axes (alpha in rad)."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array([
        [ca, 0.0, sa],
        [0.0, 1.0, 0.0],
        [-sa, 0.0, ca],
    ])


@dataclass(frozen=True)
class RigidBodyState:
    v_b: np.ndarray
    omega_b: np.ndarray
    phi: float
    theta: float
    psi: float
    mass: float
    inertia: np.ndarray
    gravity: float = GRAVITY

    def __post_init__(self):
        inertia = np.asarray(self.inertia, dtype=float)
        object.__setattr__(self, "v_b", np.asarray(self.v_b, dtype=float))
        object.__setattr__(self, "omega_b", np.asarray(self.omega_b, dtype=float))
        object.__setattr__(self, "inertia", inertia)
        if self.mass <= 0.0:
            raise InvalidInputError("mass must be positive")
        if not np.allclose(inertia, inertia.T, rtol=1e-9, atol=1e-12):
            raise InvalidInputError("inertia tensor must be symmetric")
        if np.any(np.linalg.eigvalsh(inertia) <= 0.0):
            raise InvalidInputError("inertia tensor must be positive definite")


def sixdof_derivative(state: RigidBodyState, force, moment):
    """Newton-Euler accelerations and Euler-angle rates.

    Returns (v_b_dot, omega_b_dot, euler_rates). Gravity enters through the
    attitude; aerodynamic loads come in via ``force``/``moment`` about the CG.
    """
    force = np.asarray(force, dtype=float)
    moment = np.asarray(moment, dtype=float)
    phi, theta = state.phi, state.theta
    ct = math.cos(theta)
    if abs(ct) < 1e-9:
        raise NumericalError("Euler kinematics singular at theta = +/-90 deg", theta=theta)
    g_b = state.gravity * np.array([-math.sin(theta), math.sin(phi) * ct, math.cos(phi) * ct])
    v_dot = force / state.mass + g_b - np.cross(state.omega_b, state.v_b)
    omega_dot = np.linalg.solve(
        state.inertia, moment - np.cross(state.omega_b, state.inertia @ state.omega_b))
    p, q, r = state.omega_b
    sphi, cphi = math.sin(phi), math.cos(phi)
    euler_rates = np.array([
        p + (q * sphi + r * cphi) * math.tan(theta),
        q * cphi - r * sphi,
        (q * sphi + r * cphi) / ct,
    ])
    return v_dot, omega_dot, euler_rates


def _lifting_line_slope(aspect_ratio: float) -> float:
    return 2.0 * math.pi * aspect_ratio / (aspect_ratio + 2.0)


def tail_loads(airframe: FixedAirframe, flow: FlowState, cg) -> tuple[np.ndarray, np.ndarray]:
    """Analytic horizontal/vertical tail force and moment about the CG.

    Each surface is a point lifting-line: slope 2*pi*AR/(AR+2), local flow
    angle from the velocity of its aerodynamic centre through the air
    (translation + rotation about the CG), force applied at that centre.
    Small-angle force directions (z for the h-tail, y for the fin).
    """
    af = airframe
    cg = np.asarray(cg, dtype=float)
    speed, q = dynamic_pressure(flow)
    if speed < 1e-12:
        return np.zeros(3), np.zeros(3)

    s_ht = 0.5 * (af.htail_root_chord + af.htail_tip_chord) * af.htail_span
    a_ht = _lifting_line_slope(af.htail_span**2 / s_ht)
    s_vt = 0.5 * (af.vtail_root_chord + af.vtail_tip_chord) * af.vtail_span
    a_vt = _lifting_line_slope(af.vtail_span**2 / s_vt)
    z_vt = af.vtail_span / 3.0 * (af.vtail_root_chord + 2.0 * af.vtail_tip_chord) \
        / (af.vtail_root_chord + af.vtail_tip_chord)

    force = np.zeros(3)
    moment = np.zeros(3)
    for surf, pos in (
        ("h", np.array([-af.htail_x, 0.0, af._z_body(af.htail_z)])),
        ("v", np.array([-af.vtail_x, 0.0, af._z_body(af.vtail_z) - z_vt])),
    ):
        arm = pos - cg
        # velocity of the surface point through the air
        v_point = flow.velocity_body + np.cross(flow.rates, arm)
        if surf == "h":
            alpha_t = math.atan2(v_point[2], v_point[0])
            f = np.array([0.0, 0.0, -q * s_ht * a_ht * alpha_t])
        else:
            beta_t = v_point[1] / speed
            f = np.array([0.0, -q * s_vt * a_vt * beta_t, 0.0])
        force += f
        moment += np.cross(arm, f)
    return force, moment


# --- numeric derivative extraction ---------------------------------------

_LONG_VARS = ("u", "w", "q", "alpha")
_LAT_VARS = ("v", "p", "r", "beta")

DERIVATIVE_NAMES = tuple(
    [f"{axis}_{var}" for axis in ("x", "z", "m") for var in _LONG_VARS]
    + [f"{axis}_{var}" for axis in ("y", "l", "n") for var in _LAT_VARS]
)


@dataclass(frozen=True)
class DerivativeSet:
    """Dimensional stability derivatives about trim (body axes, SI).

    Longitudinal: X_u, X_w, X_q, X_alpha, Z_*, M_*; lateral-directional:
    Y_v, Y_p, Y_r, Y_beta, L_*, N_*. Rates in rad/s, angles in rad.
    """

    x_u: float; x_w: float; x_q: float; x_alpha: float
    z_u: float; z_w: float; z_q: float; z_alpha: float
    m_u: float; m_w: float; m_q: float; m_alpha: float
    y_v: float; y_p: float; y_r: float; y_beta: float
    l_v: float; l_p: float; l_r: float; l_beta: float
    n_v: float; n_p: float; n_r: float; n_beta: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in self.as_array()):
            raise InvalidInputError("derivatives must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in DERIVATIVE_NAMES])

    @classmethod
    def from_array(cls, values) -> "DerivativeSet":
        values = np.asarray(values, dtype=float)
        if values.shape != (24,):
            raise InvalidInputError(f"expected 24 derivatives, got {values.shape}")
        return cls(**dict(zip(DERIVATIVE_NAMES, (float(v) for v in values))))


def _perturb_alpha(flow: FlowState, d: float) -> FlowState:
    mag = math.hypot(flow.U, flow.W)
    a = math.atan2(flow.W, flow.U) + d
    return FlowState(U=mag * math.cos(a), V=flow.V, W=mag * math.sin(a),
                     p=flow.p, q_rate=flow.q_rate, r=flow.r,
                     rho=flow.rho, altitude=flow.altitude)


def _perturb_beta(flow: FlowState, d: float) -> FlowState:
    speed = flow.airspeed
    b = math.asin(min(1.0, max(-1.0, flow.V / speed))) + d
    scale = math.cos(b) / max(math.cos(math.asin(min(1.0, max(-1.0, flow.V / speed)))), 1e-12)
    return FlowState(U=flow.U * scale, V=speed * math.sin(b), W=flow.W * scale,
                     p=flow.p, q_rate=flow.q_rate, r=flow.r,
                     rho=flow.rho, altitude=flow.altitude)


def _perturb_component(flow: FlowState, name: str, d: float) -> FlowState:
    kw = dict(U=flow.U, V=flow.V, W=flow.W, p=flow.p, q_rate=flow.q_rate,
              r=flow.r, rho=flow.rho, altitude=flow.altitude)
    kw[name] += d
    return FlowState(**kw)


def flow_jacobian(load_map: Callable[[FlowState], np.ndarray], trim: FlowState,
                  velocity_step: float = 1e-3, angle_step: float = 1e-4) -> dict:
    """Central differences of a 6-component load map [X,Y,Z,l,m,n] with
    respect to U, V, W, alpha, beta, p, q, r about ``trim``.

    ``velocity_step`` is relative to the trim airspeed; ``angle_step`` is
    the absolute step for angles (rad) and rates (rad/s).
    """
    speed = trim.airspeed
    if speed <= 0.0:
        raise InvalidInputError("trim airspeed must be positive")
    dv_step = velocity_step * speed

    perturbations = {
        "u": lambda d: _perturb_component(trim, "U", d),
        "v": lambda d: _perturb_component(trim, "V", d),
        "w": lambda d: _perturb_component(trim, "W", d),
        "alpha": lambda d: _perturb_alpha(trim, d),
        "beta": lambda d: _perturb_beta(trim, d),
        "p": lambda d: _perturb_component(trim, "p", d),
        "q": lambda d: _perturb_component(trim, "q_rate", d),
        "r": lambda d: _perturb_component(trim, "r", d),
    }
    steps = {"u": dv_step, "v": dv_step, "w": dv_step,
             "alpha": angle_step, "beta": angle_step,
             "p": angle_step, "q": angle_step, "r": angle_step}

    jac = {}
    for name, perturb in perturbations.items():
        h = steps[name]
        try:
            hi = np.asarray(load_map(perturb(+h)), dtype=float)
            lo = np.asarray(load_map(perturb(-h)), dtype=float)
        except NumericalError as exc:
            raise NumericalError(f"load map failed while perturbing {name}: {exc}",
                                 variable=name, **exc.details) from exc
        jac[name] = (hi - lo) / (2.0 * h)
    return jac


@dataclass
class DesignAnalysis:
    """Everything the labeling pipeline needs from one design."""

    trim_solution: vlm.AeroSolution
    derivatives: DerivativeSet
    mass_props: MassProperties
    thresholds: "Thresholds"
    report: "StabilityReport"


def _derivatives_from_jacobian(jac: dict) -> DerivativeSet:
    values = []
    for axis_idx, axis_vars in ((0, _LONG_VARS), (2, _LONG_VARS), (4, _LONG_VARS),
                                (1, _LAT_VARS), (3, _LAT_VARS), (5, _LAT_VARS)):
        for var in axis_vars:
            values.append(jac[var][axis_idx])
    return DerivativeSet.from_array(values)


def analyze_design(dv: DesignVector, airframe: Optional[FixedAirframe] = None,
                   trim: Optional[FlowState] = None, n_chord: int = 10, n_span: int = 20,
                   camber: Optional[Callable] = camber_line,
                   altitude: float = 1200.0) -> DesignAnalysis:
    """Trim solve + the 17-point finite-difference derivative extraction.

    One AIC factorization (trim wake) serves all perturbed solves; the tail
    adds its analytic loads to every evaluation. Moments are about the CG.
    """
    airframe = airframe or FixedAirframe()
    if trim is None:
        trim = FlowState(U=dv.velocity, rho=isa_density(altitude), altitude=altitude)
    props = mass_properties(airframe, dv)
    mesh = build_mesh(dv, n_chord, n_span, origin=airframe.wing_origin, camber=camber)
    solver = WingSolver(mesh, ref_point=props.cg, wake_dir=wake_direction(trim))

    def load_map(flow: FlowState) -> np.ndarray:
        sol = solver.solve(flow)
        tf, tm = tail_loads(airframe, flow, props.cg)
        f = sol.force + tf
        m = sol.moment + tm
        return np.array([f[0], f[1], f[2], m[0], m[1], m[2]])

    derivs = _derivatives_from_jacobian(flow_jacobian(load_map, trim))
    _, q = dynamic_pressure(trim)
    thresholds = Thresholds.from_reference(q, reference_quantities(dv))
    return DesignAnalysis(
        trim_solution=solver.solve(trim),
        derivatives=derivs,
        mass_props=props,
        thresholds=thresholds,
        report=classify(derivs, thresholds),
    )


def numeric_derivatives(dv: DesignVector, airframe: Optional[FixedAirframe] = None,
                        trim: Optional[FlowState] = None, **kwargs) -> DerivativeSet:
    """Stability derivatives of the whole aircraft about trim."""
    return analyze_design(dv, airframe, trim, **kwargs).derivatives


# --- coefficient mapping ---------------------------------------------------

def rate_slope_nondimensional(raw_slope: float, ref_length: float, airspeed: float) -> float:
    """Nondimensional rate derivative: C_lp = (b/2V) dC_l/dp and friends."""
    if airspeed <= 0.0:
        raise InvalidInputError("airspeed must be positive")
    return raw_slope * ref_length / (2.0 * airspeed)


def map_coefficient_slopes(slopes: dict, refs, q: float) -> dict:
    """Dimensionalize coefficient slopes: forces by qS, pitch moments by
    qSc, roll/yaw moments by qSb.

    Keys follow the derivative naming, e.g. 'c_m_alpha' -> 'm_alpha'.
    """
    if q <= 0.0:
        raise InvalidInputError("dynamic pressure must be positive")
    out = {}
    for key, value in slopes.items():
        if not key.startswith("c_"):
            raise InvalidInputError(f"slope key {key!r} should start with 'c_'")
        name = key[2:]
        axis = name.split("_", 1)[0]
        if axis in ("x", "y", "z"):
            scale = q * refs.area
        elif axis == "m":
            scale = q * refs.area * refs.mac
        elif axis in ("l", "n"):
            scale = q * refs.area * refs.span
        else:
            raise InvalidInputError(f"unknown load axis in {key!r}")
        out[name] = value * scale
    return out


# --- classification ---------------------------------------------------------

@dataclass(frozen=True)
class Thresholds:
    """Semi-stable bands per tested derivative: a derivative with magnitude
    below its band is too weak to call either way."""

    force: float
    pitch: float
    roll_yaw: float

    @classmethod
    def from_reference(cls, q: float, refs, band: float = 1e-3) -> "Thresholds":
        return cls(force=band * q * refs.area,
                   pitch=band * q * refs.area * refs.mac,
                   roll_yaw=band * q * refs.area * refs.span)

    def for_derivative(self, name: str) -> float:
        if name in ("x_u", "y_v", "z_w"):
            return self.force
        if name in ("m_u", "m_alpha", "m_q"):
            return self.pitch
        return self.roll_yaw


@dataclass(frozen=True)
class StabilityReport:
    """Three-class label for each of the ten tested derivatives."""

    labels: tuple

    def __post_init__(self):
        if len(self.labels) != len(TESTED_DERIVATIVES):
            raise InvalidInputError(f"expected {len(TESTED_DERIVATIVES)} labels")
        if any(l not in (UNSTABLE, SEMI_STABLE, STABLE) for l in self.labels):
            raise InvalidInputError("labels must be 0, 1 or 2")
        object.__setattr__(self, "labels", tuple(int(l) for l in self.labels))

    def __getitem__(self, name: str) -> int:
        return self.labels[TESTED_DERIVATIVES.index(name)]

    def as_array(self) -> np.ndarray:
        return np.array(self.labels, dtype=int)

    def names(self) -> tuple:
        return tuple(CLASS_NAMES[l] for l in self.labels)


def classify(derivs: DerivativeSet, thresholds: Thresholds) -> StabilityReport:
    """Sign tests with a semi-stable band.

    Static: X_u, Y_v, Z_w, M_u, M_alpha, L_beta < 0 and N_beta > 0;
    damping: M_q, L_p, N_r < 0. |value| below the band -> SemiStable.
    """
    labels = []
    for name in TESTED_DERIVATIVES:
        value = getattr(derivs, name)
        if abs(value) < thresholds.for_derivative(name):
            labels.append(SEMI_STABLE)
        elif value * _STABLE_SIGN[name] > 0.0:
            labels.append(STABLE)
        else:
            labels.append(UNSTABLE)
    return StabilityReport(labels=tuple(labels))


# --- linear models -----------------------------------------------------------

@dataclass
class LinearModels:
    longitudinal: np.ndarray
    lateral: np.ndarray
    eig_longitudinal: np.ndarray
    eig_lateral: np.ndarray
    modes_longitudinal: tuple
    modes_lateral: tuple


def _pair_conjugates(eigvals: np.ndarray):
    """Group eigenvalues into conjugate pairs / singles (by magnitude)."""
    remaining = list(range(len(eigvals)))
    groups = []
    while remaining:
        i = remaining.pop(0)
        if abs(eigvals[i].imag) < 1e-12:
            groups.append([i])
            continue
        match = None
        for j in remaining:
            if abs(eigvals[j] - eigvals[i].conjugate()) < 1e-9 * max(1.0, abs(eigvals[i])):
                match = j
                break
        if match is None:
            groups.append([i])
        else:
            remaining.remove(match)
            groups.append([i, match])
    return groups


def _label_longitudinal(eigvals: np.ndarray) -> tuple:
    labels = [""] * len(eigvals)
    groups = _pair_conjugates(eigvals)
    pairs = sorted([g for g in groups if len(g) == 2], key=lambda g: -abs(eigvals[g[0]]))
    names = ["short period", "phugoid"] if len(pairs) >= 2 else ["oscillatory"]
    for g, name in zip(pairs, names):
        for i in g:
            labels[i] = name
    for g in pairs[len(names):]:
        for i in g:
            labels[i] = "oscillatory"
    for g in groups:
        if len(g) == 1:
            labels[g[0]] = "aperiodic"
    return tuple(labels)


def _label_lateral(eigvals: np.ndarray) -> tuple:
    labels = [""] * len(eigvals)
    scale = max(1.0, float(np.abs(eigvals).max()))
    groups = _pair_conjugates(eigvals)
    reals = []
    for g in groups:
        if len(g) == 2:
            for i in g:
                labels[i] = "dutch roll"
        elif abs(eigvals[g[0]]) < 1e-10 * scale:
            labels[g[0]] = "heading"
        else:
            reals.append(g[0])
    reals.sort(key=lambda i: eigvals[i].real)
    names = ["roll subsidence", "spiral"]
    for i, idx in enumerate(reals):
        labels[idx] = names[i] if i < len(names) else "aperiodic"
    return tuple(labels)


def linear_models(derivs: DerivativeSet, mass_props: Optional[MassProperties] = None,
                  theta_bar: float = 0.0, gravity: float = GRAVITY) -> LinearModels:
    """Longitudinal 4x4 and lateral-directional 5x5 small-perturbation
    models with mode-labeled eigenvalues.

    States: [u, w, q, theta] and [v, p, r, phi, psi]. Force rows are
    divided by the mass and moment rows by the matching principal inertia
    (pass ``mass_props=None`` for the raw unit-mass pattern). The gravity
    and kinematic rows depend only on the trim pitch attitude.
    """
    if mass_props is None:
        m = 1.0
        ixx = iyy = izz = 1.0
    else:
        m = mass_props.mass
        ixx, iyy, izz = np.diag(np.asarray(mass_props.inertia, dtype=float))
    d = derivs
    ct, st, tt = math.cos(theta_bar), math.sin(theta_bar), math.tan(theta_bar)
    if abs(ct) < 1e-9:
        raise NumericalError("lateral kinematics singular at theta = +/-90 deg")
    a_long = np.array([
        [d.x_u / m, d.x_w / m, d.x_q / m, -gravity * ct],
        [d.z_u / m, d.z_w / m, d.z_q / m, -gravity * st],
        [d.m_u / iyy, d.m_w / iyy, d.m_q / iyy, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
    a_lat = np.array([
        [d.y_v / m, d.y_p / m, d.y_r / m, gravity * ct, 0.0],
        [d.l_v / ixx, d.l_p / ixx, d.l_r / ixx, 0.0, 0.0],
        [d.n_v / izz, d.n_p / izz, d.n_r / izz, 0.0, 0.0],
        [0.0, 1.0, tt, 0.0, 0.0],
        [0.0, 0.0, 1.0 / ct, 0.0, 0.0],
    ])
    eig_long = np.linalg.eigvals(a_long)
    eig_lat = np.linalg.eigvals(a_lat)
    return LinearModels(
        longitudinal=a_long,
        lateral=a_lat,
        eig_longitudinal=eig_long,
        eig_lateral=eig_lat,
        modes_longitudinal=_label_longitudinal(eig_long),
        modes_lateral=_label_lateral(eig_lat),
    )
