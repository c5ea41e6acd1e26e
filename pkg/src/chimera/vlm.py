"""Steady incompressible vortex-lattice solver.

Each panel carries a horseshoe vortex: a bound segment on the panel
quarter-chord plus two semi-infinite trailing legs aligned with the free
stream (flat frozen wake). Flow tangency is enforced at the 3/4-chord
control points, loads come from the Kutta-Joukowski theorem on the bound
segments, and a Trefftz-plane evaluation of induced drag is kept as an
independent diagnostic.

Axes are body axes (x forward, y starboard, z down); lift and drag are
wind-axis projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import InvalidInputError, NumericalError
from .geometry import PanelMesh

GRAVITY = 9.81

# ISA troposphere constants
_T0 = 288.15        # K
_P0 = 101325.0      # Pa
_LAPSE = 0.0065     # K/m
_R_AIR = 287.05     # J/(kg K)


def isa_density(altitude: float) -> float:
    """Air density from the standard-atmosphere lapse-rate formula.

    Valid in the troposphere only (0..11000 m).
    """
    if not 0.0 <= altitude <= 11000.0:
        raise InvalidInputError(f"altitude {altitude} m outside supported range [0, 11000]")
    temp = _T0 - _LAPSE * altitude
    pressure = _P0 * (temp / _T0) ** (GRAVITY / (_R_AIR * _LAPSE))
    return pressure / (_R_AIR * temp)


@dataclass(frozen=True)
class FlowState:
    """Body-axis velocity, body rates and air density.

    U, V, W are the vehicle velocity components (m/s); p, q_rate, r the
    roll/pitch/yaw rates (rad/s). ``altitude`` is informational; ``rho``
    is authoritative.
    """

    U: float
    V: float = 0.0
    W: float = 0.0
    p: float = 0.0
    q_rate: float = 0.0
    r: float = 0.0
    rho: float = 1.225
    altitude: float = 0.0

    def __post_init__(self):
        if self.rho <= 0.0:
            raise InvalidInputError(f"rho must be positive, got {self.rho}")

    @property
    def velocity_body(self) -> np.ndarray:
        return np.array([self.U, self.V, self.W])

    @property
    def rates(self) -> np.ndarray:
        return np.array([self.p, self.q_rate, self.r])

    @property
    def airspeed(self) -> float:
        return math.sqrt(self.U**2 + self.V**2 + self.W**2)

    @classmethod
    def level(cls, speed: float, rho: float, altitude: float = 0.0) -> "FlowState":
        return cls(U=speed, rho=rho, altitude=altitude)


def dynamic_pressure(flow: FlowState) -> tuple[float, float]:
    """(airspeed, q) with q = 0.5*rho*airspeed^2."""
    speed = flow.airspeed
    return speed, 0.5 * flow.rho * speed * speed


def wake_direction(flow: FlowState) -> np.ndarray:
    """Unit direction of the free stream seen by the wing (downstream)."""
    v = flow.velocity_body
    speed = np.linalg.norm(v)
    if speed < 1e-12:
        raise InvalidInputError("wake direction undefined at zero airspeed")
    return -v / speed


def _segment_velocity(points, a, b, core):
    """Unit-circulation velocity of finite segments a->b at points.

    points: (m,3); a, b: (n,3). Returns (m,n,3).
    """
    r1 = points[:, None, :] - a[None, :, :]
    r2 = points[:, None, :] - b[None, :, :]
    cr = np.cross(r1, r2)
    r1m = np.linalg.norm(r1, axis=2)
    r2m = np.linalg.norm(r2, axis=2)
    dot = np.einsum("mnk,mnk->mn", r1, r2)
    denom = r1m * r2m * (r1m * r2m + dot)
    cr2 = np.einsum("mnk,mnk->mn", cr, cr)
    # core cut: zero velocity on/near the filament instead of blowing up
    bad = (cr2 <= core * core) | (r1m <= core) | (r2m <= core) | (denom <= core * core)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = (r1m + r2m) / denom
    k[bad] = 0.0
    return (k / (4.0 * np.pi))[:, :, None] * cr


def _semi_infinite_velocity(points, a, direction, core):
    """Unit-circulation velocity of semi-infinite filaments from a along
    ``direction`` (unit 3-vector), circulation flowing away from a."""
    r = points[:, None, :] - a[None, :, :]
    h = np.cross(np.broadcast_to(direction, r.shape), r)
    h2 = np.einsum("mnk,mnk->mn", h, h)
    rm = np.linalg.norm(r, axis=2)
    bad = (h2 <= core * core) | (rm <= core)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = (1.0 + (r @ direction) / rm) / h2
    k[bad] = 0.0
    return (k / (4.0 * np.pi))[:, :, None] * h


def horseshoe_velocities(points, mesh: PanelMesh, wake_dir, core=None, chunk: Optional[int] = None):
    """Velocity at each point per unit circulation of each horseshoe.

    Returns (m, n_panels, 3). The horseshoe runs from far downstream into
    bound_a, along the bound segment to bound_b, and back downstream.
    Chunked over points to bound memory.
    """
    points = np.asarray(points, dtype=float)
    core = mesh.core_radius if core is None else core
    wake_dir = np.asarray(wake_dir, dtype=float)
    m, n = points.shape[0], mesh.n_panels
    if chunk is None:
        chunk = max(1, int(4_000_000 // max(n, 1)))
    out = np.empty((m, n, 3))
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        p = points[lo:hi]
        v = _segment_velocity(p, mesh.bound_a, mesh.bound_b, core)
        v -= _semi_infinite_velocity(p, mesh.bound_a, wake_dir, core)
        v += _semi_infinite_velocity(p, mesh.bound_b, wake_dir, core)
        out[lo:hi] = v
    return out


def assemble_aic(mesh: PanelMesh, wake_dir=(-1.0, 0.0, 0.0), core=None) -> np.ndarray:
    """Aerodynamic influence matrix: entry (i, j) is the normal velocity at
    control point i induced by horseshoe j at unit circulation."""
    vel = horseshoe_velocities(mesh.control_points, mesh, wake_dir, core)
    return np.einsum("mnk,mk->mn", vel, mesh.normals)


def onset_velocity(flow: FlowState, points, ref_point) -> np.ndarray:
    """Air velocity relative to the surface at body-frame points, for a
    vehicle translating at flow.velocity_body and rotating at flow.rates
    about ref_point."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    surface = flow.velocity_body + np.cross(flow.rates, points - np.asarray(ref_point))
    return -surface


@dataclass
class AeroSolution:
    """Circulation and integrated loads of one solve.

    Forces/moments are body-axis about the reference point; lift and drag
    are wind-axis. ``drag_trefftz`` is the far-field diagnostic value; the
    authoritative drag is the near-field ``drag``.
    """

    circulation: np.ndarray = field(repr=False)
    force: np.ndarray
    moment: np.ndarray
    lift: float
    drag: float
    drag_trefftz: float
    c_lift: float
    c_drag: float
    c_force: np.ndarray
    c_moment: np.ndarray
    q: float
    airspeed: float
    ref_point: np.ndarray


class WingSolver:
    """Caches the AIC factorization and load-point influences for one mesh
    and one frozen wake direction.

    All solves through one instance share the wake it was built with; this
    is what makes the 17 flow perturbations of a derivative extraction cost
    one assembly. Use module-level :func:`solve_circulation` /
    :func:`compute_loads` when each call should align the wake with its own
    free stream.
    """

    # beyond this many panels the (n x n x 3) load influence is recomputed
    # streamed instead of cached (memory)
    _CACHE_LIMIT = 2200

    def __init__(self, mesh: PanelMesh, ref_point=None, wake_dir=(-1.0, 0.0, 0.0), core=None):
        self.mesh = mesh
        self.ref_point = np.asarray(mesh.ref_point if ref_point is None else ref_point, dtype=float)
        self.wake_dir = np.asarray(wake_dir, dtype=float) / np.linalg.norm(wake_dir)
        self.core = mesh.core_radius if core is None else core
        self._aic = None
        self._lu = None
        self._bound_vel = None

    @property
    def aic(self) -> np.ndarray:
        if self._aic is None:
            self._aic = assemble_aic(self.mesh, self.wake_dir, self.core)
        return self._aic

    def _factorization(self):
        if self._lu is None:
            try:
                self._lu = lu_factor(self.aic)
            except Exception as exc:  # pragma: no cover - scipy raises rarely
                raise NumericalError(f"AIC factorization failed: {exc}",
                                     condition=float(np.linalg.cond(self.aic))) from exc
        return self._lu

    def circulation(self, flow: FlowState) -> np.ndarray:
        rhs = -np.einsum(
            "mk,mk->m",
            onset_velocity(flow, self.mesh.control_points, self.ref_point),
            self.mesh.normals,
        )
        gamma = lu_solve(self._factorization(), rhs)
        scale = max(float(np.abs(rhs).max()), 1e-30)
        residual = float(np.abs(self.aic @ gamma - rhs).max()) / scale
        if not np.isfinite(gamma).all() or residual > 1e-10:
            raise NumericalError(
                f"AIC solve failed (relative residual {residual:.3e})",
                condition=float(np.linalg.cond(self.aic)), residual=residual)
        return gamma

    def _bound_velocities(self, gamma: np.ndarray) -> np.ndarray:
        """Induced velocity at all bound midpoints for this circulation."""
        if self.mesh.n_panels <= self._CACHE_LIMIT:
            if self._bound_vel is None:
                self._bound_vel = horseshoe_velocities(self.mesh.bound_mid, self.mesh, self.wake_dir, self.core)
            return np.einsum("mnk,n->mk", self._bound_vel, gamma)
        out = np.zeros((self.mesh.n_panels, 3))
        chunk = max(1, int(4_000_000 // self.mesh.n_panels))
        for lo in range(0, self.mesh.n_panels, chunk):
            hi = min(lo + chunk, self.mesh.n_panels)
            vel = horseshoe_velocities(self.mesh.bound_mid[lo:hi], self.mesh, self.wake_dir, self.core)
            out[lo:hi] = np.einsum("mnk,n->mk", vel, gamma)
        return out

    def loads(self, flow: FlowState, gamma: np.ndarray) -> AeroSolution:
        mesh = self.mesh
        speed, q = dynamic_pressure(flow)
        if q <= 0.0:
            raise InvalidInputError("dynamic pressure is zero; coefficients undefined")

        v_local = onset_velocity(flow, mesh.bound_mid, self.ref_point) + self._bound_velocities(gamma)
        seg = mesh.bound_b - mesh.bound_a
        f_panel = flow.rho * gamma[:, None] * np.cross(v_local, seg)
        force = f_panel.sum(axis=0)
        moment = np.cross(mesh.bound_mid - self.ref_point, f_panel).sum(axis=0)

        alpha = math.atan2(flow.W, flow.U)
        beta = math.asin(min(1.0, max(-1.0, flow.V / speed)))
        f_wind = body_to_wind(alpha, beta) @ force
        c_force = force / (q * mesh.area)
        c_moment = moment / (q * mesh.area * np.array([mesh.span, mesh.mac, mesh.span]))
        c_lift = float(-f_wind[2] / (q * mesh.area))
        c_drag = float(-f_wind[0] / (q * mesh.area))
        return AeroSolution(
            circulation=gamma,
            force=force,
            moment=moment,
            # recompose so L == q*S*C_L holds bit-for-bit
            lift=c_lift * q * mesh.area,
            drag=c_drag * q * mesh.area,
            drag_trefftz=trefftz_drag(mesh, gamma, self.wake_dir, flow.rho),
            c_lift=c_lift,
            c_drag=c_drag,
            c_force=c_force,
            c_moment=c_moment,
            q=q,
            airspeed=speed,
            ref_point=self.ref_point,
        )

    def solve(self, flow: FlowState) -> AeroSolution:
        return self.loads(flow, self.circulation(flow))


def body_to_wind(alpha: float, beta: float) -> np.ndarray:
    # kept here to avoid a circular import; stability re-exports it
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    return np.array([
        [ca * cb, sb, sa * cb],
        [-ca * sb, cb, -sa * sb],
        [-sa, 0.0, ca],
    ])


def solve_circulation(mesh: PanelMesh, flow: FlowState, ref_point=None) -> np.ndarray:
    """One-shot circulation solve with the wake aligned to this flow."""
    return WingSolver(mesh, ref_point, wake_direction(flow)).circulation(flow)


def compute_loads(mesh: PanelMesh, flow: FlowState, circulation, ref_point=None) -> AeroSolution:
    """One-shot load integration for a circulation from solve_circulation."""
    return WingSolver(mesh, ref_point, wake_direction(flow)).loads(flow, np.asarray(circulation, dtype=float))


def solve(mesh: PanelMesh, flow: FlowState, ref_point=None) -> AeroSolution:
    """Circulation solve plus loads in one call."""
    return WingSolver(mesh, ref_point, wake_direction(flow)).solve(flow)


def trefftz_drag(mesh: PanelMesh, gamma, wake_dir, rho: float) -> float:
    """Far-field induced drag from the trailing vorticity.

    Chordwise bound circulations of a spanwise strip collapse onto one
    trailing line; edge strengths are the strip-to-strip differences. The
    trailing-edge vertex line, projected onto the plane normal to the wake,
    is the wake trace. With strip circulation G_j, trace tangent t_j and
    in-plane induced velocity v_j at the strip centre,
    D = -(rho/2) * sum_j G_j * v_j . (w x t_j), which reduces to the
    classical (rho/2) * integral of Gamma * downwash for a planar wake.
    """
    w = np.asarray(wake_dir, dtype=float)
    w = w / np.linalg.norm(w)
    g_strip = np.asarray(gamma, dtype=float).reshape(mesh.n_chord, 2 * mesh.n_span).sum(axis=0)
    edges = mesh.strip_edges_te
    edges_p = edges - np.outer(edges @ w, w)
    strength = -np.diff(np.concatenate([[0.0], g_strip, [0.0]]))  # per edge, along w

    centers = 0.5 * (edges_p[:-1] + edges_p[1:])
    tangents = edges_p[1:] - edges_p[:-1]

    r = centers[:, None, :] - edges_p[None, :, :]
    h = np.cross(np.broadcast_to(w, r.shape), r)
    h2 = np.einsum("ijk,ijk->ij", h, h)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = strength[None, :] / (2.0 * np.pi * h2)
    k[h2 <= mesh.core_radius**2] = 0.0
    v = np.einsum("ij,ijk->ik", k, h)

    normal_wash = np.einsum("ik,ik->i", v, np.cross(np.broadcast_to(w, tangents.shape), tangents))
    return float(-0.5 * rho * np.dot(g_strip, normal_wash))
