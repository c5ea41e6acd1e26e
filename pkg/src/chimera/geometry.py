"""Wing parameterization and panel mesh construction.

Body frame throughout: x forward, y starboard, z down. A wing is described
by the eight-variable design vector (root chord, root incidence, quarter
chord sweep, half span, tip twist, taper ratio, dihedral, flight speed) and
meshed as a flat-wake vortex lattice: spanwise/chordwise panel grid with
bound vortices on each panel quarter-chord and control points at 3/4-chord.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInputError

DESIGN_VARIABLES = (
    "root_chord",
    "alpha_deg",
    "sweep_deg",
    "half_span",
    "twist_deg",
    "taper",
    "dihedral_deg",
    "velocity",
)

# NACA 2412 camber parameters: max camber m at chord fraction p.
CAMBER_MAX = 0.02
CAMBER_POS = 0.4


@dataclass(frozen=True)
class DesignVector:
    """One wing design. Angles in degrees, lengths in metres, speed in m/s.

    ``half_span`` is the semi-span: the meshed wing extends from -half_span
    to +half_span in y. ``twist_deg`` is the tip incidence relative to the
    root; local incidence varies linearly in |y|.
    """

    root_chord: float
    alpha_deg: float
    sweep_deg: float
    half_span: float
    twist_deg: float
    taper: float
    dihedral_deg: float
    velocity: float

    def __post_init__(self):
        if not all(np.isfinite(self.as_array())):
            raise InvalidInputError("design vector contains non-finite entries")
        if self.root_chord <= 0.0:
            raise InvalidInputError(f"root_chord must be positive, got {self.root_chord}")
        if self.half_span <= 0.0:
            raise InvalidInputError(f"half_span must be positive, got {self.half_span}")
        if self.taper <= 0.0:
            raise InvalidInputError(f"taper must be positive, got {self.taper}")
        if self.velocity <= 0.0:
            raise InvalidInputError(f"velocity must be positive, got {self.velocity}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in DESIGN_VARIABLES], dtype=float)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in DESIGN_VARIABLES}

    @classmethod
    def from_array(cls, x) -> "DesignVector":
        x = np.asarray(x, dtype=float)
        if x.shape != (len(DESIGN_VARIABLES),):
            raise InvalidInputError(f"expected {len(DESIGN_VARIABLES)} design variables, got shape {x.shape}")
        return cls(*(float(v) for v in x))


@dataclass(frozen=True)
class Bounds:
    """Box bounds, elementwise lb < ub. Length is not fixed to 8 so the
    optimizer benchmarks can use low-dimensional boxes."""

    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        lb = np.atleast_1d(np.asarray(self.lb, dtype=float))
        ub = np.atleast_1d(np.asarray(self.ub, dtype=float))
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)
        if lb.shape != ub.shape or lb.ndim != 1:
            raise InvalidInputError("bounds lb/ub must be 1-d arrays of equal length")
        if not (np.isfinite(lb).all() and np.isfinite(ub).all()):
            raise InvalidInputError("bounds must be finite")
        if not (lb < ub).all():
            bad = [i for i in range(lb.size) if lb[i] >= ub[i]]
            raise InvalidInputError(f"lb < ub violated at indices {bad}")

    @property
    def dim(self) -> int:
        return self.lb.size

    @property
    def span(self) -> np.ndarray:
        return self.ub - self.lb

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool((x >= self.lb - tol).all() and (x <= self.ub + tol).all())

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lb, self.ub)


# Sampling box used for dataset generation.
DATASET_BOUNDS = Bounds(
    lb=np.array([0.6, -2.5, 0.0, 5.0, 0.0, 0.3, 0.0, 36.0]),
    ub=np.array([1.2, 7.5, 5.0, 10.0, 5.0, 0.6, 6.0, 54.0]),
)

# Optimization boxes. set1 is the wide box around the sampling region,
# set2 trades root chord and taper range for more span.
OPT_BOUNDS_SET1 = Bounds(
    lb=np.array([0.5, -3.0, 0.0, 1.0, 0.0, 0.2, -6.0, 35.0]),
    ub=np.array([1.4, 8.0, 7.0, 7.5, 5.0, 0.8, 6.0, 58.0]),
)
OPT_BOUNDS_SET2 = Bounds(
    lb=np.array([0.35, -3.0, 0.0, 4.0, 0.0, 0.1, 0.0, 35.0]),
    ub=np.array([1.3, 8.0, 7.0, 11.0, 5.0, 0.5, 6.0, 58.0]),
)

BOUNDS_PRESETS = {
    "table1": DATASET_BOUNDS,
    "set1": OPT_BOUNDS_SET1,
    "set2": OPT_BOUNDS_SET2,
}


@dataclass(frozen=True)
class ReferenceQuantities:
    """Trapezoidal planform reference values (full span)."""

    area: float
    span: float
    mac: float
    aspect_ratio: float


def reference_quantities(dv: DesignVector) -> ReferenceQuantities:
    """Reference area, span, mean aerodynamic chord and aspect ratio.

    S = c_r (1 + taper) b_half, b = 2 b_half,
    MAC = (2/3) c_r (1 + taper + taper^2)/(1 + taper), AR = b^2/S.
    """
    cr, lam, bh = dv.root_chord, dv.taper, dv.half_span
    area = cr * (1.0 + lam) * bh
    span = 2.0 * bh
    mac = (2.0 / 3.0) * cr * (1.0 + lam + lam * lam) / (1.0 + lam)
    return ReferenceQuantities(area=area, span=span, mac=mac, aspect_ratio=span * span / area)


def mac_spanwise_station(dv: DesignVector) -> float:
    """|y| of the mean aerodynamic chord: (b_half/3)(1+2*taper)/(1+taper)."""
    lam = dv.taper
    return dv.half_span / 3.0 * (1.0 + 2.0 * lam) / (1.0 + lam)


def camber_line(x_over_c, m: float = CAMBER_MAX, p: float = CAMBER_POS):
    """Camber ordinate z_c/c of the two-piece parabolic mean line.

    Parameters
    ----------
    x_over_c : array_like
        Chordwise stations in [0, 1].
    m, p : float
        Maximum camber and its chordwise position. Defaults give the
        NACA 2412 mean line (2% camber at 40% chord).

    Returns
    -------
    ndarray or float
        Camber ordinate (positive up, as fraction of chord). Zero at both
        ends, maximum m at x/c = p, and C1-continuous at the junction.
    """
    x = np.asarray(x_over_c, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise InvalidInputError("camber stations must lie in [0, 1]")
    fwd = m / p**2 * (2.0 * p * x - x * x)
    aft = m / (1.0 - p) ** 2 * ((1.0 - 2.0 * p) + 2.0 * p * x - x * x)
    z = np.where(x < p, fwd, aft)
    return float(z) if np.isscalar(x_over_c) else z


@dataclass
class PanelMesh:
    """Vortex-lattice mesh of the full (mirrored) wing.

    Panels are indexed row-major over (chord index i, span index j) with
    j running port tip -> starboard tip, 2*n_span columns total.
    ``vertices`` is the corner grid, shape (n_chord+1, 2*n_span+1, 3).
    Bound vortex segments run from ``bound_a`` (lower j side) to
    ``bound_b`` along each panel quarter-chord. ``ref_point`` is the
    default moment reference (quarter-chord of the MAC); ``core_radius``
    the vortex core used to regularize induced velocities.
    """

    vertices: np.ndarray
    control_points: np.ndarray
    normals: np.ndarray
    bound_a: np.ndarray
    bound_b: np.ndarray
    bound_mid: np.ndarray
    areas: np.ndarray
    n_chord: int
    n_span: int
    area: float
    span: float
    mac: float
    ref_point: np.ndarray
    core_radius: float
    strip_edges_te: np.ndarray = field(repr=False, default=None)

    @property
    def n_panels(self) -> int:
        return self.control_points.shape[0]


def build_mesh(
    dv: DesignVector,
    n_chord: int = 20,
    n_span: int = 40,
    origin=(0.0, 0.0, 0.0),
    camber: Optional[Callable] = camber_line,
    spacing: str = "uniform",
) -> PanelMesh:
    """Build the lattice for a design.

    Parameters
    ----------
    dv : DesignVector
    n_chord, n_span : int
        Panels per chord and per semi-span (the full wing has
        n_chord * 2*n_span panels).
    origin : 3-sequence
        Body-frame location of the root quarter-chord.
    camber : callable or None
        Camber line z_c/c(x/c); None meshes the flat chord plane.
    spacing : {"uniform", "cosine"}
        Chordwise and spanwise station distribution.

    Notes
    -----
    Sweep is applied to the quarter-chord line, dihedral raises the tip
    (z down, so tip z decreases), and the local incidence
    alpha + twist*|y|/b_half rotates each section rigidly about its
    quarter-chord point. The port side mirrors the starboard side exactly
    (bitwise in y-negation).
    """
    if n_chord < 1 or n_span < 1:
        raise InvalidInputError("panel counts must be >= 1")
    if spacing not in ("uniform", "cosine"):
        raise InvalidInputError(f"unknown spacing {spacing!r}")
    if dv.root_chord * dv.taper < 1e-12:
        raise InvalidInputError("tip chord is degenerate")
    origin = np.asarray(origin, dtype=float)
    if origin.shape != (3,):
        raise InvalidInputError("origin must be a 3-vector")

    if spacing == "uniform":
        xi = np.linspace(0.0, 1.0, n_chord + 1)
        s_half = np.linspace(0.0, 1.0, n_span + 1)
    else:
        xi = 0.5 * (1.0 - np.cos(np.pi * np.linspace(0.0, 1.0, n_chord + 1)))
        s_half = np.sin(0.5 * np.pi * np.linspace(0.0, 1.0, n_span + 1))
    # Full-span stations by negating the starboard half: the mirror is exact.
    s = np.concatenate([-s_half[:0:-1], s_half])

    zc = camber(xi) if camber is not None else np.zeros_like(xi)

    sweep = np.radians(dv.sweep_deg)
    dihedral = np.radians(dv.dihedral_deg)
    a = np.abs(s)  # spanwise fraction
    y = s * dv.half_span
    chord = dv.root_chord * (1.0 - (1.0 - dv.taper) * a)
    inc = np.radians(dv.alpha_deg + dv.twist_deg * a)
    x_qc = origin[0] - np.abs(y) * np.tan(sweep)
    z_qc = origin[2] - np.abs(y) * np.tan(dihedral)

    # Section points before incidence: dx forward of the quarter-chord,
    # dz the camber ordinate (up = -z). Rigid rotation about the local
    # quarter-chord by the section incidence.
    dx = np.outer(0.25 - xi, chord)            # (n_chord+1, n_stations)
    dz = np.outer(-zc, np.ones_like(chord)) * chord
    ci, si = np.cos(inc), np.sin(inc)
    x = x_qc + dx * ci + dz * si
    z = z_qc - dx * si + dz * ci

    verts = np.empty((n_chord + 1, s.size, 3))
    verts[:, :, 0] = x
    verts[:, :, 1] = origin[1] + y
    verts[:, :, 2] = z

    v00 = verts[:-1, :-1]
    v01 = verts[:-1, 1:]
    v10 = verts[1:, :-1]
    v11 = verts[1:, 1:]

    bound_a = 0.75 * v00 + 0.25 * v10
    bound_b = 0.75 * v01 + 0.25 * v11
    cp = 0.25 * 0.5 * (v00 + v01) + 0.75 * 0.5 * (v10 + v11)
    d1 = v11 - v00
    d2 = v01 - v10
    raw_n = np.cross(d1, d2)
    twice_area = np.linalg.norm(raw_n, axis=-1)
    if np.any(twice_area < 1e-14):
        raise InvalidInputError("degenerate panel in mesh")
    normals = raw_n / twice_area[..., None]

    refs = reference_quantities(dv)
    ybar = mac_spanwise_station(dv)
    ref_point = origin + np.array([-ybar * np.tan(sweep), 0.0, -ybar * np.tan(dihedral)])

    flat = lambda arr: arr.reshape(-1, arr.shape[-1])
    return PanelMesh(
        vertices=verts,
        control_points=flat(cp),
        normals=flat(normals),
        bound_a=flat(bound_a),
        bound_b=flat(bound_b),
        bound_mid=flat(0.5 * (bound_a + bound_b)),
        areas=(0.5 * twice_area).reshape(-1),
        n_chord=n_chord,
        n_span=n_span,
        area=refs.area,
        span=refs.span,
        mac=refs.mac,
        ref_point=ref_point,
        core_radius=1e-10 * refs.mac,
        strip_edges_te=verts[-1].copy(),
    )


def projected_planform_area(mesh: PanelMesh) -> float:
    """Sum of panel areas projected onto the x-y plane."""
    v = mesh.vertices
    d1 = (v[1:, 1:] - v[:-1, :-1]).reshape(-1, 3)
    d2 = (v[:-1, 1:] - v[1:, :-1]).reshape(-1, 3)
    cz = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    return float(0.5 * np.abs(cz).sum())


def planform_polygon(dv: DesignVector) -> np.ndarray:
    """Planform outline (x, y) for plotting: port tip TE around to starboard
    tip TE via the leading edge, ignoring incidence/camber."""
    sweep = np.tan(np.radians(dv.sweep_deg))
    pts = []
    for yy in (-dv.half_span, 0.0, dv.half_span):
        a = abs(yy) / dv.half_span
        c = dv.root_chord * (1.0 - (1.0 - dv.taper) * a)
        xq = -abs(yy) * sweep
        pts.append((xq + 0.25 * c, yy))  # leading edge
    for yy in (dv.half_span, 0.0, -dv.half_span):
        a = abs(yy) / dv.half_span
        c = dv.root_chord * (1.0 - (1.0 - dv.taper) * a)
        xq = -abs(yy) * sweep
        pts.append((xq - 0.75 * c, yy))  # trailing edge
    pts.append(pts[0])
    return np.asarray(pts)


def dump_vertices(mesh: PanelMesh, path) -> None:
    """Write the corner grid as 'x y z' rows (row-major over the grid)."""
    pts = mesh.vertices.reshape(-1, 3)
    np.savetxt(path, pts, fmt="%.17g")
