"""Planar geometry for irregular areas of interest.

Samples polygonal regions from three morphological families, computes
minimal-area oriented bounding boxes via rotating calipers, and tessellates
regions with regular hexagons sized by the sensor footprint.  All functions
are pure and deterministic given their inputs; random sampling draws only
from the caller-supplied generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationBudgetError

# Axial-coordinate offsets of the six hexagonal neighbors.
HEX_DIRS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))

FAMILIES = ("compact-convex", "elongated-concave", "narrow-passage")

_EPS = 1e-9


@dataclass
class AOIPolygon:
    """Simple outer boundary (CCW) with optional disjoint holes (CW)."""

    outer: np.ndarray
    holes: list = field(default_factory=list)
    family: str = "compact-convex"

    def __post_init__(self):
        self.outer = np.asarray(self.outer, dtype=float)
        self.holes = [np.asarray(h, dtype=float) for h in self.holes]


@dataclass(frozen=True)
class SensorSpec:
    """Sensor footprint radius and the matched hex cell circumradius (NM)."""

    footprint_radius_rs: float
    cell_circumradius_rh: float

    def __post_init__(self):
        if self.footprint_radius_rs <= 0:
            raise ValueError("footprint radius must be positive")
        if self.cell_circumradius_rh != self.footprint_radius_rs:
            raise ValueError("cell circumradius must equal the sensor footprint radius")

    @classmethod
    def from_footprint(cls, rs: float) -> "SensorSpec":
        return cls(footprint_radius_rs=rs, cell_circumradius_rh=rs)


@dataclass
class HexCell:
    axial: tuple
    centroid: np.ndarray
    visitable: bool


@dataclass(frozen=True)
class OBB:
    """Minimal-area oriented bounding rectangle.

    `angle` is the direction of the major axis in [0, pi); `half_extents`
    is ordered (major, minor).
    """

    center: tuple
    angle: float
    half_extents: tuple

    def axes(self):
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([c, s]), np.array([-s, c])

    def corners(self) -> np.ndarray:
        u, v = self.axes()
        cx = np.asarray(self.center)
        eu, ev = self.half_extents
        return np.array([cx + su * eu * u + sv * ev * v
                         for su, sv in ((-1, -1), (1, -1), (1, 1), (-1, 1))])

    @property
    def area(self) -> float:
        return 4.0 * self.half_extents[0] * self.half_extents[1]


# ---------------------------------------------------------------------------
# Polygon primitives
# ---------------------------------------------------------------------------

def polygon_signed_area(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_area(poly: AOIPolygon) -> float:
    """Area of the feasible region: outer minus holes."""
    a = abs(polygon_signed_area(poly.outer))
    return a - sum(abs(polygon_signed_area(h)) for h in poly.holes)


def ensure_ccw(vertices: np.ndarray) -> np.ndarray:
    v = np.asarray(vertices, dtype=float)
    return v if polygon_signed_area(v) >= 0 else v[::-1].copy()


def _on_segment(p, a, b, eps=_EPS) -> bool:
    ab = b - a
    ap = p - a
    L2 = float(ab @ ab)
    if L2 == 0.0:
        return bool(np.hypot(*ap) <= eps)
    t = float(ap @ ab) / L2
    t = min(1.0, max(0.0, t))
    closest = a + t * ab
    return bool(np.hypot(*(p - closest)) <= eps)


def point_on_boundary(p, vertices, eps=_EPS) -> bool:
    v = np.asarray(vertices, dtype=float)
    p = np.asarray(p, dtype=float)
    n = len(v)
    for i in range(n):
        if _on_segment(p, v[i], v[(i + 1) % n], eps):
            return True
    return False


def point_in_polygon(p, vertices, eps=_EPS) -> bool:
    """Strict-interior test; points on the boundary count as outside."""
    v = np.asarray(vertices, dtype=float)
    p = np.asarray(p, dtype=float)
    if point_on_boundary(p, v, eps):
        return False
    # Even-odd crossing count with the half-open edge rule.
    inside = False
    n = len(v)
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        if (a[1] > p[1]) != (b[1] > p[1]):
            x_int = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            if p[0] < x_int:
                inside = not inside
    return inside


def point_in_region(p, poly: AOIPolygon, eps=_EPS) -> bool:
    """Strictly inside the outer boundary and outside every hole.

    Boundary points (measure zero) are deterministically treated as outside
    the region.
    """
    if not point_in_polygon(p, poly.outer, eps):
        return False
    p = np.asarray(p, dtype=float)
    for hole in poly.holes:
        if point_in_polygon(p, hole, eps) or point_on_boundary(p, hole, eps):
            return False
    return True


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def segments_intersect(p1, p2, q1, q2, eps=_EPS) -> bool:
    """True if closed segments [p1,p2] and [q1,q2] share any point."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and \
            abs(d1) > eps and abs(d2) > eps and abs(d3) > eps and abs(d4) > eps:
        return True
    for p, a, b in ((p1, q1, q2), (p2, q1, q2), (q1, p1, p2), (q2, p1, p2)):
        if _on_segment(np.asarray(p, float), np.asarray(a, float), np.asarray(b, float), eps):
            return True
    return False


def segment_intersects_polygon(p, q, vertices, eps=_EPS) -> bool:
    """True if segment pq touches, crosses, or lies inside the polygon."""
    v = np.asarray(vertices, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = len(v)
    for i in range(n):
        if segments_intersect(p, q, v[i], v[(i + 1) % n], eps):
            return True
    mid = 0.5 * (p + q)
    return point_in_polygon(p, v, eps) or point_in_polygon(q, v, eps) or \
        point_in_polygon(mid, v, eps)


def is_simple_polygon(vertices: np.ndarray, eps=_EPS) -> bool:
    """No two non-adjacent edges intersect; adjacent edges meet only at the shared vertex."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    if n < 3:
        return False
    for i in range(n):
        a1, a2 = v[i], v[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if segments_intersect(a1, a2, v[j], v[(j + 1) % n], eps):
                return False
    return True


def validate_polygon(poly: AOIPolygon) -> None:
    """Raise ValueError on any violated structural invariant."""
    if len(poly.outer) < 3:
        raise ValueError("outer boundary needs at least 3 vertices")
    if polygon_signed_area(poly.outer) <= 0:
        raise ValueError("outer boundary must be counter-clockwise")
    if not is_simple_polygon(poly.outer):
        raise ValueError("outer boundary self-intersects")
    if poly.family not in FAMILIES:
        raise ValueError(f"unknown family {poly.family!r}")
    for k, hole in enumerate(poly.holes):
        if len(hole) < 3 or not is_simple_polygon(hole):
            raise ValueError(f"hole {k} is degenerate or self-intersecting")
        if polygon_signed_area(hole) >= 0:
            raise ValueError(f"hole {k} must be clockwise")
        for p in hole:
            if not point_in_polygon(p, poly.outer):
                raise ValueError(f"hole {k} is not strictly inside the outer boundary")
        for p in poly.outer:
            if point_in_polygon(p, hole):
                raise ValueError(f"hole {k} contains an outer vertex")
    for i in range(len(poly.holes)):
        for j in range(i + 1, len(poly.holes)):
            hi, hj = poly.holes[i], poly.holes[j]
            if any(point_in_polygon(p, hj) for p in hi) or \
                    any(point_in_polygon(p, hi) for p in hj):
                raise ValueError(f"holes {i} and {j} overlap")


# ---------------------------------------------------------------------------
# Convex hull and oriented bounding box
# ---------------------------------------------------------------------------

def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, CCW, collinear points dropped."""
    pts = sorted({(float(x), float(y)) for x, y in np.asarray(points, dtype=float)})
    if len(pts) <= 2:
        return np.array(pts, dtype=float)

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _orient(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return np.array(lower[:-1] + upper[:-1], dtype=float)


def compute_obb(poly: AOIPolygon) -> OBB:
    """Minimal-area oriented bounding rectangle of the outer boundary.

    Rotating calipers over convex-hull edge directions; area ties break
    toward the smaller axis angle.  The returned angle is the major-axis
    direction in [0, pi).
    """
    outer = np.asarray(poly.outer, dtype=float)
    if len(outer) < 3:
        raise ValueError("degenerate polygon: fewer than 3 vertices")
    hull = convex_hull(outer)
    if len(hull) < 3:
        raise ValueError("degenerate polygon: collinear vertices")

    best = None  # (area, theta, lo, hi)
    n = len(hull)
    for i in range(n):
        e = hull[(i + 1) % n] - hull[i]
        L = math.hypot(e[0], e[1])
        if L < _EPS:
            continue
        theta = math.atan2(e[1], e[0]) % math.pi
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, s], [-s, c]])  # rotate by -theta
        local = hull @ rot.T
        lo = local.min(axis=0)
        hi = local.max(axis=0)
        area = float((hi[0] - lo[0]) * (hi[1] - lo[1]))
        if best is None or area < best[0] - 1e-12 * max(1.0, best[0]) or \
                (abs(area - best[0]) <= 1e-12 * max(1.0, best[0]) and theta < best[1] - 1e-15):
            best = (area, theta, lo, hi)

    _, theta, lo, hi = best
    c, s = math.cos(theta), math.sin(theta)
    center_local = 0.5 * (lo + hi)
    center = np.array([c * center_local[0] - s * center_local[1],
                       s * center_local[0] + c * center_local[1]])
    ext = 0.5 * (hi - lo)
    eu, ev = float(ext[0]), float(ext[1])
    if ev > eu:
        eu, ev = ev, eu
        theta = (theta + 0.5 * math.pi) % math.pi
    return OBB(center=(float(center[0]), float(center[1])), angle=theta,
               half_extents=(eu, ev))


# ---------------------------------------------------------------------------
# Hex lattice
# ---------------------------------------------------------------------------

def axial_to_point(q: int, r: int, rh: float, origin, angle: float) -> np.ndarray:
    """Centroid of lattice cell (q, r) in world coordinates.

    Rows (constant r) run along the frame's first axis with in-row neighbor
    spacing sqrt(3)*rh; row-to-row spacing is 1.5*rh along the second axis.
    """
    c, s = math.cos(angle), math.sin(angle)
    u = np.array([c, s])
    v = np.array([-s, c])
    a = math.sqrt(3.0) * rh * (q + 0.5 * r)
    b = 1.5 * rh * r
    return np.asarray(origin, dtype=float) + a * u + b * v


def hex_corners(center, rh: float, angle: float) -> np.ndarray:
    """Six corners of the hexagon at `center` in the frame with row axis `angle`."""
    cx = np.asarray(center, dtype=float)
    out = np.empty((6, 2))
    for k in range(6):
        phi = angle + math.radians(30.0 + 60.0 * k)
        out[k] = cx + rh * np.array([math.cos(phi), math.sin(phi)])
    return out


def _convex_overlap(a: np.ndarray, b: np.ndarray, eps: float) -> bool:
    """Strict interior overlap of two convex polygons (separating-axis test)."""
    for poly in (a, b):
        n = len(poly)
        for i in range(n):
            e = poly[(i + 1) % n] - poly[i]
            axis = np.array([-e[1], e[0]])
            pa = a @ axis
            pb = b @ axis
            if min(pa.max(), pb.max()) - max(pa.min(), pb.min()) <= eps:
                return False
    return True


def tessellate(poly: AOIPolygon, spec: SensorSpec) -> list:
    """Hex cells whose interiors intersect the polygon's OBB.

    `visitable` marks cells whose centroid lies strictly inside the feasible
    region (inside the outer boundary, outside every hole).  Deterministic:
    cells are ordered by (r, q).
    """
    obb = compute_obb(poly)
    rh = spec.cell_circumradius_rh
    origin = np.asarray(obb.center)
    angle = obb.angle
    eu, ev = obb.half_extents
    rect = obb.corners()

    cells = []
    r_lim = (ev + rh) / (1.5 * rh)
    for r in range(math.ceil(-r_lim), math.floor(r_lim) + 1):
        q_span = (eu + rh) / (math.sqrt(3.0) * rh)
        q_lo = math.ceil(-q_span - 0.5 * r)
        q_hi = math.floor(q_span - 0.5 * r)
        for q in range(q_lo, q_hi + 1):
            centroid = axial_to_point(q, r, rh, origin, angle)
            corners = hex_corners(centroid, rh, angle)
            if not _convex_overlap(corners, rect, 1e-9 * rh):
                continue
            cells.append(HexCell(axial=(q, r), centroid=centroid,
                                 visitable=point_in_region(centroid, poly)))
    return cells


def visitable_cells(cells) -> list:
    return [c for c in cells if c.visitable]


# ---------------------------------------------------------------------------
# Polygon sampling
# ---------------------------------------------------------------------------

def _smooth_circular(values: np.ndarray, passes: int) -> np.ndarray:
    out = values.astype(float)
    for _ in range(passes):
        out = (np.roll(out, 1) + out + np.roll(out, -1)) / 3.0
    return out


def _radial_points(angles: np.ndarray, radii: np.ndarray) -> np.ndarray:
    return np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)


def _spoke_angles(rng: np.random.Generator, n: int) -> np.ndarray:
    jitter = rng.uniform(-0.35, 0.35, size=n)
    return 2.0 * math.pi * (np.arange(n) + jitter) / n


def _candidate_compact_convex(rng: np.random.Generator) -> np.ndarray:
    n = int(rng.integers(10, 17))
    angles = _spoke_angles(rng, n)
    radii = 1.0 + 0.25 * rng.uniform(-1.0, 1.0, size=n)
    return convex_hull(_radial_points(angles, radii))


def _candidate_elongated(rng: np.random.Generator) -> np.ndarray:
    n = int(rng.integers(14, 23))
    angles = _spoke_angles(rng, n)
    radii = _smooth_circular(1.0 + 0.45 * rng.uniform(-1.0, 1.0, size=n), passes=2)
    pts = _radial_points(angles, radii)
    pts[:, 0] *= rng.uniform(2.8, 4.2)
    return pts


def _candidate_narrow_passage(rng: np.random.Generator) -> np.ndarray:
    n = int(rng.integers(16, 25))
    angles = _spoke_angles(rng, n)
    radii = _smooth_circular(1.0 + 0.35 * rng.uniform(-1.0, 1.0, size=n), passes=1)
    depth = rng.uniform(0.45, 0.62)
    sigma = rng.uniform(0.25, 0.40)
    # Pinch the boundary inward at +/- 90 degrees: the waist sits on the y
    # axis so the passage runs along x; a random rotation generalizes it.
    for pinch_at in (0.5 * math.pi, 1.5 * math.pi):
        delta = np.angle(np.exp(1j * (angles - pinch_at)))
        radii = radii * (1.0 - depth * np.exp(-0.5 * (delta / sigma) ** 2))
    pts = _radial_points(angles, radii)
    pts[:, 0] *= rng.uniform(1.2, 1.8)
    rho = rng.uniform(0.0, math.pi)
    c, s = math.cos(rho), math.sin(rho)
    return pts @ np.array([[c, s], [-s, c]])


_CANDIDATES = {
    "compact-convex": _candidate_compact_convex,
    "elongated-concave": _candidate_elongated,
    "narrow-passage": _candidate_narrow_passage,
}


def is_convex(vertices: np.ndarray, eps=_EPS) -> bool:
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    sign = 0
    for i in range(n):
        cr = _orient(v[i], v[(i + 1) % n], v[(i + 2) % n])
        if abs(cr) <= eps:
            continue
        s = 1 if cr > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


def sample_polygon(family: str, area_band, rng: np.random.Generator,
                   template=None, budget: int = 64) -> AOIPolygon:
    """Sample a simple polygon from one of the morphological families.

    The outer area lands exactly inside `area_band` (uniform draw, then a
    uniform rescale).  `template` short-circuits sampling and returns the
    given CCW boundary verbatim, provided it satisfies the band.  Raises
    GenerationBudgetError when family constraints cannot be met within
    `budget` attempts.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    lo, hi = float(area_band[0]), float(area_band[1])
    if not (0 < lo <= hi):
        raise ValueError("area band must satisfy 0 < min <= max")

    if template is not None:
        poly = AOIPolygon(outer=np.asarray(template, dtype=float), holes=[], family=family)
        validate_polygon(poly)
        area = polygon_area(poly)
        if not (lo - _EPS <= area <= hi + _EPS):
            raise ValueError(f"template area {area:.3f} outside band [{lo}, {hi}]")
        return poly

    make = _CANDIDATES[family]
    for _ in range(budget):
        outer = ensure_ccw(make(rng))
        if len(outer) < 3 or not is_simple_polygon(outer):
            continue
        if family == "compact-convex" and not is_convex(outer):
            continue
        target = rng.uniform(lo, hi)
        outer = outer * math.sqrt(target / abs(polygon_signed_area(outer)))
        poly = AOIPolygon(outer=outer, holes=[], family=family)
        if family == "elongated-concave":
            obb = compute_obb(poly)
            if obb.half_extents[0] < 2.5 * obb.half_extents[1]:
                continue
        return poly
    raise GenerationBudgetError(
        f"could not sample a {family} polygon for band [{lo}, {hi}] in {budget} tries")
