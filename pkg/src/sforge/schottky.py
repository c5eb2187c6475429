"""Relative Schottky sets: validation, relative distance, orbits, measure.

A relative Schottky set is a Jordan domain minus open round discs whose
closures are pairwise disjoint and contained in the domain.  Scenes carry an
optional triple of boundary marks used to normalize uniformizing maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from shapely.geometry import LinearRing, LineString, Point, Polygon

from .geometry import Disc, GeometryError, reflect_disc

#: relative gap threshold separating "disjoint closures" from tangency
GAP_RTOL = 1e-9

#: default boundary sampling density for distance computations
BOUNDARY_SAMPLES = 512


def _as_xy(points: np.ndarray) -> np.ndarray:
    z = np.asarray(points, dtype=complex)
    return np.column_stack([z.real, z.imag])


@dataclass(frozen=True)
class JordanBoundary:
    """Outer Jordan curve: either a circle or a closed simple polyline.

    Polyline vertices are stored positively oriented (domain on the left).
    """

    circle: Disc | None = None
    vertices: np.ndarray | None = None

    def __post_init__(self):
        if (self.circle is None) == (self.vertices is None):
            raise GeometryError("boundary must be exactly one of circle or polyline")
        if self.vertices is not None:
            v = np.asarray(self.vertices, dtype=complex)
            if v.shape[0] < 3:
                raise GeometryError("polyline boundary needs at least 3 vertices")
            if abs(v[0] - v[-1]) < 1e-15:
                v = v[:-1]
            ring = LinearRing(_as_xy(np.append(v, v[0])))
            if not ring.is_simple:
                raise GeometryError("polyline boundary must be simple")
            if not ring.is_ccw:
                v = v[::-1]
            object.__setattr__(self, "vertices", v)

    @property
    def is_circle(self) -> bool:
        return self.circle is not None

    def polygon(self) -> Polygon:
        if self.is_circle:
            return Polygon(_as_xy(self.circle.boundary_points(BOUNDARY_SAMPLES)))
        return Polygon(_as_xy(self.vertices))

    def sample(self, n: int = BOUNDARY_SAMPLES) -> np.ndarray:
        """n points along the boundary, uniformly in arclength, positive order."""
        if self.is_circle:
            return self.circle.boundary_points(n)
        v = np.append(self.vertices, self.vertices[0])
        seg = np.abs(np.diff(v))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        t = np.linspace(0.0, cum[-1], n, endpoint=False)
        x = np.interp(t, cum, v.real)
        y = np.interp(t, cum, v.imag)
        return x + 1j * y

    def contains(self, z, margin: float = 0.0):
        """Strict interior test (points at distance <= margin from the curve fail)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.is_circle:
            res = np.abs(z - self.circle.center) < self.circle.radius - margin
        else:
            poly = self.polygon()
            if margin > 0.0:
                poly = poly.buffer(-margin)
            from shapely import contains_xy
            res = contains_xy(poly, z.real, z.imag)
        return res if res.size > 1 else bool(res[0])

    def distance_to(self, z) -> np.ndarray:
        """Distance from points to the boundary curve."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.is_circle:
            d = np.abs(np.abs(z - self.circle.center) - self.circle.radius)
        else:
            ring = LinearRing(_as_xy(np.append(self.vertices, self.vertices[0])))
            d = np.array([ring.distance(Point(p.real, p.imag)) for p in z])
        return d if d.size > 1 else float(d[0])

    @property
    def diameter(self) -> float:
        if self.is_circle:
            return self.circle.diameter
        pts = self.vertices
        hull = _as_xy(pts)
        d = 0.0
        for i in range(len(hull)):
            d = max(d, float(np.max(np.hypot(hull[:, 0] - hull[i, 0], hull[:, 1] - hull[i, 1]))))
        return d

    def bounding_box(self) -> tuple[float, float, float, float]:
        if self.is_circle:
            c, r = self.circle.center, self.circle.radius
            return c.real - r, c.imag - r, c.real + r, c.imag + r
        v = self.vertices
        return float(v.real.min()), float(v.imag.min()), float(v.real.max()), float(v.imag.max())


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    gap: float
    indices: tuple = ()

    def __str__(self):
        return f"{self.kind}: {self.detail} (gap {self.gap:.3e})"


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]


@dataclass(frozen=True)
class RelativeSchottkySet:
    """Scene S = Omega \\ union of open discs, with optional boundary marks."""

    outer: JordanBoundary
    discs: tuple[Disc, ...] = ()
    marks: tuple[complex, complex, complex] | None = None

    def __post_init__(self):
        object.__setattr__(self, "discs", tuple(self.discs))
        if self.marks is not None:
            object.__setattr__(self, "marks", tuple(complex(m) for m in self.marks))

    @property
    def scale(self) -> float:
        return self.outer.diameter

    def gap_threshold(self) -> float:
        return GAP_RTOL * self.scale

    def validate(self) -> ValidationReport:
        """Check the defining invariants, reporting every violation found."""
        out: list[Violation] = []
        thr = self.gap_threshold()
        discs = self.discs
        for i in range(len(discs)):
            for j in range(i + 1, len(discs)):
                gap = abs(discs[i].center - discs[j].center) - discs[i].radius - discs[j].radius
                if gap <= thr:
                    out.append(Violation("closures intersect",
                                         f"discs {i} and {j} are not strictly disjoint",
                                         gap, (i, j)))
        for i, d in enumerate(discs):
            if self.outer.is_circle:
                c0, r0 = self.outer.circle.center, self.outer.circle.radius
                clr = r0 - abs(d.center - c0) - d.radius
            else:
                inside = self.outer.contains(d.center)
                bd = self.outer.distance_to(d.center)
                clr = (bd - d.radius) if inside else -(bd + d.radius)
            if clr <= thr:
                out.append(Violation("closure not inside domain",
                                     f"disc {i} lacks clearance from the outer boundary",
                                     clr, (i,)))
        if self.marks is not None:
            if len(self.marks) != 3:
                out.append(Violation("marks", "exactly three marks are required", 0.0))
            else:
                d = self.outer.distance_to(np.array(self.marks))
                d = np.atleast_1d(d)
                for i, di in enumerate(d):
                    if di > 1e-7 * max(1.0, self.scale):
                        out.append(Violation("mark off boundary",
                                             f"mark {i} is not on the outer boundary",
                                             float(di), (i,)))
                if not out or all(v.kind != "mark off boundary" for v in out):
                    if not self._marks_positive():
                        out.append(Violation("mark order",
                                             "marks are not in positive cyclic order", 0.0))
        return ValidationReport(not out, tuple(out))

    def _marks_positive(self) -> bool:
        t = [self.boundary_parameter(m) for m in self.marks]
        a, b, c = t
        # positive cyclic order: b and c appear in that order going up from a
        return ((b - a) % 1.0) < ((c - a) % 1.0)

    def boundary_parameter(self, z: complex) -> float:
        """Parameter in [0,1) of the nearest outer boundary point."""
        if self.outer.is_circle:
            c = self.outer.circle.center
            return (math.atan2((z - c).imag, (z - c).real) / (2.0 * math.pi)) % 1.0
        v = np.append(self.outer.vertices, self.outer.vertices[0])
        seg = np.abs(np.diff(v))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        best, best_t = math.inf, 0.0
        for k in range(len(v) - 1):
            w = v[k + 1] - v[k]
            t = np.clip(((z - v[k]) * w.conjugate()).real / (abs(w) ** 2 + 1e-300), 0.0, 1.0)
            d = abs(v[k] + t * w - z)
            if d < best:
                best, best_t = d, (cum[k] + t * seg[k]) / cum[-1]
        return best_t % 1.0

    def boundary_point_at(self, t: float) -> complex:
        """Outer boundary point at normalized parameter t in [0,1)."""
        if self.outer.is_circle:
            return self.outer.circle.boundary_point(2.0 * math.pi * (t % 1.0))
        v = np.append(self.outer.vertices, self.outer.vertices[0])
        seg = np.abs(np.diff(v))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        s = (t % 1.0) * cum[-1]
        k = int(np.searchsorted(cum, s, side="right") - 1)
        k = min(k, len(seg) - 1)
        u = (s - cum[k]) / seg[k]
        return v[k] + u * (v[k + 1] - v[k])

    def in_set(self, z, boundary_margin: float = 0.0):
        """Membership in S (inside the domain, outside every open disc)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        ok = np.atleast_1d(self.outer.contains(z, margin=boundary_margin))
        for d in self.discs:
            ok &= np.abs(z - d.center) >= d.radius
        return ok if ok.size > 1 else bool(ok[0])

    def disc_clearance(self, z) -> np.ndarray:
        """Signed distance to the nearest peripheral circle (negative inside a disc)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if not self.discs:
            out = np.full(z.shape, np.inf)
        else:
            d = np.stack([np.abs(z - d.center) - d.radius for d in self.discs])
            out = d.min(axis=0)
        return out if out.size > 1 else float(out[0])

    def with_discs(self, n: int) -> "RelativeSchottkySet":
        """Prefix scene keeping the first n discs (disc order is part of the scene)."""
        return RelativeSchottkySet(self.outer, self.discs[:n], self.marks)


@dataclass(frozen=True)
class OrbitDisc:
    """Image of a peripheral disc under a reduced reflection word."""

    disc: Disc
    base: int
    word: tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.word)


def group_orbit(s: RelativeSchottkySet, max_depth: int) -> list[OrbitDisc]:
    """Breadth-first orbit of the peripheral discs under the reflection group.

    Words are reduced (reflections are involutions, so letters never repeat
    consecutively) and a word never ends in the index of the disc it acts on.
    Depth-0 entries are the original discs.
    """
    if max_depth < 0:
        raise GeometryError("max_depth must be >= 0")
    rep = s.validate()
    if not rep.ok:
        raise GeometryError(f"invalid scene: {rep.violations[0]}")
    out = [OrbitDisc(d, i, ()) for i, d in enumerate(s.discs)]
    frontier = list(out)
    for _ in range(max_depth):
        nxt = []
        for od in frontier:
            head = od.word[0] if od.word else od.base
            for g, mirror in enumerate(s.discs):
                if g == head:
                    continue
                nxt.append(OrbitDisc(reflect_disc(mirror, od.disc), od.base, (g,) + od.word))
        out.extend(nxt)
        frontier = nxt
        if not frontier:
            break
    return out


def area_fraction(s: RelativeSchottkySet, samples: int = 10000,
                  seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of area(S)/area(Omega) with its standard error."""
    if samples < 1000:
        raise GeometryError("need at least 1000 samples")
    rep = s.validate()
    if not rep.ok:
        raise GeometryError(f"invalid scene: {rep.violations[0]}")
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = s.outer.bounding_box()
    pts = (rng.uniform(x0, x1, samples) + 1j * rng.uniform(y0, y1, samples))
    in_omega = np.atleast_1d(s.outer.contains(pts))
    k = int(in_omega.sum())
    if k == 0:
        raise GeometryError("no samples landed in the domain")
    inside = pts[in_omega]
    in_s = np.ones(k, dtype=bool)
    for d in s.discs:
        in_s &= np.abs(inside - d.center) >= d.radius
    m = int(in_s.sum())
    p = m / k
    return p, math.sqrt(max(p * (1.0 - p), 1.0 / k) / k)


def _geometry_of(obj, n: int):
    """Sample points and a shapely geometry for a Polyline, Disc or sample array."""
    from .curves import Polyline
    if isinstance(obj, Disc):
        pts = obj.boundary_points(n)
        geo = LinearRing(_as_xy(np.append(pts, pts[0])))
    elif isinstance(obj, Polyline):
        pts = obj.vertices
        xy = _as_xy(pts if not obj.closed else np.append(pts, pts[0]))
        geo = LineString(xy)
    else:
        pts = np.asarray(obj, dtype=complex)
        geo = LineString(_as_xy(pts)) if pts.size > 1 else Point(pts[0].real, pts[0].imag)
    return pts, geo


def relative_distance(E, F, n: int = BOUNDARY_SAMPLES) -> float:
    """dist(E, F) / min(diam E, diam F) on sampled boundaries; 0 iff they meet."""
    pe, ge = _geometry_of(E, n)
    pf, gf = _geometry_of(F, n)
    de = float(max(np.abs(pe[:, None] - pe[None, :]).max(), 0.0)) if pe.size > 1 else 0.0
    df = float(max(np.abs(pf[:, None] - pf[None, :]).max(), 0.0)) if pf.size > 1 else 0.0
    if isinstance(E, Disc):
        de = E.diameter
    if isinstance(F, Disc):
        df = F.diameter
    if de <= 0.0 or df <= 0.0:
        raise GeometryError("relative distance needs sets of positive diameter")
    if ge.intersects(gf):
        return 0.0
    return float(ge.distance(gf)) / min(de, df)


def config_hausdorff(a: RelativeSchottkySet, b: RelativeSchottkySet,
                     n: int = BOUNDARY_SAMPLES) -> float:
    """Hausdorff distance between two scenes on boundary samples.

    Every boundary component (outer curve plus peripheral circles) contributes
    n samples; the distance is symmetric and zero only when the configurations
    coincide at sampling resolution.
    """
    def samples(s: RelativeSchottkySet) -> np.ndarray:
        parts = [s.outer.sample(n)]
        parts += [d.boundary_points(n) for d in s.discs]
        return np.concatenate(parts)

    pa, pb = samples(a), samples(b)
    ta = cKDTree(_as_xy(pa))
    tb = cKDTree(_as_xy(pb))
    d_ab = tb.query(_as_xy(pa))[0].max()
    d_ba = ta.query(_as_xy(pb))[0].max()
    return float(max(d_ab, d_ba))
