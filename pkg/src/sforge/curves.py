"""Polyline curves and constructive rerouting around peripheral discs.

``reroute`` pushes a curve out of the open discs of a scene by replacing, for
each disc met, the sub-curve between its first and last boundary hits with the
shorter boundary arc.  Discs are processed in decreasing radius, so each disc
is handled at most once and the result is never longer than pi times the
input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Disc, GeometryError, circle_circle_intersections
from .schottky import RelativeSchottkySet

#: a curve point penetrating an open disc deeper than this counts as crossing
CROSS_TOL = 1e-12

#: base angular resolution of replacement arcs
ARC_BASE_STEP = 2.0 * math.pi / 256.0


class RerouteError(GeometryError):
    pass


@dataclass(frozen=True)
class Polyline:
    """Ordered vertex list; closed curves do not repeat the first vertex."""

    vertices: np.ndarray
    closed: bool = False

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=complex)
        if v.ndim != 1 or v.size < 1:
            raise GeometryError("polyline needs a one-dimensional vertex list")
        if v.size > 1:
            keep = np.concatenate([[True], np.abs(np.diff(v)) > 0.0])
            v = v[keep]
        object.__setattr__(self, "vertices", v)

    @property
    def length(self) -> float:
        v = self.vertices
        if v.size < 2:
            return 0.0
        L = float(np.sum(np.abs(np.diff(v))))
        if self.closed:
            L += abs(v[0] - v[-1])
        return L

    def segments(self) -> np.ndarray:
        v = self.vertices
        if self.closed:
            v = np.append(v, v[0])
        return v

    def point_at(self, seg: int, t: float) -> complex:
        v = self.segments()
        return v[seg] + t * (v[seg + 1] - v[seg])

    def resample(self, n: int) -> "Polyline":
        v = self.segments()
        seg = np.abs(np.diff(v))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        if cum[-1] == 0.0:
            return Polyline(np.repeat(v[:1], n), self.closed)
        t = np.linspace(0.0, cum[-1], n, endpoint=not self.closed)
        x = np.interp(t, cum, v.real)
        y = np.interp(t, cum, v.imag)
        return Polyline(x + 1j * y, self.closed)


@dataclass(frozen=True)
class RerouteStep:
    """One disc replacement: lengths of the removed sub-curve and its arc."""

    disc_index: int
    removed: float
    arc: float


def _segment_circle_params(a: complex, b: complex, disc: Disc) -> list[float]:
    """t in [0,1] where the segment a + t(b-a) meets the boundary circle."""
    d = b - a
    f = a - disc.center
    A = (d * d.conjugate()).real
    if A == 0.0:
        return []
    B = 2.0 * (f * d.conjugate()).real
    C = (f * f.conjugate()).real - disc.radius * disc.radius
    disc_ = B * B - 4.0 * A * C
    if disc_ < 0.0:
        return []
    s = math.sqrt(disc_)
    out = []
    for t in ((-B - s) / (2.0 * A), (-B + s) / (2.0 * A)):
        if -1e-12 <= t <= 1.0 + 1e-12:
            out.append(min(max(t, 0.0), 1.0))
    return sorted(out)


def _curve_disc_hits(poly: np.ndarray, disc: Disc):
    """First/last boundary hits of the curve on the circle, if it enters the disc.

    Returns None when the curve does not penetrate the open disc by more than
    CROSS_TOL (touching does not count as crossing).
    """
    c, r = disc.center, disc.radius
    depth = r - np.abs(poly - c)
    hits = []  # (seg_index, t) boundary points in curve order
    entered = bool(np.any(depth > CROSS_TOL * max(1.0, r)))
    for k in range(len(poly) - 1):
        a, b = poly[k], poly[k + 1]
        # segment interior can dip into the disc even if vertices stay out
        if not entered:
            w = b - a
            L2 = (w * w.conjugate()).real
            if L2 > 0.0:
                t = min(max((((c - a) * w.conjugate()).real) / L2, 0.0), 1.0)
                if r - abs(a + t * w - c) > CROSS_TOL * max(1.0, r):
                    entered = True
        for t in _segment_circle_params(a, b, disc):
            hits.append((k, t))
    if not entered or not hits:
        return None
    # endpoints sitting exactly on the circle count as boundary points
    first, last = hits[0], hits[-1]
    if first == last:
        return None
    return first, last


def _shorter_arc(disc: Disc, z1: complex, z2: complex, approach: complex) -> np.ndarray:
    """Vertices of the shorter arc from z1 to z2, excluding the endpoints.

    The arc is sampled at the configured angular resolution and its interior
    vertices are pushed just outside the circle so the discretized curve never
    penetrates the open disc.  The antipodal tie is broken toward the arc on
    the left of the approach direction.
    """
    c, r = disc.center, disc.radius
    t1 = math.atan2((z1 - c).imag, (z1 - c).real)
    t2 = math.atan2((z2 - c).imag, (z2 - c).real)
    delta = (t2 - t1) % (2.0 * math.pi)
    if delta > math.pi + 1e-12:
        delta -= 2.0 * math.pi
    elif abs(delta - math.pi) <= 1e-12:
        # tie: choose the arc whose initial direction is left of the approach
        ccw_dir = 1j * (z1 - c)
        cross = (approach.conjugate() * ccw_dir).imag
        delta = math.pi if cross >= 0.0 else -math.pi
    n_steps = max(2, int(math.ceil(abs(delta) / ARC_BASE_STEP)))
    step = abs(delta) / n_steps
    # circumscribe so chords clear the open disc (sagitta compensation)
    rr = r / math.cos(0.5 * step) * (1.0 + 1e-12)
    ts = t1 + np.sign(delta) * step * np.arange(1, n_steps)
    return c + rr * np.exp(1j * ts)


def reroute(s: RelativeSchottkySet, line: Polyline, trace: bool = False):
    """Reroute a curve off the open discs; length grows at most by a factor pi.

    Endpoints must lie in the closure of S.  Discs are visited in decreasing
    radius (index as tie-break); for each disc met, the sub-curve between the
    first and last circle hits becomes the shorter boundary arc.
    """
    rep = s.validate()
    if not rep.ok:
        raise RerouteError(f"invalid scene: {rep.violations[0]}")
    poly = np.asarray(line.vertices, dtype=complex)
    if line.closed:
        raise RerouteError("rerouting expects an open curve with two endpoints")
    for z in (poly[0], poly[-1]):
        clr = s.disc_clearance(z)
        if clr < -CROSS_TOL * max(1.0, s.scale):
            raise RerouteError("curve endpoint lies strictly inside a removed disc")
    order = sorted(range(len(s.discs)), key=lambda i: (-s.discs[i].radius, i))
    steps: list[RerouteStep] = []
    guard = 0
    for i in order:
        guard += 1
        if guard > 10 * max(1, len(s.discs)):
            raise RerouteError("rerouting failed to terminate")
        disc = s.discs[i]
        hit = _curve_disc_hits(poly, disc)
        if hit is None:
            continue
        (k1, t1), (k2, t2) = hit
        a = poly[k1] + t1 * (poly[k1 + 1] - poly[k1])
        b = poly[k2] + t2 * (poly[k2 + 1] - poly[k2])
        removed_pts = np.concatenate([[a], poly[k1 + 1:k2 + 1], [b]])
        removed_len = float(np.sum(np.abs(np.diff(removed_pts))))
        approach = a - poly[k1] if abs(a - poly[k1]) > 0 else poly[k1 + 1] - poly[k1]
        arc_mid = _shorter_arc(disc, a, b, approach)
        arc_pts = np.concatenate([[a], arc_mid, [b]])
        arc_len = float(np.sum(np.abs(np.diff(arc_pts))))
        poly = np.concatenate([poly[:k1 + 1], arc_pts, poly[k2 + 1:]])
        steps.append(RerouteStep(i, removed_len, arc_len))
    result = Polyline(poly)
    if trace:
        return result, steps
    return result


def reroute_in_ball(s: RelativeSchottkySet, p: complex, q: complex, r: float) -> Polyline:
    """Connect p and q inside closure(S) intersected with B(p, 2r).

    Requires B(p, 2r) inside the domain and both points in the closure of
    S within B(p, r).  The result is the rerouted straight segment; its length
    is at most pi |p - q|.
    """
    if abs(q - p) > r * (1.0 + 1e-12):
        raise RerouteError("q must lie in B(p, r)")
    clr = s.outer.distance_to(p)
    if not s.outer.contains(p) or clr < 2.0 * r * (1.0 - 1e-12):
        raise RerouteError("B(p, 2r) is not contained in the domain")
    if p == q:
        return Polyline(np.array([p]))
    out = reroute(s, Polyline(np.array([p, q])))
    far = float(np.max(np.abs(out.vertices - p)))
    if far > 2.0 * r * (1.0 + 1e-9):
        raise RerouteError("rerouted curve escaped B(p, 2r)")
    return out


def shorter_arc_side_check(outer: Disc, inner: Disc) -> bool:
    """True iff the shorter arc of the inner circle between the two intersection
    points of the boundary circles lies outside the outer disc.

    When true, the inner center lies in the outer disc and the inner radius is
    no larger than the outer one.
    """
    z1, z2 = circle_circle_intersections(outer, inner)
    c = inner.center
    t1 = math.atan2((z1 - c).imag, (z1 - c).real)
    t2 = math.atan2((z2 - c).imag, (z2 - c).real)
    delta = (t2 - t1) % (2.0 * math.pi)
    if delta > math.pi:
        t1, t2 = t2, t1
        delta = 2.0 * math.pi - delta
    mid = c + inner.radius * np.exp(1j * (t1 + 0.5 * delta))
    return bool(abs(mid - outer.center) > outer.radius)


def is_peripheral(s: RelativeSchottkySet, c: Polyline, tol: float = 1e-6) -> bool:
    """True iff the closed curve coincides with some peripheral circle.

    Coincidence is Hausdorff distance below tol.  The curve must lie in S: a
    penetration of any open disc deeper than tol is a precondition error.
    """
    if not c.closed:
        raise GeometryError("peripheral test needs a closed curve")
    pts = c.resample(max(len(c.vertices), 256)).vertices
    pen = -min(float(np.min(s.disc_clearance(pts))), 0.0)
    if pen > tol:
        raise GeometryError("curve is not contained in S")
    for d in s.discs:
        radial = np.abs(np.abs(pts - d.center) - d.radius)
        if float(radial.max()) >= tol:
            continue
        # other direction: the circle must also be covered by the curve
        circ = d.boundary_points(256)
        dmax = 0.0
        for z in circ:
            dmax = max(dmax, float(np.min(np.abs(pts - z))))
        if dmax < max(tol, 2.0 * math.pi * d.radius / len(pts)):
            return True
    return False
