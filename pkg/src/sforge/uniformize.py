"""Circle-domain uniformization by cyclic Koebe iteration.

The simply connected Riemann-map kernel is a geodesic variant of the zipper
algorithm: boundary samples are absorbed one at a time into the real line by
closed-form slit maps, so the resulting map is an explicit composition chain
that is exact at the sample points and conformal everywhere off the boundary.

A Koebe sweep rounds one boundary component at a time: the outer curve is
mapped to the unit circle (filling all holes) and renormalized so the three
boundary marks go to 1, i, -1; each hole is then rounded through an exterior
map built from the same kernel after an inversion.  Components that are
already circles at sampling resolution are snapped (outer) or skipped (holes),
which makes an exact circle domain a fixed point of the sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .chain import Chain
from .geometry import Disc, GeometryError, MobiusMap, fit_circle, mobius_three_points
from .schottky import JordanBoundary, RelativeSchottkySet

MARK_TARGETS = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j)


class UniformizeError(GeometryError):
    pass


class NotConverged(UniformizeError):
    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


# ---------------------------------------------------------------------------
# resampling


def resample_closed(points: np.ndarray, n: int, anchors: tuple[int, ...] = ()):
    """Resample a closed curve to ~n points, uniformly in arclength per stretch.

    Anchor vertices are kept exactly; the new anchor indices are returned with
    the points.  Uses a periodic cubic spline through the input samples, so the
    input should be smooth (images of circles under conformal maps are).
    """
    pts = np.asarray(points, dtype=complex)
    keep = np.concatenate([[True], np.abs(np.diff(pts)) > 1e-300])
    pts = pts[keep]
    m = len(pts)
    closed = np.append(pts, pts[0])
    seg = np.abs(np.diff(closed))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    y = np.column_stack([closed.real, closed.imag])
    spl = CubicSpline(cum, y, bc_type="periodic")

    anchors = tuple(sorted(a % m for a in anchors))
    if not anchors:
        t = np.linspace(0.0, total, n, endpoint=False)
        new_anchors = ()
    else:
        t_parts = []
        new_anchors = []
        bounds = [cum[a] for a in anchors] + [cum[anchors[0]] + total]
        for i in range(len(anchors)):
            lo, hi = bounds[i], bounds[i + 1]
            ni = max(8, int(round(n * (hi - lo) / total)))
            new_anchors.append(sum(len(p) for p in t_parts))
            t_parts.append(np.linspace(lo, hi, ni, endpoint=False))
        t = np.concatenate(t_parts) % total
        new_anchors = tuple(new_anchors)
    xy = spl(t)
    out = xy[:, 0] + 1j * xy[:, 1]
    if anchors:
        # anchors are data points of the spline: restore them exactly
        out = out.copy()
        for ai, a in zip(new_anchors, anchors):
            out[ai] = pts[a]
    return out, new_anchors


# ---------------------------------------------------------------------------
# geodesic zipper kernel


def disc_map_chain(samples: np.ndarray, probe: complex) -> Chain:
    """Chain mapping the Jordan domain through the samples onto the unit disc.

    The samples themselves land exactly on the unit circle.  ``probe`` must be
    a point inside the domain; it selects the closing branch.
    """
    z = np.asarray(samples, dtype=complex)
    n = len(z)
    if n < 8:
        raise UniformizeError("need at least 8 boundary samples")
    ch = Chain()
    ch.append_zip_open(z[1], z[0])
    track = ch.apply(z[2:])
    p = ch.apply(probe)
    xi = complex(np.inf, np.inf)  # image of z[0], pulled to a real point by zips
    for k in range(track.size):
        a = track[k]
        im = a.imag
        if not (im > 1e-14 * abs(a)):
            continue  # sample already on the zipped boundary: nothing to absorb
        r2 = (a * a.conjugate()).real
        mu = a.real / r2
        h = r2 / im
        before = len(ch)
        ch.append_zip(mu, h)
        track[k + 1:] = ch.apply(track[k + 1:], start=before)
        p = ch.apply(p, start=before)
        xi = ch.apply(xi, start=before)
    # terminal arc from the last sample back to z[0]: send xi to infinity so
    # the remaining region is a quarter-plane, then close it
    if math.isfinite(xi.real):
        before = len(ch)
        ch.append_mobius(MobiusMap(1.0, 0.0, -1.0 / xi, 1.0))
        p = ch.apply(p, start=before)
    sigma = 1.0 if p.real > 0.0 else -1.0
    ch.append_square(sigma)
    p = sigma * p * p
    if not p.imag > 0.0:
        raise UniformizeError("zipper probe left the upper half-plane; "
                              "boundary samples may be invalid")
    ch.append_mobius(MobiusMap(1.0, -1.0j, 1.0, 1.0j))  # half-plane -> disc
    return ch


# ---------------------------------------------------------------------------
# discrete conformal maps


@dataclass
class DiscreteConformalMap:
    """Conformal map stored as an elementary-map chain with boundary data.

    ``correspondences`` maps a component key ('outer' or disc index) to a pair
    of arrays (source boundary samples, their images); the chain evaluates the
    map at arbitrary interior points, ``inverse`` walks the reversed chain.
    """

    source: RelativeSchottkySet
    target: RelativeSchottkySet
    chain: Chain
    correspondences: dict
    residual: float = 0.0
    _inv: Chain | None = field(default=None, repr=False)

    def __call__(self, z):
        return self.chain.apply(z)

    def inverse(self, z):
        if self._inv is None:
            self._inv = self.chain.inverted()
        return self._inv.apply(z)

    def derivative(self, z, h: float = 1e-6):
        """Central difference derivative (the chain is smooth off the boundary)."""
        z = np.asarray(z, dtype=complex)
        return (self.chain.apply(z + h) - self.chain.apply(z - h)) / (2.0 * h)


@dataclass
class UniformizeReport:
    circle_residual: float
    normalization_residual: float
    sweeps: int
    history: list
    converged: bool


# ---------------------------------------------------------------------------
# Koebe iteration


def _interior_probe(pts: np.ndarray) -> complex:
    from shapely.geometry import Polygon
    poly = Polygon(np.column_stack([pts.real, pts.imag]))
    rp = poly.representative_point()
    return complex(rp.x, rp.y)


def _outer_source_samples(scene: RelativeSchottkySet, n: int):
    """Mark-anchored source samples of the outer boundary, positive order."""
    t_marks = [scene.boundary_parameter(m) for m in scene.marks]
    params = []
    anchors = []
    count = 0
    for i in range(3):
        lo = t_marks[i]
        hi = t_marks[(i + 1) % 3]
        span = (hi - lo) % 1.0
        if span == 0.0:
            raise UniformizeError("marks must be distinct boundary points")
        ni = max(8, int(round(n * span)))
        anchors.append(count)
        params.append((lo + span * np.arange(ni) / ni) % 1.0)
        count += ni
    t = np.concatenate(params)
    pts = np.array([scene.boundary_point_at(ti) for ti in t])
    for ai, m in zip(anchors, scene.marks):
        pts[ai] = m  # marks are exact sample points
    return pts, tuple(anchors)


class _KoebeState:
    def __init__(self, scene: RelativeSchottkySet, n_outer: int, n_hole: int):
        self.scene = scene
        self.chain = Chain()
        outer_pts, anchors = _outer_source_samples(scene, n_outer)
        self.work = [outer_pts.copy()]
        self.anchors = anchors
        self.corr_src = [outer_pts.copy()]
        self.corr_img = [outer_pts.copy()]
        for d in scene.discs:
            pts = d.boundary_points(n_hole)
            self.work.append(pts.copy())
            self.corr_src.append(pts.copy())
            self.corr_img.append(pts.copy())
        self.marks = np.array(scene.marks, dtype=complex)
        self.n_outer = n_outer
        self.n_hole = n_hole

    def tracked(self):
        return self.work + self.corr_img + [self.marks]

    def apply_new(self, start: int):
        if len(self.chain) == start:
            return
        for arr in self.tracked():
            arr[:] = self.chain.apply(arr, start=start)

    def fits(self):
        return [fit_circle(w) for w in self.work]


def koebe_uniformize(scene: RelativeSchottkySet, tol: float = 1e-6,
                     max_sweeps: int = 500, n_outer: int = 512,
                     n_hole: int = 256, raise_on_failure: bool = True):
    """Map the scene conformally onto a circle domain in the unit disc.

    Returns (map, target scene, report).  Marks are required and are sent to
    1, i, -1; the iteration stops when every boundary component is round to
    within ``tol`` at sampling resolution and the marks are within ``tol`` of
    their targets.
    """
    rep = scene.validate()
    if not rep.ok:
        raise UniformizeError(f"invalid scene: {rep.violations[0]}")
    if scene.marks is None:
        raise UniformizeError("uniformization needs three boundary marks")
    if not (tol > 0.0):
        raise UniformizeError("tol must be positive")

    st = _KoebeState(scene, n_outer, n_hole)
    snap = max(1e-12, 0.02 * tol)
    skip = 0.2 * tol
    history = []
    converged = False
    sweeps = 0

    for sweep in range(1, max_sweeps + 1):
        sweeps = sweep
        _outer_step(st, snap, sweep)
        # holes by decreasing current radius, index as tie-break
        fits = [fit_circle(w) for w in st.work[1:]]
        order = sorted(range(len(fits)), key=lambda j: (-fits[j][1], j))
        for j in order:
            c, r, dev = fit_circle(st.work[j + 1])
            if dev < skip:
                continue
            _hole_step(st, j + 1, c)
        dev_max = max(f[2] for f in st.fits()) if st.work else 0.0
        mark_res = float(np.max(np.abs(st.marks - np.array(MARK_TARGETS))))
        history.append((sweep, dev_max, mark_res))
        if dev_max < tol and mark_res < tol:
            converged = True
            break

    report = UniformizeReport(history[-1][1] if history else 0.0,
                              history[-1][2] if history else 0.0,
                              sweeps, history, converged)
    target = _image_scene(st)
    corr = {"outer": (st.corr_src[0], st.corr_img[0])}
    for j in range(len(scene.discs)):
        corr[j] = (st.corr_src[j + 1], st.corr_img[j + 1])
    dmap = DiscreteConformalMap(scene, target, st.chain, corr,
                                residual=report.circle_residual)
    if not converged and raise_on_failure:
        raise NotConverged(
            f"no convergence after {max_sweeps} sweeps "
            f"(residual {report.circle_residual:.3e})",
            partial=(dmap, target, report))
    return dmap, target, report


def _outer_step(st: _KoebeState, snap: float, sweep: int):
    pts = st.work[0]
    c, r, dev = fit_circle(pts)
    start = len(st.chain)
    if dev < snap:
        if abs(c) > 1e-15 or abs(r - 1.0) > 1e-15:
            st.chain.append_mobius(MobiusMap(1.0, -c, 0.0, r))
    else:
        resample_ok = sweep > 1 or st.scene.outer.is_circle
        if resample_ok:
            new_pts, anchors = resample_closed(pts, st.n_outer, st.anchors)
            st.work[0] = new_pts
            st.anchors = anchors
            pts = new_pts
        probe = st.work[1][0] if len(st.work) > 1 else _interior_probe(pts)
        st.chain.extend(disc_map_chain(pts, probe))
    st.apply_new(start)
    # pin the marks at 1, i, -1
    w1, w2, w3 = st.marks
    m = mobius_three_points((w1, w2, w3), MARK_TARGETS)
    if abs(m.a - 1.0) + abs(m.b) + abs(m.c) + abs(m.d - 1.0) > 1e-15:
        start = len(st.chain)
        st.chain.append_mobius(m)
        st.apply_new(start)


def _hole_step(st: _KoebeState, idx: int, center: complex):
    pts, _ = resample_closed(st.work[idx], st.n_hole)
    st.work[idx] = pts
    start = len(st.chain)
    inv = MobiusMap(0.0, 1.0, 1.0, -center)  # w = 1/(z - center)
    zeta = inv(pts)
    sub = disc_map_chain(zeta, 0.0j)
    alpha = sub.apply(0.0j)
    st.chain.append_mobius(inv)
    st.chain.extend(sub)
    st.chain.append_mobius(MobiusMap(1.0, -alpha, -alpha.conjugate(), 1.0))
    # deterministic rotation: first sample to the positive real axis
    u = st.chain.apply(pts[0], start=start)
    rot = u.conjugate() / abs(u)
    st.chain.append_mobius(MobiusMap(rot, 0.0, 0.0, 1.0))
    st.chain.append_mobius(MobiusMap(0.0, 1.0, 1.0, 0.0))  # back out: w -> 1/w
    st.apply_new(start)


def _image_scene(st: _KoebeState) -> RelativeSchottkySet:
    discs = []
    for w in st.work[1:]:
        c, r, _ = fit_circle(w)
        discs.append(Disc(c, r))
    return RelativeSchottkySet(JordanBoundary(circle=Disc(0.0j, 1.0)),
                               tuple(discs), tuple(st.marks))


def riemann_map(domain: JordanBoundary, p1: complex, p2: complex, p3: complex,
                n_samples: int = 512) -> DiscreteConformalMap:
    """Conformal map of a Jordan domain onto the unit disc, marks to 1, i, -1."""
    scene = RelativeSchottkySet(domain, (), (p1, p2, p3))
    rep = scene.validate()
    if not rep.ok:
        raise UniformizeError(f"invalid domain or marks: {rep.violations[0]}")
    dmap, _, _ = koebe_uniformize(scene, tol=1e-9, max_sweeps=3,
                                  n_outer=n_samples, raise_on_failure=False)
    src, img = dmap.correspondences["outer"]
    dmap.residual = float(np.max(np.abs(np.abs(img) - 1.0)))
    return dmap


# ---------------------------------------------------------------------------
# radial extension through removed discs


@dataclass(frozen=True)
class RadialExtension:
    """Homeomorphism of closed discs extending a boundary circle map radially.

    Maps center to center; a point at radius r and angle theta goes to the
    image center plus (r r_img / r_src) e^{i theta_img(theta)}.
    """

    source: Disc
    image: Disc
    theta_src: np.ndarray
    theta_img: np.ndarray

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        w = z - self.source.center
        r = np.abs(w)
        theta = np.mod(np.angle(w), 2.0 * math.pi)
        ti = np.interp(theta, self.theta_src, self.theta_img)
        out = self.image.center + (r * self.image.radius / self.source.radius) * np.exp(1j * ti)
        return out if out.shape else complex(out)


def radial_extension(src_points: np.ndarray, img_points: np.ndarray,
                     source: Disc, image: Disc) -> RadialExtension:
    """Build the radial extension from sampled boundary correspondence.

    The correspondence must be a cyclically monotone homeomorphism of the two
    circles (sample pairs in matching order).
    """
    ts = np.mod(np.angle(np.asarray(src_points, dtype=complex) - source.center), 2 * math.pi)
    ti = np.mod(np.angle(np.asarray(img_points, dtype=complex) - image.center), 2 * math.pi)
    order = np.argsort(ts)
    ts, ti = ts[order], ti[order]
    ti_un = np.unwrap(ti)
    if np.any(np.diff(ti_un) <= 0.0):
        raise UniformizeError("boundary correspondence is not cyclically monotone")
    ts_ext = np.concatenate([ts, [ts[0] + 2 * math.pi]])
    ti_ext = np.concatenate([ti_un, [ti_un[0] + 2 * math.pi]])
    # extend periodically so np.interp covers [0, 2pi)
    ts_full = np.concatenate([ts_ext - 2 * math.pi, ts_ext])
    ti_full = np.concatenate([ti_ext - 2 * math.pi, ti_ext])
    return RadialExtension(source, image, ts_full, ti_full)


# ---------------------------------------------------------------------------
# limit pipeline and derivative estimation


@dataclass
class SequenceRecord:
    n: int
    map: DiscreteConformalMap
    target: RelativeSchottkySet
    report: UniformizeReport
    hausdorff_delta: float | None = None
    sup_map_delta: float | None = None


def uniformize_sequence(scene: RelativeSchottkySet, n_list: list[int],
                        tol: float = 1e-6, max_sweeps: int = 500,
                        probe_margin: float = 0.15, **kw) -> list[SequenceRecord]:
    """Uniformize the prefix scenes A_n for each n and track convergence.

    Records the configuration Hausdorff distance between successive image
    scenes and the sup difference of successive maps on a probe compactum
    (points of S with clearance ``probe_margin`` from every boundary piece).
    """
    from .schottky import config_hausdorff
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise UniformizeError("n_list must be strictly increasing")
    if n_list and n_list[-1] > len(scene.discs):
        raise UniformizeError("n_list exceeds the number of discs in the scene")
    probes = interior_probe_points(scene, margin=probe_margin, count=80)
    out: list[SequenceRecord] = []
    for n in n_list:
        sub = scene.with_discs(n)
        try:
            dmap, target, report = koebe_uniformize(sub, tol=tol,
                                                    max_sweeps=max_sweeps, **kw)
        except NotConverged as exc:
            dmap, target, report = exc.partial
            out.append(SequenceRecord(n, dmap, target, report))
            break
        rec = SequenceRecord(n, dmap, target, report)
        if out:
            prev = out[-1]
            rec.hausdorff_delta = config_hausdorff(prev.target, target)
            if probes.size:
                rec.sup_map_delta = float(np.max(np.abs(dmap(probes) - prev.map(probes))))
        out.append(rec)
    return out


def interior_probe_points(scene: RelativeSchottkySet, margin: float,
                          count: int = 100) -> np.ndarray:
    """Deterministic grid points of S with the given clearance from boundaries."""
    x0, y0, x1, y1 = scene.outer.bounding_box()
    n = max(8, int(math.ceil(math.sqrt(count * 4))))
    xs = np.linspace(x0, x1, n + 2)[1:-1]
    ys = np.linspace(y0, y1, n + 2)[1:-1]
    X, Y = np.meshgrid(xs, ys)
    pts = (X + 1j * Y).ravel()
    keep = np.atleast_1d(scene.outer.contains(pts, margin=margin))
    pts = pts[keep]
    if pts.size:
        clr = np.atleast_1d(scene.disc_clearance(pts))
        pts = pts[clr >= margin]
    return pts[:count]


def estimate_derivative(evaluator, scene: RelativeSchottkySet, p: complex,
                        h_list=None, directions: int = 8,
                        agree_tol: float = 1e-3):
    """Difference-quotient limit of a map along S, with Richardson extrapolation.

    Quotients are taken only at points q in S; per scale the valid directions
    are averaged, then successive scales are extrapolated assuming first-order
    error.  Returns (derivative, converged flag).  Directions blocked by discs
    are skipped; a scale with no valid direction is dropped.
    """
    clearance = float(scene.outer.distance_to(p))
    if not scene.in_set(p):
        raise UniformizeError("base point must lie in S")
    if h_list is None:
        h_list = np.array([0.1, 0.03, 0.01, 0.003]) * clearance
    h_list = sorted((float(h) for h in h_list), reverse=True)
    if h_list[0] > clearance:
        raise UniformizeError("largest scale exceeds the clearance of p")
    fp = evaluator(p)
    angles = np.exp(2j * math.pi * np.arange(directions) / directions)
    scales, values = [], []
    for h in h_list:
        q = p + h * angles
        valid = np.atleast_1d(scene.in_set(q))
        if not valid.any():
            continue
        quot = (evaluator(q[valid]) - fp) / (q[valid] - p)
        scales.append(h)
        values.append(complex(np.mean(quot)))
    if len(values) < 2:
        raise UniformizeError("no usable difference-quotient scales")
    # Richardson step eliminating the O(h) term between successive scales
    extr = [
        (scales[k] * values[k + 1] - scales[k + 1] * values[k]) / (scales[k] - scales[k + 1])
        for k in range(len(values) - 1)
    ]
    best = extr[-1]
    converged = len(extr) >= 2 and abs(extr[-1] - extr[-2]) < agree_tol * max(1.0, abs(best))
    return best, converged
