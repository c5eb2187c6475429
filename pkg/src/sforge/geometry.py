"""Exact-formula layer: discs, Mobius maps, circle inversion, hyperbolic metric.

Points are plain ``complex`` numbers (or numpy complex arrays where noted).
The extended plane is handled with an explicit infinity sentinel rather than
projective pairs; only reflections and Mobius poles ever produce it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

INFINITY = complex(math.inf, math.inf)

#: absolute tolerance at unit scale; callers rescale toward unit diameter
#: before high-precision work
EPS = 1e-12


def is_infinite(z) -> bool:
    return not (math.isfinite(z.real) and math.isfinite(z.imag))


def sqrt_branch(w: complex) -> complex:
    """Square root with non-negative real part, ties toward non-negative imag."""
    s = cmath.sqrt(w)
    if s.real < 0.0 or (s.real == 0.0 and s.imag < 0.0):
        s = -s
    return s


class GeometryError(ValueError):
    """Domain error from one of the exact-formula operations."""


@dataclass(frozen=True)
class Disc:
    """Open geometric disc B(center, radius)."""

    center: complex
    radius: float

    def __post_init__(self):
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise GeometryError(f"disc radius must be positive and finite, got {self.radius}")
        if is_infinite(self.center):
            raise GeometryError("disc center must be finite")

    def contains(self, z, strict: bool = True):
        d = np.abs(np.asarray(z) - self.center)
        return d < self.radius if strict else d <= self.radius

    def boundary_point(self, theta):
        return self.center + self.radius * np.exp(1j * np.asarray(theta))

    def boundary_points(self, n: int) -> np.ndarray:
        return self.boundary_point(np.linspace(0.0, 2.0 * math.pi, n, endpoint=False))

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


def fit_circle(points: np.ndarray) -> tuple[complex, float, float]:
    """Least-squares circle through sample points.

    Returns (center, radius, max_deviation) where the deviation is the largest
    absolute radial misfit of the samples.
    """
    z = np.asarray(points, dtype=complex)
    x, y = z.real, z.imag
    A = np.column_stack([2.0 * x, 2.0 * y, np.ones_like(x)])
    b = x * x + y * y
    (cx, cy, c), *_ = np.linalg.lstsq(A, b, rcond=None)
    r2 = c + cx * cx + cy * cy
    if r2 <= 0.0:
        raise GeometryError("circle fit degenerate (non-positive radius)")
    r = math.sqrt(r2)
    dev = float(np.max(np.abs(np.abs(z - complex(cx, cy)) - r)))
    return complex(cx, cy), r, dev


@dataclass(frozen=True)
class MobiusMap:
    """Fractional-linear map z -> (az+b)/(cz+d), optionally precomposed with conj.

    Coefficients are normalized so ad - bc = 1.  An orientation-reversing map
    acts as z -> m(conj(z)).
    """

    a: complex
    b: complex
    c: complex
    d: complex
    reversing: bool = False

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if det == 0 or is_infinite(det):
            raise GeometryError("mobius coefficients must satisfy ad - bc != 0")
        s = sqrt_branch(det)
        object.__setattr__(self, "a", self.a / s)
        object.__setattr__(self, "b", self.b / s)
        object.__setattr__(self, "c", self.c / s)
        object.__setattr__(self, "d", self.d / s)

    @staticmethod
    def identity() -> "MobiusMap":
        return MobiusMap(1.0, 0.0, 0.0, 1.0)

    @staticmethod
    def from_matrix(m: np.ndarray, reversing: bool = False) -> "MobiusMap":
        return MobiusMap(complex(m[0, 0]), complex(m[0, 1]),
                         complex(m[1, 0]), complex(m[1, 1]), reversing)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def __call__(self, z):
        """Apply with extended-plane semantics (poles map to INFINITY)."""
        if np.isscalar(z) or isinstance(z, complex):
            return self._apply_scalar(complex(z))
        z = np.asarray(z, dtype=complex)
        if self.reversing:
            z = np.conj(z)
        inf_mask = ~np.isfinite(z.real) | ~np.isfinite(z.imag)
        den = self.c * z + self.d
        num = self.a * z + self.b
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / den
        out = np.where(den == 0, INFINITY, out)
        if self.c != 0:
            out = np.where(inf_mask, self.a / self.c, out)
        else:
            out = np.where(inf_mask, INFINITY, out)
        return out

    def _apply_scalar(self, z: complex) -> complex:
        if self.reversing:
            z = z.conjugate() if not is_infinite(z) else z
        if is_infinite(z):
            return self.a / self.c if self.c != 0 else INFINITY
        den = self.c * z + self.d
        if den == 0:
            return INFINITY
        return (self.a * z + self.b) / den

    def pole(self) -> complex:
        return -self.d / self.c if self.c != 0 else INFINITY

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """self after other: (self.compose(other))(z) == self(other(z))."""
        m2 = other.matrix
        if self.reversing:
            m2 = np.conj(m2)
        m = self.matrix @ m2
        return MobiusMap.from_matrix(m, self.reversing != other.reversing)

    def inverse(self) -> "MobiusMap":
        inv = np.array([[self.d, -self.b], [-self.c, self.a]], dtype=complex)
        if self.reversing:
            inv = np.conj(inv)
        return MobiusMap.from_matrix(inv, self.reversing)

    def derivative(self, z: complex) -> complex:
        if self.reversing:
            raise GeometryError("derivative undefined for orientation-reversing maps")
        den = self.c * z + self.d
        return 1.0 / (den * den)


def mobius_apply(m: MobiusMap, z: complex, extended: bool = False) -> complex:
    """Apply m to a point; without extended-plane semantics a pole is an error."""
    if not extended:
        if is_infinite(z):
            raise GeometryError("infinite input without extended-plane semantics")
        if m.c != 0 and abs(m.c * z + m.d) == 0.0:
            raise GeometryError("z is the pole of the map")
    return m(z)


def mobius_to_zero_one_inf(z1: complex, z2: complex, z3: complex) -> MobiusMap:
    """The Mobius map sending (z1, z2, z3) to (0, 1, inf)."""
    if len({z1, z2, z3}) != 3:
        raise GeometryError("points must be pairwise distinct")
    return MobiusMap(z2 - z3, -z1 * (z2 - z3), z2 - z1, -z3 * (z2 - z1))


def mobius_three_points(src: tuple[complex, complex, complex],
                        dst: tuple[complex, complex, complex]) -> MobiusMap:
    """The Mobius map sending the source triple to the destination triple."""
    return mobius_to_zero_one_inf(*dst).inverse().compose(mobius_to_zero_one_inf(*src))


def disc_automorphism(alpha: complex, theta: float = 0.0) -> MobiusMap:
    """Unit-disc automorphism e^{i theta} (z - alpha)/(1 - conj(alpha) z)."""
    if abs(alpha) >= 1.0:
        raise GeometryError("automorphism parameter must lie in the open unit disc")
    rot = cmath.exp(1j * theta)
    return MobiusMap(rot, -rot * alpha, -alpha.conjugate(), 1.0)


def reflect_in_circle(d: Disc, z):
    """Inversion in the boundary circle of d: z -> c + r^2 / conj(z - c).

    Involutive and fixes the circle pointwise; the center maps to INFINITY.
    """
    if np.isscalar(z) or isinstance(z, complex):
        z = complex(z)
        if is_infinite(z):
            return d.center
        w = z - d.center
        if w == 0:
            return INFINITY
        return d.center + d.radius * d.radius / w.conjugate()
    z = np.asarray(z, dtype=complex)
    w = z - d.center
    with np.errstate(divide="ignore", invalid="ignore"):
        out = d.center + d.radius * d.radius / np.conj(w)
    return np.where(w == 0, INFINITY, out)


def reflect_disc(mirror: Disc, d: Disc) -> Disc:
    """Round-disc image of d under inversion in the mirror circle.

    Requires the mirror center to lie outside the closure of d; otherwise the
    image is a half-plane or disc complement and a GeometryError is raised.
    """
    w = d.center - mirror.center
    s = abs(w) ** 2 - d.radius * d.radius
    if s <= 0.0 or abs(w) <= d.radius + EPS * max(1.0, d.radius):
        raise GeometryError("mirror center inside closure of disc: image is not a disc")
    k = mirror.radius * mirror.radius / s
    return Disc(mirror.center + k * w, k * d.radius)


def hyperbolic_distance(p: complex, q: complex) -> float:
    """Hyperbolic distance of the unit disc, 2 artanh |(p-q)/(1-p conj(q))|."""
    if abs(p) >= 1.0 or abs(q) >= 1.0:
        raise GeometryError("hyperbolic distance needs points inside the unit disc")
    t = abs((p - q) / (1.0 - p * q.conjugate()))
    return 2.0 * math.atanh(t)


@dataclass(frozen=True)
class Jet2:
    """Second-order jet of a conformal map at a base point (d1 != 0)."""

    base: complex
    value: complex
    d1: complex
    d2: complex

    def __post_init__(self):
        if self.d1 == 0:
            raise GeometryError("jet violates conformality: first derivative vanishes")


def mobius_from_jet(j: Jet2) -> MobiusMap:
    """The unique Mobius map matching value, first and second derivative at base.

    After translating the base point to the origin the coefficients are

        a = s (1 - v d2 / (2 d1^2)),  b = v / s,  c = -d2 / (2 d1 s),  d = 1 / s

    with s a square root of d1; both roots give the same map, so the branch
    only fixes the coefficient signs deterministically.
    """
    s = sqrt_branch(j.d1)
    a = s * (1.0 - j.value * j.d2 / (2.0 * j.d1 * j.d1))
    b = j.value / s
    c = -j.d2 / (2.0 * j.d1 * s)
    d = 1.0 / s
    at_zero = MobiusMap(a, b, c, d)
    shift = MobiusMap(1.0, -j.base, 0.0, 1.0)
    return at_zero.compose(shift)


def circle_circle_intersections(c1: Disc, c2: Disc) -> tuple[complex, complex]:
    """The two intersection points of the boundary circles (error otherwise)."""
    d = abs(c2.center - c1.center)
    if d == 0.0:
        raise GeometryError("concentric circles do not intersect in two points")
    r1, r2 = c1.radius, c2.radius
    if d >= r1 + r2 or d <= abs(r1 - r2):
        raise GeometryError("circles are disjoint, tangent or nested")
    a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d)
    h2 = r1 * r1 - a * a
    if h2 <= 0.0:
        raise GeometryError("circles are tangent")
    h = math.sqrt(h2)
    u = (c2.center - c1.center) / d
    mid = c1.center + a * u
    n = 1j * u
    return mid + h * n, mid - h * n


def random_disc_automorphism(rng: np.random.Generator) -> MobiusMap:
    """Seeded random unit-disc automorphism (for invariance tests)."""
    r = math.sqrt(rng.uniform(0.0, 0.9))
    phi = rng.uniform(0.0, 2.0 * math.pi)
    theta = rng.uniform(0.0, 2.0 * math.pi)
    return disc_automorphism(r * cmath.exp(1j * phi), theta)
