"""Composition chains of elementary conformal maps.

Uniformizing maps are stored as chains of closed-form steps (Mobius maps and
the slit primitives of the geodesic zipper), never as dense grids.  Evaluation
at arbitrary points walks the chain; the hot kernel has a compiled
implementation with a pure-numpy fallback selected at import time (override
with SFORGE_BACKEND=python|cython).

Step encoding (kind, params[4]):

    MOBIUS    (a, b, c, d)    w = (a z + b) / (c z + d)
    ZIP_OPEN  (A, B)          w = i sqrt((z - A) / (z - B))
    ZIP       (mu, h)         w = s_h(z / (1 - mu z)),  s_h(m) = sqrt(m^2 + h^2)
    SQUARE    (sigma)         w = sigma z^2
    UNZIP     (mu, h)         inverse of ZIP
    SQRT      (sigma)         inverse of SQUARE
    CONJ      ()              w = conj(z)
    EXPPOLY   (off, cnt)      w = z exp(-P(z)),   P from the coefficient pool
    EXPPOLY_X (off, cnt)      w = z exp(-P(1/z))  (exterior variant, fixes inf)
    *_INV     (off, cnt)      Newton inverses of the two EXPPOLY forms

The ZIP/UNZIP square roots take the branch with Im >= 0 whose real part keeps
the sign of the input's real part; this maps the upper half-plane minus a
vertical slit onto the upper half-plane with the standard boundary convention.
EXPPOLY steps are entire (resp. analytic off the origin) and are used as
spectral rounding corrections on near-circles, where they are injective.
Poles and the point at infinity propagate through every step as an explicit
non-finite sentinel.
"""

from __future__ import annotations

import os

import numpy as np

K_MOBIUS = 0
K_ZIP_OPEN = 1
K_ZIP = 2
K_SQUARE = 3
K_UNZIP = 4
K_SQRT = 5
K_CONJ = 6
K_EXPPOLY = 7
K_EXPPOLY_EXT = 8
K_EXPPOLY_INV = 9
K_EXPPOLY_EXT_INV = 10

from . import _chain_py

_backend = _chain_py
_backend_name = "python"
if os.environ.get("SFORGE_BACKEND", "auto") in ("auto", "cython"):
    try:
        from . import _chain_cy as _cy
        _backend = _cy
        _backend_name = "cython"
    except ImportError:
        if os.environ.get("SFORGE_BACKEND") == "cython":
            raise


def backend_name() -> str:
    return _backend_name


def available_backends() -> dict:
    out = {"python": _chain_py}
    try:
        from . import _chain_cy
        out["cython"] = _chain_cy
    except ImportError:
        pass
    return out


class Chain:
    """A sequence of elementary-map steps applied left to right."""

    __slots__ = ("_kinds", "_params", "_pool", "_frozen")

    def __init__(self):
        self._kinds: list[int] = []
        self._params: list[tuple] = []
        self._pool: list[complex] = []
        self._frozen = None

    def __len__(self) -> int:
        return len(self._kinds)

    def _push(self, kind: int, p0=0.0, p1=0.0, p2=0.0, p3=0.0):
        self._kinds.append(kind)
        self._params.append((complex(p0), complex(p1), complex(p2), complex(p3)))
        self._frozen = None

    def append_mobius(self, m) -> None:
        if getattr(m, "reversing", False):
            self._push(K_CONJ)
        self._push(K_MOBIUS, m.a, m.b, m.c, m.d)

    def append_zip_open(self, a: complex, b: complex) -> None:
        self._push(K_ZIP_OPEN, a, b)

    def append_zip(self, mu: float, h: float) -> None:
        self._push(K_ZIP, mu, h)

    def append_square(self, sigma: float) -> None:
        self._push(K_SQUARE, sigma)

    def append_exppoly(self, coeffs, exterior: bool = False) -> None:
        off = len(self._pool)
        self._pool.extend(complex(c) for c in coeffs)
        kind = K_EXPPOLY_EXT if exterior else K_EXPPOLY
        self._push(kind, float(off), float(len(coeffs)))

    def extend(self, other: "Chain") -> None:
        shift = len(self._pool)
        for kind, (p0, p1, p2, p3) in zip(other._kinds, other._params):
            if kind in (K_EXPPOLY, K_EXPPOLY_EXT, K_EXPPOLY_INV, K_EXPPOLY_EXT_INV):
                p0 = p0 + shift
            self._kinds.append(kind)
            self._params.append((p0, p1, p2, p3))
        self._pool.extend(other._pool)
        self._frozen = None

    def arrays(self):
        if self._frozen is None:
            kinds = np.asarray(self._kinds, dtype=np.int8)
            params = np.asarray(self._params, dtype=complex).reshape(-1, 4)
            pool = np.asarray(self._pool, dtype=complex) if self._pool \
                else np.zeros(1, dtype=complex)
            self._frozen = (kinds, params, pool)
        return self._frozen

    def apply(self, z, start: int = 0):
        """Evaluate the chain (from step ``start``) at scalar or array input."""
        scalar = np.isscalar(z) or isinstance(z, complex)
        arr = np.atleast_1d(np.asarray(z, dtype=complex)).ravel().copy()
        if len(self._kinds) > start:
            kinds, params, pool = self.arrays()
            arr = _backend.chain_apply(kinds[start:], params[start:], pool, arr)
        if scalar:
            return complex(arr[0])
        return arr.reshape(np.shape(z))

    __call__ = apply

    def inverted(self) -> "Chain":
        """The inverse chain (steps reversed, each replaced by its inverse)."""
        inv = Chain()
        inv._pool = list(self._pool)
        for kind, (p0, p1, p2, p3) in zip(reversed(self._kinds), reversed(self._params)):
            if kind == K_MOBIUS:
                inv._push(K_MOBIUS, p3, -p1, -p2, p0)
            elif kind == K_ZIP_OPEN:
                # w = i sqrt((z-A)/(z-B))  =>  t = -w^2,  z = (A - B t)/(1 - t)
                inv._push(K_SQUARE, -1.0)
                inv._push(K_MOBIUS, -p1, p0, -1.0, 1.0)
            elif kind == K_ZIP:
                inv._push(K_UNZIP, p0, p1)
            elif kind == K_SQUARE:
                inv._push(K_SQRT, p0)
            elif kind == K_UNZIP:
                inv._push(K_ZIP, p0, p1)
            elif kind == K_SQRT:
                inv._push(K_SQUARE, p0)
            elif kind == K_CONJ:
                inv._push(K_CONJ)
            elif kind == K_EXPPOLY:
                inv._push(K_EXPPOLY_INV, p0, p1)
            elif kind == K_EXPPOLY_EXT:
                inv._push(K_EXPPOLY_EXT_INV, p0, p1)
            elif kind == K_EXPPOLY_INV:
                inv._push(K_EXPPOLY, p0, p1)
            elif kind == K_EXPPOLY_EXT_INV:
                inv._push(K_EXPPOLY_EXT, p0, p1)
            else:
                raise ValueError(f"unknown chain step kind {kind}")
        return inv

    def copy(self) -> "Chain":
        c = Chain()
        c._kinds = list(self._kinds)
        c._params = list(self._params)
        c._pool = list(self._pool)
        return c
