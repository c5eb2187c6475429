"""Pure-numpy chain evaluation kernel (fallback backend).

Must stay branch-for-branch identical to the compiled kernel in
``_chain_cy.pyx``; the backend equivalence test compares them.
"""

import numpy as np

_INF = complex(np.inf, np.inf)


def _nonfinite(z):
    return ~(np.isfinite(z.real) & np.isfinite(z.imag))


#: Newton iterations for the EXPPOLY inverses (fixed count for determinism)
NEWTON_ITERS = 12


def _poly(coeffs, z):
    """Horner evaluation of sum coeffs[t] z^t (ascending order)."""
    acc = np.zeros_like(z)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def _poly_deriv(coeffs, z):
    acc = np.zeros_like(z)
    n = len(coeffs)
    for t in range(n - 1, 0, -1):
        acc = acc * z + t * coeffs[t]
    return acc


def chain_apply(kinds, params, pool, z):
    """Apply the encoded chain to a 1-d complex array (returns a new array)."""
    z = np.array(z, dtype=complex, copy=True)
    for k in range(len(kinds)):
        kind = int(kinds[k])
        p = params[k]
        bad = _nonfinite(z)
        good = ~bad
        if kind == 0:  # MOBIUS
            a, b, c, d = p[0], p[1], p[2], p[3]
            out = np.empty_like(z)
            den = c * z[good] + d
            num = a * z[good] + b
            with np.errstate(divide="ignore", invalid="ignore"):
                w = num / den
            w[den == 0] = _INF
            out[good] = w
            out[bad] = a / c if c != 0 else _INF
            z = out
        elif kind == 1:  # ZIP_OPEN
            A, B = p[0], p[1]
            out = np.full_like(z, 1j)
            num = z[good] - A
            den = z[good] - B
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = num / den
            w = 1j * np.sqrt(ratio)
            w[den == 0] = _INF
            out[good] = w
            z = out
        elif kind == 2:  # ZIP
            mu = p[0].real
            h = p[1].real
            out = np.full_like(z, _INF)
            zv = z[good]
            den = 1.0 - mu * zv
            with np.errstate(divide="ignore", invalid="ignore"):
                m = zv / den
            pole = den == 0
            big = np.abs(m) > h * 1e8
            w = np.empty_like(m)
            if np.any(big):
                mb = m[big]
                w[big] = mb * np.sqrt(1.0 + (h / mb) ** 2)
            small = ~big & ~pole
            if np.any(small):
                ms = m[small]
                s0 = np.sqrt(ms * ms + h * h)
                flip = (ms.real < 0.0) & (s0.real > 0.0)
                s0[flip] = -s0[flip]
                w[small] = s0
            w[pole] = _INF
            out[good] = w
            if bad.any() and mu != 0.0:
                # infinity passes through m = -1/mu, then the sqrt
                mi = -1.0 / mu
                s0 = complex(np.sqrt(complex(mi * mi + h * h)))
                if mi < 0.0 and s0.real > 0.0:
                    s0 = -s0
                out[bad] = s0
            z = out
        elif kind == 3:  # SQUARE
            sigma = p[0].real
            out = np.full_like(z, _INF)
            out[good] = sigma * z[good] * z[good]
            z = out
        elif kind == 4:  # UNZIP
            mu = p[0].real
            h = p[1].real
            out = np.full_like(z, _INF)
            wv = z[good]
            big = np.abs(wv) > h * 1e8
            u = np.empty_like(wv)
            if np.any(big):
                wb = wv[big]
                u[big] = wb * np.sqrt(1.0 - (h / wb) ** 2)
            small = ~big
            if np.any(small):
                ws = wv[small]
                u0 = np.sqrt(ws * ws - h * h)
                flip = (ws.real < 0.0) & (u0.real > 0.0)
                u0[flip] = -u0[flip]
                u[small] = u0
            den = 1.0 + mu * u
            with np.errstate(divide="ignore", invalid="ignore"):
                res = u / den
            res[den == 0] = _INF
            out[good] = res
            if bad.any():
                out[bad] = (1.0 / mu) if mu != 0.0 else _INF
            z = out
        elif kind == 5:  # SQRT
            sigma = p[0].real
            out = np.full_like(z, _INF)
            u = np.sqrt(z[good] / sigma)
            if sigma < 0.0:
                u = -u
            out[good] = u
            z = out
        elif kind == 6:  # CONJ
            out = np.where(bad, _INF, np.conj(z))
            z = out
        elif kind in (7, 8):  # EXPPOLY / EXPPOLY_EXT
            off, cnt = int(p[0].real), int(p[1].real)
            coeffs = pool[off:off + cnt]
            out = np.full_like(z, _INF)
            zv = z[good]
            if kind == 8:
                with np.errstate(divide="ignore", invalid="ignore"):
                    arg = 1.0 / zv
            else:
                arg = zv
            out[good] = zv * np.exp(-_poly(coeffs, arg))
            z = out
        elif kind in (9, 10):  # Newton inverses of EXPPOLY / EXPPOLY_EXT
            off, cnt = int(p[0].real), int(p[1].real)
            coeffs = pool[off:off + cnt]
            out = np.full_like(z, _INF)
            w = z[good]
            x = w.copy()
            for _ in range(NEWTON_ITERS):
                if kind == 9:
                    e = np.exp(-_poly(coeffs, x))
                    f = x * e - w
                    fp = e * (1.0 - x * _poly_deriv(coeffs, x))
                else:
                    with np.errstate(divide="ignore", invalid="ignore"):
                        u = 1.0 / x
                    e = np.exp(-_poly(coeffs, u))
                    f = x * e - w
                    fp = e * (1.0 + _poly_deriv(coeffs, u) * u)
                step = np.where(fp != 0, f / np.where(fp != 0, fp, 1.0), 0.0)
                x = x - step
            out[good] = x
            z = out
        else:
            raise ValueError(f"unknown chain step kind {kind}")
    return z
