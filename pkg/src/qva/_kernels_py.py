"""Pure-Python reference implementations of the hot kernels.

The compiled twin lives in ``qva._speedups`` (Cython).  Both expose the
same three functions; ``qva._kernels`` picks one at import time.  Keep the
semantics here authoritative: the Cython file is a line-for-line port.
"""

from fractions import Fraction

_ZERO = Fraction(0)


def conv_window(items_a, items_b, lo, hi):
    """Convolve two sparse exponent->coeff maps inside a box window.

    items_a, items_b: iterables of (exponent tuple, coefficient).
    lo, hi: per-variable inclusive bounds for the result.
    Returns a dict exponent->coefficient with zeros dropped.
    """
    out = {}
    nvars = len(lo)
    items_b = list(items_b)
    for ea, ca in items_a:
        for eb, cb in items_b:
            key = tuple(ea[i] + eb[i] for i in range(nvars))
            ok = True
            for i in range(nvars):
                k = key[i]
                if k < lo[i] or k > hi[i]:
                    ok = False
                    break
            if not ok:
                continue
            if key in out:
                out[key] += ca * cb
            else:
                out[key] = ca * cb
    return {k: v for k, v in out.items() if v}


def axpy_int(dst, src, num_dst, num_src):
    """dst := num_dst*dst + num_src*src, sparse int vectors as dicts."""
    if num_dst != 1:
        for k in dst:
            dst[k] *= num_dst
    for k, v in src.items():
        w = dst.get(k)
        if w is None:
            dst[k] = num_src * v
        else:
            w += num_src * v
            if w:
                dst[k] = w
            else:
                del dst[k]
    return dst


def scale_into(acc, items, coeff, shift):
    """acc[e + shift] += coeff * c for (e, c) in items; zeros kept for later sweep."""
    n = len(shift)
    for e, c in items:
        key = tuple(e[i] + shift[i] for i in range(n))
        if key in acc:
            acc[key] += coeff * c
        else:
            acc[key] = coeff * c
    return acc
