# cython: language_level=3
"""Compiled twins of the kernels in ``qva._kernels_py``.

Coefficients stay arbitrary-precision Python objects (Fraction / int); the
win is taking the tuple packing, window tests and dict traffic out of the
interpreter loop.
"""


def conv_window(items_a, items_b, lo, hi):
    cdef Py_ssize_t i, nvars
    cdef long k
    cdef bint ok
    nvars = len(lo)
    cdef list blist = list(items_b)
    cdef list lov = [int(x) for x in lo]
    cdef list hiv = [int(x) for x in hi]
    out = {}
    for ea, ca in items_a:
        for eb, cb in blist:
            key = tuple([ea[i] + eb[i] for i in range(nvars)])
            ok = True
            for i in range(nvars):
                k = key[i]
                if k < <long> lov[i] or k > <long> hiv[i]:
                    ok = False
                    break
            if not ok:
                continue
            prev = out.get(key)
            if prev is None:
                out[key] = ca * cb
            else:
                out[key] = prev + ca * cb
    return {k2: v for k2, v in out.items() if v}


def axpy_int(dst, src, num_dst, num_src):
    if num_dst != 1:
        for k in dst:
            dst[k] = dst[k] * num_dst
    for k, v in src.items():
        w = dst.get(k)
        if w is None:
            dst[k] = num_src * v
        else:
            w = w + num_src * v
            if w:
                dst[k] = w
            else:
                del dst[k]
    return dst


def scale_into(acc, items, coeff, shift):
    cdef Py_ssize_t i, n
    n = len(shift)
    for e, c in items:
        key = tuple([e[i] + shift[i] for i in range(n)])
        prev = acc.get(key)
        if prev is None:
            acc[key] = coeff * c
        else:
            acc[key] = prev + coeff * c
    return acc
