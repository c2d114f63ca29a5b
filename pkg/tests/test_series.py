"""Formal-calculus unit tests: iota expansions, deltas, residues.

Derived expectations are frozen from their stated oracles: geometric
series for the first-order pole, its term-by-term derivative for the
second-order pole, and formal differentiation of the delta line.
"""

import random
from fractions import Fraction as F

import pytest

from qva.series import (CalcError, DeltaTerm, DenominatorError, DirectedRational,
                        Distribution, WindowSeries, binomial, delta_series,
                        iota_expand, mul, residue, substitute_sum)

X12 = ("x1", "x2")
X21 = ("x2", "x1")
W55 = [(-5, 5), (-5, 5)]


def geom_oracle(kmax):
    """Independent oracle: coefficients of 1/(x1-x2) = sum x1^{-1-k} x2^k."""
    return {(-1 - k, k): F(1) for k in range(kmax + 1)}


def geom_derivative_oracle(kmax):
    """d/dx1 applied to the reversed geometric expansion of (x1-x2)^{-1}:
    (x1-x2)^{-2} with order x2 < x1 has coefficient (k+1) at x2^{-2-k} x1^k."""
    return {(-2 - k, k): F(k + 1) for k in range(kmax + 1)}


def test_positive_power_is_direction_free():
    f12 = DirectedRational(X12, {(0, 0): 1}, {(0, 1): 1})
    f21 = DirectedRational(X21, {(0, 0): 1}, {(1, 0): 1})
    s12 = iota_expand(f12, W55)
    s21 = iota_expand(f21, W55).reorder(X12)
    assert s12.data == {(1, 0): F(1), (0, 1): F(-1)}
    assert s12.data == s21.data


def test_geometric_expansion():
    f = DirectedRational(X12, {(0, 0): 1}, {(0, 1): -1})
    s = iota_expand(f, W55)
    assert s.data == geom_oracle(4)


def test_inverse_square_reversed_order():
    # oracle: differentiate the geometric expansion of (x2-x1)^{-1} in x2
    f = DirectedRational(X21, {(0, 0): 1}, {(1, 0): -2})
    s = iota_expand(f, [(-6, 6), (-6, 6)])
    want = geom_derivative_oracle(4)
    for e, c in want.items():
        assert s.coeff(e) == c


def brute_cone_product(sa, sb, box):
    """Independent convolution oracle for products of iota images.

    Sound on the box: both factors are cone-supported with nonnegative x2
    part, so every output coefficient there is a finite sum once the
    factor windows dominate the pulled indices.
    """
    out = {}
    for ea, ca in sa.data.items():
        for eb, cb in sb.data.items():
            key = (ea[0] + eb[0], ea[1] + eb[1])
            if box[0][0] <= key[0] <= box[0][1] and box[1][0] <= key[1] <= box[1][1]:
                out[key] = out.get(key, F(0)) + ca * cb
    return {k: v for k, v in out.items() if v}


def test_iota_multiplicativity():
    rng = random.Random(11)
    box = [(-6, 6), (0, 3)]
    for _ in range(12):
        na = {(rng.randint(-2, 2), rng.randint(0, 2)): F(rng.randint(-3, 3))
              for _ in range(3)}
        nb = {(rng.randint(-2, 2), rng.randint(0, 2)): F(rng.randint(-3, 3))
              for _ in range(3)}
        fa = DirectedRational(X12, na, {(0, 1): rng.randint(-2, 0)})
        fb = DirectedRational(X12, nb, {(0, 1): rng.randint(-2, 1)})
        if fa.is_zero() or fb.is_zero():
            continue
        prod = iota_expand(fa.mul(fb), [(-20, 20), (-20, 20)])
        sa = iota_expand(fa, [(-20, 20), (-20, 20)])
        sb = iota_expand(fb, [(-20, 20), (-20, 20)])
        got = brute_cone_product(sa, sb, box)
        want = {e: c for e, c in prod.data.items()
                if box[0][0] <= e[0] <= box[0][1] and box[1][0] <= e[1] <= box[1][1]}
        assert got == want


def test_delta_series_values():
    d0 = delta_series(0, (0, 1), X12, W55)
    for m in range(-4, 5):
        if -5 <= -m - 1 <= 5:
            assert d0.coeff((m, -m - 1)) == 1
    d1 = delta_series(1, (0, 1), X12, W55)
    for m in range(-4, 4):
        if -5 <= -m - 2 <= 5:
            assert d1.coeff((m, -m - 2)) == -m - 1


def test_delta_is_expansion_difference():
    # iota_{x1,x2}(x1-x2)^{-j-1} - iota_{x2,x1}(x1-x2)^{-j-1} = delta_series(j)
    for j in range(0, 3):
        a = iota_expand(DirectedRational(X12, {(0, 0): 1}, {(0, 1): -j - 1}), W55)
        b = iota_expand(DirectedRational(X21, {(0, 0): 1}, {(1, 0): -j - 1}),
                        W55).reorder(X12)
        d = delta_series(j, (0, 1), X12, [(-4, 4), (-4, 4)])
        for e1 in range(-4, 5):
            for e2 in range(-4, 5):
                lhs = a.data.get((e1, e2), F(0)) - b.data.get((e1, e2), F(0))
                assert lhs == d.data.get((e1, e2), F(0)), (j, e1, e2)


def test_mul_with_one_and_delta_substitution():
    f = Distribution.from_series(WindowSeries.from_terms(X12, {(2, -1): F(3), (0, 0): F(1)}))
    one = Distribution.from_series(WindowSeries.from_terms(X12, {(0, 0): F(1)}))
    prod = mul(f, one, W55)
    assert prod.expand(W55).data == f.expand(W55).data

    # x2^{-1} delta(x1/x2) * g(x1) = x2^{-1} delta(x1/x2) * g(x2), g = x1^2
    d = Distribution.from_delta(X12, DeltaTerm(0, (0, 1), F(1)))
    g = Distribution.from_series(WindowSeries.from_terms(X12, {(2, 0): F(1)}))
    prod = mul(d, g, [(-4, 4), (-4, 4)])
    want = {}
    for m in range(-4, 5):
        # coefficient of x1^m x2^{-m-1} shifted by x2^2 lives at (m, -m+1)
        if -4 <= -m + 1 <= 4:
            want[(m, -m + 1)] = F(1)
    assert prod.expand([(-4, 4), (-4, 4)]).data == want


def test_mul_inverse_pair_gives_one():
    # iota_{x2,x1}(x1-x2)^{-1} * iota(x1-x2) = 1 on the window
    inv = iota_expand(DirectedRational(X21, {(0, 0): 1}, {(1, 0): -1}),
                      [(-9, 9), (-9, 9)])
    lin = iota_expand(DirectedRational(X21, {(0, 0): 1}, {(1, 0): 1}),
                      [(-9, 9), (-9, 9)])
    prod = inv.mul(lin)
    win = [(max(-3, prod.window[0][0]), min(3, prod.window[0][1])),
           (max(-3, prod.window[1][0]), min(3, prod.window[1][1]))]
    got = prod.clip(win)
    assert got.data == {(0, 0): F(1)}


def test_two_delta_product_rejected():
    a = Distribution.from_delta(X12, DeltaTerm(0, (0, 1), F(1)))
    b = Distribution.from_delta(X12, DeltaTerm(1, (0, 1), F(2)))
    with pytest.raises(CalcError):
        mul(a, b, W55)


def test_residue_basics():
    x = ("x",)
    rm1 = Distribution.from_series(WindowSeries.from_terms(x, {(-1,): F(7)}))
    out = residue(rm1, "x", [(-3, 3)])
    assert out.expand([]).data == {(): F(7)}
    rn = Distribution.from_series(WindowSeries.from_terms(x, {(3,): F(2)}))
    assert residue(rn, "x", [(-3, 3)]).expand([]).data == {}


def test_residue_of_delta_and_linearity():
    d = Distribution.from_delta(X12, DeltaTerm(0, (0, 1), F(1)))
    g = Distribution.from_series(WindowSeries.from_terms(X12, {(3, 0): F(1)}))
    prod = mul(d, g, [(-5, 5), (-5, 5)])
    out = residue(prod, "x1", [(-5, 5), (-5, 5)])
    # Res_{x1} x2^{-1} delta(x1/x2) x1^3 = x2^3
    assert out.expand([(-5, 5)]).data == {(3,): F(1)}
    d1 = Distribution.from_delta(X12, DeltaTerm(1, (0, 1), F(5)))
    assert residue(d1, "x1", W55).expand([(-5, 5)]).data == {}


def test_residue_kills_derivatives():
    # Res_x d/dx s = 0 for a window series
    rng = random.Random(3)
    data = {(rng.randint(-4, 4),): F(rng.randint(-5, 5)) for _ in range(6)}
    s = WindowSeries.from_terms(("x",), data)
    ds = WindowSeries.from_terms(("x",), {(e - 1,): c * e for (e,), c in s.data.items()
                                          for e in [e]})
    out = residue(Distribution.from_series(ds), "x", [(-6, 6)])
    assert out.expand([]).data == {}


def test_substitute_sum():
    xz = ("x0", "x2")
    f = DirectedRational(("x",), {(1,): F(1)})
    s = substitute_sum(f, xz, (0, 1), [(-3, 3), (-3, 3)])
    assert s.data == {(1, 0): F(1), (0, 1): F(1)}
    # f = x^{-1}: sum (-1)^k x0^{-1-k} x2^k
    f = DirectedRational(("x",), {(-1,): F(1)})
    s = substitute_sum(f, xz, (0, 1), [(-3, 3), (-3, 3)])
    for k in range(0, 4):
        assert s.coeff((-1 - k, k)) == F((-1) ** k)
    # derived: f = x^{-2} by differentiating: (-1)^k (k+1) x0^{-2-k} x2^k
    f = DirectedRational(("x",), {(-2,): F(1)})
    s = substitute_sum(f, xz, (0, 1), [(-3, 3), (-3, 3)])
    for k in range(0, 4):
        assert s.coeff((-2 - k, k)) == F((-1) ** k * (k + 1))
    with pytest.raises(DenominatorError):
        substitute_sum(DirectedRational(("x", "y"), {(0, 0): 1}, {(0, 1): -1}),
                       xz, (0, 1), [(-3, 3), (-3, 3)])


def test_delta_merging_normal_form():
    d = Distribution(X12, [], [DeltaTerm(0, (0, 1), F(2)),
                               DeltaTerm(0, (0, 1), F(-2)),
                               DeltaTerm(1, (0, 1), F(3))])
    assert len(d.deltas) == 1 and d.deltas[0].j == 1
    assert d.is_zero(W55) is False
    z = Distribution(X12, [], [DeltaTerm(1, (0, 1), F(3)),
                               DeltaTerm(1, (0, 1), F(-3))])
    assert z.is_zero(W55)


def test_binomial_negative():
    assert binomial(-1, 3) == F(-1)
    assert binomial(-2, 2) == F(3)
    assert binomial(3, 5) == 0
