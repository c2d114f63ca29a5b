"""Exact calculus of iterated Laurent expansions, formal deltas and residues.

Everything here is a finite, exact view of an infinite formal object:

* ``DirectedRational`` is a rational expression (Laurent-polynomial
  numerator times a product of variable-difference powers) together with a
  variable order fixing how each negative difference power embeds into the
  iterated Laurent ring.
* ``WindowSeries`` is the finite view: exact coefficients inside a box
  window.  Two kinds of certificates separate complete coefficients from
  truncation artifacts: ``certified[i]`` says the underlying object has no
  support below the window floor in variable i (a global fact), and
  ``exact`` says the window contains the entire support, i.e. the object
  is the Laurent polynomial spelled out by ``data``.
* ``DeltaTerm`` keeps formal-delta summands symbolic; ``Distribution``
  bundles series parts and delta parts and expands deltas only when a
  check demands raw coefficients.

Coefficients are ``fractions.Fraction`` throughout; nothing rounds, and
every operation either returns coefficients it can prove complete or
raises ``WindowError``.
"""

from fractions import Fraction
from math import factorial

from qva._kernels import conv_window, scale_into

QQ = Fraction
ZERO = Fraction(0)
ONE = Fraction(1)


def binomial(n, k):
    """binom(n, k) for integer n of any sign, integer k >= 0."""
    if k < 0:
        return ZERO
    num = 1
    for i in range(k):
        num *= n - i
    return QQ(num, factorial(k))


class CalcError(ValueError):
    pass


class WindowError(CalcError):
    """A coefficient outside the certified-complete region was requested."""


class DenominatorError(CalcError):
    """Denominator not a product of monomials and variable differences."""


class WindowSeries:
    """Sparse exact coefficients of a formal series inside a box window.

    order     -- tuple of variable names
    window    -- (lo, hi) per variable; coefficients are complete on the box
    data      -- dict exponent-tuple -> Fraction, zeros dropped
    certified -- per-variable: True when the object has no support below
                 window lo there, so completeness extends to -inf
    exact     -- True when the window contains the entire support
    """

    __slots__ = ("order", "window", "data", "certified", "exact")

    def __init__(self, order, window, data, certified, exact=False):
        self.order = tuple(order)
        self.window = tuple((int(a), int(b)) for a, b in window)
        self.data = {k: v for k, v in data.items() if v}
        self.exact = bool(exact)
        if self.exact:
            certified = (True,) * len(self.order)
        self.certified = tuple(bool(c) for c in certified)

    @classmethod
    def zero(cls, order):
        order = tuple(order)
        return cls(order, [(0, 0)] * len(order), {}, (), exact=True)

    @classmethod
    def from_terms(cls, order, terms):
        """Exact finite object (Laurent polynomial)."""
        order = tuple(order)
        data = {tuple(e): QQ(c) for e, c in terms.items() if c}
        if not data:
            return cls.zero(order)
        lo = [min(e[i] for e in data) for i in range(len(order))]
        hi = [max(e[i] for e in data) for i in range(len(order))]
        return cls(order, zip(lo, hi), data, (), exact=True)

    def nvars(self):
        return len(self.order)

    def is_zero(self):
        return not self.data

    def known(self, exps):
        """Is the coefficient at exps provably complete?"""
        for i, e in enumerate(exps):
            lo, hi = self.window[i]
            if e > hi and not self.exact:
                return False
            if e < lo and not self.certified[i]:
                return False
        return True

    def coeff(self, exps):
        exps = tuple(exps)
        if not self.known(exps):
            raise WindowError(f"coefficient at {exps} not certified (window {self.window})")
        return self.data.get(exps, ZERO)

    def __add__(self, other):
        assert self.order == other.order
        n = self.nvars()
        window = []
        cert = []
        for i in range(n):
            (la, ha), (lb, hb) = self.window[i], other.window[i]
            ca = self.certified[i] or self.exact
            cb = other.certified[i] or other.exact
            # knowledge regions intersect: a certificate extends one side's
            # region to -inf, exactness extends it everywhere
            if ca and cb:
                lo = min(la, lb)
            elif ca:
                lo = lb
            elif cb:
                lo = la
            else:
                lo = max(la, lb)
            if self.exact and other.exact:
                hi = max(ha, hb)
            elif self.exact:
                hi = hb
            elif other.exact:
                hi = ha
            else:
                hi = min(ha, hb)
            window.append((lo, hi))
            cert.append(ca and cb)
        data = {}
        for src in (self, other):
            for k, v in src.data.items():
                if all(window[i][0] <= k[i] <= window[i][1] for i in range(len(k))):
                    data[k] = data.get(k, ZERO) + v
        return WindowSeries(self.order, window, data, cert, exact=self.exact and other.exact)

    def __neg__(self):
        return WindowSeries(self.order, self.window,
                            {k: -v for k, v in self.data.items()}, self.certified, self.exact)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = QQ(c)
        data = {k: c * v for k, v in self.data.items()} if c else {}
        return WindowSeries(self.order, self.window, data, self.certified, self.exact)

    def shift(self, exps):
        exps = tuple(exps)
        window = [(lo + e, hi + e) for (lo, hi), e in zip(self.window, exps)]
        data = {tuple(k[i] + exps[i] for i in range(len(exps))): v for k, v in self.data.items()}
        return WindowSeries(self.order, window, data, self.certified, self.exact)

    def reorder(self, new_order):
        """Permute variables; the underlying object is unchanged."""
        perm = [self.order.index(v) for v in new_order]
        window = [self.window[p] for p in perm]
        cert = [self.certified[p] for p in perm]
        data = {tuple(k[p] for p in perm): v for k, v in self.data.items()}
        return WindowSeries(new_order, window, data, cert, self.exact)

    def restrict(self, window):
        window = tuple((int(a), int(b)) for a, b in window)
        for i in range(self.nvars()):
            if window[i][0] < self.window[i][0] and not self.certified[i]:
                raise WindowError("cannot grow an uncertified window downward")
            if window[i][1] > self.window[i][1] and not self.exact:
                raise WindowError("cannot grow a non-exact window upward")
        data = {k: v for k, v in self.data.items()
                if all(window[i][0] <= k[i] <= window[i][1] for i in range(len(k)))}
        return WindowSeries(self.order, window, data, self.certified, self.exact)

    def clip(self, window):
        """Restrict to the largest certified sub-window of ``window``."""
        eff = []
        for i in range(self.nvars()):
            lo = window[i][0] if self.certified[i] else max(window[i][0], self.window[i][0])
            hi = window[i][1] if self.exact else min(window[i][1], self.window[i][1])
            eff.append((lo, hi))
        return self.restrict(eff)

    def mul(self, other):
        """Exact product.

        If either factor is exact the result is complete wherever every
        shifted copy of the other is; otherwise both factors must carry
        global lower bounds and the result window tops out where some
        split would need an unknown coefficient.
        """
        assert self.order == other.order
        if other.exact:
            return self.mul_exact(other.data)
        if self.exact:
            return other.mul_exact(self.data)
        n = self.nvars()
        if not (all(self.certified) and all(other.certified)):
            raise WindowError("mul requires certified lower bounds on both factors")
        lo = []
        hi = []
        for i in range(n):
            (la, ha), (lb, hb) = self.window[i], other.window[i]
            lo.append(la + lb)
            hi.append(min(ha + lb, hb + la))
        data = conv_window(list(self.data.items()), list(other.data.items()), lo, hi)
        return WindowSeries(self.order, zip(lo, hi), data, (True,) * n)

    def mul_exact(self, terms):
        """Multiply by an exact Laurent polynomial given as exp -> coeff."""
        terms = {tuple(e): QQ(c) for e, c in terms.items() if c}
        n = self.nvars()
        if not terms:
            return WindowSeries.zero(self.order)
        lo = []
        hi = []
        for i in range(n):
            shifts = [e[i] for e in terms]
            lo.append(min(self.window[i][0] + s for s in shifts) if self.certified[i]
                      else max(self.window[i][0] + s for s in shifts))
            hi.append(max(self.window[i][1] + s for s in shifts) if self.exact
                      else min(self.window[i][1] + s for s in shifts))
        acc = {}
        for e, c in terms.items():
            scale_into(acc, self.data.items(), c, e)
        data = {k: v for k, v in acc.items()
                if v and all(lo[i] <= k[i] <= hi[i] for i in range(n))}
        return WindowSeries(self.order, zip(lo, hi), data, self.certified, self.exact)

    def common_window(self, other):
        out = []
        for i, (a, b) in enumerate(zip(self.window, other.window)):
            ca = self.certified[i] or self.exact
            cb = other.certified[i] or other.exact
            if ca and cb:
                lo = min(a[0], b[0])
            elif ca:
                lo = b[0]
            elif cb:
                lo = a[0]
            else:
                lo = max(a[0], b[0])
            if self.exact and other.exact:
                hi = max(a[1], b[1])
            elif self.exact:
                hi = b[1]
            elif other.exact:
                hi = a[1]
            else:
                hi = min(a[1], b[1])
            out.append((lo, hi))
        return tuple(out)

    def eq_on(self, other, window=None):
        assert self.order == other.order
        if window is None:
            window = self.common_window(other)
        return (self.clip(window) - other.clip(window)).is_zero()

    def __repr__(self):
        terms = []
        for k in sorted(self.data)[:8]:
            mono = "*".join(f"{v}^{e}" for v, e in zip(self.order, k) if e)
            terms.append(f"{self.data[k]}{'*' + mono if mono else ''}")
        body = " + ".join(terms) if terms else "0"
        if len(self.data) > 8:
            body += " + ..."
        return f"<series {body} on {self.window}>"


class DirectedRational:
    """Rational expression with a declared iterated-Laurent direction.

    numer -- dict exponent-tuple -> Fraction (Laurent polynomial; monomial
             denominators fold in as negative exponents)
    diffs -- dict (i, j) -> integer power of (x_i - x_j), i < j positional;
             negative powers are denominator factors
    order -- expansion order: in a negative difference power the variable
             occurring later in ``order`` carries the nonnegative exponents
    """

    __slots__ = ("order", "numer", "diffs")

    def __init__(self, order, numer, diffs=None):
        self.order = tuple(order)
        self.numer = {tuple(e): QQ(c) for e, c in numer.items() if c}
        self.diffs = {}
        for (i, j), k in (diffs or {}).items():
            if k == 0:
                continue
            n = len(self.order)
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise DenominatorError(f"bad difference pair {(i, j)}")
            if i > j:
                if k % 2:
                    self.numer = {e: -c for e, c in self.numer.items()}
                i, j = j, i
            self.diffs[(i, j)] = self.diffs.get((i, j), 0) + k
        self.diffs = {p: k for p, k in self.diffs.items() if k}
        if not self.numer:
            self.diffs = {}

    @classmethod
    def monomial(cls, order, exps, coeff=ONE):
        return cls(order, {tuple(exps): coeff})

    @classmethod
    def constant(cls, order, c=ONE):
        return cls(order, {(0,) * len(tuple(order)): c})

    def is_zero(self):
        return not self.numer

    def mul(self, other):
        assert self.order == other.order
        numer = {}
        for ea, ca in self.numer.items():
            for eb, cb in other.numer.items():
                k = tuple(x + y for x, y in zip(ea, eb))
                numer[k] = numer.get(k, ZERO) + ca * cb
        diffs = dict(self.diffs)
        for p, k in other.diffs.items():
            diffs[p] = diffs.get(p, 0) + k
        return DirectedRational(self.order, numer, diffs)

    def scale(self, c):
        return DirectedRational(self.order, {e: QQ(c) * v for e, v in self.numer.items()}, self.diffs)

    def add(self, other):
        """Exact sum over the common denominator."""
        assert self.order == other.order
        common = {}
        for p in set(self.diffs) | set(other.diffs):
            common[p] = min(self.diffs.get(p, 0), other.diffs.get(p, 0))

        def lift(dr):
            out = dict(dr.numer)
            for p, k in common.items():
                for _ in range(dr.diffs.get(p, 0) - k):
                    i, j = p
                    nxt = {}
                    for e, c in out.items():
                        e1 = list(e)
                        e1[i] += 1
                        nxt[tuple(e1)] = nxt.get(tuple(e1), ZERO) + c
                        e2 = list(e)
                        e2[j] += 1
                        nxt[tuple(e2)] = nxt.get(tuple(e2), ZERO) - c
                    out = {e: c for e, c in nxt.items() if c}
            return out

        numer = lift(self)
        for e, c in lift(other).items():
            numer[e] = numer.get(e, ZERO) + c
        return DirectedRational(self.order, numer, common)

    def __repr__(self):
        return f"<rational {len(self.numer)} terms, diffs={self.diffs}, order={self.order}>"


def iota_expand(expr, window):
    """Exact coefficients of the iota-image of ``expr`` within ``window``.

    Complete on the whole requested box: the later-variable exponent of
    each negative difference factor is bounded through the box tops,
    walking the variable order backwards, so every contributing term is
    enumerated.  The result is lower-bound certified in the variables that
    are never the earlier member of a negative difference power, and exact
    when there is no negative power at all.
    """
    order = expr.order
    n = len(order)
    window = tuple((int(a), int(b)) for a, b in window)
    if expr.is_zero():
        return WindowSeries.zero(order)

    numer_min = [min(e[i] for e in expr.numer) for i in range(n)]
    factors = sorted(expr.diffs.items())
    # truncation budget for each negative factor's inner (later) variable:
    # walk variables last-to-first so the downward pushes on an inner
    # variable are already bounded when its budget is fixed
    budgets = {}
    push_down = [0] * n
    for p, k in factors:
        if k > 0:
            push_down[p[0]] += 0  # positive factors never push below 0
    for v in range(n - 1, -1, -1):
        inner_here = [(p, k) for p, k in factors if k < 0 and p[1] == v]
        if not inner_here:
            continue
        budget = max(window[v][1] - numer_min[v] + push_down[v], 0)
        for p, k in inner_here:
            budgets[p] = budget
            push_down[p[0]] += (-k) + budget

    out = dict(expr.numer)
    for (i, j), k in factors:
        terms = {}
        if k >= 0:
            for t in range(k + 1):
                e = [0] * n
                e[i] = k - t
                e[j] = t
                terms[tuple(e)] = binomial(k, t) * ((-1) ** t)
        else:
            d = -k
            for t in range(budgets[(i, j)] + 1):
                e = [0] * n
                e[i] = -d - t
                e[j] = t
                terms[tuple(e)] = binomial(d - 1 + t, t)
        nxt = {}
        scale_terms = list(terms.items())
        for ea, ca in out.items():
            scale_into(nxt, scale_terms, ca, ea)
        out = {e: c for e, c in nxt.items() if c}

    exact = all(k >= 0 for k in expr.diffs.values())
    cert = [all(k >= 0 or p[0] != v for p, k in expr.diffs.items()) for v in range(n)]
    lo = []
    hi = []
    for v in range(n):
        if cert[v]:
            lo.append(min(min((e[v] for e in out), default=0), window[v][0]))
        else:
            lo.append(window[v][0])
        if exact:
            hi.append(max(max((e[v] for e in out), default=0), window[v][1]))
        else:
            hi.append(window[v][1])
    data = {e: c for e, c in out.items()
            if all(lo[v] <= e[v] <= hi[v] for v in range(n))}
    return WindowSeries(order, zip(lo, hi), data, cert, exact=exact)


def delta_series(j, pair, order, window):
    """(1/j!) (d/dx_b)^j x_b^{-1} delta(x_a/x_b) on a window.

    pair = (a, b) are variable positions in ``order``.  Support is the
    bi-infinite line {(m, -m-1-j)}, so neither pair variable is certified.
    """
    if j < 0:
        raise CalcError("derivative order must be >= 0")
    a, b = pair
    n = len(order)
    data = {}
    la, ha = window[a]
    lb, hb = window[b]
    for m in range(la, ha + 1):
        eb = -m - 1 - j
        if eb < lb or eb > hb:
            continue
        e = [0] * n
        e[a] = m
        e[b] = eb
        data[tuple(e)] = binomial(-m - 1, j)
    cert = [True] * n
    cert[a] = cert[b] = False
    return WindowSeries(order, window, data, cert)


class DeltaTerm:
    """coeff * (1/j!) (d/dx_b)^j x_b^{-1} delta(x_a/x_b).

    coeff is a Fraction, or a DirectedRational in the remaining variables.
    """

    __slots__ = ("j", "pair", "coeff")

    def __init__(self, j, pair, coeff):
        if j < 0:
            raise CalcError("derivative order must be >= 0")
        self.j = int(j)
        self.pair = (int(pair[0]), int(pair[1]))
        self.coeff = coeff if isinstance(coeff, DirectedRational) else QQ(coeff)

    def is_zero(self):
        if isinstance(self.coeff, DirectedRational):
            return self.coeff.is_zero()
        return self.coeff == 0

    def expand(self, order, window):
        base = delta_series(self.j, self.pair, order, window)
        if isinstance(self.coeff, DirectedRational):
            for e in self.coeff.numer:
                if e[self.pair[0]] or e[self.pair[1]]:
                    raise CalcError("delta coefficient must not involve the pair variables")
            for (i, jj) in self.coeff.diffs:
                if i in self.pair or jj in self.pair:
                    raise CalcError("delta coefficient must not involve the pair variables")
            cof = iota_expand(self.coeff, window)
            return _line_times_offline(base, cof, self.pair, window)
        return base.scale(self.coeff)

    def __repr__(self):
        return f"<delta j={self.j} pair={self.pair} coeff={self.coeff!r}>"


def _line_times_offline(delta_ws, cof, pair, window):
    """Delta expansion times a series supported off the pair variables."""
    n = len(delta_ws.order)
    a, b = pair
    lo = [w[0] for w in window]
    hi = [w[1] for w in window]
    for i in range(n):
        if i not in pair:
            if not cof.exact:
                hi[i] = min(hi[i], cof.window[i][1])
            if not cof.certified[i]:
                lo[i] = max(lo[i], cof.window[i][0])
    out = {}
    for ed, cd in delta_ws.data.items():
        for eg, cg in cof.data.items():
            key = tuple(ed[i] + eg[i] for i in range(n))
            if any(key[i] < lo[i] or key[i] > hi[i] for i in range(n)):
                continue
            out[key] = out.get(key, ZERO) + cd * cg
    cert = [cof.certified[i] and i not in pair for i in range(n)]
    return WindowSeries(delta_ws.order, zip(lo, hi), out, cert)


class Distribution:
    """Finite sum of window series plus symbolic delta terms.

    Normal form merges delta terms with equal (derivative order, pair);
    ``is_zero`` expands everything on the shared window, so cancellation
    between series and delta parts is decided honestly there.
    """

    __slots__ = ("order", "series", "deltas")

    def __init__(self, order, series=(), deltas=()):
        self.order = tuple(order)
        self.series = [s for s in series if not s.is_zero()]
        self.deltas = self._merge(list(deltas))

    def _merge(self, deltas):
        merged = {}
        for d in deltas:
            key = (d.j, d.pair)
            if key not in merged:
                merged[key] = d
                continue
            a, b = merged[key].coeff, d.coeff
            if isinstance(a, DirectedRational) or isinstance(b, DirectedRational):
                if not isinstance(a, DirectedRational):
                    a = DirectedRational.constant(self.order, a)
                if not isinstance(b, DirectedRational):
                    b = DirectedRational.constant(self.order, b)
                merged[key] = DeltaTerm(d.j, d.pair, a.add(b))
            else:
                merged[key] = DeltaTerm(d.j, d.pair, a + b)
        return [d for d in merged.values() if not d.is_zero()]

    @classmethod
    def from_series(cls, ws):
        return cls(ws.order, [ws])

    @classmethod
    def from_delta(cls, order, term):
        return cls(order, [], [term])

    @classmethod
    def zero(cls, order):
        return cls(order)

    def __add__(self, other):
        assert self.order == other.order
        return Distribution(self.order, self.series + other.series, self.deltas + other.deltas)

    def __neg__(self):
        deltas = []
        for d in self.deltas:
            if isinstance(d.coeff, DirectedRational):
                deltas.append(DeltaTerm(d.j, d.pair, d.coeff.scale(-1)))
            else:
                deltas.append(DeltaTerm(d.j, d.pair, -d.coeff))
        return Distribution(self.order, [-s for s in self.series], deltas)

    def __sub__(self, other):
        return self + (-other)

    def expand(self, window):
        """Raw coefficients on the window, deltas expanded."""
        acc = None
        for part in self.series:
            w = part.clip(window)
            acc = w if acc is None else acc + w
        for d in self.deltas:
            w = d.expand(self.order, window)
            acc = w if acc is None else acc + w
        if acc is None:
            return WindowSeries.zero(self.order).clip(window)
        return acc

    def is_zero(self, window):
        return self.expand(window).is_zero()

    def mul(self, other, window):
        """Exact product; at most one factor may carry delta terms."""
        if self.deltas and other.deltas:
            raise CalcError("product of two delta-bearing distributions is undefined")
        if other.deltas:
            return other.mul(self, window)
        out_series = []
        pad = 0
        for d in self.deltas:
            pad = max(pad, sum(hi for _, hi in window) + d.j + 1)
        g = other.expand([(lo - 1, hi + pad + 1) for lo, hi in window])
        if not all(g.certified):
            raise WindowError("the non-delta factor must be certified lower-bounded")
        for s in self.series:
            out_series.append(s.clip(window).mul(g))
        for d in self.deltas:
            out_series.append(_delta_substitute(d, g, self.order, window))
        return Distribution(self.order, out_series)

    def residue(self, var_index, window):
        """Coefficient of x_var^{-1} as a Distribution in the remaining variables."""
        order = tuple(v for i, v in enumerate(self.order) if i != var_index)

        def drop(e):
            return tuple(x for i, x in enumerate(e) if i != var_index)

        series_out = []
        for part in self.series:
            lo, hi = part.window[var_index]
            visible = (lo <= -1 <= hi) or (part.certified[var_index] and -1 < lo) \
                or (part.exact and -1 > hi)
            if not visible:
                raise WindowError("window excludes exponent -1 of the residue variable")
            data = {}
            for e, c in part.data.items():
                if e[var_index] == -1:
                    k = drop(e)
                    data[k] = data.get(k, ZERO) + c
            win = tuple(w for i, w in enumerate(part.window) if i != var_index)
            crt = tuple(c for i, c in enumerate(part.certified) if i != var_index)
            series_out.append(WindowSeries(order, win, data, crt, part.exact))
        for d in self.deltas:
            a, b = d.pair
            if var_index not in (a, b):
                raise CalcError("residue in a variable not paired by the delta is unsupported")
            if d.j == 0:
                # Res of coeff * x_b^{-1} delta(x_a/x_b) in either pair variable is coeff
                if isinstance(d.coeff, DirectedRational):
                    win = tuple(w for i, w in enumerate(window) if i != var_index)
                    series_out.append(iota_expand(_drop_var(d.coeff, var_index), win))
                else:
                    series_out.append(WindowSeries.from_terms(order, {(0,) * len(order): d.coeff}))
            # j >= 1: the residue of a differentiated delta term vanishes
        return Distribution(order, series_out)

    def __repr__(self):
        return f"<distribution series={len(self.series)} deltas={len(self.deltas)}>"


def _drop_var(dr, var_index):
    order = tuple(v for i, v in enumerate(dr.order) if i != var_index)
    numer = {}
    for e, c in dr.numer.items():
        if e[var_index]:
            raise CalcError("coefficient involves the residue variable")
        numer[tuple(x for i, x in enumerate(e) if i != var_index)] = c
    diffs = {}
    for (i, j), k in dr.diffs.items():
        if var_index in (i, j):
            raise CalcError("coefficient involves the residue variable")
        diffs[(i - (i > var_index), j - (j > var_index))] = k
    return DirectedRational(order, numer, diffs)


def _delta_substitute(d, g, order, window):
    """(scalar delta term) * g via the substitution property.

    For output exponent e, contributions come from g at
    (e_a - m, e_b + m + 1 + j) over all integers m; g's lower-bound
    certificates cut this to a finite range, and completeness holds on the
    diagonal e_a + e_b <= min(hi_b + lb_a, hi_a + lb_b) - 1 - j.  When g is
    exact there is no constraint.
    """
    if isinstance(d.coeff, DirectedRational):
        raise CalcError("rational delta coefficients are not supported in products")
    a, b = d.pair
    n = len(order)
    lb_a, hi_a = g.window[a]
    lb_b, hi_b = g.window[b]
    lo = [w[0] for w in window]
    hi = [w[1] for w in window]
    if not g.exact:
        s_max = min(hi_b + lb_a, hi_a + lb_b) - 1 - d.j
        if hi[a] + hi[b] > s_max:
            raise WindowError(
                f"delta substitution window {window} needs factor complete up to "
                f"diagonal {hi[a] + hi[b] + 1 + d.j}, have {s_max + 1 + d.j}")
    for i in range(n):
        if i in (a, b):
            continue
        if not g.exact:
            hi[i] = min(hi[i], g.window[i][1])
        if not g.certified[i]:
            lo[i] = max(lo[i], g.window[i][0])
    out = {}
    for eg, cg in g.data.items():
        m_lo = max(lo[a] - eg[a], eg[b] - hi[b] - 1 - d.j)
        m_hi = min(hi[a] - eg[a], eg[b] - lo[b] - 1 - d.j)
        for m in range(m_lo, m_hi + 1):
            key = list(eg)
            key[a] = eg[a] + m
            key[b] = eg[b] - m - 1 - d.j
            key = tuple(key)
            if any(key[i] < lo[i] or key[i] > hi[i] for i in range(n)):
                continue
            out[key] = out.get(key, ZERO) + cg * binomial(-m - 1, d.j)
    cert = [g.certified[i] and i not in (a, b) for i in range(n)]
    ws = WindowSeries(order, zip(lo, hi), out, cert)
    return ws.scale(d.coeff)


def mul(a, b, window):
    """Product of two Distributions, exact on the recorded window."""
    return a.mul(b, window)


def residue(d, var, window=None):
    """Res_var of a Distribution: the coefficient of var^{-1}."""
    if isinstance(var, str):
        var = d.order.index(var)
    if window is None:
        window = [(-4, 4)] * len(d.order)
    return d.residue(var, window)


def substitute_sum(f, order, targets, window):
    """Expansion of f(x_a + x_b) in nonnegative powers of x_b.

    f is a single-variable DirectedRational with monomial denominator.
    For an output point (e_a, e_b), e_b >= 0, the coefficient is the single
    term c_{e_a+e_b} * binom(e_a+e_b, e_b): complete on any box with
    e_b >= 0 (the x_b floor is certified at 0).
    """
    if f.diffs:
        raise DenominatorError("substitute_sum supports Laurent polynomials only")
    a, b = targets
    n = len(order)
    hi_b = max(window[b][1], 0)
    data = {}
    for (p,), c in f.numer.items():
        tmax = p if p >= 0 else hi_b
        for t in range(0, tmax + 1):
            e = [0] * n
            e[a] = p - t
            e[b] = t
            key = tuple(e)
            data[key] = data.get(key, ZERO) + c * binomial(p, t)
    min_p = min((e[0] for e in f.numer), default=0)
    max_p = max((e[0] for e in f.numer), default=0)
    lo = [0] * n
    hi = [0] * n
    lo[a] = min(min_p - hi_b, window[a][0])
    hi[a] = max(max_p, window[a][1])
    lo[b] = 0
    hi[b] = hi_b
    cert = [True] * n
    cert[a] = min_p >= 0
    exact = min_p >= 0
    data = {e: c for e, c in data.items()
            if all(lo[i] <= e[i] <= hi[i] for i in range(n))}
    return WindowSeries(order, zip(lo, hi), data, cert, exact=exact)
