"""Algebra family declarations: file format, validation, induced exchange data.

The on-disk format is line oriented (UTF-8, ``#`` comments):

    [algebra]
    family = affine | half-current | heisenberg | zf-rmatrix | semidirect | derivation-assoc
    level = <rational>                    # affine / semidirect
    generators = <name> <name> ...
    bracket <a> <b> = <rational> <gen> (+ <rational> <gen>)*
    form <a> <b> = <rational>
    [rmatrix]                             # zf-rmatrix only
    order = <int>
    R<k> = <row>; <row>; ...              # rows comma-separated rationals
    [semidirect]
    ideal = <names>
    subalgebra = <names>
    [derivation]                          # derivation-assoc only
    mult <a> <b> = <combination> | 0 | undef
    d <a> = <combination> | 0

Omitted bracket pairs are zero; a pair given in one order only is completed
by antisymmetry.  Omitted form pairs are zero; one-sided pairs complete by
the family's symmetry (symmetric for affine/semidirect, skew for
heisenberg).  ``undef`` marks a product outside a truncated model; checks
touching it are skipped and operations needing it fail loudly.
"""

from fractions import Fraction

QQ = Fraction
ZERO = Fraction(0)
ONE = Fraction(1)

FAMILIES = ("affine", "half-current", "heisenberg", "zf-rmatrix",
            "semidirect", "derivation-assoc")

VACUUM = "1"


class SpecParseError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        lines = "; ".join(f"line {ln}: {msg}" for ln, msg in self.errors)
        super().__init__(lines or "parse error")


class RMatrix:
    """Polynomial R-matrix data and its derived truncated series.

    coeffs are the given matrices R_0..R_d (exact polynomial data); the
    derived series R^{-1}, R^* = (R^{-1})^T and (R^*)^{-1} = R^T are
    computed on demand up to the declared truncation ``order``, beyond
    which every request fails loudly.
    """

    def __init__(self, dim, order, coeffs):
        self.dim = dim
        self.order = int(order)
        self.coeffs = [[[QQ(x) for x in row] for row in mat] for mat in coeffs]
        self._cache = {}
        self._inv_degree = None  # set when R^{-1} is an exact polynomial
        self._detect_polynomial_inverse()

    def _detect_polynomial_inverse(self):
        """If Q = -R0^{-1}(R - R0) is nilpotent over Q[x], the inverse
        series terminates: R^{-1} = (sum_j Q^j) R0^{-1} exactly."""
        try:
            r0inv = self.r0_inverse()
        except ValueError:
            return
        # Q as {degree: matrix}, strictly positive degrees
        q = {}
        for k in range(1, len(self.coeffs)):
            mat = _mat_mul(r0inv, self.given(k))
            mat = _mat_scale(mat, -ONE)
            if any(any(row) for row in mat):
                q[k] = mat
        power = {0: [[ONE if i == j else ZERO for j in range(self.dim)]
                     for i in range(self.dim)]}
        total = dict(power)
        for _ in range(self.dim):
            nxt = {}
            for da, ma in power.items():
                for db, mb in q.items():
                    prod = _mat_mul(ma, mb)
                    if any(any(row) for row in prod):
                        cur = nxt.get(da + db)
                        nxt[da + db] = prod if cur is None else _mat_add(cur, prod)
            power = {d: m for d, m in nxt.items() if any(any(row) for row in m)}
            for d, m2 in power.items():
                cur = total.get(d)
                total[d] = m2 if cur is None else _mat_add(cur, m2)
            if not power:
                inv = {}
                for d, m2 in total.items():
                    mat = _mat_mul(m2, r0inv)
                    if any(any(row) for row in mat):
                        inv[d] = mat
                self._inv_degree = max(inv, default=0)
                for d, m2 in inv.items():
                    self._cache[("Rinv", d)] = m2
                return

    def series_is_exact(self, name):
        if name in ("R", "Rstarinv"):
            return True
        return self._inv_degree is not None

    def series_degree(self, name):
        """Exact polynomial degree when known, else the declared order."""
        if name in ("R", "Rstarinv"):
            return len(self.coeffs) - 1
        if self._inv_degree is not None:
            return self._inv_degree
        return self.order

    def given(self, k):
        if k < len(self.coeffs):
            return self.coeffs[k]
        return [[ZERO] * self.dim for _ in range(self.dim)]

    def is_r0_identity(self):
        r0 = self.given(0)
        return all(r0[i][j] == (ONE if i == j else ZERO)
                   for i in range(self.dim) for j in range(self.dim))

    def r0_inverse(self):
        return _mat_inverse(self.given(0))

    def commuting_coefficients(self):
        """Pairs (i, j) with R_i R_j != R_j R_i, empty when valid."""
        bad = []
        d = len(self.coeffs)
        for i in range(d):
            for j in range(i + 1, d):
                a = _mat_mul(self.coeffs[i], self.coeffs[j])
                b = _mat_mul(self.coeffs[j], self.coeffs[i])
                if a != b:
                    bad.append((i, j))
        return bad

    def series_coeff(self, name, k):
        """k-th coefficient matrix of R, Rinv, Rstar or Rstarinv.

        Exact-polynomial series answer any index; truncated ones fail
        loudly beyond the declared order.
        """
        from qva.states import OrderExceededError

        if k > self.series_degree(name):
            if self.series_is_exact(name):
                return [[ZERO] * self.dim for _ in range(self.dim)]
            raise OrderExceededError(
                f"coefficient {name}[{k}] beyond declared order {self.order}")
        key = (name, k)
        if key in self._cache:
            return self._cache[key]
        if name == "R":
            out = self.given(k)
        elif name == "Rstarinv":
            out = _mat_transpose(self.given(k))
        elif name == "Rinv":
            if k == 0:
                out = self.r0_inverse()
            else:
                acc = [[ZERO] * self.dim for _ in range(self.dim)]
                for i in range(1, k + 1):
                    term = _mat_mul(self.given(i), self.series_coeff("Rinv", k - i))
                    acc = _mat_add(acc, term)
                out = _mat_mul(self.r0_inverse(), _mat_scale(acc, -ONE))
        elif name == "Rstar":
            out = _mat_transpose(self.series_coeff("Rinv", k))
        else:
            raise ValueError(f"unknown series {name}")
        self._cache[key] = out
        return out

    def key(self):
        return (self.dim, self.order, tuple(tuple(tuple(r) for r in m) for m in self.coeffs))


def _mat_mul(a, b):
    n = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(n)), ZERO) for j in range(n)] for i in range(n)]


def _mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _mat_scale(a, c):
    return [[c * x for x in row] for row in a]


def _mat_transpose(a):
    n = len(a)
    return [[a[j][i] for j in range(n)] for i in range(n)]


def _mat_inverse(a):
    n = len(a)
    aug = [[QQ(x) for x in row] + [ONE if i == j else ZERO for j in range(n)]
           for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col]), None)
        if piv is None:
            raise ValueError("matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = ONE / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


class SMap:
    """Exchange data: rows (b, a) -> [(b', a', f)] for S(x)(b (x) a).

    f is a Laurent polynomial dict exp -> Fraction; when the map comes from
    an R-matrix the rows are truncated power series and ``order`` records
    how far they are meaningful.
    """

    def __init__(self, symbols, rows, order=None):
        self.symbols = list(symbols)
        self.rows = {pair: [(b2, a2, dict(f)) for b2, a2, f in triples if any(f.values())]
                     for pair, triples in rows.items()}
        self.order = order

    def row(self, b, a):
        if (b, a) in self.rows:
            return self.rows[(b, a)]
        # unspecified rows act as the identity flip (vacuum pairs etc.)
        return [(b, a, {0: ONE})]

    def key(self):
        out = []
        for pair in sorted(self.rows):
            for b2, a2, f in sorted(self.rows[pair], key=lambda t: (t[0], t[1])):
                out.append((pair, b2, a2, tuple(sorted(f.items()))))
        return tuple(out)

    def __eq__(self, other):
        return isinstance(other, SMap) and self.key() == other.key()

    def __repr__(self):
        return f"<smap {len(self.rows)} rows>"


class AlgebraSpec:
    """Validated declarative data for one algebra family."""

    def __init__(self, family, generators, brackets=None, form=None, level=ONE,
                 rmatrix=None, ideal=(), subalgebra=(), mult=None, derivation=None):
        self.family = family
        self.generators = list(generators)
        self.brackets = {k: dict(v) for k, v in (brackets or {}).items()}
        self.form = dict(form or {})
        self.level = QQ(level)
        self.rmatrix = rmatrix
        self.ideal = list(ideal)
        self.subalgebra = list(subalgebra)
        self.mult = {k: (v if v == "undef" else dict(v)) for k, v in (mult or {}).items()}
        self.derivation = {k: dict(v) for k, v in (derivation or {}).items()}

    # -- views used by the state and field engines ------------------------

    def module_generators(self):
        if self.family == "zf-rmatrix":
            return self.generators + [g + "*" for g in self.generators]
        return list(self.generators)

    def creation_only_generators(self):
        if self.family == "half-current":
            return list(self.generators)
        if self.family == "semidirect":
            return list(self.subalgebra)
        return []

    def completed_brackets(self):
        """Antisymmetric completion of the declared bracket table."""
        out = {}
        for (a, b), comb in self.brackets.items():
            out[(a, b)] = {g: QQ(c) for g, c in comb.items() if c}
        for (a, b), comb in list(out.items()):
            if (b, a) not in out:
                out[(b, a)] = {g: -c for g, c in comb.items()}
        return {k: v for k, v in out.items() if any(v.values())}

    def completed_form(self):
        if self.family == "zf-rmatrix":
            out = {}
            for i, g in enumerate(self.generators):
                out[(g + "*", g)] = ONE
                out[(g, g + "*")] = -ONE
            return out
        sign = -ONE if self.family == "heisenberg" else ONE
        out = {}
        for (a, b), c in self.form.items():
            out[(a, b)] = QQ(c)
        for (a, b), c in list(out.items()):
            if (b, a) not in out:
                out[(b, a)] = sign * c
        return {k: v for k, v in out.items() if v}

    def bracket_comb(self, a, b):
        return self.completed_brackets().get((a, b), {})

    # -- identity ----------------------------------------------------------

    def key(self):
        return (
            self.family,
            tuple(self.generators),
            tuple(sorted((k, tuple(sorted(v.items()))) for k, v in self.completed_brackets().items())),
            tuple(sorted(self.completed_form().items())),
            self.level,
            self.rmatrix.key() if self.rmatrix else None,
            tuple(self.ideal),
            tuple(self.subalgebra),
            tuple(sorted((k, v if v == "undef" else tuple(sorted(v.items())))
                         for k, v in self.mult.items()
                         if v == "undef" or v)),
            tuple(sorted((k, tuple(sorted(v.items())))
                         for k, v in self.derivation.items() if v)),
        )

    def __eq__(self, other):
        return isinstance(other, AlgebraSpec) and self.key() == other.key()

    def __repr__(self):
        return f"<spec {self.family} gens={self.generators}>"


# -- parsing ----------------------------------------------------------------


def _parse_rational(tok):
    if "/" in tok:
        num, den = tok.split("/", 1)
        return QQ(int(num), int(den))
    return QQ(int(tok))


def _parse_combination(rhs, errors, ln, declared):
    """`<rational> <gen> (+ <rational> <gen>)*` or `0`."""
    rhs = rhs.strip()
    if rhs == "0":
        return {}
    comb = {}
    for chunk in rhs.split("+"):
        parts = chunk.split()
        if len(parts) != 2:
            errors.append((ln, f"expected '<rational> <generator>', got {chunk.strip()!r}"))
            return {}
        try:
            c = _parse_rational(parts[0])
        except ValueError:
            errors.append((ln, f"malformed rational {parts[0]!r}"))
            return {}
        g = parts[1]
        if declared is not None and g not in declared:
            errors.append((ln, f"undeclared generator {g!r}"))
            return {}
        comb[g] = comb.get(g, ZERO) + c
    return {g: c for g, c in comb.items() if c}


def parse_spec(text):
    """Parse the spec format; raises SpecParseError with positioned errors."""
    errors = []
    section = None
    family = None
    level = None
    generators = []
    brackets = {}
    form = {}
    rmatrix_order = None
    rmatrix_rows = {}
    ideal = []
    subalgebra = []
    mult = {}
    derivation = {}

    lines = text.splitlines()
    for ln, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in ("algebra", "rmatrix", "semidirect", "derivation"):
                errors.append((ln, f"unknown section {section!r}"))
                section = None
            continue
        if "=" not in line:
            errors.append((ln, "expected 'key = value'"))
            continue
        key, rhs = (s.strip() for s in line.split("=", 1))
        fields = key.split()
        if section == "algebra":
            if key == "family":
                if rhs not in FAMILIES:
                    errors.append((ln, f"unknown family {rhs!r}"))
                else:
                    family = rhs
            elif key == "level":
                try:
                    level = _parse_rational(rhs)
                except ValueError:
                    errors.append((ln, f"malformed rational {rhs!r}"))
            elif key == "generators":
                generators = rhs.split()
                if len(set(generators)) != len(generators):
                    errors.append((ln, "generator names must be distinct"))
            elif fields[0] == "bracket" and len(fields) == 3:
                a, b = fields[1], fields[2]
                for g in (a, b):
                    if g not in generators:
                        errors.append((ln, f"undeclared generator {g!r}"))
                brackets[(a, b)] = (_parse_combination(rhs, errors, ln, set(generators)), ln)
            elif fields[0] == "form" and len(fields) == 3:
                a, b = fields[1], fields[2]
                for g in (a, b):
                    if g not in generators:
                        errors.append((ln, f"undeclared generator {g!r}"))
                try:
                    form[(a, b)] = (_parse_rational(rhs), ln)
                except ValueError:
                    errors.append((ln, f"malformed rational {rhs!r}"))
            else:
                errors.append((ln, f"unknown [algebra] entry {key!r}"))
        elif section == "rmatrix":
            if key == "order":
                try:
                    rmatrix_order = int(rhs)
                except ValueError:
                    errors.append((ln, f"malformed integer {rhs!r}"))
            elif key.startswith("R") and key[1:].isdigit():
                try:
                    rows = [[_parse_rational(x.strip()) for x in row.split(",") if x.strip()]
                            for row in rhs.split(";")]
                except ValueError:
                    errors.append((ln, "malformed rational in matrix row"))
                    rows = None
                if rows is not None:
                    rmatrix_rows[int(key[1:])] = (rows, ln)
            else:
                errors.append((ln, f"unknown [rmatrix] entry {key!r}"))
        elif section == "semidirect":
            names = rhs.split()
            for g in names:
                if g not in generators:
                    errors.append((ln, f"undeclared generator {g!r}"))
            if key == "ideal":
                ideal = names
            elif key == "subalgebra":
                subalgebra = names
            else:
                errors.append((ln, f"unknown [semidirect] entry {key!r}"))
        elif section == "derivation":
            if fields[0] == "mult" and len(fields) == 3:
                a, b = fields[1], fields[2]
                for g in (a, b):
                    if g not in generators:
                        errors.append((ln, f"undeclared generator {g!r}"))
                if rhs.strip() == "undef":
                    mult[(a, b)] = "undef"
                else:
                    mult[(a, b)] = _parse_combination(rhs, errors, ln, set(generators))
            elif fields[0] == "d" and len(fields) == 2:
                g = fields[1]
                if g not in generators:
                    errors.append((ln, f"undeclared generator {g!r}"))
                derivation[g] = _parse_combination(rhs, errors, ln, set(generators))
            else:
                errors.append((ln, f"unknown [derivation] entry {key!r}"))
        else:
            errors.append((ln, "entry outside any section"))

    if family is None:
        errors.append((len(lines) or 1, "missing family declaration"))
    if not generators:
        errors.append((len(lines) or 1, "missing generators"))
    rmatrix = None
    if family == "zf-rmatrix":
        if rmatrix_order is None or not rmatrix_rows:
            errors.append((len(lines) or 1, "zf-rmatrix requires an [rmatrix] section"))
        else:
            dim = len(generators)
            mats = []
            for k in range(max(rmatrix_rows) + 1):
                rows, ln = rmatrix_rows.get(k, ([[ZERO] * dim for _ in range(dim)], 0))
                if len(rows) != dim or any(len(r) != dim for r in rows):
                    errors.append((ln, f"R{k} must be a {dim}x{dim} matrix"))
                else:
                    mats.append(rows)
            if not errors:
                rmatrix = RMatrix(dim, rmatrix_order, mats)
    if errors:
        raise SpecParseError(errors)
    return AlgebraSpec(
        family=family,
        generators=generators,
        brackets={k: v for k, (v, _) in brackets.items()},
        form={k: v for k, (v, _) in form.items()},
        level=level if level is not None else ONE,
        rmatrix=rmatrix,
        ideal=ideal,
        subalgebra=subalgebra,
        mult=mult,
        derivation=derivation,
    )


def print_spec(spec):
    """Canonical text form; parse(print_spec(s)) == s."""
    out = ["[algebra]", f"family = {spec.family}"]
    if spec.family in ("affine", "semidirect", "heisenberg", "zf-rmatrix"):
        out.append(f"level = {spec.level}")
    out.append("generators = " + " ".join(spec.generators))
    for (a, b) in sorted(spec.brackets):
        comb = spec.brackets[(a, b)]
        if comb:
            out.append(f"bracket {a} {b} = " + " + ".join(
                f"{c} {g}" for g, c in sorted(comb.items())))
    for (a, b) in sorted(spec.form):
        out.append(f"form {a} {b} = {spec.form[(a, b)]}")
    if spec.rmatrix is not None:
        out.append("[rmatrix]")
        out.append(f"order = {spec.rmatrix.order}")
        for k, mat in enumerate(spec.rmatrix.coeffs):
            rows = "; ".join(", ".join(str(x) for x in row) for row in mat)
            out.append(f"R{k} = {rows}")
    if spec.family == "semidirect":
        out.append("[semidirect]")
        out.append("ideal = " + " ".join(spec.ideal))
        out.append("subalgebra = " + " ".join(spec.subalgebra))
    if spec.family == "derivation-assoc":
        out.append("[derivation]")
        for (a, b) in sorted(spec.mult):
            v = spec.mult[(a, b)]
            if v == "undef":
                out.append(f"mult {a} {b} = undef")
            elif v:
                out.append(f"mult {a} {b} = " + " + ".join(
                    f"{c} {g}" for g, c in sorted(v.items())))
            else:
                out.append(f"mult {a} {b} = 0")
        for g in sorted(spec.derivation):
            v = spec.derivation[g]
            if v:
                out.append(f"d {g} = " + " + ".join(f"{c} {h}" for h, c in sorted(v.items())))
    return "\n".join(out) + "\n"


# -- validation ---------------------------------------------------------------


def _comb_sub(a, b):
    out = dict(a)
    for g, c in b.items():
        out[g] = out.get(g, ZERO) - c
    return {g: c for g, c in out.items() if c}


def validate(spec):
    """Family-specific structural diagnostics; empty list means valid."""
    diags = []

    def bad(msg):
        diags.append({"message": msg})

    gens = spec.generators
    declared = set(gens)
    for (a, b) in spec.brackets:
        if a not in declared or b not in declared:
            bad(f"bracket references undeclared generator in ({a}, {b})")
    for (a, b) in spec.form:
        if a not in declared or b not in declared:
            bad(f"form references undeclared generator in ({a}, {b})")

    brackets = spec.completed_brackets()
    form = spec.completed_form()

    def brk(a, b):
        return brackets.get((a, b), {})

    def frm(a, b):
        return form.get((a, b), ZERO)

    def bracket_of_comb(comb, c):
        out = {}
        for g, x in comb.items():
            for h, y in brk(g, c).items():
                out[h] = out.get(h, ZERO) + x * y
        return {g: v for g, v in out.items() if v}

    if spec.family in ("affine", "half-current", "semidirect"):
        for a in gens:
            for b in gens:
                lhs = brk(a, b)
                rhs = {g: -c for g, c in brk(b, a).items()}
                if _comb_sub(lhs, rhs):
                    bad(f"antisymmetry fails for [{a},{b}] vs [{b},{a}]")
        for a in gens:
            for b in gens:
                for c in gens:
                    acc = {}
                    for g, v in bracket_of_comb(brk(a, b), c).items():
                        acc[g] = acc.get(g, ZERO) + v
                    for g, v in bracket_of_comb(brk(b, c), a).items():
                        acc[g] = acc.get(g, ZERO) + v
                    for g, v in bracket_of_comb(brk(c, a), b).items():
                        acc[g] = acc.get(g, ZERO) + v
                    if any(acc.values()):
                        bad(f"Jacobi identity fails on ({a}, {b}, {c})")

    if spec.family in ("affine", "semidirect"):
        for a in gens:
            for b in gens:
                if frm(a, b) != frm(b, a):
                    bad(f"form must be symmetric; <{a},{b}> != <{b},{a}>")
        scope = gens if spec.family == "affine" else spec.ideal
        for x in gens:
            for a in scope:
                for b in scope:
                    lhs = sum((c * frm(g, b) for g, c in brk(x, a).items()), ZERO)
                    rhs = sum((c * frm(a, g) for g, c in brk(x, b).items()), ZERO)
                    if lhs + rhs != 0:
                        bad(f"form invariance fails: <[{x},{a}],{b}> + <{a},[{x},{b}]> != 0")

    if spec.family == "heisenberg":
        if any(any(v.values()) for v in brackets.values()):
            bad("heisenberg generators must commute (bracket table must be zero)")
        for a in gens:
            for b in gens:
                if frm(a, b) != -frm(b, a):
                    bad(f"form must be skew-symmetric; <{a},{b}> != -<{b},{a}>")
        if spec.level != 1:
            bad("heisenberg level is fixed at 1 (central element acts as identity)")

    if spec.family == "zf-rmatrix":
        if spec.brackets:
            bad("zf-rmatrix takes no bracket table")
        rm = spec.rmatrix
        if rm is None:
            bad("missing [rmatrix] section")
        else:
            if rm.order < max(len(rm.coeffs) - 1, 0):
                bad("declared order is below the degree of the given R data")
            try:
                rm.r0_inverse()
            except ValueError:
                bad("R0 is not invertible")
            for (i, j) in rm.commuting_coefficients():
                bad(f"R-matrix coefficients R{i} and R{j} do not commute")
        if spec.level != 1:
            bad("zf-rmatrix level is fixed at 1")

    if spec.family == "semidirect":
        if sorted(spec.ideal + spec.subalgebra) != sorted(gens):
            bad("ideal and subalgebra must partition the generators")
        kset, gset = set(spec.ideal), set(spec.subalgebra)
        for a in gens:
            for b in gens:
                comb = brk(a, b)
                targets = set(comb)
                if (a in kset or b in kset) and not targets <= kset:
                    bad(f"[{a},{b}] must land in the ideal")
                if a in gset and b in gset and not targets <= gset:
                    bad(f"[{a},{b}] must land in the subalgebra")
        for (a, b), c in form.items():
            if c and not (a in kset and b in kset):
                bad("form must be supported on the ideal")

    if spec.family == "derivation-assoc":
        unit = derivation_unit(spec)
        if unit is None:
            bad("multiplication table has no two-sided unit")
        for a in gens:
            for b in gens:
                for c in gens:
                    ab = spec.mult.get((a, b), {})
                    bc = spec.mult.get((b, c), {})
                    if ab == "undef" or bc == "undef":
                        continue
                    left = _mult_comb(spec, ab, {c: ONE})
                    right = _mult_comb(spec, {a: ONE}, bc)
                    if left == "undef" or right == "undef":
                        continue
                    if _comb_sub(left, right):
                        bad(f"associativity fails on ({a}, {b}, {c})")
        for a in gens:
            for b in gens:
                ab = spec.mult.get((a, b), {})
                if ab == "undef":
                    continue
                dab = _derive_comb(spec, ab)
                lhs = _mult_comb(spec, spec.derivation.get(a, {}), {b: ONE})
                rhs = _mult_comb(spec, {a: ONE}, spec.derivation.get(b, {}))
                if lhs == "undef" or rhs == "undef" or dab == "undef":
                    continue
                total = dict(lhs)
                for g, c in rhs.items():
                    total[g] = total.get(g, ZERO) + c
                if _comb_sub(dab, total):
                    bad(f"Leibniz rule fails on ({a}, {b})")

    return diags


def derivation_unit(spec):
    for e in spec.generators:
        ok = True
        for x in spec.generators:
            if spec.mult.get((e, x), {}) != {x: ONE} or spec.mult.get((x, e), {}) != {x: ONE}:
                ok = False
                break
        if ok:
            return e
    return None


def _mult_comb(spec, a, b):
    out = {}
    for g, x in a.items():
        for h, y in b.items():
            prod = spec.mult.get((g, h), {})
            if prod == "undef":
                return "undef"
            for t, c in prod.items():
                out[t] = out.get(t, ZERO) + x * y * c
    return {g: c for g, c in out.items() if c}


def _derive_comb(spec, comb):
    out = {}
    for g, x in comb.items():
        for h, c in spec.derivation.get(g, {}).items():
            out[h] = out.get(h, ZERO) + x * c
    return {g: c for g, c in out.items() if c}


# -- induced exchange maps ----------------------------------------------------


def induced_smap(spec, order=None):
    """The closed-form S(x) the family carries.

    * heisenberg / affine: identity flip;
    * half-current: S(x)(b (x) a) = b (x) a + x^{-1}(1 (x) [b,a] - [b,a] (x) 1);
    * semidirect: flip on ideal pairs, half-current rule on subalgebra
      pairs, one-sided x^{-1} correction on mixed pairs;
    * zf-rmatrix: S(x)(b (x) a) from R(-x) (x) R^{-1}(x) by sector,
      truncated at the declared order.
    """
    gens = spec.module_generators()
    rows = {}
    if spec.family in ("heisenberg", "affine"):
        for b in gens:
            for a in gens:
                rows[(b, a)] = [(b, a, {0: ONE})]
        return SMap(gens + [VACUUM], rows)
    if spec.family == "half-current":
        for b in gens:
            for a in gens:
                triples = [(b, a, {0: ONE})]
                for g, c in spec.bracket_comb(b, a).items():
                    triples.append((VACUUM, g, {-1: c}))
                    triples.append((g, VACUUM, {-1: -c}))
                rows[(b, a)] = triples
        return SMap(gens + [VACUUM], rows)
    if spec.family == "semidirect":
        kset = set(spec.ideal)
        for b in gens:
            for a in gens:
                triples = [(b, a, {0: ONE})]
                if a in kset and b in kset:
                    pass
                elif a not in kset and b not in kset:
                    for g, c in spec.bracket_comb(b, a).items():
                        triples.append((VACUUM, g, {-1: c}))
                        triples.append((g, VACUUM, {-1: -c}))
                elif a not in kset and b in kset:
                    # row (u, a): a(x1) u(x2) picks up [a,u](x2) (x2-x1)^{-1}
                    for g, c in spec.bracket_comb(a, b).items():
                        triples.append((g, VACUUM, {-1: c}))
                else:
                    # row (a, u): u(x1) a(x2) picks up -[a,u](x1) iota (x1-x2)^{-1}
                    for g, c in spec.bracket_comb(b, a).items():
                        triples.append((VACUUM, g, {-1: c}))
                rows[(b, a)] = triples
        return SMap(gens + [VACUUM], rows)
    if spec.family == "zf-rmatrix":
        from qva.states import Model

        model = Model(spec)
        n = order if order is not None else spec.rmatrix.order
        for bi, b in enumerate(gens):
            for ai, a in enumerate(gens):
                f = {}
                for i in range(n + 1):
                    for b2, a2, c in model.s_coefficient(bi, ai, i):
                        f.setdefault((gens[b2], gens[a2]), {})[i] = c
                rows[(b, a)] = [(b2, a2, poly) for (b2, a2), poly in sorted(f.items())]
        return SMap(gens + [VACUUM], rows, order=n)
    raise ValueError(f"family {spec.family} has no closed-form exchange map")
