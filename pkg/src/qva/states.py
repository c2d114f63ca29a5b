"""Vacuum modules on normally ordered mode monomials.

A monomial is a tuple of modes ``(m, g)`` (mode integer, generator index)
acting left to right on the vacuum; normal form has every m <= -1 and the
modes sorted ascending by (m, g).  States are exact rational combinations
of normal monomials; the module is realized on their free span, and the
verifier's relation-regression and confluence checks supply the desk-scale
evidence that the exchange relations are consistent on it.

Mode application is defined right to left: inserting a(m) in front of a
normal monomial either lands in place or triggers the family's exchange
relation

* Lie families (affine, half-current, semidirect):
      a(m) b(n) = b(n) a(m) + [a,b](m+n) + m l <a,b> delta_{m+n,0}
  (no central term for the pure-creation half-current modes),
* Heisenberg:  a(m) b(n) = b(n) a(m) + <a,b> delta_{m+n+1,0},
* R-matrix (Zamolodchikov-Faddeev type):
      a(m) b(n) = sum_{r,i,j} beta_rij b_r(n+i-j) a_r(m+j) + <a,b> delta_{m+n+1,0},
  beta read off the expansion of S(x2-x1)(b (x) a) in nonnegative powers
  of x1,

and the right-hand side is evaluated on the actual tail state.  Every mode
word has its result monomial levels bounded by minus its mode sum, so the
i-sum of the exchange relation cuts off exactly at i = level(tail) - m - n
with nothing lost.  Each rewrite lowers (word length, inversion count)
lexicographically for flip-symbol data; a depth budget guards the general
R(0) case.
"""

from fractions import Fraction

QQ = Fraction
ZERO = Fraction(0)
ONE = Fraction(1)


class StraighteningError(RuntimeError):
    def __init__(self, message, monomial=None):
        super().__init__(message)
        self.monomial = monomial


class OrderExceededError(RuntimeError):
    """A derived R-matrix series coefficient beyond the declared order was needed."""


def filtration_level(mono):
    """Sum of m_i over modes a(-m_i); the vacuum sits at level 0."""
    return sum(-m for m, _ in mono)


def mode_sum(mono):
    return sum(m for m, _ in mono)


class State:
    """Sparse exact combination of normal monomials."""

    __slots__ = ("c",)

    def __init__(self, c=None):
        self.c = {k: v for k, v in (c or {}).items() if v}

    @classmethod
    def vacuum(cls):
        return cls({(): ONE})

    @classmethod
    def monomial(cls, mono, coeff=ONE):
        return cls({tuple(mono): QQ(coeff)})

    def is_zero(self):
        return not self.c

    def __bool__(self):
        return bool(self.c)

    def __add__(self, other):
        out = dict(self.c)
        for k, v in other.c.items():
            w = out.get(k, ZERO) + v
            if w:
                out[k] = w
            elif k in out:
                del out[k]
        return State(out)

    def __radd__(self, other):
        # 0 + state arises in generic sparse merges
        if other == 0:
            return self
        return NotImplemented

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return State({k: -v for k, v in self.c.items()})

    def scaled(self, c):
        c = QQ(c)
        if not c:
            return State()
        return State({k: c * v for k, v in self.c.items()})

    def __mul__(self, c):
        return self.scaled(c)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, State) and self.c == other.c

    def __hash__(self):
        return hash(self.key())

    def key(self):
        return tuple(sorted(self.c.items()))

    def level(self):
        """Largest filtration level among the monomials present."""
        return max((filtration_level(k) for k in self.c), default=0)

    def items(self):
        return self.c.items()

    def coeff(self, mono):
        return self.c.get(tuple(mono), ZERO)

    def __repr__(self):
        return f"<state {self.c!r}>"


def accumulate(target, state, coeff=ONE):
    if not coeff:
        return
    for k, v in state.c.items():
        w = target.get(k, ZERO) + coeff * v
        if w:
            target[k] = w
        elif k in target:
            del target[k]


class Model:
    """Vacuum module of one algebra spec, with straightening and bases."""

    def __init__(self, spec):
        self.spec = spec
        self.family = spec.family
        self.gens = list(spec.module_generators())
        self.gi = {g: i for i, g in enumerate(self.gens)}
        self.level = spec.level
        self.creation_only = {self.gi[g] for g in spec.creation_only_generators()}
        self._bracket = {}
        for (a, b), comb in spec.completed_brackets().items():
            self._bracket[(self.gi[a], self.gi[b])] = {self.gi[g]: c for g, c in comb.items()}
        self._pairing = {}
        for (a, b), c in spec.completed_form().items():
            if c:
                self._pairing[(self.gi[a], self.gi[b])] = c
        self._apply_cache = {}
        self._s_coeff_cache = {}
        # None: per-call budget max(10*level^2, 100000); an int overrides
        self.depth_budget = None

    # -- family relation data -------------------------------------------

    def bracket(self, ga, gb):
        return self._bracket.get((ga, gb), {})

    def pairing(self, ga, gb):
        return self._pairing.get((ga, gb), ZERO)

    def uses_smap(self):
        return self.family in ("heisenberg", "zf-rmatrix")

    def _sector_series(self, gb, ga):
        dim = self.spec.rmatrix.dim
        b_dual, a_dual = gb >= dim, ga >= dim
        if not b_dual and not a_dual:
            return "R", "Rinv"
        if b_dual and a_dual:
            return "Rstarinv", "Rstar"
        if b_dual:
            return "Rstar", "R"
        return "Rinv", "Rstarinv"

    def s_order_cap(self, gb, ga):
        """(cap, exact): largest meaningful S(x)(b (x) a) series index."""
        if self.family == "heisenberg":
            return 0, True
        rm = self.spec.rmatrix
        s1, s2 = self._sector_series(gb, ga)
        if rm.series_is_exact(s1) and rm.series_is_exact(s2):
            return rm.series_degree(s1) + rm.series_degree(s2), True
        return rm.order, False

    def heisenberg_twin(self):
        """The oscillator module on the same generators with the flip
        exchange: the carrier of the dressing construction (the dressed
        currents make it a module for the R-matrix exchange relations)."""
        if self.family != "zf-rmatrix":
            return self
        if getattr(self, "_twin", None) is None:
            from qva.algspec import AlgebraSpec

            gens = list(self.gens)
            dim = self.spec.rmatrix.dim
            form = {(gens[i + dim], gens[i]): ONE for i in range(dim)}
            twin_spec = AlgebraSpec("heisenberg", gens, form=form)
            self._twin = Model(twin_spec)
        return self._twin

    def s_coefficient(self, gb, ga, i):
        """Coefficient of x^i in S(x)(b (x) a), as [(b', a', scalar)]."""
        if self.family == "heisenberg":
            return [(gb, ga, ONE)] if i == 0 else []
        key = (gb, ga, i)
        hit = self._s_coeff_cache.get(key)
        if hit is not None:
            return hit
        rm = self.spec.rmatrix
        dim = rm.dim
        s1, s2 = self._sector_series(gb, ga)
        b_dual = gb >= dim
        a_dual = ga >= dim
        if rm.series_is_exact(s1) and rm.series_is_exact(s2) and \
                i > rm.series_degree(s1) + rm.series_degree(s2):
            self._s_coeff_cache[key] = []
            return []
        bi = gb - dim if b_dual else gb
        ai = ga - dim if a_dual else ga
        merged = {}
        for p in range(i + 1):
            q = i - p
            m1 = rm.series_coeff(s1, p)
            m2 = rm.series_coeff(s2, q)
            sign = (-1) ** p  # the slot-1 series is evaluated at -x
            for bo in range(dim):
                c1 = m1[bo][bi]
                if not c1:
                    continue
                for ao in range(dim):
                    c2 = m2[ao][ai]
                    if not c2:
                        continue
                    k2 = (bo + (dim if b_dual else 0), ao + (dim if a_dual else 0))
                    merged[k2] = merged.get(k2, ZERO) + sign * c1 * c2
        res = [(b2, a2, c) for (b2, a2), c in sorted(merged.items()) if c]
        self._s_coeff_cache[key] = res
        return res

    # -- mode application -------------------------------------------------

    def current_floor(self, gi, level):
        """Certified lower bound for exponents of a(x) applied to a state
        of the given filtration level.

        Sharp consequence of the filtration containments: a(m) kills the
        state for m >= level under the delta_{m+n+1,0} pairing, but the
        affine-type central term delta_{m+n,0} survives one mode higher.
        """
        if gi in self.creation_only:
            return 0
        if self.family in ("heisenberg", "zf-rmatrix"):
            return -level
        return -level - 1

    def truncation_bound(self, level):
        """a(m) annihilates every state of this level for all m >= bound."""
        return level if self.family in ("heisenberg", "zf-rmatrix") else level + 1

    def _budget(self, lvl):
        if self.depth_budget is not None:
            return [self.depth_budget]
        return [max(10 * lvl * lvl, 100000)]

    def apply_mode(self, g, m, state):
        """a(m) . state in normal form; a(m) annihilates the vacuum for m >= 0."""
        gi = g if isinstance(g, int) else self.gi[g]
        out = {}
        budget = self._budget(state.level() + abs(int(m)) + 1)
        for mono, c in state.items():
            accumulate(out, self._apply(gi, int(m), mono, budget), c)
        return State(out)

    def apply_comb(self, comb, m, state):
        """Same for a formal generator combination {index or name: coeff}."""
        out = {}
        for g, c in comb.items():
            accumulate(out, self.apply_mode(g, m, state), c)
        return State(out)

    def _apply(self, g, m, mono, budget):
        if m >= 0 and g in self.creation_only:
            return State()
        key = (g, m, mono)
        hit = self._apply_cache.get(key)
        if hit is not None:
            return hit
        if not mono:
            res = State() if m >= 0 else State.monomial(((m, g),))
            self._apply_cache[key] = res
            return res
        n, h = mono[0]
        if (m, g) <= (n, h):
            # already sorted, and m <= n <= -1
            res = State.monomial(((m, g),) + mono)
            self._apply_cache[key] = res
            return res
        budget[0] -= 1
        if budget[0] < 0:
            raise StraighteningError("straightening depth budget exceeded",
                                     ((m, g),) + mono)
        rest = mono[1:]
        rest_state = State.monomial(rest)
        out = {}
        if self.uses_smap():
            i_max = max(0, filtration_level(rest) - m - n)
            cap, exact = self.s_order_cap(h, g)
            if i_max > cap:
                if not exact:
                    raise OrderExceededError(
                        f"straightening needs S(x) to order {i_max}, "
                        f"declared order {cap}")
                i_max = cap
            for i in range(i_max + 1):
                for b2, a2, c in self.s_coefficient(h, g, i):
                    for j in range(i + 1):
                        beta = c * _binom_int(i, j) * ((-1) ** j)
                        if not beta:
                            continue
                        inner = self._apply(a2, m + j, rest, budget)
                        term = self._apply_state(b2, n + i - j, inner, budget)
                        accumulate(out, term, beta)
            if m + n + 1 == 0:
                accumulate(out, rest_state, self.pairing(g, h))
        else:
            inner = self._apply(g, m, rest, budget)
            accumulate(out, self._apply_state(h, n, inner, budget))
            for gc, c in self.bracket(g, h).items():
                accumulate(out, self._apply(gc, m + n, rest, budget), c)
            if self.family in ("affine", "semidirect") and m + n == 0:
                p = self.pairing(g, h)
                if p:
                    accumulate(out, rest_state, QQ(m) * self.level * p)
        res = State(out)
        self._apply_cache[key] = res
        return res

    def _apply_state(self, g, m, state, budget):
        out = {}
        for mono, c in state.items():
            accumulate(out, self._apply(g, m, mono, budget), c)
        return State(out)

    def act_monomial_on_vacuum(self, modes):
        """a1(n1)...ar(nr) |0> for an arbitrary mode word."""
        word = [(int(m), g if isinstance(g, int) else self.gi[g]) for m, g in modes]
        state = State.vacuum()
        for m, g in reversed(word):
            state = self.apply_mode(g, m, state)
            if not state:
                return state
        return state

    # -- free-order straightening (confluence evidence) --------------------

    def normalize_word(self, word, choose):
        """Rewrite an arbitrary word picking violations via ``choose``.

        Used by the confluence checks: whatever admissible rewrite order is
        taken, the result must agree with the right-to-left evaluation.
        """
        word = tuple((int(m), g if isinstance(g, int) else self.gi[g]) for m, g in word)
        budget = self._budget(sum(abs(m) for m, _ in word) + 1)
        return self._rewrite_free(word, budget, choose)

    def _rewrite_free(self, word, budget, choose):
        for m, g in word:
            if m >= 0 and g in self.creation_only:
                return State()
        positions = [i for i in range(len(word) - 1) if word[i] > word[i + 1]]
        if word and word[-1][0] >= 0:
            positions.append(len(word) - 1)
        if not positions:
            return State.monomial(word)
        budget[0] -= 1
        if budget[0] < 0:
            raise StraighteningError("straightening depth budget exceeded", word)
        pos = positions[choose(len(positions))]
        if pos == len(word) - 1:
            return State()
        (m, ga), (n, gb) = word[pos], word[pos + 1]
        head, tail = word[:pos], word[pos + 2:]
        out = {}
        if self.uses_smap():
            i_max = max(0, -m - n - mode_sum(tail))
            cap, exact = self.s_order_cap(gb, ga)
            if i_max > cap:
                if not exact:
                    raise OrderExceededError(
                        f"straightening needs S(x) to order {i_max}, "
                        f"declared order {cap}")
                i_max = cap
            for i in range(i_max + 1):
                for b2, a2, c in self.s_coefficient(gb, ga, i):
                    for j in range(i + 1):
                        beta = c * _binom_int(i, j) * ((-1) ** j)
                        if beta:
                            mid = ((n + i - j, b2), (m + j, a2))
                            accumulate(out, self._rewrite_free(head + mid + tail, budget, choose), beta)
            if m + n + 1 == 0:
                p = self.pairing(ga, gb)
                if p:
                    accumulate(out, self._rewrite_free(head + tail, budget, choose), p)
        else:
            accumulate(out, self._rewrite_free(head + ((n, gb), (m, ga)) + tail, budget, choose))
            for gc, c in self.bracket(ga, gb).items():
                accumulate(out, self._rewrite_free(head + ((m + n, gc),) + tail, budget, choose), c)
            if self.family in ("affine", "semidirect") and m + n == 0:
                p = self.pairing(ga, gb)
                if p:
                    accumulate(out, self._rewrite_free(head + tail, budget, choose), QQ(m) * self.level * p)
        return State(out)

    # -- bases, filtrations, graded dimensions ----------------------------

    def enumerate_basis(self, max_level):
        """All normal monomials of filtration level <= max_level, sorted by
        (level, monomial) for reproducible rank computations."""
        ngen = len(self.gens)
        out = [()]

        def extend(prefix, budget, min_key):
            for m in range(-1, -budget - 1, -1):
                for g in range(ngen):
                    if (m, g) < min_key:
                        continue
                    mono = prefix + ((m, g),)
                    out.append(mono)
                    extend(mono, budget + m, (m, g))

        extend((), max_level, (-max_level - 1, -1))
        return sorted(out, key=lambda mono: (filtration_level(mono), mono))

    def basis_by_level(self, max_level):
        levels = {k: [] for k in range(max_level + 1)}
        for mono in self.enumerate_basis(max_level):
            levels[filtration_level(mono)].append(mono)
        return levels

    def free_graded_dimension(self, k):
        return colored_partition_count(len(self.gens), k)

    def gr_dimensions(self, max_level):
        """(level k, dim W[k]/W[k-1], free dim) for k = 0..max_level.

        Actual dimension: rank over Q, in normal-monomial coordinates, of
        the straightened images of every ordered spanning word of level <= k.
        """
        if self.family == "zf-rmatrix" and not self.spec.rmatrix.is_r0_identity():
            raise OrderExceededError(
                "gr comparison is only defined for R(0) = identity "
                "(the symbol algebra has no distinguished basis otherwise)")
        from qva import linalg

        cols_by_level = {k: [] for k in range(max_level + 1)}
        for word in self._spanning_words(max_level):
            lvl = -mode_sum(word)
            st = self.act_monomial_on_vacuum(word)
            cols_by_level[lvl].append(dict(st.items()))
        out = []
        prev_rank = 0
        running = []
        for k in range(max_level + 1):
            running.extend(cols_by_level[k])
            rank, _ = linalg.rank_and_kernel(running)
            out.append((k, rank - prev_rank, self.free_graded_dimension(k)))
            prev_rank = rank
        return out

    def _spanning_words(self, max_level):
        ngen = len(self.gens)
        words = [()]

        def extend(prefix, budget):
            for m in range(-1, -budget - 1, -1):
                for g in range(ngen):
                    w = prefix + ((m, g),)
                    words.append(w)
                    extend(w, budget + m)

        extend((), max_level)
        return words

    # -- labels -----------------------------------------------------------

    def mono_label(self, mono):
        if not mono:
            return "1"
        return " ".join(f"{self.gens[g]}({m})" for m, g in mono)

    def state_label(self, state):
        parts = [f"{c} {self.mono_label(mono)}" for mono, c in sorted(state.items())]
        return " + ".join(parts) if parts else "0"


def _binom_int(n, k):
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out


def colored_partition_count(colors, k):
    """Multisets of colored positive parts summing to k:
    the q^k coefficient of prod_{m>=1} (1 - q^m)^(-colors)."""
    coeffs = [0] * (k + 1)
    coeffs[0] = 1
    for m in range(1, k + 1):
        nxt = [0] * (k + 1)
        for base in range(k + 1):
            if not coeffs[base]:
                continue
            j = 0
            while base + m * j <= k:
                nxt[base + m * j] += coeffs[base] * _binom_int(colors - 1 + j, j)
                j += 1
        coeffs = nxt
    return coeffs[k]


def apply_mode(model, gen, m, state):
    return model.apply_mode(gen, m, state)


def act_monomial_on_vacuum(model, modes):
    return model.act_monomial_on_vacuum(modes)


def enumerate_basis(model, max_level):
    return model.enumerate_basis(max_level)


def gr_dimensions(model, max_level):
    return model.gr_dimensions(max_level)
