"""State-engine tests: straightening oracles, bases, filtrations, confluence.

The bracket-expansion oracles are worked by hand from the commutation
relations; partition counts come from a brute multiset enumeration that
never touches the engine's generating-function recurrence.
"""

import itertools
import random
from fractions import Fraction as F
from pathlib import Path

import pytest

from qva.algspec import parse_spec
from qva.states import (Model, State, colored_partition_count, filtration_level,
                        mode_sum)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def model(name):
    return Model(parse_spec((FIXTURES / name).read_text()))


def brute_colored_partitions(colors, k):
    """Independent oracle: enumerate multisets of (part, color) directly."""
    def count(rest, max_part):
        if rest == 0:
            return 1
        total = 0
        for part in range(min(rest, max_part), 0, -1):
            # multiset over colors for a block of equal parts handled by
            # recursion with a (part, color) ceiling
            total += sum(count_with(rest, part, c) for c in range(colors))
        return total

    def count_with(rest, part, color):
        # place one (part, color), remaining parts <= (part, color) in lex order
        rest -= part
        if rest == 0:
            return 1
        total = 0
        for p in range(min(rest, part), 0, -1):
            cmax = colors if p < part else color + 1
            total += sum(count_with(rest, p, c) for c in range(cmax))
        return total

    return count(k, k) if k else 1


@pytest.mark.parametrize("colors,upto", [(1, 6), (2, 5), (3, 5), (4, 5)])
def test_partition_oracle_agreement(colors, upto):
    for k in range(upto + 1):
        assert colored_partition_count(colors, k) == brute_colored_partitions(colors, k)


def test_partition_reference_values():
    # frozen from the brute oracle
    assert [colored_partition_count(2, k) for k in range(5)] == [1, 2, 5, 10, 20]
    assert [colored_partition_count(3, k) for k in range(5)] == [1, 3, 9, 22, 51]
    assert [colored_partition_count(4, k) for k in range(5)] == [1, 4, 14, 40, 105]


def test_affine_sl2_oracles():
    m = model("sl2-affine.alg")
    E, H, Fg = m.gi["e"], m.gi["h"], m.gi["f"]
    vac = State.vacuum()
    f1 = m.apply_mode(Fg, -1, vac)
    # [e(0), f(-1)] = h(-1), e(0)|0> = 0
    assert m.apply_mode(E, 0, f1) == m.apply_mode(H, -1, vac)
    # e(1) f(-1)|0> = l <e,f> |0> = |0>
    assert m.apply_mode(E, 1, f1) == vac
    assert m.apply_mode(H, 2, vac).is_zero()
    # already ordered monomial passes through
    ef = m.act_monomial_on_vacuum([(-1, E), (-1, Fg)])
    assert ef == State.monomial(((-1, E), (-1, Fg)))


def test_heisenberg_oracles():
    m = model("heisenberg-rank1.alg")
    U, US = m.gi["u"], m.gi["u*"]
    vac = State.vacuum()
    assert m.apply_mode(US, 0, m.apply_mode(U, -1, vac)) == vac
    assert m.apply_mode(U, 0, m.apply_mode(US, -1, vac)) == vac.scaled(-1)
    assert m.apply_mode(U, 0, m.apply_mode(U, -1, vac)).is_zero()


def test_basis_counts():
    m = model("heisenberg-rank1.alg")
    by = m.basis_by_level(2)
    assert [len(by[k]) for k in range(3)] == [1, 2, 5]
    assert len(m.enumerate_basis(2)) == 8
    m2 = model("sl2-affine.alg")
    assert [len(m2.basis_by_level(4)[k]) for k in range(5)] == [1, 3, 9, 22, 51]
    assert m2.enumerate_basis(0) == [()]


def test_filtration_levels():
    assert filtration_level(()) == 0
    assert filtration_level(((-1, 0), (-1, 1))) == 2
    assert filtration_level(((-3, 2),)) == 3


@pytest.mark.parametrize("name", ["sl2-affine.alg", "heisenberg-rank1.alg",
                                  "zf-nilpotent.alg", "sl2-halfcurrent.alg",
                                  "semidirect-nil.alg"])
def test_filtration_containments(name):
    m = model(name)
    sharp = m.family in ("heisenberg", "zf-rmatrix", "half-current")
    for mono in m.enumerate_basis(3):
        k = filtration_level(mono)
        st = State.monomial(mono)
        for g in range(len(m.gens)):
            for mm in range(-4, 5):
                out = m.apply_mode(g, mm, st)
                if not out:
                    continue
                # sharp drop for the delta_{m+n+1,0} pairing families; the
                # affine-type central term sits one level higher
                bound = k - mm - (1 if (mm >= 0 and sharp) else 0)
                assert out.level() <= bound, (name, mono, g, mm)


@pytest.mark.parametrize("name", ["sl2-affine.alg", "heisenberg-rank1.alg",
                                  "zf-nilpotent.alg", "semidirect-nil.alg"])
def test_truncation_property(name):
    # a(m) s = 0 for all m >= bound, with the bound computable from the
    # level (level for the strict-pairing families, level + 1 otherwise)
    m = model(name)
    for mono in m.enumerate_basis(3):
        st = State.monomial(mono)
        b = m.truncation_bound(filtration_level(mono))
        for g in range(len(m.gens)):
            for mm in range(b, b + 3):
                assert m.apply_mode(g, mm, st).is_zero(), (name, mono, g, mm)


def test_vanishing_law_by_family():
    """Mode words of nonnegative sum annihilate the vacuum for the
    delta_{m+n+1,0}-pairing families; the affine-type central term
    delta_{m+n,0} instead pins sum-zero words to the vacuum line
    (e(1)f(-1)|0> = l|0> is the standard counterexample)."""
    rng = random.Random(2024)
    strict = ["heisenberg-rank1.alg", "zf-nilpotent.alg", "sl2-halfcurrent.alg"]
    central = ["sl2-affine.alg", "semidirect-nil.alg"]
    for name in strict + central:
        m = model(name)
        for _ in range(120):
            r = rng.randint(1, 4)
            modes = [(rng.randint(-4, 4), rng.randrange(len(m.gens)))
                     for _ in range(r)]
            s = sum(mo for mo, _ in modes)
            out = m.act_monomial_on_vacuum(modes)
            if name in strict:
                if s >= 0:
                    assert out.is_zero(), (name, modes)
            else:
                if s >= 1:
                    assert out.is_zero(), (name, modes)
                elif s == 0 and out:
                    assert set(out.c) == {()}, (name, modes)


def test_affine_central_counterexample():
    # the spec's own apply_mode example with nonnegative mode sum
    m = model("sl2-affine.alg")
    out = m.act_monomial_on_vacuum([(1, m.gi["e"]), (-1, m.gi["f"])])
    assert out == State.vacuum()


@pytest.mark.parametrize("name", ["sl2-affine.alg", "heisenberg-rank1.alg",
                                  "zf-nilpotent.alg", "sl2-halfcurrent.alg",
                                  "semidirect-nil.alg"])
def test_straightening_confluence(name):
    """Free-position rewriting agrees with the canonical right-to-left
    evaluation for randomized rewrite orders."""
    m = model(name)
    rng = random.Random(77)
    for _ in range(40):
        r = rng.randint(2, 4)
        modes = [(rng.randint(-3, 2), rng.randrange(len(m.gens)))
                 for _ in range(r)]
        want = m.act_monomial_on_vacuum(modes)
        for trial in range(3):
            pick = random.Random(1000 * trial + 7)
            got = m.normalize_word(modes, lambda n: pick.randrange(n))
            assert got == want, (name, modes, trial)


def test_exchange_relation_regression():
    """a(m) b(n) w equals the straightened right side of the exchange
    relation, rebuilt here from the S coefficients independently."""
    for name in ["heisenberg-rank1.alg", "zf-nilpotent.alg"]:
        m = model(name)
        order_cap = m.spec.rmatrix.order if m.spec.rmatrix else 10
        for mono in m.enumerate_basis(2):
            w = State.monomial(mono)
            lvl = filtration_level(mono)
            for ga in range(len(m.gens)):
                for gb in range(len(m.gens)):
                    for mm in range(-2, 3):
                        for nn in range(-2, 3):
                            lhs = m.apply_mode(ga, mm, m.apply_mode(gb, nn, w))
                            rhs = State()
                            i_cap = max(0, lvl - mm - nn)
                            if i_cap > order_cap:
                                continue
                            for i in range(i_cap + 1):
                                for b2, a2, c in m.s_coefficient(gb, ga, i):
                                    for j in range(i + 1):
                                        beta = c * F(
                                            __import__("math").comb(i, j) * (-1) ** j)
                                        inner = m.apply_mode(a2, mm + j, w)
                                        rhs = rhs + m.apply_mode(
                                            b2, nn + i - j, inner).scaled(beta)
                            if mm + nn + 1 == 0:
                                rhs = rhs + w.scaled(m.pairing(ga, gb))
                            assert lhs == rhs, (name, mono, ga, gb, mm, nn)


def test_gr_dimensions_free():
    m = model("heisenberg-rank1.alg")
    rows = m.gr_dimensions(3)
    assert rows == [(0, 1, 1), (1, 2, 2), (2, 5, 5), (3, 10, 10)]
    m2 = model("zf-nilpotent.alg")
    rows = m2.gr_dimensions(3)
    assert [(k, a) for k, a, f in rows] == [(0, 1), (1, 4), (2, 14), (3, 40)]
    assert all(a == f for _, a, f in rows)


def test_gr_requires_identity_r0():
    from qva.states import OrderExceededError

    text = (FIXTURES / "zf-nilpotent.alg").read_text().replace(
        "R0 = 1, 0; 0, 1", "R0 = 2, 0; 0, 1")
    m = Model(parse_spec(text))
    with pytest.raises(OrderExceededError):
        m.gr_dimensions(2)


def test_depth_budget_guard():
    from qva.states import StraighteningError

    m = model("sl2-affine.alg")
    m.depth_budget = 1
    m._apply_cache.clear()
    with pytest.raises(StraighteningError):
        # long alternating word forces many rewrites under a unit budget
        m.act_monomial_on_vacuum([(2, 0), (-3, 2), (2, 0), (-3, 2), (2, 0), (-3, 2)])
