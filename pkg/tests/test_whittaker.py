import cmath
import math

import pytest

from gl2local.characters import (
    MultChar,
    ThetaChar,
    build_theta,
    get_unit_group,
    primitive_char,
)
from gl2local.errors import PrecisionError
from gl2local.residue import get_context
from gl2local.whittaker import ReprSpec, WhittakerEngine, required_precision


def _root(e: int, order: int) -> complex:
    return cmath.exp(2j * math.pi * e / order)


def ps_value_oracle(spec: ReprSpec, i: int, x_res: int) -> complex:
    # straight float summation, iterated in reversed order on purpose
    p, n0, mu = spec.p, spec.n0, spec.mu
    pn0 = p**n0
    vo = mu.value_order
    num = 0j
    den = 0j
    for u in reversed(mu.ctx.units(n0)):
        xu = x_res * u % pn0
        shift = (1 + u * p ** (i - n0)) % pn0
        num += _root(mu.exponent(shift), vo) * _root(mu.exponent(xu), vo) \
            * _root(-xu, pn0)
        den += _root(mu.exponent(u), vo) * _root(-u, pn0)
    return num / den


def sc_value_oracle(spec: ReprSpec, i: int, x_res: int) -> complex:
    theta = spec.theta
    p, a, n0 = theta.p, theta.level, spec.n0
    e_e = 2 if theta.ramified else 1
    c = -a - e_e + 1
    vo = theta.value_order
    pi_e = theta.pi_exponent(c, vo)
    lvl = spec.n - i
    pl = p**lvl
    inv = pow(x_res % pl, -1, pl) if lvl else 0
    num = 0j
    den = 0j
    for (A, B) in reversed(list(theta.group.dlog)):
        chi = _root(-(pi_e + theta.exponent((A, B))) % vo, vo)
        if theta.ramified:
            add = _root(2 * B % p**n0, p**n0)
            w = (-(A * A - p * B * B)) % pl
        else:
            add = _root(2 * A % p**a, p**a)
            w = (A * A - theta.group.d_unit * B * B) % pl
        num += chi * add * _root((-inv * w) % pl, pl)
        den += chi * add
    return num / den


def ps_spec(p: int, n: int) -> ReprSpec:
    return ReprSpec.principal_series(primitive_char(p, n // 2))


def sc_spec(p: int, ramified: bool, n: int) -> ReprSpec:
    level = n - 1 if ramified else n // 2
    return ReprSpec.supercuspidal(build_theta(p, ramified, level))


def test_spec_derived_fields():
    s = ps_spec(3, 6)
    assert (s.n, s.n0, s.n1, s.label) == (6, 3, 3, "ps")
    s = sc_spec(3, True, 5)
    assert (s.n, s.n0, s.n1, s.label) == (5, 2, 3, "sc-ram")
    s = sc_spec(3, False, 4)
    assert (s.n, s.n0, s.n1, s.label) == (4, 2, 2, "sc-unram")
    assert required_precision(s, 3) == 1
    assert required_precision(s, 4) == 1
    assert required_precision(ps_spec(3, 8), 5) == 4


def test_spec_validation():
    with pytest.raises(ValueError):
        ReprSpec.principal_series(MultChar(3, 3, 3))  # imprimitive
    with pytest.raises(ValueError):
        ReprSpec.principal_series(primitive_char(3, 1))  # conductor too small
    group = get_unit_group(3, False, 2)
    with pytest.raises(ValueError):
        ReprSpec.supercuspidal(ThetaChar(group, (1, 0, 0)))  # not F-trivial


def test_modulus_and_engine_guard():
    spec = ps_spec(3, 4)
    assert spec.modulus() == math.lcm(spec.mu.value_order, 9)
    assert spec.modulus(4) % 81 == 0
    with pytest.raises(ValueError):
        WhittakerEngine(spec, m=9 if spec.mu.value_order != 9 else 3)


def test_support_zero_off_units():
    ctx = get_context(3, 6)
    for spec in (ps_spec(3, 4), sc_spec(3, False, 4), sc_spec(3, True, 3)):
        eng = WhittakerEngine(spec)
        for i in range(spec.n0 + 1, spec.n + 1):
            assert eng.numerator(i, ctx.scalar(1, 1, 5)).is_zero()
            assert eng.numerator(i, ctx.scalar(-1, 2, 5)).is_zero()
            assert eng.numerator(i, ctx.zero()).is_zero()


def test_top_shear_is_one_on_units():
    ctx = get_context(3, 6)
    for spec in (ps_spec(3, 4), ps_spec(3, 6), sc_spec(3, False, 4),
                 sc_spec(3, True, 5)):
        eng = WhittakerEngine(spec)
        for r in (1, 2, 5):
            num = eng.numerator(spec.n, ctx.from_int(r))
            assert num.equals(eng.c0)
            assert abs(eng.value(spec.n, ctx.from_int(r)) - 1) < 1e-12


def test_ps_matches_reversed_oracle_full_grid():
    spec = ps_spec(3, 4)
    eng = WhittakerEngine(spec)
    ctx = get_context(3, 4)
    for i in (3, 4):
        for x in ctx.units(4):  # all 54 unit residues mod 81
            got = eng.value(i, ctx.from_int(x))
            want = ps_value_oracle(spec, i, x % 9)
            assert abs(got - want) < 1e-9


def test_sc_matches_reversed_oracle():
    ctx = get_context(3, 6)
    ram = sc_spec(3, True, 5)
    eng = WhittakerEngine(ram)
    assert abs(eng.value(4, ctx.from_int(1)) - sc_value_oracle(ram, 4, 1)) < 1e-9
    for i in (3, 4, 5):
        for x in (1, 2, 7, 8):
            got = eng.value(i, ctx.from_int(x))
            assert abs(got - sc_value_oracle(ram, i, x)) < 1e-9
    unram = sc_spec(3, False, 4)
    eng = WhittakerEngine(unram)
    for i in (3, 4):
        for x in (1, 2, 4, 5):
            got = eng.value(i, ctx.from_int(x))
            assert abs(got - sc_value_oracle(unram, i, x)) < 1e-9


def test_uniformizer_sign_choice_cancels():
    theta = build_theta(3, True, 4)
    s_plus = ReprSpec.supercuspidal(theta)
    s_minus = ReprSpec.supercuspidal(theta.with_pi_sign(-1))
    m = math.lcm(s_plus.modulus(), s_minus.modulus())
    e_plus = WhittakerEngine(s_plus, m)
    e_minus = WhittakerEngine(s_minus, m)
    ctx = get_context(3, 6)
    for i in (3, 4, 5):
        for x in (1, 2, 4):
            n_p = e_plus.numerator(i, ctx.from_int(x))
            n_m = e_minus.numerator(i, ctx.from_int(x))
            assert n_m.equals(-n_p)  # shell exponent is odd
            got = e_minus.value(i, ctx.from_int(x))
            assert abs(got - e_plus.value(i, ctx.from_int(x))) < 1e-12
    assert e_minus.c0.equals(-e_plus.c0)


def test_shell_refinement_constant():
    # refining the shell transversal one level must not change the sum
    ctx = get_context(3, 6)
    for spec in (sc_spec(3, False, 4), sc_spec(3, True, 3), sc_spec(3, True, 5)):
        eng = WhittakerEngine(spec)
        a = spec.theta.level
        for i in range(spec.n0 + 1, spec.n + 1):
            for x in (1, 2):
                coarse = eng.numerator(i, ctx.from_int(x))
                fine = eng.numerator(i, ctx.from_int(x), shell_level=a + 1)
                assert coarse.equals(fine)


def test_residue_class_invariance():
    ctx = get_context(3, 8)
    for spec in (ps_spec(3, 6), sc_spec(3, False, 4)):
        eng = WhittakerEngine(spec)
        for i in range(spec.n0 + 1, spec.n + 1):
            lvl = required_precision(spec, i)
            x = ctx.from_int(5)
            y = ctx.from_int(5 + 3**lvl * 7)
            assert eng.numerator(i, x).equals(eng.numerator(i, y))


def test_precision_doubling_stable():
    for spec in (ps_spec(3, 4), sc_spec(3, True, 5)):
        for k_base in (spec.n0 + 1,):
            eng = WhittakerEngine(spec)
            queries = [(i, r) for i in range(spec.n0 + 1, spec.n + 1)
                       for r in (1, 2, 4, 5, 7)][:10]
            for i, r in queries:
                lo = eng.numerator(i, get_context(3, k_base).from_int(r))
                hi = eng.numerator(i, get_context(3, 2 * k_base).from_int(r))
                assert lo.equals(hi)


def test_range_and_precision_guards():
    spec = ps_spec(3, 6)
    eng = WhittakerEngine(spec)
    ctx = get_context(3, 6)
    for bad_i in (0, spec.n0, spec.n + 1):
        with pytest.raises(ValueError):
            eng.numerator(bad_i, ctx.from_int(1))
    shallow = get_context(3, 2).from_int(1)  # n0 = 3 needs 3 digits
    with pytest.raises(PrecisionError):
        eng.numerator(4, shallow)


def test_counts_cache_consistency():
    spec = sc_spec(3, False, 4)
    eng = WhittakerEngine(spec)
    a = eng.numerator_counts(3, 2)
    b = eng.numerator_counts(3, 2, cache=False)
    assert (a == b).all()
    assert eng.numerator_counts(3, 2) is a  # cached object reused
