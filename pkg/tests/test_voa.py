from fractions import Fraction

import pytest
import sympy
from sympy.functions.combinatorial.numbers import partition
from hypothesis import given, settings
from hypothesis import strategies as st

from heisvoa.exact import CycNum
from heisvoa.heis import FockVector, make_setup, preset
from heisvoa.voa import (
    UNTWISTED_IDS,
    VertexMap,
    check_untwisted_identity,
    jacobi_mismatch,
    lminus1_mismatch,
    minimal_k,
    minimal_l,
    mode_slice,
    mwa_mismatch,
    skew_mismatch,
    untwisted_context,
    untwisted_series_fn,
    varwass_mismatch,
    virasoro_bracket_mismatch,
    virasoro_mode,
    voa_for,
    Context,
)

D1 = make_setup(1, [[1]], [[1]], 1)
D2 = preset("identity", 2)
SKEWED = make_setup(2, [[2, 1], [1, 2]], [[0, 1], [1, 0]], 2)


def q(x):
    return CycNum.rational(1, x)


@pytest.fixture(scope="module")
def V1():
    return voa_for(D1)


@pytest.fixture(scope="module")
def V2():
    return voa_for(D2)


# -- vertex modes -------------------------------------------------------------


def test_vacuum_is_identity(V2):
    one = V2.vacuum()
    for w in [one, V2.monomial([(0, 1)]), V2.monomial([(0, 2), (1, 1)])]:
        for n in range(-4, 4):
            expect = w if n == -1 else FockVector(w.sector)
            assert V2.vertex_mode(one, n, w) == expect


def test_creation_property(V2):
    one = V2.vacuum()
    for v in [V2.monomial([(0, 1)]), V2.monomial([(0, 3), (1, 1)]), V2.conformal_vector()]:
        assert V2.vertex_mode(v, -1, one) == v
        for n in range(0, 4):
            assert not V2.vertex_mode(v, n, one)


def test_generator_modes_are_heisenberg_modes(V1):
    a = V1.generator(0)
    sp = V1.space
    for w in sp.basis_upto(4):
        wv = FockVector(sp.sector, {w: sp.one})
        for n in range(-3, 4):
            assert V1.vertex_mode(a, n, wv) == sp.apply_element((1,), n, wv)


def test_generator_products(V1):
    a = V1.generator(0)
    assert not V1.vertex_mode(a, 0, a)
    assert V1.vertex_mode(a, 1, a) == V1.vacuum()
    assert V1.vertex_mode(a, -1, a) == V1.monomial([(0, 1), (0, 1)])


def test_truncation_bound(V2):
    vs = [V2.monomial([(0, 1)]), V2.monomial([(1, 2)]), V2.conformal_vector()]
    for v in vs:
        for w in vs:
            top = V2.Y.top_mode(v, w)
            for n in range(int(top) + 1, int(top) + 5):
                assert not V2.vertex_mode(v, n, w)


def test_grading_shift(V2):
    u = V2.monomial([(0, 2), (1, 1)])
    for mono in V2.space.basis_upto(3):
        w = FockVector(V2.space.sector, {mono: V2.space.one})
        for n in range(-3, 4):
            out = V2.vertex_mode(u, n, w)
            for m in out.terms:
                assert -sum(k for _, k in m) == 3 + (-sum(k for _, k in mono)) - n - 1


# -- Virasoro -------------------------------------------------------------------


@pytest.mark.parametrize("setup", [D1, D2], ids=["d1", "d2"])
def test_virasoro_relations(setup):
    # [L(m),L(n)] = (m-n)L(m+n) + d(m^3-m)/12 on weights <= 6, |m|,|n| <= 4
    assert virasoro_bracket_mismatch(voa_for(setup), 4, 6) is None


def test_virasoro_relations_skewed_form():
    assert virasoro_bracket_mismatch(voa_for(SKEWED), 3, 4) is None


def test_L0_acts_as_weight(V2):
    L0 = virasoro_mode(D2, 0)
    v = V2.monomial([(0, 3)])
    assert L0(v) == v * 3
    for w in range(5):
        src, dst, rows = L0.matrix(w)
        assert src == dst
        for i in range(len(src)):
            for j in range(len(src)):
                assert rows[i][j] == (q(w) if i == j else q(0))


def test_L2_Lminus2(V2):
    # [L(2), L(-2)] = 4 L(0) + (d/2) id
    for mono in V2.space.basis_upto(4):
        w = FockVector(V2.space.sector, {mono: V2.space.one})
        L = V2.virasoro_mode
        lhs = L(2, L(-2, w)) - L(-2, L(2, w))
        assert lhs == L(0, w) * 4 + w * 1


def test_conformal_modes_match_quadratic_formula(V2):
    om = V2.conformal_vector()
    for mono in V2.space.basis_upto(4):
        w = FockVector(V2.space.sector, {mono: V2.space.one})
        for n in range(-3, 4):
            assert V2.vertex_mode(om, n + 1, w) == V2.virasoro_mode(n, w)


def test_operator_slice_matrix_shift(V1):
    a = V1.generator(0)
    sl = mode_slice(V1, a, -2)
    src, dst, rows = sl.matrix(2)
    assert len(src) == partition(2) and len(dst) == partition(4)
    assert sl.shift == 2
    # a(-2) is injective on the weight-2 piece
    assert all(any(rows[i][j] for i in range(len(dst))) for j in range(len(src)))


def test_L_minus1_derivative(V2):
    for u in [V2.monomial([(0, 1)]), V2.monomial([(0, 2), (1, 1)]), V2.conformal_vector()]:
        for w in [V2.vacuum(), V2.monomial([(1, 1)])]:
            assert lminus1_mismatch(V2, u, w, 3) is None


# -- homogeneous and cylinder operators ---------------------------------------


def test_homogeneous_modes(V1):
    a = V1.generator(0)
    om = V1.conformal_vector()
    one = V1.vacuum()
    for mono in V1.space.basis_upto(3):
        w = FockVector(V1.space.sector, {mono: V1.space.one})
        for n in range(-3, 4):
            assert V1.homogeneous_mode(a, n, w) == V1.space.apply_element((1,), n, w)
            assert V1.homogeneous_mode(om, n, w) == V1.virasoro_mode(n, w)
            assert V1.homogeneous_mode(one, n, w) == (w if n == 0 else FockVector(w.sector))


def _cylinder_oracle(voa, u, v, order):
    """Brute-force composition with sympy: sum_n u_n v e^{hy} (e^y-1)^{-n-1}."""
    y = sympy.Symbol("y")
    out = {}
    for h, part in voa.components(u).items():
        top = int(voa.Y.top_mode(part, v))
        for n in range(-order - 1, top + 1):
            vec = voa.vertex_mode(part, n, v)
            if not vec:
                continue
            ser = sympy.series(sympy.exp(h * y) * (sympy.exp(y) - 1) ** (-n - 1), y, 0, order + 1).removeO()
            poly = sympy.Poly(sympy.expand(ser * y ** (top + 2)), y)
            for (e,), c in poly.terms():
                e -= top + 2
                if e <= order:
                    c = Fraction(int(c.p), int(c.q))
                    for m, x in vec.terms.items():
                        out[(e, m)] = out.get((e, m), 0) + x.to_rational() * c
    return {k: c for k, c in out.items() if c}


def _flatten(series):
    out = {}
    for (e,), vec in series.items():
        for m, x in vec.terms.items():
            out[(int(e), m)] = x.to_rational()
    return out


@pytest.mark.parametrize("which", ["aa", "omega-a", "mixed"])
def test_cylinder_against_composition(V1, which):
    a = V1.generator(0)
    u, v = {
        "aa": (a, a),
        "omega-a": (V1.conformal_vector(), a),
        "mixed": (a + V1.monomial([(0, 2)]), V1.monomial([(0, 1), (0, 1)])),
    }[which]
    got = _flatten(V1.cylinder_image(u, v, 3))
    assert got == _cylinder_oracle(V1, u, v, 3)


def test_cylinder_vacuum(V2):
    v = V2.monomial([(0, 2), (1, 1)])
    s = V2.cylinder_image(V2.vacuum(), v, 4)
    assert list(s.items()) == [((Fraction(0),), v)]


def test_cylinder_singular_part(V2):
    # (1/2) sum_q Y[a_q, y] a_q = (d/2) y^-2 + regular, with -d/24 at y^0 on the vacuum
    total = {}
    for a in range(2):
        g = V2.generator(a)
        for (e,), vec in V2.cylinder_image(g, g, 2).items():
            total[e] = total[e] + vec * Fraction(1, 2) if e in total else vec * Fraction(1, 2)
    assert min(total) == -2
    assert total[Fraction(-2)] == V2.vacuum() * 1
    assert Fraction(-1) not in total or not total[Fraction(-1)]
    assert total[Fraction(0)].coeff(()) == q(Fraction(-2, 24))


# -- identity checkers ----------------------------------------------------------


def test_untwisted_examples(V1):
    a = V1.generator(0)
    one = V1.vacuum()
    r = check_untwisted_identity("weak_comm", a, a, one, V1, window=3)
    assert r.ok and r.detail["k"] == 2
    assert check_untwisted_identity("skew", a, a, one, V1, window=4).ok
    assert check_untwisted_identity("jacobi", a, a, one, V1, window=3).ok


@pytest.mark.parametrize("kind", UNTWISTED_IDS)
def test_all_untwisted_identities_pass(V2, kind):
    u = V2.monomial([(0, 1)])
    v = V2.monomial([(1, 1), (0, 1)])
    ws = [V2.vacuum(), V2.monomial([(1, 1)])]
    r = check_untwisted_identity(kind, u, v, ws, V2, window=2)
    assert r.ok, r.line()


def test_minimal_parameters(V2):
    ctx = untwisted_context(V2)
    a = V2.generator(0)
    om = V2.conformal_vector()
    ws = [V2.vacuum(), a, om]
    assert minimal_k(ctx, a, a, ws, 3)[0] == 2
    assert minimal_k(ctx, om, a, ws, 3)[0] == 2
    assert minimal_k(ctx, om, om, ws, 3)[0] == 4
    assert minimal_l(ctx, a, a, a, 3)[0] == 2
    assert minimal_l(ctx, a, a, V2.vacuum(), 3)[0] == 0


def test_mwa_vacuum_reduces_to_vertex_operator(V2):
    ctx = untwisted_context(V2)
    u = V2.monomial([(0, 2), (1, 1)])
    for w in [V2.vacuum(), V2.monomial([(1, 1)])]:
        assert mwa_mismatch(ctx, u, V2.vacuum(), w, 0, 0, 2) is None


def test_mwa_too_small_k_gives_witness(V2):
    ctx = untwisted_context(V2)
    a = V2.generator(0)
    bad = mwa_mismatch(ctx, a, a, V2.vacuum(), 1, 0, 2)
    assert bad is not None
    assert mwa_mismatch(ctx, a, a, V2.vacuum(), 2, 0, 2) is None


def test_varwass_ordering(V1):
    # the limit identity holds with Y(v,x2)Y(u,x1); the swapped order fails
    ctx = untwisted_context(V1)
    a = V1.generator(0)
    om = V1.conformal_vector()
    assert varwass_mismatch(ctx, a, om, a, 2, 2) is None
    assert varwass_mismatch(ctx, a, om, a, 2, 2, swap=True) is not None


def _corrupted(voa):
    good = untwisted_series_fn(voa.space)

    def fn(um, wm, wmax):
        out = good(um, wm, wmax)
        return {n: ({m: c * 2 for m, c in t.items()} if n == -2 else t) for n, t in out.items()}

    return Context(voa, VertexMap(voa.space, voa.space, fn), 1)


def test_jacobi_detects_corruption(V1):
    ctx = _corrupted(V1)
    a = V1.generator(0)
    bad = jacobi_mismatch(ctx, a, a, V1.vacuum(), 2)
    assert bad is not None
    exps, lhs, rhs = bad
    assert lhs != rhs


def test_unknown_identity(V1):
    with pytest.raises(ValueError):
        check_untwisted_identity("nope", V1.vacuum(), V1.vacuum(), V1.vacuum(), V1)


_MONOS = [[(0, 1)], [(1, 1)], [(0, 2)], [(0, 1), (1, 1)], [(1, 1), (1, 1)]]


@st.composite
def elements(draw):
    V = voa_for(SKEWED)
    picks = draw(st.lists(st.sampled_from(range(len(_MONOS))), min_size=1, max_size=2, unique=True))
    out = FockVector(V.space.sector)
    for i in picks:
        out = out + V.monomial(_MONOS[i]) * draw(st.integers(-3, 3).filter(bool))
    return out


@settings(max_examples=15, deadline=None)
@given(elements(), elements())
def test_random_jacobi_and_skew(u, v):
    V = voa_for(SKEWED)
    ctx = untwisted_context(V)
    for w in [V.vacuum(), V.monomial([(0, 1)])]:
        assert jacobi_mismatch(ctx, u, v, w, 1) is None
    assert skew_mismatch(V, u, v, 3) is None
