from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from heisvoa import formal as F
from heisvoa.exact import CycNum
from heisvoa.heis import FockVector, mono_weight_num, preset
from heisvoa.twist import (
    TWISTED_IDS,
    TwistedModule,
    check_twisted_identity,
    construction_mismatch,
    delta_x_apply,
    exp_delta_x,
    f_factor,
    g_eigen,
    g_extended,
    g_kernel,
    g_value,
    g_value_series,
    h_series,
    module_for,
    mode_support_mismatch,
    normal_ordered_mode,
    pairing_mode_for_factors,
    pairings,
    permutation_mismatch,
    transnu_mismatch,
    twisted_vertex_pairing,
    twisted_vertex_recursive,
    twisted_virasoro,
    twisted_virasoro_mismatch,
    vacuum_weight,
)
from heisvoa.voa import jacobi_mismatch, voa_for

P1 = preset("identity", 1)
N1 = preset("neg1", 1)
N2 = preset("neg1", 2)
C3 = preset("cyclic", 3)


def rat(x):
    return CycNum.rational(1, x)


def unit(setup, a):
    return tuple(int(i == a) for i in range(setup.d))


# -- g ---------------------------------------------------------------------------


def _kernel_oracle(s, m, n):
    """Double residue by sympy: x = 1 is allowed since the integrand is homogeneous."""
    x0, x2 = sympy.symbols("x0 x2")
    s = sympy.Rational(s.numerator, s.denominator)
    num = (1 + x2) ** s * (1 + x0) ** (-s) * (1 - s + s * (1 + x0) / (1 + x2))
    deg = m + n + 2
    poly = sympy.expand(sympy.series(sympy.series(num, x0, 0, deg).removeO(), x2, 0, deg).removeO())
    # (x0 - x2)^-2 = sum_k (k+1) x0^{-2-k} x2^k
    tot = 0
    for k in range(n):
        # need x0^{m-1} x2^{n-1} overall: numerator supplies x0^{m+1+k} x2^{n-1-k}
        tot += (k + 1) * poly.coeff(x0, m + 1 + k).coeff(x2, n - 1 - k)
    return Fraction(int(sympy.fraction(tot)[0]), int(sympy.fraction(tot)[1]))


@pytest.mark.parametrize("s", [Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(1)])
def test_g_kernel_against_sympy(s):
    for m in range(1, 4):
        for n in range(1, 4):
            assert g_kernel(s, m, n) == _kernel_oracle(s, m, n)


def test_g_neg1_lowest_value():
    g = g_value((1,), 1, (1,), 1, N1)
    assert g.value == CycNum.rational(2, Fraction(1, 8))
    assert g.exponent == -2


def test_g_vanishes_untwisted():
    for m in range(1, 7):
        for n in range(1, 7):
            assert not g_value((1,), m, (1,), n, P1).value


@pytest.mark.parametrize("setup", [N1, N2, C3], ids=["neg1-d1", "neg1-d2", "cyclic3"])
def test_g_symmetry(setup):
    d = setup.d
    for a in range(d):
        for b in range(d):
            for m in range(1, 7):
                for n in range(1, 7):
                    assert g_eigen(setup, a, m, b, n) == g_eigen(setup, b, n, a, m)
                    x, y = unit(setup, a), unit(setup, b)
                    assert g_value(x, m, y, n, setup).value == g_value(y, n, x, m, setup).value


@pytest.mark.parametrize("setup", [N1, N2, C3], ids=["neg1-d1", "neg1-d2", "cyclic3"])
def test_g_extended_identity(setup):
    for a in range(setup.d):
        for b in range(setup.d):
            x, y = unit(setup, a), unit(setup, b)
            form = setup.pair(tuple(setup.cyc(t) for t in x), tuple(setup.cyc(t) for t in y))
            for m in range(0, 7):
                for n in range(1, 7):
                    expect = form * (m if m == n else 0)
                    assert g_extended(x, m, y, n, setup) == expect


def test_g_extended_examples():
    assert g_extended((1,), 2, (1,), 2, N1) == CycNum.rational(2, 2)
    assert not g_extended((1,), 1, (1,), 3, N1)
    assert not g_extended((1,), 0, (1,), 4, N1)


def test_g_rejects_bad_indices():
    with pytest.raises(ValueError):
        g_value((1,), 0, (1,), 1, N1)
    with pytest.raises(ValueError):
        g_extended((1,), -1, (1,), 1, N1)


@pytest.mark.parametrize("setup", [N1, C3], ids=["neg1", "cyclic3"])
def test_g_series_oracle(setup):
    for a in range(setup.d):
        x = unit(setup, a)
        y = unit(setup, (a + 1) % setup.d)
        for m in range(1, 4):
            for n in range(1, 4):
                assert g_value_series(x, m, y, n, setup) == g_value(x, m, y, n, setup).value


# -- h -----------------------------------------------------------------------------


@pytest.mark.parametrize("setup", [P1, N1, N2, C3], ids=["p1", "neg1-d1", "neg1-d2", "cyclic3"])
def test_h_mode_sum_matches_closed_form(setup):
    for a in range(setup.d):
        for b in range(setup.d):
            modes, closed = h_series(unit(setup, a), unit(setup, b), setup, 3)
            assert F.first_mismatch(modes, closed) is None


def test_h_untwisted_and_half_odd_examples():
    modes, _ = h_series((1,), (1,), P1, 3)
    got = {k: v for k, v in modes.items()}
    assert got == {(Fraction(-m - 1), Fraction(m - 1)): rat(m) for m in range(1, 5)}
    modes, _ = h_series((1,), (1,), N1, 3)
    for (e1, e2), c in modes.items():
        m = e2 + 1
        assert m.denominator == 2 and c == CycNum.rational(2, m)


def _box_terms(series, lo, hi):
    return {k: c for k, c in series.items() if all(lo <= e <= hi for e in k) and c}


def test_h_symmetry_after_clearing_denominator():
    # (x1-x2)^2 h(a,b,x1,x2) is symmetric under (a,x1) <-> (b,x2)
    setup = C3
    one = CycNum.one(3)
    sq = F.Series.from_terms(
        ("x1", "x2"), (3, 3),
        {(Fraction(2), Fraction(0)): one, (Fraction(1), Fraction(1)): one * -2, (Fraction(0), Fraction(2)): one}, 3,
    )
    for a in range(3):
        for b in range(3):
            _, hab = h_series(unit(setup, a), unit(setup, b), setup, 4)
            _, hba = h_series(unit(setup, b), unit(setup, a), setup, 4)
            lhs = _box_terms(F.mul(sq, hab), -2, 2)
            swapped = {(k[1], k[0]): c for k, c in _box_terms(F.mul(sq, hba), -2, 2).items()}
            assert lhs == swapped
            assert lhs


# -- Delta_x -------------------------------------------------------------------------


@pytest.mark.parametrize("setup", [N1, N2], ids=["d1", "d2"])
def test_exp_delta_omega(setup):
    M = module_for(setup)
    om = M.voa.conformal_vector()
    out = exp_delta_x(om, M.voa)
    assert set(out) == {0, -2}
    assert out[0] == om
    assert out[-2] == M.voa.vacuum() * Fraction(setup.d, 16)


def test_delta_x_zero_untwisted():
    V = TwistedModule(P1).voa
    for mono in V.space.basis_upto(4):
        v = FockVector(V.space.sector, {mono: V.space.one})
        assert delta_x_apply(v, V) == {}


def test_delta_x_trivial_on_single_factor():
    for setup in [N1, N2, C3]:
        V = module_for(setup).voa
        for a in range(setup.d):
            for n in range(1, 4):
                assert delta_x_apply(V.monomial([(a, n)]), V) == {}


def test_exp_delta_x_terminates_with_weight_drop():
    V = module_for(N1).voa
    v = V.monomial([(0, 1)] * 4)
    out = exp_delta_x(v, V)
    assert set(out) == {0, -2, -4}
    for e, vec in out.items():
        assert all(mono_weight_num(m) == 4 + e for m in vec.terms)


# -- pairings ------------------------------------------------------------------------


def test_pairings_count():
    from math import prod

    for n in range(0, 9, 2):
        assert len(list(pairings(tuple(range(n))))) == prod(range(1, n, 2))
    assert list(pairings((1, 2, 3))) == []


def test_f_factor_odd_is_zero():
    assert not f_factor(N1, [(0, 1)])
    assert f_factor(N1, [(0, 1), (0, 1)]) == CycNum.rational(2, Fraction(1, 8))


def test_vacuum_field_is_identity():
    M = module_for(N1)
    for mono in M.space.basis_upto(2):
        w = FockVector(M.space.sector, {mono: M.space.one})
        for n_num in range(-6, 6):
            n = Fraction(n_num, 2)
            expect = w if n == -1 else FockVector(w.sector)
            assert twisted_vertex_pairing(M.voa.vacuum(), n, w, N1) == expect


def test_single_factor_is_derivative_field():
    M = module_for(N1)
    sp = M.space
    for k in range(1, 4):
        v = M.voa.monomial([(0, k)])
        for mono in sp.basis_upto(2):
            w = FockVector(sp.sector, {mono: sp.one})
            for n_num in range(-7, 7, 2):
                # coefficient of x^{-N-1} of (1/(k-1)!) d^{k-1} a(x) is C(-m-1, k-1) a(m), m = N-k+1
                m = Fraction(n_num, 2) - k + 1
                c = sympy.binomial(sympy.Rational(-m.numerator - m.denominator, m.denominator), k - 1)
                c = Fraction(int(sympy.fraction(c)[0]), int(sympy.fraction(c)[1]))
                expect = sp.apply_element((1,), m, w) * c if (m * 2) % 2 else FockVector(sp.sector)
                assert twisted_vertex_pairing(v, Fraction(n_num, 2), w, N1) == expect


def _vacuum_weight_oracle(setup):
    """(1/4) sum_k dim h_(k) (k/p)(1 - k/p)."""
    p = setup.p
    dims = [0] * p
    for c in setup.eigen.classes:
        dims[c] += 1
    return sum(Fraction(dims[k]) * Fraction(k, p) * (1 - Fraction(k, p)) for k in range(p)) / 4


@pytest.mark.parametrize("setup", [P1, N1, N2, C3], ids=["p1", "neg1-d1", "neg1-d2", "cyclic3"])
def test_vacuum_weight(setup):
    assert vacuum_weight(setup) == CycNum.rational(setup.p, _vacuum_weight_oracle(setup))


def test_vacuum_weight_neg1_is_d_over_16():
    assert vacuum_weight(N1) == CycNum.rational(2, Fraction(1, 16))
    assert vacuum_weight(N2) == CycNum.rational(2, Fraction(1, 8))


def test_omega_zero_mode_on_vacuum():
    M = module_for(N1)
    vac = M.vacuum()
    om = M.voa.conformal_vector()
    assert not normal_ordered_mode(N1, om, 1, vac)
    assert twisted_vertex_pairing(om, 1, vac, N1) == vac * Fraction(1, 16)


def test_untwisted_degeneration():
    M = module_for(P1)
    V = voa_for(P1)
    for wt in range(4):
        for um in V.space.graded_basis(wt):
            u = FockVector(M.voa.space.sector, {um: M.voa.space.one})
            ustd = FockVector(V.space.sector, {um: V.space.one})
            for wm in V.space.basis_upto(3):
                w = FockVector(M.space.sector, {wm: M.space.one})
                wstd = FockVector(V.space.sector, {wm: V.space.one})
                for n in range(-3, 4):
                    a = twisted_vertex_pairing(u, n, w, P1)
                    b = V.vertex_mode(ustd, n, wstd)
                    assert a.terms == b.terms


# -- recursive construction --------------------------------------------------------


def test_recursive_matches_pairing_neg1():
    assert construction_mismatch(N1, u_weight=3, w_weight=2, max_mode=3) is None


def test_recursive_omega_neg1():
    M = module_for(N1)
    om = M.voa.conformal_vector()
    for mono in M.space.basis_upto(3):
        w = FockVector(M.space.sector, {mono: M.space.one})
        for n_num in range(-6, 7):
            n = Fraction(n_num, 2)
            assert twisted_vertex_recursive(om, n, w, N1) == twisted_vertex_pairing(om, n, w, N1)


def test_recursive_cubic_cyclic():
    M = module_for(C3)
    v = M.voa.monomial([(0, 1)] * 3)
    for mono in M.space.basis_upto(2):
        w = FockVector(M.space.sector, {mono: M.space.one})
        for n_num in range(-9, 10):
            n = Fraction(n_num, 3)
            assert twisted_vertex_recursive(v, n, w, C3) == twisted_vertex_pairing(v, n, w, C3)


def test_recursive_resolving_power():
    M = TwistedModule(N1)
    om = M.voa.conformal_vector()
    twisted = M.Yrec.mode(om, 1, M.vacuum())
    assert twisted == M.vacuum() * Fraction(1, 16)
    assert M.k_used[((0, -1), (0, -1))] == 2


def test_direct_limit_matches_series_engine():
    a, b = TwistedModule(C3), TwistedModule(C3)
    b.generic = True
    for um in [((0, -1), (1, -1)), ((0, -2), (2, -1)), ((0, -1), (1, -1), (2, -1))]:
        for wm in a.space.basis_upto(1):
            need = mono_weight_num(um) * 3 + mono_weight_num(wm) + 6
            x = a.Yrec.mono_modes(um, wm, need)
            y = b.Yrec.mono_modes(um, wm, need)
            for n in set(x) | set(y):
                tx = {m: c for m, c in x.get(n, {}).items() if mono_weight_num(m) <= need}
                ty = {m: c for m, c in y.get(n, {}).items() if mono_weight_num(m) <= need}
                assert tx == ty


def test_permutation_invariance_small():
    assert permutation_mismatch(N2, max_factors=2, w_weight=1, max_mode=2) is None
    assert permutation_mismatch(C3, max_factors=3, max_index=1, w_weight=1, max_mode=1) is None


def test_pairing_factor_order_irrelevant():
    M = module_for(C3)
    w = FockVector(M.space.sector, {((1, -1),): M.space.one})
    a = pairing_mode_for_factors(C3, [(0, 1), (2, 2)], Fraction(-1, 3), w)
    b = pairing_mode_for_factors(C3, [(2, 2), (0, 1)], Fraction(-1, 3), w)
    assert a == b and a


# -- twisted Virasoro -------------------------------------------------------------


@pytest.mark.parametrize("setup", [N1, N2], ids=["d1", "d2"])
def test_twisted_virasoro(setup):
    assert twisted_virasoro_mismatch(setup, 3, Fraction(3)) is None


def test_twisted_virasoro_cyclic():
    assert twisted_virasoro_mismatch(C3, 2, Fraction(2)) is None


def test_twisted_L0_grading():
    M = module_for(C3)
    h = vacuum_weight(C3)
    for mono in M.space.basis_upto(2):
        w = FockVector(M.space.sector, {mono: M.space.one})
        wt = Fraction(mono_weight_num(mono), 3)
        assert twisted_virasoro(C3, 0, w) == w * (h + CycNum.rational(3, wt))


# -- twisted identities ---------------------------------------------------------------


def test_twisted_jacobi_example():
    M = module_for(N1)
    a = M.voa.generator(0)
    assert jacobi_mismatch(M.ctx, a, a, M.vacuum(), 3) is None


@pytest.mark.parametrize("setup", [P1, N1, C3], ids=["p1", "neg1", "cyclic3"])
def test_generator_weak_commutativity_k2(setup):
    M = module_for(setup)
    K = setup.eigen.pairing
    for i in range(setup.d):
        for j in range(setup.d):
            a, b = M.voa.generator(i), M.voa.generator(j)
            r = check_twisted_identity("weak_comm_t", a, b, [M.vacuum()], 0, setup, window=2)
            # orthogonal generators commute outright
            assert r.ok and r.detail["k"] == (2 if K[i][j] else 0)


def test_transnu_cyclic():
    M = module_for(C3)
    a = M.voa.generator(0)
    for s in range(3):
        assert transnu_mismatch(M.ctx, a, M.vacuum(), s, 3) is None
        r = check_twisted_identity("transnu", a, None, M.vacuum(), s, C3, window=3)
        assert r.ok


def test_transnu_on_sum_of_eigenvectors():
    M = module_for(C3)
    a = M.voa.generator(1)
    u = a + M.voa.generator(2)
    # u is not an eigenvector; equivariance still holds for the linear map
    assert transnu_mismatch(M.ctx, u, M.vacuum(), 1, 2) is None


def test_mode_support():
    M = module_for(C3)
    for a in range(3):
        for v in [M.voa.generator(a), M.voa.monomial([(a, 1), (a, 1)]), M.voa.monomial([(a, 2), ((a + 1) % 3, 1)])]:
            for mono in M.space.basis_upto(1):
                w = FockVector(M.space.sector, {mono: M.space.one})
                assert mode_support_mismatch(M.ctx, v, w, 2) is None
    with pytest.raises(ValueError):
        mode_support_mismatch(M.ctx, M.voa.generator(0) + M.voa.generator(1), M.vacuum(), 2)


@pytest.mark.parametrize("kind", TWISTED_IDS)
def test_all_twisted_identities_pass(kind):
    M = module_for(N1)
    a = M.voa.generator(0)
    r = check_twisted_identity(kind, a, a, [M.vacuum()], 1, N1, window=2)
    assert r.ok, r.line()


@pytest.mark.parametrize("s", [0, 1, 2])
def test_mwa_resolving_over_roots(s):
    M = module_for(C3)
    a, b = M.voa.generator(0), M.voa.generator(1)
    r = check_twisted_identity("mwa_t", a, b, [M.vacuum()], s, C3, window=1)
    assert r.ok and r.detail["k"] <= 2


def test_recursive_construction_passes_identities():
    M = module_for(N1)
    a = M.voa.generator(0)
    om = M.voa.conformal_vector()
    r = check_twisted_identity("twisted_jacobi", om, a, M.vacuum(), 0, N1, window=1, construction="recursive")
    assert r.ok


def test_fixed_point_collapse():
    M = module_for(N1)
    om = M.voa.conformal_vector()
    a = M.voa.generator(0)
    for w in [M.vacuum(), FockVector(M.space.sector, {((0, -1),): M.space.one})]:
        assert jacobi_mismatch(M.ctx, om, a, w, 2, fixed=True) is None
        assert jacobi_mismatch(M.ctx, om, a, w, 2) is None
    with pytest.raises(ValueError):
        jacobi_mismatch(M.ctx, a, a, M.vacuum(), 2, fixed=True)


def test_twisted_jacobi_detects_bad_module():
    M = TwistedModule(N1)
    good = M.Y._fn

    def bad(um, wm, wmax):
        out = good(um, wm, wmax)
        return {n: {m: c * 3 for m, c in t.items()} if len(um) == 2 else t for n, t in out.items()}

    M.Y._fn = bad
    M.Y._seeds = False
    a = M.voa.generator(0)
    om = M.voa.conformal_vector()
    assert jacobi_mismatch(M.ctx, a, om, M.vacuum(), 2) is not None


_GENS = [[(0, 1)], [(1, 1)], [(2, 1)], [(0, 2)], [(0, 1), (1, 1)], [(2, 1), (2, 1)]]


@settings(max_examples=8, deadline=None)
@given(st.sampled_from(_GENS), st.sampled_from(_GENS))
def test_random_twisted_jacobi_cyclic(u, v):
    M = module_for(C3)
    uu, vv = M.voa.monomial(u), M.voa.monomial(v)
    assert jacobi_mismatch(M.ctx, uu, vv, M.vacuum(), 1) is None
