from fractions import Fraction

import pytest
import sympy

from heisvoa import linalg
from heisvoa.exact import CycNum, root_of_unity
from heisvoa.heis import (
    TWISTED,
    UNTWISTED,
    Degenerate,
    FockSpace,
    NotIsometry,
    NotSymmetric,
    SectorMismatch,
    WeightOverflow,
    WrongPeriod,
    check_heisenberg,
    make_setup,
    normal_order,
    preset,
)


def test_setup_examples():
    assert preset("identity").eigen.dims == (1,)
    assert preset("neg1").eigen.dims == (0, 1)
    assert preset("cyclic").eigen.dims == (1, 1, 1)
    assert preset("neg1", d=2).eigen.dims == (0, 2)


def test_setup_validation():
    with pytest.raises(NotSymmetric):
        make_setup(2, [[1, 1], [0, 1]], [[1, 0], [0, 1]], 1)
    with pytest.raises(Degenerate):
        make_setup(2, [[1, 1], [1, 1]], [[1, 0], [0, 1]], 1)
    with pytest.raises(NotIsometry):
        make_setup(1, [[1]], [[2]], 1)
    with pytest.raises(WrongPeriod):
        make_setup(1, [[1]], [[-1]], 1)
    with pytest.raises(WrongPeriod):
        make_setup(1, [[1]], [[1]], 2, strict=True)
    assert make_setup(1, [[1]], [[1]], 2).eigen.dims == (1, 0)


@pytest.mark.parametrize(
    "setup",
    [preset("identity", 2), preset("neg1", 2), preset("cyclic", 3), preset("cyclic", 4),
     make_setup(2, [[2, 1], [1, 2]], [[0, 1], [1, 0]], 2)],
    ids=lambda s: s.summary(),
)
def test_projection_invariants(setup):
    p, d = setup.p, setup.d
    P = setup.eigen.projections
    total = P[0]
    for r in range(1, p):
        total = linalg.add(total, P[r])
    assert total == linalg.identity(p, d)
    for r in range(p):
        for s in range(p):
            prod = linalg.matmul(P[r], P[s])
            assert prod == (P[r] if r == s else linalg.scale(CycNum.zero(p), P[r]))
    assert sum(setup.eigen.dims) == d
    # eigenvectors really are eigenvectors
    for a, r in enumerate(setup.eigen.classes):
        v = setup.eigen_vector(a)
        assert setup.act(v) == tuple(x * root_of_unity(p, r) for x in v)
    # pairing block structure
    H = setup.eigen.pairing
    for a, ra in enumerate(setup.eigen.classes):
        for b, rb in enumerate(setup.eigen.classes):
            if (ra + rb) % p:
                assert not H[a][b]


def test_eigen_decomposition_matches_sympy_eigenvalues():
    s = preset("cyclic", 3)
    M = sympy.Matrix(s.nu)
    w = sympy.exp(2 * sympy.pi * sympy.I / 3)
    for r in range(3):
        ev = sympy.nsimplify(w**r)
        nullity = len((M - ev * sympy.eye(3)).nullspace(simplify=True))
        assert nullity == s.eigen.dims[r]


def test_untwisted_mode_relations():
    sp = FockSpace(preset("identity"), UNTWISTED)
    vac = sp.vacuum()
    v = sp.apply_mode((0, -1), vac)
    assert sp.apply_mode((0, 1), v) == vac
    for n in range(0, 4):
        assert sp.apply_mode((0, n), vac) == 0
    assert sp.apply_element((1,), 1, sp.apply_element((1,), -1, vac)) == vac


def test_twisted_half_mode():
    sp = FockSpace(preset("neg1"), TWISTED)
    vac = sp.vacuum()
    w = sp.apply_element((1,), Fraction(-1, 2), vac)
    assert sp.apply_element((1,), Fraction(1, 2), w) == vac * Fraction(1, 2)
    with pytest.raises(ValueError):
        sp.apply_mode((0, 2), vac)  # integral mode not allowed in h_(1)


def test_sector_and_weight_errors():
    s = preset("neg1", weight_cut=2)
    tw = FockSpace(s, TWISTED)
    un = FockSpace(s, UNTWISTED)
    with pytest.raises(SectorMismatch):
        tw.apply_mode((0, -1), un.vacuum())
    with pytest.raises(WeightOverflow):
        tw.apply_mode((0, -5), tw.vacuum())
    with pytest.raises(WeightOverflow):
        tw.graded_basis(3)


def test_normal_order():
    assert normal_order([(0, 1), (1, -1)]).factors == ((1, -1), (0, 1))
    assert normal_order([(0, -1), (1, -2)]).factors == ((0, -1), (1, -2))
    assert normal_order([(0, 1), (0, -1)], p=2).factors == ((0, -1), (0, 1))


def _partitions(n):
    from sympy.functions.combinatorial.numbers import partition

    return int(partition(n))


def test_graded_basis():
    un = FockSpace(preset("identity"), UNTWISTED)
    assert un.graded_basis(2) == [((0, -2),), ((0, -1), (0, -1))]
    assert len(un.graded_basis(4)) == 5
    for w in range(9):
        assert len(un.graded_basis(w)) == _partitions(w)
    tw = FockSpace(preset("neg1"), TWISTED)
    assert len(tw.graded_basis(Fraction(3, 2))) == 2
    assert tw.graded_basis(1) == [((0, -1), (0, -1))]
    assert tw.graded_basis(Fraction(1, 3)) == []


def test_graded_dimensions_two_dim():
    # d=2: coefficients of prod (1-q^n)^{-2}
    q = sympy.Symbol("q")
    gen = sympy.series(sympy.prod([(1 - q**n) ** -2 for n in range(1, 7)]), q, 0, 7).removeO()
    un = FockSpace(preset("identity", 2), UNTWISTED)
    for w in range(7):
        assert len(un.graded_basis(w)) == gen.coeff(q, w)


@pytest.mark.parametrize(
    "setup,sector",
    [(preset("identity"), UNTWISTED), (preset("neg1", 2), TWISTED), (preset("cyclic", 3), TWISTED),
     (preset("identity", 2), UNTWISTED)],
)
def test_heisenberg_relations(setup, sector):
    sp = FockSpace(setup, sector)
    assert check_heisenberg(sp, 3, 3) is None


def test_heisenberg_relation_nonstandard_gram():
    s = make_setup(2, [[2, 1], [1, 2]], [[0, 1], [1, 0]], 2)
    assert check_heisenberg(FockSpace(s, TWISTED), 2, 2) is None
    assert check_heisenberg(FockSpace(s, UNTWISTED), 2, 2) is None
