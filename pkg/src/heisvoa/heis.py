"""Heisenberg data, Fock spaces S and S[nu], modes and normal ordering.

Both Fock spaces are handled by one class.  In the untwisted space the
indices refer to the standard basis of h and modes are integers.  In the
twisted space the indices refer to an eigenbasis of nu and a mode is stored
as an integer numerator ``k`` over ``p``; the factor ``(a, k)`` is allowed
only when ``k = cls[a] (mod p)``.

A monomial is a sorted tuple of ``(index, k)`` pairs with ``k < 0``, read
as a product of creation modes applied to the vacuum.
"""
from __future__ import annotations

import threading
from bisect import insort
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from . import linalg
from .exact import CycNum, as_rat, binom_general, root_of_unity

UNTWISTED = "untwisted"
UNTWISTED_EIGEN = "untwisted-eigen"
TWISTED = "twisted"


class SetupError(ValueError):
    pass


class NotSymmetric(SetupError):
    pass


class Degenerate(SetupError):
    pass


class NotIsometry(SetupError):
    pass


class WrongPeriod(SetupError):
    pass


class SectorMismatch(ValueError):
    pass


class WeightOverflow(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# setup


@dataclass(frozen=True)
class EigenData:
    projections: tuple  # P_r as matrices over Q(w_p)
    basis: tuple  # eigenvectors (standard coordinates), grouped by class
    classes: tuple  # class r of each eigenvector
    dims: tuple  # dim h_(r) for r = 0..p-1
    E: tuple  # columns are the eigenvectors
    Einv: tuple
    pairing: tuple  # <e_a, e_b>
    casimir: tuple  # inverse of pairing


@dataclass(frozen=True)
class Setup:
    d: int
    gram: tuple
    nu: tuple
    p: int
    weight_cut: Fraction = Fraction(64)
    name: str = "custom"
    eigen: EigenData = field(default=None, compare=False, repr=False)

    def summary(self) -> str:
        return f"{self.name}(d={self.d}, p={self.p}, dims={self.eigen.dims})"

    def omega(self, k: int = 1) -> CycNum:
        return root_of_unity(self.p, k)

    def cyc(self, x) -> CycNum:
        return x if isinstance(x, CycNum) else CycNum.rational(self.p, x)

    def gram_cyc(self):
        return linalg.mat(self.p, self.gram)

    def nu_cyc(self):
        return linalg.mat(self.p, self.nu)

    def pair(self, a, b) -> CycNum:
        """<a, b> for vectors in standard coordinates."""
        G = self.gram
        s = CycNum.zero(self.p)
        for i in range(self.d):
            if a[i]:
                for j in range(self.d):
                    if b[j] and G[i][j]:
                        s = s + self.cyc(a[i]) * self.cyc(b[j]) * G[i][j]
        return s

    def project(self, r: int, a) -> tuple:
        """alpha_(r): projection of a (standard coordinates) onto h_(r)."""
        P = self.eigen.projections[r % self.p]
        return linalg.matvec(P, tuple(self.cyc(x) for x in a))

    def eigen_coords(self, a) -> tuple:
        """Coordinates of a (standard coordinates) in the eigenbasis."""
        return linalg.matvec(self.eigen.Einv, tuple(self.cyc(x) for x in a))

    def std_vector(self, i: int) -> tuple:
        return tuple(CycNum.one(self.p) if j == i else CycNum.zero(self.p) for j in range(self.d))

    def eigen_vector(self, a: int) -> tuple:
        return tuple(self.eigen.E[i][a] for i in range(self.d))

    def act(self, a, power: int = 1) -> tuple:
        """nu^power applied to a vector of h."""
        v = tuple(self.cyc(x) for x in a)
        M = self.nu_cyc()
        for _ in range(power % self.p):
            v = linalg.matvec(M, v)
        return v


def _rat_matrix(rows, d, what):
    try:
        m = tuple(tuple(as_rat(x) for x in row) for row in rows)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise SetupError(f"{what}: entries must be rational ({exc})") from None
    if len(m) != d or any(len(r) != d for r in m):
        raise SetupError(f"{what} must be {d}x{d}")
    return m


def _rat_det(m):
    a = [list(r) for r in m]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c]), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return det


def _rat_matmul(a, b):
    n = len(a)
    return tuple(
        tuple(sum((a[i][t] * b[t][j] for t in range(n)), Fraction(0)) for j in range(n))
        for i in range(n)
    )


def _eigen(d, gram, nu, p) -> EigenData:
    nuc = linalg.mat(p, nu)
    powers = [linalg.identity(p, d)]
    for _ in range(p - 1):
        powers.append(linalg.matmul(nuc, powers[-1]))
    projections = []
    for r in range(p):
        acc = None
        for s in range(p):
            term = linalg.scale(root_of_unity(p, -r * s), powers[s])
            acc = term if acc is None else linalg.add(acc, term)
        projections.append(linalg.scale(CycNum.rational(p, Fraction(1, p)), acc))
    basis, classes, dims = [], [], []
    for r in range(p):
        P = projections[r]
        cols = [tuple(P[i][j] for i in range(d)) for j in range(d)]
        chosen = linalg.independent_columns(cols)
        dims.append(len(chosen))
        for j in chosen:
            basis.append(cols[j])
            classes.append(r)
    E = tuple(tuple(basis[a][i] for a in range(d)) for i in range(d))
    Einv = linalg.inverse(E)
    G = linalg.mat(p, gram)
    H = linalg.matmul(linalg.matmul(linalg.transpose(E), G), E)
    K = linalg.inverse(H)
    return EigenData(tuple(projections), tuple(basis), tuple(classes), tuple(dims), E, Einv, H, K)


def make_setup(d, gram, nu, p, weight_cut=64, strict=False, name="custom") -> Setup:
    """Validate the data and attach the eigenspace decomposition."""
    if not isinstance(d, int) or d < 1:
        raise SetupError("dimension must be a positive integer")
    if not isinstance(p, int) or p < 1:
        raise WrongPeriod("period must be a positive integer")
    G = _rat_matrix(gram, d, "gram")
    N = _rat_matrix(nu, d, "nu")
    if any(G[i][j] != G[j][i] for i in range(d) for j in range(d)):
        raise NotSymmetric("gram matrix is not symmetric")
    if _rat_det(G) == 0:
        raise Degenerate("gram matrix is degenerate")
    NT = tuple(zip(*N))
    if _rat_matmul(_rat_matmul(NT, G), N) != G:
        raise NotIsometry("nu does not preserve the form")
    ident = tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d))
    power = ident
    for k in range(1, p + 1):
        power = _rat_matmul(power, N)
        if power == ident and k < p and strict:
            raise WrongPeriod(f"nu has period {k}, smaller than {p}")
    if power != ident:
        raise WrongPeriod(f"nu^{p} is not the identity")
    eig = _eigen(d, G, N, p)
    return Setup(d, G, N, p, as_rat(weight_cut), name, eig)


def preset(name: str, d: int | None = None, weight_cut=64) -> Setup:
    """Reference setups: ``identity`` (p=1), ``neg1`` (nu=-1, p=2), ``cyclic`` (d=p)."""
    if name == "identity":
        d = d or 1
        I = [[int(i == j) for j in range(d)] for i in range(d)]
        return make_setup(d, I, I, 1, weight_cut, name=name)
    if name == "neg1":
        d = d or 1
        I = [[int(i == j) for j in range(d)] for i in range(d)]
        N = [[-int(i == j) for j in range(d)] for i in range(d)]
        return make_setup(d, I, N, 2, weight_cut, name=name)
    if name == "cyclic":
        d = d or 3
        I = [[int(i == j) for j in range(d)] for i in range(d)]
        # e_i -> e_{i+1}
        N = [[int(i == (j + 1) % d) for j in range(d)] for i in range(d)]
        return make_setup(d, I, N, d, weight_cut, name=name)
    raise SetupError(f"unknown preset {name!r}")


# ---------------------------------------------------------------------------
# Fock vectors


def _clean(terms):
    return {m: c for m, c in terms.items() if c}


class FockVector:
    """Finite combination of creation monomials with Q(w_p) coefficients."""

    __slots__ = ("sector", "terms")

    def __init__(self, sector, terms=None):
        self.sector = sector
        self.terms = _clean(terms) if terms else {}

    def _check(self, other):
        if not isinstance(other, FockVector):
            return NotImplemented
        if other.sector != self.sector:
            raise SectorMismatch(f"{self.sector} vs {other.sector}")
        return other

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        o = self._check(other)
        if o is NotImplemented:
            return o
        out = dict(self.terms)
        for m, c in o.terms.items():
            out[m] = out[m] + c if m in out else c
        return FockVector(self.sector, out)

    __radd__ = __add__

    def __neg__(self):
        return FockVector(self.sector, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        if isinstance(s, FockVector):
            return NotImplemented
        return FockVector(self.sector, {m: c * s for m, c in self.terms.items()})

    __rmul__ = __mul__

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, int) and other == 0:
            return not self.terms
        if not isinstance(other, FockVector):
            return NotImplemented
        return self.sector == other.sector and self.terms == other.terms

    __hash__ = None

    def coeff(self, mono):
        return self.terms.get(mono, 0)

    def __repr__(self):
        if not self.terms:
            return f"FockVector({self.sector}, 0)"
        parts = [f"({c})*{list(m)}" for m, c in sorted(self.terms.items())]
        return f"FockVector({self.sector}, " + " + ".join(parts) + ")"


def acc(target: dict, mono, c):
    """target[mono] += c, dropping zeros."""
    if not c:
        return
    if mono in target:
        s = target[mono] + c
        if s:
            target[mono] = s
        else:
            del target[mono]
    else:
        target[mono] = c


def mono_weight_num(mono) -> int:
    return -sum(k for _, k in mono)


# ---------------------------------------------------------------------------
# mode operators


@dataclass(frozen=True)
class ModeOp:
    """scalar * f_1 f_2 ... f_n; the rightmost factor acts first.

    Each factor is ``(index, k)`` with mode k/p.
    """

    factors: tuple
    scalar: object = 1


class FockSpace:
    """The Fock space S (untwisted) or S[nu] (twisted) of a setup.

    ``UNTWISTED_EIGEN`` is S with the eigenbasis of nu instead of the
    standard basis; on it nu acts diagonally on monomials.
    """

    def __init__(self, setup: Setup, sector: str = TWISTED):
        self.setup = setup
        self.sector = sector
        self.order = setup.p
        if sector == UNTWISTED:
            self.p = 1
            self.n = setup.d
            self.pair = setup.gram_cyc()
            self.cls = (0,) * setup.d
            self.casimir = linalg.inverse(self.pair)
        elif sector == UNTWISTED_EIGEN:
            # S written in the eigenbasis of nu, so nu acts diagonally
            self.p = 1
            self.n = setup.d
            self.pair = setup.eigen.pairing
            self.cls = (0,) * setup.d
            self.casimir = setup.eigen.casimir
        elif sector == TWISTED:
            self.p = setup.p
            self.n = setup.d
            self.pair = setup.eigen.pairing
            self.cls = setup.eigen.classes
            self.casimir = setup.eigen.casimir
        else:
            raise ValueError(f"unknown sector {sector!r}")
        self.cut_num = setup.weight_cut * self.p
        self.one = CycNum.one(self.order)
        self.zero = CycNum.zero(self.order)
        self._basis_cache = {}
        self._lock = threading.Lock()

    # -- basics -------------------------------------------------------------
    def vacuum(self) -> FockVector:
        return FockVector(self.sector, {(): self.one})

    def vector(self, terms) -> FockVector:
        return FockVector(self.sector, {tuple(sorted(m)): self.setup.cyc(c) for m, c in terms.items()})

    def monomial(self, factors) -> FockVector:
        return FockVector(self.sector, {tuple(sorted(factors)): self.one})

    def weight(self, mono) -> Fraction:
        return Fraction(mono_weight_num(mono), self.p)

    def allowed(self, a: int, k: int) -> bool:
        return (k - self.cls[a]) % self.p == 0

    def mode_value(self, k: int) -> Fraction:
        return Fraction(k, self.p)

    # -- single mode on raw dicts -------------------------------------------
    def _create(self, a, k, terms, out, scale=None):
        for mono, c in terms.items():
            if mono_weight_num(mono) - k > self.cut_num:
                raise WeightOverflow(f"weight above cut {self.setup.weight_cut}")
            lst = list(mono)
            insort(lst, (a, k))
            acc(out, tuple(lst), c if scale is None else c * scale)

    def _annihilate(self, a, k, terms, out, scale=None):
        row = self.pair[a]
        kval = Fraction(k, self.p)
        for mono, c in terms.items():
            prev = None
            for pos, (b, kb) in enumerate(mono):
                if kb != -k or (b, kb) == prev:
                    continue
                prev = (b, kb)
                if not row[b]:
                    continue
                mult = 1
                q = pos + 1
                while q < len(mono) and mono[q] == (b, kb):
                    mult += 1
                    q += 1
                coef = c * row[b] * (kval * mult)
                if scale is not None:
                    coef = coef * scale
                acc(out, mono[:pos] + mono[pos + 1 :], coef)

    def apply_raw(self, a, k, terms, scale=None) -> dict:
        if not self.allowed(a, k):
            raise ValueError(f"mode {Fraction(k, self.p)} not allowed for index {a}")
        out = {}
        if k < 0:
            self._create(a, k, terms, out, scale)
        elif k > 0:
            self._annihilate(a, k, terms, out, scale)
        return out

    def apply_element_raw(self, coords, k, terms) -> dict:
        """Mode k of the element sum_a coords[a] e_a (classes filtered)."""
        out = {}
        for a, c in coords:
            if c and self.allowed(a, k):
                if k < 0:
                    self._create(a, k, terms, out, c)
                elif k > 0:
                    self._annihilate(a, k, terms, out, c)
        return out

    # -- public API -----------------------------------------------------------
    def _vec_terms(self, w: FockVector):
        if w.sector != self.sector:
            raise SectorMismatch(f"vector in {w.sector} sector, space is {self.sector}")
        return w.terms

    def apply_mode(self, op, w: FockVector) -> FockVector:
        """Apply a ModeOp (or a single ``(index, k)`` factor) to w."""
        if isinstance(op, tuple) and len(op) == 2 and isinstance(op[0], int):
            op = ModeOp((op,), 1)
        terms = self._vec_terms(w)
        for a, k in reversed(op.factors):
            terms = self.apply_raw(a, k, terms)
            if not terms:
                break
        out = FockVector(self.sector, terms)
        if op.scalar != 1:
            out = out * op.scalar
        return out

    def element_coords(self, alpha) -> tuple:
        """``(index, coefficient)`` pairs of alpha (standard coordinates)."""
        if self.sector == UNTWISTED:
            coords = tuple(self.setup.cyc(x) for x in alpha)
        else:
            coords = self.setup.eigen_coords(alpha)
        return tuple((a, c) for a, c in enumerate(coords) if c)

    def apply_element(self, alpha, mode, w: FockVector) -> FockVector:
        """alpha(mode) on w; in S[nu] this is the mode of alpha_(p*mode)."""
        k = as_rat(mode) * self.p
        if k.denominator != 1:
            raise ValueError(f"mode {mode} not in (1/{self.p})Z")
        out = self.apply_element_raw(self.element_coords(alpha), int(k), self._vec_terms(w))
        return FockVector(self.sector, out)

    def graded_basis(self, weight) -> list:
        """Monomials of exact weight ``weight``, sorted lexicographically."""
        weight = as_rat(weight)
        if weight > self.setup.weight_cut:
            raise WeightOverflow(f"weight {weight} above cut {self.setup.weight_cut}")
        W = weight * self.p
        if W.denominator != 1 or W < 0:
            return []
        W = int(W)
        with self._lock:
            if W in self._basis_cache:
                return self._basis_cache[W]
        parts = [(a, -j) for j in range(1, W + 1) for a in range(self.n) if self.allowed(a, -j)]
        # parts ordered by decreasing size then index
        parts.sort(key=lambda f: (f[1], f[0]))
        out = []

        def rec(start, remaining, chosen):
            if remaining == 0:
                out.append(tuple(sorted(chosen)))
                return
            for i in range(start, len(parts)):
                a, k = parts[i]
                if -k <= remaining:
                    chosen.append((a, k))
                    rec(i, remaining + k, chosen)
                    chosen.pop()

        rec(0, W, [])
        out = sorted(set(out))
        with self._lock:
            self._basis_cache[W] = out
        return out

    def weights_upto(self, wmax) -> list:
        """All weights k/p with 0 <= k/p <= wmax that carry basis vectors."""
        wmax = as_rat(wmax)
        return [Fraction(k, self.p) for k in range(int(wmax * self.p) + 1) if self.graded_basis(Fraction(k, self.p))]

    def basis_upto(self, wmax) -> list:
        out = []
        for w in self.weights_upto(wmax):
            out.extend(self.graded_basis(w))
        return out


def normal_order(factors, p: int = 1) -> ModeOp:
    """Move annihilation factors (mode >= 0) to the right; no commutators."""
    factors = tuple(factors)
    cre = tuple(f for f in factors if f[1] < 0)
    ann = tuple(f for f in factors if f[1] >= 0)
    return ModeOp(cre + ann, 1)


# ---------------------------------------------------------------------------
# normal-ordered products of derivative fields


@lru_cache(maxsize=None)
def deriv_coeff(k: int, p: int, n: int) -> Fraction:
    """Coefficient of alpha(m) x^{-m-n} in (1/(n-1)!)(d/dx)^{n-1} alpha(x), m = k/p."""
    return binom_general(Fraction(-k, p) - 1, n - 1)


def field_product_series(space: FockSpace, factors, mono, wmax_num: int) -> dict:
    """Modes of :prod_l (1/(n_l-1)!) d^{n_l-1} a_l(x): applied to a monomial.

    ``factors`` is a sequence of ``(coords, n)`` where ``coords`` lists
    ``(index, coefficient)`` pairs of the element a_l in the space's basis.
    Returns ``{N_num: terms}`` with N = N_num/p the mode (coefficient of
    x^{-N-1}), keeping only results of weight numerator <= ``wmax_num``.
    """
    p = space.p
    j = len(factors)
    w0 = mono_weight_num(mono)
    start = {mono: space.one}
    out = {}
    for mask in range(1 << j):
        ann = [factors[i] for i in range(j) if mask >> i & 1]
        cre = [factors[i] for i in range(j) if not mask >> i & 1]
        # key: (sum of (k + n p), weight numerator)
        states = {(0, w0): start}
        for coords, n in ann:
            new = {}
            for (key, wt), terms in states.items():
                for k in _annihilation_modes(space, coords, terms):
                    res = space.apply_element_raw(coords, k, terms)
                    if not res:
                        continue
                    b = deriv_coeff(k, p, n)
                    tgt = new.setdefault((key + k + n * p, wt - k), {})
                    for m, c in res.items():
                        acc(tgt, m, c * b)
            states = {kk: v for kk, v in new.items() if v}
            if not states:
                break
        if not states:
            continue
        for coords, n in cre:
            new = {}
            for (key, wt), terms in states.items():
                for k in range(-1, -(wmax_num - wt) - 1, -1):
                    if not any(c and space.allowed(a, k) for a, c in coords):
                        continue
                    res = space.apply_element_raw(coords, k, terms)
                    if not res:
                        continue
                    b = deriv_coeff(k, p, n)
                    tgt = new.setdefault((key + k + n * p, wt - k), {})
                    for m, c in res.items():
                        acc(tgt, m, c * b)
            states = {kk: v for kk, v in new.items() if v}
            if not states:
                break
        for (key, wt), terms in states.items():
            if wt > wmax_num:
                continue
            tgt = out.setdefault(key - p, {})
            for m, c in terms.items():
                acc(tgt, m, c)
    return {k: v for k, v in out.items() if v}


def _annihilation_modes(space, coords, terms):
    """Positive mode numerators that can act nontrivially on ``terms``."""
    ks = set()
    for mono in terms:
        for b, kb in mono:
            k = -kb
            for a, c in coords:
                if c and space.pair[a][b] and space.allowed(a, k):
                    ks.add(k)
                    break
    return sorted(ks)


def check_heisenberg(space: FockSpace, max_mode, wmax) -> tuple:
    """First failure of [a(m), b(n)] = m <a,b> delta_{m+n,0} on basis <= wmax.

    Returns None when every relation holds.
    """
    M = int(as_rat(max_mode) * space.p)
    basis = space.basis_upto(wmax)
    for a in range(space.n):
        for b in range(space.n):
            for km in range(-M, M + 1):
                if not space.allowed(a, km):
                    continue
                for kn in range(-M, M + 1):
                    if not space.allowed(b, kn):
                        continue
                    expect = space.pair[a][b] * Fraction(km, space.p) if km + kn == 0 else space.zero
                    for mono in basis:
                        t = {mono: space.one}
                        lhs = space.apply_raw(a, km, space.apply_raw(b, kn, t))
                        rhs = space.apply_raw(b, kn, space.apply_raw(a, km, t))
                        diff = dict(lhs)
                        for m, c in rhs.items():
                            acc(diff, m, -c)
                        acc(diff, mono, -expect)
                        if diff:
                            return (a, Fraction(km, space.p), b, Fraction(kn, space.p), mono)
    return None


def quadratic_apply(space: FockSpace, n_num: int, phi, w: FockVector, casimir=None) -> FockVector:
    """(1/2) sum_{a,b} K_ab sum_j phi(j, n-j) :e_a(j) e_b(n-j): applied to w.

    Mode j runs over (1/p)Z (numerators given to ``phi`` as Fractions);
    K is the inverse of the pairing, so the sum does not depend on the
    basis.  Zero modes act as zero.  The sum is locally finite.
    """
    K = space.casimir if casimir is None else casimir
    p = space.p
    half = Fraction(1, 2)
    out = {}
    pairs = [(a, b, K[a][b]) for a in range(space.n) for b in range(space.n) if K[a][b]]
    for mono, c in space._vec_terms(w).items():
        present = {-k for _, k in mono}
        js = set(present) | {n_num - j for j in present}
        if n_num < 0:
            js.update(range(n_num + 1, 0))
        single = {mono: c}
        for j in sorted(js):
            i = n_num - j
            if j == 0 or i == 0:
                continue
            f = phi(Fraction(j, p), Fraction(i, p))
            if not f:
                continue
            for a, b, kab in pairs:
                if not (space.allowed(a, j) and space.allowed(b, i)):
                    continue
                # normal order: apply the annihilator (positive mode) first
                if j > 0:
                    first, second = (a, j), (b, i)
                else:
                    first, second = (b, i), (a, j)
                t = space.apply_raw(first[0], first[1], single)
                if t:
                    t = space.apply_raw(second[0], second[1], t)
                for m, v in t.items():
                    acc(out, m, v * kab * (f * half))
    return FockVector(space.sector, out)
