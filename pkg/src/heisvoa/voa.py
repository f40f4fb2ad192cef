"""The Heisenberg vertex operator algebra S and windowed identity checkers.

Vertex operators are accessed mode by mode through :class:`VertexMap`,
which caches the whole truncated series ``Y(u, x) w`` per pair of
monomials.  The same class serves the twisted module, so the checkers
below are written for a module whose modes lie in (1/p)Z; the untwisted
case is p = 1 with the algebra acting on itself.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

from . import formal as F
from .exact import CycNum, as_rat, binom_general, root_of_unity
from .heis import (
    TWISTED,
    UNTWISTED,
    UNTWISTED_EIGEN,
    FockSpace,
    FockVector,
    Setup,
    acc,
    deriv_coeff,
    field_product_series,
    mono_weight_num,
    quadratic_apply,
)
from .report import NOT_FOUND, Report, Timer, verdict

KMAX = 8


# ---------------------------------------------------------------------------
# mode access


class VertexMap:
    """Modes of a vertex operator map from S (source) to a Fock space.

    ``series_fn(umono, wmono, wmax_num)`` returns ``{N_num: terms}`` for the
    monomial u acting on the monomial w, keeping results of weight
    numerator at most ``wmax_num``.
    """

    def __init__(self, source: FockSpace, target: FockSpace, series_fn, seeds: bool = False):
        self.source = source
        self.space = target
        self.p = target.p
        self._fn = series_fn
        # seeds: the vacuum and single-factor fields are computed directly
        self._seeds = seeds
        self._cache = {}
        self._lock = threading.Lock()

    def _seed_mode(self, umono, wmono, n_num):
        sp = self.space
        if not umono:
            return {wmono: sp.one} if n_num == -self.p else {}
        (a, k), = umono
        # Y(e_a(-k)1, x) = (1/(k-1)!) d^{k-1} e_a(x): u_N = C(-m-1, k-1) e_a(m), m = N - k + 1
        m_num = n_num + (k + 1) * self.p
        if not sp.allowed(a, m_num):
            return {}
        b = deriv_coeff(m_num, self.p, -k)
        if not b:
            return {}
        out = sp.apply_raw(a, m_num, {wmono: sp.one})
        return {m: c * b for m, c in out.items()}

    def mono_modes(self, umono, wmono, need: int) -> dict:
        key = (umono, wmono)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None and hit[0] >= need:
            return hit[1]
        wmax = need if hit is None else max(need, hit[0] + max(2 * self.p, hit[0] // 2))
        modes = self._fn(umono, wmono, wmax)
        with self._lock:
            self._cache[key] = (wmax, modes)
        return modes

    def _need(self, umono, wmono, n_num):
        return mono_weight_num(umono) * self.p + mono_weight_num(wmono) - n_num - self.p

    def mode(self, u: FockVector, n, w: FockVector) -> FockVector:
        """u_n w (coefficient of x^{-n-1} in Y(u, x) w)."""
        n_num = as_rat(n) * self.p
        out = {}
        if n_num.denominator == 1:
            n_num = int(n_num)
            for um, uc in u.terms.items():
                seed = self._seeds and len(um) <= 1
                for wm, wc in w.terms.items():
                    need = self._need(um, wm, n_num)
                    if need < 0:
                        continue
                    if seed:
                        t = self._seed_mode(um, wm, n_num)
                    else:
                        t = self.mono_modes(um, wm, need).get(n_num)
                    if t:
                        s = uc * wc
                        for m, c in t.items():
                            acc(out, m, c * s)
        return FockVector(self.space.sector, out)

    def series(self, u: FockVector, w: FockVector, wmax) -> dict:
        """``{n: u_n w}`` for all modes whose result has weight <= wmax."""
        W = int(as_rat(wmax) * self.p)
        out = {}
        for um, uc in u.terms.items():
            for wm, wc in w.terms.items():
                modes = self.mono_modes(um, wm, W)
                s = uc * wc
                for n_num, t in modes.items():
                    tgt = out.setdefault(n_num, {})
                    for m, c in t.items():
                        if mono_weight_num(m) <= W:
                            acc(tgt, m, c * s)
        return {
            Fraction(k, self.p): FockVector(self.space.sector, v) for k, v in sorted(out.items()) if v
        }

    def top_mode(self, u: FockVector, w: FockVector) -> Fraction:
        """An upper bound on the modes n with u_n w != 0."""
        wu = max((mono_weight_num(m) for m in u.terms), default=0)
        ww = max((mono_weight_num(m) for m in w.terms), default=0)
        return Fraction(wu * self.p + ww - self.p, self.p)


def monomial_factors(space: FockSpace, umono):
    """Field factors ``(coords, n)`` of a monomial of S, for field_product_series."""
    one = space.one
    return [(((a, one),), -k) for a, k in umono]


def untwisted_series_fn(space: FockSpace):
    def fn(umono, wmono, wmax):
        return field_product_series(space, monomial_factors(space, umono), wmono, wmax)

    return fn


# ---------------------------------------------------------------------------
# the algebra


class VOA:
    """The Heisenberg vertex operator algebra S of a setup.

    ``basis="std"`` uses the standard basis of h; ``basis="eigen"`` uses
    the eigenbasis of nu, on which nu acts diagonally.
    """

    def __init__(self, setup: Setup, basis: str = "std"):
        self.setup = setup
        self.basis = basis
        sector = UNTWISTED if basis == "std" else UNTWISTED_EIGEN
        self.space = FockSpace(setup, sector)
        self.Y = VertexMap(self.space, self.space, untwisted_series_fn(self.space), seeds=True)

    # -- distinguished vectors ------------------------------------------------
    def vacuum(self) -> FockVector:
        return self.space.vacuum()

    def generator(self, a: int, n: int = 1) -> FockVector:
        """e_a(-n)1 for the basis element e_a."""
        return self.space.monomial([(a, -n)])

    def monomial(self, factors) -> FockVector:
        return self.space.monomial([(a, -n) for a, n in factors])

    def conformal_vector(self) -> FockVector:
        """(1/2) sum K_ab e_a(-1) e_b(-1) 1 with K the inverse pairing."""
        K = self.space.casimir
        terms = {}
        for a in range(self.space.n):
            for b in range(self.space.n):
                if K[a][b]:
                    acc(terms, tuple(sorted(((a, -1), (b, -1)))), K[a][b] * Fraction(1, 2))
        return FockVector(self.space.sector, terms)

    def weight(self, v: FockVector):
        ws = {mono_weight_num(m) for m in v.terms}
        if len(ws) != 1:
            raise ValueError("vector is not homogeneous")
        return ws.pop()

    def components(self, v: FockVector) -> dict:
        out = {}
        for m, c in v.terms.items():
            out.setdefault(mono_weight_num(m), {})[m] = c
        return {k: FockVector(v.sector, t) for k, t in sorted(out.items())}

    def nu(self, v: FockVector, r: int = 1) -> FockVector:
        """nu^r on S."""
        r %= self.setup.p
        if r == 0:
            return v
        sp = self.space
        if sp.sector == UNTWISTED_EIGEN:
            cls = self.setup.eigen.classes
            out = {}
            for m, c in v.terms.items():
                acc(out, m, c * root_of_unity(self.setup.p, r * sum(cls[a] for a, _ in m)))
            return FockVector(sp.sector, out)
        out = {}
        for m, c in v.terms.items():
            partial = {(): c}
            for a, k in m:
                img = self.setup.act(self.setup.std_vector(a), r)
                nxt = {}
                for mono, cc in partial.items():
                    for b, x in enumerate(img):
                        if x:
                            acc(nxt, tuple(sorted(mono + ((b, k),))), cc * x)
                partial = nxt
            for mono, cc in partial.items():
                acc(out, mono, cc)
        return FockVector(sp.sector, out)

    # -- operators --------------------------------------------------------------
    def vertex_mode(self, v: FockVector, n: int, w: FockVector) -> FockVector:
        return self.Y.mode(v, n, w)

    def vertex_series(self, v: FockVector, w: FockVector, wmax) -> dict:
        return self.Y.series(v, w, wmax)

    def virasoro_mode(self, n: int, w: FockVector) -> FockVector:
        """L(n) = (1/2) sum K_ab sum_j :e_a(j) e_b(n-j):."""
        return quadratic_apply(self.space, n, _one, w)

    def homogeneous_mode(self, v: FockVector, n: int, w: FockVector) -> FockVector:
        """Coefficient of x^{-n} in X(v, x) = Y(x^{L(0)} v, x)."""
        out = FockVector(self.space.sector)
        for h, part in self.components(v).items():
            out = out + self.Y.mode(part, n + h - 1, w)
        return out

    def cylinder_image(self, u: FockVector, v: FockVector, y_order: int) -> F.Series:
        """Y[u, y] v = Y(e^{y L(0)} u, e^y - 1) v through y^{y_order}."""
        terms = {}
        lowest = 0
        for h, part in self.components(u).items():
            top = self.Y.top_mode(part, v)
            lowest = min(lowest, -int(top) - 1)
            eh = _exp_series(h, y_order + int(top) + 2)
            for n in range(-y_order - 1, int(top) + 1):
                vec = self.Y.mode(part, n, v)
                if not vec:
                    continue
                # (e^y - 1)^{-n-1} = y^{-n-1} g(y)^{-n-1}, g = (e^y - 1)/y
                s = -n - 1
                need = y_order - s
                if need < 0:
                    continue
                gs = _power(_expm1_over_y(need), s, need)
                coeffs = _mul(eh, gs, need)
                for i, c in enumerate(coeffs):
                    if c:
                        key = (Fraction(s + i),)
                        t = vec * c
                        terms[key] = terms[key] + t if key in terms else t
        return F.Series.from_terms(
            ("y",), (1,), terms, self.setup.p, window={"y": (None, y_order)}, support={"y": (lowest, None)}
        )


def _one(j, i):
    return 1


# truncated power series with Fraction coefficients (lists, index = power)


def _exp_series(h, n):
    return [Fraction(h) ** k / factorial(k) for k in range(n + 1)]


def _expm1_over_y(n):
    return [Fraction(1, factorial(k + 1)) for k in range(n + 1)]


def _mul(a, b, n):
    out = [Fraction(0)] * (n + 1)
    for i, x in enumerate(a[: n + 1]):
        if x:
            for j, y in enumerate(b[: n + 1 - i]):
                out[i + j] += x * y
    return out


def _inverse(a, n):
    out = [Fraction(0)] * (n + 1)
    out[0] = 1 / a[0]
    for k in range(1, n + 1):
        s = sum((a[i] * out[k - i] for i in range(1, min(k, len(a) - 1) + 1)), Fraction(0))
        out[k] = -s / a[0]
    return out


def _power(a, s, n):
    base = a if s >= 0 else _inverse(a, n)
    out = [Fraction(1)] + [Fraction(0)] * n
    for _ in range(abs(s)):
        out = _mul(out, base, n)
    return out


# ---------------------------------------------------------------------------
# checker context


@dataclass
class Context:
    """A module M for S: the algebra, its map Y_M, and the period p."""

    voa: VOA
    Y: VertexMap
    p: int

    @property
    def module(self) -> FockSpace:
        return self.Y.space

    def zero(self) -> FockVector:
        return FockVector(self.module.sector)

    def nu_mix(self, u: FockVector, weights) -> FockVector:
        """sum_r weights[r] nu^r u."""
        out = FockVector(self.voa.space.sector)
        for r, c in enumerate(weights):
            if c:
                out = out + self.voa.nu(u, r) * c
        return out


def untwisted_context(voa: VOA) -> Context:
    return Context(voa, voa.Y, 1)


def mode_range(radius, p):
    """Modes n in (1/p)Z with the exponent -n-1 inside [-radius, radius]."""
    R = int(as_rat(radius) * p)
    return [Fraction(-e, p) - 1 for e in range(-R, R + 1)]


def _vec_key(v: FockVector):
    return tuple(sorted(v.terms.items()))


def _fmt(v):
    return repr(v)


# -- Jacobi ------------------------------------------------------------------


def jacobi_mismatch(ctx: Context, u, v, w, radius, fixed=False):
    """First coefficient where the (twisted) Jacobi identity fails.

    Coefficient of x0^{-n-1} x1^{-M-1} x2^{-N-1}:
      sum_i (-1)^i C(n,i) [u_{M+n-i} v_{N+i} - (-1)^n v_{N+n-i} u_{M+i}] w
      = (1/p) sum_r sum_i w_p^{rk} C(k/p, i) (-1)^i ((nu^r u)_{n+i} v)_{N+M-i} w
    with k/p = i - M - 1.  With ``fixed`` (nu u = u) the right side uses the
    single untwisted delta instead: only integral k/p survive, with weight 1.
    """
    Y, V, p = ctx.Y, ctx.voa.Y, ctx.p
    if fixed and ctx.voa.nu(u, 1) != u:
        raise ValueError("u is not fixed by nu")
    top_uw = Y.top_mode(u, w)
    top_vw = Y.top_mode(v, w)
    top_uv = V.top_mode(u, v)
    order = ctx.voa.setup.p
    for n in mode_range(radius, 1):
        n = int(n)
        for M in mode_range(radius, p):
            for N in mode_range(radius, p):
                lhs = ctx.zero()
                i = 0
                while N + i <= top_vw:
                    b = binom_general(n, i)
                    if b:
                        inner = Y.mode(v, N + i, w)
                        if inner:
                            lhs = lhs + Y.mode(u, M + n - i, inner) * ((-1) ** i * b)
                    i += 1
                    if n >= 0 and i > n:
                        break
                i = 0
                sgn = (-1) ** (n % 2)
                while M + i <= top_uw:
                    b = binom_general(n, i)
                    if b:
                        inner = Y.mode(u, M + i, w)
                        if inner:
                            lhs = lhs - Y.mode(v, N + n - i, inner) * ((-1) ** i * b * sgn)
                    i += 1
                    if n >= 0 and i > n:
                        break
                rhs = ctx.zero()
                i = 0
                while n + i <= top_uv:
                    e = i - M - 1
                    kk = e * p
                    b = binom_general(e, i)
                    if b and fixed:
                        ur = u if e.denominator == 1 else None
                    elif b:
                        weights = [root_of_unity(order, (r * int(kk)) * (order // p)) * Fraction(1, p)
                                   for r in range(p)]
                        ur = ctx.nu_mix(u, weights)
                    if b:
                        if ur:
                            inner = V.mode(ur, n + i, v)
                            if inner:
                                rhs = rhs + Y.mode(inner, N + M - i, w) * ((-1) ** i * b)
                    i += 1
                if lhs != rhs:
                    return ({"x0": str(-n - 1), "x1": str(-M - 1), "x2": str(-N - 1)}, _fmt(lhs), _fmt(rhs))
    return None


# -- weak commutativity ---------------------------------------------------------


def weak_comm_mismatch(ctx: Context, u, v, w, k, radius):
    """sum_i C(k,i)(-1)^i [u_{M+k-i}, v_{N+i}] w = 0 on the window."""
    Y, p = ctx.Y, ctx.p
    for M in mode_range(radius, p):
        for N in mode_range(radius, p):
            tot = ctx.zero()
            for i in range(k + 1):
                c = comb(k, i) * (-1) ** i
                a, b = M + k - i, N + i
                tot = tot + (Y.mode(u, a, Y.mode(v, b, w)) - Y.mode(v, b, Y.mode(u, a, w))) * c
            if tot:
                return ({"x1": str(-M - 1), "x2": str(-N - 1), "k": k}, _fmt(tot), "0")
    return None


def minimal_k(ctx: Context, u, v, ws, radius, kmax=KMAX):
    """Smallest k <= kmax for which weak commutativity holds on every w."""
    witness = None
    for k in range(kmax + 1):
        bad = None
        for w in ws:
            bad = weak_comm_mismatch(ctx, u, v, w, k, radius)
            if bad:
                break
        if bad is None:
            return k, witness
        witness = bad
    return None, witness


# -- weak associativity -----------------------------------------------------------


def weak_assoc_mismatch(ctx: Context, u, v, w, l, radius):
    """P((x0+x2)^l Y(u,x0+x2)Y(v,x2)w) = (x2+x0)^l (1/p) sum_r w^{-lrp} Y(Y(nu^r u,x0)v,x2)w.

    Compared at x0^A x2^C, A integer, C in (1/p)Z, |A|,|C| <= radius.
    """
    Y, V, p = ctx.Y, ctx.voa.Y, ctx.p
    l = as_rat(l)
    order = ctx.voa.setup.p
    lp = int(l * p)
    weights = [root_of_unity(order, (-lp * r) * (order // p)) * Fraction(1, p) for r in range(p)]
    ubar = ctx.nu_mix(u, weights)
    top_vw = Y.top_mode(v, w)
    top_uv = V.top_mode(u, v)
    R = int(radius)
    for A in range(-R, R + 1):
        for Cn in range(-R * p, R * p + 1):
            C = Fraction(Cn, p)
            lhs = ctx.zero()
            j = 0
            while True:
                b = j - C - 1
                if b > top_vw:
                    break
                m = l - 1 - j - A
                coef = binom_general(l - m - 1, j)
                if coef:
                    inner = Y.mode(v, b, w)
                    if inner:
                        lhs = lhs + Y.mode(u, m, inner) * coef
                j += 1
            rhs = ctx.zero()
            i = 0
            while i - A - 1 <= top_uv:
                coef = binom_general(l, i)
                if coef and ubar:
                    inner = V.mode(ubar, i - A - 1, v)
                    if inner:
                        rhs = rhs + Y.mode(inner, l - i - C - 1, w) * coef
                i += 1
                if l.denominator == 1 and l >= 0 and i > l:
                    break
            if lhs != rhs:
                return ({"x0": str(A), "x2": str(C), "l": str(l)}, _fmt(lhs), _fmt(rhs))
    return None


def minimal_l(ctx: Context, u, v, w, radius, lmax=KMAX):
    witness = None
    for ln in range(lmax * ctx.p + 1):
        l = Fraction(ln, ctx.p)
        bad = weak_assoc_mismatch(ctx, u, v, w, l, radius)
        if bad is None:
            return l, witness
        witness = bad
    return None, witness


# -- modified weak associativity (formal-series route) ----------------------------


class CertificateFailure(ArithmeticError):
    def __init__(self, witness):
        super().__init__(str(witness))
        self.witness = witness


def certify_lower(s: F.Series, var, bound) -> F.Series:
    """Record a lower support bound in ``var`` after checking the stored terms."""
    i = s.index(var)
    q = s.dens[i]
    bn = F._num_ceil(bound, q)
    for key, c in s.terms.items():
        if key[i] < bn:
            exps = {v: str(Fraction(x, d)) for v, x, d in zip(s.vars, key, s.dens)}
            raise CertificateFailure((exps, repr(c), f"below certified bound {bound}"))
    slo = list(s.sup_lo)
    slo[i] = bn
    lo = list(s.lo)
    if lo[i] is not None and lo[i] > bn:
        raise CertificateFailure((var, "window does not reach the bound", str(bound)))
    return F.Series(s.vars, s.dens, s.terms, s.lo, s.hi, slo, s.sup_hi, s.order)


def product_series(ctx: Context, u, inner_modes, x1_hi, x2_hi):
    """Y_M(u, x1) applied to ``{x2 exponent: vector}``, as a Series in (x1, x2)."""
    Y, p = ctx.Y, ctx.p
    terms = {}
    for f, vec in inner_modes.items():
        top = Y.top_mode(u, vec)
        a = top
        while -a - 1 <= x1_hi:
            out = Y.mode(u, a, vec)
            if out:
                terms[(-a - 1, f)] = out
            a -= Fraction(1, p)
    return terms


def resolved_limit(ctx: Context, u, inner_modes, w_weight, k, s, x2_out, x0_out, x2_lo):
    """lim_{x1^{1/p} -> w^s (x2+x0)^{1/p}} (x1-x2)^k Y_M(u,x1) [inner](x2).

    ``inner_modes`` maps x2 exponents (up to the needed bound) to vectors;
    ``x2_lo`` certifies its lower support.  Returns a Series in (x2, x0),
    exact for x2 exponents <= x2_out and 0 <= x0 exponent <= x0_out.
    Raises CertificateFailure if terms appear below the x1 bound that
    weak commutativity guarantees.
    """
    p = ctx.p
    order = ctx.voa.setup.p
    wu = max(mono_weight_num(m) for m in u.terms)
    e_min = -(Fraction(wu) + as_rat(w_weight))
    x1_hi = x2_out + x0_out - as_rat(x2_lo)
    x2_hi = x2_out + x0_out - e_min
    inner = {f: v for f, v in inner_modes.items() if f <= x2_hi}
    terms = product_series(ctx, u, inner, x1_hi, x2_hi)
    A = F.Series.from_terms(
        ("x1", "x2"), (p, p), terms, order,
        window={"x1": (None, x1_hi), "x2": (None, x2_hi)},
        support={"x2": (x2_lo, None)},
    )
    res = F.Series.from_terms(
        ("x1", "x2"), (p, p),
        {(Fraction(k - i), Fraction(i)): CycNum.rational(order, comb(k, i) * (-1) ** i) for i in range(k + 1)},
        order,
    )
    Q = F.mul(res, A)
    Q = certify_lower(Q, "x1", e_min)
    out = F.substitute_limit(Q, "x1", s, ("x2", "x0"), {"x0": (0, x0_out), "x2": (None, x2_out)})
    return out


def mwa_mismatch(ctx: Context, u, v, w, k, s, radius):
    """Modified weak associativity on the window, through the formal engine."""
    Y, V, p = ctx.Y, ctx.voa.Y, ctx.p
    order = ctx.voa.setup.p
    R = as_rat(radius)
    x0_out = R + k
    wv = ctx.voa.weight(v) if v.terms else 0
    ww = max(Fraction(mono_weight_num(m), p) for m in w.terms)
    x2_lo = -(wv + ww)
    # inner Y_M(v, x2) w for x2 exponents up to the bound needed
    wu = max(mono_weight_num(m) for m in u.terms)
    x2_need = R + x0_out + wu + ww
    inner = {}
    for b, vec in Y.series(v, w, wv + ww + x2_need + 1).items():
        f = -b - 1
        if f <= x2_need:
            inner[f] = vec
    try:
        lhs = resolved_limit(ctx, u, inner, ww, k, s, R, x0_out, x2_lo)
    except CertificateFailure as exc:
        return exc.witness
    # right side: x0^k Y_M(Y(nu^{-s} u, x0) v, x2) w
    weights = [0] * p
    weights[(-s) % p] = 1
    us = ctx.nu_mix(u, weights)
    terms = {}
    top = V.top_mode(us, v) if us else Fraction(-1)
    a = top
    while k - a - 1 <= x0_out and us:
        if k - a - 1 >= 0:
            uv = V.mode(us, a, v)
            if uv:
                for b, vec in Y.series(uv, w, max(Fraction(0), ctx.voa.weight(uv) + ww + R + 1)).items():
                    f = -b - 1
                    if f <= R:
                        key = (f, Fraction(k - a - 1))
                        terms[key] = terms[key] + vec if key in terms else vec
        a -= 1
    rhs = F.Series.from_terms(("x2", "x0"), (p, 1), terms, order, window={"x2": (None, R), "x0": (0, x0_out)})
    return F.first_mismatch(lhs, rhs)


def minimal_mwa_k(ctx: Context, u, v, w, s, radius, kmax=KMAX):
    witness = None
    for k in range(kmax + 1):
        bad = mwa_mismatch(ctx, u, v, w, k, s, radius)
        if bad is None:
            return k, witness
        witness = bad
    return None, witness


# -- the other limit relation ------------------------------------------------------


def varwass_mismatch(ctx: Context, u, v, w, l, radius, swap=False):
    """lim_{x0 -> -x2+x1} (x2+x0)^l (1/p) sum_r w^{-lrp} Y_M(Y(nu^r u,x0)v,x2)w
       = P_int(x1^l Y_M(v,x2) Y_M(u,x1) w).

    The left side's x2 support is certified from below by -(wt v + wt w)
    on the part of the series feeding the window.  ``swap`` compares with
    x1^l Y_M(u,x2) Y_M(v,x1) w instead.
    """
    Y, V, p = ctx.Y, ctx.voa.Y, ctx.p
    order = ctx.voa.setup.p
    l = as_rat(l)
    lp = int(l * p)
    weights = [root_of_unity(order, (-lp * r) * (order // p)) * Fraction(1, p) for r in range(p)]
    ubar = ctx.nu_mix(u, weights)
    wv = ctx.voa.weight(v)
    ww = max(Fraction(mono_weight_num(m), p) for m in w.terms)
    g_lo = -(wv + ww)
    m_lo = -(max(mono_weight_num(m) for m in u.terms) + wv)  # x0 support of Y(u, x0) v
    top_uv = V.top_mode(u, v)
    R = int(radius)
    H = {}

    def h_coeff(e0, e2):
        key = (e0, e2)
        if key not in H:
            val = ctx.zero()
            a = -e0 - 1
            if ubar and a <= top_uv:
                uv = V.mode(ubar, a, v)
                if uv:
                    val = Y.mode(uv, -e2 - 1, w)
            H[key] = val
        return H[key]

    def g_coeff(m, c):
        tot = ctx.zero()
        for i in range(0, m - m_lo + 1):
            b = binom_general(l, i)
            if b:
                h = h_coeff(m - i, c - l + i)
                if h:
                    tot = tot + h * b
        return tot

    step = Fraction(1, p)
    m_hi = int(R + R - g_lo)
    for m in range(m_lo, m_hi + 1):
        for t in range(1, 2 * p + 1):
            g = g_coeff(m, g_lo - t * step)
            if g:
                return ({"x0": str(m), "x2": str(g_lo - t * step), "l": str(l)}, _fmt(g), "below certified bound")
    for j in range(0, R + 1):
        for cn in range(-R * p, R * p + 1):
            c = Fraction(cn, p)
            lhs = ctx.zero()
            for m in range(m_lo, int(c + j - g_lo) + 1):
                b = binom_general(m, j)
                if b:
                    g = g_coeff(m, c + j - m)
                    if g:
                        lhs = lhs + g * (b * (-1) ** ((m - j) % 2))
            if swap:
                rhs = Y.mode(u, -c - 1, Y.mode(v, l - 1 - j, w))
            else:
                rhs = Y.mode(v, -c - 1, Y.mode(u, l - 1 - j, w))
            if lhs != rhs:
                return ({"x1": str(j), "x2": str(c), "l": str(l)}, _fmt(lhs), _fmt(rhs))
    return None


# -- untwisted-only relations -------------------------------------------------------


def skew_mismatch(voa: VOA, u, v, radius):
    """u_n v = sum_i (-1)^{n+i+1} L(-1)^i/i! v_{n+i} u."""
    Y = voa.Y
    top = Y.top_mode(v, u)
    for n in mode_range(radius, 1):
        n = int(n)
        lhs = Y.mode(u, n, v)
        rhs = FockVector(voa.space.sector)
        i = 0
        while n + i <= top:
            t = Y.mode(v, n + i, u)
            for _ in range(i):
                t = voa.virasoro_mode(-1, t)
            rhs = rhs + t * Fraction((-1) ** ((n + i + 1) % 2), factorial(i))
            i += 1
        if lhs != rhs:
            return ({"x": str(-n - 1)}, _fmt(lhs), _fmt(rhs))
    return None


def lminus1_mismatch(voa: VOA, u, w, radius):
    """[L(-1), u_n] w = (L(-1)u)_n w = -n u_{n-1} w."""
    Y = voa.Y
    Lu = voa.virasoro_mode(-1, u)
    for n in mode_range(radius, 1):
        n = int(n)
        br = voa.virasoro_mode(-1, Y.mode(u, n, w)) - Y.mode(u, n, voa.virasoro_mode(-1, w))
        der = Y.mode(Lu, n, w)
        expect = Y.mode(u, n - 1, w) * (-n)
        if br != der or der != expect:
            return ({"x": str(-n - 1)}, _fmt(br), _fmt(expect))
    return None


# ---------------------------------------------------------------------------
# checker front end

UNTWISTED_IDS = ("jacobi", "skew", "weak_comm", "weak_assoc", "L-1_bracket", "mwa", "varwass")
EQ_TAGS = {
    "jacobi": "jacobi",
    "skew": "skew-symmetry",
    "weak_comm": "weak-commutativity",
    "weak_assoc": "weak-associativity",
    "L-1_bracket": "L(-1)-bracket",
    "mwa": "modified-weak-associativity",
    "varwass": "limit-associativity",
}


def check_untwisted_identity(kind, u, v, w, voa: VOA, window=3, param=None) -> Report:
    """Verify one untwisted identity on the window; returns a Report.

    ``param`` fixes k (weak_comm, mwa) or l (weak_assoc, varwass); when it
    is None the smallest working value up to 8 is searched and recorded.
    """
    if kind not in UNTWISTED_IDS:
        raise ValueError(f"unknown identity {kind!r}")
    ctx = untwisted_context(voa)
    ws = w if isinstance(w, (list, tuple)) else [w]
    cid = f"untwisted-{kind}"
    eq = EQ_TAGS[kind]
    with Timer() as t:
        if kind == "jacobi":
            mm = _first(jacobi_mismatch(ctx, u, v, x, window) for x in ws)
            rep = verdict(cid, eq, mm)
        elif kind == "skew":
            rep = verdict(cid, eq, skew_mismatch(voa, u, v, window))
        elif kind == "L-1_bracket":
            rep = verdict(cid, eq, _first(lminus1_mismatch(voa, u, x, window) for x in ws))
        elif kind == "weak_comm":
            rep = _search_report(cid, eq, param, lambda k: _first(
                weak_comm_mismatch(ctx, u, v, x, k, window) for x in ws), "k", range(KMAX + 1))
        elif kind == "weak_assoc":
            rep = _search_report(cid, eq, param, lambda l: _first(
                weak_assoc_mismatch(ctx, u, v, x, l, window) for x in ws), "l", range(KMAX + 1))
        elif kind == "mwa":
            rep = _search_report(cid, eq, param, lambda k: _first(
                mwa_mismatch(ctx, u, v, x, k, 0, window) for x in ws), "k", range(KMAX + 1))
        else:
            rep = _search_report(cid, eq, param, lambda l: _first(
                varwass_mismatch(ctx, u, v, x, l, window) for x in ws), "l", range(KMAX + 1))
    rep.millis = t.millis
    return rep


def _first(gen):
    for x in gen:
        if x is not None:
            return x
    return None


def _search_report(cid, eq, param, test, name, candidates):
    """Fixed parameter: pass/fail.  Otherwise report the smallest passing value."""
    if param is not None:
        return verdict(cid, eq, test(param), **{name: param})
    last = None
    for c in candidates:
        bad = test(c)
        if bad is None:
            return Report(cid, eq, "pass", None, 0.0, {name: c, "last_failure": last})
        last = bad
    return Report(cid, eq, NOT_FOUND, str(last), 0.0, {name: None})


# ---------------------------------------------------------------------------
# matrices on graded pieces


class OperatorSlice:
    """A single mode operator, with exact matrices built lazily per weight."""

    def __init__(self, space: FockSpace, apply_fn, shift):
        self.space = space
        self._apply = apply_fn
        self.shift = as_rat(shift)
        self._mats = {}
        self._lock = threading.Lock()

    def __call__(self, w: FockVector) -> FockVector:
        return self._apply(w)

    def matrix(self, weight):
        """``(source basis, target basis, rows)`` on the given source weight."""
        weight = as_rat(weight)
        with self._lock:
            hit = self._mats.get(weight)
        if hit is None:
            hit = operator_matrix(self.space, self._apply, weight, weight + self.shift)
            with self._lock:
                self._mats[weight] = hit
        return hit


_VOAS = {}
_VOAS_LOCK = threading.Lock()


def voa_for(setup: Setup, basis: str = "std") -> VOA:
    """Shared VOA (and its operator caches) for a setup."""
    key = (setup, basis)
    with _VOAS_LOCK:
        v = _VOAS.get(key)
        if v is None:
            v = _VOAS[key] = VOA(setup, basis)
        return v


def virasoro_mode(setup: Setup, n: int) -> OperatorSlice:
    """L(n) on S as an operator slice (shifts weight by -n)."""
    voa = voa_for(setup)
    return OperatorSlice(voa.space, lambda w: voa.virasoro_mode(n, w), -n)


def mode_slice(voa: VOA, v: FockVector, n: int) -> OperatorSlice:
    """v_n as an operator slice; v must be homogeneous."""
    return OperatorSlice(voa.space, lambda w: voa.vertex_mode(v, n, w), voa.weight(v) - n - 1)



def operator_matrix(space: FockSpace, apply_fn, src_weight, dst_weight):
    """Exact matrix of a linear map between graded pieces (columns = sources)."""
    src = space.graded_basis(src_weight)
    dst = space.graded_basis(dst_weight)
    index = {m: i for i, m in enumerate(dst)}
    cols = []
    for m in src:
        img = apply_fn(FockVector(space.sector, {m: space.one}))
        col = [space.zero] * len(dst)
        for mono, c in img.terms.items():
            if mono not in index:
                raise ValueError(f"image leaves the target piece: {mono}")
            col[index[mono]] = c
        cols.append(col)
    rows = [[cols[j][i] for j in range(len(src))] for i in range(len(dst))]
    return src, dst, rows


def virasoro_bracket_mismatch(voa: VOA, max_mode: int, wmax):
    """First failure of the Virasoro relations on the basis up to wmax."""
    d = voa.setup.d
    basis = voa.space.basis_upto(wmax)
    L = voa.virasoro_mode
    for m in range(-max_mode, max_mode + 1):
        for n in range(-max_mode, max_mode + 1):
            central = Fraction(d * (m**3 - m), 12) if m + n == 0 else 0
            for mono in basis:
                w = FockVector(voa.space.sector, {mono: voa.space.one})
                lhs = L(m, L(n, w)) - L(n, L(m, w))
                rhs = L(m + n, w) * (m - n) + w * central
                if lhs != rhs:
                    return ({"m": m, "n": n, "w": mono}, _fmt(lhs), _fmt(rhs))
    return None
