"""Sparse formal Laurent series with exponents in (1/p)Z.

A :class:`Series` is the truncation of an exact (possibly infinite) formal
series to a box window.  Inside the window every stored coefficient is the
true one; outside it nothing is claimed.  Each variable also carries
optional support bounds ``sup_lo``/``sup_hi`` certifying that the exact
series has no terms beyond them.  Products and substitutions consult these
certificates to decide which output coefficients are finite sums.

Exponents are stored as integer numerators over a per-variable
denominator.  Coefficients are :class:`~heisvoa.exact.CycNum` values or
any vector type supporting ``+``, ``-``, scalar ``*`` and truth testing.
"""
from __future__ import annotations

from fractions import Fraction
from math import lcm

from .exact import CycNum, as_rat, binom_general, root_of_unity
from .report import Timer, verdict

INF = None


class FormalError(ArithmeticError):
    pass


class UnboundedConvolution(FormalError):
    pass


class UnboundedSubstitution(FormalError):
    pass


class OutsideWindow(FormalError):
    pass


class DenominatorMismatch(FormalError):
    pass


def _min(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _max(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def _add_bound(a, b):
    return None if a is None or b is None else a + b


def _num(e, den, var="?"):
    x = as_rat(e) * den
    if x.denominator != 1:
        raise DenominatorMismatch(f"exponent {e} of {var} not in (1/{den})Z")
    return int(x)


class Series:
    __slots__ = ("vars", "dens", "terms", "lo", "hi", "sup_lo", "sup_hi", "order")

    def __init__(self, vars, dens, terms, lo, hi, sup_lo, sup_hi, order):
        self.vars = tuple(vars)
        self.dens = tuple(dens)
        self.terms = terms
        self.lo = tuple(lo)
        self.hi = tuple(hi)
        self.sup_lo = tuple(sup_lo)
        self.sup_hi = tuple(sup_hi)
        self.order = order

    # -- construction -------------------------------------------------------
    @classmethod
    def from_terms(cls, vars, dens, terms, order=1, window=None, support=None):
        """Build from ``{exponent tuple (Fractions): coeff}``.

        Without a window the series is taken to be exact and finite.
        ``window`` and ``support`` map a variable name to ``(lo, hi)`` with
        ``None`` meaning unbounded.
        """
        vars = tuple(vars)
        dens = tuple(dens)
        t = {}
        for e, c in terms.items():
            if not c:
                continue
            key = tuple(_num(x, q, v) for x, q, v in zip(e, dens, vars))
            t[key] = t[key] + c if key in t else c
        t = {k: c for k, c in t.items() if c}
        n = len(vars)
        if window is None:
            lo = hi = (None,) * n
            if t:
                slo = tuple(min(k[i] for k in t) for i in range(n))
                shi = tuple(max(k[i] for k in t) for i in range(n))
            else:
                slo = shi = (0,) * n
        else:
            lo, hi = [], []
            for v, q in zip(vars, dens):
                a, b = window.get(v, (None, None))
                lo.append(None if a is None else _num_ceil(a, q))
                hi.append(None if b is None else _num_floor(b, q))
            slo, shi = [], []
            support = support or {}
            for v, q in zip(vars, dens):
                a, b = support.get(v, (None, None))
                slo.append(None if a is None else _num_ceil(a, q))
                shi.append(None if b is None else _num_floor(b, q))
            t = {k: c for k, c in t.items() if _inside(k, lo, hi)}
        return cls(vars, dens, t, lo, hi, slo, shi, order)

    @classmethod
    def monomial(cls, vars, dens, exps, coeff=1, order=1):
        c = coeff if not isinstance(coeff, (int, Fraction)) else CycNum.rational(order, coeff)
        return cls.from_terms(vars, dens, {tuple(as_rat(e) for e in exps): c}, order)

    @classmethod
    def zero(cls, vars, dens, order=1):
        return cls.from_terms(vars, dens, {}, order)

    # -- inspection ---------------------------------------------------------
    def index(self, var) -> int:
        try:
            return self.vars.index(var)
        except ValueError:
            raise KeyError(f"variable {var!r} not in {self.vars}") from None

    def exponent(self, key, var) -> Fraction:
        i = self.index(var)
        return Fraction(key[i], self.dens[i])

    def items(self):
        """``(exponent tuple of Fractions, coeff)`` in sorted order."""
        for k in sorted(self.terms):
            yield tuple(Fraction(x, q) for x, q in zip(k, self.dens)), self.terms[k]

    def window(self) -> dict:
        return {
            v: (None if a is None else Fraction(a, q), None if b is None else Fraction(b, q))
            for v, q, a, b in zip(self.vars, self.dens, self.lo, self.hi)
        }

    def is_exact(self) -> bool:
        return all(a is None and b is None for a, b in zip(self.lo, self.hi))

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        head = ",".join(f"{v}/{q}" for v, q in zip(self.vars, self.dens))
        return f"Series[{head}]({len(self.terms)} terms, window={self.window()})"

    def _zero_coeff(self):
        return CycNum.zero(self.order)


def _num_ceil(x, q):
    y = as_rat(x) * q
    return -((-y.numerator) // y.denominator)


def _num_floor(x, q):
    y = as_rat(x) * q
    return y.numerator // y.denominator


def _inside(key, lo, hi):
    for x, a, b in zip(key, lo, hi):
        if a is not None and x < a:
            return False
        if b is not None and x > b:
            return False
    return True


def _covers_lo(s, i):
    return s.lo[i] is None or (s.sup_lo[i] is not None and s.lo[i] <= s.sup_lo[i])


def _covers_hi(s, i):
    return s.hi[i] is None or (s.sup_hi[i] is not None and s.hi[i] >= s.sup_hi[i])


def _finite_in(s, i):
    return (
        s.sup_lo[i] is not None and s.sup_hi[i] is not None and _covers_lo(s, i) and _covers_hi(s, i)
    )


def extend(s: Series, vars, dens) -> Series:
    """Embed s into a larger variable list (constant in the new variables)."""
    vars, dens = tuple(vars), tuple(dens)
    if vars == s.vars and dens == s.dens:
        return s
    pos = []
    for v, q in zip(s.vars, s.dens):
        if v not in vars:
            raise KeyError(f"variable {v!r} missing from {vars}")
        j = vars.index(v)
        if dens[j] % q:
            raise DenominatorMismatch(f"cannot refine {v} from 1/{q} to 1/{dens[j]}")
        pos.append((j, dens[j] // q))
    n = len(vars)

    def conv(key):
        out = [0] * n
        for (j, f), x in zip(pos, key):
            out[j] = x * f
        return tuple(out)

    def conv_b(bounds, default):
        out = [default] * n
        for (j, f), x in zip(pos, bounds):
            out[j] = None if x is None else x * f
        return tuple(out)

    terms = {conv(k): c for k, c in s.terms.items()}
    return Series(
        vars,
        dens,
        terms,
        conv_b(s.lo, None),
        conv_b(s.hi, None),
        conv_b(s.sup_lo, 0),
        conv_b(s.sup_hi, 0),
        s.order,
    )


def _common(a: Series, b: Series):
    vars = list(a.vars)
    dens = list(a.dens)
    for v, q in zip(b.vars, b.dens):
        if v in vars:
            i = vars.index(v)
            if dens[i] != q:
                raise DenominatorMismatch(f"variable {v} has denominators {dens[i]} and {q}")
        else:
            vars.append(v)
            dens.append(q)
    if a.order != b.order:
        raise ValueError("series over different cyclotomic fields")
    return extend(a, vars, dens), extend(b, vars, dens)


def restrict(s: Series, window: dict | None) -> Series:
    """Intersect the window of s with a caller box ``{var: (lo, hi)}``."""
    if not window:
        return s
    lo, hi = list(s.lo), list(s.hi)
    for v, (a, b) in window.items():
        if v not in s.vars:
            continue
        i = s.index(v)
        q = s.dens[i]
        if a is not None:
            lo[i] = _max(lo[i], _num_ceil(a, q))
        if b is not None:
            hi[i] = _min(hi[i], _num_floor(b, q))
    terms = {k: c for k, c in s.terms.items() if _inside(k, lo, hi)}
    return Series(s.vars, s.dens, terms, lo, hi, s.sup_lo, s.sup_hi, s.order)


def with_den(s: Series, var, den: int) -> Series:
    i = s.index(var)
    dens = list(s.dens)
    dens[i] = den
    return extend(s, s.vars, dens)


# ---------------------------------------------------------------------------
# arithmetic


def add(a: Series, b: Series) -> Series:
    a, b = _common(a, b)
    n = len(a.vars)
    lo = [_max(a.lo[i], b.lo[i]) for i in range(n)]
    hi = [_min(a.hi[i], b.hi[i]) for i in range(n)]
    slo = [None if a.sup_lo[i] is None or b.sup_lo[i] is None else min(a.sup_lo[i], b.sup_lo[i]) for i in range(n)]
    shi = [None if a.sup_hi[i] is None or b.sup_hi[i] is None else max(a.sup_hi[i], b.sup_hi[i]) for i in range(n)]
    terms = {}
    for src in (a.terms, b.terms):
        for k, c in src.items():
            if not _inside(k, lo, hi):
                continue
            if k in terms:
                s = terms[k] + c
                if s:
                    terms[k] = s
                else:
                    del terms[k]
            else:
                terms[k] = c
    return Series(a.vars, a.dens, terms, lo, hi, slo, shi, a.order)


def scale(c, a: Series) -> Series:
    if not c:
        terms = {}
    else:
        terms = {k: v * c for k, v in a.terms.items()}
        terms = {k: v for k, v in terms.items() if v}
    return Series(a.vars, a.dens, terms, a.lo, a.hi, a.sup_lo, a.sup_hi, a.order)


def neg(a: Series) -> Series:
    return scale(-1, a)


def sub(a: Series, b: Series) -> Series:
    return add(a, neg(b))


def _is_vector(c):
    return not isinstance(c, (CycNum, int, Fraction))


def mul(a: Series, b: Series, window: dict | None = None) -> Series:
    """Product, exact on the largest window the support certificates allow.

    Raises UnboundedConvolution when some variable has no certificate that
    makes every output coefficient a finite sum.
    """
    a, b = _common(a, b)
    n = len(a.vars)
    lo, hi, slo, shi = [], [], [], []
    for i in range(n):
        if _finite_in(a, i):
            lo.append(_add_bound(b.lo[i], a.sup_hi[i]))
            hi.append(_add_bound(b.hi[i], a.sup_lo[i]))
            slo.append(_add_bound(b.sup_lo[i], a.sup_lo[i]))
            shi.append(_add_bound(b.sup_hi[i], a.sup_hi[i]))
        elif _finite_in(b, i):
            lo.append(_add_bound(a.lo[i], b.sup_hi[i]))
            hi.append(_add_bound(a.hi[i], b.sup_lo[i]))
            slo.append(_add_bound(a.sup_lo[i], b.sup_lo[i]))
            shi.append(_add_bound(a.sup_hi[i], b.sup_hi[i]))
        elif (
            a.sup_lo[i] is not None
            and b.sup_lo[i] is not None
            and _covers_lo(a, i)
            and _covers_lo(b, i)
        ):
            lo.append(None)
            h1 = None if a.hi[i] is None else a.hi[i] + b.sup_lo[i]
            h2 = None if b.hi[i] is None else b.hi[i] + a.sup_lo[i]
            hi.append(_min(h1, h2))
            slo.append(a.sup_lo[i] + b.sup_lo[i])
            shi.append(None)
        elif (
            a.sup_hi[i] is not None
            and b.sup_hi[i] is not None
            and _covers_hi(a, i)
            and _covers_hi(b, i)
        ):
            hi.append(None)
            l1 = None if a.lo[i] is None else a.lo[i] + b.sup_hi[i]
            l2 = None if b.lo[i] is None else b.lo[i] + a.sup_hi[i]
            lo.append(_max(l1, l2))
            shi.append(a.sup_hi[i] + b.sup_hi[i])
            slo.append(None)
        else:
            raise UnboundedConvolution(f"no finiteness certificate in variable {a.vars[i]}")
    out = Series(a.vars, a.dens, {}, lo, hi, slo, shi, a.order)
    out = restrict(out, window)
    lo, hi = out.lo, out.hi
    terms = {}
    bvec = any(_is_vector(c) for c in b.terms.values())
    for ka, ca in a.terms.items():
        for kb, cb in b.terms.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            if not _inside(k, lo, hi):
                continue
            c = cb * ca if bvec else ca * cb
            if k in terms:
                s = terms[k] + c
                if s:
                    terms[k] = s
                else:
                    del terms[k]
            elif c:
                terms[k] = c
    out.terms = terms
    return out


def coeff(a: Series, exps):
    """Coefficient at an exponent tuple (or ``{var: exponent}``)."""
    if isinstance(exps, dict):
        exps = tuple(exps.get(v, 0) for v in a.vars)
    key = tuple(_num(e, q, v) for e, q, v in zip(exps, a.dens, a.vars))
    if not _inside(key, a.lo, a.hi):
        raise OutsideWindow(f"exponent {tuple(exps)} outside window {a.window()}")
    return a.terms.get(key, a._zero_coeff())


def residue(a: Series, var) -> Series:
    """The coefficient series of var^{-1}."""
    i = a.index(var)
    q = a.dens[i]
    if (a.lo[i] is not None and a.lo[i] > -q) or (a.hi[i] is not None and a.hi[i] < -q):
        raise OutsideWindow(f"{var}^-1 outside window")
    keep = [j for j in range(len(a.vars)) if j != i]
    pick = lambda t: tuple(t[j] for j in keep)  # noqa: E731
    terms = {pick(k): c for k, c in a.terms.items() if k[i] == -q}
    return Series(
        pick(a.vars), pick(a.dens), terms, pick(a.lo), pick(a.hi), pick(a.sup_lo), pick(a.sup_hi), a.order
    )


def derivative(a: Series, var) -> Series:
    i = a.index(var)
    q = a.dens[i]
    terms = {}
    for k, c in a.terms.items():
        if k[i]:
            nk = list(k)
            nk[i] -= q
            terms[tuple(nk)] = c * Fraction(k[i], q)
    sh = lambda x: None if x is None else x - q  # noqa: E731
    lo = list(a.lo)
    hi = list(a.hi)
    lo[i], hi[i] = sh(lo[i]), sh(hi[i])
    slo, shi = list(a.sup_lo), list(a.sup_hi)
    slo[i], shi[i] = sh(slo[i]), sh(shi[i])
    return Series(a.vars, a.dens, terms, lo, hi, slo, shi, a.order)


def _root(order, den, k):
    """w_den^k inside Q(w_order)."""
    if order % den:
        raise DenominatorMismatch(f"w_{den} is not in Q(w_{order})")
    return root_of_unity(order, k * (order // den))


def rotate(a: Series, var, r: int, p: int | None = None) -> Series:
    """The limit x^{1/p} -> w_p^r x^{1/p} applied termwise."""
    i = a.index(var)
    q = a.dens[i]
    p = p or q
    if q % p and p % q:
        raise DenominatorMismatch("incompatible denominators")
    terms = {}
    for k, c in a.terms.items():
        e = Fraction(k[i], q) * p  # exponent times p
        if e.denominator != 1:
            raise DenominatorMismatch(f"exponent {Fraction(k[i], q)} not in (1/{p})Z")
        terms[k] = c * _root(a.order, p, r * int(e))
    return Series(a.vars, a.dens, terms, a.lo, a.hi, a.sup_lo, a.sup_hi, a.order)


def project_integral(a: Series, var, q: int, p: int | None = None) -> Series:
    """Keep the terms whose var-exponent lies in q/p + Z."""
    i = a.index(var)
    den = a.dens[i]
    p = p or den
    terms = {}
    for k, c in a.terms.items():
        e = Fraction(k[i], den) - Fraction(q, p)
        if e.denominator == 1:
            terms[k] = c
    return Series(a.vars, a.dens, terms, a.lo, a.hi, a.sup_lo, a.sup_hi, a.order)


def project_by_averaging(a: Series, var, q: int, p: int | None = None) -> Series:
    """(1/p) sum_r w_p^{-qr} (x^{1/p} -> w_p^r x^{1/p}) a."""
    p = p or a.dens[a.index(var)]
    total = None
    for r in range(p):
        term = scale(_root(a.order, p, -q * r), rotate(a, var, r, p))
        total = term if total is None else add(total, term)
    return scale(Fraction(1, p), total)


def binom_expand(varA, varB, e, kmax: int, den: int = 1, order: int = 1, sign: int = 1) -> Series:
    """(x_A + sign*x_B)^e in nonnegative integral powers of x_B, k <= kmax.

    Exact when e is a nonnegative integer and kmax >= e.
    """
    if kmax is None:
        raise ValueError("binomial expansion needs a finite bound in the second variable")
    e = as_rat(e)
    terms = {}
    finite = e.denominator == 1 and e >= 0
    top = min(kmax, int(e)) if finite else kmax
    for k in range(top + 1):
        c = binom_general(e, k) * (sign**k)
        if c:
            terms[(e - k, Fraction(k))] = CycNum.rational(order, c)
    if finite and kmax >= e:
        return Series.from_terms((varA, varB), (den, 1), terms, order)
    return Series.from_terms(
        (varA, varB),
        (den, 1),
        terms,
        order,
        window={varB: (None, kmax)},
        support={varA: (None, e), varB: (0, None)},
    )


def delta_series(varNum, varDen, s: int = 0, p: int = 1, radius=2, order=None) -> Series:
    """delta(w_p^s (x_num/x_den)^{1/p}) on the box |exponents| <= radius."""
    order = order or p
    R = _num_floor(radius, p)
    terms = {}
    for n in range(-R, R + 1):
        terms[(Fraction(n, p), Fraction(-n, p))] = _root(order, p, s * n)
    return Series.from_terms(
        (varNum, varDen),
        (p, p),
        terms,
        order,
        window={varNum: (-as_rat(radius), as_rat(radius)), varDen: (-as_rat(radius), as_rat(radius))},
    )


def delta_binomial(lead, tail, den, *, p=1, s=0, tail_sign=1, den_sign=1, lead_sign=1,
                   prefactor=None, box, order=None) -> Series:
    """prefactor * delta(w_p^s ((lead_sign*x_lead + tail_sign*x_tail)/(den_sign*x_den))^{1/p}).

    Each power (lead + tail)^{n/p} is expanded in nonnegative powers of the
    tail variable.  ``box`` maps every variable to finite ``(lo, hi)``
    bounds; the result is exact on that box.  Signs other than +1 on the lead
    or denominator variable are only meaningful for p = 1.
    """
    order = order or p
    if p != 1 and (den_sign != 1 or lead_sign != 1):
        raise ValueError("negated fractional powers are ambiguous")
    prefactor = dict(prefactor or {})
    vars = (lead, tail, den)
    dens = (p, 1, p)
    pre = tuple(as_rat(prefactor.get(v, 0)) for v in vars)
    dlo, dhi = (as_rat(x) for x in box[den])
    tlo, thi = (as_rat(x) for x in box[tail])
    # den exponent: pre_den - n/p
    nmin = _num_ceil(pre[2] - dhi, p)
    nmax = _num_floor(pre[2] - dlo, p)
    kmax = int(thi - pre[1]) if thi - pre[1] >= 0 else -1
    terms = {}
    for n in range(nmin, nmax + 1):
        e = Fraction(n, p)
        phase = _root(order, p, s * n)
        sgn = den_sign ** (n % 2)
        for k in range(0, kmax + 1):
            b = binom_general(e, k)
            if not b:
                continue
            c = phase * (b * tail_sign ** k * lead_sign ** ((n - k) % 2) * sgn)
            key = (pre[0] + e - k, pre[1] + k, pre[2] - e)
            terms[key] = terms[key] + c if key in terms else c
    return Series.from_terms(vars, dens, terms, order, window={v: box[v] for v in vars})


def substitute_limit(a: Series, var, s: int, target, window: dict) -> Series:
    """x^{1/q} -> w_q^s (x_C + x_D)^{1/q}, expanded in nonnegative powers of x_D.

    ``window`` must bound the x_D exponent from above.  Requires certified
    lower support bounds in ``var`` and in x_C (when present).
    """
    varC, varD = target
    i = a.index(var)
    q = a.dens[i]
    if varD in a.vars:
        raise ValueError(f"{varD} already occurs in the series")
    if window is None or varD not in window or window[varD][1] is None:
        raise UnboundedSubstitution(f"the {varD} window must be finite")
    if a.sup_lo[i] is None or not _covers_lo(a, i):
        raise UnboundedSubstitution(f"no lower support certificate in {var}")
    if varC in a.vars:
        ic = a.index(varC)
        qc = lcm(a.dens[ic], q)
        if a.dens[ic] != qc:
            a = with_den(a, varC, qc)
        if a.sup_lo[ic] is None or not _covers_lo(a, ic):
            raise UnboundedSubstitution(f"no lower support certificate in {varC}")
    else:
        a = extend(a, a.vars + (varC,), a.dens + (q,))
        ic = a.index(varC)
        qc = q
    f = qc // q
    dlo = max(0, _num_ceil(window[varD][0], 1)) if window[varD][0] is not None else 0
    dhi = _num_floor(window[varD][1], 1)
    # faithful bound on c + d (in units 1/qc)
    h1 = None if a.hi[i] is None else a.hi[i] * f + a.sup_lo[ic]
    h2 = None if a.hi[ic] is None else a.hi[ic] + a.sup_lo[i] * f
    H = _min(h1, h2)
    keep = [j for j in range(len(a.vars)) if j != i]
    vars = tuple(a.vars[j] for j in keep) + (varD,)
    dens = tuple(a.dens[j] for j in keep) + (1,)
    jc = keep.index(ic)
    lo = [a.lo[j] for j in keep] + [dlo]
    hi = [a.hi[j] for j in keep] + [dhi]
    lo[jc] = None
    hi[jc] = None if H is None else H - dhi * qc
    slo = [a.sup_lo[j] for j in keep] + [0]
    shi = [a.sup_hi[j] for j in keep] + [None]
    slo[jc] = None
    shi[jc] = None if a.sup_hi[i] is None or a.sup_hi[ic] is None else a.sup_hi[i] * f + a.sup_hi[ic]
    out = restrict(Series(vars, dens, {}, lo, hi, slo, shi, a.order), window)
    lo, hi = out.lo, out.hi
    terms = {}
    bcache = {}
    for k, c in a.terms.items():
        m = k[i]
        ph = _root(a.order, q, s * m) if s else None
        base = [k[j] for j in keep]
        for dd in range(dlo, dhi + 1):
            key_b = (m, dd)
            if key_b not in bcache:
                bcache[key_b] = binom_general(Fraction(m, q), dd)
            b = bcache[key_b]
            if not b:
                continue
            nk = list(base) + [dd]
            nk[jc] = base[jc] + m * f - dd * qc
            nk = tuple(nk)
            if not _inside(nk, lo, hi):
                continue
            v = c * b if ph is None else c * (ph * b)
            if nk in terms:
                t = terms[nk] + v
                if t:
                    terms[nk] = t
                else:
                    del terms[nk]
            elif v:
                terms[nk] = v
    out.terms = terms
    return out


# ---------------------------------------------------------------------------
# comparison and serialization


def first_mismatch(a: Series, b: Series):
    """First exponent (sorted order) in the common window where a and b differ."""
    a, b = _common(a, b)
    n = len(a.vars)
    lo = [_max(a.lo[i], b.lo[i]) for i in range(n)]
    hi = [_min(a.hi[i], b.hi[i]) for i in range(n)]
    keys = sorted(set(a.terms) | set(b.terms))
    for k in keys:
        if not _inside(k, lo, hi):
            continue
        ca = a.terms.get(k)
        cb = b.terms.get(k)
        if ca is None or cb is None or ca != cb:
            if not ca and not cb:
                continue
            exps = tuple(Fraction(x, q) for x, q in zip(k, a.dens))
            return (dict(zip(a.vars, (str(e) for e in exps))), str(ca or 0), str(cb or 0))
    return None


def common_window_size(a: Series, b: Series) -> int:
    """Number of lattice points in the common window (None if unbounded)."""
    a, b = _common(a, b)
    size = 1
    for i in range(len(a.vars)):
        lo, hi = _max(a.lo[i], b.lo[i]), _min(a.hi[i], b.hi[i])
        if lo is None or hi is None:
            return None
        size *= max(0, hi - lo + 1)
    return size


def to_text(a: Series) -> str:
    """Line format ``exponents TAB coefficient``; exponents comma separated."""
    lines = ["# " + ",".join(f"{v}/{q}" for v, q in zip(a.vars, a.dens))]
    for exps, c in a.items():
        es = ",".join(str(e) for e in exps)
        cs = c.to_text() if isinstance(c, CycNum) else str(c)
        lines.append(f"{es}\t{cs}")
    return "\n".join(lines) + "\n"


def from_text(text: str, order: int = 1) -> Series:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].lstrip("#").strip()
    vars, dens = [], []
    for part in head.split(","):
        v, q = part.split("/")
        vars.append(v)
        dens.append(int(q))
    terms = {}
    for ln in lines[1:]:
        es, cs = ln.split("\t")
        exps = tuple(Fraction(e) for e in es.split(","))
        terms[exps] = CycNum.from_text(order, cs)
    return Series.from_terms(vars, dens, terms, order)


# ---------------------------------------------------------------------------
# delta-function identities


def _box(vars, radius):
    r = as_rat(radius)
    return {v: (-r, r) for v in vars}


def verify_delta_identity_1(p: int, radius=3):
    """delta(x) = (1/p) sum_r delta(w_p^r x^{1/p}) on |exponent| <= radius."""
    with Timer() as t:
        R = _num_floor(radius, p)
        lhs = Series.from_terms(
            ("x",), (p,), {(Fraction(n),): CycNum.one(p) for n in range(-int(radius), int(radius) + 1)},
            p, window={"x": (-as_rat(radius), as_rat(radius))},
        )
        rhs = None
        for r in range(p):
            terms = {(Fraction(n, p),): root_of_unity(p, r * n) for n in range(-R, R + 1)}
            s = Series.from_terms(("x",), (p,), terms, p, window={"x": (-as_rat(radius), as_rat(radius))})
            rhs = s if rhs is None else add(rhs, s)
        rhs = scale(Fraction(1, p), rhs)
        mm = first_mismatch(lhs, rhs)
    return verdict(f"delta-root-average p={p}", "delta-fractional-1", mm, t.millis)


def verify_delta_identity_2(p: int, r: int, radius=3):
    """x2^-1 delta(w^r((x1-x0)/x2)^{1/p}) = x1^-1 delta(w^-r((x2+x0)/x1)^{1/p})."""
    with Timer() as t:
        box = _box(("x0", "x1", "x2"), radius)
        box["x0"] = (0, as_rat(radius))
        lhs = delta_binomial("x1", "x0", "x2", p=p, s=r, tail_sign=-1, prefactor={"x2": -1}, box=box)
        rhs = delta_binomial("x2", "x0", "x1", p=p, s=-r, tail_sign=1, prefactor={"x1": -1}, box=box)
        mm = first_mismatch(lhs, rhs)
    return verdict(f"delta-fractional-shift p={p} r={r}", "delta-fractional-2", mm, t.millis,
                   terms=len(lhs))


def verify_delta_shift(radius=3):
    """x2^-1 delta((x1-x0)/x2) = x1^-1 delta((x2+x0)/x1)."""
    rep = verify_delta_identity_2(1, 0, radius)
    rep.check_id = "delta-shift"
    rep.eq = "delta-shift"
    return rep


def three_term_sides(radius=3, sign=-1):
    """Both sides of the three-term delta identity, with the chosen sign."""
    r = as_rat(radius)
    box = {"x0": (-r, r), "x1": (-r, r), "x2": (-r, r)}
    t1 = delta_binomial("x1", "x2", "x0", tail_sign=-1, prefactor={"x0": -1}, box=box)
    t2 = delta_binomial("x2", "x1", "x0", tail_sign=-1, den_sign=-1, prefactor={"x0": -1}, box=box)
    lhs = add(t1, scale(sign, t2))
    rhs = delta_binomial("x1", "x0", "x2", tail_sign=-1, prefactor={"x2": -1}, box=box)
    return lhs, rhs


def verify_three_term(radius=3):
    """x0^-1 delta((x1-x2)/x0) - x0^-1 delta((x2-x1)/(-x0)) = x2^-1 delta((x1-x0)/x2)."""
    with Timer() as t:
        lhs, rhs = three_term_sides(radius, -1)
        mm = first_mismatch(lhs, rhs)
    return verdict("delta-three-term", "delta-three-term", mm, t.millis)


def verify_substitution_property(radius=3):
    """delta(x1/x2) f(x1) = delta(x1/x2) f(x2) for f = x + x^-1."""
    with Timer() as t:
        d = delta_series("x1", "x2", radius=radius + 1)
        f1 = Series.from_terms(("x1",), (1,), {(Fraction(1),): CycNum.one(1), (Fraction(-1),): CycNum.one(1)})
        f2 = Series.from_terms(("x2",), (1,), {(Fraction(1),): CycNum.one(1), (Fraction(-1),): CycNum.one(1)})
        box = _box(("x1", "x2"), radius)
        mm = first_mismatch(mul(d, f1, box), mul(d, f2, box))
    return verdict("delta-substitution", "delta-substitution", mm, t.millis)
