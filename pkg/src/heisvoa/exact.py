"""Exact scalars: rationals, cyclotomic numbers, Bernoulli and zeta values.

``Rat`` is :class:`fractions.Fraction`.  ``CycNum`` is an element of the
cyclotomic field Q(w_p), stored as its canonical residue modulo the p-th
cyclotomic polynomial.
"""
from __future__ import annotations

import threading
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

Rat = Fraction

__all__ = [
    "Rat",
    "CycNum",
    "cyclotomic_poly",
    "bernoulli_number",
    "bernoulli_poly",
    "zeta_negative",
    "root_of_unity",
    "binom_general",
    "as_rat",
]


def as_rat(x) -> Fraction:
    """Coerce ints, Fractions and ``"a/b"`` strings to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, CycNum):
        return x.to_rational()
    raise TypeError(f"cannot interpret {x!r} as a rational")


# ---------------------------------------------------------------------------
# integer polynomials (coefficient lists, low degree first)


def _poly_divmod_int(num, den):
    num = list(num)
    q = [0] * max(len(num) - len(den) + 1, 1)
    lead = den[-1]
    for i in range(len(num) - len(den), -1, -1):
        c, r = divmod(num[i + len(den) - 1], lead)
        if r:
            raise ArithmeticError("inexact polynomial division")
        q[i] = c
        if c:
            for j, dj in enumerate(den):
                num[i + j] -= c * dj
    while len(num) > 1 and num[-1] == 0:
        num.pop()
    return q, num


def _poly_mul_int(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return out


@lru_cache(maxsize=None)
def cyclotomic_poly(p: int) -> tuple[int, ...]:
    """Integer coefficients of Phi_p, lowest degree first.

    Obtained by exact division of x^p - 1 by the product of Phi_d over the
    proper divisors d of p.
    """
    if p < 1:
        raise ValueError("order must be positive")
    xp = [-1] + [0] * (p - 1) + [1]
    prod = [1]
    for d in range(1, p):
        if p % d == 0:
            prod = _poly_mul_int(prod, list(cyclotomic_poly(d)))
    q, r = _poly_divmod_int(xp, prod)
    if any(r):
        raise ArithmeticError("x^p - 1 not divisible by proper cyclotomic factors")
    while len(q) > 1 and q[-1] == 0:
        q.pop()
    return tuple(q)


@lru_cache(maxsize=None)
def _reduction_table(p: int) -> tuple[tuple[Fraction, ...], ...]:
    """Rows giving x^i mod Phi_p for 0 <= i < 2*deg - 1."""
    phi = cyclotomic_poly(p)
    deg = len(phi) - 1
    rows = []
    cur = [Fraction(0)] * deg
    cur[0] = Fraction(1)
    for _ in range(max(2 * deg - 1, 1)):
        rows.append(tuple(cur))
        # multiply by x and reduce with x^deg = -sum phi_i x^i
        top = cur[-1]
        cur = [Fraction(0)] + cur[:-1]
        if top:
            for i in range(deg):
                cur[i] -= top * phi[i]
    return tuple(rows)


def _zero_coeffs(deg):
    return (Fraction(0),) * deg


class CycNum:
    """Element of Q(w_p), canonically reduced modulo Phi_p.

    >>> w = root_of_unity(3, 1)
    >>> 1 + w + w * w == 0
    True
    """

    __slots__ = ("p", "c")

    def __init__(self, p: int, coeffs=None):
        deg = len(cyclotomic_poly(p)) - 1
        self.p = p
        if coeffs is None:
            self.c = _zero_coeffs(deg)
            return
        coeffs = [as_rat(x) for x in coeffs]
        if len(coeffs) <= deg:
            coeffs = coeffs + [Fraction(0)] * (deg - len(coeffs))
            self.c = tuple(coeffs)
        else:
            self.c = _reduce(p, coeffs)

    @classmethod
    def _raw(cls, p, c):
        obj = object.__new__(cls)
        obj.p = p
        obj.c = c
        return obj

    @classmethod
    def rational(cls, p: int, q) -> "CycNum":
        deg = len(cyclotomic_poly(p)) - 1
        return cls._raw(p, (as_rat(q),) + (Fraction(0),) * (deg - 1))

    @classmethod
    def zero(cls, p: int) -> "CycNum":
        return cls._raw(p, _zero_coeffs(len(cyclotomic_poly(p)) - 1))

    @classmethod
    def one(cls, p: int) -> "CycNum":
        return cls.rational(p, 1)

    # -- coercion -----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, CycNum):
            if other.p != self.p:
                raise ValueError(f"mixing Q(w_{self.p}) with Q(w_{other.p})")
            return other
        if isinstance(other, (int, Fraction)):
            return CycNum.rational(self.p, other)
        return NotImplemented

    def is_rational(self) -> bool:
        return not any(self.c[1:])

    def to_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self.c[0]

    def coords(self) -> tuple[Fraction, ...]:
        return self.c

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return CycNum._raw(self.p, tuple(a + b for a, b in zip(self.c, o.c)))

    __radd__ = __add__

    def __neg__(self):
        return CycNum._raw(self.p, tuple(-a for a in self.c))

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return CycNum._raw(self.p, tuple(a - b for a, b in zip(self.c, o.c)))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return CycNum.zero(self.p)
            if other == 1:
                return self
            return CycNum._raw(self.p, tuple(a * other if a else a for a in self.c))
        if not isinstance(other, CycNum):
            return NotImplemented
        if other.p != self.p:
            raise ValueError(f"mixing Q(w_{self.p}) with Q(w_{other.p})")
        a, b = self.c, other.c
        if len(a) == 1:
            return CycNum._raw(self.p, (a[0] * b[0],))
        if not any(b[1:]):
            return self * b[0]
        if not any(a[1:]):
            return other * a[0]
        prod = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    if bj:
                        prod[i + j] += ai * bj
        return CycNum._raw(self.p, _reduce(self.p, prod))

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def inverse(self) -> "CycNum":
        if not self:
            raise ZeroDivisionError("inverse of zero in Q(w_p)")
        if self.is_rational():
            return CycNum.rational(self.p, 1 / self.c[0])
        inv = _poly_inverse_mod(list(self.c), [Fraction(x) for x in cyclotomic_poly(self.p)])
        return CycNum(self.p, inv)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return CycNum._raw(self.p, tuple(a / other for a in self.c))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = CycNum.one(self.p)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- comparison ---------------------------------------------------------
    def __bool__(self):
        return any(self.c)

    def __eq__(self, other):
        if isinstance(other, CycNum):
            return self.p == other.p and self.c == other.c
        if isinstance(other, (int, Fraction)):
            return self.c[0] == other and not any(self.c[1:])
        return NotImplemented

    def __hash__(self):
        if self.is_rational():
            return hash(self.c[0])
        return hash((self.p, self.c))

    def __repr__(self):
        return f"CycNum({self.p}, {[str(x) for x in self.c]})"

    def __str__(self):
        if self.is_rational():
            return str(self.c[0])
        parts = []
        for i, a in enumerate(self.c):
            if not a:
                continue
            mon = "" if i == 0 else ("w" if i == 1 else f"w^{i}")
            if i == 0:
                parts.append(str(a))
            elif a == 1:
                parts.append(mon)
            else:
                parts.append(f"({a})*{mon}")
        return " + ".join(parts)

    def to_text(self) -> str:
        """``num/den`` per cyclotomic coordinate, separated by ``;``."""
        return ";".join(f"{a.numerator}/{a.denominator}" for a in self.c)

    @classmethod
    def from_text(cls, p: int, text: str) -> "CycNum":
        return cls(p, [Fraction(t) for t in text.split(";")])


def _reduce(p, coeffs):
    table = _reduction_table(p)
    deg = len(table[0])
    out = list(coeffs[:deg]) + [Fraction(0)] * max(0, deg - len(coeffs))
    for i in range(deg, len(coeffs)):
        ci = coeffs[i]
        if ci:
            if i >= len(table):
                row = _power_mod(p, i)
            else:
                row = table[i]
            for j in range(deg):
                if row[j]:
                    out[j] += ci * row[j]
    return tuple(out)


@lru_cache(maxsize=None)
def _power_mod(p, i):
    table = _reduction_table(p)
    deg = len(table[0])
    # x^i = x^(i-1) * x
    prev = _power_mod(p, i - 1) if i - 1 >= len(table) else table[i - 1]
    phi = cyclotomic_poly(p)
    top = prev[-1]
    cur = [Fraction(0)] + list(prev[:-1])
    if top:
        for j in range(deg):
            cur[j] -= top * phi[j]
    return tuple(cur)


def _trim(a):
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def _pdivmod(a, b):
    a = list(a)
    b = _trim(list(b))
    if len(a) < len(b):
        return [Fraction(0)], _trim(a)
    q = [Fraction(0)] * (len(a) - len(b) + 1)
    for i in range(len(a) - len(b), -1, -1):
        c = a[i + len(b) - 1] / b[-1]
        q[i] = c
        if c:
            for j, bj in enumerate(b):
                a[i + j] -= c * bj
    return _trim(q), _trim(a[: len(b) - 1] or [Fraction(0)])


def _psub(a, b):
    n = max(len(a), len(b))
    a = list(a) + [Fraction(0)] * (n - len(a))
    b = list(b) + [Fraction(0)] * (n - len(b))
    return _trim([x - y for x, y in zip(a, b)])


def _pmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _poly_inverse_mod(a, m):
    """Inverse of a modulo m over Q via the extended Euclidean algorithm."""
    r0, r1 = _trim(list(m)), _trim(list(a))
    s0, s1 = [Fraction(0)], [Fraction(1)]
    while any(r1):
        q, r = _pdivmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _psub(s0, _pmul(q, s1))
    if len(r0) != 1 or r0[0] == 0:
        raise ZeroDivisionError("element not invertible modulo Phi_p")
    c = r0[0]
    return [x / c for x in s0]


def root_of_unity(p: int, k: int) -> CycNum:
    """w_p^k reduced modulo Phi_p."""
    if p < 1:
        raise ValueError("p must be positive")
    k %= p
    deg = len(cyclotomic_poly(p)) - 1
    coeffs = [Fraction(0)] * max(k + 1, deg)
    coeffs[k] = Fraction(1)
    return CycNum(p, coeffs)


# ---------------------------------------------------------------------------
# Bernoulli numbers, polynomials, zeta values

_bern_lock = threading.Lock()
_bern_table: list[Fraction] = [Fraction(1)]


def bernoulli_number(n: int) -> Fraction:
    """B_n with the convention B_n = B_n(0), so B_1 = -1/2."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n < len(_bern_table):
        return _bern_table[n]
    with _bern_lock:
        while len(_bern_table) <= n:
            m = len(_bern_table)
            s = sum(comb(m + 1, k) * _bern_table[k] for k in range(m))
            _bern_table.append(-s / (m + 1))
        return _bern_table[n]


def bernoulli_poly(n: int, q) -> Fraction:
    """B_n(q) = sum_k C(n,k) B_k q^(n-k)."""
    q = as_rat(q)
    return sum(
        (comb(n, k) * bernoulli_number(k) * q ** (n - k) for k in range(n + 1)),
        Fraction(0),
    )


def zeta_negative(m: int) -> Fraction:
    """zeta(-m) = -B_{m+1}/(m+1) for m >= 1."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    return -bernoulli_number(m + 1) / (m + 1)


def binom_general(a, k: int) -> Fraction:
    """Generalized binomial a(a-1)...(a-k+1)/k! for rational a."""
    if k < 0:
        return Fraction(0)
    a = as_rat(a)
    num = Fraction(1)
    for i in range(k):
        num *= a - i
    return num / factorial(k)
