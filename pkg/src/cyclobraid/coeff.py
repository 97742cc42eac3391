"""Coefficient rings and truncated power series in the deformation parameter.

Four scalar rings are supported:

* ``QQ``: rationals, backed by ``gmpy2.mpq``.
* ``CycloRing(N)``: the cyclotomic field Q(zeta_N), stored as coordinates in the
  power basis reduced modulo the N-th cyclotomic polynomial.
* ``LambdaRing(N)``: rational functions in a formal weight symbol ``lam`` with
  cyclotomic coefficients, kept in lowest terms with a monic denominator.
* ``CC``: double precision complex numbers.

``HSeries`` is a truncated series ``c_0 + c_1 h + ... + c_K h^K`` over one of
these rings.  Arithmetic is exact modulo ``h^(K+1)``.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache
from fractions import Fraction
from typing import Iterable, Sequence

from gmpy2 import mpq

Rational = type(mpq(0))


def rational(x) -> mpq:
    """Coerce ints, Fractions, mpq and "p/q" strings to ``mpq``."""
    if isinstance(x, Rational):
        return x
    if isinstance(x, (int, Fraction)):
        return mpq(x)
    if isinstance(x, str):
        return mpq(Fraction(x))
    raise TypeError(f"cannot interpret {x!r} as a rational")


def rational_str(x: mpq) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# dense univariate polynomial helpers over an arbitrary field (low -> high)
# ---------------------------------------------------------------------------

def _trim(p: list) -> list:
    while p and p[-1] == 0:
        p.pop()
    return p


def _poly_divmod(a: Sequence, b: Sequence, inv) -> tuple[list, list]:
    """Quotient and remainder of a by b; ``inv`` inverts field elements."""
    r = list(a)
    _trim(r)
    db = len(b) - 1
    lead_inv = inv(b[-1])
    q = [0] * max(len(r) - db, 0)
    while len(r) - 1 >= db and r:
        shift = len(r) - 1 - db
        c = r[-1] * lead_inv
        q[shift] = c
        for i, bi in enumerate(b):
            r[i + shift] = r[i + shift] - c * bi
        r.pop()
        _trim(r)
    return q, r


def _poly_mul(a: Sequence, b: Sequence) -> list:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n: int) -> tuple[int, ...]:
    """Integer coefficients (low -> high) of the n-th cyclotomic polynomial."""
    if n < 1:
        raise ValueError("cyclotomic order must be positive")
    num = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            q, r = _poly_divmod(num, cyclotomic_polynomial(d), lambda c: Fraction(1, c))
            assert not r
            num = [int(c) for c in q]
    return tuple(num)


# ---------------------------------------------------------------------------
# cyclotomic field
# ---------------------------------------------------------------------------

class CycloField:
    """Arithmetic tables for Q(zeta_N)."""

    _cache: dict[int, "CycloField"] = {}

    def __new__(cls, N: int):
        if N in cls._cache:
            return cls._cache[N]
        self = super().__new__(cls)
        self.N = N
        self.modulus = cyclotomic_polynomial(N)
        self.phi = len(self.modulus) - 1
        # reduced coordinates of x^p for 0 <= p < max(N, 2*phi - 1)
        table = []
        cur = [mpq(1)] + [mpq(0)] * (self.phi - 1)
        for _ in range(max(N, 2 * self.phi - 1)):
            table.append(tuple(cur))
            # multiply by x and reduce
            top = cur[-1]
            cur = [mpq(0)] + cur[:-1]
            for i in range(self.phi):
                cur[i] -= top * self.modulus[i]
        self.power_table = tuple(table)
        self.zero_coords = (mpq(0),) * self.phi
        cls._cache[N] = self
        return self

    def reduce(self, coeffs: Sequence) -> tuple:
        out = list(coeffs[: self.phi]) + [mpq(0)] * max(0, self.phi - len(coeffs))
        for p in range(self.phi, len(coeffs)):
            c = coeffs[p]
            if c:
                row = self.power_table[p] if p < len(self.power_table) else self._power(p)
                for i in range(self.phi):
                    out[i] += c * row[i]
        return tuple(mpq(c) for c in out)

    def _power(self, p: int) -> tuple:
        return self.power_table[p % self.N]


class CycloScalar:
    """Element of Q(zeta_N) as coordinates in 1, zeta, ..., zeta^(phi-1)."""

    __slots__ = ("field", "coords")

    def __init__(self, N: int | CycloField, coords: Iterable = ()):
        field = N if isinstance(N, CycloField) else CycloField(N)
        self.field = field
        self.coords = field.reduce([rational(c) for c in coords])

    @classmethod
    def _raw(cls, field: CycloField, coords: tuple) -> "CycloScalar":
        obj = object.__new__(cls)
        obj.field = field
        obj.coords = coords
        return obj

    @property
    def N(self) -> int:
        return self.field.N

    @classmethod
    def zeta(cls, N: int, power: int = 1) -> "CycloScalar":
        field = CycloField(N)
        return cls._raw(field, field.power_table[power % N])

    @classmethod
    def from_rational(cls, N: int, x) -> "CycloScalar":
        field = CycloField(N)
        return cls._raw(field, (rational(x),) + field.zero_coords[1:])

    def _coerce(self, other) -> "CycloScalar":
        if isinstance(other, CycloScalar):
            if other.field is not self.field:
                raise ValueError(f"cyclotomic order mismatch: {self.N} vs {other.N}")
            return other
        if isinstance(other, (int, Rational, Fraction)):
            return CycloScalar._raw(self.field, (mpq(other),) + self.field.zero_coords[1:])
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return CycloScalar._raw(self.field, tuple(a + b for a, b in zip(self.coords, o.coords)))

    __radd__ = __add__

    def __neg__(self):
        return CycloScalar._raw(self.field, tuple(-a for a in self.coords))

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return CycloScalar._raw(self.field, tuple(a - b for a, b in zip(self.coords, o.coords)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Rational)):
            return CycloScalar._raw(self.field, tuple(a * other for a in self.coords))
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        f = self.field
        a, b = self.coords, o.coords
        if f.phi == 1:
            return CycloScalar._raw(f, (a[0] * b[0],))
        prod = [mpq(0)] * (2 * f.phi - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        prod[i + j] += x * y
        return CycloScalar._raw(f, f.reduce(prod))

    __rmul__ = __mul__

    def inverse(self) -> "CycloScalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in cyclotomic field")
        f = self.field
        if f.phi == 1:
            return CycloScalar._raw(f, (1 / self.coords[0],))
        # extended Euclid: find u with u * a = 1 mod Phi_N
        a = _trim(list(self.coords))
        m = [mpq(c) for c in f.modulus]
        r0, r1 = m, a
        s0, s1 = [], [mpq(1)]
        while len(r1) > 1:
            q, r = _poly_divmod(r0, r1, lambda c: 1 / c)
            s = _poly_sub(s0, _poly_mul(q, s1))
            r0, r1, s0, s1 = r1, r, s1, s
        # r1 is a nonzero constant
        c = 1 / r1[0]
        return CycloScalar._raw(f, f.reduce([x * c for x in s1]))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = CycloScalar.from_rational(self.N, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def is_zero(self) -> bool:
        return not any(self.coords)

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        if isinstance(other, CycloScalar):
            return self.field is other.field and self.coords == other.coords
        if isinstance(other, (int, Rational, Fraction)):
            return self.coords[0] == other and not any(self.coords[1:])
        return NotImplemented

    def __hash__(self):
        if not any(self.coords[1:]):
            return hash(self.coords[0])
        return hash((self.field.N, self.coords))

    def to_complex(self) -> complex:
        w = cmath.exp(2j * math.pi / self.N)
        return sum(float(c) * w**k for k, c in enumerate(self.coords))

    def rational_part(self):
        """The value as an ``mpq`` when it lies in Q, else None."""
        if any(self.coords[1:]):
            return None
        return self.coords[0]

    def __repr__(self):
        terms = []
        for k, c in enumerate(self.coords):
            if c:
                terms.append(rational_str(c) + ("" if k == 0 else f"*z^{k}"))
        return f"Cyclo{self.N}(" + (" + ".join(terms) or "0") + ")"


def _poly_sub(a: Sequence, b: Sequence) -> list:
    n = max(len(a), len(b))
    out = [(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)]
    return _trim(out)


# ---------------------------------------------------------------------------
# rational functions in the weight symbol
# ---------------------------------------------------------------------------

def _inv(c):
    return c.inverse() if isinstance(c, CycloScalar) else 1 / c


def _poly_gcd(a: list, b: list) -> list:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        _, r = _poly_divmod(a, b, _inv)
        a, b = b, r
    if not a:
        return a
    lead = _inv(a[-1])
    return [c * lead for c in a]


class LambdaRat:
    """Rational function num(lam)/den(lam) over Q(zeta_N), lowest terms, monic den."""

    __slots__ = ("field", "num", "den")

    def __init__(self, N: int | CycloField, num: Sequence = (), den: Sequence = (1,), _normalize=True):
        field = N if isinstance(N, CycloField) else CycloField(N)
        self.field = field
        num = [self._lift(c) for c in num]
        den = [self._lift(c) for c in den]
        _trim(num)
        _trim(den)
        if not den:
            raise ZeroDivisionError("zero denominator")
        if _normalize:
            num, den = self._normalize(num, den)
        self.num = tuple(num)
        self.den = tuple(den)

    def _lift(self, c) -> CycloScalar:
        if isinstance(c, CycloScalar):
            if c.field is not self.field:
                raise ValueError("cyclotomic order mismatch")
            return c
        return CycloScalar._raw(self.field, (rational(c),) + self.field.zero_coords[1:])

    @staticmethod
    def _normalize(num: list, den: list):
        if not num:
            one = den[-1] * _inv(den[-1])
            return [], [one]
        if len(den) > 1:
            g = _poly_gcd(num, den)
            if len(g) > 1:
                num, _ = _poly_divmod(num, g, _inv)
                den, _ = _poly_divmod(den, g, _inv)
        lead = den[-1]
        if lead != 1:
            li = _inv(lead)
            num = [c * li for c in num]
            den = [c * li for c in den]
        return num, den

    @classmethod
    def _raw(cls, field, num: tuple, den: tuple) -> "LambdaRat":
        obj = object.__new__(cls)
        obj.field = field
        obj.num = num
        obj.den = den
        return obj

    @classmethod
    def lam(cls, N: int) -> "LambdaRat":
        return cls(N, (0, 1))

    @classmethod
    def const(cls, N: int, c) -> "LambdaRat":
        return cls(N, (c,))

    @property
    def N(self) -> int:
        return self.field.N

    def is_polynomial(self) -> bool:
        return len(self.den) == 1

    def degree(self) -> int:
        return len(self.num) - 1

    def _coerce(self, other):
        if isinstance(other, LambdaRat):
            if other.field is not self.field:
                raise ValueError("cyclotomic order mismatch")
            return other
        if isinstance(other, (int, Rational, Fraction, CycloScalar)):
            c = self._lift(other)
            one = self._lift(1)
            return LambdaRat._raw(self.field, (c,) if c else (), (one,))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if len(self.den) == 1 and len(o.den) == 1:
            n = max(len(self.num), len(o.num))
            out = [
                (self.num[i] if i < len(self.num) else 0) + (o.num[i] if i < len(o.num) else 0)
                for i in range(n)
            ]
            return LambdaRat._raw(self.field, tuple(_trim(out)), self.den)
        num = _poly_add(_poly_mul(self.num, o.den), _poly_mul(o.num, self.den))
        den = _poly_mul(self.den, o.den)
        return LambdaRat(self.field, num, den)

    __radd__ = __add__

    def __neg__(self):
        return LambdaRat._raw(self.field, tuple(-c for c in self.num), self.den)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Rational)):
            if not other:
                return LambdaRat._raw(self.field, (), (self._lift(1),))
            return LambdaRat._raw(self.field, tuple(c * other for c in self.num), self.den)
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if len(self.den) == 1 and len(o.den) == 1:
            return LambdaRat._raw(self.field, tuple(_trim(_poly_mul(self.num, o.num))), self.den)
        return LambdaRat(self.field, _poly_mul(self.num, o.num), _poly_mul(self.den, o.den))

    __rmul__ = __mul__

    def inverse(self) -> "LambdaRat":
        if not self.num:
            raise ZeroDivisionError("inverse of zero rational function")
        return LambdaRat(self.field, self.den, self.num)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = self._coerce(1)
        for _ in range(n):
            out = out * self
        return out

    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self):
        return bool(self.num)

    def __eq__(self, other):
        o = self._coerce(other) if not isinstance(other, LambdaRat) else other
        if o is NotImplemented:
            return NotImplemented
        return self.field is o.field and self.num == o.num and self.den == o.den

    def __hash__(self):
        return hash((self.field.N, self.num, self.den))

    def evaluate(self, value) -> CycloScalar:
        """Substitute a rational or cyclotomic value for lam."""
        v = self._lift(value)
        den = _horner(self.den, v)
        if den.is_zero():
            raise ZeroDivisionError("pole at the evaluation point")
        return _horner(self.num, v) / den

    def shift(self, c) -> "LambdaRat":
        """Substitute lam -> lam + c."""
        c = self._lift(c)
        return LambdaRat(self.field, _taylor_shift(self.num, c), _taylor_shift(self.den, c))

    def __repr__(self):
        def fmt(p):
            return " + ".join(f"({c!r})*lam^{k}" for k, c in enumerate(p) if c) or "0"

        if self.is_polynomial():
            return f"LambdaRat[{fmt(self.num)}]"
        return f"LambdaRat[({fmt(self.num)}) / ({fmt(self.den)})]"


def _poly_add(a, b):
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def _horner(p: Sequence, v):
    acc = v * 0
    for c in reversed(p):
        acc = acc * v + c
    return acc


def _taylor_shift(p: Sequence, c) -> list:
    """Coefficients of p(x + c)."""
    out = list(p)
    n = len(out)
    for i in range(n):
        for j in range(n - 2, i - 1, -1):
            out[j] = out[j] + c * out[j + 1]
    return out


# ---------------------------------------------------------------------------
# ring descriptors
# ---------------------------------------------------------------------------

class Ring:
    """Descriptor for a coefficient ring: lifting, zero test, serialization."""

    name = "ring"
    exact = True

    def lift(self, x):
        raise NotImplementedError

    @property
    def zero(self):
        return self.lift(0)

    @property
    def one(self):
        return self.lift(1)

    def is_zero(self, x) -> bool:
        return not x

    def inv(self, x):
        return 1 / x

    def to_complex(self, x, lam=None) -> complex:
        raise NotImplementedError

    def dumps(self, x):
        raise NotImplementedError

    def __repr__(self):
        return self.name


class RationalRing(Ring):
    name = "QQ"

    def lift(self, x):
        return rational(x)

    def to_complex(self, x, lam=None) -> complex:
        return complex(float(x))

    def dumps(self, x):
        return rational_str(x)

    def __eq__(self, other):
        return isinstance(other, RationalRing)

    def __hash__(self):
        return hash("QQ")


class CycloRing(Ring):
    def __init__(self, N: int):
        self.field = CycloField(N)
        self.N = N
        self.name = f"QQ(zeta_{N})"

    def lift(self, x):
        if isinstance(x, CycloScalar):
            if x.field is not self.field:
                raise ValueError("cyclotomic order mismatch")
            return x
        return CycloScalar._raw(self.field, (rational(x),) + self.field.zero_coords[1:])

    def inv(self, x):
        return x.inverse()

    def zeta(self, power: int = 1) -> CycloScalar:
        return CycloScalar.zeta(self.N, power)

    def to_complex(self, x, lam=None) -> complex:
        return x.to_complex()

    def dumps(self, x):
        return [rational_str(c) for c in x.coords]

    def __eq__(self, other):
        return isinstance(other, CycloRing) and other.N == self.N

    def __hash__(self):
        return hash(("cyclo", self.N))


class LambdaRing(Ring):
    def __init__(self, N: int):
        self.field = CycloField(N)
        self.N = N
        self.name = f"QQ(zeta_{N})(lam)"
        self._one = CycloScalar._raw(self.field, (mpq(1),) + self.field.zero_coords[1:])

    def lift(self, x):
        if isinstance(x, LambdaRat):
            if x.field is not self.field:
                raise ValueError("cyclotomic order mismatch")
            return x
        if isinstance(x, CycloScalar):
            if x.field is not self.field:
                raise ValueError("cyclotomic order mismatch")
            return LambdaRat._raw(self.field, (x,) if x else (), (self._one,))
        c = CycloScalar._raw(self.field, (rational(x),) + self.field.zero_coords[1:])
        return LambdaRat._raw(self.field, (c,) if c else (), (self._one,))

    def lam(self) -> LambdaRat:
        return LambdaRat._raw(self.field, (CycloScalar._raw(self.field, self.field.zero_coords), self._one), (self._one,))

    def zeta(self, power: int = 1) -> LambdaRat:
        return self.lift(CycloScalar.zeta(self.N, power))

    def inv(self, x):
        return x.inverse()

    def to_complex(self, x, lam=None) -> complex:
        if lam is None:
            raise ValueError("numeric lam required to cast a LambdaRat")
        return x.evaluate(lam).to_complex()

    def dumps(self, x):
        return {
            "num": [[rational_str(c) for c in a.coords] for a in x.num],
            "den": [[rational_str(c) for c in a.coords] for a in x.den],
        }

    def __eq__(self, other):
        return isinstance(other, LambdaRing) and other.N == self.N

    def __hash__(self):
        return hash(("lambda", self.N))


class ComplexRing(Ring):
    name = "CC"
    exact = False

    def lift(self, x):
        if isinstance(x, Rational):
            return complex(float(x))
        if isinstance(x, CycloScalar):
            return x.to_complex()
        return complex(x)

    def to_complex(self, x, lam=None) -> complex:
        return complex(x)

    def dumps(self, x):
        return [x.real, x.imag]

    def __eq__(self, other):
        return isinstance(other, ComplexRing)

    def __hash__(self):
        return hash("CC")


QQ = RationalRing()
CC = ComplexRing()


# ---------------------------------------------------------------------------
# truncated series
# ---------------------------------------------------------------------------

def conv(a: Sequence, b: Sequence, K: int, zero=0) -> tuple:
    """Cauchy product of coefficient sequences truncated at h^K."""
    out = []
    la, lb = len(a), len(b)
    for k in range(K + 1):
        acc = zero
        for i in range(max(0, k - lb + 1), min(k, la - 1) + 1):
            x = a[i]
            if x:
                y = b[k - i]
                if y:
                    acc = acc + x * y
        out.append(acc)
    return tuple(out)


class HSeries:
    """Truncated power series sum_k coeffs[k] h^k, exact modulo h^(order+1)."""

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: Ring, coeffs: Sequence, order: int | None = None):
        self.ring = ring
        cs = [ring.lift(c) for c in coeffs]
        if order is not None:
            cs = cs[: order + 1] + [ring.zero] * (order + 1 - len(cs))
        self.coeffs = tuple(cs)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def constant(cls, ring: Ring, c, order: int) -> "HSeries":
        return cls(ring, [c], order)

    @classmethod
    def hbar(cls, ring: Ring, order: int) -> "HSeries":
        return cls(ring, [0, 1], order)

    def _check(self, other: "HSeries"):
        if not isinstance(other, HSeries):
            raise TypeError("expected an HSeries")
        if other.ring != self.ring:
            raise TypeError(f"ring mismatch: {self.ring} vs {other.ring}")
        if other.order != self.order:
            raise ValueError(f"truncation mismatch: {self.order} vs {other.order}")

    def __add__(self, other):
        self._check(other)
        return HSeries(self.ring, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        self._check(other)
        return HSeries(self.ring, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self):
        return HSeries(self.ring, [-a for a in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, HSeries):
            return series_mul(self, other)
        return HSeries(self.ring, [a * self.ring.lift(other) for a in self.coeffs])

    def __rmul__(self, other):
        return HSeries(self.ring, [self.ring.lift(other) * a for a in self.coeffs])

    def __eq__(self, other):
        if not isinstance(other, HSeries):
            return NotImplemented
        return self.ring == other.ring and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.ring, self.coeffs))

    def is_zero(self) -> bool:
        return all(self.ring.is_zero(c) for c in self.coeffs)

    def valuation(self) -> int:
        """Index of the first nonzero coefficient, or order + 1 when zero."""
        for k, c in enumerate(self.coeffs):
            if not self.ring.is_zero(c):
                return k
        return self.order + 1

    def map(self, fn, ring: Ring | None = None) -> "HSeries":
        return HSeries(ring or self.ring, [fn(c) for c in self.coeffs])

    def to_complex(self, lam=None) -> "HSeries":
        return HSeries(CC, [self.ring.to_complex(c, lam) for c in self.coeffs])

    def to_json(self):
        return {"ring": self.ring.name, "order": self.order, "coeffs": [self.ring.dumps(c) for c in self.coeffs]}

    def __repr__(self):
        return f"HSeries({self.ring}, {list(self.coeffs)!r})"


def series_mul(a: HSeries, b: HSeries) -> HSeries:
    a._check(b)
    return HSeries(a.ring, conv(a.coeffs, b.coeffs, a.order, a.ring.zero))


def series_inv_coeffs(a: Sequence, K: int, inv, zero=0) -> tuple:
    c0 = a[0]
    if not c0:
        raise ZeroDivisionError("constant term is not invertible")
    i0 = inv(c0)
    out = [i0]
    for k in range(1, K + 1):
        acc = zero
        for j in range(1, min(k, len(a) - 1) + 1):
            if a[j]:
                acc = acc + a[j] * out[k - j]
        out.append(-(acc * i0))
    return tuple(out)


def series_inv(a: HSeries) -> HSeries:
    try:
        coeffs = series_inv_coeffs(a.coeffs, a.order, a.ring.inv, a.ring.zero)
    except ZeroDivisionError as exc:
        raise ZeroDivisionError("series_inv: constant term is not invertible") from exc
    return HSeries(a.ring, coeffs)


def series_exp_nilpotent(a: HSeries) -> HSeries:
    """exp(a) for a series with vanishing constant term."""
    if not a.ring.is_zero(a.coeffs[0]):
        raise ValueError("series_exp_nilpotent: constant term must vanish")
    K = a.order
    zero = a.ring.zero
    # E' = a' E, solved coefficientwise: k E_k = sum_j j a_j E_{k-j}
    out = [a.ring.one]
    for k in range(1, K + 1):
        acc = zero
        for j in range(1, k + 1):
            if a.coeffs[j]:
                acc = acc + j * a.coeffs[j] * out[k - j]
        out.append(acc * mpq(1, k) if a.ring.exact else acc / k)
    return HSeries(a.ring, out)


def exp_hbar_coeffs(x, K: int, one=1) -> tuple:
    """Coefficients of exp(h * x) for a scalar x: x^k / k!."""
    out = [one]
    for k in range(1, K + 1):
        out.append(out[-1] * x * mpq(1, k))
    return tuple(out)


def q_number_coeffs(x: int, K: int) -> tuple:
    """Coefficients of [x]_q = (q^x - q^-x)/(q - 1/q) with q = e^h, as mpq."""
    # sinh(x h) / sinh(h), computed as a ratio of even series
    num = [mpq(0)] * (K + 2)
    den = [mpq(0)] * (K + 2)
    fact = 1
    for n in range(K + 2):
        if n > 0:
            fact *= n
        if n % 2 == 1:
            num[n] = mpq(x**n, fact)
            den[n] = mpq(1, fact)
    # both start at h^1; divide out one power of h
    num = num[1:]
    den = den[1:]
    return conv(num, series_inv_coeffs(den, K, lambda c: 1 / c, mpq(0)), K, mpq(0))


def q_power_coeffs(n, K: int) -> tuple:
    """Coefficients of q^n = e^(n h) for rational n."""
    return exp_hbar_coeffs(mpq(n), K, mpq(1))
