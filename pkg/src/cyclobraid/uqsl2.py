"""Exact rank-one U_q(sl2) kernel.

Elements are normal-ordered sums of f^a k^b e^c with coefficients in Q(q).
Cartan-valued results (the Shapovalov pairing and its inverse) are rational
functions of q and k.  Tensor legs of the twist use separate variables k1, k2
for the Cartan parts of legs 1 and 2, Y for k1^2 and nu for the shift.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from sympy import QQ
from sympy.polys.fields import field

FIELD, q, k, k1, k2, Y, nu = field("q,k,k1,k2,Y,nu", QQ)
_GENS = (q, k, k1, k2, Y, nu)
ONE = FIELD.one
ZERO = FIELD.zero


@dataclass(frozen=True)
class CartanData:
    rank: int = 1
    cartan: tuple = ((2,),)
    symmetrizers: tuple = (1,)

    def __post_init__(self):
        r = self.rank
        for i in range(r):
            for j in range(r):
                if self.symmetrizers[i] * self.cartan[i][j] != self.symmetrizers[j] * self.cartan[j][i]:
                    raise ValueError("Cartan matrix is not symmetrizable by the given d_i")


SL2 = CartanData()


# ---------------------------------------------------------------------------
# rational-function helpers
# ---------------------------------------------------------------------------

def substitute(x, images: dict):
    """Substitute generators by field elements: images maps generator -> value."""
    vals = [images.get(g, g) for g in _GENS]

    def ev(poly):
        acc = ZERO
        for monom, coeff in poly.terms():
            t = FIELD(coeff)
            for v, e in zip(vals, monom):
                if e:
                    t = t * v**e
            acc = acc + t
        return acc

    return ev(x.numer) / ev(x.denom)


def qint(n: int):
    """Symmetric q-integer [n] = (q^n - q^-n)/(q - q^-1)."""
    return (q**n - q ** (-n)) / (q - 1 / q)


def qfact(n: int):
    out = ONE
    for i in range(1, n + 1):
        out = out * qint(i)
    return out


def qbracket(x: int, kvar=k):
    """[k; x] = (k q^x - k^-1 q^-x)/(q - q^-1)."""
    return (kvar * q**x - q ** (-x) / kvar) / (q - 1 / q)


def rbar_coeff(m: int):
    """Scalar c_m with Rbar_m = c_m e^m (x) f^m."""
    return q ** (m * (m - 1) // 2) * (q - 1 / q) ** m / qfact(m)


def degrees(x, gen) -> tuple[set, set]:
    """Exponent sets of ``gen`` in numerator and denominator."""
    i = _GENS.index(gen)
    return {m[i] for m in x.numer.monoms()}, {m[i] for m in x.denom.monoms()}


def is_unit_in(x, gen) -> bool:
    """True when x = r * gen^b with r free of ``gen``."""
    n, d = degrees(x, gen)
    if len(n) != 1 or len(d) != 1:
        return False
    i = _GENS.index(gen)
    # monomial in gen means each side factors as (poly without gen) * gen^e
    return all(m[i] == next(iter(n)) for m in x.numer.monoms()) and all(
        m[i] == next(iter(d)) for m in x.denom.monoms()
    )


# ---------------------------------------------------------------------------
# PBW elements
# ---------------------------------------------------------------------------

class PBWElement:
    """Sum of coeff * f^a k^b e^c, keyed by (a, b, c)."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {key: c for key, c in (terms or {}).items() if c}

    @classmethod
    def monomial(cls, a: int = 0, b: int = 0, c: int = 0, coeff=ONE) -> "PBWElement":
        return cls({(a, b, c): FIELD(coeff)})

    @classmethod
    def scalar(cls, coeff) -> "PBWElement":
        return cls.monomial(0, 0, 0, coeff)

    def __add__(self, other: "PBWElement") -> "PBWElement":
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, ZERO) + c
        return PBWElement(out)

    def __neg__(self) -> "PBWElement":
        return PBWElement({key: -c for key, c in self.terms.items()})

    def __sub__(self, other: "PBWElement") -> "PBWElement":
        return self + (-other)

    def scale(self, s) -> "PBWElement":
        return PBWElement({key: c * s for key, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, PBWElement):
            return pbw_mul(self, other)
        return self.scale(FIELD(other))

    def __pow__(self, n: int) -> "PBWElement":
        out = PBWElement.scalar(ONE)
        for _ in range(n):
            out = pbw_mul(out, self)
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, PBWElement) and not (self - other).terms

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return canonical_text(self)


E_GEN = PBWElement.monomial(0, 0, 1)
F_GEN = PBWElement.monomial(1, 0, 0)
K_GEN = PBWElement.monomial(0, 1, 0)
KINV_GEN = PBWElement.monomial(0, -1, 0)


def canonical_text(x: PBWElement) -> str:
    if not x.terms:
        return "0"
    parts = []
    for (a, b, c) in sorted(x.terms):
        parts.append(f"({x.terms[(a, b, c)].as_expr()})*f^{a}*k^{b}*e^{c}")
    return " + ".join(parts)


def _add_into(acc: dict, key, c):
    v = acc.get(key, ZERO) + c
    if v:
        acc[key] = v
    else:
        acc.pop(key, None)


def _left_e(y: dict) -> dict:
    """e * y using e f^a = f^a e + [a] f^(a-1) [k; 1-a] and e k^b = q^(-2b) k^b e."""
    out: dict = {}
    for (a, b, c), coeff in y.items():
        _add_into(out, (a, b, c + 1), coeff * q ** (-2 * b))
        if a:
            s = coeff * qint(a) / (q - 1 / q)
            _add_into(out, (a - 1, b + 1, c), s * q ** (1 - a))
            _add_into(out, (a - 1, b - 1, c), -s * q ** (a - 1))
    return out


def _left_k(y: dict, beta: int) -> dict:
    """k^beta * y using k^beta f^a = q^(-2 a beta) f^a k^beta."""
    out: dict = {}
    for (a, b, c), coeff in y.items():
        _add_into(out, (a, b + beta, c), coeff * q ** (-2 * a * beta))
    return out


def pbw_mul(x: PBWElement, y: PBWElement) -> PBWElement:
    """Normal-ordered product."""
    out: dict = {}
    cache: dict = {0: y.terms}
    for (a, b, c), coeff in x.terms.items():
        if c not in cache:
            prev = cache[max(j for j in cache if j < c)]
            for _ in range(max(j for j in cache if j < c), c):
                prev = _left_e(prev)
            cache[c] = prev
        t = _left_k(cache[c], b) if b else cache[c]
        for (a2, b2, c2), v in t.items():
            _add_into(out, (a2 + a, b2, c2), coeff * v)
    return PBWElement(out)


def antipode(x: PBWElement) -> PBWElement:
    """Antihomomorphism with S(e) = -e k^-1, S(f) = -k f, S(k) = k^-1."""
    Se = -pbw_mul(E_GEN, KINV_GEN)
    Sf = -pbw_mul(K_GEN, F_GEN)
    out = PBWElement()
    for (a, b, c), coeff in x.terms.items():
        t = Se**c
        t = pbw_mul(t, PBWElement.monomial(0, -b, 0))
        t = pbw_mul(t, Sf**a)
        out = out + t.scale(coeff)
    return out


def shapovalov_H(x: PBWElement):
    """Projection onto the Cartan part, as a rational function of q, k."""
    out = ZERO
    for (a, b, c), coeff in x.terms.items():
        if a == 0 and c == 0:
            out = out + coeff * k**b
    return out


def cartan_to_pbw(x) -> PBWElement:
    """A Laurent polynomial in k (with Q(q) coefficients) as a PBW element."""
    den_k, _ = degrees(FIELD(x.denom), k)
    if len(den_k) != 1:
        raise ValueError("not a Laurent polynomial in k")
    shift = next(iter(den_k))
    dk = _GENS.index(k)
    den_rest = substitute(FIELD(x.denom), {k: ONE})
    terms: dict = {}
    for monom, coeff in x.numer.terms():
        rest = FIELD(coeff)
        for g, e in zip(_GENS, monom):
            if g is not k and e:
                rest = rest * g**e
        _add_into(terms, (0, monom[dk] - shift, 0), rest / den_rest)
    return PBWElement(terms)


# ---------------------------------------------------------------------------
# Shapovalov inverse and determinant
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def gram_factor(m: int):
    """g_m = H(e^m f^m)."""
    return shapovalov_H(pbw_mul(E_GEN**m, F_GEN**m))


def shapovalov_inverse(m: int):
    """K_m = (f^m, e^m, g_m^-1) in the monomial basis."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    return F_GEN**m, E_GEN**m, 1 / gram_factor(m)


def shapovalov_property_residual(m: int, xp: PBWElement, xm: PBWElement):
    """H(x+ x-) - H(x+ K1) K3 H(K2 x-) for x+ of degree m and x- of degree -m."""
    K1, K2, K3 = shapovalov_inverse(m)
    return shapovalov_H(pbw_mul(xp, xm)) - shapovalov_H(pbw_mul(xp, K1)) * K3 * shapovalov_H(pbw_mul(K2, xm))


def dck_determinant(m: int):
    """prod_(i=1..m) (1 - k^2 q^(2-2i)): the factorization matching g_m."""
    out = ONE
    for i in range(1, m + 1):
        out = out * (1 - k**2 * q ** (2 - 2 * i))
    return out


def dck_determinant_literal(m: int):
    """The rank-one specialization with (beta, rho) = 2: prod (1 - k^2 q^(-2-i))."""
    out = ONE
    for i in range(1, m + 1):
        out = out * (1 - k**2 * q ** (-2 - i))
    return out


def equal_up_to_unit(x, y) -> bool:
    """x / y is an invertible element of Q(q) times a power of k."""
    r = x / y
    return is_unit_in(r, k) and not any(degrees(r, g)[0] - {0} or degrees(r, g)[1] - {0} for g in (k1, k2, Y, nu))


# ---------------------------------------------------------------------------
# K_m recursion on triple tensors
# ---------------------------------------------------------------------------

class Tensor3:
    """Sum of (leg1 monomial) (x) (leg2 monomial) (x) phi(k), legs 1-2 PBW."""

    def __init__(self, terms: dict | None = None):
        self.terms = {key: c for key, c in (terms or {}).items() if c}

    @classmethod
    def pure(cls, x1: PBWElement, x2: PBWElement, x3) -> "Tensor3":
        out: dict = {}
        for key1, c1 in x1.terms.items():
            for key2, c2 in x2.terms.items():
                _add_into(out, (key1, key2), c1 * c2 * x3)
        return cls(out)

    def __add__(self, other: "Tensor3") -> "Tensor3":
        out = dict(self.terms)
        for key, c in other.terms.items():
            _add_into(out, key, c)
        return Tensor3(out)

    def __sub__(self, other: "Tensor3") -> "Tensor3":
        return self + Tensor3({key: -c for key, c in other.terms.items()})

    def __mul__(self, other: "Tensor3") -> "Tensor3":
        out: dict = {}
        for (a1, a2), ca in self.terms.items():
            for (b1, b2), cb in other.terms.items():
                p1 = pbw_mul(PBWElement({a1: ONE}), PBWElement({b1: ONE}))
                p2 = pbw_mul(PBWElement({a2: ONE}), PBWElement({b2: ONE}))
                for key1, c1 in p1.terms.items():
                    for key2, c2 in p2.terms.items():
                        _add_into(out, (key1, key2), ca * cb * c1 * c2)
        return Tensor3(out)

    def is_zero(self) -> bool:
        return not self.terms


def _s2(x: PBWElement) -> PBWElement:
    return antipode(antipode(x))


def K_tensor(m: int) -> Tensor3:
    K1, K2, K3 = shapovalov_inverse(m)
    return Tensor3.pure(K1, K2, K3)


def K_recursion_rhs(m: int) -> Tensor3:
    one = PBWElement.scalar(ONE)
    out = Tensor3()
    for mp in range(m + 1):
        mpp = m - mp
        K1, K2, K3 = shapovalov_inverse(mpp)
        left = Tensor3.pure(F_GEN**mp, one, rbar_coeff(mp))
        middle = Tensor3.pure(_s2(K1), K2, K3)
        right = Tensor3.pure(one, E_GEN**mp, ONE)
        cartan = k ** (-2 * mpp) * q ** (2 * mpp * mpp) * k ** (-mp) * q ** (2 * mp * mpp)
        out = out + left * middle * right * Tensor3.pure(one, one, cartan)
    return out


def verify_K_recursion(m_max: int) -> list[dict]:
    """Residual of the K_m recursion for m = 0..m_max; 'zero' is exact."""
    if m_max > 4:
        raise ValueError("m_max must be at most 4")
    report = []
    for m in range(m_max + 1):
        res = K_tensor(m) - K_recursion_rhs(m)
        report.append({"m": m, "zero": res.is_zero(), "terms": len(res.terms)})
    return report


# ---------------------------------------------------------------------------
# twist term
# ---------------------------------------------------------------------------

@dataclass
class TwistTerm:
    """Psi_m = coeff(q, Y, k2) * (1 (x) e^m (x) f^m) with Y = k1^2."""

    m: int
    coeff: object
    shift: object = None

    def denominator_at_classical_point(self):
        """Denominator at q = k2 = Y = 1; nonzero means no h-adic pole."""
        images = {q: ONE, k2: ONE, Y: ONE}
        if self.shift is not None and self.shift != "nu":
            images[nu] = FIELD(self.shift)
        return substitute(FIELD(self.coeff.denom), images)

    def to_text(self) -> str:
        return f"({self.coeff.as_expr()}) * 1 (x) e^{self.m} (x) f^{self.m}"


def twist_term(m: int, shift=None) -> TwistTerm:
    """Psi_(q,m) from K_m; ``shift`` is None, a rational nu != 1, or "nu" (formal)."""
    if shift is not None and shift != "nu" and FIELD(shift) == ONE:
        raise ValueError("the shift must differ from 1")
    phi = 1 / gram_factor(m)
    # J_m = S(K3^(1)) (x) S(e^m) S(K3^(2)) (x) f^m, with K3 group-like in k
    Se = antipode(E_GEN**m)
    coeff = ZERO
    for (a, b, c), s in Se.terms.items():
        if a != 0 or c != m:
            raise AssertionError("S(e^m) is not of the form k^b e^m")
        # e^m chi(k2) = chi(q^(-2m) k2) e^m
        chi = substitute(phi, {k: 1 / (k1 * k2 * q ** (-2 * m))})
        coeff = coeff + s * k2**b * chi
    coeff = coeff * k1 ** (-m)  # Ad(q^(-t_h^(12)/2)) on 1 (x) e^m
    coeff = substitute(coeff, {k1: q * k1})  # sh_rho*
    coeff = _even_in_k1(coeff)
    if shift is not None:
        coeff = substitute(coeff, {Y: (nu if shift == "nu" else FIELD(shift)) * Y})
    return TwistTerm(m, coeff, shift)


def _even_in_k1(x):
    """Rewrite a function of k1^2 in terms of Y = k1^2."""
    i = _GENS.index(k1)

    def conv_poly(p):
        acc = ZERO
        for monom, coeff in p.terms():
            if monom[i] % 2:
                raise ValueError("expression is not a function of k1^2")
            t = FIELD(coeff) * Y ** (monom[i] // 2)
            for g, e in zip(_GENS, monom):
                if g is not k1 and e:
                    t = t * g**e
            acc = acc + t
        return acc

    return conv_poly(x.numer) / conv_poly(x.denom)


# ---------------------------------------------------------------------------
# evaluation on W (x) V(d) (x) V(d)
# ---------------------------------------------------------------------------

def _series_of_poly(poly, ring, order: int, lam, w: int, nu_val):
    """Coefficients of poly at q = e^h, Y = nu e^(2 h lam), k2 = e^(h w)."""
    from .modrep import exp_scalar

    iq, iY, ik2, inu = (_GENS.index(g) for g in (q, Y, k2, nu))
    acc = [ring.zero] * (order + 1)
    for monom, coeff in poly.terms():
        if any(e for j, e in enumerate(monom) if j not in (iq, iY, ik2, inu)):
            raise ValueError("unexpected generator in twist coefficient")
        a, b, c, n = monom[iq], monom[iY], monom[ik2], monom[inu]
        x = ring.lift(a + c * w) + lam * (2 * b)
        scal = ring.lift(_to_mpq(coeff)) * nu_val**n
        for j, t in enumerate(exp_scalar(ring, x, order)):
            acc[j] = acc[j] + scal * t
    return acc


def _to_mpq(c):
    from gmpy2 import mpq

    return mpq(int(c.numerator), int(c.denominator))


def twist_block_series(term: TwistTerm, ring, order: int, lam, w: int, nu_val) -> tuple:
    """h-expansion of the twist coefficient for leg-2 output weight w."""
    from .coeff import conv, series_inv_coeffs

    if term.shift is not None and term.shift != "nu":
        raise ValueError("evaluate the formal-shift term; numeric shifts are for symbolic checks")
    den_poly = term.coeff.denom
    num_poly = term.coeff.numer
    extra = 0
    while True:
        den = _series_of_poly(den_poly, ring, order + extra, lam, w, nu_val)
        v = next((i for i, x in enumerate(den) if x), None)
        if v is not None and v <= extra:
            break
        extra += 1
        if extra > 4 * order + 8:
            raise ArithmeticError("denominator vanishes to high order")
    num = _series_of_poly(num_poly, ring, order + v, lam, w, nu_val)
    if any(num[:v]):
        raise ArithmeticError("numerator valuation below denominator valuation")
    n, d = num[v:], den[v : v + order + 1]
    return conv(n, series_inv_coeffs(d, order, ring.inv, ring.zero), order, ring.zero)


def evaluate_twist_block(m: int, d: int, N: int, K: int, nu_power: int = 1):
    """Twist term m on W (x) V(d) (x) V(d) with nu = zeta_N^nu_power, formal lam."""
    from .coeff import LambdaRing, conv
    from .modrep import SeriesMatrix, irrep, zeta_scalar

    ring = LambdaRing(N)
    lam = ring.lam()
    V = irrep(d, ring, K)
    dims = (1, d + 1, d + 1)
    if m == 0:
        return SeriesMatrix.identity(dims, ring, K)
    term = twist_term(m, "nu")
    Em = V.E**m
    Fm = V.F**m
    nu_val = zeta_scalar(ring, N, nu_power)
    rows: dict = {}
    for a in range(m, d + 1):
        ea = Em.rows.get(a - m, {}).get(a)
        if ea is None:
            continue
        w_out = V.weights[a - m]
        coeff = twist_block_series(term, ring, K, lam, w_out, nu_val)
        for b in range(0, d + 1 - m):
            fb = Fm.rows.get(b + m, {}).get(b)
            if fb is None:
                continue
            val = conv(conv(coeff, ea, K, ring.zero), fb, K, ring.zero)
            if any(val):
                rows.setdefault((a - m) * (d + 1) + (b + m), {})[a * (d + 1) + b] = val
    return SeriesMatrix(dims, ring, K, rows)
