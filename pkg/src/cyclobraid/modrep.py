"""Weight modules, series matrices and the R, K, E operators acting on them.

A ``SeriesMatrix`` is a square matrix whose entries are truncated series in h,
acting on a tensor product of legs.  Leg 0 is conventionally the weight module
W of the Cartan subalgebra, legs 1..n carry sl2 modules.  Storage is sparse:
``rows[i][j]`` is the coefficient tuple (c_0, ..., c_K) of entry (i, j).
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache
from itertools import product
from typing import Sequence

from gmpy2 import mpq

from .coeff import (
    CC,
    ComplexRing,
    CycloRing,
    CycloScalar,
    HSeries,
    LambdaRing,
    RationalRing,
    Ring,
    conv,
    exp_hbar_coeffs,
    q_number_coeffs,
    series_inv_coeffs,
)


def zeta_scalar(ring: Ring, N: int, power: int):
    """zeta_N^power lifted to ``ring`` (zeta_N = exp(2 pi i / N) in CC)."""
    power %= N
    if isinstance(ring, (CycloRing, LambdaRing)):
        if ring.N != N:
            raise ValueError(f"ring has cyclotomic order {ring.N}, expected {N}")
        return ring.lift(CycloScalar.zeta(N, power))
    if isinstance(ring, ComplexRing):
        return cmath.exp(2j * math.pi * power / N)
    if power == 0:
        return ring.one
    if 2 * power == N:
        return -ring.one
    raise ValueError(f"zeta_{N}^{power} is not rational")


# ---------------------------------------------------------------------------
# series matrices
# ---------------------------------------------------------------------------

def _add_coeffs(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def _is_zero_coeffs(c: tuple) -> bool:
    for x in c:
        if x:
            return False
    return True


class SeriesMatrix:
    """Square matrix over ``ring[[h]]/(h^(order+1))`` on a tensor product of legs."""

    __slots__ = ("dims", "ring", "order", "rows", "size")

    def __init__(self, dims: Sequence[int], ring: Ring, order: int, rows: dict | None = None):
        self.dims = tuple(dims)
        self.ring = ring
        self.order = order
        self.size = math.prod(self.dims)
        self.rows = rows if rows is not None else {}

    # construction -----------------------------------------------------------

    @classmethod
    def identity(cls, dims, ring: Ring, order: int) -> "SeriesMatrix":
        n = math.prod(dims)
        one = (ring.one,) + (ring.zero,) * order
        return cls(dims, ring, order, {i: {i: one} for i in range(n)})

    @classmethod
    def zero(cls, dims, ring: Ring, order: int) -> "SeriesMatrix":
        return cls(dims, ring, order, {})

    @classmethod
    def diagonal(cls, dims, ring: Ring, order: int, entries: Sequence[Sequence]) -> "SeriesMatrix":
        """Diagonal matrix from per-basis-vector coefficient sequences."""
        rows = {}
        for i, c in enumerate(entries):
            c = _pad(tuple(ring.lift(x) for x in c), order, ring.zero)
            if not _is_zero_coeffs(c):
                rows[i] = {i: c}
        return cls(dims, ring, order, rows)

    @classmethod
    def from_constant(cls, dims, ring: Ring, order: int, matrix: dict) -> "SeriesMatrix":
        """Constant (h-independent) matrix from {(i, j): scalar}."""
        rows: dict = {}
        pad = (ring.zero,) * order
        for (i, j), v in matrix.items():
            v = ring.lift(v)
            if v:
                rows.setdefault(i, {})[j] = (v,) + pad
        return cls(dims, ring, order, rows)

    @classmethod
    def from_dense(cls, dims, ring: Ring, coeff_mats: Sequence) -> "SeriesMatrix":
        """From a list of dense matrices, one per power of h."""
        order = len(coeff_mats) - 1
        n = math.prod(dims)
        rows: dict = {}
        for i in range(n):
            for j in range(n):
                c = tuple(ring.lift(m[i][j]) for m in coeff_mats)
                if not _is_zero_coeffs(c):
                    rows.setdefault(i, {})[j] = c
        return cls(dims, ring, order, rows)

    def _new(self, rows) -> "SeriesMatrix":
        return SeriesMatrix(self.dims, self.ring, self.order, rows)

    # access -------------------------------------------------------------------

    def entry(self, i: int, j: int) -> HSeries:
        c = self.rows.get(i, {}).get(j)
        if c is None:
            c = (self.ring.zero,) * (self.order + 1)
        return HSeries(self.ring, c)

    def coeff_dense(self, k: int) -> list[list]:
        z = self.ring.zero
        out = [[z] * self.size for _ in range(self.size)]
        for i, row in self.rows.items():
            for j, c in row.items():
                out[i][j] = c[k]
        return out

    def coefficient(self, k: int) -> "SeriesMatrix":
        """The h^k coefficient as a constant matrix (same order)."""
        pad = (self.ring.zero,) * self.order
        rows = {}
        for i, row in self.rows.items():
            r = {j: (c[k],) + pad for j, c in row.items() if c[k]}
            if r:
                rows[i] = r
        return self._new(rows)

    def nnz(self) -> int:
        return sum(len(r) for r in self.rows.values())

    # arithmetic ---------------------------------------------------------------

    def _check(self, other: "SeriesMatrix"):
        if not isinstance(other, SeriesMatrix):
            raise TypeError("expected a SeriesMatrix")
        if other.ring != self.ring:
            raise TypeError(f"ring mismatch: {self.ring} vs {other.ring}")
        if other.size != self.size:
            raise ValueError(f"size mismatch: {self.dims} vs {other.dims}")
        if other.order != self.order:
            raise ValueError(f"truncation mismatch: {self.order} vs {other.order}")

    def __add__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        self._check(other)
        rows = {i: dict(r) for i, r in self.rows.items()}
        for i, row in other.rows.items():
            target = rows.setdefault(i, {})
            for j, c in row.items():
                if j in target:
                    s = _add_coeffs(target[j], c)
                    if _is_zero_coeffs(s):
                        del target[j]
                    else:
                        target[j] = s
                else:
                    target[j] = c
            if not target:
                del rows[i]
        return self._new(rows)

    def __neg__(self) -> "SeriesMatrix":
        return self._new({i: {j: tuple(-x for x in c) for j, c in r.items()} for i, r in self.rows.items()})

    def __sub__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, SeriesMatrix):
            return self.matmul(other)
        if isinstance(other, HSeries):
            return self.scale_series(other.coeffs)
        return self.scale(other)

    def __rmul__(self, other):
        if isinstance(other, HSeries):
            return self.scale_series(other.coeffs)
        return self.scale(other)

    def __matmul__(self, other):
        return self.matmul(other)

    def scale(self, c) -> "SeriesMatrix":
        c = self.ring.lift(c)
        if not c:
            return self._new({})
        return self._new({i: {j: tuple(x * c for x in v) for j, v in r.items()} for i, r in self.rows.items()})

    def scale_series(self, s: Sequence) -> "SeriesMatrix":
        s = _pad(tuple(self.ring.lift(x) for x in s), self.order, self.ring.zero)
        K, z = self.order, self.ring.zero
        rows = {}
        for i, r in self.rows.items():
            nr = {}
            for j, v in r.items():
                c = conv(s, v, K, z)
                if not _is_zero_coeffs(c):
                    nr[j] = c
            if nr:
                rows[i] = nr
        return self._new(rows)

    def matmul(self, other: "SeriesMatrix") -> "SeriesMatrix":
        self._check(other)
        K = self.order
        z = self.ring.zero
        orows = other.rows
        out = {}
        for i, row in self.rows.items():
            acc: dict = {}
            for k, a in row.items():
                brow = orows.get(k)
                if not brow:
                    continue
                # nonzero positions of a, computed once
                anz = [(p, x) for p, x in enumerate(a) if x]
                for j, b in brow.items():
                    cur = acc.get(j)
                    if cur is None:
                        cur = [z] * (K + 1)
                        acc[j] = cur
                    for p, x in anz:
                        for t in range(K + 1 - p):
                            y = b[t]
                            if y:
                                cur[p + t] = cur[p + t] + x * y
            nr = {}
            for j, cur in acc.items():
                for x in cur:
                    if x:
                        nr[j] = tuple(cur)
                        break
            if nr:
                out[i] = nr
        return self._new(out)

    def conj_diag(self, left: dict, right: dict) -> "SeriesMatrix":
        """D_left * self * D_right for diagonal series given as {index: coeffs}."""
        K, z = self.order, self.ring.zero
        rows = {}
        for i, r in self.rows.items():
            li = left[i]
            nr = {}
            for j, v in r.items():
                c = conv(conv(li, v, K, z), right[j], K, z)
                if not _is_zero_coeffs(c):
                    nr[j] = c
            if nr:
                rows[i] = nr
        return self._new(rows)

    def __pow__(self, n: int) -> "SeriesMatrix":
        if n < 0:
            return self.inverse() ** (-n)
        out = SeriesMatrix.identity(self.dims, self.ring, self.order)
        base = self
        while n:
            if n & 1:
                out = out.matmul(base)
            base = base.matmul(base)
            n >>= 1
        return out

    def constant_inverse(self) -> "SeriesMatrix":
        """Inverse of the h^0 part, as a constant matrix (Gauss-Jordan)."""
        ring = self.ring
        n = self.size
        a = [dict() for _ in range(n)]
        for i, row in self.rows.items():
            for j, c in row.items():
                if c[0]:
                    a[i][j] = c[0]
        inv = [{i: ring.one} for i in range(n)]
        for col in range(n):
            piv = None
            for r in range(col, n):
                if a[r].get(col):
                    piv = r
                    break
            if piv is None:
                raise ZeroDivisionError("matrix is not invertible modulo h")
            a[col], a[piv] = a[piv], a[col]
            inv[col], inv[piv] = inv[piv], inv[col]
            pv = ring.inv(a[col][col])
            a[col] = {j: x * pv for j, x in a[col].items()}
            inv[col] = {j: x * pv for j, x in inv[col].items()}
            for r in range(n):
                if r != col:
                    f = a[r].get(col)
                    if f:
                        for j, x in a[col].items():
                            v = a[r].get(j, ring.zero) - f * x
                            if v:
                                a[r][j] = v
                            else:
                                a[r].pop(j, None)
                        for j, x in inv[col].items():
                            v = inv[r].get(j, ring.zero) - f * x
                            if v:
                                inv[r][j] = v
                            else:
                                inv[r].pop(j, None)
        pad = (ring.zero,) * self.order
        rows = {i: {j: (x,) + pad for j, x in r.items()} for i, r in enumerate(inv) if r}
        return self._new(rows)

    def inverse(self) -> "SeriesMatrix":
        """Inverse modulo h^(order+1); the h^0 part must be invertible."""
        c0 = self.coefficient(0)
        if c0 == SeriesMatrix.identity(self.dims, self.ring, self.order):
            n0 = c0
            a = self
        else:
            n0 = self.constant_inverse()
            a = n0.matmul(self)
        # a = 1 + x with x = O(h); a^-1 = 1 - x + x^2 - ...
        one = SeriesMatrix.identity(self.dims, self.ring, self.order)
        x = a - one
        if not x.rows:
            return n0
        acc = one
        for _ in range(self.order):
            acc = one - x.matmul(acc)
        return acc.matmul(n0)

    # comparison ---------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, SeriesMatrix):
            return NotImplemented
        return (
            self.ring == other.ring
            and self.size == other.size
            and self.order == other.order
            and (self - other).rows == {}
        )

    __hash__ = None

    def is_zero(self) -> bool:
        return not self.rows

    def valuation(self) -> int:
        v = self.order + 1
        for r in self.rows.values():
            for c in r.values():
                for k, x in enumerate(c):
                    if x:
                        v = min(v, k)
                        break
        return v

    def residual_per_order(self) -> list[float]:
        """Largest entry magnitude per power of h (0.0 means exactly zero)."""
        out = [0.0] * (self.order + 1)
        for r in self.rows.values():
            for c in r.values():
                for k, x in enumerate(c):
                    if x:
                        out[k] = max(out[k], magnitude(self.ring, x))
        return out

    # reshaping ----------------------------------------------------------------

    def truncate(self, order: int) -> "SeriesMatrix":
        z = self.ring.zero
        rows = {}
        for i, r in self.rows.items():
            nr = {}
            for j, c in r.items():
                c = _pad(c[: order + 1], order, z)
                if not _is_zero_coeffs(c):
                    nr[j] = c
            if nr:
                rows[i] = nr
        return SeriesMatrix(self.dims, self.ring, order, rows)

    def with_dims(self, dims) -> "SeriesMatrix":
        if math.prod(dims) != self.size:
            raise ValueError("dims do not match the matrix size")
        return SeriesMatrix(dims, self.ring, self.order, self.rows)

    def map_coeffs(self, fn, ring: Ring) -> "SeriesMatrix":
        rows = {}
        for i, r in self.rows.items():
            nr = {}
            for j, c in r.items():
                c2 = tuple(fn(x) for x in c)
                if not _is_zero_coeffs(c2):
                    nr[j] = c2
            if nr:
                rows[i] = nr
        return SeriesMatrix(self.dims, ring, self.order, rows)

    def astype(self, ring: Ring) -> "SeriesMatrix":
        if ring == self.ring:
            return self
        return self.map_coeffs(ring.lift, ring)

    def to_complex(self, lam=None) -> "SeriesMatrix":
        r = self.ring
        return self.map_coeffs(lambda x: r.to_complex(x, lam), CC)

    def evaluate_lambda(self, value) -> "SeriesMatrix":
        """Substitute a value for the formal weight symbol."""
        if not isinstance(self.ring, LambdaRing):
            raise TypeError("evaluate_lambda needs a LambdaRing matrix")
        target = CycloRing(self.ring.N)
        return self.map_coeffs(lambda x: x.evaluate(value), target)

    def shift_lambda(self, c) -> "SeriesMatrix":
        if not isinstance(self.ring, LambdaRing):
            raise TypeError("shift_lambda needs a LambdaRing matrix")
        if not c:
            return self
        return self.map_coeffs(lambda x: x.shift(c), self.ring)

    def permute(self, perm: Sequence[int]) -> "SeriesMatrix":
        """Conjugate by the basis permutation i -> perm[i]: P X P^-1."""
        rows = {}
        for i, r in self.rows.items():
            rows[perm[i]] = {perm[j]: c for j, c in r.items()}
        return self._new(rows)

    def trace(self) -> HSeries:
        acc = [self.ring.zero] * (self.order + 1)
        for i, r in self.rows.items():
            c = r.get(i)
            if c is not None:
                acc = [x + y for x, y in zip(acc, c)]
        return HSeries(self.ring, acc)

    def dense_numpy(self):
        """Complex array of shape (order+1, size, size)."""
        import numpy as np

        out = np.zeros((self.order + 1, self.size, self.size), dtype=complex)
        r = self.ring
        for i, row in self.rows.items():
            for j, c in row.items():
                for k, x in enumerate(c):
                    if x:
                        out[k, i, j] = r.to_complex(x)
        return out

    @classmethod
    def from_numpy(cls, dims, arr, tol: float = 0.0) -> "SeriesMatrix":
        order = arr.shape[0] - 1
        rows: dict = {}
        n = arr.shape[1]
        for i in range(n):
            for j in range(n):
                c = tuple(complex(arr[k, i, j]) for k in range(order + 1))
                if any(abs(x) > tol for x in c):
                    rows.setdefault(i, {})[j] = c
        return cls(dims, CC, order, rows)

    def to_json(self) -> dict:
        r = self.ring
        coeffs = []
        for k in range(self.order + 1):
            dense = self.coeff_dense(k)
            coeffs.append([k, [[r.dumps(x) for x in row] for row in dense]])
        return {"dims": list(self.dims), "order": self.order, "ring": r.name, "coeffs": coeffs}

    def __repr__(self):
        return f"SeriesMatrix(dims={self.dims}, ring={self.ring}, order={self.order}, nnz={self.nnz()})"


def magnitude(ring: Ring, x) -> float:
    if isinstance(ring, ComplexRing):
        return abs(x)
    if isinstance(ring, RationalRing):
        return abs(float(x))
    if isinstance(ring, CycloRing):
        return max(abs(float(c)) for c in x.coords)
    if isinstance(ring, LambdaRing):
        vals = [abs(float(c)) for a in x.num for c in a.coords]
        return max(vals) if vals else 0.0
    return abs(complex(x))


def _pad(c: tuple, order: int, zero) -> tuple:
    if len(c) >= order + 1:
        return c[: order + 1]
    return c + (zero,) * (order + 1 - len(c))


# ---------------------------------------------------------------------------
# scalar series helpers (rational coefficients, lifted to the target ring)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def qint(n: int, K: int) -> tuple:
    """[n]_q with q = e^h."""
    return q_number_coeffs(n, K)


@lru_cache(maxsize=None)
def qfactorial(n: int, K: int) -> tuple:
    out = (mpq(1),) + (mpq(0),) * K
    for j in range(1, n + 1):
        out = conv(out, qint(j, K), K, mpq(0))
    return out


@lru_cache(maxsize=None)
def rbar_coefficient(n: int, K: int) -> tuple:
    """q^(n(n-1)/2) (q - q^-1)^n / [n]_q! as a rational series."""
    two_sinh = tuple(mpq(0) if k % 2 == 0 else 2 * mpq(1, math.factorial(k)) for k in range(K + 1))
    out = exp_hbar_coeffs(mpq(n * (n - 1), 2), K, mpq(1))
    for _ in range(n):
        out = conv(out, two_sinh, K, mpq(0))
    inv = series_inv_coeffs(qfactorial(n, K), K, lambda c: 1 / c, mpq(0))
    return conv(out, inv, K, mpq(0))


def exp_scalar(ring: Ring, x, K: int) -> tuple:
    """Coefficients of exp(h x) for x in ``ring``."""
    x = ring.lift(x)
    out = [ring.one]
    for k in range(1, K + 1):
        nxt = out[-1] * x
        out.append(nxt * mpq(1, k) if ring.exact else nxt / k)
    return tuple(out)


def lift_coeffs(ring: Ring, c: Sequence) -> tuple:
    return tuple(ring.lift(x) for x in c)


# ---------------------------------------------------------------------------
# modules
# ---------------------------------------------------------------------------

class WeightModule:
    """Finite-dimensional weight module with diagonal h and sigma.

    ``weights`` are the h-eigenvalues (ints for sl2 modules, a ring element for
    the one-dimensional Cartan module).  ``sigma_exps[i]`` is the exponent s_i
    with sigma v_i = zeta^(s_i) v_i.  ``E``/``F`` are one-leg SeriesMatrices,
    absent for Cartan modules.
    """

    def __init__(self, name: str, ring: Ring, order: int, weights, sigma_exps, E=None, F=None, quantum=True):
        self.name = name
        self.ring = ring
        self.order = order
        self.weights = tuple(weights)
        self.sigma_exps = tuple(sigma_exps)
        self.dim = len(self.weights)
        self.E = E
        self.F = F
        self.quantum = quantum

    @property
    def H(self) -> SeriesMatrix:
        return SeriesMatrix.diagonal((self.dim,), self.ring, self.order, [[w] for w in self.weights])

    def weight(self, i: int):
        return self.ring.lift(self.weights[i])

    def is_cartan(self) -> bool:
        return self.E is None

    def __repr__(self):
        return f"WeightModule({self.name}, dim={self.dim}, ring={self.ring}, order={self.order})"


@lru_cache(maxsize=None)
def irrep(d: int, ring: Ring, order: int, quantum: bool = True) -> WeightModule:
    """V(d): E v_k = [d-k+1] v_(k-1), F v_k = [k+1] v_(k+1), weight d - 2k.

    With ``quantum=False`` the q-integers are replaced by their classical values.
    """
    K = order
    E, F = {}, {}
    for k in range(d + 1):
        if k >= 1:
            c = qint(d - k + 1, K) if quantum else (mpq(d - k + 1),)
            E[(k - 1, k)] = c
        if k + 1 <= d:
            c = qint(k + 1, K) if quantum else (mpq(k + 1),)
            F[(k + 1, k)] = c
    return WeightModule(
        f"V({d})",
        ring,
        order,
        [d - 2 * k for k in range(d + 1)],
        [-k for k in range(d + 1)],
        _one_leg(d + 1, ring, K, E),
        _one_leg(d + 1, ring, K, F),
        quantum,
    )


def _one_leg(n: int, ring: Ring, K: int, entries: dict) -> SeriesMatrix:
    rows: dict = {}
    for (i, j), c in entries.items():
        rows.setdefault(i, {})[j] = _pad(lift_coeffs(ring, c), K, ring.zero)
    return SeriesMatrix((n,), ring, K, rows)


def cartan_module(weight, ring: Ring, order: int) -> WeightModule:
    """One-dimensional module W on which h acts by ``weight``."""
    return WeightModule("W", ring, order, [ring.lift(weight)], [0])


def kron(a: SeriesMatrix, b: SeriesMatrix) -> SeriesMatrix:
    if a.ring != b.ring or a.order != b.order:
        raise TypeError("kron: ring or truncation mismatch")
    K, z = a.order, a.ring.zero
    nb = b.size
    rows = {}
    for i, ra in a.rows.items():
        for k, rb in b.rows.items():
            nr = {}
            for j, ca in ra.items():
                for l, cb in rb.items():
                    c = conv(ca, cb, K, z)
                    if not _is_zero_coeffs(c):
                        nr[j * nb + l] = c
            if nr:
                rows[i * nb + k] = nr
    return SeriesMatrix(a.dims + b.dims, a.ring, K, rows)


def tensor_module(M1: WeightModule, M2: WeightModule, quantum: bool | None = None) -> WeightModule:
    """M1 (x) M2 with the coproduct action.

    Quantum: e -> e (x) k + 1 (x) e, f -> f (x) 1 + k^-1 (x) f, k = exp(h H).
    Classical: x -> x (x) 1 + 1 (x) x.
    """
    if quantum is None:
        quantum = M1.quantum and M2.quantum
    ring, K = M1.ring, M1.order
    E1 = M1.E
    I1 = SeriesMatrix.identity((M1.dim,), ring, K)
    I2 = SeriesMatrix.identity((M2.dim,), ring, K)
    if quantum:
        k2 = SeriesMatrix.diagonal((M2.dim,), ring, K, [exp_scalar(ring, w, K) for w in M2.weights])
        kinv1 = SeriesMatrix.diagonal((M1.dim,), ring, K, [exp_scalar(ring, -w, K) for w in M1.weights])
        E = kron(E1, k2) + kron(I1, M2.E)
        F = kron(M1.F, I2) + kron(kinv1, M2.F)
    else:
        E = kron(E1, I2) + kron(I1, M2.E)
        F = kron(M1.F, I2) + kron(I1, M2.F)
    n = M1.dim * M2.dim
    weights = [w1 + w2 for w1 in M1.weights for w2 in M2.weights]
    sig = [s1 + s2 for s1 in M1.sigma_exps for s2 in M2.sigma_exps]
    return WeightModule(
        f"({M1.name}*{M2.name})", ring, K, weights, sig, E.with_dims((n,)), F.with_dims((n,)), quantum
    )


def delta_action(generator: str, M1: WeightModule, M2: WeightModule, quantum: bool = True) -> SeriesMatrix:
    """Matrix of the coproduct of ``generator`` in {e, f, h, k} on M1 (x) M2."""
    T = tensor_module(M1, M2, quantum)
    if generator == "e":
        return T.E.with_dims((M1.dim, M2.dim))
    if generator == "f":
        return T.F.with_dims((M1.dim, M2.dim))
    if generator == "h":
        return T.H.with_dims((M1.dim, M2.dim))
    if generator == "k":
        return SeriesMatrix.diagonal(
            (M1.dim, M2.dim), T.ring, T.order, [exp_scalar(T.ring, w, T.order) for w in T.weights]
        )
    raise ValueError(f"unknown generator {generator!r}")


def sigma_action(V: WeightModule, N: int, ring: Ring | None = None) -> SeriesMatrix:
    """diag(zeta^(s_i)); on V(d) this is v_k -> zeta^(-k) v_k."""
    ring = ring or V.ring
    return SeriesMatrix.diagonal((V.dim,), ring, V.order, [[zeta_scalar(ring, N, s)] for s in V.sigma_exps])


# ---------------------------------------------------------------------------
# two-leg operators
# ---------------------------------------------------------------------------

def _pair_dims(V1: WeightModule, V2: WeightModule):
    return (V1.dim, V2.dim)


def cartan_t(V1: WeightModule, V2: WeightModule) -> SeriesMatrix:
    """t_h = h (x) h on V1 (x) V2."""
    ring, K = V1.ring, V1.order
    ent = [[ring.lift(a) * ring.lift(b)] for a in V1.weights for b in V2.weights]
    return SeriesMatrix.diagonal(_pair_dims(V1, V2), ring, K, ent)


def casimir_t(V1: WeightModule, V2: WeightModule, classical: bool = True) -> SeriesMatrix:
    """t = h (x) h + 2 e (x) f + 2 f (x) e, with classical e, f actions by default."""
    E1, F1, E2, F2 = V1.E, V1.F, V2.E, V2.F
    if classical:
        E1, F1, E2, F2 = (m.coefficient(0) for m in (E1, F1, E2, F2))
    t = cartan_t(V1, V2) + (kron(E1, F2) + kron(F1, E2)).scale(2)
    return t.with_dims(_pair_dims(V1, V2))


def exp_diagonal(dims, ring: Ring, K: int, values: Sequence) -> SeriesMatrix:
    return SeriesMatrix.diagonal(dims, ring, K, [exp_scalar(ring, v, K) for v in values])


def kmatrix(X: WeightModule, Y: WeightModule) -> SeriesMatrix:
    """K = exp(h t_h / 2) on X (x) Y."""
    ring, K = X.ring, X.order
    half = mpq(1, 2)
    vals = [ring.lift(a) * ring.lift(b) * half for a in X.weights for b in Y.weights]
    return exp_diagonal(_pair_dims(X, Y), ring, K, vals)


def rbar_matrix(V1: WeightModule, V2: WeightModule) -> SeriesMatrix:
    """sum_n q^(n(n-1)/2) (q-q^-1)^n / [n]! E^n (x) F^n."""
    ring, K = V1.ring, V1.order
    dims = _pair_dims(V1, V2)
    total = SeriesMatrix.identity(dims, ring, K)
    En = SeriesMatrix.identity((V1.dim,), ring, K)
    Fn = SeriesMatrix.identity((V2.dim,), ring, K)
    n = 0
    while True:
        n += 1
        En = En.matmul(V1.E)
        Fn = Fn.matmul(V2.F)
        if En.is_zero() or Fn.is_zero() or n > K:
            break
        term = kron(En, Fn).with_dims(dims).scale_series(lift_coeffs(ring, rbar_coefficient(n, K)))
        total = total + term
    return total


def rmatrix(V1: WeightModule, V2: WeightModule) -> SeriesMatrix:
    """R = exp(h t_h / 2) * Rbar, the sl2 universal R-matrix on V1 (x) V2."""
    return kmatrix(V1, V2).matmul(rbar_matrix(V1, V2))


def rmatrix_kz(V1: WeightModule, V2: WeightModule) -> SeriesMatrix:
    """exp(h t / 2) for the classical Casimir tensor."""
    t = casimir_t(V1, V2).scale(mpq(1, 2) if V1.ring.exact else 0.5)
    return exp_nilpotent_matrix(t)


def exp_nilpotent_matrix(x: SeriesMatrix) -> SeriesMatrix:
    """exp(h x) for a constant matrix x (only the h^0 part of x is used)."""
    x0 = x.coefficient(0)
    ring, K = x.ring, x.order
    power = SeriesMatrix.identity(x.dims, ring, K)
    # coefficient k of exp(h x0) is x0^k / k!
    result = {}
    zero = ring.zero
    for k in range(K + 1):
        if k > 0:
            power = power.matmul(x0)
        fact = math.factorial(k)
        for i, r in power.rows.items():
            for j, c in r.items():
                v = c[0]
                if v:
                    v = v * mpq(1, fact) if ring.exact else v / fact
                    cur = result.setdefault(i, {}).setdefault(j, [zero] * (K + 1))
                    cur[k] = cur[k] + v
    out = {i: {j: tuple(c) for j, c in r.items()} for i, r in result.items()}
    return SeriesMatrix(x.dims, ring, K, out)


def ematrix(W: WeightModule, V: WeightModule, N: int) -> SeriesMatrix:
    """E = exp(h (t_h^(0,1) + m(t_h)^(1,1) / 2)) (1 (x) sigma) on W (x) V.

    For a one-dimensional W of weight lam the diagonal entry on v is
    exp(h (lam w + w^2/2)) zeta^s with w, s the weight and sigma exponent of v.
    """
    ring, K = V.ring, V.order
    half = mpq(1, 2) if ring.exact else 0.5
    entries = []
    for a in W.weights:
        for w, s in zip(V.weights, V.sigma_exps):
            x = ring.lift(a) * ring.lift(w) + ring.lift(w) * ring.lift(w) * half
            z = zeta_scalar(ring, N, s)
            entries.append(tuple(c * z for c in exp_scalar(ring, x, K)))
    return SeriesMatrix.diagonal(_pair_dims(W, V), ring, K, entries)


# ---------------------------------------------------------------------------
# leg placement
# ---------------------------------------------------------------------------

def _strides(dims: Sequence[int]) -> list[int]:
    s = [1] * len(dims)
    for i in range(len(dims) - 2, -1, -1):
        s[i] = s[i + 1] * dims[i + 1]
    return s


def place_legs(X: SeriesMatrix, legs: Sequence[int], dims: Sequence[int]) -> SeriesMatrix:
    """X acting on the listed legs (in X's leg order), identity elsewhere."""
    legs = list(legs)
    dims = tuple(dims)
    if len(set(legs)) != len(legs):
        raise ValueError("target legs must be distinct")
    if any(l < 0 or l >= len(dims) for l in legs):
        raise ValueError(f"leg out of range for dims {dims}")
    if len(X.dims) != len(legs) or any(X.dims[i] != dims[l] for i, l in enumerate(legs)):
        raise ValueError(f"X dims {X.dims} do not fit legs {legs} of {dims}")
    strides = _strides(dims)
    xstr = _strides(X.dims)
    others = [l for l in range(len(dims)) if l not in legs]
    # offset contributed by X's local index
    local_off = []
    for a in range(X.size):
        off = 0
        for pos, l in enumerate(legs):
            off += ((a // xstr[pos]) % X.dims[pos]) * strides[l]
        local_off.append(off)
    rows = {}
    for rest in product(*(range(dims[l]) for l in others)):
        base = sum(r * strides[l] for r, l in zip(rest, others))
        for a, ra in X.rows.items():
            rows[base + local_off[a]] = {base + local_off[b]: c for b, c in ra.items()}
    return SeriesMatrix(dims, X.ring, X.order, rows)


def leg_permutation(dims: Sequence[int], perm: Sequence[int]) -> tuple[tuple, list[int]]:
    """Basis map for reordering legs: new leg p holds old leg perm[p].

    Returns the new dims and the index map old_index -> new_index.
    """
    dims = tuple(dims)
    new_dims = tuple(dims[p] for p in perm)
    old_str = _strides(dims)
    new_str = _strides(new_dims)
    mapping = []
    n = math.prod(dims)
    for i in range(n):
        digits = [(i // old_str[l]) % dims[l] for l in range(len(dims))]
        mapping.append(sum(digits[perm[p]] * new_str[p] for p in range(len(dims))))
    return new_dims, mapping


def swap_matrix(dims: Sequence[int], i: int, j: int, ring: Ring, order: int) -> SeriesMatrix:
    """Permutation operator exchanging legs i and j (equal dimensions)."""
    dims = tuple(dims)
    if dims[i] != dims[j]:
        raise ValueError("swapped legs must have equal dimension")
    perm = list(range(len(dims)))
    perm[i], perm[j] = perm[j], perm[i]
    _, mapping = leg_permutation(dims, perm)
    one = (ring.one,) + (ring.zero,) * order
    return SeriesMatrix(dims, ring, order, {mapping[a]: {a: one} for a in range(len(mapping))})


def reorder_legs(X: SeriesMatrix, perm: Sequence[int]) -> SeriesMatrix:
    """Conjugate X so that new leg p is old leg perm[p]."""
    new_dims, mapping = leg_permutation(X.dims, perm)
    return X.permute(mapping).with_dims(new_dims)
